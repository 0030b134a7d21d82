use num_complex::Complex64;

use super::sparse::SparseMatrix;
use super::FockConfig;
use crate::error::Result;
use crate::model::PhysicalParams;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Which modes a number-operator phase acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeSet {
    A,
    B,
    /// Both modes, i.e. the total number N = a†a + b†b.
    N,
}

/// Operators on spin ⊗ Fock_a ⊗ Fock_b, index `s·(Na·Nb) + n_a·Nb + n_b`,
/// spin index 0 = ↑ (σ_z = +1).
#[derive(Debug, Clone)]
pub struct OperatorSet {
    pub config: FockConfig,
    pub a: SparseMatrix,
    pub a_dag: SparseMatrix,
    pub b: SparseMatrix,
    pub b_dag: SparseMatrix,
    pub x_a: SparseMatrix,
    pub p_a: SparseMatrix,
    pub x_b: SparseMatrix,
    pub p_b: SparseMatrix,
    /// `J_y = i(a†b - a b†)`.
    pub j_y: SparseMatrix,
    pub n_a: SparseMatrix,
    pub n_b: SparseMatrix,
    pub n_total: SparseMatrix,
    pub sigma_z: SparseMatrix,
    pub identity: SparseMatrix,
}

impl OperatorSet {
    pub fn dim(&self) -> usize {
        self.config.dim()
    }

    pub fn index(&self, s: usize, i: usize, j: usize) -> usize {
        self.config.index(s, i, j)
    }

    /// Number of basis states per spin sector.
    pub fn motional_dim(&self) -> usize {
        self.config.cutoff_a * self.config.cutoff_b
    }

    pub fn basis_labels(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let (na, nb) = (self.config.cutoff_a, self.config.cutoff_b);
        (0..2).flat_map(move |s| (0..na).flat_map(move |i| (0..nb).map(move |j| (s, i, j))))
    }
}

/// Builds ladder operators with √n entries and everything derived from them.
pub fn build_operators(config: &FockConfig) -> Result<OperatorSet> {
    config.validate()?;
    let cfg = *config;
    let dim = cfg.dim();
    let (na, nb) = (cfg.cutoff_a, cfg.cutoff_b);
    let labels = || (0..2).flat_map(move |s| (0..na).flat_map(move |i| (0..nb).map(move |j| (s, i, j))));

    let a = SparseMatrix::from_triplets(
        dim,
        labels()
            .filter(|&(_, i, _)| i > 0)
            .map(|(s, i, j)| (cfg.index(s, i - 1, j), cfg.index(s, i, j), Complex64::new((i as f64).sqrt(), 0.0))),
    );
    let b = SparseMatrix::from_triplets(
        dim,
        labels()
            .filter(|&(_, _, j)| j > 0)
            .map(|(s, i, j)| (cfg.index(s, i, j - 1), cfg.index(s, i, j), Complex64::new((j as f64).sqrt(), 0.0))),
    );
    let a_dag = a.adjoint();
    let b_dag = b.adjoint();
    let x_a = a_dag.add(&a);
    let p_a = a_dag.sub(&a).scale(I);
    let x_b = b_dag.add(&b);
    let p_b = b_dag.sub(&b).scale(I);
    let j_y = a_dag.matmul(&b).sub(&a.matmul(&b_dag)).scale(I);
    let diag = |f: &dyn Fn(usize, usize, usize) -> f64| {
        SparseMatrix::diagonal(labels().map(|(s, i, j)| Complex64::new(f(s, i, j), 0.0)).collect())
    };
    let n_a = diag(&|_, i, _| i as f64);
    let n_b = diag(&|_, _, j| j as f64);
    let n_total = diag(&|_, i, j| (i + j) as f64);
    let sigma_z = diag(&|s, _, _| if s == 0 { 1.0 } else { -1.0 });
    let identity = SparseMatrix::identity(dim);
    Ok(OperatorSet {
        config: cfg,
        a,
        a_dag,
        b,
        b_dag,
        x_a,
        p_a,
        x_b,
        p_b,
        j_y,
        n_a,
        n_b,
        n_total,
        sigma_z,
        identity,
    })
}

/// `H₊ = ΩJ_y + αx_aσ_z + βp_b`.
pub fn hamiltonian_plus(params: &PhysicalParams, ops: &OperatorSet) -> SparseMatrix {
    ops.j_y
        .scale_re(params.omega_rot)
        .add(&ops.x_a.matmul(&ops.sigma_z).scale_re(params.alpha))
        .add(&ops.p_b.scale_re(params.beta))
}

/// `H₋ = -ΩJ_y - αx_aσ_z + βp_b`.
pub fn hamiltonian_minus(params: &PhysicalParams, ops: &OperatorSet) -> SparseMatrix {
    ops.j_y
        .scale_re(-params.omega_rot)
        .add(&ops.x_a.matmul(&ops.sigma_z).scale_re(-params.alpha))
        .add(&ops.p_b.scale_re(params.beta))
}

/// The diagonal phase `exp(iφ n_k)`.
pub fn mode_phase_op(ops: &OperatorSet, modes: ModeSet, phi: f64) -> SparseMatrix {
    let n = match modes {
        ModeSet::A => &ops.n_a,
        ModeSet::B => &ops.n_b,
        ModeSet::N => &ops.n_total,
    };
    let diag = (0..ops.dim()).map(|k| Complex64::from_polar(1.0, phi * n.get(k, k).re)).collect();
    SparseMatrix::diagonal(diag)
}
