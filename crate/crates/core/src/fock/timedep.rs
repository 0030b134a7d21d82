//! Lab-frame drive propagation in the interaction picture of the trap.
//!
//! Lab Hamiltonian (degenerate or not):
//! `H = ω_x n_a + ω_y n_b + ΩJ_y + 2α cos(ω_d t) x_a σ_z + 2β cos(ω_d t) p_b`.
//! The drive amplitudes are doubled so that keeping only the co-rotating
//! terms at `ω_d = ω_x = ω_y` leaves exactly H₊. States are carried as
//! `ψ_I = e^{-iH₀t} ψ`, which turns `a → a e^{iω_x t}` and `b → b e^{iω_y t}`.

use num_complex::Complex64;

use super::operators::OperatorSet;
use super::sparse::SparseMatrix;
use super::FockState;
use crate::error::{Error, Result};
use crate::model::PhysicalParams;

/// Largest allowed `ω·dt` for the fastest frequency in the problem.
pub const MAX_PHASE_PER_STEP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeDepOptions {
    /// Coarse step; the reported state comes from a run at `dt/2`.
    pub dt: f64,
    /// Limit on the Richardson error estimate.
    pub accuracy_tol: f64,
}

impl TimeDepOptions {
    /// A step of `fraction / ω_max`, with `fraction ≤ 0.1`.
    pub fn resolving(params: &PhysicalParams, fraction: f64) -> Self {
        Self { dt: fraction / fastest_frequency(params), accuracy_tol: 1e-6 }
    }
}

#[derive(Debug, Clone)]
pub struct TimeDepRun {
    /// Interaction-frame state from the fine (`dt/2`) run.
    pub state: FockState,
    /// `‖ψ_{dt/2} − ψ_{dt}‖ / 3`, the second-order Richardson estimate.
    pub error_estimate: f64,
    /// Fine-run step count.
    pub steps: usize,
    /// Fine-run step length.
    pub dt: f64,
}

fn fastest_frequency(params: &PhysicalParams) -> f64 {
    let (wx, wy, _) = params.trap_freqs;
    [params.drive_freq, wx, wy, params.omega_rot].iter().fold(0.0_f64, |m, w| m.max(w.abs()))
}

struct Terms {
    sz_a: SparseMatrix,
    sz_a_dag: SparseMatrix,
    b: SparseMatrix,
    b_dag: SparseMatrix,
    a_dag_b: SparseMatrix,
    a_b_dag: SparseMatrix,
}

impl Terms {
    fn new(ops: &OperatorSet) -> Self {
        Self {
            sz_a: ops.sigma_z.matmul(&ops.a),
            sz_a_dag: ops.sigma_z.matmul(&ops.a_dag),
            b: ops.b.clone(),
            b_dag: ops.b_dag.clone(),
            a_dag_b: ops.a_dag.matmul(&ops.b),
            a_b_dag: ops.a.matmul(&ops.b_dag),
        }
    }

    /// Coefficients of the interaction-frame Hamiltonian at time `s`.
    fn coefficients(params: &PhysicalParams, s: f64) -> [Complex64; 6] {
        let (wx, wy, _) = params.trap_freqs;
        let drive = 2.0 * (params.drive_freq * s).cos();
        let ea = Complex64::from_polar(1.0, wx * s);
        let eb = Complex64::from_polar(1.0, wy * s);
        let ej = Complex64::from_polar(1.0, (wy - wx) * s);
        let i = Complex64::i();
        [
            ea * params.alpha * drive,
            ea.conj() * params.alpha * drive,
            -i * eb * params.beta * drive,
            i * eb.conj() * params.beta * drive,
            i * ej * params.omega_rot,
            -i * ej.conj() * params.omega_rot,
        ]
    }

    fn apply(&self, c: &[Complex64; 6], x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); x.len()];
        for (op, &ck) in [&self.sz_a, &self.sz_a_dag, &self.b, &self.b_dag, &self.a_dag_b, &self.a_b_dag]
            .into_iter()
            .zip(c)
        {
            if ck != Complex64::new(0.0, 0.0) {
                op.matvec_acc(ck, x, &mut y);
            }
        }
        y
    }

    /// `exp(i·dt·H) ψ` by Taylor series, summed until terms drop below 1e-16.
    fn step(&self, c: &[Complex64; 6], dt: f64, psi: &[Complex64]) -> Vec<Complex64> {
        let scale = Complex64::new(0.0, dt);
        let mut out = psi.to_vec();
        let mut term = psi.to_vec();
        for k in 1..80 {
            term = self.apply(c, &term);
            let f = scale / k as f64;
            let mut size = 0.0;
            for (o, t) in out.iter_mut().zip(term.iter_mut()) {
                *t *= f;
                *o += *t;
                size += t.norm_sqr();
            }
            if size.sqrt() < 1e-16 {
                break;
            }
        }
        out
    }

    fn run(&self, params: &PhysicalParams, psi: &[Complex64], t_total: f64, steps: usize) -> Vec<Complex64> {
        let dt = t_total / steps as f64;
        let mut psi = psi.to_vec();
        for n in 0..steps {
            let mid = (n as f64 + 0.5) * dt;
            psi = self.step(&Self::coefficients(params, mid), dt, &psi);
        }
        psi
    }
}

/// Propagates `state` (interaction frame) for `t_total` under the driven
/// lab Hamiltonian using midpoint piecewise-constant steps.
pub fn propagate_timedep(
    state: &FockState,
    params: &PhysicalParams,
    ops: &OperatorSet,
    t_total: f64,
    opts: &TimeDepOptions,
) -> Result<TimeDepRun> {
    if !(t_total >= 0.0 && t_total.is_finite()) {
        return Err(Error::Invalid(format!("propagation time must be finite and non-negative, got {t_total}")));
    }
    if !(opts.dt > 0.0) {
        return Err(Error::Invalid("time step must be positive".into()));
    }
    let phase = fastest_frequency(params) * opts.dt;
    if phase > MAX_PHASE_PER_STEP {
        return Err(Error::Accuracy { estimate: phase, limit: MAX_PHASE_PER_STEP });
    }
    if state.as_slice().len() != ops.dim() {
        return Err(Error::Invalid("state and operator dimensions differ".into()));
    }
    let terms = Terms::new(ops);
    let coarse_steps = ((t_total / opts.dt).ceil() as usize).max(1);
    let coarse = terms.run(params, state.as_slice(), t_total, coarse_steps);
    let fine = terms.run(params, state.as_slice(), t_total, 2 * coarse_steps);
    let diff: f64 = fine.iter().zip(&coarse).map(|(f, c)| (f - c).norm_sqr()).sum::<f64>().sqrt();
    let error_estimate = diff / 3.0;
    if error_estimate > opts.accuracy_tol {
        return Err(Error::Accuracy { estimate: error_estimate, limit: opts.accuracy_tol });
    }
    let (na, nb) = state.cutoffs();
    Ok(TimeDepRun {
        state: FockState::from_vec(na, nb, fine)?,
        error_estimate,
        steps: 2 * coarse_steps,
        dt: t_total / (2 * coarse_steps) as f64,
    })
}

/// `ψ = e^{iH₀t} ψ_I` with `H₀ = ω_x n_a + ω_y n_b`.
pub fn to_lab_frame(state: &FockState, params: &PhysicalParams, t: f64) -> FockState {
    let (na, nb) = state.cutoffs();
    let (wx, wy, _) = params.trap_freqs;
    let mut out = state.clone();
    for s in 0..2 {
        for i in 0..na {
            for j in 0..nb {
                let ph = Complex64::from_polar(1.0, (wx * i as f64 + wy * j as f64) * t);
                out.set(s, i, j, state.get(s, i, j) * ph);
            }
        }
    }
    out
}
