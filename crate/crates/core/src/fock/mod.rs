//! Truncated Fock-space oracle.
//!
//! States live on spin ⊗ Fock_a ⊗ Fock_b with spin as the slowest index:
//! `k = s·(Na·Nb) + n_a·Nb + n_b`, where `s = 0` is ↑ (σ_z = +1). Every
//! serialization and every engine comparison relies on this order.

mod operators;
mod propagate;
mod sparse;
mod timedep;

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::{ReducedSpin, SpinState};

pub use operators::{build_operators, hamiltonian_minus, hamiltonian_plus, mode_phase_op, ModeSet, OperatorSet};
pub use propagate::{propagate_static, StaticPropagator};
pub use sparse::SparseMatrix;
pub use timedep::{propagate_timedep, to_lab_frame, TimeDepOptions, TimeDepRun};

/// Largest total dimension (2·Na·Nb) the oracle will build by default.
pub const DEFAULT_MAX_DIM: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FockConfig {
    pub cutoff_a: usize,
    pub cutoff_b: usize,
    /// Maximum population tolerated in the top two shells of either mode.
    pub leakage_tol: f64,
    pub max_dim: usize,
}

impl Default for FockConfig {
    fn default() -> Self {
        Self::new(40, 40)
    }
}

impl FockConfig {
    pub fn new(cutoff_a: usize, cutoff_b: usize) -> Self {
        Self { cutoff_a, cutoff_b, leakage_tol: 1e-10, max_dim: DEFAULT_MAX_DIM }
    }

    pub fn with_leakage_tol(mut self, tol: f64) -> Self {
        self.leakage_tol = tol;
        self
    }

    pub fn dim(&self) -> usize {
        2 * self.cutoff_a * self.cutoff_b
    }

    #[inline]
    pub fn index(&self, spin: usize, n_a: usize, n_b: usize) -> usize {
        spin * self.cutoff_a * self.cutoff_b + n_a * self.cutoff_b + n_b
    }

    pub fn validate(&self) -> Result<()> {
        if self.cutoff_a < 2 || self.cutoff_b < 2 {
            return Err(Error::Invalid("Fock cutoffs must be at least 2".into()));
        }
        let dim = self
            .cutoff_a
            .checked_mul(self.cutoff_b)
            .and_then(|d| d.checked_mul(2))
            .ok_or_else(|| Error::Resource("Fock dimension overflows".into()))?;
        if dim > self.max_dim {
            return Err(Error::Resource(format!(
                "Fock dimension {dim} exceeds the budget of {}",
                self.max_dim
            )));
        }
        if !(self.leakage_tol > 0.0) {
            return Err(Error::Invalid("leakage tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Dense state vector in the documented index order.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    cutoff_a: usize,
    cutoff_b: usize,
    data: Vec<Complex64>,
}

impl FockState {
    pub fn zeros(cutoff_a: usize, cutoff_b: usize) -> Self {
        Self { cutoff_a, cutoff_b, data: vec![Complex64::new(0.0, 0.0); 2 * cutoff_a * cutoff_b] }
    }

    pub fn from_vec(cutoff_a: usize, cutoff_b: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != 2 * cutoff_a * cutoff_b {
            return Err(Error::Invalid(format!(
                "state has {} amplitudes, expected {}",
                data.len(),
                2 * cutoff_a * cutoff_b
            )));
        }
        Ok(Self { cutoff_a, cutoff_b, data })
    }

    /// The basis vector |spin, n_a, n_b⟩.
    pub fn basis(cutoff_a: usize, cutoff_b: usize, spin: usize, n_a: usize, n_b: usize) -> Self {
        let mut s = Self::zeros(cutoff_a, cutoff_b);
        s.set(spin, n_a, n_b, Complex64::new(1.0, 0.0));
        s
    }

    pub fn cutoffs(&self) -> (usize, usize) {
        (self.cutoff_a, self.cutoff_b)
    }

    #[inline]
    fn idx(&self, spin: usize, n_a: usize, n_b: usize) -> usize {
        spin * self.cutoff_a * self.cutoff_b + n_a * self.cutoff_b + n_b
    }

    pub fn get(&self, spin: usize, n_a: usize, n_b: usize) -> Complex64 {
        self.data[self.idx(spin, n_a, n_b)]
    }

    pub fn set(&mut self, spin: usize, n_a: usize, n_b: usize, v: Complex64) {
        let k = self.idx(spin, n_a, n_b);
        self.data[k] = v;
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    fn sector(&self, spin: usize) -> &[Complex64] {
        let m = self.cutoff_a * self.cutoff_b;
        &self.data[spin * m..(spin + 1) * m]
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        assert_eq!(self.cutoffs(), other.cutoffs(), "states on different truncations");
        self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn apply(&self, op: &SparseMatrix) -> Self {
        Self { data: op.matvec(&self.data), ..*self }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { data: self.data.iter().map(|z| z * s).collect(), ..*self }
    }

    /// Population in the top two shells of either mode.
    pub fn leakage(&self) -> f64 {
        let (na, nb) = self.cutoffs();
        let mut sum = 0.0;
        for s in 0..2 {
            for i in 0..na {
                for j in 0..nb {
                    if i + 2 >= na || j + 2 >= nb {
                        sum += self.get(s, i, j).norm_sqr();
                    }
                }
            }
        }
        sum
    }

    /// ⟨n_a⟩ and ⟨n_b⟩.
    pub fn mean_numbers(&self) -> (f64, f64) {
        let (na, nb) = self.cutoffs();
        let (mut ma, mut mb) = (0.0, 0.0);
        for s in 0..2 {
            for i in 0..na {
                for j in 0..nb {
                    let p = self.get(s, i, j).norm_sqr();
                    ma += p * i as f64;
                    mb += p * j as f64;
                }
            }
        }
        (ma, mb)
    }

    pub fn spin_entropy(&self) -> f64 {
        self.reduced_spin().entropy()
    }

    /// Text dump, one `index re im` line per amplitude. Not a stable format.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# fock state: cutoff_a={} cutoff_b={} order=(spin,n_a,n_b)", self.cutoff_a, self.cutoff_b);
        for (k, z) in self.data.iter().enumerate() {
            let _ = writeln!(out, "{k} {:.17e} {:.17e}", z.re, z.im);
        }
        out
    }

    pub fn parse_dump(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Invalid("empty dump".into()))?;
        let field = |name: &str| -> Result<usize> {
            header
                .split_whitespace()
                .find_map(|w| w.strip_prefix(name))
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Invalid(format!("dump header lacks {name}")))
        };
        let (na, nb) = (field("cutoff_a=")?, field("cutoff_b=")?);
        let mut data = vec![Complex64::new(0.0, 0.0); 2 * na * nb];
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Invalid(format!("bad dump line: {line}"));
            if parts.len() != 3 {
                return Err(bad());
            }
            let k: usize = parts[0].parse().map_err(|_| bad())?;
            let re: f64 = parts[1].parse().map_err(|_| bad())?;
            let im: f64 = parts[2].parse().map_err(|_| bad())?;
            *data.get_mut(k).ok_or_else(bad)? = Complex64::new(re, im);
        }
        Self::from_vec(na, nb, data)
    }
}

impl SpinState for FockState {
    fn reduced_spin(&self) -> ReducedSpin {
        let up = self.sector(0);
        let down = self.sector(1);
        ReducedSpin {
            uu: up.iter().map(|z| z.norm_sqr()).sum(),
            dd: down.iter().map(|z| z.norm_sqr()).sum(),
            ud: down.iter().zip(up).map(|(d, u)| d.conj() * u).sum(),
        }
    }
}

/// `|⟨s1|s2⟩|²` for normalized states, clamped to [0, 1].
pub fn fidelity(s1: &FockState, s2: &FockState) -> f64 {
    s1.inner(s2).norm_sqr().clamp(0.0, 1.0)
}

pub fn spin_entropy(state: &FockState) -> f64 {
    state.spin_entropy()
}

pub fn leakage(state: &FockState) -> f64 {
    state.leakage()
}
