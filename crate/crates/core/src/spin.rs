//! Reduced spin density matrix shared by both engines.

use num_complex::Complex64;

/// The 2×2 reduced spin state ρ = [[uu, ud], [ud*, dd]] in the σ_z basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedSpin {
    pub uu: f64,
    pub dd: f64,
    /// ρ_{↑↓} = ⟨ψ_↓|ψ_↑⟩, the spin coherence.
    pub ud: Complex64,
}

impl ReducedSpin {
    pub fn trace(&self) -> f64 {
        self.uu + self.dd
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let tr = self.trace();
        let diff = self.uu - self.dd;
        let disc = (diff * diff + 4.0 * self.ud.norm_sqr()).sqrt();
        let hi = 0.5 * (tr + disc);
        // det / λ_hi is better conditioned than (tr - disc)/2 for nearly pure states.
        let det = self.uu * self.dd - self.ud.norm_sqr();
        let lo = if hi > 0.0 { det / hi } else { 0.0 };
        (lo.max(0.0), hi)
    }

    /// von Neumann entropy in nats, in [0, ln 2].
    pub fn entropy(&self) -> f64 {
        let (lo, hi) = self.eigenvalues();
        let h = |p: f64| if p > 0.0 { -p * p.ln() } else { 0.0 };
        (h(lo) + h(hi)).max(0.0)
    }

    pub fn purity(&self) -> f64 {
        self.uu * self.uu + self.dd * self.dd + 2.0 * self.ud.norm_sqr()
    }
}

/// Anything from which the reduced spin state can be read.
pub trait SpinState {
    fn reduced_spin(&self) -> ReducedSpin;
}
