//! Exact, cutoff-free engine for spin-conditioned coherent states.
//!
//! Every Hamiltonian in scope commutes with σ_z and is at most quadratic in
//! the mode operators, with the quadratic part being the rotation `ΩJ_y`.
//! A product state `(c_↑|↑⟩ + c_↓|↓⟩) ⊗ |α_a, α_b⟩` therefore stays a sum of
//! two branches, each a single coherent state with a c-number phase. The
//! engine tracks those phases exactly, including the composition phase
//! `D(μ)D(ν) = exp(i Im(μν*)) D(μ+ν)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{FockConfig, FockState};
use crate::model::{phi1_unchecked, sinc, versinc, PhysicalParams};
use crate::spin::{ReducedSpin, SpinState};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    A,
    B,
}

/// The normalized state `e^{i phase} |amp_a⟩ ⊗ |amp_b⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentBranch {
    pub amp_a: Complex64,
    pub amp_b: Complex64,
    pub phase: f64,
}

impl Default for CoherentBranch {
    fn default() -> Self {
        Self::VACUUM
    }
}

impl CoherentBranch {
    pub const VACUUM: Self = Self {
        amp_a: Complex64 { re: 0.0, im: 0.0 },
        amp_b: Complex64 { re: 0.0, im: 0.0 },
        phase: 0.0,
    };

    pub fn new(amp_a: Complex64, amp_b: Complex64) -> Self {
        Self { amp_a, amp_b, phase: 0.0 }
    }

    pub fn amp(&self, mode: Mode) -> Complex64 {
        match mode {
            Mode::A => self.amp_a,
            Mode::B => self.amp_b,
        }
    }

    fn amp_mut(&mut self, mode: Mode) -> &mut Complex64 {
        match mode {
            Mode::A => &mut self.amp_a,
            Mode::B => &mut self.amp_b,
        }
    }

    /// Applies `D(μ) = exp(μ k† - μ* k)` to one mode.
    pub fn displace(&self, mode: Mode, mu: Complex64) -> Self {
        let mut out = *self;
        let old = self.amp(mode);
        out.phase += (mu * old.conj()).im;
        *out.amp_mut(mode) = old + mu;
        out
    }

    /// Applies `P(θ) = exp(iθJ_y)`, a real rotation of the amplitude pair.
    pub fn rotate_modes(&self, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self {
            amp_a: self.amp_a * c - self.amp_b * s,
            amp_b: self.amp_a * s + self.amp_b * c,
            phase: self.phase,
        }
    }

    /// Applies `exp(iφ k†k)`.
    pub fn phase_shift(&self, mode: Mode, phi: f64) -> Self {
        let mut out = *self;
        *out.amp_mut(mode) = self.amp(mode) * Complex64::from_polar(1.0, phi);
        out
    }

    /// Mean phonon number summed over both modes.
    pub fn mean_number(&self) -> f64 {
        self.amp_a.norm_sqr() + self.amp_b.norm_sqr()
    }
}

fn coherent_overlap(a: Complex64, b: Complex64) -> Complex64 {
    (-0.5 * a.norm_sqr() - 0.5 * b.norm_sqr() + a.conj() * b).exp()
}

/// `⟨b1|b2⟩` including both c-number phases.
pub fn branch_overlap(b1: &CoherentBranch, b2: &CoherentBranch) -> Complex64 {
    Complex64::from_polar(1.0, b2.phase - b1.phase)
        * coherent_overlap(b1.amp_a, b2.amp_a)
        * coherent_overlap(b1.amp_b, b2.amp_b)
}

/// Spin eigenvalue σ = ±1 of a branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub fn sigma(self) -> f64 {
        match self {
            Spin::Up => 1.0,
            Spin::Down => -1.0,
        }
    }
}

/// `c_↑ |↑⟩|branch_up⟩ + c_↓ |↓⟩|branch_down⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridState {
    pub c_up: Complex64,
    pub c_down: Complex64,
    pub branch_up: CoherentBranch,
    pub branch_down: CoherentBranch,
}

impl Default for HybridState {
    fn default() -> Self {
        Self::plus_vacuum()
    }
}

/// How a constant-Hamiltonian segment is factorized into displacements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Factorization {
    /// `e^{iφ₁σ_z} · exp(α-term) · exp(β-term) · P(θ)`, with the closed-form φ₁.
    #[default]
    Ordered,
    /// `e^{iEt} D(ζ) P(θ) D(-ζ)` with the displacement ζ that removes the
    /// linear terms; φ₁ comes out of `Et` and the composition phases.
    /// Falls back to `Ordered` for |θ| below [`COMPLETED_SQUARE_MIN_THETA`].
    CompletedSquare,
}

/// Below this rotation angle ζ ~ 1/Ω is too large for the completed-square route.
pub const COMPLETED_SQUARE_MIN_THETA: f64 = 1e-3;

impl HybridState {
    /// `(|↑⟩ + |↓⟩)/√2 ⊗ |0, 0⟩`.
    pub fn plus_vacuum() -> Self {
        Self::plus_coherent(CoherentBranch::VACUUM)
    }

    /// `(|↑⟩ + |↓⟩)/√2 ⊗ |motion⟩`.
    pub fn plus_coherent(motion: CoherentBranch) -> Self {
        let c = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self { c_up: c, c_down: c, branch_up: motion, branch_down: motion }
    }

    pub fn branch(&self, spin: Spin) -> &CoherentBranch {
        match spin {
            Spin::Up => &self.branch_up,
            Spin::Down => &self.branch_down,
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c_up.norm_sqr() + self.c_down.norm_sqr()
    }

    /// Applies the same branch map to both spin components.
    pub fn map_branches(&self, f: impl Fn(&CoherentBranch) -> CoherentBranch) -> Self {
        Self {
            branch_up: f(&self.branch_up),
            branch_down: f(&self.branch_down),
            ..*self
        }
    }

    pub fn phase_shift(&self, mode: Mode, phi: f64) -> Self {
        self.map_branches(|b| b.phase_shift(mode, phi))
    }

    pub fn rotate_modes(&self, theta: f64) -> Self {
        self.map_branches(|b| b.rotate_modes(theta))
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.c_up.conj() * other.c_up * branch_overlap(&self.branch_up, &other.branch_up)
            + self.c_down.conj() * other.c_down * branch_overlap(&self.branch_down, &other.branch_down)
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &Self) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Largest coherent amplitude over both branches and modes.
    pub fn max_amplitude(&self) -> f64 {
        [self.branch_up, self.branch_down]
            .iter()
            .flat_map(|b| [b.amp_a.norm(), b.amp_b.norm()])
            .fold(0.0, f64::max)
    }

    /// Relative spin phase arg(ρ_{↑↓}), which includes the motional overlap.
    pub fn relative_phase(&self) -> f64 {
        self.reduced_spin().ud.arg()
    }

    /// Expands both branches on a truncated Fock basis.
    pub fn to_fock(&self, config: &FockConfig) -> Result<FockState> {
        config.validate()?;
        let (na, nb) = (config.cutoff_a, config.cutoff_b);
        let mut state = FockState::zeros(na, nb);
        let mut leak = 0.0;
        for (spin_idx, (c, br)) in [(self.c_up, &self.branch_up), (self.c_down, &self.branch_down)]
            .into_iter()
            .enumerate()
        {
            let (ca, la) = coherent_coefficients(br.amp_a, na);
            let (cb, lb) = coherent_coefficients(br.amp_b, nb);
            leak += c.norm_sqr() * (1.0 - (1.0 - la) * (1.0 - lb));
            let pre = c * Complex64::from_polar(1.0, br.phase);
            for (i, &x) in ca.iter().enumerate() {
                let row = pre * x;
                for (j, &y) in cb.iter().enumerate() {
                    state.set(spin_idx, i, j, row * y);
                }
            }
        }
        if leak > config.leakage_tol {
            return Err(Error::Truncation { leakage: leak, tolerance: config.leakage_tol });
        }
        Ok(state)
    }
}

/// Fock coefficients of |α⟩ up to `cutoff`, and the weight that sits in the
/// top two kept shells or beyond the cutoff.
pub(crate) fn coherent_coefficients(alpha: Complex64, cutoff: usize) -> (Vec<Complex64>, f64) {
    let mut coeffs = Vec::with_capacity(cutoff);
    let mut c = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    let top_start = cutoff.saturating_sub(2);
    let mut top = 0.0;
    let mut n = 0usize;
    loop {
        if n < cutoff {
            coeffs.push(c);
        }
        if n >= top_start {
            top += c.norm_sqr();
        }
        n += 1;
        c = c * alpha / (n as f64).sqrt();
        // Past the peak the tail is geometric with ratio |α|²/n.
        if n >= cutoff && (n as f64) > alpha.norm_sqr() && c.norm_sqr() < 1e-40 * (1.0 + top) {
            break;
        }
        if n > cutoff + 100_000 {
            break;
        }
    }
    (coeffs, top)
}

impl SpinState for HybridState {
    fn reduced_spin(&self) -> ReducedSpin {
        ReducedSpin {
            uu: self.c_up.norm_sqr(),
            dd: self.c_down.norm_sqr(),
            ud: self.c_up * self.c_down.conj() * branch_overlap(&self.branch_down, &self.branch_up),
        }
    }
}

/// Evolves one branch under `exp(i t [Ω J + σ α x_a + β p_b])`.
///
/// `omega` and `alpha` are signed so the same routine serves H₊ and H₋.
/// Returns the new branch and the spin phase to multiply into `c_σ`.
fn segment_branch(
    branch: &CoherentBranch,
    sigma: f64,
    omega: f64,
    alpha: f64,
    beta: f64,
    t: f64,
    fact: Factorization,
) -> (CoherentBranch, f64) {
    let theta = omega * t;
    match fact {
        Factorization::CompletedSquare if theta.abs() >= COMPLETED_SQUARE_MIN_THETA => {
            // ΩJ + σαx_a + βp_b = D(ζ)(ΩJ + 2σαβ/Ω)D(ζ)†, ζ = (β/Ω, iσα/Ω).
            let za = Complex64::new(beta / omega, 0.0);
            let zb = I * (sigma * alpha / omega);
            let b = branch
                .displace(Mode::A, -za)
                .displace(Mode::B, -zb)
                .rotate_modes(theta)
                .displace(Mode::A, za)
                .displace(Mode::B, zb);
            let energy = 2.0 * sigma * alpha * beta / omega;
            (CoherentBranch { phase: b.phase + energy * t, ..b }, 0.0)
        }
        _ => {
            let a = sinc(theta);
            let bb = versinc(theta);
            // exp(i s p_k) = D_k(-s), exp(i s x_k) = D_k(i s).
            let b = branch
                .rotate_modes(theta)
                .displace(Mode::A, Complex64::new(beta * t * bb, 0.0))
                .displace(Mode::B, Complex64::new(-beta * t * a, 0.0))
                .displace(Mode::A, I * (sigma * alpha * t * a))
                .displace(Mode::B, I * (sigma * alpha * t * bb));
            (b, sigma * phi1_unchecked(alpha, beta, omega, t))
        }
    }
}

fn segment(
    state: &HybridState,
    omega: f64,
    alpha: f64,
    beta: f64,
    t: f64,
    fact: Factorization,
) -> HybridState {
    let (up, ph_up) = segment_branch(&state.branch_up, 1.0, omega, alpha, beta, t, fact);
    let (down, ph_down) = segment_branch(&state.branch_down, -1.0, omega, alpha, beta, t, fact);
    HybridState {
        c_up: state.c_up * Complex64::from_polar(1.0, ph_up),
        c_down: state.c_down * Complex64::from_polar(1.0, ph_down),
        branch_up: up,
        branch_down: down,
    }
}

fn check_duration(t: f64) -> Result<()> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Domain(format!("duration must be finite and non-negative, got {t}")));
    }
    Ok(())
}

/// `U₊(t) = exp(i t H₊)`, `H₊ = ΩJ_y + αx_aσ_z + βp_b`.
pub fn apply_u_plus(state: &HybridState, params: &PhysicalParams, t: f64) -> Result<HybridState> {
    apply_u_plus_with(state, params, t, Factorization::Ordered)
}

pub fn apply_u_plus_with(
    state: &HybridState,
    params: &PhysicalParams,
    t: f64,
    fact: Factorization,
) -> Result<HybridState> {
    check_duration(t)?;
    Ok(segment(state, params.omega_rot, params.alpha, params.beta, t, fact))
}

/// `U₋(t) = exp(i t H₋)`, `H₋ = -ΩJ_y - αx_aσ_z + βp_b`: U₊ with θ → -θ, α → -α.
pub fn apply_u_minus(state: &HybridState, params: &PhysicalParams, t: f64) -> Result<HybridState> {
    apply_u_minus_with(state, params, t, Factorization::Ordered)
}

pub fn apply_u_minus_with(
    state: &HybridState,
    params: &PhysicalParams,
    t: f64,
    fact: Factorization,
) -> Result<HybridState> {
    check_duration(t)?;
    Ok(segment(state, -params.omega_rot, -params.alpha, params.beta, t, fact))
}

/// `U₋` realized as `e^{-iπ a†a} U₊ e^{iπ a†a}`.
pub fn apply_u_minus_by_conjugation(
    state: &HybridState,
    params: &PhysicalParams,
    t: f64,
) -> Result<HybridState> {
    let s = state.phase_shift(Mode::A, std::f64::consts::PI);
    let s = apply_u_plus(&s, params, t)?;
    Ok(s.phase_shift(Mode::A, -std::f64::consts::PI))
}
