//! Physical parameters, conventions and the closed-form scalar kernels.
//!
//! # Conventions
//!
//! Every engine in the crate propagates with `U(t) = exp(+i H t)` and uses
//! the quadratures `x_k = k† + k`, `p_k = i(k† - k)`. The rotation
//! generator is the Hermitian operator `J_y = i(a†b - a b†)`, normalized so
//! that `exp(i θ J_y)` rotates the quadrature pair `(x_a, x_b)` by the full
//! angle `θ`:
//!
//! ```text
//! exp(iθJ) x_a exp(-iθJ) = cos θ x_a + sin θ x_b
//! exp(iθJ) x_b exp(-iθJ) = cos θ x_b - sin θ x_a
//! ```
//!
//! On coherent amplitudes this is `(α_a, α_b) -> (c α_a - s α_b, s α_a + c α_b)`.
//!
//! The per-segment phase is `φ₁(t) = -2αβt²(sin θ - θ)/θ²`: one forward
//! segment multiplies the state by `exp(i φ₁ σ_z)`, so the spin coherence
//! after a bare segment carries the relative phase `2φ₁`, and a full
//! decoupling unit carries `8φ₁`. The coefficient 2 is the one that the
//! Fock oracle and the completed-square propagator both reproduce.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this |θ| the removable singularities switch to their Taylor series.
pub const SERIES_THRESHOLD: f64 = 1e-6;

/// The single set of conventions shared by the analytic engine and the oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conventions {
    /// Sign `s` in `U(t) = exp(s i H t)`.
    pub evolution_sign: i8,
    /// Normalization of `J_y` relative to `a†b - ab†`; `J_y = i (a†b - ab†)`.
    pub jy_prefactor_is_i: bool,
    /// Coefficient `c` in `φ₁ = -c αβ t² (sin θ - θ)/θ²`.
    pub phi1_coefficient: u8,
}

pub const CONVENTIONS: Conventions = Conventions {
    evolution_sign: 1,
    jy_prefactor_is_i: true,
    phi1_coefficient: 2,
};

/// Experimental knobs. All rates are angular frequencies in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Rotation speed Ω.
    pub omega_rot: f64,
    /// Spin-dependent drive strength α.
    pub alpha: f64,
    /// Displacement drive strength β.
    pub beta: f64,
    /// Segment duration τ in seconds.
    pub tau: f64,
    /// Number of decoupling units M.
    pub repetitions: u32,
    /// (ω_x, ω_y, ω_z); only the lab-frame propagation reads these.
    pub trap_freqs: (f64, f64, f64),
    /// Carrier ω of the cos(ωt) drives; lab-frame propagation only.
    pub drive_freq: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            omega_rot: 0.8,
            alpha: 0.5,
            beta: 0.25,
            tau: 1.0,
            repetitions: 1,
            trap_freqs: (100.0, 100.0, 10.0),
            drive_freq: 100.0,
        }
    }
}

impl PhysicalParams {
    pub fn new(omega_rot: f64, alpha: f64, beta: f64, tau: f64) -> Self {
        Self {
            omega_rot,
            alpha,
            beta,
            tau,
            ..Self::default()
        }
    }

    pub fn with_repetitions(mut self, m: u32) -> Self {
        self.repetitions = m;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.omega_rot, self.alpha, self.beta, self.tau, self.drive_freq]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Invalid("parameters must be finite".into()));
        }
        if self.alpha < 0.0 || self.beta < 0.0 {
            return Err(Error::Invalid("alpha and beta must be non-negative".into()));
        }
        if self.tau <= 0.0 {
            return Err(Error::Invalid("tau must be positive".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::Invalid("repetitions must be at least 1".into()));
        }
        Ok(())
    }

    /// The rotation angle θ = Ω t. Nothing else in the crate computes it.
    #[inline]
    pub fn theta(&self, t: f64) -> f64 {
        self.omega_rot * t
    }

    /// Total protocol time T = 4Mτ.
    pub fn total_time(&self) -> f64 {
        4.0 * f64::from(self.repetitions) * self.tau
    }
}

fn check_finite(x: f64, what: &str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} must be finite, got {x}")))
    }
}

/// A_θ = sin θ / θ.
pub fn a_theta(theta: f64) -> Result<f64> {
    check_finite(theta, "theta")?;
    Ok(sinc(theta))
}

/// B_θ = (1 - cos θ) / θ.
pub fn b_theta(theta: f64) -> Result<f64> {
    check_finite(theta, "theta")?;
    Ok(versinc(theta))
}

// Unchecked kernels used on hot paths after inputs have been validated.

pub(crate) fn sinc(theta: f64) -> f64 {
    if theta.abs() < SERIES_THRESHOLD {
        1.0 - theta * theta / 6.0
    } else {
        theta.sin() / theta
    }
}

pub(crate) fn versinc(theta: f64) -> f64 {
    if theta.abs() < SERIES_THRESHOLD {
        theta / 2.0 - theta.powi(3) / 24.0
    } else {
        // 1 - cos θ = 2 sin²(θ/2) avoids cancellation at moderate θ.
        2.0 * (theta / 2.0).sin().powi(2) / theta
    }
}

/// (sin θ - θ)/θ², odd in θ.
pub(crate) fn phase_kernel(theta: f64) -> f64 {
    if theta.abs() < 1e-3 {
        let t2 = theta * theta;
        // -θ/6 + θ³/120 - θ⁵/5040
        theta * (-1.0 / 6.0 + t2 * (1.0 / 120.0 - t2 / 5040.0))
    } else {
        (theta.sin() - theta) / (theta * theta)
    }
}

/// Per-segment accumulated phase φ₁ = -2αβt²(sin θ - θ)/θ², θ = Ωt.
pub fn phi1(params: &PhysicalParams, t: f64) -> Result<f64> {
    check_finite(t, "t")?;
    if t < 0.0 {
        return Err(Error::Domain(format!("t must be non-negative, got {t}")));
    }
    check_finite(params.alpha, "alpha")?;
    check_finite(params.beta, "beta")?;
    check_finite(params.omega_rot, "omega_rot")?;
    Ok(phi1_unchecked(params.alpha, params.beta, params.omega_rot, t))
}

/// [`phi1`] without argument checks.
pub fn phi1_unchecked(alpha: f64, beta: f64, omega: f64, t: f64) -> f64 {
    -2.0 * alpha * beta * t * t * phase_kernel(omega * t)
}

/// Γ(θ) = 8(α sin(θ/2)/Ω)².
///
/// Pass `t` to get the Ω → 0 limit 2α²t²; without it Ω = 0 is rejected.
pub fn gamma_decay(alpha: f64, omega_rot: f64, theta: f64, t: Option<f64>) -> Result<f64> {
    check_finite(alpha, "alpha")?;
    check_finite(omega_rot, "omega_rot")?;
    check_finite(theta, "theta")?;
    if omega_rot == 0.0 {
        return match t {
            Some(t) => Ok(2.0 * alpha * alpha * t * t),
            None => Err(Error::Domain(
                "gamma_decay at omega_rot = 0 needs the duration t (limit 2 alpha^2 t^2)".into(),
            )),
        };
    }
    let s = alpha * (theta / 2.0).sin() / omega_rot;
    Ok(8.0 * s * s)
}

/// Γ written in terms of the duration, regular at Ω = 0: 2(αt)²(A_θ² + B_θ²).
pub fn gamma_at(params: &PhysicalParams, t: f64) -> f64 {
    let theta = params.theta(t);
    let at = params.alpha * t;
    // A² + B² = (2 sin(θ/2)/θ)²
    let half = sinc(theta / 2.0);
    2.0 * at * at * half * half
}

/// (θ + θ cos θ - 2 sin θ)/θ³, the slope factor of the decoupled
/// population; tends to -1/6 as θ → 0.
pub(crate) fn slope_ratio(theta: f64) -> f64 {
    if theta.abs() < 1e-2 {
        let t2 = theta * theta;
        -1.0 / 6.0 + t2 * (1.0 / 40.0 - t2 / 1008.0)
    } else {
        (theta + theta * theta.cos() - 2.0 * theta.sin()) / theta.powi(3)
    }
}
