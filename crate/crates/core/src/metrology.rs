//! Populations, sensitivity, decay and 2π-ambiguity resolution.
//!
//! Conventions: φ₁ is the per-segment phase of [`crate::model::phi1`]; one
//! U₊ gives the spin superposition a relative phase 2φ₁, one PMDD unit 8φ₁.
//! Readout closes with a π/2 pulse, so P↓ = ½(1 + 2 Re ρ_{↑↓}).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::FockConfig;
use crate::model::{gamma_at, phi1, phi1_unchecked, slope_ratio, versinc, PhysicalParams};
use crate::phasespace::{Factorization, HybridState};
use crate::sequence::{run, FockEngine, MotionalFrame, PhasespaceEngine, SequenceSpec, TraceEntry};
use crate::spin::SpinState;

/// Ramsey readout of a state prepared in (|↑⟩ + |↓⟩)/√2.
/// `p_down = (1 + contrast·cos(rel_phase))/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadoutResult {
    pub p_down: f64,
    pub contrast: f64,
    pub rel_phase: f64,
}

impl ReadoutResult {
    pub fn from_parts(contrast: f64, rel_phase: f64) -> Self {
        Self { p_down: 0.5 * (1.0 + contrast * rel_phase.cos()), contrast, rel_phase }
    }
}

/// P↓ = ½(1 + 2 Re[c_↑ c̄_↓ ⟨m_↓|m_↑⟩]).
pub fn ramsey_population<S: SpinState + ?Sized>(state: &S) -> ReadoutResult {
    let ud = state.reduced_spin().ud;
    ReadoutResult::from_parts(2.0 * ud.norm(), ud.arg())
}

/// ½(1 + e^{−Γ} cos 2φ₁) after a single U₊(t), θ = Ωt.
pub fn population_baseline(params: &PhysicalParams, t: f64) -> Result<f64> {
    let phi = phi1(params, t)?;
    Ok(0.5 * (1.0 + (-gamma_at(params, t)).exp() * (2.0 * phi).cos()))
}

/// e^{−Γ}, the baseline contrast.
pub fn contrast_baseline(params: &PhysicalParams, t: f64) -> f64 {
    (-gamma_at(params, t)).exp()
}

/// ½(1 + cos 8Mφ₁(τ)) after M PMDD units; the contrast is exactly 1.
pub fn population_pmdd(params: &PhysicalParams) -> Result<f64> {
    params.validate()?;
    Ok(pmdd_population_raw(params.alpha, params.beta, params.omega_rot, params.tau, f64::from(params.repetitions)))
}

fn pmdd_population_raw(alpha: f64, beta: f64, omega: f64, tau: f64, m: f64) -> f64 {
    0.5 * (1.0 + (8.0 * m * phi1_unchecked(alpha, beta, omega, tau)).cos())
}

/// ∂φ₁/∂Ω = −2αβ(θ + θcosθ − 2sinθ)/Ω³, written regularly as −2αβτ³·k(θ)
/// with k(θ) = (θ + θcosθ − 2sinθ)/θ³ → −1/6.
fn dphi1_domega(alpha: f64, beta: f64, omega: f64, tau: f64) -> f64 {
    -2.0 * alpha * beta * tau.powi(3) * slope_ratio(omega * tau)
}

/// Closed-form ∂P↓/∂Ω of the decoupled population.
pub fn dp_domega(params: &PhysicalParams) -> Result<f64> {
    params.validate()?;
    let m = f64::from(params.repetitions);
    let phase = 8.0 * m * phi1_unchecked(params.alpha, params.beta, params.omega_rot, params.tau);
    Ok(-4.0 * m * phase.sin() * dphi1_domega(params.alpha, params.beta, params.omega_rot, params.tau))
}

/// Closed-form ∂P↓/∂τ of the decoupled population at fixed Ω and M.
pub fn dp_dtau(params: &PhysicalParams) -> Result<f64> {
    params.validate()?;
    let m = f64::from(params.repetitions);
    let (a, b, w, t) = (params.alpha, params.beta, params.omega_rot, params.tau);
    let phase = 8.0 * m * phi1_unchecked(a, b, w, t);
    // ∂φ₁/∂τ = 2αβ(1 − cos θ)/Ω = 2αβτ·versinc(θ)
    Ok(-4.0 * m * phase.sin() * 2.0 * a * b * t * versinc(w * t))
}

/// Error-propagation sensitivity in (rad/s)/√Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sensitivity {
    pub theta: f64,
    /// Ω³√τ / (4√M·αβ·|θ + θcosθ − 2sinθ|), i.e. √T/|∂P/∂Ω|_max with ΔP = 1.
    pub closed_form: f64,
    /// Same slope with projection noise ΔP = √(P(1−P)), which is half the above.
    pub projection_noise: f64,
    /// 3 / (2√(4Mτ)·αβτ²), the θ → 0 limit of `projection_noise`.
    pub small_angle: f64,
    /// `closed_form / small_angle`; tends to 2 as θ → 0.
    pub ratio: f64,
}

/// Sensitivity for `params.repetitions` units.
pub fn sensitivity(params: &PhysicalParams) -> Result<Sensitivity> {
    params.validate()?;
    sensitivity_with_units(params, f64::from(params.repetitions))
}

/// Sensitivity for a total accumulation time T = 4Mτ; M need not be whole.
pub fn sensitivity_for_total_time(params: &PhysicalParams, total_time: f64) -> Result<Sensitivity> {
    if !(total_time > 0.0 && total_time.is_finite()) {
        return Err(Error::Domain(format!("total time must be positive, got {total_time}")));
    }
    sensitivity_with_units(params, total_time / (4.0 * params.tau))
}

fn sensitivity_with_units(params: &PhysicalParams, m: f64) -> Result<Sensitivity> {
    let (a, b, tau) = (params.alpha, params.beta, params.tau);
    if !(tau > 0.0) || !(m > 0.0) {
        return Err(Error::Domain("tau and M must be positive".into()));
    }
    let theta = params.theta(tau);
    let k = slope_ratio(theta).abs();
    let denom = 4.0 * m.sqrt() * a * b * tau.powi(3) * k;
    if !(denom.abs() >= 1e-15) {
        return Err(Error::DeadPoint { theta });
    }
    let closed_form = tau.sqrt() / denom;
    let small_angle = 3.0 / (2.0 * (4.0 * m * tau).sqrt() * a * b * tau * tau);
    Ok(Sensitivity { theta, closed_form, projection_noise: 0.5 * closed_form, small_angle, ratio: closed_form / small_angle })
}

/// `√(P(1−P))·√T / |∂P/∂Ω|` with the slope from a Richardson-extrapolated
/// central difference of the decoupled population. Compare against
/// [`Sensitivity::projection_noise`].
pub fn sensitivity_numeric(params: &PhysicalParams, d_omega: f64) -> Result<f64> {
    params.validate()?;
    if !(d_omega > 0.0) {
        return Err(Error::Domain("d_omega must be positive".into()));
    }
    let m = f64::from(params.repetitions);
    let pop = |w: f64| pmdd_population_raw(params.alpha, params.beta, w, params.tau, m);
    let slope = richardson(pop, params.omega_rot, d_omega);
    let p = pop(params.omega_rot);
    let noise = (p * (1.0 - p)).max(0.0).sqrt();
    if slope.abs() < 1e-300 {
        return Err(Error::DeadPoint { theta: params.theta(params.tau) });
    }
    Ok(noise * params.total_time().sqrt() / slope.abs())
}

/// Central difference with one Richardson step: (4D(h/2) − D(h))/3.
pub(crate) fn richardson(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let d = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

/// R = exp(−8 n̄ sin²(Ωt/2)). With n̄ = (α/Ω)² this is the baseline contrast e^{−Γ}.
pub fn decay_rate(n_bar: f64, omega_rot: f64, t: f64) -> f64 {
    (-8.0 * n_bar * (omega_rot * t / 2.0).sin().powi(2)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub omega: f64,
    /// ∂P↓/∂τ at the candidate.
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Disambiguation {
    /// Sorted by Ω.
    pub candidates: Vec<Candidate>,
    /// min over Ω-adjacent pairs of max(|s|)/min(|s|).
    pub min_adjacent_ratio: Option<f64>,
    /// min over Ω-adjacent pairs of ||s₁| − |s₂||.
    pub min_adjacent_separation: Option<f64>,
    /// Index pairs whose signed slopes agree within tolerance; such Ω cannot
    /// be told apart by slope (e.g. ±Ω, since P is even in Ω).
    pub unresolved_pairs: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisambiguateOptions {
    pub grid_points: usize,
    pub bisection_tol: f64,
    /// Relative step of the ∂P/∂τ central difference.
    pub slope_rel_step: f64,
    /// Relative tolerance for calling two slopes equal.
    pub slope_equal_tol: f64,
}

impl Default for DisambiguateOptions {
    fn default() -> Self {
        Self { grid_points: 10_000, bisection_tol: 1e-10, slope_rel_step: 1e-4, slope_equal_tol: 1e-6 }
    }
}

/// All Ω in `omega_range` with P↓_PMDD(Ω, τ = t) = `p_target`, with their ∂P/∂τ.
pub fn disambiguate(p_target: f64, t: f64, params: &PhysicalParams, omega_range: (f64, f64)) -> Result<Disambiguation> {
    disambiguate_with(p_target, t, params, omega_range, &DisambiguateOptions::default())
}

pub fn disambiguate_with(
    p_target: f64,
    t: f64,
    params: &PhysicalParams,
    omega_range: (f64, f64),
    opts: &DisambiguateOptions,
) -> Result<Disambiguation> {
    let (lo, hi) = omega_range;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Domain(format!("omega range must be finite and increasing, got ({lo}, {hi})")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("t must be positive, got {t}")));
    }
    if !(0.0..=1.0).contains(&p_target) {
        return Err(Error::Domain(format!("target population must lie in [0, 1], got {p_target}")));
    }
    let n = opts.grid_points.max(3);
    let m = f64::from(params.repetitions);
    let pop = |w: f64, tau: f64| pmdd_population_raw(params.alpha, params.beta, w, tau, m);
    let phase = |w: f64| 8.0 * m * phi1_unchecked(params.alpha, params.beta, w, t);

    // P − p = −sin((Φ+Φ*)/2)·sin((Φ−Φ*)/2) with cos Φ* = 2p − 1. Each factor
    // has simple zeros, so touching targets (p = 0 or 1) bracket cleanly.
    let target_phase = (2.0 * p_target - 1.0).clamp(-1.0, 1.0).acos();
    let grid: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let phases: Vec<f64> = grid.iter().map(|&w| phase(w)).collect();
    let (pmin, pmax) = phases.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if pmax - pmin < 1e-15 {
        return Err(Error::Unresolvable("population is flat over the range".into()));
    }

    let mut roots = Vec::new();
    for sign in [1.0, -1.0] {
        let f = |w: f64| (0.5 * (phase(w) - sign * target_phase)).sin();
        let vals: Vec<f64> = phases.iter().map(|&ph| (0.5 * (ph - sign * target_phase)).sin()).collect();
        for i in 0..n - 1 {
            let (fa, fb) = (vals[i], vals[i + 1]);
            if fa == 0.0 {
                roots.push(grid[i]);
            } else if fa * fb < 0.0 {
                let (mut a, mut b, mut fa) = (grid[i], grid[i + 1], fa);
                while (b - a) > opts.bisection_tol * a.abs().max(b.abs()).max(1.0) {
                    let mid = 0.5 * (a + b);
                    let fm = f(mid);
                    if fm == 0.0 {
                        a = mid;
                        b = mid;
                        break;
                    }
                    if (fm > 0.0) == (fa > 0.0) {
                        a = mid;
                        fa = fm;
                    } else {
                        b = mid;
                    }
                }
                roots.push(0.5 * (a + b));
            }
        }
        if vals[n - 1] == 0.0 {
            roots.push(grid[n - 1]);
        }
    }
    roots.sort_by(f64::total_cmp);
    let merge = 10.0 * opts.bisection_tol;
    roots.dedup_by(|a, b| (*a - *b).abs() <= merge * a.abs().max(1.0));
    let h = opts.slope_rel_step * t;
    let candidates: Vec<Candidate> =
        roots.into_iter().map(|w| Candidate { omega: w, slope: richardson(|tau| pop(w, tau), t, h) }).collect();

    let mut min_ratio: Option<f64> = None;
    let mut min_sep: Option<f64> = None;
    for pair in candidates.windows(2) {
        let (s1, s2) = (pair[0].slope.abs(), pair[1].slope.abs());
        let ratio = if s1.min(s2) == 0.0 { f64::INFINITY } else { s1.max(s2) / s1.min(s2) };
        min_ratio = Some(min_ratio.map_or(ratio, |r| r.min(ratio)));
        let sep = (s1 - s2).abs();
        min_sep = Some(min_sep.map_or(sep, |r| r.min(sep)));
    }
    let scale = candidates.iter().fold(0.0_f64, |acc, c| acc.max(c.slope.abs()));
    let mut unresolved = Vec::new();
    for i in 0..candidates.len() {
        for j in i + 1..candidates.len() {
            if (candidates[i].slope - candidates[j].slope).abs() <= opts.slope_equal_tol * scale.max(1e-300) {
                unresolved.push((i, j));
            }
        }
    }
    Ok(Disambiguation { candidates, min_adjacent_ratio: min_ratio, min_adjacent_separation: min_sep, unresolved_pairs: unresolved })
}

/// Which propagation backend to use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EngineKind {
    Phasespace(Factorization),
    Fock(FockConfig),
}

impl EngineKind {
    pub fn name(&self) -> &'static str {
        match self {
            EngineKind::Phasespace(_) => "phasespace",
            EngineKind::Fock(_) => "fock",
        }
    }
}

/// A single run from (|↑⟩ + |↓⟩)/√2 ⊗ |0, 0⟩, read out at the end.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub readout: ReadoutResult,
    pub trace: Vec<TraceEntry>,
    pub frame: MotionalFrame,
    pub total_duration: f64,
}

pub fn simulate(params: &PhysicalParams, engine: &EngineKind, spec: &SequenceSpec) -> Result<Simulation> {
    params.validate()?;
    match engine {
        EngineKind::Phasespace(fact) => {
            let mut eng = PhasespaceEngine::new(*params).with_factorization(*fact);
            let out = run(spec, &HybridState::plus_vacuum(), &mut eng)?;
            Ok(Simulation { readout: ramsey_population(&out.state), trace: out.trace, frame: out.frame, total_duration: out.total_duration })
        }
        EngineKind::Fock(cfg) => {
            let mut eng = FockEngine::new(*params, *cfg)?;
            let s0 = HybridState::plus_vacuum().to_fock(cfg)?;
            let out = run(spec, &s0, &mut eng)?;
            Ok(Simulation { readout: ramsey_population(&out.state), trace: out.trace, frame: out.frame, total_duration: out.total_duration })
        }
    }
}

/// Protocol selector for scans; explicit lists have no closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SequenceKind {
    Pmdd,
    Ideal,
    Baseline,
    Explicit(String),
}

impl SequenceKind {
    pub fn parse(text: &str) -> Self {
        match text.trim().to_ascii_lowercase().as_str() {
            "pmdd" => SequenceKind::Pmdd,
            "ideal" => SequenceKind::Ideal,
            "baseline" => SequenceKind::Baseline,
            _ => SequenceKind::Explicit(text.trim().to_string()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            SequenceKind::Pmdd => "pmdd".into(),
            SequenceKind::Ideal => "ideal".into(),
            SequenceKind::Baseline => "baseline".into(),
            SequenceKind::Explicit(s) => s.clone(),
        }
    }

    /// The spec for segment duration `params.tau`, repeated `params.repetitions` times.
    pub fn build(&self, params: &PhysicalParams) -> Result<SequenceSpec> {
        Ok(SequenceSpec::parse(&self.label(), params.tau)?.with_repetitions(params.repetitions))
    }

    /// Closed-form P↓, when one exists.
    pub fn closed_form(&self, params: &PhysicalParams) -> Option<Result<f64>> {
        match self {
            // The ideal unit accumulates the same 8φ₁ per unit as PMDD.
            SequenceKind::Pmdd | SequenceKind::Ideal => Some(population_pmdd(params)),
            SequenceKind::Baseline => Some(if params.repetitions == 1 {
                population_baseline(params, params.tau)
            } else {
                // M back-to-back U₊(τ) act as one U₊(Mτ).
                population_baseline(params, f64::from(params.repetitions) * params.tau)
            }),
            SequenceKind::Explicit(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScanAxis {
    /// Rotation rate Ω.
    Omega,
    /// Segment duration τ.
    Time,
}

impl ScanAxis {
    pub fn name(&self) -> &'static str {
        match self {
            ScanAxis::Omega => "omega",
            ScanAxis::Time => "tau",
        }
    }

    fn apply(&self, params: &PhysicalParams, x: f64) -> PhysicalParams {
        let mut p = *params;
        match self {
            ScanAxis::Omega => p.omega_rot = x,
            ScanAxis::Time => p.tau = x,
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub x: f64,
    pub p_down: f64,
    pub p_closed: Option<f64>,
    pub contrast: f64,
    pub rel_phase: f64,
    /// ∂P↓/∂τ from engine runs, if requested.
    pub slope: Option<f64>,
    /// Projection-noise sensitivity; `None` at dead points or if not requested.
    pub sensitivity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanMetadata {
    pub engine: String,
    pub sequence: String,
    pub axis: ScanAxis,
    pub params: PhysicalParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub metadata: ScanMetadata,
    pub rows: Vec<ScanRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRequest {
    pub params: PhysicalParams,
    pub engine: EngineKind,
    pub sequence: SequenceKind,
    pub axis: ScanAxis,
    pub grid: Vec<f64>,
    pub with_slope: bool,
    pub with_sensitivity: bool,
}

/// `points` evenly spaced values from `min` to `max` inclusive.
pub fn linear_grid(min: f64, max: f64, points: usize) -> Result<Vec<f64>> {
    if points == 0 {
        return Err(Error::Invalid("scan grid needs at least one point".into()));
    }
    if !(min.is_finite() && max.is_finite()) || max < min {
        return Err(Error::Invalid(format!("scan range must be finite with min <= max, got [{min}, {max}]")));
    }
    if points == 1 {
        return Ok(vec![min]);
    }
    Ok((0..points).map(|i| min + (max - min) * i as f64 / (points - 1) as f64).collect())
}

/// Evaluates every grid point in parallel; rows come back in grid order.
pub fn scan(req: &ScanRequest) -> Result<ScanResult> {
    if req.grid.is_empty() {
        return Err(Error::Invalid("scan grid is empty".into()));
    }
    if req.grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Invalid("scan grid must be strictly increasing".into()));
    }
    let rows = req
        .grid
        .par_iter()
        .map(|&x| scan_point(req, x))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanResult {
        metadata: ScanMetadata {
            engine: req.engine.name().into(),
            sequence: req.sequence.label(),
            axis: req.axis,
            params: req.params,
        },
        rows,
    })
}

fn scan_point(req: &ScanRequest, x: f64) -> Result<ScanRow> {
    let p = req.axis.apply(&req.params, x);
    let readout = simulate(&p, &req.engine, &req.sequence.build(&p)?)?.readout;
    let p_closed = req.sequence.closed_form(&p).transpose()?;
    let slope = if req.with_slope {
        let h = 1e-4 * p.tau;
        let at = |tau: f64| -> Result<f64> {
            let q = PhysicalParams { tau, ..p };
            Ok(simulate(&q, &req.engine, &req.sequence.build(&q)?)?.readout.p_down)
        };
        let d = |h: f64| -> Result<f64> { Ok((at(p.tau + h)? - at(p.tau - h)?) / (2.0 * h)) };
        Some((4.0 * d(h / 2.0)? - d(h)?) / 3.0)
    } else {
        None
    };
    let sensitivity = if req.with_sensitivity {
        match sensitivity(&p) {
            Ok(s) => Some(s.projection_noise),
            Err(Error::DeadPoint { .. }) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    Ok(ScanRow { x, p_down: readout.p_down, p_closed, contrast: readout.contrast, rel_phase: readout.rel_phase, slope, sensitivity })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn readout_examples() {
        let r = ramsey_population(&HybridState::plus_vacuum());
        assert_relative_eq!(r.p_down, 1.0, epsilon = 1e-15);
        assert_relative_eq!(r.contrast, 1.0, epsilon = 1e-15);
        assert!(ReadoutResult::from_parts(1.0, PI).p_down.abs() < 1e-15);
    }

    #[test]
    fn baseline_examples() {
        let p = PhysicalParams::new(2.0 * PI, 0.7, 0.3, 1.0);
        let phi = phi1(&p, 1.0).unwrap();
        assert_relative_eq!(population_baseline(&p, 1.0).unwrap(), 0.5 * (1.0 + (2.0 * phi).cos()), epsilon = 1e-14);
        let p0 = PhysicalParams::new(0.9, 0.0, 0.4, 1.0);
        assert_relative_eq!(population_baseline(&p0, 1.0).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn pmdd_examples() {
        assert_relative_eq!(population_pmdd(&PhysicalParams::new(0.0, 1.0, 1.0, 1.0)).unwrap(), 1.0);
        // choose α so that 8φ₁ = π
        let mut p = PhysicalParams::new(0.8, 1.0, 0.25, 1.0);
        p.alpha = PI / (8.0 * phi1_unchecked(1.0, 0.25, 0.8, 1.0));
        assert!(population_pmdd(&p).unwrap().abs() < 1e-15);
    }

    #[test]
    fn analytic_slopes_match_differences() {
        let p = PhysicalParams::new(0.7, 0.9, 0.4, 1.3).with_repetitions(3);
        let fd_w = richardson(|w| population_pmdd(&PhysicalParams { omega_rot: w, ..p }).unwrap(), p.omega_rot, 1e-3);
        assert_relative_eq!(dp_domega(&p).unwrap(), fd_w, max_relative = 1e-8);
        let fd_t = richardson(|t| population_pmdd(&PhysicalParams { tau: t, ..p }).unwrap(), p.tau, 1e-3);
        assert_relative_eq!(dp_dtau(&p).unwrap(), fd_t, max_relative = 1e-8);
    }

    #[test]
    fn headline_sensitivity() {
        let p = PhysicalParams::new(1e-3, 1e4, 5e3, 0.1);
        let s = sensitivity_for_total_time(&p, 1.0).unwrap();
        assert_relative_eq!(s.small_angle, 3e-6, max_relative = 1e-12);
        assert_relative_eq!(s.projection_noise, 3e-6, max_relative = 1e-6);
        assert_relative_eq!(s.closed_form, 6e-6, max_relative = 1e-6);
        let s = sensitivity_for_total_time(&p, 1000.0).unwrap();
        assert_relative_eq!(s.small_angle, 9.486832980505138e-8, max_relative = 1e-12);
    }

    #[test]
    fn dead_points_are_signalled() {
        // θ = π is a zero of θ + θcosθ − 2sinθ.
        let p = PhysicalParams::new(PI, 1.0, 1.0, 1.0);
        assert!(matches!(sensitivity(&p), Err(Error::DeadPoint { .. })));
        let p = PhysicalParams::new(0.5, 0.0, 1.0, 1.0);
        assert!(matches!(sensitivity(&p), Err(Error::DeadPoint { .. })));
    }

    #[test]
    fn numeric_sensitivity_matches_projection_noise() {
        let p = PhysicalParams::new(0.9, 0.6, 0.35, 1.1).with_repetitions(2);
        let s = sensitivity(&p).unwrap();
        let n = sensitivity_numeric(&p, 1e-4).unwrap();
        assert_relative_eq!(n, s.projection_noise, max_relative = 1e-3);
        let neg = sensitivity_numeric(&PhysicalParams { omega_rot: -0.9, ..p }, 1e-4).unwrap();
        assert_relative_eq!(n, neg, max_relative = 1e-9);
    }

    #[test]
    fn decay_rate_examples() {
        assert_eq!(decay_rate(5.0, 0.0, 1.0), 1.0);
        assert_relative_eq!(decay_rate(5.0, 2.0 * PI, 1.0), 1.0, epsilon = 1e-12);
        let p = PhysicalParams::new(0.6, 0.8, 0.1, 1.7);
        let n_bar = (p.alpha / p.omega_rot).powi(2);
        assert_relative_eq!(decay_rate(n_bar, p.omega_rot, p.tau), contrast_baseline(&p, p.tau), max_relative = 1e-12);
    }

    #[test]
    fn disambiguate_touching_root_at_zero() {
        let p = PhysicalParams::new(0.0, 1.0, 0.5, 1.0);
        let d = disambiguate(1.0, 0.1, &p, (-0.3, 0.3)).unwrap();
        assert_eq!(d.candidates.len(), 1);
        assert!(d.candidates[0].omega.abs() < 1e-6);
        assert!(d.candidates[0].slope.abs() < 1e-9);
    }

    #[test]
    fn disambiguate_finds_all_crossings_and_flags_mirror_pairs() {
        let p = PhysicalParams::new(0.0, 20.0, 10.0, 0.1);
        let d = disambiguate(0.5, 0.1, &p, (-30.0, 30.0)).unwrap();
        assert!(d.candidates.len() >= 4);
        for c in &d.candidates {
            let q = PhysicalParams { omega_rot: c.omega, ..p };
            assert!((population_pmdd(&q).unwrap() - 0.5).abs() < 1e-8);
            let exact = dp_dtau(&q).unwrap();
            assert!((c.slope - exact).abs() <= 1e-6 * exact.abs().max(1.0));
        }
        // P is even in Ω, so ±Ω pairs share a slope.
        assert!(!d.unresolved_pairs.is_empty());
    }

    #[test]
    fn disambiguate_errors() {
        let p = PhysicalParams::new(0.0, 0.0, 0.5, 1.0);
        assert!(matches!(disambiguate(1.0, 0.1, &p, (-1.0, 1.0)), Err(Error::Unresolvable(_))));
        let p = PhysicalParams::new(0.0, 1.0, 0.5, 1.0);
        assert!(disambiguate(0.5, 0.1, &p, (1.0, 0.0)).is_err());
        // Range with no crossing.
        assert!(disambiguate(0.0, 0.1, &p, (0.1, 0.2)).unwrap().candidates.is_empty());
    }

    #[test]
    fn scan_rows_follow_grid() {
        let req = ScanRequest {
            params: PhysicalParams::new(0.01, 0.5, 0.25, 1.0),
            engine: EngineKind::Phasespace(Factorization::Ordered),
            sequence: SequenceKind::Baseline,
            axis: ScanAxis::Time,
            grid: linear_grid(0.5, 5.0, 10).unwrap(),
            with_slope: true,
            with_sensitivity: true,
        };
        let out = scan(&req).unwrap();
        assert_eq!(out.rows.len(), 10);
        for r in &out.rows {
            assert!((r.p_down - r.p_closed.unwrap()).abs() < 1e-12);
        }
        assert!(linear_grid(0.0, 1.0, 0).is_err());
        assert!(scan(&ScanRequest { grid: vec![], ..req }).is_err());
    }

    proptest! {
        #[test]
        fn readout_fields_are_consistent(c in 0.0f64..1.0, phi in -10.0f64..10.0) {
            let r = ReadoutResult::from_parts(c, phi);
            prop_assert!((r.p_down - 0.5 * (1.0 + r.contrast * r.rel_phase.cos())).abs() <= 1e-12);
        }

        #[test]
        fn sensitivity_even_and_scales_with_units(w in 0.01f64..2.5, m in 1u32..50) {
            let p = PhysicalParams::new(w, 0.8, 0.4, 1.0).with_repetitions(m);
            let s = sensitivity(&p).unwrap();
            let neg = sensitivity(&PhysicalParams { omega_rot: -w, ..p }).unwrap();
            prop_assert!((s.closed_form - neg.closed_form).abs() <= 1e-12 * s.closed_form);
            let one = sensitivity(&p.with_repetitions(1)).unwrap();
            prop_assert!((s.closed_form * f64::from(m).sqrt() - one.closed_form).abs() <= 1e-12 * one.closed_form);
        }

        #[test]
        fn small_angle_agreement(theta in 1e-4f64..0.1) {
            let p = PhysicalParams::new(theta, 0.8, 0.4, 1.0);
            let s = sensitivity(&p).unwrap();
            prop_assert!((s.projection_noise / s.small_angle - 1.0).abs() < 0.01);
        }

        #[test]
        fn closed_slope_matches_difference(w in 0.05f64..3.0, a in 0.1f64..2.0, b in 0.1f64..2.0) {
            let p = PhysicalParams::new(w, a, b, 1.0);
            let exact = dp_domega(&p).unwrap();
            let fd = richardson(|x| population_pmdd(&PhysicalParams { omega_rot: x, ..p }).unwrap(), w, 1e-3);
            prop_assert!((exact - fd).abs() <= 1e-7 * (1.0 + exact.abs()));
        }
    }
}
