//! Pulse protocols and the executor shared by both engines.
//!
//! Sequences are written in time order. Text form, used by config files:
//!
//! ```text
//! sequence   := named | element ("," element)*
//! named      := "pmdd" | "ideal" | "baseline"
//! element    := ("fwd" | "rev") [":" duration] | "pi_a" | "pi_b" | "pi_n"
//! ```
//!
//! A bare `fwd`/`rev` takes the segment duration τ from the parameters.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{build_operators, hamiltonian_plus, mode_phase_op, FockConfig, FockState, ModeSet, SparseMatrix, StaticPropagator};
use crate::model::PhysicalParams;
use crate::phasespace::{apply_u_minus_with, apply_u_plus_with, Factorization, HybridState, Mode};
use crate::spin::SpinState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PulseElement {
    /// `U₊(d)`.
    EvolveForward(f64),
    /// `U₋(d)`.
    EvolveReverse(f64),
    /// `e^{iπ n_a}`.
    PhaseShiftA,
    /// `e^{iπ n_b}`.
    PhaseShiftB,
    /// `e^{iπ N}`, i.e. π on both modes.
    PhaseShiftN,
}

impl PulseElement {
    pub fn duration(&self) -> f64 {
        match *self {
            PulseElement::EvolveForward(d) | PulseElement::EvolveReverse(d) => d,
            _ => 0.0,
        }
    }

    fn parity(&self) -> (bool, bool) {
        match self {
            PulseElement::PhaseShiftA => (true, false),
            PulseElement::PhaseShiftB => (false, true),
            PulseElement::PhaseShiftN => (true, true),
            _ => (false, false),
        }
    }

    fn parse_with(token: &str, tau: Option<f64>) -> Result<Self> {
        let token = token.trim();
        let (head, arg) = match token.split_once(':') {
            Some((h, a)) => (h.trim(), Some(a.trim())),
            None => (token, None),
        };
        let duration = || -> Result<f64> {
            let d = match arg {
                Some(text) => text
                    .parse::<f64>()
                    .map_err(|_| Error::Invalid(format!("bad duration in sequence element `{token}`")))?,
                None => tau.ok_or_else(|| Error::Invalid(format!("element `{token}` needs a duration")))?,
            };
            if d > 0.0 && d.is_finite() {
                Ok(d)
            } else {
                Err(Error::Invalid(format!("duration must be positive in `{token}`")))
            }
        };
        let no_arg = |e: PulseElement| match arg {
            None => Ok(e),
            Some(_) => Err(Error::Invalid(format!("`{head}` takes no argument"))),
        };
        match head.to_ascii_lowercase().as_str() {
            "fwd" => Ok(PulseElement::EvolveForward(duration()?)),
            "rev" => Ok(PulseElement::EvolveReverse(duration()?)),
            "pi_a" => no_arg(PulseElement::PhaseShiftA),
            "pi_b" => no_arg(PulseElement::PhaseShiftB),
            "pi_n" => no_arg(PulseElement::PhaseShiftN),
            _ => Err(Error::Invalid(format!("unknown sequence element `{token}`"))),
        }
    }
}

impl fmt::Display for PulseElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PulseElement::EvolveForward(d) => write!(f, "fwd:{d}"),
            PulseElement::EvolveReverse(d) => write!(f, "rev:{d}"),
            PulseElement::PhaseShiftA => f.write_str("pi_a"),
            PulseElement::PhaseShiftB => f.write_str("pi_b"),
            PulseElement::PhaseShiftN => f.write_str("pi_n"),
        }
    }
}

impl FromStr for PulseElement {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse_with(s, None)
    }
}

/// An ordered unit, executed `repetitions` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceSpec {
    pub elements: Vec<PulseElement>,
    pub repetitions: u32,
}

impl SequenceSpec {
    pub fn new(elements: Vec<PulseElement>, repetitions: u32) -> Result<Self> {
        let spec = Self { elements, repetitions };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::Invalid("repetitions must be at least 1".into()));
        }
        for e in &self.elements {
            if matches!(e, PulseElement::EvolveForward(_) | PulseElement::EvolveReverse(_))
                && !(e.duration() > 0.0 && e.duration().is_finite())
            {
                return Err(Error::Invalid(format!("non-positive duration in `{e}`")));
            }
        }
        Ok(())
    }

    pub fn with_repetitions(mut self, m: u32) -> Self {
        self.repetitions = m;
        self
    }

    pub fn unit_duration(&self) -> f64 {
        self.elements.iter().map(PulseElement::duration).sum()
    }

    /// `M · Σ durations`.
    pub fn total_duration(&self) -> f64 {
        f64::from(self.repetitions) * self.unit_duration()
    }

    /// A named protocol or an explicit element list; bare `fwd`/`rev` use `tau`.
    pub fn parse(text: &str, tau: f64) -> Result<Self> {
        let trimmed = text.trim();
        match trimmed.to_ascii_lowercase().as_str() {
            "pmdd" => return Ok(pmdd_unit(tau)),
            "ideal" => return Ok(ideal_unit(tau)),
            "baseline" => return Ok(baseline_unit(tau)),
            _ => {}
        }
        if trimmed.is_empty() {
            return Ok(Self { elements: Vec::new(), repetitions: 1 });
        }
        let elements = trimmed
            .split(',')
            .map(|tok| PulseElement::parse_with(tok, Some(tau)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(elements, 1)
    }
}

impl fmt::Display for SequenceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.elements.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(", "))
    }
}

/// `τ, π_a, τ, π_b, τ, π_a, τ`.
pub fn pmdd_unit(tau: f64) -> SequenceSpec {
    use PulseElement::*;
    SequenceSpec {
        elements: vec![
            EvolveForward(tau),
            PhaseShiftA,
            EvolveForward(tau),
            PhaseShiftB,
            EvolveForward(tau),
            PhaseShiftA,
            EvolveForward(tau),
        ],
        repetitions: 1,
    }
}

/// `U₊, U₋, π_N, U₊, U₋` in time order.
pub fn ideal_unit(tau: f64) -> SequenceSpec {
    use PulseElement::*;
    SequenceSpec {
        elements: vec![EvolveForward(tau), EvolveReverse(tau), PhaseShiftN, EvolveForward(tau), EvolveReverse(tau)],
        repetitions: 1,
    }
}

/// A single `U₊(τ)`, read out directly.
pub fn baseline_unit(tau: f64) -> SequenceSpec {
    SequenceSpec { elements: vec![PulseElement::EvolveForward(tau)], repetitions: 1 }
}

/// Net mode parity `e^{iπ(a·n_a + b·n_b)}` of the executed phase shifts.
///
/// For closed sequences (PMDD, ideal) the evolution segments reduce to a
/// spin phase times this parity, so it is the residual motional frame.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MotionalFrame {
    pub a: bool,
    pub b: bool,
}

impl MotionalFrame {
    pub const IDENTITY: Self = Self { a: false, b: false };

    pub fn is_identity(&self) -> bool {
        !self.a && !self.b
    }

    fn compose(self, (a, b): (bool, bool)) -> Self {
        Self { a: self.a ^ a, b: self.b ^ b }
    }
}

impl fmt::Display for MotionalFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match (self.a, self.b) {
            (false, false) => "identity",
            (true, false) => "exp(i pi n_a)",
            (false, true) => "exp(i pi n_b)",
            (true, true) => "exp(i pi N)",
        })
    }
}

/// Per-state health numbers; engine-specific fields are `None` elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateDiagnostics {
    pub norm: f64,
    pub spin_entropy: f64,
    /// Top-two-shell population (Fock engine).
    pub leakage: Option<f64>,
    /// Largest coherent amplitude (phase-space engine).
    pub max_amplitude: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    /// Position in the flattened run, `repetition · len + element`.
    pub index: usize,
    pub repetition: u32,
    pub element: PulseElement,
    pub diagnostics: StateDiagnostics,
}

#[derive(Debug, Clone)]
pub struct RunOutput<S> {
    pub state: S,
    pub trace: Vec<TraceEntry>,
    pub frame: MotionalFrame,
    pub total_duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Reverse,
}

/// One propagation backend.
pub trait Engine {
    type State: Clone + SpinState;
    fn name(&self) -> &'static str;
    fn evolve(&mut self, state: &Self::State, direction: Direction, t: f64) -> Result<Self::State>;
    fn phase_shift(&mut self, state: &Self::State, modes: ModeSet) -> Result<Self::State>;
    fn diagnose(&self, state: &Self::State) -> StateDiagnostics;
}

/// Coherent-state engine; exact, cutoff-free.
#[derive(Debug, Clone, Copy)]
pub struct PhasespaceEngine {
    pub params: PhysicalParams,
    pub factorization: Factorization,
}

impl PhasespaceEngine {
    pub fn new(params: PhysicalParams) -> Self {
        Self { params, factorization: Factorization::Ordered }
    }

    pub fn with_factorization(mut self, f: Factorization) -> Self {
        self.factorization = f;
        self
    }
}

impl Engine for PhasespaceEngine {
    type State = HybridState;

    fn name(&self) -> &'static str {
        "phasespace"
    }

    fn evolve(&mut self, state: &HybridState, direction: Direction, t: f64) -> Result<HybridState> {
        match direction {
            Direction::Forward => apply_u_plus_with(state, &self.params, t, self.factorization),
            Direction::Reverse => apply_u_minus_with(state, &self.params, t, self.factorization),
        }
    }

    fn phase_shift(&mut self, state: &HybridState, modes: ModeSet) -> Result<HybridState> {
        use std::f64::consts::PI;
        Ok(match modes {
            ModeSet::A => state.phase_shift(Mode::A, PI),
            ModeSet::B => state.phase_shift(Mode::B, PI),
            ModeSet::N => state.phase_shift(Mode::A, PI).phase_shift(Mode::B, PI),
        })
    }

    fn diagnose(&self, state: &HybridState) -> StateDiagnostics {
        StateDiagnostics {
            norm: state.norm_sqr().sqrt(),
            spin_entropy: state.reduced_spin().entropy(),
            leakage: None,
            max_amplitude: Some(state.max_amplitude()),
        }
    }
}

/// Truncated-Fock oracle engine. H₊ is decomposed once; U₋ reuses it via
/// `U₋ = e^{-iπn_a} U₊ e^{iπn_a}`.
pub struct FockEngine {
    pub params: PhysicalParams,
    pub config: FockConfig,
    propagator: StaticPropagator,
    parity_a: SparseMatrix,
    parity_b: SparseMatrix,
    parity_n: SparseMatrix,
}

impl FockEngine {
    pub fn new(params: PhysicalParams, config: FockConfig) -> Result<Self> {
        config.validate()?;
        let ops = build_operators(&config)?;
        let propagator = StaticPropagator::new(&hamiltonian_plus(&params, &ops))?;
        use std::f64::consts::PI;
        Ok(Self {
            params,
            config,
            propagator,
            parity_a: mode_phase_op(&ops, ModeSet::A, PI),
            parity_b: mode_phase_op(&ops, ModeSet::B, PI),
            parity_n: mode_phase_op(&ops, ModeSet::N, PI),
        })
    }

    fn check_leakage(&self, state: FockState) -> Result<FockState> {
        let leak = state.leakage();
        if leak > self.config.leakage_tol {
            Err(Error::Truncation { leakage: leak, tolerance: self.config.leakage_tol })
        } else {
            Ok(state)
        }
    }
}

impl Engine for FockEngine {
    type State = FockState;

    fn name(&self) -> &'static str {
        "fock"
    }

    fn evolve(&mut self, state: &FockState, direction: Direction, t: f64) -> Result<FockState> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::Invalid(format!("evolution time must be finite and non-negative, got {t}")));
        }
        let out = match direction {
            Direction::Forward => self.propagator.apply_state(state, t),
            Direction::Reverse => {
                let inner = self.propagator.apply_state(&state.apply(&self.parity_a), t);
                inner.apply(&self.parity_a)
            }
        };
        self.check_leakage(out)
    }

    fn phase_shift(&mut self, state: &FockState, modes: ModeSet) -> Result<FockState> {
        let op = match modes {
            ModeSet::A => &self.parity_a,
            ModeSet::B => &self.parity_b,
            ModeSet::N => &self.parity_n,
        };
        Ok(state.apply(op))
    }

    fn diagnose(&self, state: &FockState) -> StateDiagnostics {
        StateDiagnostics {
            norm: state.norm(),
            spin_entropy: state.spin_entropy(),
            leakage: Some(state.leakage()),
            max_amplitude: None,
        }
    }
}

/// Executes `spec` in time order, `spec.repetitions` times.
pub fn run<E: Engine>(spec: &SequenceSpec, initial: &E::State, engine: &mut E) -> Result<RunOutput<E::State>> {
    spec.validate()?;
    let mut state = initial.clone();
    let mut frame = MotionalFrame::IDENTITY;
    let mut trace = Vec::with_capacity(spec.elements.len() * spec.repetitions as usize);
    for rep in 0..spec.repetitions {
        for (k, element) in spec.elements.iter().enumerate() {
            let index = rep as usize * spec.elements.len() + k;
            let step = match *element {
                PulseElement::EvolveForward(d) => engine.evolve(&state, Direction::Forward, d),
                PulseElement::EvolveReverse(d) => engine.evolve(&state, Direction::Reverse, d),
                PulseElement::PhaseShiftA => engine.phase_shift(&state, ModeSet::A),
                PulseElement::PhaseShiftB => engine.phase_shift(&state, ModeSet::B),
                PulseElement::PhaseShiftN => engine.phase_shift(&state, ModeSet::N),
            };
            state = step.map_err(|e| Error::Element { index, source: Box::new(e) })?;
            frame = frame.compose(element.parity());
            trace.push(TraceEntry { index, repetition: rep, element: *element, diagnostics: engine.diagnose(&state) });
        }
    }
    Ok(RunOutput { state, trace, frame, total_duration: spec.total_duration() })
}
