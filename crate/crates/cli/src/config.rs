//! Run configuration: defaults, then a flat `key = value` file, then flags.
//!
//! Config files hold one `key = value` per line; `#` starts a comment. Lines
//! of the form `#% key = value` are entries too, which is how every CSV this
//! tool writes carries its own configuration. A JSON output file is accepted
//! as well (its `config` object is read).
//!
//! Keys, with defaults:
//!
//! | key | default | meaning |
//! |---|---|---|
//! | `command` | (invoked) | must match the subcommand if present |
//! | `omega` | 0.8 | rotation rate Ω (rad/s) |
//! | `alpha`, `beta` | 0.5, 0.25 | drive strengths (rad/s) |
//! | `tau` | 1 | segment duration (s); also the readout time of `disambiguate` |
//! | `reps` | 1 | number of sequence units M |
//! | `trap_x`, `trap_y`, `trap_z`, `drive_freq` | 100, 100, 10, 100 | lab-frame frequencies (rad/s) |
//! | `engine` | phasespace | `phasespace` or `fock` |
//! | `factorization` | completed_square | `ordered` or `completed_square` |
//! | `cutoff_a`, `cutoff_b` | 40 (12 for `validate-rwa`) | Fock cutoffs |
//! | `leakage_tol` | 1e-10 | tolerated top-shell population |
//! | `sequence` | pmdd | `pmdd`, `ideal`, `baseline` or an explicit element list |
//! | `min`, `max`, `points` | per command | scan or search range |
//! | `slope` | false | add the engine ∂P/∂τ column to scans |
//! | `target` | 0.5 | measured population for `disambiguate` |
//! | `min_ratio` | unset | `disambiguate` threshold on adjacent slope ratios |
//! | `total_time` | unset | extra `sensitivity` row at this total time |
//! | `reps_list` | 1,2,4,8,16 | `sensitivity` rows |
//! | `fidelity_threshold` | 1e-8 | `compare-oracle` tolerated infidelity |
//! | `rwa_ratios` | 200,400,800,1600 | ω/α ladder for `validate-rwa` |
//! | `rwa_step_fraction` | 0.05 | integrator step as a fraction of 1/ω_max |
//! | `format` | csv | `csv` or `json` |
//! | `seed` | unset | reserved; all runs are deterministic |

use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use sagnac_core::fock::FockConfig;
use sagnac_core::metrology::{EngineKind, SequenceKind};
use sagnac_core::phasespace::Factorization;
use sagnac_core::PhysicalParams;

use crate::error::CliError;
use crate::output::format_f64 as fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    ScanOmega,
    ScanTime,
    Sensitivity,
    Disambiguate,
    CompareOracle,
    ValidateRwa,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::ScanOmega => "scan-omega",
            Command::ScanTime => "scan-time",
            Command::Sensitivity => "sensitivity",
            Command::Disambiguate => "disambiguate",
            Command::CompareOracle => "compare-oracle",
            Command::ValidateRwa => "validate-rwa",
        }
    }

    /// (min, max, points) used when the range is not configured.
    fn default_range(self) -> (f64, f64, usize) {
        match self {
            Command::ScanTime => (0.05, 2.0, 101),
            Command::Disambiguate => (1e-3, 30.0, 10_000),
            _ => (0.0, 3.0, 101),
        }
    }

    fn default_cutoff(self) -> usize {
        match self {
            Command::ValidateRwa => 12,
            _ => 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Fully resolved configuration for one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub params: PhysicalParams,
    pub engine: String,
    pub factorization: Factorization,
    pub cutoff_a: usize,
    pub cutoff_b: usize,
    pub leakage_tol: f64,
    pub sequence: String,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub slope: bool,
    pub target: f64,
    pub min_ratio: Option<f64>,
    pub total_time: Option<f64>,
    pub reps_list: Vec<u32>,
    pub fidelity_threshold: f64,
    pub rwa_ratios: Vec<f64>,
    pub rwa_step_fraction: f64,
    pub format: Format,
    pub seed: Option<u64>,
}

/// Raw `key = value` pairs in the order they were given; later wins.
#[derive(Debug, Default, Clone)]
pub struct Entries(pub Vec<(String, String)>);

impl Entries {
    pub fn push(&mut self, key: &str, value: &str) {
        self.0.push((key.trim().to_string(), value.trim().to_string()));
    }

    pub fn parse_flat(text: &str, origin: &str) -> Result<Self, CliError> {
        // An emitted table: only its `#%` header lines are configuration.
        let table = text.starts_with(crate::output::CSV_MAGIC);
        let mut out = Entries::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let body = match line.strip_prefix("#%") {
                Some(rest) => rest,
                None if table || line.starts_with('#') => continue,
                None => line.split('#').next().unwrap_or(""),
            };
            if body.trim().is_empty() {
                continue;
            }
            let (k, v) = body
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("{origin}:{}: expected key = value", no + 1)))?;
            out.push(k, v);
        }
        Ok(out)
    }

    fn parse_json(text: &str, origin: &str) -> Result<Self, CliError> {
        let doc: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::config(format!("{origin}: {e}")))?;
        let map = doc
            .get("config")
            .and_then(|c| c.as_object())
            .ok_or_else(|| CliError::config(format!("{origin}: no `config` object")))?;
        let mut out = Entries::default();
        for (k, v) in map {
            let text = match v {
                serde_json::Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            out.push(k, &text);
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        let origin = path.display().to_string();
        if text.trim_start().starts_with('{') {
            Self::parse_json(&text, &origin)
        } else {
            Self::parse_flat(&text, &origin)
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: Display,
{
    value.parse::<T>().map_err(|e| CliError::config(format!("{key}: cannot parse `{value}`: {e}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, CliError>
where
    T::Err: Display,
{
    value.split(',').map(|v| parse(key, v.trim())).collect()
}

fn join<T: Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    pub fn resolve(command: Command, entries: &Entries) -> Result<Self, CliError> {
        let (min, max, points) = command.default_range();
        let cutoff = command.default_cutoff();
        let mut c = RunConfig {
            command,
            params: PhysicalParams::default(),
            engine: "phasespace".into(),
            factorization: Factorization::CompletedSquare,
            cutoff_a: cutoff,
            cutoff_b: cutoff,
            leakage_tol: FockConfig::default().leakage_tol,
            sequence: "pmdd".into(),
            min,
            max,
            points,
            slope: false,
            target: 0.5,
            min_ratio: None,
            total_time: None,
            reps_list: vec![1, 2, 4, 8, 16],
            fidelity_threshold: 1e-8,
            rwa_ratios: vec![200.0, 400.0, 800.0, 1600.0],
            rwa_step_fraction: 0.05,
            format: Format::Csv,
            seed: None,
        };
        for (k, v) in &entries.0 {
            c.set(k, v)?;
        }
        c.validate()?;
        Ok(c)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let p = &mut self.params;
        match key {
            "command" => {
                if value != self.command.name() {
                    return Err(CliError::config(format!(
                        "config was written by `{value}` but `{}` was invoked",
                        self.command.name()
                    )));
                }
            }
            "omega" => p.omega_rot = parse(key, value)?,
            "alpha" => p.alpha = parse(key, value)?,
            "beta" => p.beta = parse(key, value)?,
            "tau" => p.tau = parse(key, value)?,
            "reps" => p.repetitions = parse(key, value)?,
            "trap_x" => p.trap_freqs.0 = parse(key, value)?,
            "trap_y" => p.trap_freqs.1 = parse(key, value)?,
            "trap_z" => p.trap_freqs.2 = parse(key, value)?,
            "drive_freq" => p.drive_freq = parse(key, value)?,
            "engine" => match value {
                "phasespace" | "fock" => self.engine = value.into(),
                _ => return Err(CliError::config(format!("engine must be phasespace or fock, got `{value}`"))),
            },
            "factorization" => {
                self.factorization = match value {
                    "ordered" => Factorization::Ordered,
                    "completed_square" => Factorization::CompletedSquare,
                    _ => {
                        return Err(CliError::config(format!(
                            "factorization must be ordered or completed_square, got `{value}`"
                        )))
                    }
                }
            }
            "cutoff_a" => self.cutoff_a = parse(key, value)?,
            "cutoff_b" => self.cutoff_b = parse(key, value)?,
            "leakage_tol" => self.leakage_tol = parse(key, value)?,
            "sequence" => self.sequence = value.into(),
            "min" => self.min = parse(key, value)?,
            "max" => self.max = parse(key, value)?,
            "points" => self.points = parse(key, value)?,
            "slope" => self.slope = parse(key, value)?,
            "target" => self.target = parse(key, value)?,
            "min_ratio" => self.min_ratio = Some(parse(key, value)?),
            "total_time" => self.total_time = Some(parse(key, value)?),
            "reps_list" => self.reps_list = parse_list(key, value)?,
            "fidelity_threshold" => self.fidelity_threshold = parse(key, value)?,
            "rwa_ratios" => self.rwa_ratios = parse_list(key, value)?,
            "rwa_step_fraction" => self.rwa_step_fraction = parse(key, value)?,
            "format" => {
                self.format = match value {
                    "csv" => Format::Csv,
                    "json" => Format::Json,
                    _ => return Err(CliError::config(format!("format must be csv or json, got `{value}`"))),
                }
            }
            "seed" => self.seed = Some(parse(key, value)?),
            _ => return Err(CliError::config(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), CliError> {
        self.params.validate().map_err(|e| CliError::config(e.to_string()))?;
        self.fock_config().validate().map_err(|e| CliError::config(e.to_string()))?;
        self.sequence_kind()
            .build(&self.params)
            .map_err(|e| CliError::config(format!("sequence: {e}")))?;
        let check = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(CliError::config(msg.to_string())) };
        check(self.points >= 1, "points must be at least 1")?;
        check(self.min.is_finite() && self.max.is_finite() && self.min <= self.max, "need finite min <= max")?;
        check(self.points == 1 || self.min < self.max, "a multi-point range needs min < max")?;
        check(self.target.is_finite(), "target must be finite")?;
        check(!self.reps_list.is_empty() && self.reps_list.iter().all(|&m| m >= 1), "reps_list entries must be >= 1")?;
        check(self.total_time.map_or(true, |t| t > 0.0 && t.is_finite()), "total_time must be positive")?;
        check(self.fidelity_threshold >= 0.0, "fidelity_threshold must be non-negative")?;
        check(!self.rwa_ratios.is_empty() && self.rwa_ratios.iter().all(|&r| r > 0.0), "rwa_ratios must be positive")?;
        check(self.rwa_step_fraction > 0.0 && self.rwa_step_fraction.is_finite(), "rwa_step_fraction must be positive")?;
        Ok(())
    }

    pub fn fock_config(&self) -> FockConfig {
        FockConfig::new(self.cutoff_a, self.cutoff_b).with_leakage_tol(self.leakage_tol)
    }

    pub fn engine_kind(&self) -> EngineKind {
        match self.engine.as_str() {
            "fock" => EngineKind::Fock(self.fock_config()),
            _ => EngineKind::Phasespace(self.factorization),
        }
    }

    pub fn sequence_kind(&self) -> SequenceKind {
        SequenceKind::parse(&self.sequence)
    }

    /// Every key needed to reproduce the run, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let p = &self.params;
        let mut out = vec![
            ("command", self.command.name().to_string()),
            ("omega", fmt(p.omega_rot)),
            ("alpha", fmt(p.alpha)),
            ("beta", fmt(p.beta)),
            ("tau", fmt(p.tau)),
            ("reps", p.repetitions.to_string()),
            ("trap_x", fmt(p.trap_freqs.0)),
            ("trap_y", fmt(p.trap_freqs.1)),
            ("trap_z", fmt(p.trap_freqs.2)),
            ("drive_freq", fmt(p.drive_freq)),
            ("engine", self.engine.clone()),
            (
                "factorization",
                match self.factorization {
                    Factorization::Ordered => "ordered",
                    Factorization::CompletedSquare => "completed_square",
                }
                .to_string(),
            ),
            ("cutoff_a", self.cutoff_a.to_string()),
            ("cutoff_b", self.cutoff_b.to_string()),
            ("leakage_tol", fmt(self.leakage_tol)),
            ("sequence", self.sequence.clone()),
            ("min", fmt(self.min)),
            ("max", fmt(self.max)),
            ("points", self.points.to_string()),
            ("slope", self.slope.to_string()),
            ("target", fmt(self.target)),
        ];
        if let Some(r) = self.min_ratio {
            out.push(("min_ratio", fmt(r)));
        }
        if let Some(t) = self.total_time {
            out.push(("total_time", fmt(t)));
        }
        out.extend([
            ("reps_list", join(&self.reps_list)),
            ("fidelity_threshold", fmt(self.fidelity_threshold)),
            ("rwa_ratios", self.rwa_ratios.iter().map(|&r| fmt(r)).collect::<Vec<_>>().join(",")),
            ("rwa_step_fraction", fmt(self.rwa_step_fraction)),
            ("format", match self.format {
                Format::Csv => "csv",
                Format::Json => "json",
            }
            .to_string()),
        ]);
        if let Some(s) = self.seed {
            out.push(("seed", s.to_string()));
        }
        out
    }
}
