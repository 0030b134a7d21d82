//! Subcommand implementations. Each returns its table plus a short human
//! summary; a threshold failure still carries the table so it can be written.

use sagnac_core::fock::{build_operators, fidelity, hamiltonian_plus, propagate_timedep, StaticPropagator, TimeDepOptions};
use sagnac_core::metrology::{
    disambiguate_with, dp_domega, linear_grid, scan, sensitivity, sensitivity_for_total_time, simulate,
    DisambiguateOptions, ScanAxis, ScanRequest, Sensitivity,
};
use sagnac_core::phasespace::HybridState;
use sagnac_core::sequence::{run, FockEngine, PhasespaceEngine};
use sagnac_core::{Error as CoreError, SequenceSpec, SpinState};

use crate::config::{Command, RunConfig};
use crate::error::CliError;
use crate::output::{Cell, Table};

pub struct Outcome {
    pub table: Table,
    pub summary: Vec<String>,
    pub failure: Option<CliError>,
}

impl Outcome {
    fn ok(table: Table, summary: Vec<String>) -> Self {
        Self { table, summary, failure: None }
    }
}

pub fn execute(cfg: &RunConfig) -> Result<Outcome, CliError> {
    match cfg.command {
        Command::Simulate => cmd_simulate(cfg),
        Command::ScanOmega => cmd_scan(cfg, ScanAxis::Omega),
        Command::ScanTime => cmd_scan(cfg, ScanAxis::Time),
        Command::Sensitivity => cmd_sensitivity(cfg),
        Command::Disambiguate => cmd_disambiguate(cfg),
        Command::CompareOracle => cmd_compare_oracle(cfg),
        Command::ValidateRwa => cmd_validate_rwa(cfg),
    }
}

fn cmd_simulate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let spec = cfg.sequence_kind().build(&cfg.params)?;
    let sim = simulate(&cfg.params, &cfg.engine_kind(), &spec)?;
    let closed = cfg.sequence_kind().closed_form(&cfg.params).transpose()?;
    let diag = sim.trace.iter().map(|e| e.diagnostics);
    let max_of = |f: fn(&sagnac_core::sequence::StateDiagnostics) -> Option<f64>| {
        diag.clone().filter_map(|d| f(&d)).fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))))
    };
    let entropy = sim.trace.last().map(|e| e.diagnostics.spin_entropy);
    let mut t = Table::new(vec![
        "engine",
        "sequence",
        "p_down",
        "p_closed",
        "contrast",
        "rel_phase",
        "frame",
        "total_duration",
        "spin_entropy",
        "max_leakage",
        "max_amplitude",
    ]);
    t.push(vec![
        Cell::Text(cfg.engine.clone()),
        Cell::Text(cfg.sequence_kind().label()),
        sim.readout.p_down.into(),
        closed.into(),
        sim.readout.contrast.into(),
        sim.readout.rel_phase.into(),
        Cell::Text(sim.frame.to_string()),
        sim.total_duration.into(),
        entropy.into(),
        max_of(|d| d.leakage).into(),
        max_of(|d| d.max_amplitude).into(),
    ]);
    let summary = vec![format!(
        "p_down = {:.12}, contrast = {:.12}, relative phase = {:.12} rad, motional frame {}",
        sim.readout.p_down, sim.readout.contrast, sim.readout.rel_phase, sim.frame
    )];
    Ok(Outcome::ok(t, summary))
}

fn cmd_scan(cfg: &RunConfig, axis: ScanAxis) -> Result<Outcome, CliError> {
    let req = ScanRequest {
        params: cfg.params,
        engine: cfg.engine_kind(),
        sequence: cfg.sequence_kind(),
        axis,
        grid: linear_grid(cfg.min, cfg.max, cfg.points)?,
        with_slope: cfg.slope,
        with_sensitivity: axis == ScanAxis::Omega,
    };
    let res = scan(&req)?;
    let mut t = Table::new(vec![axis.name(), "p_down", "p_closed", "contrast", "rel_phase", "slope_dtau", "sensitivity"]);
    let mut worst: Option<f64> = None;
    for r in &res.rows {
        if let Some(c) = r.p_closed {
            let d = (r.p_down - c).abs();
            worst = Some(worst.map_or(d, |w: f64| w.max(d)));
        }
        t.push(vec![
            r.x.into(),
            r.p_down.into(),
            r.p_closed.into(),
            r.contrast.into(),
            r.rel_phase.into(),
            r.slope.into(),
            r.sensitivity.into(),
        ]);
    }
    let mut summary = vec![format!("{} points over {} in [{}, {}]", res.rows.len(), axis.name(), cfg.min, cfg.max)];
    if let Some(w) = worst {
        summary.push(format!("max |p_down - closed form| = {w:.3e}"));
    }
    Ok(Outcome::ok(t, summary))
}

fn sensitivity_row(t: &mut Table, units: f64, total: f64, s: Result<Sensitivity, CoreError>) -> Result<bool, CliError> {
    match s {
        Ok(s) => {
            t.push(vec![
                units.into(),
                total.into(),
                s.theta.into(),
                s.closed_form.into(),
                s.projection_noise.into(),
                s.small_angle.into(),
                s.ratio.into(),
                (s.projection_noise * units.sqrt()).into(),
                false.into(),
            ]);
            Ok(false)
        }
        Err(CoreError::DeadPoint { theta }) => {
            let m = Cell::Missing;
            t.push(vec![units.into(), total.into(), theta.into(), m.clone(), m.clone(), m.clone(), m.clone(), m, true.into()]);
            Ok(true)
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_sensitivity(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let mut t = Table::new(vec![
        "units",
        "total_time",
        "theta",
        "unit_shot",
        "projection_noise",
        "small_angle",
        "unit_shot_over_small_angle",
        "projection_noise_times_sqrt_units",
        "dead_point",
    ]);
    let mut dead = 0;
    for &m in &cfg.reps_list {
        let p = cfg.params.with_repetitions(m);
        dead += usize::from(sensitivity_row(&mut t, f64::from(m), p.total_time(), sensitivity(&p))?);
    }
    let mut summary = Vec::new();
    if let Some(total) = cfg.total_time {
        let units = total / (4.0 * cfg.params.tau);
        let s = sensitivity_for_total_time(&cfg.params, total);
        if let Ok(s) = &s {
            summary.push(format!("at total time {total} s: {:.4e} (rad/s)/sqrt(Hz) with projection noise", s.projection_noise));
        }
        dead += usize::from(sensitivity_row(&mut t, units, total, s)?);
    }
    if let Ok(d) = dp_domega(&cfg.params) {
        summary.push(format!("dP/dOmega at the configured point: {d:.6e}"));
    }
    if dead > 0 {
        summary.push(format!("{dead} dead-point row(s): slope vanishes, sensitivity undefined"));
    }
    Ok(Outcome::ok(t, summary))
}

fn cmd_disambiguate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let opts = DisambiguateOptions { grid_points: cfg.points.max(2), ..DisambiguateOptions::default() };
    let d = disambiguate_with(cfg.target, cfg.params.tau, &cfg.params, (cfg.min, cfg.max), &opts)?;
    let mut t = Table::new(vec!["index", "omega", "slope_dtau", "ratio_to_previous", "separation_from_previous", "unresolved_with"]);
    for (i, c) in d.candidates.iter().enumerate() {
        let (ratio, sep) = match i.checked_sub(1).map(|j| d.candidates[j].slope.abs()) {
            Some(prev) => {
                let cur = c.slope.abs();
                (Some(cur.max(prev) / cur.min(prev)), Some((cur - prev).abs()))
            }
            None => (None, None),
        };
        let twins: Vec<String> = d
            .unresolved_pairs
            .iter()
            .filter_map(|&(a, b)| if a == i { Some(b) } else if b == i { Some(a) } else { None })
            .map(|k| k.to_string())
            .collect();
        t.push(vec![i.into(), c.omega.into(), c.slope.into(), ratio.into(), sep.into(), Cell::Text(twins.join(" "))]);
    }
    let mut summary = vec![format!(
        "{} candidate(s) for P = {} at t = {} s; min adjacent slope ratio {}",
        d.candidates.len(),
        cfg.target,
        cfg.params.tau,
        d.min_adjacent_ratio.map_or("n/a".into(), |r| format!("{r:.4}"))
    )];
    let mut out = Outcome::ok(t, Vec::new());
    if let Some(need) = cfg.min_ratio {
        match d.min_adjacent_ratio {
            Some(r) if r >= need => summary.push(format!("ratio threshold {need} met")),
            other => {
                out.failure = Some(CliError::threshold(format!(
                    "min adjacent slope ratio {} below required {need}",
                    other.map_or("n/a".into(), |r| format!("{r:.4}"))
                )))
            }
        }
    }
    out.summary = summary;
    Ok(out)
}

fn cmd_compare_oracle(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let spec = cfg.sequence_kind().build(&cfg.params)?;
    // Leakage is reported, not fatal, so that a too-small cutoff yields a report.
    let fock_cfg = cfg.fock_config().with_leakage_tol(1.0);
    let mut oracle = FockEngine::new(cfg.params, fock_cfg)?;
    let mut analytic = PhasespaceEngine::new(cfg.params).with_factorization(cfg.factorization);
    let mut ps = HybridState::plus_vacuum();
    let mut fk = ps.to_fock(&fock_cfg)?;
    let mut t = Table::new(vec![
        "step",
        "repetition",
        "element",
        "fidelity",
        "leakage",
        "max_amplitude",
        "spin_entropy_oracle",
        "spin_entropy_analytic",
    ]);
    let mut worst_leak: f64 = fk.leakage();
    let mut final_fid = fidelity(&fk, &ps.to_fock(&fock_cfg)?);
    let mut step = 0usize;
    for rep in 0..spec.repetitions {
        for el in &spec.elements {
            let one = SequenceSpec::new(vec![*el], 1)?;
            let a = run(&one, &ps, &mut analytic)?;
            let o = run(&one, &fk, &mut oracle)?;
            ps = a.state;
            fk = o.state;
            let leak = fk.leakage();
            worst_leak = worst_leak.max(leak);
            final_fid = fidelity(&fk, &ps.to_fock(&fock_cfg)?);
            t.push(vec![
                step.into(),
                rep.into(),
                Cell::Text(el.to_string()),
                final_fid.into(),
                leak.into(),
                ps.max_amplitude().into(),
                fk.spin_entropy().into(),
                ps.reduced_spin().entropy().into(),
            ]);
            step += 1;
        }
    }
    let infid = 1.0 - final_fid;
    let summary = vec![format!("final infidelity {infid:.3e}, max leakage {worst_leak:.3e} over {step} element(s)")];
    let mut out = Outcome::ok(t, summary);
    if worst_leak > cfg.leakage_tol {
        out.failure = Some(CliError::threshold(format!(
            "leakage {worst_leak:.3e} exceeds {:.3e}; raise cutoff_a/cutoff_b",
            cfg.leakage_tol
        )));
    } else if !(infid <= cfg.fidelity_threshold) {
        out.failure = Some(CliError::threshold(format!("infidelity {infid:.3e} exceeds {:.3e}", cfg.fidelity_threshold)));
    }
    Ok(out)
}

fn cmd_validate_rwa(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let fock_cfg = cfg.fock_config();
    let ops = build_operators(&fock_cfg)?;
    let t_total = cfg.params.tau;
    let s0 = HybridState::plus_vacuum().to_fock(&fock_cfg)?;
    let rwa = StaticPropagator::new(&hamiltonian_plus(&cfg.params, &ops))?.apply_state(&s0, t_total);
    let mut t = Table::new(vec![
        "ratio",
        "trap_freq",
        "fidelity",
        "infidelity",
        "error_estimate",
        "error_estimate_half_step",
        "halving_gain",
        "steps",
    ]);
    let mut infid = Vec::new();
    let mut gains = Vec::new();
    for &ratio in &cfg.rwa_ratios {
        let w = ratio * cfg.params.alpha;
        let p = sagnac_core::PhysicalParams { trap_freqs: (w, w, cfg.params.trap_freqs.2), drive_freq: w, ..cfg.params };
        let opts = TimeDepOptions::resolving(&p, cfg.rwa_step_fraction);
        let coarse = propagate_timedep(&s0, &p, &ops, t_total, &opts)?;
        let fine = propagate_timedep(&s0, &p, &ops, t_total, &TimeDepOptions { dt: opts.dt / 2.0, ..opts })?;
        let f = fidelity(&rwa, &fine.state);
        let gain = coarse.error_estimate / fine.error_estimate;
        infid.push(1.0 - f);
        gains.push(gain);
        t.push(vec![
            ratio.into(),
            w.into(),
            f.into(),
            (1.0 - f).into(),
            coarse.error_estimate.into(),
            fine.error_estimate.into(),
            gain.into(),
            fine.steps.into(),
        ]);
    }
    let monotone = infid.windows(2).all(|w| w[1] < w[0]);
    let mut summary = vec![format!(
        "infidelity {} as w/alpha doubles",
        if monotone { "decreases monotonically" } else { "is NOT monotone" }
    )];
    if let Some(g) = gains.iter().copied().reduce(f64::min) {
        summary.push(format!("smallest step-halving error gain {g:.2}"));
    }
    let mut out = Outcome::ok(t, summary);
    if 1.0 - infid[0] < 0.99 {
        out.failure = Some(CliError::threshold(format!("fidelity {:.6} at the first ratio is below 0.99", 1.0 - infid[0])));
    } else if !monotone {
        out.failure = Some(CliError::threshold("infidelity does not decrease monotonically with the ratio"));
    } else if gains.iter().any(|&g| !(g >= 4.0)) {
        out.failure = Some(CliError::threshold("halving the step shrank the error estimate by less than 4x"));
    }
    Ok(out)
}
