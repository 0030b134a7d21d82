use criterion::{black_box, criterion_group, criterion_main, Criterion};
use sagnac_core::fock::{build_operators, hamiltonian_plus, propagate_timedep, FockConfig, StaticPropagator, TimeDepOptions};
use sagnac_core::metrology::{simulate, EngineKind};
use sagnac_core::phasespace::{Factorization, HybridState};
use sagnac_core::sequence::{pmdd_unit, run, FockEngine};
use sagnac_core::PhysicalParams;

fn params() -> PhysicalParams {
    PhysicalParams::new(0.8, 0.5, 0.5, 1.0)
}

fn propagator(c: &mut Criterion) {
    let mut g = c.benchmark_group("propagator");
    g.sample_size(10);
    for n in [20, 40] {
        let ops = build_operators(&FockConfig::new(n, n)).unwrap();
        let h = hamiltonian_plus(&params(), &ops);
        g.bench_function(format!("decompose_h_plus_{n}x{n}"), |b| b.iter(|| StaticPropagator::new(black_box(&h)).unwrap()));
    }
    g.finish();
}

fn engines(c: &mut Criterion) {
    let p = params();
    c.bench_function("phasespace_pmdd_unit", |b| {
        let spec = pmdd_unit(p.tau);
        b.iter(|| simulate(black_box(&p), &EngineKind::Phasespace(Factorization::CompletedSquare), &spec).unwrap())
    });
    let cfg = FockConfig::new(40, 40);
    let mut engine = FockEngine::new(p, cfg).unwrap();
    let s0 = HybridState::plus_vacuum().to_fock(&cfg).unwrap();
    let spec = pmdd_unit(p.tau);
    c.bench_function("fock_pmdd_unit_cached_40x40", |b| b.iter(|| run(&spec, black_box(&s0), &mut engine).unwrap()));
}

fn timedep(c: &mut Criterion) {
    let cfg = FockConfig::new(12, 12);
    let ops = build_operators(&cfg).unwrap();
    let w = 200.0;
    let p = PhysicalParams { trap_freqs: (w, w, 10.0), drive_freq: w, ..PhysicalParams::new(0.8, 1.0, 0.5, 0.5) };
    let s0 = HybridState::plus_vacuum().to_fock(&cfg).unwrap();
    let opts = TimeDepOptions::resolving(&p, 0.05);
    let mut g = c.benchmark_group("timedep");
    g.sample_size(10);
    g.bench_function("lab_frame_ratio_200_12x12", |b| b.iter(|| propagate_timedep(black_box(&s0), &p, &ops, 0.5, &opts).unwrap()));
    g.finish();
}

criterion_group!(benches, propagator, engines, timedep);
criterion_main!(benches);
