use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use odebayes::evaluation::psis_smooth;
use odebayes::models::{ModelKind, Prostate};
use odebayes::ode::{solve_with_sensitivities, ForcingSchedule, SolverConfig};
use odebayes::samplers::{run_chain, SamplerConfig};
use odebayes::target::{DiagNormal, LogDensity};
use odebayes_bench::{cohort_target, heavy_tailed_ratios};

fn solver(c: &mut Criterion) {
    let system = Prostate { p0: 2.0, p0_from_data: false, ..Prostate::default() };
    let xi = [0.4, 0.5, 0.8, 1.2, 0.6];
    let forcing = ForcingSchedule::from_on_intervals(&[(0.0, 6.0), (14.0, 20.0)]).unwrap();
    let ts: Vec<f64> = (0..=28).map(f64::from).collect();
    let cfg = SolverConfig::default();
    c.bench_function("prostate solve with sensitivities", |b| {
        b.iter(|| solve_with_sensitivities(&system, black_box(&xi), &ts, &cfg, &forcing).unwrap())
    });
}

fn gradient(c: &mut Criterion) {
    for kind in [ModelKind::Toy, ModelKind::Prostate] {
        let t = cohort_target(kind, 1);
        let x = vec![0.1; t.dim()];
        let mut g = vec![0.0; t.dim()];
        c.bench_function(&format!("{kind} log density and gradient"), |b| {
            b.iter(|| t.log_density_and_grad(black_box(&x), &mut g))
        });
    }
}

fn nuts(c: &mut Criterion) {
    let target = DiagNormal::standard(10);
    let cfg = SamplerConfig { n_chains: 1, n_warmup: 100, n_draws: 100, seed: 3, ..SamplerConfig::default() };
    c.bench_function("nuts 200 iterations, 10-d normal", |b| b.iter(|| run_chain(&target, black_box(&cfg), 0).unwrap()));
}

fn psis(c: &mut Criterion) {
    let r = heavy_tailed_ratios(4000);
    c.bench_function("psis smoothing, 4000 draws", |b| b.iter(|| psis_smooth(black_box(&r))));
}

criterion_group!(benches, solver, gradient, nuts, psis);
criterion_main!(benches);
