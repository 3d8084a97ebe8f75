//! Fixtures shared by the benchmarks.

use odebayes::models::{make_model, simulate_cohort, BuiltinSystem, CohortSpec, ModelKind, ModelOverrides};
use odebayes::ode::SolverConfig;
use odebayes::target::OdeTarget;

/// A model's default target on its default simulated cohort.
pub fn cohort_target(kind: ModelKind, seed: u64) -> OdeTarget<BuiltinSystem> {
    let bundle = make_model(kind, &ModelOverrides::default()).expect("built-in model");
    let data = simulate_cohort(kind, &ModelOverrides::default(), &CohortSpec::default_for(kind), seed, &SolverConfig::default())
        .expect("default cohort");
    OdeTarget::new(bundle.model, data, &bundle.pooling, SolverConfig::default()).expect("target")
}

/// Log-likelihood-like values with a heavy right tail, `n` per observation.
pub fn heavy_tailed_ratios(n: usize) -> Vec<f64> {
    (1..=n).map(|i| -((i as f64 / (n + 1) as f64).ln()) * 0.8).collect()
}
