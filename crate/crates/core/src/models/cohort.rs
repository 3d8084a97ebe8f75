use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::model::{simulate_groups, Dataset, GroupDesign, ModelError};
use crate::ode::{ForcingSchedule, SolverConfig};

use super::{make_model, ModelKind, ModelOverrides};

/// `count` evenly spaced times from `start` to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl TimeGrid {
    pub fn new(start: f64, stop: f64, count: usize) -> Self {
        Self { start, stop, count }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::InvalidModel(format!("time grid: {m}")));
        if self.count == 0 {
            return bad("count must be at least 1".into());
        }
        if !self.start.is_finite() || !self.stop.is_finite() {
            return bad("start and stop must be finite".into());
        }
        if self.count > 1 && self.stop <= self.start {
            return bad(format!("stop {} must exceed start {}", self.stop, self.start));
        }
        Ok(())
    }

    pub fn times(&self) -> Result<Vec<f64>, ModelError> {
        self.validate()?;
        if self.count == 1 {
            return Ok(vec![self.start]);
        }
        let h = (self.stop - self.start) / (self.count - 1) as f64;
        let mut t: Vec<f64> = (0..self.count).map(|i| self.start + h * i as f64).collect();
        t[self.count - 1] = self.stop;
        Ok(t)
    }
}

/// Design of a synthetic dataset: every group shares the observation times
/// and treatment schedule, and its parameters scatter around `theta` with
/// standard deviation `group_sd` on the unconstrained scale.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortSpec {
    /// Typical constrained value of every model parameter.
    pub theta: BTreeMap<String, f64>,
    pub group_sd: f64,
    pub times: TimeGrid,
    pub n_groups: usize,
    /// Treatment-on intervals `[on, off)`.
    pub treatments: Vec<(f64, f64)>,
    /// Initial-state overrides used only to generate the data.
    pub initial: BTreeMap<String, f64>,
    pub id_prefix: String,
}

impl CohortSpec {
    /// Toy: six wells sampled every 4 h over 48 h. Coral: three sites over
    /// ten annual surveys. Prostate: ten patients observed monthly over two
    /// treatment cycles of six months on, eight off.
    pub fn default_for(kind: ModelKind) -> Self {
        let named = |names: &[&str], vals: &[f64]| names.iter().map(|n| n.to_string()).zip(vals.iter().copied()).collect();
        match kind {
            ModelKind::Toy => Self {
                theta: named(
                    &["p[1]", "p[2]", "p[3]", "y0[1]", "y0[2]", "sigma"],
                    &[0.14, 0.12, 4.04, 1.24, 0.72, 0.18],
                ),
                group_sd: 0.0,
                times: TimeGrid::new(0.0, 48.0, 13),
                n_groups: 6,
                treatments: Vec::new(),
                initial: BTreeMap::new(),
                id_prefix: "W".into(),
            },
            ModelKind::Coral => Self {
                theta: named(&["alpha", "beta", "gamma", "mu", "sigma"], &[0.6, 0.2, 0.1, 0.3, 0.02]),
                group_sd: 0.0,
                times: TimeGrid::new(0.0, 10.0, 11),
                n_groups: 3,
                treatments: Vec::new(),
                initial: BTreeMap::new(),
                id_prefix: "S".into(),
            },
            ModelKind::Prostate => Self {
                theta: named(
                    &["p", "lambda", "alpha", "rho", "phi", "sigma", "sigma_prop"],
                    &[0.4, 0.5, 0.8, 1.2, 0.6, 0.15, 0.08],
                ),
                group_sd: 0.25,
                times: TimeGrid::new(0.0, 28.0, 29),
                n_groups: 10,
                treatments: vec![(0.0, 6.0), (14.0, 20.0)],
                initial: BTreeMap::from([("P0".to_string(), 2.0)]),
                id_prefix: "P".into(),
            },
        }
    }

    pub fn group_ids(&self) -> Vec<String> {
        let w = self.n_groups.to_string().len();
        (1..=self.n_groups).map(|g| format!("{}{g:0w$}", self.id_prefix)).collect()
    }
}

/// Simulates a cohort. Group parameters and observation noise come from
/// separate streams of `seed`.
pub fn simulate_cohort(
    kind: ModelKind,
    overrides: &ModelOverrides,
    spec: &CohortSpec,
    seed: u64,
    solver: &SolverConfig,
) -> Result<Dataset, ModelError> {
    let mut sim_overrides = overrides.clone();
    sim_overrides.initial.extend(spec.initial.iter().map(|(k, v)| (k.clone(), *v)));
    let model = make_model(kind, &sim_overrides)?.model;
    let space = &model.space;
    for name in spec.theta.keys() {
        if space.index_of(name).is_none() {
            return Err(ModelError::UnknownOverride(name.clone()));
        }
    }
    let theta: Vec<f64> = space
        .names()
        .iter()
        .map(|n| {
            spec.theta
                .get(n)
                .copied()
                .ok_or_else(|| ModelError::InvalidModel(format!("no simulation value for parameter {n}")))
        })
        .collect::<Result<_, _>>()?;
    if !(spec.group_sd >= 0.0 && spec.group_sd.is_finite()) {
        return Err(ModelError::InvalidModel(format!("group_sd {} must be finite and non-negative", spec.group_sd)));
    }
    let times = spec.times.times()?;
    let forcing = if spec.treatments.is_empty() {
        ForcingSchedule::default()
    } else {
        ForcingSchedule::from_on_intervals(&spec.treatments)?
    };
    let centre = space.unconstrain(&theta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let designs: Vec<GroupDesign> = spec
        .group_ids()
        .into_iter()
        .map(|id| {
            let theta_c = if spec.group_sd > 0.0 {
                let u: Vec<f64> = centre
                    .iter()
                    .map(|m| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        m + spec.group_sd * z
                    })
                    .collect();
                space.constrain_each(&u).iter().map(|c| c.value).collect()
            } else {
                theta.clone()
            };
            GroupDesign { id, theta_c, times: times.clone(), forcing: forcing.clone() }
        })
        .collect();
    simulate_groups(&model, &designs, seed, solver)
}
