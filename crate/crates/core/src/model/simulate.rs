use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::ode::{solve, ForcingSchedule, SolverConfig};

use super::{Dataset, Group, ModelError, ModelSystem, OdeModel};

/// Generating inputs for one synthetic group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupDesign {
    pub id: String,
    pub theta_c: Vec<f64>,
    pub times: Vec<f64>,
    pub forcing: ForcingSchedule,
}

/// Simulates `n_groups` replicate groups sharing one parameter vector.
pub fn simulate_data<S: ModelSystem>(
    model: &OdeModel<S>,
    theta_c: &[f64],
    times: &[f64],
    n_groups: usize,
    seed: u64,
    solver: &SolverConfig,
) -> Result<Dataset, ModelError> {
    let designs: Vec<GroupDesign> = (0..n_groups)
        .map(|g| GroupDesign {
            id: (g + 1).to_string(),
            theta_c: theta_c.to_vec(),
            times: times.to_vec(),
            forcing: ForcingSchedule::default(),
        })
        .collect();
    simulate_groups(model, &designs, seed, solver)
}

/// Solves the ODE for every design and adds observation noise drawn from a
/// generator seeded with `seed`. Noise is drawn group by group, channel by
/// channel, time by time.
pub fn simulate_groups<S: ModelSystem>(
    model: &OdeModel<S>,
    designs: &[GroupDesign],
    seed: u64,
    solver: &SolverConfig,
) -> Result<Dataset, ModelError> {
    model.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut groups = Vec::with_capacity(designs.len());
    for d in designs {
        if d.theta_c.len() != model.space.len() {
            return Err(ModelError::DimensionMismatch {
                expected: model.space.len(),
                got: d.theta_c.len(),
            });
        }
        let traj = solve(&model.system, &model.xi(&d.theta_c), &d.times, solver, &d.forcing)?;
        let mut observations = Vec::with_capacity(model.observation.n_channels());
        for c in 0..model.observation.n_channels() {
            let mut row = Vec::with_capacity(d.times.len());
            for i in 0..d.times.len() {
                let pred = model.observation.predict(c, traj.state(i));
                let sd = model.observation.sd(pred, &d.theta_c);
                if !(sd >= 0.0) {
                    return Err(ModelError::InvalidModel(format!(
                        "negative noise sd {sd} in group {}",
                        d.id
                    )));
                }
                let z: f64 = StandardNormal.sample(&mut rng);
                row.push(pred + sd * z);
            }
            observations.push(row);
        }
        groups.push(Group::new(d.id.clone(), d.times.clone(), observations).with_forcing(d.forcing.clone()));
    }
    Dataset::new(groups)
}
