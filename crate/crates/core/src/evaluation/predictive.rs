use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::model::ModelSystem;
use crate::ode::solve;
use crate::target::OdeTarget;

/// Predictive draws for one group, indexed `[draw][channel][time]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPredictive {
    pub id: String,
    /// Noise-free model trajectories.
    pub y_mean: Vec<Vec<Vec<f64>>>,
    /// `y_mean` plus observation noise.
    pub y_pred: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveDraws {
    pub times: Vec<f64>,
    pub groups: Vec<GroupPredictive>,
    /// Draws skipped because some group's solve failed.
    pub n_skipped: usize,
}

type DrawOutput = Vec<(Vec<Vec<f64>>, Vec<Vec<f64>>)>;

/// Simulates every group's trajectory on `times` for each constrained draw
/// (rows as produced by `LogDensity::constrain`) and adds observation noise.
/// Draw `s` uses its own random stream of `seed`, so results do not depend on
/// scheduling.
pub fn posterior_predictive<S: ModelSystem + Sync>(
    target: &OdeTarget<S>,
    draws_constrained: &[Vec<f64>],
    times: &[f64],
    seed: u64,
) -> PredictiveDraws {
    let model = target.model();
    let groups = &target.data().groups;
    let systems: Vec<S> = groups.iter().map(|g| model.system.for_group(g)).collect();
    let obs = &model.observation;
    let per_draw: Vec<Option<DrawOutput>> = draws_constrained
        .par_iter()
        .enumerate()
        .map(|(s, row)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s as u64);
            let thetas = target.group_thetas_from_constrained(row);
            let mut out = Vec::with_capacity(groups.len());
            for ((g, sys), theta) in groups.iter().zip(&systems).zip(&thetas) {
                let traj = solve(sys, &model.xi(theta), times, target.solver(), &g.forcing).ok()?;
                let mut mean = Vec::with_capacity(obs.n_channels());
                let mut pred = Vec::with_capacity(obs.n_channels());
                for c in 0..obs.n_channels() {
                    let m: Vec<f64> = (0..times.len()).map(|i| obs.predict(c, traj.state(i))).collect();
                    let p = m
                        .iter()
                        .map(|&mu| {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            mu + obs.sd(mu, theta).max(0.0) * z
                        })
                        .collect();
                    mean.push(m);
                    pred.push(p);
                }
                out.push((mean, pred));
            }
            Some(out)
        })
        .collect();

    let n_skipped = per_draw.iter().filter(|d| d.is_none()).count();
    let mut out: Vec<GroupPredictive> = groups
        .iter()
        .map(|g| GroupPredictive { id: g.id.clone(), y_mean: Vec::new(), y_pred: Vec::new() })
        .collect();
    for draw in per_draw.into_iter().flatten() {
        for (gp, (m, p)) in out.iter_mut().zip(draw) {
            gp.y_mean.push(m);
            gp.y_pred.push(p);
        }
    }
    PredictiveDraws { times: times.to_vec(), groups: out, n_skipped }
}
