//! MCMC samplers on the unconstrained scale: random-walk Metropolis,
//! Metropolis–Hastings, static HMC and NUTS, with step size and diagonal
//! metric adaptation during warmup.

mod adapt;
mod hamiltonian;
mod metropolis;

pub use adapt::{DualAveraging, ScaleAdapter, WarmupSchedule, Welford};
pub use hamiltonian::{
    find_reasonable_step_size, hmc_step, leapfrog, nuts_step, sample_momentum, Phase,
};
pub use metropolis::{
    mh_step, rwm_step, GaussianRandomWalk, Langevin, LogNormalMultiplicative, ProposalDist,
    StepResult,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::target::LogDensity;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplerError {
    #[error("chain {chain}: no finite initial point after {tries} tries")]
    InitFailed { chain: usize, tries: usize },
    #[error("initial point for chain {chain} has log density {value}")]
    BadInit { chain: usize, value: f64 },
    #[error("expected dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Rwm,
    Mh,
    Hmc,
    Nuts,
}

impl std::str::FromStr for Algorithm {
    type Err = SamplerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rwm" => Ok(Self::Rwm),
            "mh" => Ok(Self::Mh),
            "hmc" => Ok(Self::Hmc),
            "nuts" => Ok(Self::Nuts),
            _ => Err(SamplerError::InvalidConfig(format!("unknown algorithm {s:?}"))),
        }
    }
}

/// Proposal used by the `Mh` algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MhProposal {
    /// Gaussian centred on a half gradient step from the current point.
    #[default]
    Langevin,
    /// Symmetric Gaussian; reproduces `Rwm` exactly.
    RandomWalk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub algorithm: Algorithm,
    pub n_chains: usize,
    pub n_warmup: usize,
    pub n_draws: usize,
    pub seed: u64,
    /// Initial per-coordinate proposal sd for the Metropolis algorithms;
    /// defaults to `2.38 / sqrt(dim)` in every coordinate.
    pub rwm_sigma: Option<Vec<f64>>,
    pub mh_proposal: MhProposal,
    /// Leapfrog steps per static HMC transition.
    pub hmc_l: usize,
    /// Static HMC draws each step size uniformly from
    /// `eps * [1 - step_jitter, 1 + step_jitter]` to avoid periodic trajectories.
    pub step_jitter: f64,
    pub max_tree_depth: usize,
    /// Dual-averaging target for HMC and NUTS.
    pub target_accept: f64,
    /// Energy error above which a trajectory is flagged divergent.
    pub divergence_delta: f64,
    /// Starting step size for HMC and NUTS; found heuristically when absent.
    pub step_size: Option<f64>,
    pub adapt_metric: bool,
    /// Random initial points are uniform on `[-init_radius, init_radius]`.
    pub init_radius: f64,
    pub max_init_tries: usize,
    /// Explicit unconstrained initial points, one per chain.
    pub init: Option<Vec<Vec<f64>>>,
    pub parallel: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Nuts,
            n_chains: 4,
            n_warmup: 1000,
            n_draws: 1000,
            seed: 1,
            rwm_sigma: None,
            mh_proposal: MhProposal::default(),
            hmc_l: 16,
            step_jitter: 0.2,
            max_tree_depth: 10,
            target_accept: 0.8,
            divergence_delta: 1000.0,
            step_size: None,
            adapt_metric: true,
            init_radius: 2.0,
            max_init_tries: 100,
            init: None,
            parallel: true,
        }
    }
}

impl SamplerConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            ..Self::default()
        }
    }

    pub fn validate(&self, dim: usize) -> Result<(), SamplerError> {
        let bad = |m: &str| Err(SamplerError::InvalidConfig(m.to_string()));
        if self.n_chains == 0 || self.n_draws == 0 {
            return bad("n_chains and n_draws must be positive");
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return bad("target_accept must lie in (0, 1)");
        }
        if let Some(e) = self.step_size {
            if !(e > 0.0 && e.is_finite()) {
                return bad("step_size must be positive");
            }
        }
        if let Some(s) = &self.rwm_sigma {
            if s.len() != dim {
                return Err(SamplerError::DimensionMismatch {
                    expected: dim,
                    got: s.len(),
                });
            }
            if s.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return bad("rwm_sigma entries must be positive");
            }
        }
        if self.max_tree_depth == 0 || self.hmc_l == 0 {
            return bad("max_tree_depth and hmc_l must be positive");
        }
        if !(0.0..1.0).contains(&self.step_jitter) {
            return bad("step_jitter must lie in [0, 1)");
        }
        if !(self.init_radius >= 0.0) || !(self.divergence_delta > 0.0) {
            return bad("init_radius and divergence_delta must be positive");
        }
        if let Some(init) = &self.init {
            if init.len() != self.n_chains {
                return bad("one initial point per chain is required");
            }
            if let Some(p) = init.iter().find(|p| p.len() != dim) {
                return Err(SamplerError::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
        }
        Ok(())
    }

    /// Acceptance rate the warmup steers toward.
    pub fn adaptation_target(&self, dim: usize) -> f64 {
        match self.algorithm {
            Algorithm::Hmc | Algorithm::Nuts => self.target_accept,
            Algorithm::Rwm | Algorithm::Mh if dim == 1 => 0.44,
            Algorithm::Rwm | Algorithm::Mh => 0.23,
        }
    }
}

/// Current point of a chain with its log density and gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub theta: Vec<f64>,
    pub logp: f64,
    pub grad: Vec<f64>,
}

impl State {
    /// Evaluates the target at `theta`; `None` if the value or gradient is not finite.
    pub fn new<T: LogDensity + ?Sized>(target: &T, theta: Vec<f64>) -> Option<Self> {
        let mut grad = vec![0.0; theta.len()];
        let logp = target.log_density_and_grad(&theta, &mut grad);
        (logp.is_finite() && grad.iter().all(|g| g.is_finite())).then_some(Self { theta, logp, grad })
    }
}

/// Per-iteration sampler diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterStats {
    /// Acceptance probability, averaged over the trajectory for NUTS.
    pub accept_stat: f64,
    pub divergent: bool,
    /// Hamiltonian of the returned state; `-log p` for Metropolis kernels.
    pub energy: f64,
    pub tree_depth: usize,
    pub n_leapfrog: usize,
    pub step_size: f64,
    pub abs_delta_h: f64,
}

/// Output of one chain. Warmup iterations are kept apart and are not meant
/// for inference.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput {
    pub draws: Vec<Vec<f64>>,
    /// `draws` mapped through the target's constraining transform.
    pub draws_constrained: Vec<Vec<f64>>,
    pub stats: Vec<IterStats>,
    pub warmup_draws: Vec<Vec<f64>>,
    pub warmup_stats: Vec<IterStats>,
    /// Step size (or proposal scale) after warmup.
    pub step_size: f64,
    pub inv_metric: Vec<f64>,
    pub initial_point: Vec<f64>,
}

impl ChainOutput {
    pub fn n_divergent(&self) -> usize {
        self.stats.iter().filter(|s| s.divergent).count()
    }

    pub fn mean_accept_stat(&self) -> f64 {
        if self.stats.is_empty() {
            return f64::NAN;
        }
        self.stats.iter().map(|s| s.accept_stat).sum::<f64>() / self.stats.len() as f64
    }

    /// Values of unconstrained parameter `i` across draws.
    pub fn column(&self, i: usize) -> Vec<f64> {
        self.draws.iter().map(|d| d[i]).collect()
    }

    /// Values of constrained parameter `i` across draws.
    pub fn constrained_column(&self, i: usize) -> Vec<f64> {
        self.draws_constrained.iter().map(|d| d[i]).collect()
    }
}

/// Generator for `chain`: one seed, one independent stream per chain.
pub fn chain_rng(seed: u64, chain: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64);
    rng
}

/// Uniform random point on `[-radius, radius]^dim` with finite density and
/// gradient, retrying up to `max_tries` times.
pub fn init_point<T: LogDensity + ?Sized, R: Rng + ?Sized>(
    target: &T,
    radius: f64,
    max_tries: usize,
    rng: &mut R,
) -> Option<State> {
    for _ in 0..max_tries {
        let theta: Vec<f64> = (0..target.dim())
            .map(|_| {
                if radius > 0.0 {
                    rng.random_range(-radius..=radius)
                } else {
                    0.0
                }
            })
            .collect();
        if let Some(s) = State::new(target, theta) {
            return Some(s);
        }
    }
    None
}

/// Initial points for every chain, each drawn from that chain's generator.
pub fn init_points<T: LogDensity + ?Sized>(
    target: &T,
    config: &SamplerConfig,
) -> Result<Vec<Vec<f64>>, SamplerError> {
    (0..config.n_chains)
        .map(|c| {
            let mut rng = chain_rng(config.seed, c);
            init_point(target, config.init_radius, config.max_init_tries, &mut rng)
                .map(|s| s.theta)
                .ok_or(SamplerError::InitFailed {
                    chain: c,
                    tries: config.max_init_tries,
                })
        })
        .collect()
}

/// Runs `n_chains` chains. Results depend only on the configuration and
/// seed, not on whether chains run in parallel.
pub fn run_chains<T: LogDensity + ?Sized>(
    target: &T,
    config: &SamplerConfig,
) -> Result<Vec<ChainOutput>, SamplerError> {
    config.validate(target.dim())?;
    let run = |c: usize| run_chain(target, config, c);
    if config.parallel {
        (0..config.n_chains).into_par_iter().map(run).collect()
    } else {
        (0..config.n_chains).map(run).collect()
    }
}

fn jittered<R: Rng + ?Sized>(eps: f64, jitter: f64, rng: &mut R) -> f64 {
    if jitter > 0.0 {
        eps * (1.0 + jitter * (2.0 * rng.random::<f64>() - 1.0))
    } else {
        eps
    }
}

fn metropolis_step<T: LogDensity + ?Sized>(
    target: &T,
    config: &SamplerConfig,
    state: &mut State,
    scale: &[f64],
    eps: f64,
    inv_metric: &[f64],
    rng: &mut ChaCha8Rng,
) -> IterStats {
    let r = match (config.algorithm, config.mh_proposal) {
        (Algorithm::Rwm, _) => rwm_step(target, &state.theta, state.logp, scale, rng),
        (_, MhProposal::RandomWalk) => {
            let p = GaussianRandomWalk { scale: scale.to_vec() };
            mh_step(target, &state.theta, state.logp, &p, rng)
        }
        (_, MhProposal::Langevin) => {
            let p = Langevin { target, eps, inv_metric };
            mh_step(target, &state.theta, state.logp, &p, rng)
        }
    };
    state.theta = r.theta;
    state.logp = r.logp;
    IterStats {
        accept_stat: r.alpha,
        divergent: false,
        energy: -state.logp,
        tree_depth: 0,
        n_leapfrog: 0,
        step_size: eps,
        abs_delta_h: 0.0,
    }
}

pub fn run_chain<T: LogDensity + ?Sized>(
    target: &T,
    config: &SamplerConfig,
    chain: usize,
) -> Result<ChainOutput, SamplerError> {
    let dim = target.dim();
    let mut rng = chain_rng(config.seed, chain);
    let mut state = match config.init.as_ref().map(|i| i[chain].clone()) {
        Some(theta) => {
            if theta.len() != dim {
                return Err(SamplerError::DimensionMismatch {
                    expected: dim,
                    got: theta.len(),
                });
            }
            State::new(target, theta.clone()).ok_or_else(|| SamplerError::BadInit {
                chain,
                value: target.log_density(&theta),
            })?
        }
        None => init_point(target, config.init_radius, config.max_init_tries, &mut rng).ok_or(
            SamplerError::InitFailed {
                chain,
                tries: config.max_init_tries,
            },
        )?,
    };
    let initial_point = state.theta.clone();

    let hamiltonian = matches!(config.algorithm, Algorithm::Hmc | Algorithm::Nuts);
    let target_rate = config.adaptation_target(dim);
    // Metropolis kernels: proposal sd = eps * base[i] * sqrt(inv_metric[i])
    let base: Vec<f64> = match &config.rwm_sigma {
        Some(s) => s.clone(),
        None => vec![1.0; dim],
    };
    let default_scale = 2.38 / (dim as f64).sqrt();
    let mut inv_metric = vec![1.0; dim];
    let mut eps = if hamiltonian {
        match config.step_size {
            Some(e) => e,
            None => find_reasonable_step_size(target, &state, &inv_metric, &mut rng),
        }
    } else if config.rwm_sigma.is_some() {
        1.0
    } else {
        default_scale
    };
    let mut da = DualAveraging::new(eps, target_rate);
    let mut sa = ScaleAdapter::new(eps, target_rate);
    let schedule = WarmupSchedule::new(config.n_warmup);
    let mut welford = Welford::new(dim);
    let scale_of = |eps: f64, m: &[f64]| -> Vec<f64> {
        (0..dim).map(|i| eps * base[i] * m[i].sqrt()).collect()
    };
    let mut scale = scale_of(eps, &inv_metric);

    let total = config.n_warmup + config.n_draws;
    let mut draws = Vec::with_capacity(config.n_draws);
    let mut stats = Vec::with_capacity(config.n_draws);
    let mut warmup_draws = Vec::with_capacity(config.n_warmup);
    let mut warmup_stats = Vec::with_capacity(config.n_warmup);
    for it in 0..total {
        let s = match config.algorithm {
            Algorithm::Rwm | Algorithm::Mh => {
                metropolis_step(target, config, &mut state, &scale, eps, &inv_metric, &mut rng)
            }
            Algorithm::Hmc => hmc_step(
                target,
                &mut state,
                jittered(eps, config.step_jitter, &mut rng),
                config.hmc_l,
                &inv_metric,
                config.divergence_delta,
                &mut rng,
            ),
            Algorithm::Nuts => nuts_step(
                target,
                &mut state,
                eps,
                config.max_tree_depth,
                &inv_metric,
                config.divergence_delta,
                &mut rng,
            ),
        };
        if it >= config.n_warmup {
            draws.push(state.theta.clone());
            stats.push(s);
            continue;
        }
        warmup_draws.push(state.theta.clone());
        warmup_stats.push(s);
        eps = if hamiltonian {
            da.update(s.accept_stat)
        } else {
            sa.update(s.accept_stat)
        };
        if config.adapt_metric && schedule.in_slow_window(it) {
            welford.add(&state.theta);
            if schedule.is_window_end(it) {
                inv_metric = welford.regularized_variance();
                welford.reset();
                if hamiltonian {
                    if state.grad.iter().all(|g| g.is_finite()) {
                        eps = find_reasonable_step_size(target, &state, &inv_metric, &mut rng);
                    }
                    da.restart(eps);
                } else {
                    eps = if config.rwm_sigma.is_some() { 1.0 } else { default_scale };
                    sa.restart(eps);
                }
            }
        }
        if it + 1 == config.n_warmup && hamiltonian {
            eps = da.final_step_size();
        }
        scale = scale_of(eps, &inv_metric);
    }
    let draws_constrained = draws.iter().map(|d| target.constrain(d)).collect();
    Ok(ChainOutput {
        draws,
        draws_constrained,
        stats,
        warmup_draws,
        warmup_stats,
        step_size: eps,
        inv_metric,
        initial_point,
    })
}
