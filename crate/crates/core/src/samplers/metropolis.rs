use rand::Rng;
use rand_distr::StandardNormal;

use crate::target::LogDensity;

/// Outcome of one Metropolis-type step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub theta: Vec<f64>,
    pub logp: f64,
    pub alpha: f64,
    pub accepted: bool,
}

/// A proposal kernel `q(theta' | theta)`.
pub trait ProposalDist {
    fn sample<R: Rng + ?Sized>(&self, from: &[f64], rng: &mut R) -> Vec<f64>;

    /// `log q(to | from)`; `-inf` where the move is impossible.
    fn log_q(&self, to: &[f64], from: &[f64]) -> f64;
}

/// `theta' = theta + scale * xi`, `xi ~ N(0, I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianRandomWalk {
    pub scale: Vec<f64>,
}

impl ProposalDist for GaussianRandomWalk {
    fn sample<R: Rng + ?Sized>(&self, from: &[f64], rng: &mut R) -> Vec<f64> {
        from.iter()
            .zip(&self.scale)
            .map(|(x, s)| x + s * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }

    fn log_q(&self, to: &[f64], from: &[f64]) -> f64 {
        gaussian_log_kernel(to, from, &self.scale)
    }
}

/// `theta' = theta * exp(scale * xi)`: a random walk on the log scale for
/// positive quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct LogNormalMultiplicative {
    pub scale: Vec<f64>,
}

impl ProposalDist for LogNormalMultiplicative {
    fn sample<R: Rng + ?Sized>(&self, from: &[f64], rng: &mut R) -> Vec<f64> {
        from.iter()
            .zip(&self.scale)
            .map(|(x, s)| x * (s * rng.sample::<f64, _>(StandardNormal)).exp())
            .collect()
    }

    fn log_q(&self, to: &[f64], from: &[f64]) -> f64 {
        if to.iter().chain(from).any(|&v| !(v > 0.0)) {
            return f64::NEG_INFINITY;
        }
        let lt: Vec<f64> = to.iter().map(|v| v.ln()).collect();
        let lf: Vec<f64> = from.iter().map(|v| v.ln()).collect();
        gaussian_log_kernel(&lt, &lf, &self.scale) - lt.iter().sum::<f64>()
    }
}

/// Langevin proposal `theta' ~ N(theta + eps^2/2 M^-1 grad, eps^2 M^-1)`.
pub struct Langevin<'a, T: ?Sized> {
    pub target: &'a T,
    pub eps: f64,
    pub inv_metric: &'a [f64],
}

impl<T: LogDensity + ?Sized> Langevin<'_, T> {
    fn mean(&self, from: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; from.len()];
        let lp = self.target.log_density_and_grad(from, &mut g);
        if !lp.is_finite() {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
        (0..from.len())
            .map(|i| from[i] + 0.5 * self.eps * self.eps * self.inv_metric[i] * g[i])
            .collect()
    }

    fn scale(&self) -> Vec<f64> {
        self.inv_metric.iter().map(|m| self.eps * m.sqrt()).collect()
    }
}

impl<T: LogDensity + ?Sized> ProposalDist for Langevin<'_, T> {
    fn sample<R: Rng + ?Sized>(&self, from: &[f64], rng: &mut R) -> Vec<f64> {
        let mean = self.mean(from);
        mean.iter()
            .zip(self.scale())
            .map(|(m, s)| m + s * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }

    fn log_q(&self, to: &[f64], from: &[f64]) -> f64 {
        gaussian_log_kernel(to, &self.mean(from), &self.scale())
    }
}

/// Gaussian log density up to the constant `-d/2 log 2 pi`.
fn gaussian_log_kernel(x: &[f64], mean: &[f64], scale: &[f64]) -> f64 {
    x.iter()
        .zip(mean)
        .zip(scale)
        .map(|((x, m), s)| -0.5 * ((x - m) / s).powi(2) - s.ln())
        .sum()
}

fn accept<R: Rng + ?Sized>(
    theta: &[f64],
    logp: f64,
    cand: Vec<f64>,
    cand_logp: f64,
    log_ratio: f64,
    rng: &mut R,
) -> StepResult {
    let log_ratio = if log_ratio.is_nan() || !cand_logp.is_finite() {
        f64::NEG_INFINITY
    } else {
        log_ratio
    };
    let u: f64 = rng.random();
    let alpha = log_ratio.exp().min(1.0);
    if u.ln() < log_ratio {
        StepResult {
            theta: cand,
            logp: cand_logp,
            alpha,
            accepted: true,
        }
    } else {
        StepResult {
            theta: theta.to_vec(),
            logp,
            alpha,
            accepted: false,
        }
    }
}

/// Random-walk Metropolis step with per-coordinate proposal sd `sigma`.
/// `logp` is the current log density.
pub fn rwm_step<T: LogDensity + ?Sized, R: Rng + ?Sized>(
    target: &T,
    theta: &[f64],
    logp: f64,
    sigma: &[f64],
    rng: &mut R,
) -> StepResult {
    let cand: Vec<f64> = theta
        .iter()
        .zip(sigma)
        .map(|(x, s)| x + s * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let cand_logp = target.log_density(&cand);
    accept(theta, logp, cand, cand_logp, cand_logp - logp, rng)
}

/// Metropolis–Hastings step with an arbitrary proposal.
pub fn mh_step<T: LogDensity + ?Sized, P: ProposalDist, R: Rng + ?Sized>(
    target: &T,
    theta: &[f64],
    logp: f64,
    proposal: &P,
    rng: &mut R,
) -> StepResult {
    let cand = proposal.sample(theta, rng);
    let cand_logp = target.log_density(&cand);
    let log_ratio = if cand_logp.is_finite() {
        let back = proposal.log_q(theta, &cand);
        let fwd = proposal.log_q(&cand, theta);
        // a symmetric kernel cancels exactly, leaving the random-walk ratio
        (cand_logp - logp) + (back - fwd)
    } else {
        f64::NEG_INFINITY
    };
    accept(theta, logp, cand, cand_logp, log_ratio, rng)
}
