use rand::Rng;
use rand_distr::StandardNormal;

use crate::target::LogDensity;

use super::{IterStats, State};

/// Position, momentum and gradient at one point of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Phase {
    pub theta: Vec<f64>,
    pub r: Vec<f64>,
    pub logp: f64,
    pub grad: Vec<f64>,
}

impl Phase {
    pub fn kinetic(&self, inv_metric: &[f64]) -> f64 {
        0.5 * self.r.iter().zip(inv_metric).map(|(r, m)| r * r * m).sum::<f64>()
    }

    /// `H = -log p + K`; infinite where the density is not finite.
    pub fn hamiltonian(&self, inv_metric: &[f64]) -> f64 {
        if self.logp.is_finite() {
            -self.logp + self.kinetic(inv_metric)
        } else {
            f64::INFINITY
        }
    }
}

/// Draws momentum `r ~ N(0, M)` for the diagonal inverse metric `M^-1`.
pub fn sample_momentum<R: Rng + ?Sized>(inv_metric: &[f64], rng: &mut R) -> Vec<f64> {
    inv_metric
        .iter()
        .map(|m| {
            let z: f64 = rng.sample(StandardNormal);
            z / m.sqrt()
        })
        .collect()
}

/// One leapfrog step of size `eps` (negative to integrate backwards).
pub fn leapfrog<T: LogDensity + ?Sized>(target: &T, p: &mut Phase, eps: f64, inv_metric: &[f64]) {
    for i in 0..p.r.len() {
        p.r[i] += 0.5 * eps * p.grad[i];
    }
    for i in 0..p.theta.len() {
        p.theta[i] += eps * inv_metric[i] * p.r[i];
    }
    let lp = target.log_density_and_grad(&p.theta, &mut p.grad);
    p.logp = if lp.is_nan() { f64::NEG_INFINITY } else { lp };
    if !p.logp.is_finite() {
        return;
    }
    for i in 0..p.r.len() {
        p.r[i] += 0.5 * eps * p.grad[i];
    }
}

/// Heuristic initial step size: double or halve until a single leapfrog step
/// crosses an acceptance probability of one half.
pub fn find_reasonable_step_size<T: LogDensity + ?Sized, R: Rng + ?Sized>(
    target: &T,
    state: &State,
    inv_metric: &[f64],
    rng: &mut R,
) -> f64 {
    let mut eps = 1.0;
    let r = sample_momentum(inv_metric, rng);
    let start = Phase {
        theta: state.theta.clone(),
        r,
        logp: state.logp,
        grad: state.grad.clone(),
    };
    let h0 = start.hamiltonian(inv_metric);
    let log_ratio = |eps: f64| {
        let mut p = start.clone();
        leapfrog(target, &mut p, eps, inv_metric);
        let d = h0 - p.hamiltonian(inv_metric);
        if d.is_nan() {
            f64::NEG_INFINITY
        } else {
            d
        }
    };
    let mut lr = log_ratio(eps);
    let dir: f64 = if lr > 0.5f64.ln() { 1.0 } else { -1.0 };
    for _ in 0..100 {
        if dir * lr <= -dir * 2f64.ln() {
            break;
        }
        let next = eps * 2f64.powf(dir);
        if !(1e-10..=1e7).contains(&next) {
            break;
        }
        eps = next;
        lr = log_ratio(eps);
    }
    eps
}

/// Static HMC transition with `n_steps` leapfrog steps.
pub fn hmc_step<T: LogDensity + ?Sized, R: Rng + ?Sized>(
    target: &T,
    state: &mut State,
    eps: f64,
    n_steps: usize,
    inv_metric: &[f64],
    max_delta_h: f64,
    rng: &mut R,
) -> IterStats {
    let mut p = Phase {
        theta: state.theta.clone(),
        r: sample_momentum(inv_metric, rng),
        logp: state.logp,
        grad: state.grad.clone(),
    };
    let h0 = p.hamiltonian(inv_metric);
    let mut divergent = false;
    let mut taken = 0;
    for _ in 0..n_steps {
        leapfrog(target, &mut p, eps, inv_metric);
        taken += 1;
        if p.hamiltonian(inv_metric) - h0 > max_delta_h {
            divergent = true;
            break;
        }
    }
    let h1 = p.hamiltonian(inv_metric);
    let log_accept = if divergent { f64::NEG_INFINITY } else { h0 - h1 };
    let accept_stat = if log_accept.is_nan() { 0.0 } else { log_accept.exp().min(1.0) };
    let u: f64 = rng.random();
    let accepted = u.ln() < log_accept;
    let energy = if accepted {
        state.theta = p.theta;
        state.logp = p.logp;
        state.grad = p.grad;
        h1
    } else {
        h0
    };
    IterStats {
        accept_stat,
        divergent,
        energy,
        tree_depth: 0,
        n_leapfrog: taken,
        step_size: eps,
        abs_delta_h: (h1 - h0).abs(),
    }
}

struct Tree {
    minus: Phase,
    plus: Phase,
    proposal: Phase,
    n_valid: f64,
    keep_going: bool,
    sum_accept: f64,
    n_accept: f64,
    divergent: bool,
    n_leapfrog: usize,
}

struct NutsCtx<'a, T: ?Sized> {
    target: &'a T,
    inv_metric: &'a [f64],
    eps: f64,
    h0: f64,
    log_u: f64,
    max_delta_h: f64,
}

fn no_u_turn(minus: &Phase, plus: &Phase, inv_metric: &[f64]) -> bool {
    let mut a = 0.0;
    let mut b = 0.0;
    for i in 0..minus.theta.len() {
        let d = plus.theta[i] - minus.theta[i];
        a += d * inv_metric[i] * minus.r[i];
        b += d * inv_metric[i] * plus.r[i];
    }
    a >= 0.0 && b >= 0.0
}

fn build_tree<T: LogDensity + ?Sized, R: Rng + ?Sized>(
    ctx: &NutsCtx<'_, T>,
    from: &Phase,
    dir: f64,
    depth: usize,
    rng: &mut R,
) -> Tree {
    if depth == 0 {
        let mut p = from.clone();
        leapfrog(ctx.target, &mut p, dir * ctx.eps, ctx.inv_metric);
        let h = p.hamiltonian(ctx.inv_metric);
        let n_valid = if ctx.log_u <= -h { 1.0 } else { 0.0 };
        let divergent = !(ctx.log_u - ctx.max_delta_h < -h);
        let d = ctx.h0 - h;
        let accept = if d.is_nan() { 0.0 } else { d.exp().min(1.0) };
        return Tree {
            minus: p.clone(),
            plus: p.clone(),
            proposal: p,
            n_valid,
            keep_going: !divergent,
            sum_accept: accept,
            n_accept: 1.0,
            divergent,
            n_leapfrog: 1,
        };
    }
    let mut t = build_tree(ctx, from, dir, depth - 1, rng);
    if !t.keep_going {
        return t;
    }
    let edge = if dir > 0.0 { &t.plus } else { &t.minus };
    let t2 = build_tree(ctx, &edge.clone(), dir, depth - 1, rng);
    if dir > 0.0 {
        t.plus = t2.plus;
    } else {
        t.minus = t2.minus;
    }
    let total = t.n_valid + t2.n_valid;
    if total > 0.0 {
        let u: f64 = rng.random();
        if u < t2.n_valid / total {
            t.proposal = t2.proposal;
        }
    }
    t.n_valid = total;
    t.sum_accept += t2.sum_accept;
    t.n_accept += t2.n_accept;
    t.divergent |= t2.divergent;
    t.n_leapfrog += t2.n_leapfrog;
    t.keep_going = t2.keep_going && no_u_turn(&t.minus, &t.plus, ctx.inv_metric);
    t
}

/// No-U-turn transition with slice sampling over the trajectory.
pub fn nuts_step<T: LogDensity + ?Sized, R: Rng + ?Sized>(
    target: &T,
    state: &mut State,
    eps: f64,
    max_depth: usize,
    inv_metric: &[f64],
    max_delta_h: f64,
    rng: &mut R,
) -> IterStats {
    let start = Phase {
        theta: state.theta.clone(),
        r: sample_momentum(inv_metric, rng),
        logp: state.logp,
        grad: state.grad.clone(),
    };
    let h0 = start.hamiltonian(inv_metric);
    let u: f64 = rng.random();
    let ctx = NutsCtx {
        target,
        inv_metric,
        eps,
        h0,
        log_u: -h0 + u.ln(),
        max_delta_h,
    };
    let mut minus = start.clone();
    let mut plus = start.clone();
    let mut selected = start;
    let mut n_valid = 1.0;
    let mut depth = 0;
    let mut sum_accept = 0.0;
    let mut n_accept = 0.0;
    let mut divergent = false;
    let mut n_leapfrog = 0;
    while depth < max_depth {
        let forward = rng.random::<bool>();
        let t = if forward {
            let t = build_tree(&ctx, &plus, 1.0, depth, rng);
            plus = t.plus.clone();
            t
        } else {
            let t = build_tree(&ctx, &minus, -1.0, depth, rng);
            minus = t.minus.clone();
            t
        };
        depth += 1;
        sum_accept += t.sum_accept;
        n_accept += t.n_accept;
        n_leapfrog += t.n_leapfrog;
        divergent |= t.divergent;
        if !t.keep_going {
            break;
        }
        let u: f64 = rng.random();
        if u < t.n_valid / n_valid {
            selected = t.proposal;
        }
        n_valid += t.n_valid;
        if !no_u_turn(&minus, &plus, inv_metric) {
            break;
        }
    }
    let energy = selected.hamiltonian(inv_metric);
    state.theta = selected.theta;
    state.logp = selected.logp;
    state.grad = selected.grad;
    IterStats {
        accept_stat: if n_accept > 0.0 { sum_accept / n_accept } else { 0.0 },
        divergent,
        energy,
        tree_depth: depth,
        n_leapfrog,
        step_size: eps,
        abs_delta_h: (energy - h0).abs(),
    }
}
