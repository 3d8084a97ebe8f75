//! Pareto-smoothed importance sampling.

/// Log of `sum(exp(x))`, stable for large magnitudes.
pub fn log_sum_exp(x: &[f64]) -> f64 {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + x.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Fitted generalized Pareto tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpdFit {
    pub k: f64,
    pub sigma: f64,
}

/// Empirical Bayes GPD fit (Zhang and Stephens) to exceedances `x` sorted
/// ascending, with the shape shrunk toward 0.5 by a weakly informative prior
/// worth 10 observations.
pub fn gpd_fit(x: &[f64]) -> GpdFit {
    let n = x.len();
    let nf = n as f64;
    let prior = 3.0;
    let m = 30 + (nf.sqrt() as usize);
    let xstar = x[((nf / 4.0 + 0.5).floor() as usize).max(1) - 1];
    let x_max = x[n - 1];
    let theta: Vec<f64> = (1..=m)
        .map(|j| 1.0 / x_max + (1.0 - (m as f64 / (j as f64 - 0.5)).sqrt()) / prior / xstar)
        .collect();
    let profile = |b: f64| {
        let k = x.iter().map(|&v| (-b * v).ln_1p()).sum::<f64>() / nf;
        nf * ((-b / k).ln() - k - 1.0)
    };
    let l_theta: Vec<f64> = theta.iter().map(|&b| profile(b)).collect();
    let lse = log_sum_exp(&l_theta);
    let theta_hat: f64 = theta
        .iter()
        .zip(&l_theta)
        .map(|(b, l)| b * (l - lse).exp())
        .sum();
    let k = x.iter().map(|&v| (-theta_hat * v).ln_1p()).sum::<f64>() / nf;
    let sigma = -k / theta_hat;
    let a = 10.0;
    let k = k * nf / (nf + a) + a * 0.5 / (nf + a);
    GpdFit { k, sigma }
}

/// GPD quantile function.
fn gpd_quantile(p: f64, fit: GpdFit) -> f64 {
    if fit.k == 0.0 {
        -fit.sigma * (-p).ln_1p()
    } else {
        fit.sigma * (-fit.k * (-p).ln_1p()).exp_m1() / fit.k
    }
}

/// Number of tail draws smoothed out of `s`.
pub fn tail_len(s: usize) -> usize {
    let s = s as f64;
    (0.2 * s).ceil().min((3.0 * s.sqrt()).ceil()) as usize
}

/// Smoothed, normalised log weights and the tail shape estimate for raw
/// log importance ratios. `k` is NaN when the tail is too short or constant
/// to fit.
pub fn psis_smooth(log_ratios: &[f64]) -> (Vec<f64>, f64) {
    let s = log_ratios.len();
    let max = log_ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut lw: Vec<f64> = log_ratios.iter().map(|v| v - max).collect();
    let m = tail_len(s);
    let mut k = f64::NAN;
    if m >= 5 && s > m {
        let mut order: Vec<usize> = (0..s).collect();
        order.sort_by(|&a, &b| lw[a].total_cmp(&lw[b]));
        let cutoff = lw[order[s - m - 1]];
        let tail_ids = &order[s - m..];
        let exp_cut = cutoff.exp();
        let exceed: Vec<f64> = tail_ids.iter().map(|&i| lw[i].exp() - exp_cut).collect();
        if exceed.iter().any(|&v| v > 0.0) && exceed[0] < exceed[m - 1] {
            let fit = gpd_fit(&exceed);
            k = fit.k;
            if fit.k.is_finite() {
                for (j, &i) in tail_ids.iter().enumerate() {
                    let p = (j as f64 + 0.5) / m as f64;
                    lw[i] = (gpd_quantile(p, fit) + exp_cut).ln();
                }
            }
        }
    }
    // truncate at the raw maximum
    lw.iter_mut().for_each(|v| *v = v.min(0.0));
    let lse = log_sum_exp(&lw);
    lw.iter_mut().for_each(|v| *v -= lse);
    (lw, k)
}
