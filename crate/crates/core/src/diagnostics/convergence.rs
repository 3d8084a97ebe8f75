use statrs::distribution::{ContinuousCDF, Normal};

use super::DiagnosticError;

/// Overdispersion cap: ESS is clamped to at most this multiple of the draw count.
pub const ESS_CAP: f64 = 2.0;

fn check(chains: &[Vec<f64>]) -> Result<(), DiagnosticError> {
    if chains.len() < 2 {
        return Err(DiagnosticError::TooFewChains(chains.len()));
    }
    let n = chains[0].len();
    if chains.iter().any(|c| c.len() != n) {
        return Err(DiagnosticError::RaggedChains);
    }
    if n < 4 {
        return Err(DiagnosticError::TooFewDraws(n));
    }
    if chains.iter().flatten().any(|v| !v.is_finite()) {
        return Err(DiagnosticError::NonFinite);
    }
    if let Some(i) = chains.iter().position(|c| c.iter().all(|&v| v == c[0])) {
        return Err(DiagnosticError::DegenerateChain(i));
    }
    Ok(())
}

/// Splits every chain into its first and second half; an odd middle draw is dropped.
pub fn split_chains(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * chains.len());
    for c in chains {
        let half = c.len() / 2;
        out.push(c[..half].to_vec());
        out.push(c[c.len() - half..].to_vec());
    }
    out
}

/// Replaces pooled draws by normal scores of their average ranks,
/// `Phi^-1((r - 3/8) / (S + 1/4))`.
pub fn rank_normalize(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let pooled: Vec<f64> = chains.iter().flatten().copied().collect();
    let s = pooled.len();
    let mut order: Vec<usize> = (0..s).collect();
    order.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut ranks = vec![0.0; s];
    let mut i = 0;
    while i < s {
        let mut j = i;
        while j + 1 < s && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        // ranks are 1-based; ties share their average
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[order[k]] = avg;
        }
        i = j + 1;
    }
    let normal = Normal::standard();
    let mut it = ranks
        .into_iter()
        .map(|r| normal.inverse_cdf((r - 0.375) / (s as f64 + 0.25)));
    chains
        .iter()
        .map(|c| it.by_ref().take(c.len()).collect())
        .collect()
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn sample_var(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Potential scale reduction from within- and between-chain variance,
/// `sqrt(((n - 1)/n W + B/n) / W)`, on the chains as given.
pub fn rhat_basic_unsplit(chains: &[Vec<f64>]) -> f64 {
    let n = chains[0].len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let w = mean(&chains.iter().map(|c| sample_var(c)).collect::<Vec<_>>());
    let b = n * sample_var(&means);
    (((n - 1.0) / n * w + b / n) / w).sqrt()
}

/// Split R-hat on the raw draws.
pub fn rhat_basic(chains: &[Vec<f64>]) -> Result<f64, DiagnosticError> {
    check(chains)?;
    Ok(rhat_basic_unsplit(&split_chains(chains)))
}

/// Rank-normalised split R-hat: the larger of the value on normal scores and
/// on folded normal scores `|z - median(z)|`.
pub fn rhat(chains: &[Vec<f64>]) -> Result<f64, DiagnosticError> {
    check(chains)?;
    let z = rank_normalize(&split_chains(chains));
    let med = median(&z.iter().flatten().copied().collect::<Vec<_>>());
    let folded: Vec<Vec<f64>> = z
        .iter()
        .map(|c| c.iter().map(|v| (v - med).abs()).collect())
        .collect();
    Ok(rhat_basic_unsplit(&z).max(rhat_basic_unsplit(&folded)))
}

fn median(x: &[f64]) -> f64 {
    quantile(x, 0.5)
}

/// Sample quantile by linear interpolation between order statistics
/// (Hyndman–Fan type 7).
pub fn quantile(x: &[f64], p: f64) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, p)
}

pub fn quantile_sorted(v: &[f64], p: f64) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let h = (v.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

/// Effective sample size estimate with a flag set when the overdispersion
/// cap was applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ess {
    pub value: f64,
    pub capped: bool,
}

/// Biased autocovariance at `lag`.
fn autocov(x: &[f64], m: f64, lag: usize) -> f64 {
    let n = x.len();
    let mut s = 0.0;
    for i in 0..n - lag {
        s += (x[i] - m) * (x[i + lag] - m);
    }
    s / n as f64
}

/// Multi-chain ESS of the chains as given, with Geyer's initial monotone
/// sequence truncation. Autocovariances are direct sums evaluated only up to
/// the truncation lag.
pub fn ess_raw(chains: &[Vec<f64>]) -> Ess {
    let m = chains.len();
    let n = chains[0].len();
    let nf = n as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let mean_acov = |lag: usize| -> f64 {
        chains
            .iter()
            .zip(&means)
            .map(|(c, &mu)| autocov(c, mu, lag))
            .sum::<f64>()
            / m as f64
    };
    let mean_var = mean_acov(0) * nf / (nf - 1.0);
    let mut var_plus = mean_var * (nf - 1.0) / nf;
    if m > 1 {
        var_plus += sample_var(&means);
    }
    let rho_at = |lag: usize| 1.0 - (mean_var - mean_acov(lag)) / var_plus;

    let mut rho = vec![0.0; n];
    rho[0] = 1.0;
    let mut even = 1.0;
    let mut odd = rho_at(1);
    rho[1] = odd;
    let mut t = 0;
    while t + 5 < n && (even + odd) > 0.0 {
        t += 2;
        even = rho_at(t);
        odd = rho_at(t + 1);
        if even + odd >= 0.0 {
            rho[t] = even;
            rho[t + 1] = odd;
        }
    }
    let max_t = t;
    if even > 0.0 {
        rho[max_t] = even;
    }
    // initial monotone sequence
    let mut t = 0;
    while t + 4 <= max_t {
        t += 2;
        if rho[t] + rho[t + 1] > rho[t - 2] + rho[t - 1] {
            rho[t] = (rho[t - 2] + rho[t - 1]) / 2.0;
            rho[t + 1] = rho[t];
        }
    }
    let total = (m * n) as f64;
    let tau = -1.0 + 2.0 * rho[..max_t].iter().sum::<f64>() + rho[max_t];
    let floor = (1.0 / total.log10()).max(1.0 / ESS_CAP);
    if tau < floor {
        Ess {
            value: total / floor,
            capped: true,
        }
    } else {
        Ess {
            value: total / tau,
            capped: false,
        }
    }
}

/// Bulk ESS: split chains, rank-normalised.
pub fn ess_bulk(chains: &[Vec<f64>]) -> Result<Ess, DiagnosticError> {
    check(chains)?;
    Ok(ess_raw(&rank_normalize(&split_chains(chains))))
}

/// ESS of the split chains without rank normalisation.
pub fn ess_basic(chains: &[Vec<f64>]) -> Result<Ess, DiagnosticError> {
    check(chains)?;
    Ok(ess_raw(&split_chains(chains)))
}

/// Tail ESS: the smaller ESS of the indicators of lying below the 5% and
/// 95% quantiles.
pub fn ess_tail(chains: &[Vec<f64>]) -> Result<Ess, DiagnosticError> {
    check(chains)?;
    let pooled: Vec<f64> = chains.iter().flatten().copied().collect();
    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let mut best: Option<Ess> = None;
    for p in [0.05, 0.95] {
        let q = quantile_sorted(&sorted, p);
        let ind: Vec<Vec<f64>> = chains
            .iter()
            .map(|c| c.iter().map(|&v| if v <= q { 1.0 } else { 0.0 }).collect())
            .collect();
        let first = ind[0][0];
        if ind.iter().flatten().all(|&v| v == first) {
            return Err(DiagnosticError::DegenerateChain(0));
        }
        let e = ess_raw(&split_chains(&ind));
        if best.is_none_or(|b| e.value < b.value) {
            best = Some(e);
        }
    }
    Ok(best.expect("two quantiles"))
}
