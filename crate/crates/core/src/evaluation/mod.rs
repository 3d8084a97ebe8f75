//! Predictive evaluation: lpd, PSIS-LOO and model comparison.

mod predictive;
pub mod psis;

pub use predictive::{posterior_predictive, GroupPredictive, PredictiveDraws};
pub use psis::{gpd_fit, log_sum_exp, psis_smooth, GpdFit};

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::model::{ModelSystem, ObsLabel};
use crate::samplers::ChainOutput;
use crate::target::OdeTarget;

pub const K_HIGH: f64 = 0.7;
pub const K_VERY_HIGH: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("log-likelihood matrix has no retained draws")]
    Empty,
    #[error("observation labels differ between the compared fits")]
    LabelMismatch,
    #[error("row {row} has {got} entries, expected {expected}")]
    Ragged { row: usize, expected: usize, got: usize },
    #[error("non-finite log-likelihood at draw {draw}, observation {obs}")]
    NonFinite { draw: usize, obs: usize },
}

/// Pointwise log-likelihood, draws by observations.
#[derive(Debug, Clone, PartialEq)]
pub struct LogLikMatrix {
    pub values: Vec<Vec<f64>>,
    pub labels: Vec<ObsLabel>,
    /// Draws dropped because the likelihood could not be evaluated.
    pub n_excluded: usize,
}

impl LogLikMatrix {
    pub fn new(values: Vec<Vec<f64>>, labels: Vec<ObsLabel>) -> Result<Self, EvalError> {
        if values.is_empty() {
            return Err(EvalError::Empty);
        }
        for (row, v) in values.iter().enumerate() {
            if v.len() != labels.len() {
                return Err(EvalError::Ragged { row, expected: labels.len(), got: v.len() });
            }
            if let Some(obs) = v.iter().position(|x| !x.is_finite()) {
                return Err(EvalError::NonFinite { draw: row, obs });
            }
        }
        Ok(Self { values, labels, n_excluded: 0 })
    }

    /// Evaluates the target's pointwise log-likelihood at every unconstrained
    /// draw. Draws whose solve fails or whose terms are not finite are
    /// excluded and counted.
    pub fn from_draws<S: ModelSystem + Sync>(
        target: &OdeTarget<S>,
        draws: &[Vec<f64>],
    ) -> Result<Self, EvalError> {
        let rows: Vec<Option<Vec<f64>>> = draws
            .par_iter()
            .map(|d| {
                target
                    .pointwise_loglik(d)
                    .ok()
                    .filter(|v| v.iter().all(|x| x.is_finite()))
            })
            .collect();
        let n_excluded = rows.iter().filter(|r| r.is_none()).count();
        let values: Vec<Vec<f64>> = rows.into_iter().flatten().collect();
        let mut m = Self::new(values, target.data().labels())?;
        m.n_excluded = n_excluded;
        Ok(m)
    }

    /// Pooled post-warmup draws of all chains, chain by chain.
    pub fn from_chains<S: ModelSystem + Sync>(
        target: &OdeTarget<S>,
        chains: &[ChainOutput],
    ) -> Result<Self, EvalError> {
        let draws: Vec<Vec<f64>> = chains.iter().flat_map(|c| c.draws.iter().cloned()).collect();
        Self::from_draws(target, &draws)
    }

    pub fn n_draws(&self) -> usize {
        self.values.len()
    }

    pub fn n_obs(&self) -> usize {
        self.labels.len()
    }

    /// Columns whose label satisfies `keep`, in their original order.
    pub fn select(&self, mut keep: impl FnMut(&ObsLabel) -> bool) -> Self {
        let idx: Vec<usize> = (0..self.n_obs()).filter(|&i| keep(&self.labels[i])).collect();
        Self {
            values: self.values.iter().map(|r| idx.iter().map(|&i| r[i]).collect()).collect(),
            labels: idx.iter().map(|&i| self.labels[i].clone()).collect(),
            n_excluded: self.n_excluded,
        }
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[i]).collect()
    }

    /// `draw,obs_index,loglik` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["draw", "obs_index", "loglik"])?;
        for (s, row) in self.values.iter().enumerate() {
            for (i, v) in row.iter().enumerate() {
                out.write_record([s.to_string(), i.to_string(), v.to_string()])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Log of the posterior mean density of one observation.
fn lpd_point(col: &[f64]) -> f64 {
    log_sum_exp(col) - (col.len() as f64).ln()
}

/// Log pointwise predictive density summed over observations.
pub fn lpd(ll: &LogLikMatrix) -> f64 {
    (0..ll.n_obs()).map(|i| lpd_point(&ll.column(i))).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LooPoint {
    pub elpd: f64,
    /// In-sample log predictive density of the same observation.
    pub lpd: f64,
    /// Pareto shape of the importance-weight tail; NaN when it could not be fit.
    pub k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LooResult {
    pub elpd_loo: f64,
    pub se: f64,
    /// Effective number of parameters, `lpd - elpd_loo`.
    pub p_loo: f64,
    pub pointwise: Vec<LooPoint>,
    #[serde(skip)]
    pub labels: Vec<ObsLabel>,
    pub n_k_high: usize,
    pub n_k_very_high: usize,
    pub n_draws: usize,
}

/// `sqrt(N * var(x))` with the sample variance.
fn se_of_sum(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    if x.len() < 2 {
        return 0.0;
    }
    let m = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
    (n * var).sqrt()
}

/// Leave-one-out expected log predictive density by Pareto-smoothed
/// importance sampling.
pub fn psis_loo(ll: &LogLikMatrix) -> LooResult {
    let pointwise: Vec<LooPoint> = (0..ll.n_obs())
        .into_par_iter()
        .map(|i| {
            let col = ll.column(i);
            let neg: Vec<f64> = col.iter().map(|v| -v).collect();
            let (lw, k) = psis_smooth(&neg);
            let terms: Vec<f64> = lw.iter().zip(&col).map(|(w, l)| w + l).collect();
            LooPoint { elpd: log_sum_exp(&terms), lpd: lpd_point(&col), k }
        })
        .collect();
    let elpd: Vec<f64> = pointwise.iter().map(|p| p.elpd).collect();
    let elpd_loo = elpd.iter().sum::<f64>();
    let lpd_total = pointwise.iter().map(|p| p.lpd).sum::<f64>();
    LooResult {
        elpd_loo,
        se: se_of_sum(&elpd),
        p_loo: lpd_total - elpd_loo,
        n_k_high: pointwise.iter().filter(|p| p.k > K_HIGH).count(),
        n_k_very_high: pointwise.iter().filter(|p| p.k > K_VERY_HIGH).count(),
        pointwise,
        labels: ll.labels.clone(),
        n_draws: ll.n_draws(),
    }
}

impl LooResult {
    /// Sum of pointwise elpd per group, in order of first appearance.
    pub fn group_totals(&self) -> Vec<(String, f64)> {
        let mut out: Vec<(String, f64)> = Vec::new();
        for (l, p) in self.labels.iter().zip(&self.pointwise) {
            match out.iter_mut().find(|(g, _)| *g == l.group) {
                Some((_, v)) => *v += p.elpd,
                None => out.push((l.group.clone(), p.elpd)),
            }
        }
        out
    }

    /// A short text report with any Pareto-k warnings.
    pub fn report(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "Computed from {} posterior draws.", self.n_draws);
        let _ = writeln!(s, "         Estimate   SE");
        let _ = writeln!(s, "elpd_loo {:>8.1} {:>4.1}", self.elpd_loo, self.se);
        let _ = writeln!(s, "p_loo    {:>8.1}", self.p_loo);
        let ks: Vec<f64> = self.pointwise.iter().map(|p| p.k).collect();
        let n = ks.len().max(1) as f64;
        let bins = [
            ("(-Inf, 0.5]", ks.iter().filter(|&&k| k <= 0.5).count()),
            (" (0.5, 0.7]", ks.iter().filter(|&&k| k > 0.5 && k <= K_HIGH).count()),
            ("   (0.7, 1]", ks.iter().filter(|&&k| k > K_HIGH && k <= K_VERY_HIGH).count()),
            ("   (1, Inf)", ks.iter().filter(|&&k| k > K_VERY_HIGH).count()),
            ("  not fitted", ks.iter().filter(|k| k.is_nan()).count()),
        ];
        let _ = writeln!(s);
        let _ = writeln!(s, "Pareto k diagnostic values:");
        let _ = writeln!(s, "              Count   Pct.");
        for (label, c) in bins {
            if c > 0 || !label.contains("not") {
                let _ = writeln!(s, "{label:<12} {c:>7} {:>5.1}%", 100.0 * c as f64 / n);
            }
        }
        if self.n_k_high > 0 {
            let _ = writeln!(
                s,
                "Warning: {} of {} Pareto k estimates above {K_HIGH} ({} above {K_VERY_HIGH}).",
                self.n_k_high,
                self.pointwise.len(),
                self.n_k_very_high
            );
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LooComparison {
    /// `elpd(b) - elpd(a)`.
    pub elpd_diff: f64,
    pub se_diff: f64,
    /// `|elpd_diff| > 2 se_diff`.
    pub flagged: bool,
}

pub fn loo_compare(a: &LooResult, b: &LooResult) -> Result<LooComparison, EvalError> {
    if a.labels != b.labels || a.pointwise.len() != b.pointwise.len() {
        return Err(EvalError::LabelMismatch);
    }
    let diff: Vec<f64> = a.pointwise.iter().zip(&b.pointwise).map(|(x, y)| y.elpd - x.elpd).collect();
    let elpd_diff = diff.iter().sum::<f64>();
    let se_diff = se_of_sum(&diff);
    Ok(LooComparison { elpd_diff, se_diff, flagged: elpd_diff.abs() > 2.0 * se_diff })
}

/// Per-group elpd totals of several fits side by side, one row per fit,
/// with a total column.
pub fn group_table(fits: &[(&str, &LooResult)]) -> String {
    let Some((_, first)) = fits.first() else {
        return String::new();
    };
    let groups: Vec<String> = first.group_totals().into_iter().map(|(g, _)| g).collect();
    let name_w = fits.iter().map(|(n, _)| n.len()).max().unwrap_or(0);
    let mut s = String::new();
    let _ = write!(s, "{:name_w$}", "");
    for g in &groups {
        let _ = write!(s, " {g:>8}");
    }
    let _ = writeln!(s, " {:>8}", "total");
    for (name, r) in fits {
        let _ = write!(s, "{name:<name_w$}");
        let totals = r.group_totals();
        for g in &groups {
            let v = totals.iter().find(|(id, _)| id == g).map_or(f64::NAN, |(_, v)| *v);
            let _ = write!(s, " {v:>8.1}");
        }
        let _ = writeln!(s, " {:>8.1}", r.elpd_loo);
    }
    s
}
