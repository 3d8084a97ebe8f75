use std::fmt::Write as _;

use serde::Serialize;

use super::convergence::{ess_bulk, ess_tail, quantile_sorted, rhat};
use super::DiagnosticError;
use crate::samplers::{ChainOutput, IterStats};

pub const DEFAULT_PROBS: [f64; 3] = [0.05, 0.5, 0.95];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    /// Monte Carlo standard error of the mean, `sd / sqrt(ess_bulk)`.
    pub se_mean: f64,
    pub sd: f64,
    pub quantiles: Vec<f64>,
    pub ess_bulk: f64,
    pub ess_tail: f64,
    pub rhat: f64,
    /// ESS hit the overdispersion cap.
    pub ess_capped: bool,
    /// Some chain was constant; `rhat` is `+inf` and the ESS values are NaN.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticSummary {
    pub probs: Vec<f64>,
    pub params: Vec<ParamSummary>,
    pub n_chains: usize,
    pub n_draws: usize,
    pub n_divergent: usize,
    pub n_max_treedepth: usize,
    pub max_tree_depth: Option<usize>,
    pub warnings: Vec<String>,
}

/// Summarises `chains[c][s][p]` (constrained draws). `stats` may be empty for
/// samplers without transition statistics.
pub fn summarize(
    names: &[String],
    chains: &[Vec<Vec<f64>>],
    stats: &[Vec<IterStats>],
    probs: &[f64],
    max_tree_depth: Option<usize>,
) -> DiagnosticSummary {
    let n_chains = chains.len();
    let n_draws = chains.first().map_or(0, |c| c.len());
    let mut params = Vec::with_capacity(names.len());
    for (p, name) in names.iter().enumerate() {
        let per_chain: Vec<Vec<f64>> = chains
            .iter()
            .map(|c| c.iter().map(|row| row[p]).collect())
            .collect();
        params.push(summarize_param(name, &per_chain, probs));
    }
    let n_divergent = stats.iter().flatten().filter(|s| s.divergent).count();
    let n_max_treedepth = max_tree_depth.map_or(0, |d| {
        stats.iter().flatten().filter(|s| s.tree_depth >= d).count()
    });

    let mut warnings = Vec::new();
    if n_divergent > 0 {
        warnings.push(format!(
            "{n_divergent} divergent transitions after warmup"
        ));
    }
    if n_max_treedepth > 0 {
        warnings.push(format!(
            "{n_max_treedepth} transitions hit the maximum tree depth of {}",
            max_tree_depth.unwrap_or(0)
        ));
    }
    let degenerate: Vec<&str> = params.iter().filter(|s| s.degenerate).map(|s| s.name.as_str()).collect();
    if !degenerate.is_empty() {
        warnings.push(format!("constant chains for: {}", degenerate.join(", ")));
    }
    let high_rhat: Vec<&str> = params
        .iter()
        .filter(|s| !s.degenerate && s.rhat > 1.01)
        .map(|s| s.name.as_str())
        .collect();
    if !high_rhat.is_empty() {
        warnings.push(format!("R-hat above 1.01 for: {}", high_rhat.join(", ")));
    }
    let min_ess = 100.0 * n_chains as f64;
    let low_ess: Vec<&str> = params
        .iter()
        .filter(|s| !s.degenerate && (s.ess_bulk < min_ess || s.ess_tail < min_ess))
        .map(|s| s.name.as_str())
        .collect();
    if !low_ess.is_empty() {
        warnings.push(format!(
            "bulk or tail ESS below {min_ess} for: {}",
            low_ess.join(", ")
        ));
    }

    DiagnosticSummary {
        probs: probs.to_vec(),
        params,
        n_chains,
        n_draws,
        n_divergent,
        n_max_treedepth,
        max_tree_depth,
        warnings,
    }
}

/// Summarises sampler output on the constrained scale.
pub fn summarize_chains(
    names: &[String],
    chains: &[ChainOutput],
    probs: &[f64],
    max_tree_depth: Option<usize>,
) -> DiagnosticSummary {
    let draws: Vec<Vec<Vec<f64>>> = chains.iter().map(|c| c.draws_constrained.clone()).collect();
    let stats: Vec<Vec<IterStats>> = chains.iter().map(|c| c.stats.clone()).collect();
    summarize(names, &draws, &stats, probs, max_tree_depth)
}

fn summarize_param(name: &str, chains: &[Vec<f64>], probs: &[f64]) -> ParamSummary {
    let mut pooled: Vec<f64> = chains.iter().flatten().copied().collect();
    let n = pooled.len() as f64;
    let mean = pooled.iter().sum::<f64>() / n;
    let sd = if pooled.len() > 1 {
        (pooled.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        f64::NAN
    };
    pooled.sort_by(f64::total_cmp);
    let quantiles = probs.iter().map(|&p| quantile_sorted(&pooled, p)).collect();

    let (rhat, bulk, tail, degenerate) = match (rhat(chains), ess_bulk(chains), ess_tail(chains)) {
        (Ok(r), Ok(b), Ok(t)) => (r, Some(b), Some(t), false),
        (Err(DiagnosticError::DegenerateChain(_)), _, _) => (f64::INFINITY, None, None, true),
        (r, b, t) => (
            r.unwrap_or(f64::NAN),
            b.ok(),
            t.ok(),
            false,
        ),
    };
    let ess_bulk = bulk.map_or(f64::NAN, |e| e.value);
    ParamSummary {
        name: name.to_string(),
        mean,
        se_mean: sd / ess_bulk.sqrt(),
        sd,
        quantiles,
        ess_bulk,
        ess_tail: tail.map_or(f64::NAN, |e| e.value),
        rhat,
        ess_capped: bulk.is_some_and(|e| e.capped) || tail.is_some_and(|e| e.capped),
        degenerate,
    }
}

fn percent_label(p: f64) -> String {
    format!("{}%", (p * 1000.0).round() / 10.0)
}

fn csv_label(p: f64) -> String {
    let pct = (p * 1000.0).round() / 10.0;
    if pct.fract() == 0.0 {
        format!("q{:02}", pct as u32)
    } else {
        format!("q{pct}")
    }
}

impl DiagnosticSummary {
    pub fn param(&self, name: &str) -> Option<&ParamSummary> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Rstan-style text table followed by any warning lines.
    pub fn render_table(&self, model_name: &str, n_warmup: usize) -> String {
        let mut out = String::new();
        let total = self.n_chains * self.n_draws;
        let _ = writeln!(out, "Inference for model: {model_name}.");
        let _ = writeln!(
            out,
            "{} chains, each with iter={}; warmup={}; thin=1;",
            self.n_chains,
            n_warmup + self.n_draws,
            n_warmup
        );
        let _ = writeln!(
            out,
            "post-warmup draws per chain={}, total post-warmup draws={}.",
            self.n_draws, total
        );
        out.push('\n');

        let mut header = vec!["mean".to_string(), "se_mean".into(), "sd".into()];
        header.extend(self.probs.iter().map(|&p| percent_label(p)));
        header.push("n_eff".into());
        header.push("Rhat".into());
        let rows: Vec<Vec<String>> = self
            .params
            .iter()
            .map(|s| {
                let mut r = vec![
                    format!("{:.2}", s.mean),
                    format!("{:.2}", s.se_mean),
                    format!("{:.2}", s.sd),
                ];
                r.extend(s.quantiles.iter().map(|q| format!("{q:.2}")));
                r.push(if s.ess_bulk.is_finite() {
                    format!("{}", s.ess_bulk.round() as i64)
                } else {
                    "NaN".into()
                });
                r.push(format!("{:.2}", s.rhat));
                r
            })
            .collect();
        let name_w = self.params.iter().map(|s| s.name.len()).max().unwrap_or(0);
        let widths: Vec<usize> = (0..header.len())
            .map(|j| rows.iter().map(|r| r[j].len()).chain([header[j].len()]).max().unwrap_or(0))
            .collect();
        let _ = write!(out, "{:name_w$}", "");
        for (h, w) in header.iter().zip(&widths) {
            let _ = write!(out, " {h:>w$}");
        }
        out.push('\n');
        for (s, r) in self.params.iter().zip(&rows) {
            let _ = write!(out, "{:<name_w$}", s.name);
            for (v, w) in r.iter().zip(&widths) {
                let _ = write!(out, " {v:>w$}");
            }
            out.push('\n');
        }
        for w in &self.warnings {
            let _ = writeln!(out, "Warning: {w}.");
        }
        out
    }

    /// Machine-readable summary: `param,mean,se_mean,sd,q05,q50,q95,ess_bulk,ess_tail,rhat`
    /// for the default quantiles.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["param".to_string(), "mean".into(), "se_mean".into(), "sd".into()];
        header.extend(self.probs.iter().map(|&p| csv_label(p)));
        header.extend(["ess_bulk".into(), "ess_tail".into(), "rhat".into()]);
        w.write_record(&header).expect("in-memory write");
        for s in &self.params {
            let mut rec = vec![s.name.clone(), s.mean.to_string(), s.se_mean.to_string(), s.sd.to_string()];
            rec.extend(s.quantiles.iter().map(|q| q.to_string()));
            rec.extend([s.ess_bulk.to_string(), s.ess_tail.to_string(), s.rhat.to_string()]);
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}
