//! Commands behind the `odebayes` binary. Each returns the text it would
//! print so tests can drive them without a subprocess.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use odebayes::diagnostics::{quantile_sorted, summarize_chains, DEFAULT_PROBS};
use odebayes::evaluation::{loo_compare, lpd, posterior_predictive, psis_loo, EvalError, LogLikMatrix, LooResult};
use odebayes::io::{
    dataset_to_csv, parse_draws_csv, read_dataset, read_loglik, read_manifest, read_treatments, sampler_stats_csv,
    sha256_hex, treatments_to_csv, write_atomic, write_loglik, write_manifest, DrawsCache, HoldoutMode, IoError,
    Manifest, RunConfig,
};
use odebayes::model::{Dataset, ModelError};
use odebayes::models::{make_model, simulate_cohort, BuiltinSystem};
use odebayes::samplers::{run_chains, Algorithm, SamplerError};
use odebayes::target::{LogDensity, OdeTarget};
use thiserror::Error;

pub const DATA_FILE: &str = "data.csv";
pub const TREATMENTS_FILE: &str = "treatments.csv";
pub const DRAWS_FILE: &str = "draws.csv";
pub const DRAWS_CACHE_FILE: &str = "draws.bin";
pub const STATS_FILE: &str = "sampler_stats.csv";
pub const SUMMARY_TXT: &str = "summary.txt";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const CONFIG_COPY: &str = "config.toml";
pub const LOGLIK_STEM: &str = "loglik";
pub const HOLDOUT_STEM: &str = "loglik_holdout";
pub const PREDICT_FILE: &str = "predictive.csv";
pub const LOO_FILE: &str = "loo.txt";

/// Quantile levels of the predictive bands.
pub const BAND_PROBS: [f64; 5] = [0.025, 0.25, 0.5, 0.75, 0.975];

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{0}")]
    Usage(String),
}

/// What a command wrote and what it reports.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub dir: PathBuf,
    pub files: Vec<String>,
    pub stdout: String,
}

fn write_text(dir: &Path, name: &str, text: &str, files: &mut Vec<String>) -> Result<(), IoError> {
    write_atomic(&dir.join(name), text.as_bytes())?;
    files.push(name.to_string());
    Ok(())
}

fn finish(command: &str, cfg: &RunConfig, dir: &Path, files: Vec<String>, start: Instant) -> Result<(), IoError> {
    let m = Manifest::new(command, cfg, start.elapsed().as_secs_f64(), dir, &files)?;
    write_manifest(dir, &m)
}

/// Simulates a dataset from the configured model and writes `data.csv`,
/// plus `treatments.csv` when the design includes treatment.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let spec = cfg.simulate.resolve(cfg.model.kind);
    let data = simulate_cohort(cfg.model.kind, &cfg.overrides(), &spec, cfg.sampler.seed, &cfg.solver)?;
    let dir = cfg.out_dir();
    let mut files = Vec::new();
    write_text(&dir, DATA_FILE, &dataset_to_csv(&data), &mut files)?;
    if !spec.treatments.is_empty() {
        let t = treatments_to_csv(data.groups.iter().map(|g| (g.id.as_str(), &g.forcing)));
        write_text(&dir, TREATMENTS_FILE, &t, &mut files)?;
    }
    write_text(&dir, CONFIG_COPY, &cfg.to_toml(), &mut files)?;
    finish("simulate", cfg, &dir, files.clone(), start)?;
    let stdout = format!(
        "Simulated {} groups, {} observations from the {} model into {}.\n",
        data.n_groups(),
        data.n_obs(),
        cfg.model.kind,
        dir.join(DATA_FILE).display()
    );
    Ok(Outcome { dir, files, stdout })
}

/// Reads the configured dataset and attaches treatment schedules.
pub fn load_data(cfg: &RunConfig) -> Result<Dataset, CliError> {
    let path = cfg
        .data
        .path
        .as_ref()
        .ok_or_else(|| IoError::Config("data.path is required".into()))?;
    let mut data = read_dataset(&cfg.resolve(path))?;
    if let Some(t) = &cfg.data.treatments {
        odebayes::io::apply_treatments(&mut data, &read_treatments(&cfg.resolve(t))?)?;
    }
    Ok(data)
}

pub fn build_target(cfg: &RunConfig, data: Dataset) -> Result<OdeTarget<BuiltinSystem>, CliError> {
    let bundle = make_model(cfg.model.kind, &cfg.overrides())?;
    let pooling = cfg.pooling.clone().unwrap_or(bundle.pooling);
    Ok(OdeTarget::new(bundle.model, data, &pooling, cfg.solver)?)
}

/// Pointwise log-likelihood of the held-out observations: evaluated on the
/// full dataset, so per-group settings read from the data match the fit,
/// then restricted to observations past each group's cut-off.
pub fn holdout_loglik(
    cfg: &RunConfig,
    data: &Dataset,
    draws: &[Vec<f64>],
) -> Result<Option<LogLikMatrix>, CliError> {
    if cfg.holdout == HoldoutMode::None {
        return Ok(None);
    }
    let cutoffs: Vec<(String, f64)> = data.groups.iter().map(|g| (g.id.clone(), cfg.holdout.cutoff(g))).collect();
    let full = build_target(cfg, data.clone())?;
    let ll = LogLikMatrix::from_draws(&full, draws)?;
    let held = ll.select(|l| l.time >= cutoffs.iter().find(|(g, _)| *g == l.group).map_or(f64::INFINITY, |c| c.1));
    Ok((held.n_obs() > 0).then_some(held))
}

/// Fits the configured model and writes draws, sampler statistics, the
/// summary table and the pointwise log-likelihood.
pub fn cmd_fit(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let data = load_data(cfg)?;
    let (train, _) = cfg.holdout.split(&data);
    let target = build_target(cfg, train)?;
    cfg.sampler.validate(target.dim())?;
    let chains = run_chains(&target, &cfg.sampler)?;
    let names = target.constrained_names();

    let dir = cfg.out_dir();
    let mut files = Vec::new();
    let draws_text = odebayes::io::draws_csv(&names, &chains);
    write_text(&dir, DRAWS_FILE, &draws_text, &mut files)?;
    let rows: Vec<Vec<f64>> = chains.iter().flat_map(|c| c.draws_constrained.iter().cloned()).collect();
    DrawsCache::write(&dir.join(DRAWS_CACHE_FILE), &sha256_hex(draws_text.as_bytes()), &rows)?;
    files.push(DRAWS_CACHE_FILE.to_string());
    write_text(&dir, STATS_FILE, &sampler_stats_csv(&chains), &mut files)?;

    let max_depth = (cfg.sampler.algorithm == Algorithm::Nuts).then_some(cfg.sampler.max_tree_depth);
    let summary = summarize_chains(&names, &chains, &DEFAULT_PROBS, max_depth);
    let table = summary.render_table(&cfg.model.kind.to_string(), cfg.sampler.n_warmup);
    write_text(&dir, SUMMARY_TXT, &table, &mut files)?;
    write_text(&dir, SUMMARY_CSV, &summary.to_csv(), &mut files)?;

    let mut stdout = table;
    let ll = LogLikMatrix::from_chains(&target, &chains)?;
    files.extend(write_loglik(&dir, LOGLIK_STEM, &ll)?);
    if ll.n_excluded > 0 {
        let _ = writeln!(stdout, "Warning: log-likelihood failed for {} draws, which were left out.", ll.n_excluded);
    }
    let unconstrained: Vec<Vec<f64>> = chains.iter().flat_map(|c| c.draws.iter().cloned()).collect();
    if let Some(held) = holdout_loglik(cfg, &data, &unconstrained)? {
        files.extend(write_loglik(&dir, HOLDOUT_STEM, &held)?);
    }
    write_text(&dir, CONFIG_COPY, &cfg.to_toml(), &mut files)?;
    finish("fit", cfg, &dir, files.clone(), start)?;
    Ok(Outcome { dir, files, stdout })
}

/// Constrained draws from `path`, through the binary cache when it is
/// current.
pub fn load_draws(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let bytes = fs::read(path).map_err(|e| IoError::Io { path: path.to_path_buf(), source: e })?;
    let text = String::from_utf8_lossy(&bytes);
    let header = text.lines().next().unwrap_or("");
    let names = parse_draws_csv(header, path)?.names;
    if let Some(rows) = DrawsCache::read(&path.with_file_name(DRAWS_CACHE_FILE), &sha256_hex(&bytes)) {
        if rows.iter().all(|r| r.len() == names.len()) {
            return Ok((names, rows));
        }
    }
    Ok((names, parse_draws_csv(&text, path)?.values))
}

/// Per-time quantile bands of the noise-free trajectories (`mean_*`) and
/// of new observations (`pred_*`) for every group and channel, written to
/// the `predict` subdirectory of the output directory.
pub fn cmd_predict(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let data = load_data(cfg)?;
    let grid = cfg.predict.grid(&data).times()?;
    let target = build_target(cfg, data)?;
    let draws_path = match &cfg.predict.draws {
        Some(p) => cfg.resolve(p),
        None => cfg.out_dir().join(DRAWS_FILE),
    };
    let (names, rows) = load_draws(&draws_path)?;
    let expected = target.constrained_names();
    if names != expected {
        return Err(CliError::Model(ModelError::DimensionMismatch { expected: expected.len(), got: names.len() }));
    }
    let pred = posterior_predictive(&target, &rows, &grid, cfg.sampler.seed);

    let mut s = String::from("group,channel,time");
    for q in ["mean", "pred"] {
        for p in BAND_PROBS {
            let _ = write!(s, ",{q}_q{}", 100.0 * p);
        }
    }
    s.push('\n');
    let band = |vals: &mut Vec<f64>| -> Vec<f64> {
        vals.sort_by(f64::total_cmp);
        BAND_PROBS.iter().map(|&p| quantile_sorted(vals, p)).collect()
    };
    for g in &pred.groups {
        let n_ch = g.y_mean.first().map_or(0, Vec::len);
        for c in 0..n_ch {
            for (i, &t) in grid.iter().enumerate() {
                let mut m: Vec<f64> = g.y_mean.iter().map(|d| d[c][i]).collect();
                let mut y: Vec<f64> = g.y_pred.iter().map(|d| d[c][i]).collect();
                let _ = write!(s, "{},{c},{}", g.id, odebayes::io::fmt_f64(t));
                for v in band(&mut m).into_iter().chain(band(&mut y)) {
                    let _ = write!(s, ",{}", odebayes::io::fmt_f64(v));
                }
                s.push('\n');
            }
        }
    }
    let dir = cfg.out_dir().join("predict");
    let mut files = Vec::new();
    write_text(&dir, PREDICT_FILE, &s, &mut files)?;
    finish("predict", cfg, &dir, files.clone(), start)?;
    let mut stdout = format!(
        "Predictive bands for {} groups on {} times from {} draws written to {}.\n",
        pred.groups.len(),
        grid.len(),
        rows.len() - pred.n_skipped,
        dir.join(PREDICT_FILE).display()
    );
    if pred.n_skipped > 0 {
        let _ = writeln!(stdout, "Warning: {} draws skipped because the solver failed.", pred.n_skipped);
    }
    Ok(Outcome { dir, files, stdout })
}

/// PSIS-LOO for one run directory. With a holdout configured the held-out
/// log-likelihood is scored, otherwise the training one.
pub fn run_loo(run: &Path) -> Result<(LooResult, f64), CliError> {
    let m = read_manifest(run)?;
    m.verify(run)?;
    let stem = if m.artifact(&format!("{HOLDOUT_STEM}.csv")).is_some() { HOLDOUT_STEM } else { LOGLIK_STEM };
    let ll = read_loglik(run, stem)?;
    Ok((psis_loo(&ll), lpd(&ll)))
}

/// Reports PSIS-LOO for one run, or for two runs side by side with their
/// difference `elpd(second) - elpd(first)`. The report goes to the `loo`
/// subdirectory of the output directory.
pub fn cmd_loo(cfg: &RunConfig, runs: &[PathBuf]) -> Result<Outcome, CliError> {
    let start = Instant::now();
    if runs.is_empty() || runs.len() > 2 {
        return Err(CliError::Usage("loo takes one or two run directories".into()));
    }
    let results: Vec<(String, LooResult, f64)> = runs
        .iter()
        .map(|r| {
            let (loo, lpd) = run_loo(r)?;
            Ok((r.display().to_string(), loo, lpd))
        })
        .collect::<Result<_, CliError>>()?;
    let mut s = String::new();
    for (name, r, lpd) in &results {
        let _ = writeln!(s, "{name}:");
        s.push_str(&r.report());
        let _ = writeln!(s, "lpd      {lpd:>8.1}");
        s.push('\n');
    }
    let labelled: Vec<(&str, &LooResult)> = results.iter().map(|(n, r, _)| (n.as_str(), r)).collect();
    s.push_str("elpd_loo by group:\n");
    s.push_str(&odebayes::evaluation::group_table(&labelled));
    if let [(_, a, _), (_, b, _)] = results.as_slice() {
        let c = loo_compare(a, b)?;
        let _ = writeln!(
            s,
            "\nelpd_diff {:.1} se_diff {:.1}{}",
            c.elpd_diff,
            c.se_diff,
            if c.flagged { " (|elpd_diff| > 2 se_diff)" } else { "" }
        );
    }
    let dir = cfg.out_dir().join("loo");
    let mut files = Vec::new();
    write_text(&dir, LOO_FILE, &s, &mut files)?;
    finish("loo", cfg, &dir, files.clone(), start)?;
    Ok(Outcome { dir, files, stdout: s })
}
