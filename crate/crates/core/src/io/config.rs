use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::model::{Dataset, Group, PriorDist};
use crate::models::{CohortSpec, ModelKind, ModelOverrides, TimeGrid};
use crate::ode::SolverConfig;
use crate::samplers::SamplerConfig;
use crate::target::PoolingStructure;

use super::{read_string, sha256_hex, IoError};

pub const ENV_SEED: &str = "ODEBAYES_SEED";
pub const ENV_OUT: &str = "ODEBAYES_OUT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelKind,
    #[serde(default)]
    pub priors: BTreeMap<String, PriorDist>,
    #[serde(default)]
    pub initial: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    /// Dataset CSV read by `fit` and `predict`.
    pub path: Option<PathBuf>,
    /// Treatment schedule CSV.
    pub treatments: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

/// Prediction grid; start and stop default to the data's time range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictSection {
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub count: usize,
    /// Draws file to predict from; defaults to `draws.csv` in the output
    /// directory.
    pub draws: Option<PathBuf>,
}

impl Default for PredictSection {
    fn default() -> Self {
        Self { start: None, stop: None, count: 101, draws: None }
    }
}

impl PredictSection {
    pub fn grid(&self, data: &Dataset) -> TimeGrid {
        let all = data.groups.iter().flat_map(|g| g.times.iter().copied());
        let lo = all.clone().fold(f64::INFINITY, f64::min);
        let hi = all.fold(f64::NEG_INFINITY, f64::max);
        TimeGrid::new(self.start.unwrap_or(lo), self.stop.unwrap_or(hi), self.count)
    }
}

/// Which observations are held out of the fit and scored afterwards.
/// Cycles start where a group's treatment switches on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HoldoutMode {
    #[default]
    None,
    /// Train on the first cycle: everything before the second switch-on.
    FirstCycle,
    /// Train on everything before the last switch-on.
    AllButLastCycle,
}

/// Times at which a schedule switches from zero to nonzero. A schedule that
/// is on from the start contributes `-inf`.
fn cycle_starts(g: &Group) -> Vec<f64> {
    let v = g.forcing.values();
    let bp = g.forcing.breakpoints();
    let mut starts = Vec::new();
    if v[0] != 0.0 {
        starts.push(f64::NEG_INFINITY);
    }
    for i in 1..v.len() {
        if v[i - 1] == 0.0 && v[i] != 0.0 {
            starts.push(bp[i - 1]);
        }
    }
    starts
}

impl HoldoutMode {
    /// Training cut-off for a group; observations at or after it are held
    /// out. Groups with fewer than two cycles are kept whole.
    pub fn cutoff(&self, g: &Group) -> f64 {
        let starts = cycle_starts(g);
        match self {
            HoldoutMode::None => f64::INFINITY,
            _ if starts.len() < 2 => f64::INFINITY,
            HoldoutMode::FirstCycle => starts[1],
            HoldoutMode::AllButLastCycle => starts[starts.len() - 1],
        }
    }

    /// `(train, holdout)`.
    pub fn split(&self, data: &Dataset) -> (Dataset, Dataset) {
        data.split(|g, t| t < self.cutoff(g))
    }
}

/// Synthetic data settings; unset fields take the model's defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub theta: BTreeMap<String, f64>,
    pub group_sd: Option<f64>,
    pub times: Option<TimeGrid>,
    pub n_groups: Option<usize>,
    pub treatments: Option<Vec<[f64; 2]>>,
    pub initial: BTreeMap<String, f64>,
}

impl SimulateSection {
    pub fn resolve(&self, kind: ModelKind) -> CohortSpec {
        let mut spec = CohortSpec::default_for(kind);
        spec.theta.extend(self.theta.iter().map(|(k, v)| (k.clone(), *v)));
        spec.initial.extend(self.initial.iter().map(|(k, v)| (k.clone(), *v)));
        if let Some(v) = self.group_sd {
            spec.group_sd = v;
        }
        if let Some(t) = self.times {
            spec.times = t;
        }
        if let Some(n) = self.n_groups {
            spec.n_groups = n;
        }
        if let Some(tr) = &self.treatments {
            spec.treatments = tr.iter().map(|&[a, b]| (a, b)).collect();
        }
        spec
    }
}

/// Everything a run needs besides the data files themselves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub data: DataSection,
    /// Model default when absent.
    #[serde(default)]
    pub pooling: Option<PoolingStructure>,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub predict: PredictSection,
    #[serde(default)]
    pub holdout: HoldoutMode,
    #[serde(default)]
    pub simulate: SimulateSection,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn new(kind: ModelKind) -> Self {
        Self {
            model: ModelSection { kind, priors: BTreeMap::new(), initial: BTreeMap::new() },
            data: DataSection::default(),
            pooling: None,
            sampler: SamplerConfig::default(),
            solver: SolverConfig::default(),
            output: OutputSection::default(),
            predict: PredictSection::default(),
            holdout: HoldoutMode::None,
            simulate: SimulateSection::default(),
            base_dir: PathBuf::new(),
        }
    }

    /// Parses TOML text; `path` labels errors and sets the base directory.
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, IoError> {
        let mut cfg: RunConfig =
            toml::from_str(text).map_err(|e| IoError::Toml { path: path.to_path_buf(), msg: e.to_string() })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file and applies the environment overrides.
    pub fn load(path: &Path) -> Result<Self, IoError> {
        let mut cfg = Self::from_toml(&read_string(path)?, path)?;
        cfg.apply_env(|k| std::env::var(k).ok())?;
        Ok(cfg)
    }

    /// Applies `ODEBAYES_SEED` and `ODEBAYES_OUT` as returned by `lookup`.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<(), IoError> {
        if let Some(s) = lookup(ENV_SEED) {
            self.sampler.seed = s
                .trim()
                .parse()
                .map_err(|_| IoError::Config(format!("{ENV_SEED}={s:?} is not an unsigned integer")))?;
        }
        if let Some(d) = lookup(ENV_OUT) {
            self.output.dir = PathBuf::from(d);
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), IoError> {
        if self.predict.count == 0 {
            return Err(IoError::Config("predict.count must be at least 1".into()));
        }
        if let Some(t) = &self.simulate.times {
            t.validate().map_err(|e| IoError::Config(e.to_string()))?;
        }
        if self.simulate.n_groups == Some(0) {
            return Err(IoError::Config("simulate.n_groups must be at least 1".into()));
        }
        self.solver.validate().map_err(|e| IoError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn overrides(&self) -> ModelOverrides {
        ModelOverrides { priors: self.model.priors.clone(), initial: self.model.initial.clone() }
    }

    /// `p` relative to the config file's directory unless absolute.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.resolve(&self.output.dir)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration serialises")
    }

    /// Hash of the canonical serialisation, so formatting and comments in
    /// the source file do not matter.
    pub fn hash(&self) -> String {
        sha256_hex(self.to_toml().as_bytes())
    }
}
