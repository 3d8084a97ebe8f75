//! What a model is: parameters with bounds and priors, an ODE system, an
//! observation model, plus grouped datasets and synthetic data generation.

mod dataset;
mod observation;
mod params;
mod prior;
mod simulate;

pub use dataset::{Dataset, Group, ObsLabel};
pub use observation::{NoiseModel, ObservationModel, PointTerm};
pub use params::{Bounds, Constrained, Parameter, ParameterSpace};
pub use prior::PriorDist;
pub use simulate::{simulate_data, simulate_groups, GroupDesign};

use thiserror::Error;

use crate::ode::{OdeError, OdeSystem};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("parameter {name} = {value} is on or outside its bounds")]
    OutOfBounds { name: String, value: f64 },
    #[error("expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("unknown override {0:?}")]
    UnknownOverride(String),
    #[error(transparent)]
    Solver(#[from] OdeError),
}

/// An ODE system that can be specialised per data group, e.g. to take an
/// initial value from the group's first observation.
pub trait ModelSystem: OdeSystem + Clone + PartialEq {
    fn for_group(&self, _group: &Group) -> Self {
        self.clone()
    }
}

/// ODE system, parameter space and observation model wired together.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeModel<S> {
    pub name: String,
    pub system: S,
    pub space: ParameterSpace,
    /// Positions in the constrained parameter vector forming the ODE parameters `xi`.
    pub ode_params: Vec<usize>,
    pub observation: ObservationModel,
}

impl<S: ModelSystem> OdeModel<S> {
    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.space.len();
        if self.ode_params.len() != self.system.n_params() {
            return Err(ModelError::InvalidModel(format!(
                "{} ODE parameter indices for a system taking {}",
                self.ode_params.len(),
                self.system.n_params()
            )));
        }
        let bad_index = self
            .ode_params
            .iter()
            .chain(self.observation.noise_indices().iter())
            .any(|&i| i >= n);
        let bad_state = self
            .observation
            .channels
            .iter()
            .flatten()
            .any(|&s| s >= self.system.dim());
        if bad_index || bad_state {
            return Err(ModelError::InvalidModel("index out of range".into()));
        }
        if let Some(p) = self.space.params.iter().find(|p| !p.prior.is_valid()) {
            return Err(ModelError::InvalidModel(format!(
                "invalid prior for {}: {:?}",
                p.name, p.prior
            )));
        }
        Ok(())
    }

    pub fn xi(&self, theta_c: &[f64]) -> Vec<f64> {
        self.ode_params.iter().map(|&i| theta_c[i]).collect()
    }

    /// Overrides the prior of a named parameter.
    pub fn set_prior(&mut self, name: &str, prior: PriorDist) -> Result<(), ModelError> {
        let idx = self
            .space
            .index_of(name)
            .ok_or_else(|| ModelError::UnknownOverride(name.to_string()))?;
        if !prior.is_valid() {
            return Err(ModelError::InvalidModel(format!("invalid prior for {name}: {prior:?}")));
        }
        self.space.params[idx].prior = prior;
        Ok(())
    }
}
