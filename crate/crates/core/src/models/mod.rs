//! Built-in models: bacterial competition, coral bleaching and prostate
//! cancer biomarker dynamics.

mod cohort;
mod coral;
mod prostate;
mod toy;

pub use cohort::{simulate_cohort, CohortSpec, TimeGrid};
pub use coral::{coral_model, Coral};
pub use prostate::{prostate_model, Prostate};
pub use toy::{toy_model, Toy};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::{Group, ModelError, ModelSystem, OdeModel, PriorDist};
use crate::ode::{OdeSystem, Real};
use crate::target::PoolingStructure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Toy,
    Coral,
    Prostate,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Toy, ModelKind::Coral, ModelKind::Prostate];
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Toy => "toy",
            ModelKind::Coral => "coral",
            ModelKind::Prostate => "prostate",
        })
    }
}

impl FromStr for ModelKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "toy" => Ok(ModelKind::Toy),
            "coral" => Ok(ModelKind::Coral),
            "prostate" => Ok(ModelKind::Prostate),
            other => Err(ModelError::InvalidModel(format!("unknown model kind {other:?}"))),
        }
    }
}

/// Any of the built-in systems, so a single target type serves every model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BuiltinSystem {
    Toy(Toy),
    Coral(Coral),
    Prostate(Prostate),
}

macro_rules! dispatch {
    ($self:ident, $s:ident => $e:expr) => {
        match $self {
            BuiltinSystem::Toy($s) => $e,
            BuiltinSystem::Coral($s) => $e,
            BuiltinSystem::Prostate($s) => $e,
        }
    };
}

impl OdeSystem for BuiltinSystem {
    fn dim(&self) -> usize {
        dispatch!(self, s => s.dim())
    }

    fn n_params(&self) -> usize {
        dispatch!(self, s => s.n_params())
    }

    fn t0(&self) -> f64 {
        dispatch!(self, s => s.t0())
    }

    fn rhs<T: Real>(&self, t: f64, y: &[T], xi: &[T], forcing: f64, dy: &mut [T]) {
        dispatch!(self, s => s.rhs(t, y, xi, forcing, dy))
    }

    fn initial_state<T: Real>(&self, xi: &[T], y0: &mut [T]) {
        dispatch!(self, s => s.initial_state(xi, y0))
    }

    fn jacobians(&self, t: f64, y: &[f64], xi: &[f64], forcing: f64, jy: &mut [f64], jx: &mut [f64]) -> bool {
        dispatch!(self, s => s.jacobians(t, y, xi, forcing, jy, jx))
    }
}

impl ModelSystem for BuiltinSystem {
    fn for_group(&self, group: &Group) -> Self {
        match self {
            BuiltinSystem::Toy(s) => BuiltinSystem::Toy(s.for_group(group)),
            BuiltinSystem::Coral(s) => BuiltinSystem::Coral(s.for_group(group)),
            BuiltinSystem::Prostate(s) => BuiltinSystem::Prostate(s.for_group(group)),
        }
    }
}

/// User adjustments to a built-in model.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelOverrides {
    /// Prior per parameter name.
    pub priors: BTreeMap<String, PriorDist>,
    /// Fixed initial states and start time: `C0`, `B0` (coral), `S0`, `D0`,
    /// `P0` (prostate) and `t0` (both). Setting `P0` stops the prostate model
    /// from reading it from the data.
    pub initial: BTreeMap<String, f64>,
}

/// A model with its default pooling.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub model: OdeModel<BuiltinSystem>,
    pub pooling: PoolingStructure,
}

fn wrap<S>(m: OdeModel<S>, f: impl FnOnce(S) -> BuiltinSystem) -> OdeModel<BuiltinSystem> {
    OdeModel {
        name: m.name,
        system: f(m.system),
        space: m.space,
        ode_params: m.ode_params,
        observation: m.observation,
    }
}

/// Builds a built-in model with overrides applied.
pub fn make_model(kind: ModelKind, overrides: &ModelOverrides) -> Result<ModelBundle, ModelError> {
    let unknown = |k: &str| Err(ModelError::UnknownOverride(k.to_string()));
    let (mut model, pooling) = match kind {
        ModelKind::Toy => {
            if let Some(k) = overrides.initial.keys().next() {
                return unknown(k);
            }
            (wrap(toy_model(), BuiltinSystem::Toy), PoolingStructure::complete())
        }
        ModelKind::Coral => {
            let mut sys = Coral::default();
            for (k, &v) in &overrides.initial {
                match k.as_str() {
                    "C0" => sys.c0 = v,
                    "B0" => sys.b0 = v,
                    "t0" => sys.t0 = v,
                    _ => return unknown(k),
                }
            }
            (wrap(coral_model(sys), BuiltinSystem::Coral), PoolingStructure::complete())
        }
        ModelKind::Prostate => {
            let mut sys = Prostate::default();
            for (k, &v) in &overrides.initial {
                match k.as_str() {
                    "S0" => sys.s0 = v,
                    "D0" => sys.d0 = v,
                    "P0" => {
                        sys.p0 = v;
                        sys.p0_from_data = false;
                    }
                    "t0" => sys.t0 = v,
                    _ => return unknown(k),
                }
            }
            (wrap(prostate_model(sys), BuiltinSystem::Prostate), PoolingStructure::none())
        }
    };
    if overrides.initial.values().any(|v| !v.is_finite()) {
        return Err(ModelError::InvalidModel("initial values must be finite".into()));
    }
    for (name, prior) in &overrides.priors {
        model.set_prior(name, *prior)?;
    }
    model.validate()?;
    Ok(ModelBundle { model, pooling })
}
