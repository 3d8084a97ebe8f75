//! Bayesian parameter inference for ODE models.
//!
//! The crate embeds first-order ODE systems in Gaussian likelihoods, samples
//! the resulting posteriors with random-walk Metropolis, Metropolis–Hastings,
//! static HMC and NUTS, checks the chains with rank-normalised R-hat, bulk and
//! tail ESS and divergence counts, and scores fitted models with lpd and
//! PSIS-LOO.

pub mod model;
pub mod ode;
pub mod target;
pub mod samplers;
pub mod diagnostics;
pub mod evaluation;
pub mod models;
pub mod io;
