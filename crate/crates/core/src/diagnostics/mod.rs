//! Convergence diagnostics and posterior summaries.

mod convergence;
mod ks;
mod summary;

pub use convergence::{
    ess_basic, ess_bulk, ess_raw, ess_tail, quantile, quantile_sorted, rank_normalize, rhat,
    rhat_basic, split_chains, Ess, ESS_CAP,
};
pub use ks::{ks_critical, ks_two_sample};
pub use summary::{summarize, summarize_chains, DiagnosticSummary, ParamSummary, DEFAULT_PROBS};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiagnosticError {
    #[error("need at least 2 chains, got {0}")]
    TooFewChains(usize),
    #[error("need at least 4 draws per chain, got {0}")]
    TooFewDraws(usize),
    #[error("chains have different lengths")]
    RaggedChains,
    #[error("draws contain non-finite values")]
    NonFinite,
    #[error("chain {0} is constant")]
    DegenerateChain(usize),
}
