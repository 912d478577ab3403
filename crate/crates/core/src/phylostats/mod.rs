//! GLS statistics over phylogenetic covariance: Blomberg's K with a
//! permutation test, phylogenetic Pearson correlation, aggregation over tree
//! samples, and a seeded Brownian-motion simulator used as an oracle.

mod aggregate;
mod gls;
mod simulate;

pub use aggregate::{
    correlation_over_sample, signal_over_sample, AggregateOptions, CorrResult, SignalResult,
};
pub use gls::{
    blomberg_k, correlation_p, gls_mean, k_permutation_test, phylo_correlation, TraitVector,
};
pub use simulate::{simulate_bm, BmSampler, RateMatrix};

use thiserror::Error;

use crate::phylotree::TreeError;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("trait `{0}` does not cover the covariance taxa")]
    TaxaMismatch(String),
    #[error("covariance matrix is singular; enable --jitter to regularize zero-length branches")]
    SingularCovariance,
    #[error("degenerate trait `{0}`: all values equal")]
    DegenerateTrait(String),
    #[error("zero evolutionary variance in trait `{0}`")]
    ZeroVariance(String),
    #[error("rate matrix is not positive semidefinite")]
    NotPsd,
    #[error("tree {index}: missing taxa: {}", .taxa.join(", "))]
    TreeMissingTaxa { index: usize, taxa: Vec<String> },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
}
