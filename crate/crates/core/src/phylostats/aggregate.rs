//! Statistics aggregated over a posterior sample of trees.
//!
//! Each tree is pruned to the trait's taxa, its covariance is factored, and
//! the per-tree statistic is computed independently, so trees fan out across
//! threads. Summaries (mean, sd, percentile interval) are taken over the
//! per-tree values. Permutation streams are keyed by (seed, tree index), so
//! results do not depend on thread scheduling.

use nalgebra::DVector;
use rayon::prelude::*;

use super::gls::{ensure_varying, Gls, TraitVector};
use super::{correlation_p, StatsError};
use crate::phylotree::{PhyloCovariance, Phylogeny, TreeError, TreeSample};
use crate::rng::stream_rng;

#[derive(Debug, Clone)]
pub struct AggregateOptions {
    pub jitter: bool,
    /// Permutations per tree for the signal test; `None` skips the test.
    pub n_perm: Option<usize>,
    pub seed: u64,
}

impl Default for AggregateOptions {
    fn default() -> Self {
        Self {
            jitter: false,
            n_perm: Some(999),
            seed: 0,
        }
    }
}

/// Blomberg's K over a tree sample, with an optional permutation test.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalResult {
    pub trait_name: String,
    /// Per-tree K, in tree order.
    pub k: Vec<f64>,
    pub mean_k: f64,
    pub sd_k: f64,
    pub lo95: f64,
    pub hi95: f64,
    /// Mean of the per-tree permutation p-values.
    pub p_perm: Option<f64>,
    pub n_taxa: usize,
}

/// Phylogenetic correlation over a tree sample.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrResult {
    pub x_name: String,
    pub y_name: String,
    /// Per-tree correlation, in tree order.
    pub r: Vec<f64>,
    pub mean_r: f64,
    pub sd_r: f64,
    pub lo95: f64,
    pub hi95: f64,
    /// Two-sided t-test p-value for the mean correlation.
    pub p: f64,
    pub n_taxa: usize,
}

fn pruned_cov(
    tree: &Phylogeny,
    index: usize,
    taxa: &[String],
) -> Result<PhyloCovariance, StatsError> {
    let pruned = tree.prune(taxa).map_err(|err| match err {
        TreeError::UnknownTaxa(missing) => StatsError::TreeMissingTaxa {
            index,
            taxa: missing,
        },
        other => StatsError::Tree(other),
    })?;
    Ok(pruned.vcv())
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Linear-interpolation percentile on sorted data, h = (n - 1) q.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 < sorted.len() {
        sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac
    } else {
        sorted[lo]
    }
}

/// Mean, sample sd (0 for a single value), and the central 95% interval.
fn summarize(values: &[f64]) -> (f64, f64, f64, f64) {
    let m = mean(values);
    let sd = if values.len() > 1 {
        let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
        (ss / (values.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("statistics are finite"));
    (
        m,
        sd,
        percentile(&sorted, 0.025),
        percentile(&sorted, 0.975),
    )
}

/// Blomberg's K for `x` on every tree in `sample`.
///
/// Trees may contain extra taxa; each is pruned to the trait's taxa first.
/// A tree that lacks some of them is an error naming the tree and the taxa.
pub fn signal_over_sample(
    sample: &TreeSample,
    x: &TraitVector,
    opts: &AggregateOptions,
) -> Result<SignalResult, StatsError> {
    if x.len() < 2 {
        return Err(StatsError::Invalid(format!(
            "trait `{}`: Blomberg's K needs at least 2 taxa",
            x.name()
        )));
    }
    if let Some(n_perm) = opts.n_perm {
        if n_perm < 99 {
            return Err(StatsError::Invalid(format!(
                "permutation test needs at least 99 permutations, got {n_perm}"
            )));
        }
    }
    ensure_varying(x.values(), || {
        StatsError::DegenerateTrait(x.name().to_string())
    })?;

    let per_tree: Vec<Result<(f64, Option<f64>), StatsError>> = sample
        .trees()
        .par_iter()
        .enumerate()
        .map(|(index, tree)| {
            let cov = pruned_cov(tree, index, x.taxa())?;
            let values = x.reorder(cov.taxa())?;
            let gls = Gls::new(&cov, opts.jitter)?;
            let k = gls.k(&DVector::from_vec(values.clone()));
            let p = opts.n_perm.map(|n_perm| {
                let mut rng = stream_rng(opts.seed, "kperm", index as u64, 0);
                gls.permutation_p(&values, n_perm, &mut rng)
            });
            Ok((k, p))
        })
        .collect();
    let per_tree: Vec<(f64, Option<f64>)> = per_tree.into_iter().collect::<Result<_, _>>()?;

    let k: Vec<f64> = per_tree.iter().map(|(k, _)| *k).collect();
    let p_perm = opts
        .n_perm
        .map(|_| mean(&per_tree.iter().map(|(_, p)| p.unwrap()).collect::<Vec<_>>()));
    let (mean_k, sd_k, lo95, hi95) = summarize(&k);
    Ok(SignalResult {
        trait_name: x.name().to_string(),
        k,
        mean_k,
        sd_k,
        lo95,
        hi95,
        p_perm,
        n_taxa: x.len(),
    })
}

/// Phylogenetic correlation between `x` and `y` on every tree in `sample`.
///
/// The significance test uses the mean correlation and the taxon count, not
/// the tree count: trees are posterior draws, not independent observations.
pub fn correlation_over_sample(
    sample: &TreeSample,
    x: &TraitVector,
    y: &TraitVector,
    opts: &AggregateOptions,
) -> Result<CorrResult, StatsError> {
    let x_set: std::collections::BTreeSet<&str> = x.taxa().iter().map(String::as_str).collect();
    let y_set: std::collections::BTreeSet<&str> = y.taxa().iter().map(String::as_str).collect();
    if x_set != y_set {
        return Err(StatsError::TaxaMismatch(y.name().to_string()));
    }
    if x.len() < 3 {
        return Err(StatsError::Invalid(format!(
            "correlation of `{}` and `{}` needs at least 3 taxa, got {}",
            x.name(),
            y.name(),
            x.len()
        )));
    }
    ensure_varying(x.values(), || {
        StatsError::ZeroVariance(x.name().to_string())
    })?;
    ensure_varying(y.values(), || {
        StatsError::ZeroVariance(y.name().to_string())
    })?;

    let per_tree: Vec<Result<f64, StatsError>> = sample
        .trees()
        .par_iter()
        .enumerate()
        .map(|(index, tree)| {
            let cov = pruned_cov(tree, index, x.taxa())?;
            let xs = x.reorder(cov.taxa())?;
            let ys = y.reorder(cov.taxa())?;
            let gls = Gls::new(&cov, opts.jitter)?;
            gls.correlation(
                &DVector::from_vec(xs),
                &DVector::from_vec(ys),
                x.name(),
                y.name(),
            )
        })
        .collect();
    let r: Vec<f64> = per_tree.into_iter().collect::<Result<_, _>>()?;

    let (mean_r, sd_r, lo95, hi95) = summarize(&r);
    let p = correlation_p(mean_r, x.len())?;
    Ok(CorrResult {
        x_name: x.name().to_string(),
        y_name: y.name().to_string(),
        r,
        mean_r,
        sd_r,
        lo95,
        hi95,
        p,
        n_taxa: x.len(),
    })
}
