//! Generalized least squares under a phylogenetic covariance matrix.
//!
//! Every statistic here reduces to triangular half-solves against the lower
//! Cholesky factor L of C: with u = L^-1 x and v = L^-1 y, the quadratic form
//! x' C^-1 y is u . v. Working with half-solves keeps the Cauchy-Schwarz
//! bound |x' C^-1 y|^2 <= (x' C^-1 x)(y' C^-1 y) true in floating point, so
//! correlations stay inside [-1, 1] up to rounding.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::StatsError;
use crate::phylotree::PhyloCovariance;
use crate::rng::stream_rng;

/// A named trait observed at the tips of a phylogeny.
///
/// Taxa are unique and every value is finite; both are checked at
/// construction so downstream statistics can assume them.
#[derive(Debug, Clone, PartialEq)]
pub struct TraitVector {
    name: String,
    taxa: Vec<String>,
    values: Vec<f64>,
}

impl TraitVector {
    pub fn new(
        name: impl Into<String>,
        taxa: Vec<String>,
        values: Vec<f64>,
    ) -> Result<Self, StatsError> {
        let name = name.into();
        if taxa.len() != values.len() {
            return Err(StatsError::Invalid(format!(
                "trait `{name}`: {} taxa but {} values",
                taxa.len(),
                values.len()
            )));
        }
        if taxa.is_empty() {
            return Err(StatsError::Invalid(format!("trait `{name}` is empty")));
        }
        let mut seen = std::collections::BTreeSet::new();
        for taxon in &taxa {
            if !seen.insert(taxon.as_str()) {
                return Err(StatsError::Invalid(format!(
                    "trait `{name}`: duplicate taxon `{taxon}`"
                )));
            }
        }
        for (taxon, value) in taxa.iter().zip(&values) {
            if !value.is_finite() {
                return Err(StatsError::Invalid(format!(
                    "trait `{name}`: non-finite value for `{taxon}`"
                )));
            }
        }
        Ok(Self { name, taxa, values })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn taxa(&self) -> &[String] {
        &self.taxa
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.taxa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taxa.is_empty()
    }

    /// Returns the values aligned to `order`, which must contain exactly the
    /// same taxa as this trait.
    pub fn reorder(&self, order: &[String]) -> Result<Vec<f64>, StatsError> {
        if order.len() != self.taxa.len() {
            return Err(StatsError::TaxaMismatch(self.name.clone()));
        }
        let index: std::collections::BTreeMap<&str, usize> = self
            .taxa
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i))
            .collect();
        order
            .iter()
            .map(|taxon| {
                index
                    .get(taxon.as_str())
                    .map(|&i| self.values[i])
                    .ok_or_else(|| StatsError::TaxaMismatch(self.name.clone()))
            })
            .collect()
    }
}

/// Cholesky state shared by the statistics: the lower factor of C (or of
/// C + eps*I when jitter rescued a semidefinite matrix) and L^-1 1.
pub(crate) struct Gls {
    l: DMatrix<f64>,
    half_one: DVector<f64>,
    trace: f64,
}

impl Gls {
    pub(crate) fn new(cov: &PhyloCovariance, jitter: bool) -> Result<Self, StatsError> {
        let n = cov.n();
        let l = match Cholesky::new(cov.matrix().clone()) {
            Some(chol) => chol.unpack(),
            None if jitter => {
                let eps = 1e-8 * cov.matrix().diagonal().mean();
                log::warn!(
                    "covariance matrix is not positive definite; retrying with jitter {eps:.3e}"
                );
                let bumped = cov.matrix() + DMatrix::identity(n, n) * eps;
                Cholesky::new(bumped)
                    .ok_or(StatsError::SingularCovariance)?
                    .unpack()
            }
            None => return Err(StatsError::SingularCovariance),
        };
        // tr(C) = ||L||_F^2 since C = L L', so no copy of C is needed.
        let trace = l.iter().map(|v| v * v).sum();
        let half_one = l
            .solve_lower_triangular(&DVector::from_element(n, 1.0))
            .expect("Cholesky factor has a positive diagonal");
        Ok(Self { l, half_one, trace })
    }

    fn half_solve(&self, x: &DVector<f64>) -> DVector<f64> {
        self.l
            .solve_lower_triangular(x)
            .expect("Cholesky factor has a positive diagonal")
    }

    /// GLS estimate of the root state: (1' C^-1 x) / (1' C^-1 1).
    pub(crate) fn mean(&self, x: &DVector<f64>) -> f64 {
        let u = self.half_solve(x);
        self.half_one.dot(&u) / self.half_one.norm_squared()
    }

    /// Mean squared error of x around the GLS mean, d' C^-1 d / (n - 1).
    pub(crate) fn mse(&self, x: &DVector<f64>) -> f64 {
        let d = x.add_scalar(-self.mean(x));
        self.half_solve(&d).norm_squared() / (x.len() as f64 - 1.0)
    }

    /// Blomberg's K: the observed variance ratio divided by its Brownian
    /// expectation on this covariance matrix.
    pub(crate) fn k(&self, x: &DVector<f64>) -> f64 {
        let n = x.len() as f64;
        let d = x.add_scalar(-self.mean(x));
        let observed = d.norm_squared() / self.half_solve(&d).norm_squared();
        let expected = (self.trace - n / self.half_one.norm_squared()) / (n - 1.0);
        observed / expected
    }

    /// Permutation p-value for K: shuffles tip values and counts permutations
    /// whose GLS mean squared error is at most the observed one.
    pub(crate) fn permutation_p(&self, values: &[f64], n_perm: usize, rng: &mut impl Rng) -> f64 {
        let observed = self.mse(&DVector::from_row_slice(values));
        let mut shuffled = values.to_vec();
        let mut at_most = 0usize;
        for _ in 0..n_perm {
            shuffled.shuffle(rng);
            if self.mse(&DVector::from_row_slice(&shuffled)) <= observed {
                at_most += 1;
            }
        }
        (1 + at_most) as f64 / (n_perm + 1) as f64
    }

    /// Phylogenetic Pearson correlation between two aligned trait vectors.
    pub(crate) fn correlation(
        &self,
        x: &DVector<f64>,
        y: &DVector<f64>,
        x_name: &str,
        y_name: &str,
    ) -> Result<f64, StatsError> {
        let u = self.half_solve(&x.add_scalar(-self.mean(x)));
        let v = self.half_solve(&y.add_scalar(-self.mean(y)));
        let rxx = u.norm_squared();
        let ryy = v.norm_squared();
        if rxx <= 0.0 || !rxx.is_finite() {
            return Err(StatsError::ZeroVariance(x_name.to_string()));
        }
        if ryy <= 0.0 || !ryy.is_finite() {
            return Err(StatsError::ZeroVariance(y_name.to_string()));
        }
        let r = u.dot(&v) / (rxx * ryy).sqrt();
        debug_assert!(
            r.abs() <= 1.0 + 1e-12,
            "half-solve correlation {r} out of range"
        );
        Ok(r.clamp(-1.0, 1.0))
    }
}

pub(crate) fn ensure_varying(
    values: &[f64],
    error: impl FnOnce() -> StatsError,
) -> Result<(), StatsError> {
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return Err(error());
    }
    Ok(())
}

/// GLS estimate of the ancestral (root) state of `x` under covariance `cov`.
pub fn gls_mean(x: &TraitVector, cov: &PhyloCovariance, jitter: bool) -> Result<f64, StatsError> {
    let values = x.reorder(cov.taxa())?;
    let gls = Gls::new(cov, jitter)?;
    Ok(gls.mean(&DVector::from_vec(values)))
}

/// Blomberg's K for `x` under covariance `cov`.
///
/// K = 1 is the Brownian expectation; values above 1 indicate more signal
/// than Brownian motion, values near 0 indicate none.
pub fn blomberg_k(x: &TraitVector, cov: &PhyloCovariance, jitter: bool) -> Result<f64, StatsError> {
    if x.len() < 2 {
        return Err(StatsError::Invalid(format!(
            "trait `{}`: Blomberg's K needs at least 2 taxa",
            x.name()
        )));
    }
    let values = x.reorder(cov.taxa())?;
    ensure_varying(&values, || {
        StatsError::DegenerateTrait(x.name().to_string())
    })?;
    let gls = Gls::new(cov, jitter)?;
    Ok(gls.k(&DVector::from_vec(values)))
}

/// Permutation test for phylogenetic signal in `x`.
///
/// Tip values are shuffled across taxa `n_perm` times; the p-value is
/// (1 + #{MSE_perm <= MSE_obs}) / (n_perm + 1), so it is never exactly zero.
pub fn k_permutation_test(
    x: &TraitVector,
    cov: &PhyloCovariance,
    n_perm: usize,
    seed: u64,
    jitter: bool,
) -> Result<f64, StatsError> {
    if n_perm < 99 {
        return Err(StatsError::Invalid(format!(
            "permutation test needs at least 99 permutations, got {n_perm}"
        )));
    }
    let values = x.reorder(cov.taxa())?;
    ensure_varying(&values, || {
        StatsError::DegenerateTrait(x.name().to_string())
    })?;
    let gls = Gls::new(cov, jitter)?;
    let mut rng = stream_rng(seed, "kperm", 0, 0);
    Ok(gls.permutation_p(&values, n_perm, &mut rng))
}

/// Phylogenetic Pearson correlation between `x` and `y` under `cov`.
pub fn phylo_correlation(
    x: &TraitVector,
    y: &TraitVector,
    cov: &PhyloCovariance,
    jitter: bool,
) -> Result<f64, StatsError> {
    let xs = x.reorder(cov.taxa())?;
    let ys = y.reorder(cov.taxa())?;
    ensure_varying(&xs, || StatsError::ZeroVariance(x.name().to_string()))?;
    ensure_varying(&ys, || StatsError::ZeroVariance(y.name().to_string()))?;
    let gls = Gls::new(cov, jitter)?;
    gls.correlation(
        &DVector::from_vec(xs),
        &DVector::from_vec(ys),
        x.name(),
        y.name(),
    )
}

/// Two-sided t-test p-value for a correlation estimate over `n` taxa.
///
/// Uses t = r sqrt((n - 2) / (1 - r^2)) with n - 2 degrees of freedom. A
/// correlation at exactly +-1 returns p = 0 with a warning, since the t
/// statistic diverges there.
pub fn correlation_p(mean_r: f64, n: usize) -> Result<f64, StatsError> {
    if !mean_r.is_finite() {
        return Err(StatsError::Invalid(format!(
            "correlation {mean_r} is not finite"
        )));
    }
    if mean_r.abs() > 1.0 {
        return Err(StatsError::Invalid(format!(
            "correlation {mean_r} is outside [-1, 1]"
        )));
    }
    if n < 3 {
        return Err(StatsError::Invalid(format!(
            "correlation test needs at least 3 taxa, got {n}"
        )));
    }
    if mean_r.abs() == 1.0 {
        log::warn!("correlation is exactly {mean_r}; reporting p = 0");
        return Ok(0.0);
    }
    let df = (n - 2) as f64;
    let t = mean_r * (df / (1.0 - mean_r * mean_r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    Ok(2.0 * (1.0 - dist.cdf(t.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phylotree::{balanced_tree, star_tree, Phylogeny};
    use approx::assert_relative_eq;

    fn taxa(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn trait_vec(names: &[&str], values: &[f64]) -> TraitVector {
        TraitVector::new("x", taxa(names), values.to_vec()).unwrap()
    }

    fn tip_taxa(tree: &crate::phylotree::Phylogeny) -> Vec<String> {
        tree.tip_labels().iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn trait_vector_rejects_bad_input() {
        assert!(matches!(
            TraitVector::new("x", taxa(&["A", "A"]), vec![1.0, 2.0]),
            Err(StatsError::Invalid(_))
        ));
        assert!(matches!(
            TraitVector::new("x", taxa(&["A", "B"]), vec![1.0]),
            Err(StatsError::Invalid(_))
        ));
        assert!(matches!(
            TraitVector::new("x", taxa(&["A", "B"]), vec![1.0, f64::NAN]),
            Err(StatsError::Invalid(_))
        ));
        assert!(matches!(
            TraitVector::new("x", vec![], vec![]),
            Err(StatsError::Invalid(_))
        ));
    }

    #[test]
    fn reorder_aligns_and_rejects_mismatches() {
        let x = trait_vec(&["A", "B", "C"], &[1.0, 2.0, 3.0]);
        assert_eq!(
            x.reorder(&taxa(&["C", "A", "B"])).unwrap(),
            vec![3.0, 1.0, 2.0]
        );
        assert!(matches!(
            x.reorder(&taxa(&["A", "B"])),
            Err(StatsError::TaxaMismatch(_))
        ));
        assert!(matches!(
            x.reorder(&taxa(&["A", "B", "D"])),
            Err(StatsError::TaxaMismatch(_))
        ));
    }

    #[test]
    fn identity_covariance_recovers_arithmetic_mean() {
        let x = trait_vec(&["A", "B", "C", "D"], &[1.0, 2.0, 3.0, 6.0]);
        let cov = PhyloCovariance::identity(x.taxa().to_vec()).unwrap();
        let mean = gls_mean(&x, &cov, false).unwrap();
        assert_relative_eq!(mean, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn gls_mean_matches_hand_solved_system() {
        // C = [[2,1,0],[1,2,0],[0,0,2]], x = (1,1,4):
        // 1'C^-1 1 = 7/6 and 1'C^-1 x = 8/3, so the mean is 16/7.
        let tree = Phylogeny::from_newick("((A:1,B:1):1,C:2);").unwrap();
        let x = trait_vec(&["A", "B", "C"], &[1.0, 1.0, 4.0]);
        let mean = gls_mean(&x, &tree.vcv(), false).unwrap();
        assert_relative_eq!(mean, 16.0 / 7.0, epsilon = 1e-12);
    }

    #[test]
    fn star_tree_k_is_one() {
        let tree = star_tree(&taxa(&["A", "B", "C", "D", "E"]), 1.75).unwrap();
        let x = trait_vec(&["A", "B", "C", "D", "E"], &[0.3, -1.2, 4.0, 0.0, 2.5]);
        let k = blomberg_k(&x, &tree.vcv(), false).unwrap();
        assert_relative_eq!(k, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn constant_trait_is_degenerate() {
        let tree = star_tree(&taxa(&["A", "B", "C"]), 1.0).unwrap();
        let x = trait_vec(&["A", "B", "C"], &[2.0, 2.0, 2.0]);
        assert!(matches!(
            blomberg_k(&x, &tree.vcv(), false),
            Err(StatsError::DegenerateTrait(_))
        ));
    }

    #[test]
    fn singular_covariance_errors_without_jitter_and_recovers_with_it() {
        let c = nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let cov = PhyloCovariance::new(taxa(&["A", "B"]), c).unwrap();
        let x = trait_vec(&["A", "B"], &[0.0, 1.0]);
        assert!(matches!(
            gls_mean(&x, &cov, false),
            Err(StatsError::SingularCovariance)
        ));
        let mean = gls_mean(&x, &cov, true).unwrap();
        assert!(mean.is_finite());
    }

    #[test]
    fn permutation_test_flags_clumped_values() {
        // One clade at 0, the other at 1: shuffling almost always increases
        // the GLS mean squared error, so the p-value is small.
        let tree = balanced_tree(3, 1.0).unwrap();
        let labels = tip_taxa(&tree);
        let values: Vec<f64> = (0..8).map(|i| if i < 4 { 0.0 } else { 1.0 }).collect();
        let x = TraitVector::new("x", labels, values).unwrap();
        let p = k_permutation_test(&x, &tree.vcv(), 999, 7, false).unwrap();
        assert!(p < 0.05, "expected small p, got {p}");
    }

    #[test]
    fn permutation_test_is_deterministic_and_bounded() {
        let tree = balanced_tree(3, 1.0).unwrap();
        let labels = tip_taxa(&tree);
        let values: Vec<f64> = (0..8).map(|i| (i as f64 * 1.37).sin()).collect();
        let x = TraitVector::new("x", labels, values).unwrap();
        let p1 = k_permutation_test(&x, &tree.vcv(), 199, 42, false).unwrap();
        let p2 = k_permutation_test(&x, &tree.vcv(), 199, 42, false).unwrap();
        assert_eq!(p1, p2);
        assert!((1.0 / 200.0..=1.0).contains(&p1));
        assert!(matches!(
            k_permutation_test(&x, &tree.vcv(), 98, 42, false),
            Err(StatsError::Invalid(_))
        ));
    }

    #[test]
    fn correlation_is_signed_and_clamped() {
        let tree = balanced_tree(2, 0.5).unwrap();
        let labels = tip_taxa(&tree);
        let xs = vec![0.1, 0.9, -0.4, 1.3];
        let x = TraitVector::new("x", labels.clone(), xs.clone()).unwrap();
        let y_same = TraitVector::new("y", labels.clone(), xs.clone()).unwrap();
        let y_flip = TraitVector::new(
            "y",
            labels.clone(),
            xs.iter().map(|v| -2.0 * v + 7.0).collect(),
        )
        .unwrap();
        let cov = tree.vcv();
        // The GLS means of x and -2x + 7 round independently, so the
        // correlation is within rounding of +-1 and clamped, not bitwise.
        let r_same = phylo_correlation(&x, &y_same, &cov, false).unwrap();
        let r_flip = phylo_correlation(&x, &y_flip, &cov, false).unwrap();
        assert!(
            r_same <= 1.0 && (r_same - 1.0).abs() < 1e-12,
            "r = {r_same}"
        );
        assert!(
            r_flip >= -1.0 && (r_flip + 1.0).abs() < 1e-12,
            "r = {r_flip}"
        );
    }

    #[test]
    fn identity_covariance_correlation_matches_classical_pearson() {
        let names = ["A", "B", "C", "D", "E", "F"];
        let xs = [0.2, -1.0, 3.4, 0.0, 1.1, -0.7];
        let ys = [1.0, 0.3, 2.2, -0.5, 0.9, 0.1];
        let x = trait_vec(&names, &xs);
        let y = TraitVector::new("y", taxa(&names), ys.to_vec()).unwrap();
        let cov = PhyloCovariance::identity(taxa(&names)).unwrap();
        let r = phylo_correlation(&x, &y, &cov, false).unwrap();

        let mx = xs.iter().sum::<f64>() / 6.0;
        let my = ys.iter().sum::<f64>() / 6.0;
        let sxy: f64 = xs.iter().zip(&ys).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = xs.iter().map(|a| (a - mx) * (a - mx)).sum();
        let syy: f64 = ys.iter().map(|b| (b - my) * (b - my)).sum();
        assert_relative_eq!(r, sxy / (sxx * syy).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn constant_trait_has_zero_variance_in_correlation() {
        let tree = star_tree(&taxa(&["A", "B", "C"]), 1.0).unwrap();
        let x = trait_vec(&["A", "B", "C"], &[1.0, 2.0, 3.0]);
        let y = TraitVector::new("y", taxa(&["A", "B", "C"]), vec![5.0, 5.0, 5.0]).unwrap();
        assert!(matches!(
            phylo_correlation(&x, &y, &tree.vcv(), false),
            Err(StatsError::ZeroVariance(name)) if name == "y"
        ));
    }

    #[test]
    fn correlation_p_behaves_at_the_edges() {
        assert_eq!(correlation_p(0.0, 10).unwrap(), 1.0);
        assert_eq!(correlation_p(1.0, 10).unwrap(), 0.0);
        assert_eq!(correlation_p(-1.0, 10).unwrap(), 0.0);
        assert!(matches!(correlation_p(0.5, 2), Err(StatsError::Invalid(_))));
        assert!(matches!(
            correlation_p(1.5, 10),
            Err(StatsError::Invalid(_))
        ));
        assert!(matches!(
            correlation_p(f64::NAN, 10),
            Err(StatsError::Invalid(_))
        ));
        // Stronger correlations give smaller p at fixed n.
        let p1 = correlation_p(0.2, 30).unwrap();
        let p2 = correlation_p(0.5, 30).unwrap();
        assert!(p2 < p1 && p1 < 1.0);
    }
}
