//! Brownian-motion simulation of correlated traits on a phylogeny.
//!
//! Tip values follow a matrix normal: X = 1 root' + L_C Z A_R', where
//! C = L_C L_C' is the tree covariance, R = A_R A_R' is the trait rate
//! matrix, and Z has i.i.d. standard normal entries. Columns of X then have
//! covariance R[j,j] * C across taxa and rows covary as R across traits,
//! which is exactly the Kronecker covariance of multivariate Brownian motion.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use super::gls::TraitVector;
use super::StatsError;
use crate::phylotree::{PhyloCovariance, Phylogeny};
use crate::rng::stream_rng;

/// Factors a symmetric positive semidefinite matrix as M = F F'.
///
/// Uses Cholesky when M is positive definite and falls back to a symmetric
/// eigendecomposition otherwise, clamping tiny negative eigenvalues to zero.
/// Eigenvalues below -1e-9 relative to the largest magnitude mean the matrix
/// is genuinely indefinite.
pub(crate) fn psd_factor(m: &DMatrix<f64>) -> Result<DMatrix<f64>, StatsError> {
    if let Some(chol) = Cholesky::new(m.clone()) {
        return Ok(chol.unpack());
    }
    let eigen = SymmetricEigen::new(m.clone());
    let scale = eigen
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    if eigen.eigenvalues.min() < -1e-9 * scale {
        return Err(StatsError::NotPsd);
    }
    let roots = DVector::from_iterator(
        eigen.eigenvalues.len(),
        eigen.eigenvalues.iter().map(|v| v.max(0.0).sqrt()),
    );
    Ok(&eigen.eigenvectors * DMatrix::from_diagonal(&roots))
}

/// Symmetric positive semidefinite rate matrix for the simulated traits.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    m: DMatrix<f64>,
}

impl RateMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self, StatsError> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(StatsError::Invalid(format!(
                "rate matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
        for i in 0..m.nrows() {
            for j in 0..i {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-9 * scale {
                    return Err(StatsError::Invalid(
                        "rate matrix is not symmetric".to_string(),
                    ));
                }
            }
        }
        psd_factor(&m)?;
        Ok(Self { m })
    }

    /// Single-trait rate sigma^2.
    pub fn scalar(sigma2: f64) -> Result<Self, StatsError> {
        Self::new(DMatrix::from_element(1, 1, sigma2))
    }

    /// Two traits with variances `var_x`, `var_y` and correlation `rho`.
    pub fn correlated(var_x: f64, var_y: f64, rho: f64) -> Result<Self, StatsError> {
        let cov = rho * (var_x * var_y).sqrt();
        Self::new(DMatrix::from_row_slice(2, 2, &[var_x, cov, cov, var_y]))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }
}

fn trait_name(j: usize, dim: usize) -> String {
    if dim <= 3 {
        ["x", "y", "z"][j].to_string()
    } else {
        format!("x{j}")
    }
}

/// Seeded Brownian-motion sampler over a fixed tree covariance.
///
/// The two matrix factors are computed once at construction, so drawing a
/// replicate costs one n-by-k standard normal fill and two multiplications.
pub struct BmSampler {
    taxa: Vec<String>,
    tree_factor: DMatrix<f64>,
    rate_factor: DMatrix<f64>,
    root: DVector<f64>,
}

impl BmSampler {
    pub fn from_cov(
        cov: &PhyloCovariance,
        rate: &RateMatrix,
        root: &[f64],
    ) -> Result<Self, StatsError> {
        if root.len() != rate.dim() {
            return Err(StatsError::Invalid(format!(
                "root state has {} entries but the rate matrix has {} traits",
                root.len(),
                rate.dim()
            )));
        }
        Ok(Self {
            taxa: cov.taxa().to_vec(),
            tree_factor: psd_factor(cov.matrix())?,
            rate_factor: psd_factor(rate.matrix())?,
            root: DVector::from_row_slice(root),
        })
    }

    pub fn from_tree(
        tree: &Phylogeny,
        rate: &RateMatrix,
        root: &[f64],
    ) -> Result<Self, StatsError> {
        Self::from_cov(&tree.vcv(), rate, root)
    }

    pub fn taxa(&self) -> &[String] {
        &self.taxa
    }

    pub fn n_traits(&self) -> usize {
        self.root.len()
    }

    /// Draws one replicate: one trait vector per rate-matrix dimension.
    pub fn sample(&self, rng: &mut impl Rng) -> Vec<TraitVector> {
        let n = self.taxa.len();
        let k = self.root.len();
        let z = DMatrix::from_fn(n, k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let x = &self.tree_factor * z * self.rate_factor.transpose();
        (0..k)
            .map(|j| {
                let values: Vec<f64> = x.column(j).iter().map(|v| v + self.root[j]).collect();
                TraitVector::new(trait_name(j, k), self.taxa.clone(), values)
                    .expect("simulated values are finite over distinct taxa")
            })
            .collect()
    }

    /// Draws the replicate identified by (seed, tree_index, replicate).
    ///
    /// The RNG stream depends only on those three numbers, so replicates can
    /// be generated in any order or in parallel without changing results.
    pub fn sample_with_seed(&self, seed: u64, tree_index: u64, replicate: u64) -> Vec<TraitVector> {
        let mut rng = stream_rng(seed, "bm", tree_index, replicate);
        self.sample(&mut rng)
    }
}

/// One-shot simulation of a single replicate on `tree`.
pub fn simulate_bm(
    tree: &Phylogeny,
    rate: &RateMatrix,
    root: &[f64],
    seed: u64,
) -> Result<Vec<TraitVector>, StatsError> {
    Ok(BmSampler::from_tree(tree, rate, root)?.sample_with_seed(seed, 0, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phylotree::star_tree;
    use approx::assert_relative_eq;

    fn taxa(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn rate_matrix_validates_symmetry_and_psd() {
        assert!(RateMatrix::scalar(1.0).is_ok());
        assert!(RateMatrix::scalar(0.0).is_ok());
        assert!(matches!(RateMatrix::scalar(-1.0), Err(StatsError::NotPsd)));
        assert!(RateMatrix::correlated(2.0, 0.5, -0.5).is_ok());
        assert!(matches!(
            RateMatrix::correlated(1.0, 1.0, 1.5),
            Err(StatsError::NotPsd)
        ));
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.2, 1.0]);
        assert!(matches!(RateMatrix::new(asym), Err(StatsError::Invalid(_))));
    }

    #[test]
    fn psd_factor_reproduces_the_matrix() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, -0.7, -0.7, 0.5]);
        let f = psd_factor(&m).unwrap();
        let back = &f * f.transpose();
        assert_relative_eq!(back[(0, 0)], 2.0, epsilon = 1e-12);
        assert_relative_eq!(back[(0, 1)], -0.7, epsilon = 1e-12);
        assert_relative_eq!(back[(1, 1)], 0.5, epsilon = 1e-12);
        // Singular but semidefinite matrices factor through the eigen path.
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let f = psd_factor(&m).unwrap();
        let back = &f * f.transpose();
        assert_relative_eq!(back[(0, 1)], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_rate_pins_every_tip_to_the_root() {
        let tree = star_tree(&taxa(&["A", "B", "C"]), 1.0).unwrap();
        let rate = RateMatrix::scalar(0.0).unwrap();
        let out = simulate_bm(&tree, &rate, &[3.25], 11).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].name(), "x");
        assert!(out[0].values().iter().all(|&v| v == 3.25));
    }

    #[test]
    fn star_tree_tip_variance_matches_rate_times_branch() {
        // On a star tree with branch b the tips are i.i.d. N(root, sigma2 b).
        let tree = star_tree(&taxa(&["A", "B", "C", "D", "E"]), 2.0).unwrap();
        let rate = RateMatrix::scalar(1.5).unwrap();
        let sampler = BmSampler::from_tree(&tree, &rate, &[7.0]).unwrap();
        let mut sum_sq = 0.0;
        let mut count = 0usize;
        for rep in 0..10_000u64 {
            let out = sampler.sample_with_seed(5, 0, rep);
            for &v in out[0].values() {
                sum_sq += (v - 7.0) * (v - 7.0);
                count += 1;
            }
        }
        let var = sum_sq / count as f64;
        assert_relative_eq!(var, 3.0, max_relative = 0.05);
    }

    #[test]
    fn correlated_rate_shows_up_in_tip_deviations() {
        let tree = star_tree(&taxa(&["A", "B", "C", "D"]), 1.0).unwrap();
        let rate = RateMatrix::correlated(2.0, 0.5, -0.5).unwrap();
        let sampler = BmSampler::from_tree(&tree, &rate, &[0.0, 0.0]).unwrap();
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for rep in 0..10_000u64 {
            let out = sampler.sample_with_seed(17, 0, rep);
            for (&x, &y) in out[0].values().iter().zip(out[1].values()) {
                sxy += x * y;
                sxx += x * x;
                syy += y * y;
            }
        }
        let r = sxy / (sxx * syy).sqrt();
        assert!(
            (r + 0.5).abs() < 0.05,
            "sample correlation {r} far from -0.5"
        );
    }

    #[test]
    fn shared_history_correlates_sister_tips() {
        // cov(A, B) is the depth of their common ancestor: 1 here.
        let tree = Phylogeny::from_newick("((A:1,B:1):1,C:2);").unwrap();
        let rate = RateMatrix::scalar(1.0).unwrap();
        let sampler = BmSampler::from_tree(&tree, &rate, &[0.0]).unwrap();
        let (mut sab, mut sac) = (0.0, 0.0);
        let n = 20_000u64;
        for rep in 0..n {
            let out = sampler.sample_with_seed(23, 0, rep);
            let vals = out[0].values();
            let a = vals[sampler.taxa().iter().position(|t| t == "A").unwrap()];
            let b = vals[sampler.taxa().iter().position(|t| t == "B").unwrap()];
            let c = vals[sampler.taxa().iter().position(|t| t == "C").unwrap()];
            sab += a * b;
            sac += a * c;
        }
        assert!((sab / n as f64 - 1.0).abs() < 0.1);
        assert!((sac / n as f64).abs() < 0.1);
    }

    #[test]
    fn replicates_are_deterministic_and_distinct() {
        let tree = star_tree(&taxa(&["A", "B", "C"]), 1.0).unwrap();
        let rate = RateMatrix::scalar(1.0).unwrap();
        let sampler = BmSampler::from_tree(&tree, &rate, &[0.0]).unwrap();
        assert_eq!(
            sampler.sample_with_seed(9, 2, 5),
            sampler.sample_with_seed(9, 2, 5)
        );
        assert_ne!(
            sampler.sample_with_seed(9, 2, 5),
            sampler.sample_with_seed(9, 2, 6)
        );
        assert_ne!(
            sampler.sample_with_seed(9, 2, 5),
            sampler.sample_with_seed(9, 3, 5)
        );
        assert_ne!(
            sampler.sample_with_seed(8, 2, 5),
            sampler.sample_with_seed(9, 2, 5)
        );
    }

    #[test]
    fn root_length_mismatch_is_rejected() {
        let tree = star_tree(&taxa(&["A", "B"]), 1.0).unwrap();
        let rate = RateMatrix::scalar(1.0).unwrap();
        assert!(matches!(
            BmSampler::from_tree(&tree, &rate, &[0.0, 0.0]),
            Err(StatsError::Invalid(_))
        ));
    }
}
