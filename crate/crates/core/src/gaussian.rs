//! Multivariate Gaussian laws.
//!
//! Used for the stationary law of quadratic targets, for the exact law of
//! affine-Gaussian chains and as the input of the closed-form W₂ distance.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::metrics::SampleSet;

/// Absolute-plus-relative tolerance for symmetry and PSD checks.
const PSD_TOLERANCE: f64 = 1e-9;

/// A Gaussian law `N(mean, cov)` with a symmetric positive-semidefinite covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianLaw {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianLaw {
    /// Builds a law, symmetrizing `cov` and rejecting matrices that are
    /// asymmetric or indefinite beyond tolerance.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let p = mean.len();
        if p == 0 {
            return Err(Error::invalid("gaussian law needs dimension >= 1"));
        }
        if cov.nrows() != p || cov.ncols() != p {
            return Err(Error::invalid(format!(
                "covariance is {}x{}, expected {p}x{p}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("gaussian law has non-finite entries"));
        }
        let scale = cov.amax().max(1.0);
        let asym = (&cov - cov.transpose()).amax();
        if asym > PSD_TOLERANCE * scale {
            return Err(Error::invalid(format!(
                "covariance is not symmetric (max asymmetry {asym:e})"
            )));
        }
        let cov = (&cov + cov.transpose()) * 0.5;
        let min_eig = SymmetricEigen::new(cov.clone()).eigenvalues.min();
        if min_eig < -PSD_TOLERANCE * scale {
            return Err(Error::invalid(format!(
                "covariance is not positive semidefinite (min eigenvalue {min_eig:e})"
            )));
        }
        Ok(Self { mean, cov })
    }

    /// `N(mean, variance · I)`.
    pub fn isotropic(mean: &[f64], variance: f64) -> Result<Self> {
        if !(variance >= 0.0) {
            return Err(Error::invalid("isotropic variance must be >= 0"));
        }
        let p = mean.len();
        Self::new(
            DVector::from_column_slice(mean),
            DMatrix::identity(p, p) * variance,
        )
    }

    /// The Dirac mass at `theta` (zero covariance).
    pub fn point_mass(theta: &[f64]) -> Result<Self> {
        Self::isotropic(theta, 0.0)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Draws `count` independent samples using `mean + cov^{1/2} z`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> SampleSet {
        let p = self.dim();
        let root = symmetric_sqrt(&self.cov);
        let mut data = Vec::with_capacity(count * p);
        let mut z = DVector::zeros(p);
        for _ in 0..count {
            for zi in z.iter_mut() {
                *zi = rng.sample(StandardNormal);
            }
            let x = &self.mean + &root * &z;
            data.extend(x.iter());
        }
        SampleSet::from_flat(p, data).expect("gaussian samples are finite")
    }
}

/// Principal square root of a symmetric PSD matrix, with negative
/// eigenvalues (round-off) clamped to zero.
pub(crate) fn symmetric_sqrt(mat: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(mat.clone());
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}
