//! Wasserstein-2 distances.
//!
//! [`w2_gaussian`] uses the closed form between Gaussian laws
//! `W₂² = ‖μ₁−μ₂‖² + tr(Σ₁ + Σ₂ − 2(Σ₁^{1/2} Σ₂ Σ₁^{1/2})^{1/2})`.
//! [`w2_empirical`] is the exact transport cost between two equal-size
//! sample sets (uniform weights), solved as a minimum-cost perfect matching
//! on squared Euclidean costs. No entropic regularization is involved.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::assignment;
use crate::error::{Error, Result};
use crate::gaussian::{symmetric_sqrt, GaussianLaw};

/// Largest sample set accepted by the exact assignment solver.
pub const MAX_EMPIRICAL_POINTS: usize = 4096;

/// `N` finite points in `ℝ^p`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    dim: usize,
    data: Vec<f64>,
}

impl SampleSet {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::invalid("sample rows have unequal lengths"));
        }
        Self::from_flat(dim, rows.iter().flatten().copied().collect())
    }

    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.is_empty() {
            return Err(Error::invalid("a sample set needs N >= 1 points of dimension >= 1"));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::invalid("flat sample data is not a multiple of the dimension"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("sample set contains non-finite values"));
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// Multiplies every coordinate by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn mean(&self) -> DVector<f64> {
        let mut m = DVector::zeros(self.dim);
        for x in self.points() {
            m += DVector::from_column_slice(x);
        }
        m / self.len() as f64
    }

    /// Unbiased sample covariance (zero for a single point).
    pub fn covariance(&self) -> DMatrix<f64> {
        let n = self.len();
        let mean = self.mean();
        let mut cov = DMatrix::zeros(self.dim, self.dim);
        if n < 2 {
            return cov;
        }
        for x in self.points() {
            let d = DVector::from_column_slice(x) - &mean;
            cov += &d * d.transpose();
        }
        cov / (n - 1) as f64
    }
}

/// Closed-form W₂ between two Gaussian laws.
pub fn w2_gaussian(a: &GaussianLaw, b: &GaussianLaw) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::invalid(format!(
            "dimension mismatch: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let mean_sq = (a.mean() - b.mean()).norm_squared();
    let root_a = symmetric_sqrt(a.cov());
    let inner = &root_a * b.cov() * &root_a;
    let inner = (&inner + inner.transpose()) * 0.5;
    let cross = symmetric_sqrt(&inner).trace();
    let bures = a.cov().trace() + b.cov().trace() - 2.0 * cross;
    Ok((mean_sq + bures.max(0.0)).sqrt())
}

/// Exact W₂ between the uniform empirical measures of two equal-size sets.
///
/// In one dimension the monotone (sorted) coupling is optimal and is used
/// directly; otherwise the squared-distance assignment problem is solved.
pub fn w2_empirical(a: &SampleSet, b: &SampleSet) -> Result<f64> {
    check_pair(a, b)?;
    if a.dim() == 1 {
        return Ok(w2_sorted_1d(&a.data, &b.data));
    }
    Ok(w2_assignment(a, b))
}

fn check_pair(a: &SampleSet, b: &SampleSet) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::invalid(format!(
            "dimension mismatch: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "sample sets must have equal size, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() > MAX_EMPIRICAL_POINTS {
        return Err(Error::ResourceLimit(format!(
            "{} points exceeds the exact transport limit {MAX_EMPIRICAL_POINTS}",
            a.len()
        )));
    }
    Ok(())
}

/// W₂ through the assignment solver, for any dimension.
pub fn w2_assignment(a: &SampleSet, b: &SampleSet) -> f64 {
    let n = a.len();
    let mut costs = Vec::with_capacity(n * n);
    for x in a.points() {
        for y in b.points() {
            costs.push(x.iter().zip(y).map(|(s, t)| (s - t) * (s - t)).sum::<f64>());
        }
    }
    let (_, total) = assignment::solve(&costs, n);
    (total.max(0.0) / n as f64).sqrt()
}

/// W₂ between two equal-size one-dimensional samples via sorted matching.
pub fn w2_sorted_1d(a: &[f64], b: &[f64]) -> f64 {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let total: f64 = x.iter().zip(&y).map(|(s, t)| (s - t) * (s - t)).sum();
    (total / x.len() as f64).sqrt()
}

/// Mean and spread of [`w2_empirical`] against fresh reference draws.
#[derive(Debug, Clone, Serialize)]
pub struct W2Estimate {
    pub mean: f64,
    pub std: f64,
    pub values: Vec<f64>,
}

/// Compares `a` with `reps` independent reference sets of the same size
/// drawn from `law`; rep `r` uses stream `r` of `seed`.
pub fn w2_empirical_vs_gaussian(a: &SampleSet, law: &GaussianLaw, reps: usize, seed: u64) -> Result<W2Estimate> {
    if reps == 0 {
        return Err(Error::invalid("reps must be >= 1"));
    }
    if a.dim() != law.dim() {
        return Err(Error::invalid("sample set and law have different dimensions"));
    }
    let values: Vec<f64> = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r);
            let reference = law.sample(&mut rng, a.len());
            w2_empirical(a, &reference)
        })
        .collect::<Result<_>>()?;
    let mean = values.iter().sum::<f64>() / reps as f64;
    let std = if reps > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (reps - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(W2Estimate { mean, std, values })
}
