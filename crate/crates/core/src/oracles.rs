//! Independent ground truth.
//!
//! * Exact laws of affine-Gaussian chains `θ ← μ* + C(θ − μ*) + √v·ξ`, which
//!   is what LMC and idealized SGD reduce to on quadratic potentials.
//! * The exact variance of the subset estimator `X = (n/b)·Σ_{i∈I} a_i`
//!   over uniform size-`b` subsets `I`, both in closed form and by
//!   enumerating every subset.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::gaussian::GaussianLaw;
use crate::potentials::{DecomposableTarget, Potential};
use crate::samplers::minibatch_gradient;

/// Largest number of subsets the brute-force enumerations will visit.
pub const ENUMERATION_LIMIT: u64 = 1_000_000;

/// `θ_{k+1} = μ* + C(θ_k − μ*) + √v·ξ_k`, `ξ_k ~ N(0, I)`.
#[derive(Debug, Clone)]
pub struct AffineChainSpec {
    pub contraction: DMatrix<f64>,
    pub fixed_point: DVector<f64>,
    pub noise_variance: f64,
}

impl AffineChainSpec {
    pub fn new(contraction: DMatrix<f64>, fixed_point: DVector<f64>, noise_variance: f64) -> Result<Self> {
        let p = fixed_point.len();
        if contraction.nrows() != p || contraction.ncols() != p {
            return Err(Error::invalid("contraction must be p×p"));
        }
        if !(noise_variance >= 0.0) {
            return Err(Error::invalid("noise variance must be >= 0"));
        }
        Ok(Self {
            contraction,
            fixed_point,
            noise_variance,
        })
    }

    /// LMC with step `h` on a quadratic target: `C = I − hH`, `v = 2h`.
    pub fn lmc(target: &DecomposableTarget, h: f64) -> Result<Self> {
        Self::gradient_chain(target, h, 2.0 * h)
    }

    /// Idealized SGD with step `h` and batch `b`: `C = I − hH`, `v = h²·n(n−b)/b`.
    pub fn sgd_idealized(target: &DecomposableTarget, h: f64, b: f64) -> Result<Self> {
        let v = h * h * isotropic_noise_variance(target.n(), b)?;
        Self::gradient_chain(target, h, v)
    }

    fn gradient_chain(target: &DecomposableTarget, h: f64, v: f64) -> Result<Self> {
        let q = target
            .quadratic_model()
            .ok_or_else(|| Error::UnsupportedTarget("exact chain laws need a quadratic target".into()))?;
        let p = q.mode.len();
        let c = DMatrix::identity(p, p) - &q.hessian * h;
        Self::new(c, q.mode.clone(), v)
    }

    pub fn dim(&self) -> usize {
        self.fixed_point.len()
    }

    /// Largest absolute eigenvalue of the (symmetrized) contraction.
    pub fn spectral_radius(&self) -> f64 {
        let sym = (&self.contraction + self.contraction.transpose()) * 0.5;
        SymmetricEigen::new(sym).eigenvalues.amax()
    }

    /// Limit law as `k → ∞` for a symmetric contraction with spectral
    /// radius below one: `N(μ*, v·(I − C²)⁻¹)`.
    pub fn stationary_law(&self) -> Result<GaussianLaw> {
        let sym = (&self.contraction + self.contraction.transpose()) * 0.5;
        if (&sym - &self.contraction).amax() > 1e-12 {
            return Err(Error::invalid("stationary law needs a symmetric contraction"));
        }
        let eig = SymmetricEigen::new(sym);
        if eig.eigenvalues.amax() >= 1.0 {
            return Err(Error::invalid("contraction has spectral radius >= 1; no stationary law"));
        }
        let scales = eig.eigenvalues.map(|c| self.noise_variance / (1.0 - c * c));
        let cov = &eig.eigenvectors * DMatrix::from_diagonal(&scales) * eig.eigenvectors.transpose();
        GaussianLaw::new(self.fixed_point.clone(), cov)
    }

    /// Iterator over the laws of `θ_0, θ_1, θ_2, …` starting from the point mass at `theta0`.
    pub fn laws(&self, theta0: &[f64]) -> Result<ChainLaws<'_>> {
        if theta0.len() != self.dim() {
            return Err(Error::invalid(format!(
                "theta0 has dimension {}, chain has {}",
                theta0.len(),
                self.dim()
            )));
        }
        let p = self.dim();
        Ok(ChainLaws {
            spec: self,
            offset: DVector::from_column_slice(theta0) - &self.fixed_point,
            cov: DMatrix::zeros(p, p),
        })
    }
}

/// Exact successive laws of an affine-Gaussian chain.
#[derive(Debug, Clone)]
pub struct ChainLaws<'a> {
    spec: &'a AffineChainSpec,
    offset: DVector<f64>,
    cov: DMatrix<f64>,
}

impl ChainLaws<'_> {
    fn current(&self) -> GaussianLaw {
        let cov = (&self.cov + self.cov.transpose()) * 0.5;
        GaussianLaw::new(&self.spec.fixed_point + &self.offset, cov).expect("chain covariance stays PSD")
    }

    fn advance(&mut self) {
        let c = &self.spec.contraction;
        let p = self.offset.len();
        self.offset = c * &self.offset;
        self.cov = c * &self.cov * c.transpose() + DMatrix::identity(p, p) * self.spec.noise_variance;
    }
}

impl Iterator for ChainLaws<'_> {
    type Item = GaussianLaw;

    fn next(&mut self) -> Option<GaussianLaw> {
        let law = self.current();
        self.advance();
        Some(law)
    }
}

/// Exact law of the `k`-th iterate: mean `μ* + C^k(θ₀ − μ*)`, covariance by
/// `Σ_{j+1} = C Σ_j Cᵀ + v·I` from `Σ_0 = 0`.
pub fn gaussian_chain_law(spec: &AffineChainSpec, theta0: &[f64], k: u64) -> Result<GaussianLaw> {
    let mut laws = spec.laws(theta0)?;
    for _ in 0..k {
        laws.advance();
    }
    Ok(laws.current())
}

/// `σ² = n(n−b)/b`, the variance scale of the idealized mini-batch noise.
pub fn isotropic_noise_variance(n: usize, b: f64) -> Result<f64> {
    let nf = n as f64;
    if n == 0 || !(b >= 1.0 && b <= nf) {
        return Err(Error::invalid(format!("batch size {b} outside [1, {n}]")));
    }
    Ok(nf * (nf - b) / b)
}

/// Neumaier-compensated sum.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

fn check_subset_args(n: usize, b: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::invalid(format!("need n >= 2 values, got {n}")));
    }
    if b < 1 || b > n {
        return Err(Error::invalid(format!("batch size {b} outside [1, {n}]")));
    }
    Ok(())
}

/// Closed-form variance of `X = (n/b)·Σ_{i∈I} a_i` over uniform size-`b` subsets:
///
/// `V[X] = ((n−b)/b)·Σ a_i² + ((b−n)/(nb−b))·Σ_{i≠j} a_i a_j`.
pub fn subset_estimator_variance_formula(a: &[f64], b: usize) -> Result<f64> {
    let n = a.len();
    check_subset_args(n, b)?;
    let mut sum = CompensatedSum::default();
    let mut sum_sq = CompensatedSum::default();
    for &x in a {
        sum.add(x);
        sum_sq.add(x * x);
    }
    // Σ_{i≠j} a_i a_j = (Σ a_i)² − Σ a_i²
    let total = sum.value();
    let mut cross = CompensatedSum::default();
    cross.add(total * total);
    cross.add(-sum_sq.value());
    let (nf, bf) = (n as f64, b as f64);
    let mut v = CompensatedSum::default();
    v.add((nf - bf) / bf * sum_sq.value());
    v.add((bf - nf) / (nf * bf - bf) * cross.value());
    Ok(v.value().max(0.0))
}

/// `C(n, k)`, saturating at `u64::MAX`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Visits every size-`b` subset of `0..n` in lexicographic order.
pub fn for_each_subset(n: usize, b: usize, mut visit: impl FnMut(&[usize])) -> Result<u64> {
    let count = binomial(n, b);
    if count > ENUMERATION_LIMIT {
        return Err(Error::ResourceLimit(format!(
            "C({n}, {b}) = {count} subsets exceeds the enumeration limit {ENUMERATION_LIMIT}"
        )));
    }
    if b == 0 || b > n {
        return Ok(0);
    }
    let mut idx: Vec<usize> = (0..b).collect();
    loop {
        visit(&idx);
        // rightmost position that can still advance
        let Some(pos) = (0..b).rev().find(|&i| idx[i] < n - b + i) else {
            break;
        };
        idx[pos] += 1;
        for i in pos + 1..b {
            idx[i] = idx[i - 1] + 1;
        }
    }
    Ok(count)
}

/// Exact variance of `X = (n/b)·Σ_{i∈I} a_i` by enumerating all `C(n, b)`
/// subsets with equal weight.
pub fn subset_estimator_variance_bruteforce(a: &[f64], b: usize) -> Result<f64> {
    let n = a.len();
    if b < 1 || b > n {
        return Err(Error::invalid(format!("batch size {b} outside [1, {n}]")));
    }
    let scale = n as f64 / b as f64;
    let mut values = Vec::with_capacity(binomial(n, b).min(ENUMERATION_LIMIT) as usize);
    // running prefix sums: prefix[i + 1] = Σ_{j≤i} a[idx[j]]
    let mut prefix = vec![0.0; b + 1];
    let mut last: Vec<usize> = Vec::new();
    for_each_subset(n, b, |idx| {
        let first_changed = last.iter().zip(idx).position(|(x, y)| x != y).unwrap_or(0);
        for i in first_changed..b {
            prefix[i + 1] = prefix[i] + a[idx[i]];
        }
        last.clear();
        last.extend_from_slice(idx);
        values.push(scale * prefix[b]);
    })?;
    Ok(population_variance(&values))
}

fn population_variance(values: &[f64]) -> f64 {
    let count = values.len() as f64;
    let mut mean = CompensatedSum::default();
    values.iter().for_each(|&v| mean.add(v));
    let mean = mean.value() / count;
    let mut ss = CompensatedSum::default();
    values.iter().for_each(|&v| ss.add((v - mean) * (v - mean)));
    ss.value() / count
}

/// Exact per-coordinate mean and variance of the mini-batch noise
/// `ζ = n{(1/b)Σ_{i∈B} ∇g_i(θ) − (1/n)Σ_i ∇g_i(θ)}`, enumerating all subsets.
#[derive(Debug, Clone)]
pub struct NoiseMoments {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub subsets: u64,
}

pub fn enumerate_minibatch_noise(target: &DecomposableTarget, theta: &[f64], b: usize) -> Result<NoiseMoments> {
    let n = target.n();
    let p = target.dim();
    if b < 1 || b > n {
        return Err(Error::invalid(format!("batch size {b} outside [1, {n}]")));
    }
    let mut full = vec![0.0; p];
    for i in 0..n {
        target.add_component_gradient(i, theta, 1.0, &mut full);
    }
    let mut noise: Vec<Vec<f64>> = vec![Vec::new(); p];
    let mut est = vec![0.0; p];
    let subsets = for_each_subset(n, b, |subset| {
        minibatch_gradient(target, theta, subset, &mut est);
        for j in 0..p {
            noise[j].push(est[j] - full[j]);
        }
    })?;
    let mean = noise
        .iter()
        .map(|z| {
            let mut s = CompensatedSum::default();
            z.iter().for_each(|&v| s.add(v));
            s.value() / z.len() as f64
        })
        .collect();
    let variance = noise.iter().map(|z| population_variance(z)).collect();
    Ok(NoiseMoments {
        mean,
        variance,
        subsets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::make_isotropic_gaussian_target;

    fn half_square() -> DecomposableTarget {
        make_isotropic_gaussian_target(1, 1, 1.0, &[vec![0.0]]).unwrap()
    }

    #[test]
    fn zero_steps_is_point_mass() {
        let spec = AffineChainSpec::lmc(&half_square(), 0.1).unwrap();
        let law = gaussian_chain_law(&spec, &[1.0], 0).unwrap();
        assert_eq!(law.mean()[0], 1.0);
        assert_eq!(law.cov()[(0, 0)], 0.0);
    }

    #[test]
    fn one_step_law() {
        let spec = AffineChainSpec::lmc(&half_square(), 0.1).unwrap();
        let law = gaussian_chain_law(&spec, &[1.0], 1).unwrap();
        assert!((law.mean()[0] - 0.9).abs() < 1e-15);
        assert!((law.cov()[(0, 0)] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn stationary_limit() {
        let spec = AffineChainSpec::lmc(&half_square(), 0.1).unwrap();
        let expected = 0.2 / 0.19;
        let law = spec.stationary_law().unwrap();
        assert!((law.cov()[(0, 0)] - expected).abs() < 1e-14);
        let late = gaussian_chain_law(&spec, &[1.0], 2000).unwrap();
        assert!((late.cov()[(0, 0)] - expected).abs() < 1e-12);
        assert!(late.mean()[0].abs() < 1e-12);
        assert!((spec.spectral_radius() - 0.9).abs() < 1e-15);
    }

    #[test]
    fn iterator_matches_direct_law() {
        let centers = vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![-1.0, 1.0]];
        let t = make_isotropic_gaussian_target(2, 3, 0.5, &centers).unwrap();
        let spec = AffineChainSpec::sgd_idealized(&t, 0.2, 2.0).unwrap();
        let from_iter: Vec<GaussianLaw> = spec.laws(&[4.0, 4.0]).unwrap().take(6).collect();
        for (k, law) in from_iter.iter().enumerate() {
            assert_eq!(law, &gaussian_chain_law(&spec, &[4.0, 4.0], k as u64).unwrap());
        }
    }

    #[test]
    fn no_stationary_law_when_expanding() {
        let spec = AffineChainSpec::lmc(&half_square(), 2.5).unwrap();
        assert!(spec.stationary_law().is_err());
    }

    #[test]
    fn lmc_noise_equivalence_of_rounded_batches() {
        let n = 100usize;
        for b in [1usize, 7, 11, 50, 99] {
            let h_eff = 2.0 * b as f64 / (n as f64 * (n - b) as f64);
            let v = h_eff * h_eff * isotropic_noise_variance(n, b as f64).unwrap();
            assert!((v - 2.0 * h_eff).abs() <= 1e-15 * 2.0 * h_eff, "b={b}");
        }
    }

    #[test]
    fn noise_variance_examples() {
        assert_eq!(isotropic_noise_variance(10, 10.0).unwrap(), 0.0);
        assert_eq!(isotropic_noise_variance(100, 50.0).unwrap(), 100.0);
        assert!(isotropic_noise_variance(10, 0.0).is_err());
        assert!(isotropic_noise_variance(10, 11.0).is_err());
    }

    #[test]
    fn variance_formula_examples() {
        assert_eq!(subset_estimator_variance_formula(&[1.0, 1.0], 1).unwrap(), 0.0);
        assert!((subset_estimator_variance_formula(&[1.0, 2.0], 1).unwrap() - 1.0).abs() < 1e-15);
        assert!((subset_estimator_variance_formula(&[1.0, 2.0, 3.0], 2).unwrap() - 1.5).abs() < 1e-14);
        assert_eq!(subset_estimator_variance_formula(&[1.0; 7], 3).unwrap(), 0.0);
        assert!(subset_estimator_variance_formula(&[1.0], 1).is_err());
        assert!(subset_estimator_variance_formula(&[1.0, 2.0], 0).is_err());
        assert!(subset_estimator_variance_formula(&[1.0, 2.0], 3).is_err());
    }

    #[test]
    fn bruteforce_examples() {
        assert_eq!(subset_estimator_variance_bruteforce(&[1.0, 5.0, -2.0], 3).unwrap(), 0.0);
        assert!((subset_estimator_variance_bruteforce(&[1.0, 2.0], 1).unwrap() - 1.0).abs() < 1e-15);
        assert!((subset_estimator_variance_bruteforce(&[1.0, 2.0, 3.0], 2).unwrap() - 1.5).abs() < 1e-14);
    }

    #[test]
    fn enumeration_guard() {
        let a = vec![1.0; 40];
        assert!(matches!(subset_estimator_variance_bruteforce(&a, 20), Err(Error::ResourceLimit(_))));
        assert_eq!(binomial(40, 20), 137_846_528_820);
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(3, 4), 0);
    }

    #[test]
    fn subsets_are_lexicographic_and_complete() {
        let mut seen = Vec::new();
        let count = for_each_subset(4, 2, |s| seen.push(s.to_vec())).unwrap();
        assert_eq!(count, 6);
        assert_eq!(
            seen,
            vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]
        );
    }

    #[test]
    fn all_ones_has_zero_variance_but_unit_dispersion_scales_like_sigma_squared() {
        for (n, b) in [(10usize, 3usize), (20, 5), (8, 8)] {
            let ones = vec![1.0; n];
            assert!(subset_estimator_variance_formula(&ones, b).unwrap().abs() < 1e-12);
            // a_i = ±1 alternating: Σa² = n, Σ_{i≠j} = (Σa)² − n = −n for even n
            let alt: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
            let v = subset_estimator_variance_formula(&alt, b).unwrap();
            let sigma2 = isotropic_noise_variance(n, b as f64).unwrap();
            // V = (n−b)/b·n + (n−b)/(b(n−1))·n = σ²·n/(n−1)
            assert!((v - sigma2 * n as f64 / (n as f64 - 1.0)).abs() < 1e-10 * (1.0 + sigma2));
        }
    }

    #[test]
    fn minibatch_noise_of_identical_components_vanishes() {
        let t = make_isotropic_gaussian_target(2, 5, 1.0, &vec![vec![0.3, -0.2]; 5]).unwrap();
        let m = enumerate_minibatch_noise(&t, &[1.0, 1.0], 2).unwrap();
        assert_eq!(m.subsets, 10);
        assert!(m.variance.iter().all(|v| v.abs() < 1e-24));
    }
}
