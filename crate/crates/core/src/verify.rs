//! Self-checks runnable from the command line.
//!
//! Each suite exercises one family of invariants at a size that finishes in
//! a few seconds and reports one line per property.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::GaussianLaw;
use crate::metrics::{w2_assignment, w2_empirical, w2_gaussian, w2_sorted_1d, SampleSet};
use crate::oracles::{
    enumerate_minibatch_noise, gaussian_chain_law, subset_estimator_variance_bruteforce,
    subset_estimator_variance_formula, AffineChainSpec,
};
use crate::planner::{lmc_bound_first_order, matching_batch};
use crate::potentials::{make_isotropic_gaussian_target, make_logistic_target, DecomposableTarget, Potential};
use crate::samplers::{lmc_step, run_chains, sgd_idealized_step, ChainState, Recording, SamplerConfig};

pub const SUITES: &[&str] = &["variance", "minibatch", "equivalence", "chain-law", "metric", "bound-validity"];

#[derive(Debug, Clone, Serialize)]
pub struct PropertyResult {
    pub suite: String,
    pub property: String,
    pub pass: bool,
    /// Observed worst-case value.
    pub value: f64,
    /// Threshold the value is compared with.
    pub threshold: f64,
}

impl PropertyResult {
    fn at_most(suite: &str, property: &str, value: f64, threshold: f64) -> Self {
        Self {
            suite: suite.into(),
            property: property.into(),
            pass: value <= threshold,
            value,
            threshold,
        }
    }
}

/// Runs a named suite, or every suite for `"all"`.
pub fn run_suite(name: &str, seed: u64) -> Result<Vec<PropertyResult>> {
    match name {
        "variance" => Ok(variance(seed)),
        "minibatch" => minibatch(seed),
        "equivalence" => equivalence(seed),
        "chain-law" => chain_law(seed),
        "metric" => metric(seed),
        "bound-validity" => bound_validity(),
        "all" => {
            let mut out = Vec::new();
            for s in SUITES {
                out.extend(run_suite(s, seed)?);
            }
            Ok(out)
        }
        other => Err(Error::invalid(format!(
            "unknown suite {other:?}; expected one of {SUITES:?} or \"all\""
        ))),
    }
}

pub(crate) fn relative_error(x: f64, y: f64) -> f64 {
    let scale = x.abs().max(y.abs());
    if scale == 0.0 {
        0.0
    } else {
        (x - y).abs() / scale
    }
}

fn variance(seed: u64) -> Vec<PropertyResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for n in 2..=10 {
        for b in 1..=n {
            for _ in 0..20 {
                let a: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let f = subset_estimator_variance_formula(&a, b).expect("valid sizes");
                let e = subset_estimator_variance_bruteforce(&a, b).expect("within guard");
                worst = worst.max(relative_error(f, e));
            }
        }
    }
    vec![PropertyResult::at_most(
        "variance",
        "formula agrees with enumeration (max relative error)",
        worst,
        1e-10,
    )]
}

fn random_centers(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..p).map(|_| rng.random_range(-2.0..2.0)).collect()).collect()
}

fn minibatch(seed: u64) -> Result<Vec<PropertyResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut mean_err, mut var_err): (f64, f64) = (0.0, 0.0);
    for n in 2..=8 {
        let target = make_isotropic_gaussian_target(2, n, 0.7, &random_centers(&mut rng, n, 2))?;
        let theta: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
        for b in 1..=n {
            let moments = enumerate_minibatch_noise(&target, &theta, b)?;
            for j in 0..2 {
                let a = coordinate_gradients(&target, &theta, j);
                let scale = a.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
                mean_err = mean_err.max(moments.mean[j].abs() / scale);
                let formula = subset_estimator_variance_formula(&a, b)?;
                var_err = var_err.max(relative_error(moments.variance[j], formula));
            }
        }
    }
    Ok(vec![
        PropertyResult::at_most("minibatch", "noise mean is zero (scaled)", mean_err, 1e-10),
        PropertyResult::at_most("minibatch", "noise variance matches formula", var_err, 1e-10),
    ])
}

/// `[∂_j g_1(θ), …, ∂_j g_n(θ)]`.
pub fn coordinate_gradients(target: &DecomposableTarget, theta: &[f64], j: usize) -> Vec<f64> {
    let mut g = vec![0.0; target.dim()];
    (0..target.n())
        .map(|i| {
            g.iter_mut().for_each(|v| *v = 0.0);
            target.add_component_gradient(i, theta, 1.0, &mut g);
            g[j]
        })
        .collect()
}

fn equivalence(seed: u64) -> Result<Vec<PropertyResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 30;
    let design: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let labels: Vec<f64> = (0..n).map(|i| if i % 3 == 0 { -1.0 } else { 1.0 }).collect();
    let target = make_logistic_target(&design, &labels, 3.0)?;
    let h = 0.5 / target.constants().smoothness;
    let b = matching_batch(h, n);
    let mut lmc = ChainState::new(vec![1.0, -1.0, 0.5], seed)?;
    let mut sgd = lmc.clone();
    let mut worst: f64 = 0.0;
    for _ in 0..2000 {
        lmc_step(&mut lmc, &target, h)?;
        sgd_idealized_step(&mut sgd, &target, h, b)?;
        let d = lmc.theta().iter().zip(sgd.theta()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        worst = worst.max(d);
    }
    Ok(vec![PropertyResult::at_most(
        "equivalence",
        "LMC and idealized SGD with b = hn²/(2+hn) coincide (max abs difference)",
        worst,
        1e-12,
    )])
}

fn chain_law(seed: u64) -> Result<Vec<PropertyResult>> {
    let target = make_isotropic_gaussian_target(1, 4, 0.5, &[vec![-1.0], vec![0.0], vec![1.0], vec![2.0]])?;
    let h = 0.05;
    let spec = AffineChainSpec::lmc(&target, h)?;
    let theta0 = [3.0];
    let checkpoints = vec![1u64, 10, 100, 1000];
    let chains = 2000;
    let runs = run_chains(
        &SamplerConfig::lmc(h),
        &target,
        &theta0,
        1000,
        seed,
        chains,
        &Recording::At(checkpoints.clone()),
    );
    let runs: Vec<_> = runs.into_iter().collect::<Result<_>>()?;
    let mut worst_mean: f64 = 0.0;
    let mut worst_var: f64 = 0.0;
    for (idx, &k) in checkpoints.iter().enumerate() {
        let xs: Vec<f64> = runs.iter().map(|r| r.trajectory[idx].theta[0]).collect();
        let law = gaussian_chain_law(&spec, &theta0, k)?;
        let (mu, var) = (law.mean()[0], law.cov()[(0, 0)]);
        let nf = chains as f64;
        let mean = xs.iter().sum::<f64>() / nf;
        let svar = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (nf - 1.0);
        worst_mean = worst_mean.max((mean - mu).abs() / (var / nf).sqrt());
        worst_var = worst_var.max((svar - var).abs() / (var * (2.0 / (nf - 1.0)).sqrt()));
    }
    Ok(vec![
        PropertyResult::at_most("chain-law", "empirical mean within 4 standard errors", worst_mean, 4.0),
        PropertyResult::at_most("chain-law", "empirical variance within 4 standard errors", worst_var, 4.0),
    ])
}

fn metric(seed: u64) -> Result<Vec<PropertyResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng, n: usize, p: usize| -> SampleSet {
        SampleSet::from_flat(p, (0..n * p).map(|_| rng.random_range(-3.0..3.0)).collect()).expect("finite")
    };
    let (mut asym, mut triangle, mut negative, mut identity, mut sorted_gap): (f64, f64, f64, f64, f64) =
        (0.0, 0.0, 0.0, 0.0, 0.0);
    for _ in 0..200 {
        let a = draw(&mut rng, 6, 2);
        let b = draw(&mut rng, 6, 2);
        let c = draw(&mut rng, 6, 2);
        let ab = w2_empirical(&a, &b)?;
        let ba = w2_empirical(&b, &a)?;
        let bc = w2_empirical(&b, &c)?;
        let ac = w2_empirical(&a, &c)?;
        asym = asym.max((ab - ba).abs());
        triangle = triangle.max(ac - ab - bc);
        negative = negative.max(-ab.min(0.0));
        identity = identity.max(w2_empirical(&a, &a)?);
        let x = draw(&mut rng, 7, 1);
        let y = draw(&mut rng, 7, 1);
        let flat = |s: &SampleSet| s.points().map(|p| p[0]).collect::<Vec<_>>();
        sorted_gap = sorted_gap.max((w2_sorted_1d(&flat(&x), &flat(&y)) - w2_assignment(&x, &y)).abs());
    }
    let g1 = GaussianLaw::isotropic(&[0.0, 0.0], 1.0)?;
    let g2 = GaussianLaw::isotropic(&[0.0, 0.0], 4.0)?;
    let closed = (w2_gaussian(&g1, &g2)? - 2f64.sqrt()).abs();
    Ok(vec![
        PropertyResult::at_most("metric", "symmetry (max |W(a,b) − W(b,a)|)", asym, 1e-12),
        PropertyResult::at_most("metric", "triangle inequality (max excess)", triangle, 1e-9),
        PropertyResult::at_most("metric", "nonnegativity (max negative part)", negative, 0.0),
        PropertyResult::at_most("metric", "identity (max W(a,a))", identity, 1e-12),
        PropertyResult::at_most("metric", "1-D sorted matching equals assignment", sorted_gap, 1e-12),
        PropertyResult::at_most("metric", "Gaussian closed form N(0,I) vs N(0,4I) = √2", closed, 1e-12),
    ])
}

fn bound_validity() -> Result<Vec<PropertyResult>> {
    let centers = vec![vec![0.5, -0.5], vec![1.5, 0.5]];
    let target = make_isotropic_gaussian_target(2, 2, 1.0, &centers)?;
    let pi = target.stationary_law().expect("quadratic");
    let m = target.constants().strong_convexity;
    let theta0 = [4.0, -3.0];
    let w0 = w2_gaussian(&GaussianLaw::point_mass(&theta0)?, &pi)?;
    let mut violations = 0u64;
    let mut worst: f64 = f64::NEG_INFINITY;
    for j in 1..=10 {
        let h = j as f64 / (10.0 * m);
        let spec = AffineChainSpec::lmc(&target, h)?;
        for (k, law) in spec.laws(&theta0)?.enumerate().take(2001).skip(1) {
            let exact = w2_gaussian(&law, &pi)?;
            let bound = lmc_bound_first_order(h, k as u64, w0, &target.constants(), 2)?.total;
            worst = worst.max(exact - bound);
            if exact > bound {
                violations += 1;
            }
        }
    }
    Ok(vec![
        PropertyResult::at_most("bound-validity", "violations of the first-order bound", violations as f64, 0.0),
        PropertyResult::at_most("bound-validity", "max (exact W₂ − bound)", worst, 0.0),
    ])
}
