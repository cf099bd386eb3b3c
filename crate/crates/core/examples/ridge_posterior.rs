//! Ridge regression posterior. Idealized SGD at the matching batch size
//! samples the LMC law; plain mini-batch SGD at the same batch size only
//! does so when the per-component gradients have unit spread, which is not
//! the case here, so its variance comes out wrong.

use langevin_sgd::metrics::{w2_empirical_vs_gaussian, SampleSet};
use langevin_sgd::planner::matching_batch;
use langevin_sgd::potentials::{make_ridge_target, validate_constants, DecomposableTarget};
use langevin_sgd::samplers::{run_chains, Recording, SamplerConfig};
use langevin_sgd::Potential;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn finals(config: SamplerConfig, target: &DecomposableTarget, k: u64) -> langevin_sgd::Result<SampleSet> {
    let rows: Vec<Vec<f64>> = run_chains(&config, target, &[0.0; 3], k, 1, 1000, &Recording::None)
        .into_iter()
        .map(|r| r.map(|run| run.final_state.into_theta()))
        .collect::<Result<_, _>>()?;
    SampleSet::from_rows(&rows)
}

fn main() -> langevin_sgd::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (n, p) = (200, 3);
    let truth = [1.0, -2.0, 0.5];
    let design: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let responses: Vec<f64> = design
        .iter()
        .map(|x| x.iter().zip(&truth).map(|(a, b)| a * b).sum::<f64>() + 0.3 * rng.random_range(-1.0..1.0))
        .collect();
    let target = make_ridge_target(&design, &responses, 1.0)?;
    let report = validate_constants(&target, 200, 1e-8)?;
    println!("m = {:.3}, M = {:.3}, sampled check passed: {}", target.constants().strong_convexity, target.constants().smoothness, report.passed);

    let pi = target.stationary_law().expect("ridge is Gaussian");
    let h = 0.1 / target.constants().smoothness;
    let b = matching_batch(h, n).max(1.0);
    println!("h = {h:.3e}, matching batch b = {b:.3}");

    let ideal = finals(SamplerConfig::sgd_idealized(h, b), &target, 5000)?;
    let minibatch = finals(SamplerConfig::sgd_minibatch(h, b.round() as usize), &target, 5000)?;
    println!("posterior mean   {:.4?}", pi.mean().as_slice());
    println!("idealized mean   {:.4?}", ideal.mean().as_slice());
    println!("mini-batch mean  {:.4?}", minibatch.mean().as_slice());
    println!("posterior var    {:.4?}", pi.cov().diagonal().as_slice());
    println!("idealized var    {:.4?}", ideal.covariance().diagonal().as_slice());
    println!("mini-batch var   {:.4?}", minibatch.covariance().diagonal().as_slice());
    for (name, set) in [("idealized", &ideal), ("mini-batch", &minibatch)] {
        let w2 = w2_empirical_vs_gaussian(set, &pi, 3, 99)?;
        println!("{name:<11} empirical W2 to posterior draws: {:.4} ± {:.4}", w2.mean, w2.std);
    }
    Ok(())
}
