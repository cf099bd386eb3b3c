//! LMC on a Gaussian sum: compare simulated chains with the exact law of
//! the iterates and with the target.

use langevin_sgd::metrics::{w2_gaussian, SampleSet};
use langevin_sgd::oracles::{gaussian_chain_law, AffineChainSpec};
use langevin_sgd::potentials::make_isotropic_gaussian_target;
use langevin_sgd::samplers::{run_chains, Recording, SamplerConfig};

fn main() -> langevin_sgd::Result<()> {
    let centers = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]];
    let target = make_isotropic_gaussian_target(2, 4, 1.0, &centers)?;
    let pi = target.stationary_law().expect("quadratic target");
    let h = 0.05;
    let theta0 = [3.0, -2.0];
    let checkpoints = vec![0, 5, 20, 100];
    let spec = AffineChainSpec::lmc(&target, h)?;

    let runs = run_chains(&SamplerConfig::lmc(h), &target, &theta0, 100, 7, 4000, &Recording::At(checkpoints.clone()));
    let runs: Vec<_> = runs.into_iter().collect::<Result<_, _>>()?;

    println!("   k   mean(sim)            mean(exact)          W2(law_k, pi)");
    for (i, &k) in checkpoints.iter().enumerate() {
        let rows: Vec<Vec<f64>> = runs.iter().map(|r| r.trajectory[i].theta.clone()).collect();
        let sim = SampleSet::from_rows(&rows)?.mean();
        let law = gaussian_chain_law(&spec, &theta0, k)?;
        println!(
            "{k:>4}   ({:+.3}, {:+.3})    ({:+.3}, {:+.3})    {:.4}",
            sim[0],
            sim[1],
            law.mean()[0],
            law.mean()[1],
            w2_gaussian(&law, &pi)?
        );
    }
    let limit = spec.stationary_law()?;
    println!(
        "stationary variance of the chain {:.4} vs target {:.4}",
        limit.cov()[(0, 0)],
        pi.cov()[(0, 0)]
    );
    Ok(())
}
