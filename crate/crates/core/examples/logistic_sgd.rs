//! Bayesian logistic regression: a non-Gaussian target sampled with
//! idealized SGD at the planned step, compared with small-step LMC. The
//! prior strength grows with n so that κ stays small enough for a plan.

use langevin_sgd::metrics::{w2_empirical, SampleSet};
use langevin_sgd::planner::{plan_sgd_first_order, potential_at};
use langevin_sgd::potentials::{make_logistic_target, validate_constants};
use langevin_sgd::samplers::{run_chains, Recording, SamplerConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> langevin_sgd::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 400;
    let design: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
    let labels: Vec<f64> = design
        .iter()
        .map(|x| if 2.0 * x[0] - x[1] + 0.3 * rng.random_range(-1.0..1.0) > 0.0 { 1.0 } else { -1.0 })
        .collect();
    let target = make_logistic_target(&design, &labels, n as f64 / 2.0)?;
    println!("kappa = {:.3}, constants check passed: {}", target.kappa(), validate_constants(&target, 100, 1e-8)?.passed);

    let theta0 = [0.0, 0.0];
    let f0 = potential_at(&target, &theta0)?;
    let eps = 0.15;
    let plan = plan_sgd_first_order(eps, &target, f0)?;
    println!("plan: h_eff={:.3e} b={} K={} budget={}", plan.h_eff, plan.b, plan.k, plan.budget);
    for note in &plan.notes {
        println!("  note: {note}");
    }

    let chains = 1000;
    let collect = |config: SamplerConfig, k: u64, seed: u64| -> langevin_sgd::Result<SampleSet> {
        let rows: Vec<Vec<f64>> = run_chains(&config, &target, &theta0, k, seed, chains, &Recording::None)
            .into_iter()
            .map(|r| r.map(|run| run.final_state.into_theta()))
            .collect::<Result<_, _>>()?;
        SampleSet::from_rows(&rows)
    };
    let sgd = collect(SamplerConfig::sgd_idealized(plan.h_eff, plan.b as f64), plan.k, 1)?;
    // A long, small-step LMC run stands in for the posterior.
    let reference = collect(SamplerConfig::lmc(plan.h_eff / 4.0), 4 * plan.k, 2)?;
    println!("SGD mean {:.4?}  reference mean {:.4?}", sgd.mean().as_slice(), reference.mean().as_slice());
    println!("empirical W2(SGD, reference) = {:.4}", w2_empirical(&sgd, &reference)?);
    Ok(())
}
