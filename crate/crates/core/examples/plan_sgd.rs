//! Turn an accuracy ε into (h, b, K) and compare the two SGD schedules.

use langevin_sgd::planner::{best_plan, candidate_plans, plan_lmc, potential_at};
use langevin_sgd::potentials::make_isotropic_gaussian_target;

fn main() -> langevin_sgd::Result<()> {
    let n = 100;
    let centers: Vec<Vec<f64>> = (0..n).map(|i| vec![(i as f64 - 49.5) / 50.0]).collect();
    let target = make_isotropic_gaussian_target(1, n, 1.0, &centers)?.with_hessian_lipschitz(1.0)?;
    let theta0 = [1.0];
    let f0 = potential_at(&target, &theta0)?;
    println!("f(theta0) = {f0:.3}");

    for eps in [0.03, 0.05, 0.1, 0.15, 0.2] {
        print!("eps = {eps:<5}");
        for (theorem, outcome) in candidate_plans(eps, &target, f0) {
            match outcome {
                Ok(p) => print!("  {theorem}: h={:.3e} b={:>3} K={:>3} Kb={:>4}", p.h_eff, p.b, p.k, p.budget),
                Err(e) => print!("  {theorem}: {}", e.kind()),
            }
        }
        println!("  -> best: {}", best_plan(eps, &target, f0)?.theorem);
    }

    let lmc = plan_lmc(0.1, &langevin_sgd::Potential::constants(&target), 1, f0)?;
    println!("full-gradient LMC at eps = 0.1: h={:.3e} K={} ({} component gradients)", lmc.h, lmc.k, lmc.k * n as u64);

    // Outside both windows nothing is feasible and every violated condition is reported.
    match best_plan(0.005, &target, f0) {
        Ok(_) => unreachable!(),
        Err(e) => println!("eps = 0.005: {e}"),
    }
    Ok(())
}
