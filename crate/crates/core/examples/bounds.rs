//! The first- and second-order W2 bounds next to the exact distance of the
//! LMC iterates on a Gaussian target.

use langevin_sgd::metrics::w2_gaussian;
use langevin_sgd::oracles::AffineChainSpec;
use langevin_sgd::planner::{lmc_bound_first_order, lmc_bound_second_order};
use langevin_sgd::potentials::make_isotropic_gaussian_target;
use langevin_sgd::{GaussianLaw, Potential};

fn main() -> langevin_sgd::Result<()> {
    let centers: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 / 10.0; 4]).collect();
    let target = make_isotropic_gaussian_target(4, 10, 0.1, &centers)?;
    let constants = target.constants();
    let pi = target.stationary_law().expect("quadratic");
    let theta0 = [5.0; 4];
    let w0 = w2_gaussian(&GaussianLaw::point_mass(&theta0)?, &pi)?;

    for h in [0.05, 0.2, 0.8] {
        println!("h = {h}");
        let laws: Vec<_> = AffineChainSpec::lmc(&target, h)?.laws(&theta0)?.take(201).collect();
        for k in [0u64, 10, 50, 200] {
            let exact = w2_gaussian(&laws[k as usize], &pi)?;
            let first = lmc_bound_first_order(h, k, w0, &constants, 4)?;
            let second = lmc_bound_second_order(h, k, w0, &constants, 4).map(|b| format!("{:.4}", b.total));
            println!(
                "  K={k:>3}  exact {exact:.4}  first-order {:.4} ({:?})  second-order {}",
                first.total,
                first.branch,
                second.unwrap_or_else(|e| e.kind().to_string())
            );
        }
    }
    Ok(())
}
