//! With b = hn²/(2+hn) the idealized SGD noise has variance 2h, so SGD and
//! LMC driven by the same draws produce the same trajectory.

use langevin_sgd::planner::matching_batch;
use langevin_sgd::potentials::make_logistic_target;
use langevin_sgd::samplers::{lmc_step, sgd_idealized_step, ChainState};
use langevin_sgd::Potential;

fn main() -> langevin_sgd::Result<()> {
    let design: Vec<Vec<f64>> = (0..50)
        .map(|i| vec![((i * 7) % 11) as f64 / 11.0 - 0.5, ((i * 3) % 5) as f64 / 5.0 - 0.4])
        .collect();
    let labels: Vec<f64> = (0..50).map(|i| if i % 3 == 0 { -1.0 } else { 1.0 }).collect();
    let target = make_logistic_target(&design, &labels, 1.0)?;
    let h = 0.5 / target.constants().smoothness;
    let b = matching_batch(h, target.n());
    println!("h = {h:.4}, matching batch b = {b:.4}");

    let mut lmc = ChainState::new(vec![0.0, 0.0], 11)?;
    let mut sgd = lmc.clone();
    let mut worst: f64 = 0.0;
    for k in 1..=10_000 {
        lmc_step(&mut lmc, &target, h)?;
        sgd_idealized_step(&mut sgd, &target, h, b)?;
        worst = worst.max(lmc.theta().iter().zip(sgd.theta()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
        if k % 2500 == 0 {
            println!("k = {k:>5}  lmc = {:+.6?}  sgd = {:+.6?}", lmc.theta(), sgd.theta());
        }
    }
    println!("max coordinate difference over 10^4 steps: {worst:.2e}");
    Ok(())
}
