//! Variance of the without-replacement subset estimator: closed form vs
//! enumeration of every subset.

use langevin_sgd::oracles::{binomial, subset_estimator_variance_bruteforce, subset_estimator_variance_formula};

fn main() -> langevin_sgd::Result<()> {
    let a = [3.0, -1.0, 4.0, 1.0, -5.0, 9.0, 2.0, -6.0];
    println!(" b  subsets   formula          enumeration");
    for b in 1..=a.len() {
        let f = subset_estimator_variance_formula(&a, b)?;
        let e = subset_estimator_variance_bruteforce(&a, b)?;
        println!("{b:>2}  {:>7}   {f:<15.9}  {e:.9}", binomial(a.len(), b));
    }
    // Enumeration is capped; the formula is not.
    let big: Vec<f64> = (0..40).map(|i| (i as f64).sin()).collect();
    println!("n=40, b=20: formula {:.6}", subset_estimator_variance_formula(&big, 20)?);
    if let Err(e) = subset_estimator_variance_bruteforce(&big, 20) {
        println!("n=40, b=20: enumeration refused: {e}");
    }
    Ok(())
}
