//! Closed-form Gaussian W2 against the exact empirical estimator.

use langevin_sgd::metrics::{w2_empirical, w2_gaussian};
use langevin_sgd::GaussianLaw;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> langevin_sgd::Result<()> {
    let a = GaussianLaw::new(DVector::from_vec(vec![0.0, 0.0]), DMatrix::from_row_slice(2, 2, &[2.0, 0.6, 0.6, 1.0]))?;
    let b = GaussianLaw::new(DVector::from_vec(vec![1.0, -0.5]), DMatrix::identity(2, 2))?;
    let exact = w2_gaussian(&a, &b)?;
    println!("Bures W2 = {exact:.4}");
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for n in [50, 200, 800] {
        let xa = a.sample(&mut rng, n);
        let xb = b.sample(&mut rng, n);
        println!("N = {n:>4}: empirical W2 = {:.4}", w2_empirical(&xa, &xb)?);
    }
    Ok(())
}
