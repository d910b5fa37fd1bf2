//! Helpers for the complexity-versus-gas report: deterministic model
//! families and a least-squares line fit for checking linear gas growth.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::model::{ArchSpec, Model};

/// A one-hidden-layer model with seeded uniform +/-1/sqrt(fan_in) weights.
/// Gas costs depend only on shape and value encoding, so a seeded model
/// stands in for a trained one when sweeping architectures.
pub fn seeded_model(input_dim: usize, hidden: usize, classes: usize, seed: u64) -> Result<Model> {
    let arch = ArchSpec::new(input_dim, vec![hidden, classes])?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = Vec::with_capacity(arch.n_layers());
    let mut biases = Vec::with_capacity(arch.n_layers());
    for k in 0..arch.n_layers() {
        let limit = 1.0 / (arch.in_dim(k) as f64).sqrt();
        weights.push(
            (0..arch.out_dim(k) * arch.in_dim(k)).map(|_| rng.gen_range(-limit..limit)).collect(),
        );
        biases.push((0..arch.out_dim(k)).map(|_| rng.gen_range(-limit..limit)).collect());
    }
    Model::new(arch, weights, biases)
}

/// Least-squares line through `(x, y)` points: returns (slope, intercept, r2).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "need at least two points");
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys.iter()) {
        sxy += (x - mean_x) * (y - mean_y);
        sxx += (x - mean_x) * (x - mean_x);
        syy += (y - mean_y) * (y - mean_y);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, intercept, r2)
}
