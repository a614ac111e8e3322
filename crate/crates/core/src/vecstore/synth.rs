//! Seeded synthetic datasets so every test runs without downloads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::VectorSet;

/// Spread of mixture centers relative to the unit within-cluster deviation.
pub const DEFAULT_CENTER_SCALE: f32 = 3.0;

/// `n` points from an isotropic standard Gaussian in `dim` dimensions.
pub fn gaussian(n: usize, dim: usize, seed: u64) -> VectorSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..n * dim)
        .map(|_| rng.sample::<f32, _>(StandardNormal))
        .collect();
    VectorSet::from_flat(dim, data).expect("length is n * dim")
}

/// Mixture of `clusters` unit-variance Gaussians whose centers are drawn
/// from N(0, center_scale²). Returns the set and each row's cluster label.
/// Points are emitted in random cluster order, not grouped by label.
pub fn mixture(
    n: usize,
    dim: usize,
    clusters: usize,
    center_scale: f32,
    seed: u64,
) -> (VectorSet, Vec<usize>) {
    let clusters = clusters.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f32>> = (0..clusters)
        .map(|_| {
            (0..dim)
                .map(|_| rng.sample::<f32, _>(StandardNormal) * center_scale)
                .collect()
        })
        .collect();
    let mut data = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let c = rng.random_range(0..clusters);
        labels.push(c);
        for x in &centers[c] {
            data.push(x + rng.sample::<f32, _>(StandardNormal));
        }
    }
    let set = VectorSet::from_flat(dim, data).expect("length is n * dim");
    (set, labels)
}

/// `clusters <= 1` gives the plain Gaussian, otherwise a mixture.
pub fn generate(n: usize, dim: usize, clusters: usize, seed: u64) -> VectorSet {
    if clusters <= 1 {
        gaussian(n, dim, seed)
    } else {
        mixture(n, dim, clusters, DEFAULT_CENTER_SCALE, seed).0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_and_shaped() {
        let a = gaussian(50, 7, 1);
        assert_eq!((a.len(), a.dim()), (50, 7));
        assert_eq!(a, gaussian(50, 7, 1));
        assert_ne!(a, gaussian(50, 7, 2));
        let (m, labels) = mixture(100, 4, 3, 5.0, 9);
        assert_eq!(m.len(), 100);
        assert!(labels.iter().all(|&l| l < 3));
    }
}
