//! Reproducible problem instances shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tubal_core::{Shape3, Tensor3};

pub fn random_tensor(shape: Shape3, seed: u64) -> Tensor3 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor3::from_fn(shape, |_, _, _| rng.random_range(-1.0..1.0))
}

/// Dictionary with unit-energy atoms.
pub fn random_dictionary(rows: usize, atoms: usize, tubes: usize, seed: u64) -> Tensor3 {
    let mut d = random_tensor(Shape3::new(rows, atoms, tubes), seed);
    let norms = d.lateral_slice_norms();
    for l in 0..tubes {
        for (j, n) in norms.iter().enumerate() {
            for i in 0..rows {
                d[(i, j, l)] /= n;
            }
        }
    }
    d
}

/// Coefficients with roughly `density` nonzero entries.
pub fn sparse_codes(atoms: usize, cols: usize, tubes: usize, density: f64, seed: u64) -> Tensor3 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor3::from_fn(Shape3::new(atoms, cols, tubes), |_, _, _| {
        if rng.random_bool(density) {
            rng.random_range(-1.0..1.0)
        } else {
            0.0
        }
    })
}
