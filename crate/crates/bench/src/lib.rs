//! Shared fixtures for the criterion benches.

use fullpack::{BitWidth, GemvProblem, SubByteTensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_tensor(rng: &mut impl Rng, bits: BitWidth, rows: usize, cols: usize) -> SubByteTensor {
    let values = (0..rows * cols).map(|_| rng.random_range(bits.min_value()..=bits.max_value())).collect();
    SubByteTensor::new(bits, rows, cols, values).expect("values drawn in range")
}

/// Seeded random `rows x cols` problem for the given width pair.
pub fn random_problem(weight_bits: BitWidth, act_bits: BitWidth, rows: usize, cols: usize, seed: u64) -> GemvProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = random_tensor(&mut rng, weight_bits, rows, cols);
    let a = random_tensor(&mut rng, act_bits, 1, cols);
    GemvProblem::new(&w, &a).expect("supported pair")
}
