//! Randomised cross-checks of every kernel against its scalar reference.

use fullpack::{KernelId, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::harness::{Case, Runner};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelTally {
    pub kernel: KernelId,
    pub trials: usize,
    pub mismatches: usize,
    /// Shape of the first disagreeing trial.
    pub first_failure: Option<(usize, usize)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerifySummary {
    pub kernels: Vec<KernelTally>,
}

impl VerifySummary {
    pub fn is_clean(&self) -> bool {
        self.kernels.iter().all(|k| k.mismatches == 0)
    }
}

/// Shapes span 1..=8 rows and 1..=8 blocks; odd trials drop a random number
/// of trailing columns so the padded tail is exercised.
fn random_shape(rng: &mut impl Rng, id: &KernelId, trial: usize) -> (usize, usize) {
    let block = id.weight_bits().block_elems().max(id.act_bits().block_elems());
    let rows = rng.random_range(1..=8);
    let mut cols = rng.random_range(1..=8) * block;
    if trial % 2 == 1 {
        cols -= rng.random_range(1..block);
    }
    if id.variant() == Variant::Naive {
        cols = (cols & !1).max(2);
    }
    (rows, cols)
}

/// Runs `trials` random problems per kernel. Packed kernels are compared on
/// the runner's backend and on the portable backend.
pub fn run_verify(kernels: &[KernelId], trials: usize, seed: u64, runner: &Runner) -> Result<VerifySummary> {
    let portable = runner.portable();
    let mut summary = VerifySummary::default();
    for (index, id) in kernels.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(index as u64));
        let mut tally = KernelTally { kernel: *id, trials, mismatches: 0, first_failure: None };
        for trial in 0..trials {
            let (rows, cols) = random_shape(&mut rng, id, trial);
            let case = Case::with_rng(*id, rows, cols, &mut rng)?;
            let ok = case.run(runner)? == case.expected() && case.run(&portable)? == case.expected();
            if !ok {
                tally.mismatches += 1;
                tally.first_failure.get_or_insert((rows, cols));
            }
        }
        summary.kernels.push(tally);
    }
    Ok(summary)
}
