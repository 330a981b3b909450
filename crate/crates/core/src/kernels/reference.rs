//! Scalar kernels that define the expected output of every vector kernel.

use super::{GemvProblem, KernelId, Variant, MAX_COLS};
use crate::packing::AdjacentPackedW4;
use crate::{Error, Result};

fn check_shapes(len: usize, rows: usize, cols: usize, acts: usize) -> Result<()> {
    if len != rows * cols {
        return Err(Error::Shape(format!("{rows}x{cols} weights need {} values, got {len}", rows * cols)));
    }
    if acts != cols {
        return Err(Error::Shape(format!("weights have {cols} columns but activations have {acts}")));
    }
    if cols > MAX_COLS {
        return Err(Error::Shape(format!("{cols} columns exceeds the overflow bound {MAX_COLS}")));
    }
    Ok(())
}

/// Plain `i8 x i8 -> i32` GEMV over a row-major `rows x cols` matrix.
pub fn gemv_baseline_w8a8(weights: &[i8], rows: usize, cols: usize, acts: &[i8]) -> Result<Vec<i32>> {
    check_shapes(weights.len(), rows, cols, acts.len())?;
    if cols == 0 {
        return Ok(vec![0; rows]);
    }
    Ok(weights.chunks_exact(cols).map(|row| row.iter().zip(acts).map(|(w, a)| *w as i32 * *a as i32).sum()).collect())
}

/// GEMV over adjacent-pair packed 4-bit weights and 8-bit activations.
///
/// Each weight byte is decoded with scalar shifts: the low nibble (even
/// column) by shifting it to the top and back, the high nibble (odd column)
/// with a single arithmetic shift. Both products are accumulated into the
/// output before moving to the next byte.
pub fn gemv_naive_w4a8(weights: &AdjacentPackedW4, acts: &[i8]) -> Result<Vec<i32>> {
    if acts.len() % 2 != 0 {
        return Err(Error::Shape(format!("odd reduction length {} needs padding", acts.len())));
    }
    if acts.len() != weights.cols() {
        return Err(Error::Shape(format!(
            "weights have {} columns but activations have {}",
            weights.cols(),
            acts.len()
        )));
    }
    if acts.len() > MAX_COLS {
        return Err(Error::Shape(format!("{} columns exceeds the overflow bound {MAX_COLS}", acts.len())));
    }

    let mut out = vec![0i32; weights.rows()];
    for (i, o) in out.iter_mut().enumerate() {
        for (byte, pair) in weights.row_bytes(i).iter().zip(acts.chunks_exact(2)) {
            let w0 = ((*byte << 4) as i8) >> 4;
            let w1 = (*byte as i8) >> 4;
            *o += w0 as i32 * pair[0] as i32;
            *o += w1 as i32 * pair[1] as i32;
        }
    }
    Ok(out)
}

/// Reference semantics for the packed kernels: unpack both operands, then
/// run [`gemv_baseline_w8a8`].
pub fn gemv_ref(id: &KernelId, problem: &GemvProblem) -> Result<Vec<i32>> {
    if id.variant() == Variant::BaselineW8A8 {
        return Err(Error::UnsupportedKernel { weight_bits: id.weight_bits(), act_bits: id.act_bits() });
    }
    // Normalise naive/vector ids to their width pair; the pair must be one of the nine.
    KernelId::reference(id.weight_bits(), id.act_bits())?;
    problem.check_kernel(id)?;
    let weights = problem.weights().values()?;
    let acts = problem.activations().values()?;
    gemv_baseline_w8a8(&weights, problem.rows(), problem.cols(), &acts)
}
