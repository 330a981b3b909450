//! 16-lane GEMV kernels over the stride-16 layout.
//!
//! Every kernel walks one output row at a time. For each 16-byte block of the
//! packed operand it issues a single load, splits the register into its
//! `8 / bits` stride groups with [`extract_lanes`], and pairs group `s` with
//! the 16 lanes of the other operand covering columns `base + 16s ..
//! base + 16s + 16`:
//!
//! * packed weights, 8-bit activations (W4A8, W2A8, W1A8): one weight load,
//!   `8 / bits` activation loads per block;
//! * 8-bit weights, packed activations (W8A4, W8A2, W8A1): the same with the
//!   roles swapped;
//! * equal-width packed pairs (W4A4, W2A2, W1A1): one load of each operand,
//!   group `s` of the weights against group `s` of the activations.
//!
//! Products are widened to 16 bits and summed pairwise into four `i32` lanes
//! each step, which is exact for reductions up to [`MAX_COLS`](super::MAX_COLS).
//! Padding columns hold zeros, so there is no scalar tail.

use super::{GemvProblem, KernelId, Operand, PlainMatrix, Variant};
use crate::packing::{extract_lanes, PackedMatrix};
use crate::simd::{self, Portable, Role, VectorUnit};
use crate::{BitWidth, Error, Result};

/// Which implementation of [`VectorUnit`] executes a kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Portable,
    #[cfg(target_arch = "x86_64")]
    Sse2,
}

impl Backend {
    /// The accelerated backend if requested and present, else [`Backend::Portable`].
    pub fn select(prefer_hw: bool) -> Self {
        #[cfg(target_arch = "x86_64")]
        if prefer_hw && simd::hardware_available() {
            return Backend::Sse2;
        }
        let _ = prefer_hw;
        Backend::Portable
    }

    pub fn name(self) -> &'static str {
        match self {
            Backend::Portable => "portable",
            #[cfg(target_arch = "x86_64")]
            Backend::Sse2 => "sse2",
        }
    }

    /// Runs the kernel for `problem`'s width pair on this backend.
    pub fn gemv(self, problem: &GemvProblem) -> Vec<i32> {
        match self {
            Backend::Portable => gemv_with(&Portable, problem),
            #[cfg(target_arch = "x86_64")]
            Backend::Sse2 => gemv_with(&simd::Sse2, problem),
        }
    }
}

/// Vector GEMV on the best available backend.
///
/// `id` must be a vector (or baseline, for W8A8 problems) kernel whose widths
/// match the problem.
pub fn gemv_vec(id: &KernelId, problem: &GemvProblem) -> Result<Vec<i32>> {
    match id.variant() {
        Variant::FullpackVec | Variant::BaselineW8A8 => {}
        _ => return Err(Error::Shape(format!("{id} is not a vector kernel"))),
    }
    problem.check_kernel(id)?;
    Ok(Backend::select(true).gemv(problem))
}

/// Validates the width pair, then runs on the accelerated path when
/// `prefer_hw` is set and one exists, otherwise on the portable emulation.
pub fn gemv_vec_dispatch(
    weight_bits: BitWidth,
    act_bits: BitWidth,
    prefer_hw: bool,
    problem: &GemvProblem,
) -> Result<Vec<i32>> {
    let id = KernelId::vector(weight_bits, act_bits)?;
    problem.check_kernel(&id)?;
    Ok(Backend::select(prefer_hw).gemv(problem))
}

/// Runs the kernel matching `problem`'s storage on an arbitrary unit.
pub fn gemv_with<U: VectorUnit>(unit: &U, problem: &GemvProblem) -> Vec<i32> {
    match (problem.weights(), problem.activations()) {
        (Operand::Packed(w), Operand::Plain(a)) => match w.bits() {
            BitWidth::Four => packed_by_plain::<U, 4>(unit, w, a),
            BitWidth::Two => packed_by_plain::<U, 2>(unit, w, a),
            BitWidth::One => packed_by_plain::<U, 1>(unit, w, a),
            BitWidth::Eight => unreachable!("8-bit operands are stored plain"),
        },
        (Operand::Plain(w), Operand::Packed(a)) => match a.bits() {
            BitWidth::Four => plain_by_packed::<U, 4>(unit, w, a),
            BitWidth::Two => plain_by_packed::<U, 2>(unit, w, a),
            BitWidth::One => plain_by_packed::<U, 1>(unit, w, a),
            BitWidth::Eight => unreachable!("8-bit operands are stored plain"),
        },
        (Operand::Packed(w), Operand::Packed(a)) => match w.bits() {
            BitWidth::Four => packed_by_packed::<U, 4>(unit, w, a),
            BitWidth::Two => packed_by_packed::<U, 2>(unit, w, a),
            BitWidth::One => packed_by_packed::<U, 1>(unit, w, a),
            BitWidth::Eight => unreachable!("8-bit operands are stored plain"),
        },
        (Operand::Plain(w), Operand::Plain(a)) => plain_by_plain(unit, w, a),
    }
}

const fn width(bits: u32) -> BitWidth {
    match bits {
        1 => BitWidth::One,
        2 => BitWidth::Two,
        4 => BitWidth::Four,
        _ => BitWidth::Eight,
    }
}

fn packed_by_plain<U: VectorUnit, const BITS: u32>(unit: &U, w: &PackedMatrix, a: &PlainMatrix) -> Vec<i32> {
    let bits = width(BITS);
    let groups = bits.lanes_per_byte();
    let acts = a.row(0);
    (0..w.rows())
        .map(|row| {
            let mut acc = unit.zero();
            for (block, bytes) in w.row_bytes(row).chunks_exact(16).enumerate() {
                let packed = unit.load_packed(bytes, Role::Weights);
                let base = block * bits.block_elems();
                for group in (0..groups).rev() {
                    let lanes = extract_lanes(unit, packed, group, bits);
                    let x = unit.load_plain(&acts[base + 16 * group..], Role::Activations);
                    acc = unit.mac(acc, lanes, x);
                }
            }
            unit.horizontal_sum(acc)
        })
        .collect()
}

fn plain_by_packed<U: VectorUnit, const BITS: u32>(unit: &U, w: &PlainMatrix, a: &PackedMatrix) -> Vec<i32> {
    let bits = width(BITS);
    let groups = bits.lanes_per_byte();
    let acts = a.row_bytes(0);
    (0..w.rows())
        .map(|row| {
            let weights = w.row(row);
            let mut acc = unit.zero();
            for (block, bytes) in acts.chunks_exact(16).enumerate() {
                let packed = unit.load_packed(bytes, Role::Activations);
                let base = block * bits.block_elems();
                for group in (0..groups).rev() {
                    let lanes = extract_lanes(unit, packed, group, bits);
                    let x = unit.load_plain(&weights[base + 16 * group..], Role::Weights);
                    acc = unit.mac(acc, x, lanes);
                }
            }
            unit.horizontal_sum(acc)
        })
        .collect()
}

fn packed_by_packed<U: VectorUnit, const BITS: u32>(unit: &U, w: &PackedMatrix, a: &PackedMatrix) -> Vec<i32> {
    let bits = width(BITS);
    let groups = bits.lanes_per_byte();
    let acts = a.row_bytes(0);
    (0..w.rows())
        .map(|row| {
            let mut acc = unit.zero();
            for (wb, ab) in w.row_bytes(row).chunks_exact(16).zip(acts.chunks_exact(16)) {
                let wv = unit.load_packed(wb, Role::Weights);
                let av = unit.load_packed(ab, Role::Activations);
                // Group s of both operands covers the same 16 columns.
                for group in (0..groups).rev() {
                    let wl = extract_lanes(unit, wv, group, bits);
                    let al = extract_lanes(unit, av, group, bits);
                    acc = unit.mac(acc, wl, al);
                }
            }
            unit.horizontal_sum(acc)
        })
        .collect()
}

fn plain_by_plain<U: VectorUnit>(unit: &U, w: &PlainMatrix, a: &PlainMatrix) -> Vec<i32> {
    let acts = a.row(0);
    (0..w.rows())
        .map(|row| {
            let mut acc = unit.zero();
            for (wc, ac) in w.row(row).chunks_exact(16).zip(acts.chunks_exact(16)) {
                let wv = unit.load_plain(wc, Role::Weights);
                let av = unit.load_plain(ac, Role::Activations);
                acc = unit.mac(acc, wv, av);
            }
            unit.horizontal_sum(acc)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::reference::gemv_ref;
    use crate::simd::Counting;
    use crate::SubByteTensor;

    fn problem(w: BitWidth, a: BitWidth, rows: usize, cols: usize, f: impl Fn(usize) -> i8) -> GemvProblem {
        let wt = SubByteTensor::new(w, rows, cols, (0..rows * cols).map(|i| f(i % cols)).collect()).unwrap();
        let at =
            SubByteTensor::vector(a, (0..cols).map(|_| if a == BitWidth::One { -1 } else { 1 }).collect()).unwrap();
        GemvProblem::new(&wt, &at).unwrap()
    }

    #[test]
    fn w4a8_ramp_against_ones() {
        let p = problem(BitWidth::Four, BitWidth::Eight, 1, 32, |c| (c % 16) as i8 - 8);
        let id = KernelId::vector(BitWidth::Four, BitWidth::Eight).unwrap();
        assert_eq!(gemv_vec(&id, &p).unwrap(), [-16]);
        assert_eq!(gemv_with(&Portable, &p), [-16]);
    }

    #[test]
    fn zero_operands_every_kernel() {
        for id in KernelId::all_vector() {
            let w = SubByteTensor::zeros(id.weight_bits(), 2, 40);
            let a = SubByteTensor::zeros(id.act_bits(), 1, 40);
            let p = GemvProblem::new(&w, &a).unwrap();
            assert_eq!(gemv_vec(&id, &p).unwrap(), [0, 0], "{id}");
        }
    }

    #[test]
    fn dispatch_paths_agree_and_reject_bad_pairs() {
        let p = problem(BitWidth::Two, BitWidth::Eight, 3, 100, |c| (c % 4) as i8 - 2);
        let hw = gemv_vec_dispatch(BitWidth::Two, BitWidth::Eight, true, &p).unwrap();
        let portable = gemv_vec_dispatch(BitWidth::Two, BitWidth::Eight, false, &p).unwrap();
        assert_eq!(hw, portable);
        let id = KernelId::reference(BitWidth::Two, BitWidth::Eight).unwrap();
        assert_eq!(hw, gemv_ref(&id, &p).unwrap());
        assert!(matches!(
            gemv_vec_dispatch(BitWidth::Four, BitWidth::Two, true, &p),
            Err(Error::UnsupportedKernel { .. })
        ));
        assert!(matches!(gemv_vec_dispatch(BitWidth::Four, BitWidth::Eight, true, &p), Err(Error::Shape(_))));
    }

    #[test]
    fn loads_per_block() {
        use BitWidth::*;
        let cases = [
            (Four, Eight, 1, 2),
            (Two, Eight, 1, 4),
            (One, Eight, 1, 8),
            (Eight, Four, 2, 1),
            (Eight, Two, 4, 1),
            (Eight, One, 8, 1),
            (Four, Four, 1, 1),
            (Two, Two, 1, 1),
            (One, One, 1, 1),
        ];
        for (w, a, weight_loads, act_loads) in cases {
            let cols = w.block_elems().max(a.block_elems());
            let p = problem(w, a, 1, cols, |_| 0);
            let unit = Counting::new(Portable);
            gemv_with(&unit, &p);
            assert_eq!(
                (unit.loads(Role::Weights), unit.loads(Role::Activations)),
                (weight_loads, act_loads),
                "W{w}A{a}"
            );
        }
    }

    #[test]
    fn backend_names() {
        assert_eq!(Backend::select(false), Backend::Portable);
        assert_eq!(Backend::select(false).name(), "portable");
    }

    #[test]
    fn baseline_vector_kernel() {
        let w = SubByteTensor::new(BitWidth::Eight, 1, 2, vec![1, 2]).unwrap();
        let a = SubByteTensor::vector(BitWidth::Eight, vec![3, 4]).unwrap();
        let p = GemvProblem::new(&w, &a).unwrap();
        assert_eq!(gemv_vec(&KernelId::baseline(), &p).unwrap(), [11]);
    }
}
