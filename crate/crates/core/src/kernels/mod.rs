//! Mixed-precision integer GEMV.
//!
//! [`reference`] holds the scalar kernels that define correct results;
//! [`vector`] holds the 16-lane kernels that operate directly on the packed
//! layout and must match them exactly.

pub mod reference;
pub mod vector;

use std::fmt;
use std::str::FromStr;

use crate::packing::{self, PackedMatrix};
use crate::{BitWidth, Error, Result, SubByteTensor};

/// Largest reduction length for which `i32` accumulation cannot overflow:
/// `65536 * 128 * 128 = 2^30`.
pub const MAX_COLS: usize = 1 << 16;

/// Weight/activation width pairs with a packed kernel.
pub const SUPPORTED_PAIRS: [(BitWidth, BitWidth); 9] = {
    use BitWidth::*;
    [
        (Eight, Four),
        (Four, Eight),
        (Four, Four),
        (Two, Eight),
        (Eight, Two),
        (Two, Two),
        (One, Eight),
        (Eight, One),
        (One, One),
    ]
};

pub fn is_supported_pair(weight_bits: BitWidth, act_bits: BitWidth) -> bool {
    SUPPORTED_PAIRS.contains(&(weight_bits, act_bits))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Plain 8-bit GEMV.
    BaselineW8A8,
    /// Adjacent-pair packing with scalar extraction.
    Naive,
    /// Unpack both operands, then scalar GEMV.
    FullpackRef,
    /// Vector kernel over the stride-16 layout.
    FullpackVec,
}

/// Identifies one kernel: operand widths plus implementation variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct KernelId {
    weight_bits: BitWidth,
    act_bits: BitWidth,
    variant: Variant,
}

impl KernelId {
    pub fn new(weight_bits: BitWidth, act_bits: BitWidth, variant: Variant) -> Result<Self> {
        let admissible = match variant {
            Variant::BaselineW8A8 => (weight_bits, act_bits) == (BitWidth::Eight, BitWidth::Eight),
            Variant::Naive => weight_bits.is_sub_byte() || act_bits.is_sub_byte(),
            Variant::FullpackRef | Variant::FullpackVec => is_supported_pair(weight_bits, act_bits),
        };
        if !admissible {
            return Err(Error::UnsupportedKernel { weight_bits, act_bits });
        }
        Ok(Self { weight_bits, act_bits, variant })
    }

    pub fn baseline() -> Self {
        Self { weight_bits: BitWidth::Eight, act_bits: BitWidth::Eight, variant: Variant::BaselineW8A8 }
    }

    pub fn naive_w4a8() -> Self {
        Self { weight_bits: BitWidth::Four, act_bits: BitWidth::Eight, variant: Variant::Naive }
    }

    pub fn vector(weight_bits: BitWidth, act_bits: BitWidth) -> Result<Self> {
        Self::new(weight_bits, act_bits, Variant::FullpackVec)
    }

    pub fn reference(weight_bits: BitWidth, act_bits: BitWidth) -> Result<Self> {
        Self::new(weight_bits, act_bits, Variant::FullpackRef)
    }

    /// The nine vector kernels, in [`SUPPORTED_PAIRS`] order.
    pub fn all_vector() -> Vec<Self> {
        SUPPORTED_PAIRS
            .iter()
            .map(|&(weight_bits, act_bits)| Self { weight_bits, act_bits, variant: Variant::FullpackVec })
            .collect()
    }

    pub fn weight_bits(&self) -> BitWidth {
        self.weight_bits
    }

    pub fn act_bits(&self) -> BitWidth {
        self.act_bits
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn with_variant(self, variant: Variant) -> Result<Self> {
        Self::new(self.weight_bits, self.act_bits, variant)
    }
}

/// `w4a8` (vector), `w8a8` (baseline), `naive_w4a8`, `ref_w4a8`.
impl fmt::Display for KernelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.variant {
            Variant::BaselineW8A8 | Variant::FullpackVec => "",
            Variant::Naive => "naive_",
            Variant::FullpackRef => "ref_",
        };
        write!(f, "{prefix}w{}a{}", self.weight_bits, self.act_bits)
    }
}

impl FromStr for KernelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let (variant, pair) = if let Some(rest) = lower.strip_prefix("naive_") {
            (Some(Variant::Naive), rest)
        } else if let Some(rest) = lower.strip_prefix("ref_") {
            (Some(Variant::FullpackRef), rest)
        } else {
            (None, lower.as_str())
        };
        let bad = || Error::Shape(format!("unrecognised kernel name {s:?}"));
        let (w, a) = pair.strip_prefix('w').and_then(|r| r.split_once('a')).ok_or_else(bad)?;
        let w = BitWidth::try_from(w.parse::<u8>().map_err(|_| bad())?)?;
        let a = BitWidth::try_from(a.parse::<u8>().map_err(|_| bad())?)?;
        let variant = variant.unwrap_or(if (w, a) == (BitWidth::Eight, BitWidth::Eight) {
            Variant::BaselineW8A8
        } else {
            Variant::FullpackVec
        });
        Self::new(w, a, variant)
    }
}

/// An 8-bit matrix whose rows are zero-padded to `stride` columns so that
/// 16-byte loads never run past a row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlainMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<i8>,
}

impl PlainMatrix {
    pub fn new(rows: usize, cols: usize, stride: usize, values: &[i8]) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                values.len()
            )));
        }
        if stride < cols || stride % 16 != 0 {
            return Err(Error::Shape(format!("stride {stride} invalid for {cols} columns")));
        }
        let mut data = vec![0i8; rows * stride];
        if cols > 0 {
            for (dst, src) in data.chunks_exact_mut(stride).zip(values.chunks_exact(cols)) {
                dst[..cols].copy_from_slice(src);
            }
        }
        Ok(Self { rows, cols, stride, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    /// Full padded row.
    pub fn row(&self, row: usize) -> &[i8] {
        &self.data[row * self.stride..(row + 1) * self.stride]
    }

    /// Row-major logical values without padding.
    pub fn values(&self) -> Vec<i8> {
        (0..self.rows).flat_map(|r| self.row(r)[..self.cols].iter().copied()).collect()
    }
}

/// A GEMV operand in whichever storage its width calls for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Plain(PlainMatrix),
    Packed(PackedMatrix),
}

impl Operand {
    pub fn bits(&self) -> BitWidth {
        match self {
            Operand::Plain(_) => BitWidth::Eight,
            Operand::Packed(p) => p.bits(),
        }
    }

    pub fn rows(&self) -> usize {
        match self {
            Operand::Plain(m) => m.rows(),
            Operand::Packed(p) => p.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            Operand::Plain(m) => m.cols(),
            Operand::Packed(p) => p.cols(),
        }
    }

    /// Storage width of a row, in elements.
    pub fn padded_cols(&self) -> usize {
        match self {
            Operand::Plain(m) => m.stride(),
            Operand::Packed(p) => p.padded_cols(),
        }
    }

    /// Bytes occupied by the operand's logical elements in this storage.
    pub fn footprint(&self) -> usize {
        match self {
            Operand::Plain(m) => m.rows() * m.cols(),
            Operand::Packed(p) => p.data().len(),
        }
    }

    /// Logical values, row-major.
    pub fn values(&self) -> Result<Vec<i8>> {
        Ok(match self {
            Operand::Plain(m) => m.values(),
            Operand::Packed(p) => packing::unpack(p)?.into_values(),
        })
    }
}

/// Weights (`rows x cols`) and an activation vector (`cols`), stored for one
/// of the supported width pairs (or W8A8).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GemvProblem {
    weights: Operand,
    activations: Operand,
}

impl GemvProblem {
    /// Stores `weights` and `activations` (a `1 x cols` tensor), packing the
    /// sub-byte side(s) and padding plain operands to the same width.
    pub fn new(weights: &SubByteTensor, activations: &SubByteTensor) -> Result<Self> {
        let (wb, ab) = (weights.bits(), activations.bits());
        if !(is_supported_pair(wb, ab) || (wb, ab) == (BitWidth::Eight, BitWidth::Eight)) {
            return Err(Error::UnsupportedKernel { weight_bits: wb, act_bits: ab });
        }
        if activations.rows() != 1 {
            return Err(Error::Shape(format!("activations must be a single row, got {}", activations.rows())));
        }
        let cols = weights.cols();
        if activations.cols() != cols {
            return Err(Error::Shape(format!(
                "weights have {cols} columns but activations have {}",
                activations.cols()
            )));
        }
        if cols > MAX_COLS {
            return Err(Error::Shape(format!("{cols} columns exceeds the overflow bound {MAX_COLS}")));
        }

        let block = wb.block_elems().max(ab.block_elems());
        let padded = cols.div_ceil(block) * block;
        let store = |t: &SubByteTensor| -> Result<Operand> {
            Ok(if t.bits().is_sub_byte() {
                Operand::Packed(packing::pack(t)?)
            } else {
                Operand::Plain(PlainMatrix::new(t.rows(), t.cols(), padded, t.values())?)
            })
        };
        Ok(Self { weights: store(weights)?, activations: store(activations)? })
    }

    /// Assembles a problem from already-stored operands.
    pub fn from_operands(weights: Operand, activations: Operand) -> Result<Self> {
        let (wb, ab) = (weights.bits(), activations.bits());
        if !(is_supported_pair(wb, ab) || (wb, ab) == (BitWidth::Eight, BitWidth::Eight)) {
            return Err(Error::UnsupportedKernel { weight_bits: wb, act_bits: ab });
        }
        if activations.rows() != 1 || activations.cols() != weights.cols() {
            return Err(Error::Shape(format!(
                "activations {}x{} do not match weights {}x{}",
                activations.rows(),
                activations.cols(),
                weights.rows(),
                weights.cols()
            )));
        }
        if weights.cols() > MAX_COLS {
            return Err(Error::Shape(format!("{} columns exceeds the overflow bound {MAX_COLS}", weights.cols())));
        }
        if weights.padded_cols() != activations.padded_cols() {
            return Err(Error::Shape(format!(
                "padded widths differ: weights {}, activations {}",
                weights.padded_cols(),
                activations.padded_cols()
            )));
        }
        Ok(Self { weights, activations })
    }

    pub fn weights(&self) -> &Operand {
        &self.weights
    }

    pub fn activations(&self) -> &Operand {
        &self.activations
    }

    pub fn rows(&self) -> usize {
        self.weights.rows()
    }

    pub fn cols(&self) -> usize {
        self.weights.cols()
    }

    pub fn weight_bits(&self) -> BitWidth {
        self.weights.bits()
    }

    pub fn act_bits(&self) -> BitWidth {
        self.activations.bits()
    }

    /// Checks that `id` names this problem's width pair.
    pub(crate) fn check_kernel(&self, id: &KernelId) -> Result<()> {
        if (id.weight_bits(), id.act_bits()) != (self.weight_bits(), self.act_bits()) {
            return Err(Error::Shape(format!(
                "kernel {id} given a W{}A{} problem",
                self.weight_bits(),
                self.act_bits()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        let mut ids = KernelId::all_vector();
        ids.push(KernelId::baseline());
        ids.push(KernelId::naive_w4a8());
        ids.push(KernelId::reference(BitWidth::Two, BitWidth::Two).unwrap());
        for id in ids {
            assert_eq!(id.to_string().parse::<KernelId>().unwrap(), id);
        }
        assert_eq!(KernelId::baseline().to_string(), "w8a8");
        assert_eq!(KernelId::naive_w4a8().to_string(), "naive_w4a8");
    }

    #[test]
    fn inadmissible_pairs() {
        use BitWidth::*;
        assert!(matches!(
            KernelId::vector(Four, Two),
            Err(Error::UnsupportedKernel { weight_bits: Four, act_bits: Two })
        ));
        assert!(KernelId::vector(Eight, Eight).is_err());
        assert!(KernelId::new(Eight, Eight, Variant::Naive).is_err());
        assert!(KernelId::new(Four, Four, Variant::BaselineW8A8).is_err());
        assert!("w4a2".parse::<KernelId>().is_err());
        assert!("x4a8".parse::<KernelId>().is_err());
        assert_eq!(KernelId::all_vector().len(), 9);
    }

    #[test]
    fn problem_pads_plain_side_to_packed_block() {
        let w = SubByteTensor::zeros(BitWidth::Two, 3, 70);
        let a = SubByteTensor::zeros(BitWidth::Eight, 1, 70);
        let p = GemvProblem::new(&w, &a).unwrap();
        assert_eq!(p.weights().padded_cols(), 128);
        assert_eq!(p.activations().padded_cols(), 128);
        assert_eq!(p.activations().values().unwrap().len(), 70);
    }

    #[test]
    fn problem_shape_errors() {
        let w = SubByteTensor::zeros(BitWidth::Four, 2, 32);
        assert!(matches!(GemvProblem::new(&w, &SubByteTensor::zeros(BitWidth::Eight, 1, 31)), Err(Error::Shape(_))));
        assert!(matches!(GemvProblem::new(&w, &SubByteTensor::zeros(BitWidth::Eight, 2, 32)), Err(Error::Shape(_))));
        assert!(matches!(
            GemvProblem::new(&w, &SubByteTensor::zeros(BitWidth::Two, 1, 32)),
            Err(Error::UnsupportedKernel { .. })
        ));
        let wide = SubByteTensor::zeros(BitWidth::Four, 1, MAX_COLS + 32);
        let wide_a = SubByteTensor::zeros(BitWidth::Eight, 1, MAX_COLS + 32);
        assert!(matches!(GemvProblem::new(&wide, &wide_a), Err(Error::Shape(_))));
    }
}
