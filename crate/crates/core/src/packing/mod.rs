//! Stride-16 sub-byte layout.
//!
//! Each matrix row is cut into 16-byte blocks. A block of `w`-bit values covers
//! `block_elems = 16 * 8 / w` consecutive columns: byte `b` of block `i` holds,
//! in bit field `[s * w, (s + 1) * w)`, the two's-complement value at column
//! `i * block_elems + s * 16 + b`. One 16-byte load therefore yields
//! `8 / w` groups of 16 column-consecutive lanes, each recovered with at most
//! two per-lane shifts (see [`extract_group`]).
//!
//! Columns are zero-padded up to a multiple of `block_elems`; rows are not
//! padded. No bits are spent on spacers, so a packed matrix occupies exactly
//! `w / 8` of its 8-bit footprint when the column count is block aligned.

mod file;

pub use file::{read_packed, write_packed, HEADER_LEN, MAGIC};

use crate::simd::{Portable, Role, VectorUnit};
use crate::{BitWidth, Error, Result, SubByteTensor};

/// A row-major matrix stored in the stride-16 layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedMatrix {
    bits: BitWidth,
    rows: usize,
    cols: usize,
    padded_cols: usize,
    data: Vec<u8>,
}

/// Smallest multiple of `bits.block_elems()` that is `>= cols`.
pub fn padded_cols(bits: BitWidth, cols: usize) -> usize {
    cols.div_ceil(bits.block_elems()) * bits.block_elems()
}

/// Byte length of a packed `rows x cols` matrix.
pub fn packed_len(bits: BitWidth, rows: usize, cols: usize) -> usize {
    rows * cols.div_ceil(bits.block_elems()) * 16
}

impl PackedMatrix {
    /// Wraps an existing buffer, checking its length and that every padding
    /// column decodes to zero.
    pub fn from_raw_parts(bits: BitWidth, rows: usize, cols: usize, data: Vec<u8>) -> Result<Self> {
        if !bits.is_sub_byte() {
            return Err(Error::UnsupportedWidth(bits));
        }
        let expected = packed_len(bits, rows, cols);
        if data.len() != expected {
            return Err(Error::CorruptLayout { expected, actual: data.len() });
        }
        let matrix = Self { bits, rows, cols, padded_cols: padded_cols(bits, cols), data };
        matrix.check_padding()?;
        Ok(matrix)
    }

    fn check_padding(&self) -> Result<()> {
        if self.cols == self.padded_cols || self.rows == 0 {
            return Ok(());
        }
        let block = self.blocks_per_row() - 1;
        let first = self.cols - block * self.bits.block_elems();
        for row in 0..self.rows {
            let bytes = self.block(row, block);
            for within in first..self.bits.block_elems() {
                let (group, byte) = (within / 16, within % 16);
                let field = bytes[byte] >> (group as u32 * self.bits.bits());
                if field & field_mask(self.bits) != 0 {
                    return Err(Error::DirtyPadding { row, col: block * self.bits.block_elems() + within });
                }
            }
        }
        Ok(())
    }

    pub fn bits(&self) -> BitWidth {
        self.bits
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn padded_cols(&self) -> usize {
        self.padded_cols
    }

    pub fn blocks_per_row(&self) -> usize {
        self.padded_cols / self.bits.block_elems()
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    /// Packed bytes of one row.
    pub fn row_bytes(&self, row: usize) -> &[u8] {
        let stride = self.blocks_per_row() * 16;
        &self.data[row * stride..(row + 1) * stride]
    }

    pub fn block(&self, row: usize, block: usize) -> &[u8; 16] {
        let start = block * 16;
        self.row_bytes(row)[start..start + 16].try_into().unwrap()
    }
}

const fn field_mask(bits: BitWidth) -> u8 {
    ((1u16 << bits.bits()) - 1) as u8
}

/// Packs a tensor into the stride-16 layout.
///
/// Out-of-range elements are rejected earlier, by [`SubByteTensor::new`].
pub fn pack(tensor: &SubByteTensor) -> Result<PackedMatrix> {
    let bits = tensor.bits();
    if !bits.is_sub_byte() {
        return Err(Error::UnsupportedWidth(bits));
    }
    let (rows, cols) = (tensor.rows(), tensor.cols());
    let block_elems = bits.block_elems();
    let blocks = cols.div_ceil(block_elems);
    let mask = field_mask(bits);
    let width = bits.bits();
    let mut data = vec![0u8; rows * blocks * 16];

    for (row, out) in data.chunks_exact_mut((blocks * 16).max(1)).take(rows).enumerate() {
        let values = tensor.row(row);
        for (block, bytes) in out.chunks_exact_mut(16).enumerate() {
            let base = block * block_elems;
            for (group, columns) in values[base.min(cols)..(base + block_elems).min(cols)].chunks(16).enumerate() {
                let shift = group as u32 * width;
                for (byte, value) in bytes.iter_mut().zip(columns) {
                    *byte |= ((*value as u8) & mask) << shift;
                }
            }
        }
    }

    Ok(PackedMatrix { bits, rows, cols, padded_cols: blocks * block_elems, data })
}

/// Recovers the logical tensor, dropping padding columns.
pub fn unpack(packed: &PackedMatrix) -> Result<SubByteTensor> {
    let expected = packed_len(packed.bits, packed.rows, packed.cols);
    if packed.data.len() != expected {
        return Err(Error::CorruptLayout { expected, actual: packed.data.len() });
    }
    let bits = packed.bits;
    let mut values = Vec::with_capacity(packed.rows * packed.padded_cols);
    for row in 0..packed.rows {
        let start = values.len();
        for block in packed.row_bytes(row).chunks_exact(16) {
            let block: &[u8; 16] = block.try_into().unwrap();
            for group in 0..bits.lanes_per_byte() {
                values.extend_from_slice(&extract_group(block, group, bits));
            }
        }
        values.truncate(start + packed.cols);
    }
    SubByteTensor::new(bits, packed.rows, packed.cols, values)
}

/// Sign-extends bit field `group` of every byte in `block`.
///
/// This is a left shift that discards the fields above `group` followed by an
/// arithmetic right shift that discards the fields below it. For the topmost
/// group the left shift is a no-op and is skipped.
///
/// # Panics
///
/// Panics if `group >= bits.lanes_per_byte()`.
pub fn extract_group(block: &[u8; 16], group: usize, bits: BitWidth) -> [i8; 16] {
    Portable.lanes(extract_lanes(&Portable, Portable.load_packed(block, Role::Weights), group, bits))
}

/// [`extract_group`] over an already-loaded register of any unit.
#[inline(always)]
pub(crate) fn extract_lanes<U: VectorUnit>(unit: &U, v: U::Vec, group: usize, bits: BitWidth) -> U::Vec {
    assert!(group < bits.lanes_per_byte(), "group {group} out of range for {bits}-bit values");
    let width = bits.bits();
    let left = 8 - (group as u32 + 1) * width;
    let v = if left == 0 { v } else { unit.shl(v, left) };
    unit.sar(v, 8 - width)
}

/// Weights packed two per byte over adjacent columns: low nibble holds the
/// even column, high nibble the odd one. This is the straightforward layout
/// used by the scalar naive kernel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacentPackedW4 {
    rows: usize,
    cols: usize,
    data: Vec<u8>,
}

impl AdjacentPackedW4 {
    pub fn pack(tensor: &SubByteTensor) -> Result<Self> {
        if tensor.bits() != BitWidth::Four {
            return Err(Error::Shape(format!("adjacent nibble packing needs 4-bit values, got {}-bit", tensor.bits())));
        }
        if tensor.cols() % 2 != 0 {
            return Err(Error::Shape(format!(
                "adjacent nibble packing needs an even column count, got {}",
                tensor.cols()
            )));
        }
        let data =
            tensor.values().chunks_exact(2).map(|pair| (pair[0] as u8 & 0x0F) | ((pair[1] as u8) << 4)).collect();
        Ok(Self { rows: tensor.rows(), cols: tensor.cols(), data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn row_bytes(&self, row: usize) -> &[u8] {
        let stride = self.cols / 2;
        &self.data[row * stride..(row + 1) * stride]
    }
}
