//! Brute-force ground truth for the packing layout and GEMV arithmetic.
//!
//! Nothing in here is shared with the `fullpack` crate: every routine works on
//! plain slices and integers and is written for obviousness, not speed. Tests
//! compare the production code against these functions.
//!
//! Layout being modelled: a row is split into 16-byte blocks. A block covers
//! `16 * (8 / bits)` consecutive columns. Byte `b` of block `i` holds, in bit
//! field `[s * bits, (s + 1) * bits)`, the column `i * block_elems + s * 16 + b`.

/// Number of logical elements held by one 16-byte block.
pub fn block_elems(bits: u32) -> usize {
    assert!(matches!(bits, 1 | 2 | 4), "packed widths are 1, 2 or 4");
    16 * (8 / bits as usize)
}

/// Packs a row-major `rows x cols` tensor bit by bit.
///
/// Columns past `cols` (up to the next block boundary) are left zero.
pub fn oracle_pack(values: &[i8], rows: usize, cols: usize, bits: u32) -> Vec<u8> {
    assert_eq!(values.len(), rows * cols);
    let per_block = block_elems(bits);
    let blocks_per_row = cols.div_ceil(per_block);
    let mut out = vec![0u8; rows * blocks_per_row * 16];

    for row in 0..rows {
        for col in 0..cols {
            let value = values[row * cols + col] as i32;
            let lo = -(1i32 << (bits - 1));
            let hi = (1i32 << (bits - 1)) - 1;
            assert!(value >= lo && value <= hi, "value {value} out of range for {bits} bits");

            let block = col / per_block;
            let within = col % per_block;
            let group = within / 16;
            let byte = within % 16;
            let index = row * blocks_per_row * 16 + block * 16 + byte;

            // Write the two's-complement field one bit at a time.
            for bit in 0..bits {
                let set = (value >> bit) & 1 == 1;
                if set {
                    out[index] |= 1 << (group as u32 * bits + bit);
                }
            }
        }
    }
    out
}

/// Decodes bit field `group` of `byte` as a signed `bits`-wide integer.
pub fn oracle_extract(byte: u8, group: u32, bits: u32) -> i8 {
    assert!(group * bits < 8);
    let mut field: i32 = 0;
    for bit in 0..bits {
        if byte & (1 << (group * bits + bit)) != 0 {
            field += 1 << bit;
        }
    }
    let half = 1i32 << (bits - 1);
    if field >= half {
        (field - 2 * half) as i8
    } else {
        field as i8
    }
}

/// Inverse of [`oracle_pack`], element by element through [`oracle_extract`].
pub fn oracle_unpack(bytes: &[u8], rows: usize, cols: usize, bits: u32) -> Vec<i8> {
    let per_block = block_elems(bits);
    let blocks_per_row = cols.div_ceil(per_block);
    assert_eq!(bytes.len(), rows * blocks_per_row * 16);

    let mut out = Vec::with_capacity(rows * cols);
    for row in 0..rows {
        for col in 0..cols {
            let block = col / per_block;
            let within = col % per_block;
            let group = (within / 16) as u32;
            let byte = within % 16;
            out.push(oracle_extract(bytes[row * blocks_per_row * 16 + block * 16 + byte], group, bits));
        }
    }
    out
}

/// Adjacent-pair nibble packing: low nibble holds the even column, high
/// nibble the odd column. `cols` must be even.
pub fn oracle_pack_adjacent_w4(values: &[i8], rows: usize, cols: usize) -> Vec<u8> {
    assert_eq!(values.len(), rows * cols);
    assert!(cols % 2 == 0);
    values.chunks(2).map(|pair| ((pair[0] as u8) & 0x0F) | (((pair[1] as u8) & 0x0F) << 4)).collect()
}

/// Triple-loop GEMV: `out[i] = sum_j w[i][j] * a[j]`.
///
/// Panics if any partial sum leaves the `i32` range.
pub fn oracle_gemv(weights: &[i8], rows: usize, cols: usize, acts: &[i8]) -> Vec<i32> {
    assert_eq!(weights.len(), rows * cols);
    assert_eq!(acts.len(), cols);
    let mut out = Vec::with_capacity(rows);
    for i in 0..rows {
        let mut sum: i32 = 0;
        for j in 0..cols {
            let product = weights[i * cols + j] as i32 * acts[j] as i32;
            sum = sum.checked_add(product).expect("accumulator overflow");
        }
        out.push(sum);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extract_all_ones_is_minus_one() {
        assert_eq!(oracle_extract(0xFF, 0, 4), -1);
        assert_eq!(oracle_extract(0xFF, 1, 4), -1);
    }

    #[test]
    fn extract_spot_values() {
        assert_eq!(oracle_extract(0x9A, 0, 4), -6);
        assert_eq!(oracle_extract(0x9A, 1, 4), -7);
        let fields: Vec<i8> = (0..4).map(|s| oracle_extract(0xB6, s, 2)).collect();
        assert_eq!(fields, [-2, 1, -1, -2]);
    }

    #[test]
    fn single_product() {
        assert_eq!(oracle_gemv(&[-8], 1, 1, &[127]), [-1016]);
    }

    #[test]
    fn pack_addresses_every_slot_once() {
        // One set bit per element: each (group, byte) slot must be hit exactly once.
        for bits in [1u32, 2, 4] {
            let n = block_elems(bits);
            let mut seen = vec![0u32; 16 * 8];
            for col in 0..n {
                let mut values = vec![0i8; n];
                values[col] = if bits == 1 { -1 } else { 1 };
                let packed = oracle_pack(&values, 1, n, bits);
                let hits: Vec<(usize, u32)> = packed
                    .iter()
                    .enumerate()
                    .filter(|(_, b)| **b != 0)
                    .map(|(i, b)| (i, b.trailing_zeros() / bits))
                    .collect();
                assert_eq!(hits.len(), 1);
                let (byte, group) = hits[0];
                assert_eq!(col, group as usize * 16 + byte);
                seen[group as usize * 16 + byte] += 1;
            }
            assert_eq!(seen.iter().filter(|c| **c == 1).count(), n);
        }
    }

    #[test]
    fn unpack_inverts_pack() {
        let values: Vec<i8> = (0..3 * 70).map(|i| ((i * 7) % 16) as i8 - 8).collect();
        let packed = oracle_pack(&values, 3, 70, 4);
        assert_eq!(packed.len(), 3 * 3 * 16);
        assert_eq!(oracle_unpack(&packed, 3, 70, 4), values);
    }
}
