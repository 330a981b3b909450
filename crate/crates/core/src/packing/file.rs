//! Binary container for a [`PackedMatrix`].
//!
//! ```text
//! offset  size  field
//!      0     4  magic "FPK1"
//!      4     1  bit width (1, 2 or 4)
//!      5     8  rows, u64 little-endian
//!     13     8  cols, u64 little-endian (logical, before padding)
//!     21     3  reserved, zero
//!     24     -  payload, rows * ceil(cols / block_elems) * 16 bytes
//! ```

use std::io::{self, Read, Write};

use super::{packed_len, PackedMatrix};
use crate::{BitWidth, Error, Result};

pub const MAGIC: [u8; 4] = *b"FPK1";
pub const HEADER_LEN: usize = 24;

pub fn write_packed<W: Write>(matrix: &PackedMatrix, mut sink: W) -> Result<()> {
    let mut header = [0u8; HEADER_LEN];
    header[0..4].copy_from_slice(&MAGIC);
    header[4] = matrix.bits().bits() as u8;
    header[5..13].copy_from_slice(&(matrix.rows() as u64).to_le_bytes());
    header[13..21].copy_from_slice(&(matrix.cols() as u64).to_le_bytes());
    sink.write_all(&header)?;
    sink.write_all(matrix.data())?;
    Ok(())
}

pub fn read_packed<R: Read>(mut source: R) -> Result<PackedMatrix> {
    let mut header = [0u8; HEADER_LEN];
    let got = read_fully(&mut source, &mut header)?;
    if got < 4 || header[0..4] != MAGIC {
        let mut magic = [0u8; 4];
        magic.copy_from_slice(&header[0..4]);
        return Err(Error::BadMagic(magic));
    }
    if got < HEADER_LEN {
        return Err(Error::Truncated { expected: HEADER_LEN, actual: got });
    }
    let bits = match BitWidth::try_from(header[4]) {
        Ok(bits) if bits.is_sub_byte() => bits,
        _ => return Err(Error::UnsupportedBits(header[4])),
    };
    let rows = dimension(&header[5..13])?;
    let cols = dimension(&header[13..21])?;

    let expected = rows
        .checked_mul(cols.div_ceil(bits.block_elems()))
        .and_then(|blocks| blocks.checked_mul(16))
        .ok_or_else(|| Error::Shape(format!("{rows}x{cols} matrix is too large")))?;
    debug_assert_eq!(expected, packed_len(bits, rows, cols));

    // Read through `take` so a lying header cannot force a huge allocation.
    let mut data = Vec::new();
    source.take(expected as u64).read_to_end(&mut data)?;
    if data.len() != expected {
        return Err(Error::Truncated { expected, actual: data.len() });
    }
    PackedMatrix::from_raw_parts(bits, rows, cols, data)
}

fn dimension(bytes: &[u8]) -> Result<usize> {
    let value = u64::from_le_bytes(bytes.try_into().unwrap());
    usize::try_from(value).map_err(|_| Error::Shape(format!("dimension {value} does not fit in memory")))
}

fn read_fully<R: Read>(source: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match source.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packing::pack;
    use crate::SubByteTensor;

    #[test]
    fn golden_header() {
        let t = SubByteTensor::zeros(BitWidth::Four, 1, 32);
        let mut buf = Vec::new();
        write_packed(&pack(&t).unwrap(), &mut buf).unwrap();
        let mut expected = vec![0x46, 0x50, 0x4B, 0x31, 0x04];
        expected.extend([0x01, 0, 0, 0, 0, 0, 0, 0]);
        expected.extend([0x20, 0, 0, 0, 0, 0, 0, 0]);
        expected.extend([0, 0, 0]);
        expected.extend([0u8; 16]);
        assert_eq!(buf, expected);
    }

    #[test]
    fn bad_magic() {
        let mut buf = b"XXXX".to_vec();
        buf.extend([0u8; 36]);
        assert!(matches!(read_packed(buf.as_slice()), Err(Error::BadMagic(m)) if &m == b"XXXX"));
    }

    #[test]
    fn unsupported_bits() {
        for bits in [0u8, 3, 8] {
            let mut buf = MAGIC.to_vec();
            buf.push(bits);
            buf.extend([0u8; 19]);
            assert!(matches!(read_packed(buf.as_slice()), Err(Error::UnsupportedBits(b)) if b == bits));
        }
    }

    #[test]
    fn truncated_payload() {
        let t = SubByteTensor::zeros(BitWidth::Two, 3, 70);
        let mut buf = Vec::new();
        write_packed(&pack(&t).unwrap(), &mut buf).unwrap();
        buf.truncate(buf.len() - 5);
        assert!(matches!(read_packed(buf.as_slice()), Err(Error::Truncated { expected: 96, actual: 91 })));
    }

    #[test]
    fn truncated_header() {
        let buf = b"FPK1\x04\x01".to_vec();
        assert!(matches!(read_packed(buf.as_slice()), Err(Error::Truncated { expected: 24, actual: 6 })));
    }
}
