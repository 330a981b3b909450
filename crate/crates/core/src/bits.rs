use std::fmt;

use crate::{Error, Result};

/// Width of one quantized element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BitWidth {
    One,
    Two,
    Four,
    Eight,
}

impl BitWidth {
    pub const ALL: [BitWidth; 4] = [BitWidth::One, BitWidth::Two, BitWidth::Four, BitWidth::Eight];

    /// The widths that use the packed layout.
    pub const PACKED: [BitWidth; 3] = [BitWidth::One, BitWidth::Two, BitWidth::Four];

    pub const fn bits(self) -> u32 {
        match self {
            BitWidth::One => 1,
            BitWidth::Two => 2,
            BitWidth::Four => 4,
            BitWidth::Eight => 8,
        }
    }

    /// Elements sharing one byte; also the number of stride groups per block.
    pub const fn lanes_per_byte(self) -> usize {
        (8 / self.bits()) as usize
    }

    /// Logical elements covered by one 16-byte block.
    pub const fn block_elems(self) -> usize {
        16 * self.lanes_per_byte()
    }

    pub const fn is_sub_byte(self) -> bool {
        !matches!(self, BitWidth::Eight)
    }

    /// Smallest representable two's-complement value.
    pub const fn min_value(self) -> i8 {
        (-(1i16 << (self.bits() - 1))) as i8
    }

    /// Largest representable two's-complement value (`0` for one bit).
    pub const fn max_value(self) -> i8 {
        ((1i16 << (self.bits() - 1)) - 1) as i8
    }

    pub const fn contains(self, value: i8) -> bool {
        value >= self.min_value() && value <= self.max_value()
    }
}

impl TryFrom<u8> for BitWidth {
    type Error = Error;

    fn try_from(bits: u8) -> Result<Self> {
        match bits {
            1 => Ok(BitWidth::One),
            2 => Ok(BitWidth::Two),
            4 => Ok(BitWidth::Four),
            8 => Ok(BitWidth::Eight),
            other => Err(Error::UnsupportedBits(other)),
        }
    }
}

impl fmt::Display for BitWidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.bits())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry() {
        let geometry: Vec<_> = BitWidth::ALL.iter().map(|w| (w.lanes_per_byte(), w.block_elems())).collect();
        assert_eq!(geometry, [(8, 128), (4, 64), (2, 32), (1, 16)]);
    }

    #[test]
    fn ranges() {
        assert_eq!((BitWidth::One.min_value(), BitWidth::One.max_value()), (-1, 0));
        assert_eq!((BitWidth::Two.min_value(), BitWidth::Two.max_value()), (-2, 1));
        assert_eq!((BitWidth::Four.min_value(), BitWidth::Four.max_value()), (-8, 7));
        assert_eq!((BitWidth::Eight.min_value(), BitWidth::Eight.max_value()), (-128, 127));
    }

    #[test]
    fn parse() {
        assert_eq!(BitWidth::try_from(2).unwrap(), BitWidth::Two);
        assert!(matches!(BitWidth::try_from(3), Err(Error::UnsupportedBits(3))));
    }
}
