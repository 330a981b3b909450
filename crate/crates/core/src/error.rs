use crate::BitWidth;

/// Errors produced by packing, file I/O, quantization and the GEMV kernels.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("value {value} at row {row}, col {col} does not fit in {bits} bits")]
    OutOfRange { row: usize, col: usize, value: i8, bits: BitWidth },

    #[error("{0}-bit tensors are stored plain and cannot be packed")]
    UnsupportedWidth(BitWidth),

    #[error("packed buffer holds {actual} bytes, layout requires {expected}")]
    CorruptLayout { expected: usize, actual: usize },

    #[error("padding column {col} of row {row} is not zero")]
    DirtyPadding { row: usize, col: usize },

    #[error("bad magic {0:02x?}, expected \"FPK1\"")]
    BadMagic([u8; 4]),

    #[error("unsupported bit width {0} in packed file header")]
    UnsupportedBits(u8),

    #[error("truncated payload: expected {expected} bytes, got {actual}")]
    Truncated { expected: usize, actual: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("no W{weight_bits}A{act_bits} kernel")]
    UnsupportedKernel { weight_bits: BitWidth, act_bits: BitWidth },

    #[error("non-finite input at index {index}")]
    NonFinite { index: usize },

    #[error("quantization scale must be positive and finite, got {0}")]
    InvalidScale(f32),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
