//! Sub-byte packing and mixed-precision integer GEMV.
//!
//! Weights and activations of 4, 2 or 1 bits are packed with no spare bits
//! into 16-byte blocks whose byte `b` carries columns `b, b + 16, b + 32, ...`
//! of the block. A single 16-byte load then yields whole groups of 16
//! consecutive columns after at most two per-lane shifts, which is what the
//! vector kernels in [`kernels::vector`] exploit. Nine width pairs are
//! supported: W8A4, W4A8, W4A4, W2A8, W8A2, W2A2, W1A8, W8A1 and W1A1.
//!
//! ```
//! use fullpack::{BitWidth, GemvProblem, KernelId, SubByteTensor};
//!
//! let w = SubByteTensor::new(BitWidth::Four, 1, 32, (0..32).map(|c| (c % 16) as i8 - 8).collect())?;
//! let a = SubByteTensor::vector(BitWidth::Eight, vec![1; 32])?;
//! let problem = GemvProblem::new(&w, &a)?;
//! let out = fullpack::gemv_vec(&KernelId::vector(BitWidth::Four, BitWidth::Eight)?, &problem)?;
//! assert_eq!(out, [-16]);
//! # Ok::<(), fullpack::Error>(())
//! ```

mod bits;
mod error;
pub mod kernels;
pub mod packing;
pub mod quant;
pub mod simd;
mod tensor;

pub use bits::BitWidth;
pub use error::{Error, Result};
pub use kernels::reference::{gemv_baseline_w8a8, gemv_naive_w4a8, gemv_ref};
pub use kernels::vector::{gemv_vec, gemv_vec_dispatch, Backend};
pub use kernels::{GemvProblem, KernelId, Operand, PlainMatrix, Variant, MAX_COLS, SUPPORTED_PAIRS};
pub use packing::{extract_group, pack, read_packed, unpack, write_packed, AdjacentPackedW4, PackedMatrix};
pub use quant::{choose_scale, quantize, requantize, QuantParams};
pub use tensor::SubByteTensor;
