//! Symmetric per-tensor quantization.
//!
//! The kernels sign-extend raw bit fields, so the zero point is always 0 and
//! `real ~= scale * q`. Rounding is half-to-even throughout.
//!
//! One-bit values are `{-1, 0}` in this scheme. Callers who want classic
//! `{-1, +1}` binary weights can store `q` and rewrite `y = 2q + 1` on their
//! side; that mapping is not provided here.

use crate::{BitWidth, Error, Result, SubByteTensor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantParams {
    scale: f32,
    bits: BitWidth,
}

impl QuantParams {
    pub fn new(scale: f32, bits: BitWidth) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidScale(scale));
        }
        Ok(Self { scale, bits })
    }

    pub fn scale(&self) -> f32 {
        self.scale
    }

    pub fn bits(&self) -> BitWidth {
        self.bits
    }

    pub fn dequantize(&self, q: i8) -> f32 {
        self.scale * q as f32
    }
}

fn clamp_to(bits: BitWidth, value: f64) -> i8 {
    value.clamp(bits.min_value() as f64, bits.max_value() as f64) as i8
}

/// Quantizes a row-major `rows x cols` real tensor.
pub fn quantize(x: &[f32], rows: usize, cols: usize, params: QuantParams) -> Result<SubByteTensor> {
    if x.len() != rows * cols {
        return Err(Error::Shape(format!("{rows}x{cols} tensor needs {} values, got {}", rows * cols, x.len())));
    }
    let scale = params.scale as f64;
    let values = x
        .iter()
        .enumerate()
        .map(|(index, v)| {
            if !v.is_finite() {
                return Err(Error::NonFinite { index });
            }
            Ok(clamp_to(params.bits, (*v as f64 / scale).round_ties_even()))
        })
        .collect::<Result<Vec<_>>>()?;
    SubByteTensor::new(params.bits, rows, cols, values)
}

/// `max|x| / 2^(bits-1)`, or 1 for an all-zero tensor.
///
/// # Panics
///
/// Panics on an empty tensor.
pub fn choose_scale(x: &[f32], bits: BitWidth) -> QuantParams {
    assert!(!x.is_empty(), "cannot choose a scale for an empty tensor");
    let max = x.iter().filter(|v| v.is_finite()).fold(0.0f32, |m, v| m.max(v.abs()));
    let magnitude = (1u32 << (bits.bits() - 1)) as f32;
    let scale = if max > 0.0 { max / magnitude } else { 1.0 };
    QuantParams { scale, bits }
}

/// Scales `i32` GEMV accumulators to `out_bits` integers.
///
/// With `out_scale = None` the output scale is picked by [`choose_scale`] over
/// the dequantized accumulators. The result is a `1 x acc.len()` tensor.
pub fn requantize(
    acc: &[i32],
    weights: QuantParams,
    acts: QuantParams,
    out_scale: Option<f32>,
    out_bits: BitWidth,
) -> Result<SubByteTensor> {
    let combined = weights.scale as f64 * acts.scale as f64;
    let out_scale = match out_scale {
        Some(scale) => QuantParams::new(scale, out_bits)?.scale as f64,
        None if acc.is_empty() => 1.0,
        None => {
            let real: Vec<f32> = acc.iter().map(|a| (*a as f64 * combined) as f32).collect();
            choose_scale(&real, out_bits).scale as f64
        }
    };
    let values = acc.iter().map(|a| clamp_to(out_bits, (*a as f64 * combined / out_scale).round_ties_even())).collect();
    SubByteTensor::vector(out_bits, values)
}
