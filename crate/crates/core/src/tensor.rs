use crate::{BitWidth, Error, Result};

/// Unpacked row-major tensor whose elements are constrained to a bit width.
///
/// One `i8` per element. This is the logical view of a weight matrix or an
/// activation vector (a `1 x k` tensor) before packing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubByteTensor {
    bits: BitWidth,
    rows: usize,
    cols: usize,
    values: Vec<i8>,
}

impl SubByteTensor {
    /// Validates shape and range of every element.
    pub fn new(bits: BitWidth, rows: usize, cols: usize, values: Vec<i8>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{rows}x{cols} tensor needs {} values, got {}",
                rows * cols,
                values.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !bits.contains(*v)) {
            return Err(Error::OutOfRange { row: index / cols, col: index % cols, value: values[index], bits });
        }
        Ok(Self { bits, rows, cols, values })
    }

    pub fn zeros(bits: BitWidth, rows: usize, cols: usize) -> Self {
        Self { bits, rows, cols, values: vec![0; rows * cols] }
    }

    /// A `1 x values.len()` tensor.
    pub fn vector(bits: BitWidth, values: Vec<i8>) -> Result<Self> {
        let cols = values.len();
        Self::new(bits, 1, cols, values)
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

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn into_values(self) -> Vec<i8> {
        self.values
    }

    pub fn row(&self, row: usize) -> &[i8] {
        &self.values[row * self.cols..(row + 1) * self.cols]
    }

    pub fn get(&self, row: usize, col: usize) -> i8 {
        self.values[row * self.cols + col]
    }
}
