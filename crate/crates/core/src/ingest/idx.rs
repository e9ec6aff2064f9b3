//! IDX tensor files (the MNIST container format).
//!
//! Layout: two zero bytes, an element-type byte, a dimension-count byte,
//! then one big-endian `u32` per dimension and a row-major payload. Only
//! unsigned 8-bit payloads (`0x08`) are supported.

use std::fs;
use std::path::Path;

use crate::error::{ensure, Error, Result};
use crate::pool::Matrix;

pub const TYPE_U8: u8 = 0x08;

/// Row-major tensor of unsigned bytes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawTensor {
    dims: Vec<usize>,
    data: Vec<u8>,
}

impl RawTensor {
    pub fn new(dims: Vec<usize>, data: Vec<u8>) -> Result<Self> {
        ensure!(!dims.is_empty(), Shape, "tensor needs at least one dimension");
        ensure!(dims.len() <= 255, Shape, "at most 255 dimensions, got {}", dims.len());
        ensure!(
            dims.iter().all(|&d| d >= 1 && d <= u32::MAX as usize),
            Shape,
            "dimensions must be positive u32 values: {dims:?}"
        );
        let expected = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
        ensure!(
            expected == Some(data.len()),
            Shape,
            "dims {dims:?} do not match payload length {}",
            data.len()
        );
        Ok(Self { dims, data })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    /// Flattens everything after the first dimension into one row per item,
    /// with bytes scaled to `[0, 1]`.
    pub fn to_matrix(&self) -> Matrix {
        let rows = self.dims[0];
        let cols = self.data.len() / rows;
        let data = self.data.iter().map(|&b| f64::from(b) / 255.0).collect();
        Matrix::from_vec(rows, cols, data).expect("dims checked at construction")
    }
}

pub fn parse_idx(bytes: &[u8]) -> Result<RawTensor> {
    ensure!(bytes.len() >= 4, Format, "IDX header truncated ({} bytes)", bytes.len());
    ensure!(
        bytes[0] == 0 && bytes[1] == 0,
        Format,
        "bad IDX magic prefix {:02x} {:02x}",
        bytes[0],
        bytes[1]
    );
    ensure!(
        bytes[2] == TYPE_U8,
        Format,
        "unsupported IDX element type 0x{:02x}",
        bytes[2]
    );
    let ndim = bytes[3] as usize;
    ensure!(ndim >= 1, Format, "IDX stream declares zero dimensions");
    let header = 4 + 4 * ndim;
    ensure!(
        bytes.len() >= header,
        Format,
        "IDX dimension table truncated: need {header} bytes, got {}",
        bytes.len()
    );
    let dims: Vec<usize> = bytes[4..header]
        .chunks_exact(4)
        .map(|c| u32::from_be_bytes([c[0], c[1], c[2], c[3]]) as usize)
        .collect();
    let payload = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Format("IDX dimensions overflow".into()))?;
    let body = &bytes[header..];
    ensure!(
        body.len() >= payload,
        Format,
        "IDX payload truncated: dims {dims:?} need {payload} bytes, got {}",
        body.len()
    );
    ensure!(
        body.len() == payload,
        Format,
        "{} trailing bytes after IDX payload",
        body.len() - payload
    );
    RawTensor::new(dims, body.to_vec()).map_err(|e| Error::Format(e.to_string()))
}

pub fn serialize_idx(tensor: &RawTensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + 4 * tensor.dims.len() + tensor.data.len());
    out.extend_from_slice(&[0, 0, TYPE_U8, tensor.dims.len() as u8]);
    for &d in &tensor.dims {
        out.extend_from_slice(&(d as u32).to_be_bytes());
    }
    out.extend_from_slice(&tensor.data);
    out
}

pub fn read_idx(path: impl AsRef<Path>) -> Result<RawTensor> {
    parse_idx(&fs::read(path)?)
}

pub fn write_idx(path: impl AsRef<Path>, tensor: &RawTensor) -> Result<()> {
    fs::write(path, serialize_idx(tensor))?;
    Ok(())
}
