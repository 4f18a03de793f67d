//! Dense tensors, symmetric 8-bit quantization and float reference arithmetic.
//!
//! Everything downstream (tile programming, photonic inference, training)
//! builds on the types here. All reference arithmetic accumulates in f64, so
//! quantization is the only controlled error source when comparing the
//! photonic path against the float path.

mod container;

pub use container::{
    read_weights, read_weights_file, write_weights, write_weights_file, WeightEntry, WeightStore,
};

use crate::error::{Error, Result};

/// Dense real tensor, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    /// Builds a tensor, checking the shape product and that all values are finite.
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.contains(&0) {
            return Err(Error::Dimension(format!(
                "zero dimension in shape {shape:?}"
            )));
        }
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(Error::Dimension(format!(
                "shape {shape:?} implies {numel} elements, got {}",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite value {bad}")));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let numel = shape.iter().product();
        Self {
            shape,
            data: vec![0.0; numel],
        }
    }

    pub fn filled(shape: Vec<usize>, value: f64) -> Result<Self> {
        let numel = shape.iter().product();
        Self::new(shape, vec![value; numel])
    }

    pub fn vector(data: Vec<f64>) -> Result<Self> {
        let n = data.len();
        Self::new(vec![n], data)
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(vec![rows, cols], data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Largest absolute value; 0 for the all-zero tensor.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Element of a rank-2 tensor.
    pub fn at2(&self, row: usize, col: usize) -> f64 {
        debug_assert_eq!(self.rank(), 2);
        self.data[row * self.shape[1] + col]
    }

    pub fn set2(&mut self, row: usize, col: usize, value: f64) {
        debug_assert_eq!(self.rank(), 2);
        let cols = self.shape[1];
        self.data[row * cols + col] = value;
    }

    /// Rank-2 transpose.
    pub fn transposed(&self) -> Result<Tensor> {
        if self.rank() != 2 {
            return Err(Error::Dimension(format!(
                "transpose needs rank 2, got rank {}",
                self.rank()
            )));
        }
        let (r, c) = (self.shape[0], self.shape[1]);
        let mut out = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                out[j * r + i] = self.data[i * c + j];
            }
        }
        Tensor::new(vec![c, r], out)
    }

    /// Same data viewed under a new shape with equal element count.
    pub fn reshaped(&self, shape: Vec<usize>) -> Result<Tensor> {
        Tensor::new(shape, self.data.clone())
    }
}

/// Quantized tensor: signed 8-bit codes with one per-tensor scale.
///
/// Symmetric scheme, -128 unused: value = code * scale.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantTensor {
    pub shape: Vec<usize>,
    pub codes: Vec<i8>,
    pub scale: f64,
}

impl QuantTensor {
    pub fn numel(&self) -> usize {
        self.codes.len()
    }
}

/// Symmetric per-tensor quantization, round-half-away-from-zero.
///
/// scale = max(|t|)/127, or 1 for the all-zero tensor. Only 8-bit width is
/// supported; this mirrors the weight/activation resolution of the modeled
/// hardware.
pub fn quantize(t: &Tensor, bits: u32) -> Result<QuantTensor> {
    if bits != 8 {
        return Err(Error::InvalidInput(format!(
            "unsupported bit width {bits}, expected 8"
        )));
    }
    if t.numel() == 0 {
        return Err(Error::InvalidInput("empty tensor".into()));
    }
    let max_abs = t.max_abs();
    let scale = if max_abs == 0.0 { 1.0 } else { max_abs / 127.0 };
    let codes = t
        .data()
        .iter()
        .map(|&v| {
            // f64::round is round-half-away-from-zero, the fixed rule here.
            let q = (v / scale).round();
            debug_assert!((-127.0..=127.0).contains(&q), "code {q} out of range");
            q as i8
        })
        .collect();
    Ok(QuantTensor {
        shape: t.shape().to_vec(),
        codes,
        scale,
    })
}

/// Inverse of [`quantize`]: elementwise code * scale.
pub fn dequantize(q: &QuantTensor) -> Tensor {
    let data = q.codes.iter().map(|&c| c as f64 * q.scale).collect();
    Tensor {
        shape: q.shape.clone(),
        data,
    }
}

/// Float oracle for matrix-vector products. Plain f64 dot products.
pub fn matvec_reference(w: &Tensor, x: &Tensor) -> Result<Tensor> {
    if w.rank() != 2 || x.rank() != 1 {
        return Err(Error::Dimension(format!(
            "matvec needs rank-2 x rank-1, got {:?} x {:?}",
            w.shape(),
            x.shape()
        )));
    }
    let (rows, cols) = (w.shape()[0], w.shape()[1]);
    if cols != x.numel() {
        return Err(Error::Dimension(format!(
            "matvec shape mismatch: {rows}x{cols} with vector of {}",
            x.numel()
        )));
    }
    let mut out = vec![0.0; rows];
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0f64;
        for j in 0..cols {
            acc += w.data()[i * cols + j] * x.data()[j];
        }
        *o = acc;
    }
    Tensor::new(vec![rows], out)
}

/// Float oracle for matrix-matrix products, used by the im2col path.
pub fn matmul_reference(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.rank() != 2 || b.rank() != 2 {
        return Err(Error::Dimension("matmul needs two rank-2 tensors".into()));
    }
    let (m, k) = (a.shape()[0], a.shape()[1]);
    let (k2, n) = (b.shape()[0], b.shape()[1]);
    if k != k2 {
        return Err(Error::Dimension(format!(
            "matmul shape mismatch: {m}x{k} * {k2}x{n}"
        )));
    }
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            let mut acc = 0.0f64;
            for p in 0..k {
                acc += a.data()[i * k + p] * b.data()[p * n + j];
            }
            out[i * n + j] = acc;
        }
    }
    Tensor::new(vec![m, n], out)
}
