//! Desk-scale datasets: deterministic synthetic blobs and an IDX-format
//! loader for image/label files.

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::Tensor;
use crate::rng::SplitMix64;

#[derive(Debug, Clone)]
pub struct Dataset {
    pub inputs: Vec<Tensor>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// Two-class Gaussian blobs in [0, 1]^dim, deterministic in the seed.
///
/// Class centers alternate high/low per dimension (0.7/0.2 for class 0,
/// 0.2/0.7 for class 1), sigma 0.08, clamped to [0, 1]. The centers differ in
/// direction rather than magnitude, so the bias-free layers of this crate
/// separate them.
pub fn blobs(seed: u64, n: usize, dim: usize) -> Dataset {
    let mut rng = SplitMix64::new(seed);
    let mut inputs = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % 2;
        let data: Vec<f64> = (0..dim)
            .map(|d| {
                let high = (d % 2 == 0) == (label == 0);
                let center = if high { 0.7 } else { 0.2 };
                (center + 0.08 * rng.next_gaussian()).clamp(0.0, 1.0)
            })
            .collect();
        inputs.push(Tensor::new(vec![dim], data).expect("finite"));
        labels.push(label);
    }
    Dataset {
        inputs,
        labels,
        n_classes: 2,
    }
}

fn read_be_u32<R: Read>(input: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    input.read_exact(&mut b)?;
    Ok(u32::from_be_bytes(b))
}

/// Reads an IDX image file (magic 0x00000803): u8 pixels scaled to [0, 1],
/// one rank-3 tensor (1 x rows x cols) per image.
pub fn read_idx_images(path: &Path) -> Result<Vec<Tensor>> {
    let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
    let magic = read_be_u32(&mut file)?;
    if magic != 0x0000_0803 {
        return Err(Error::Container(format!(
            "bad IDX image magic {magic:#010x}"
        )));
    }
    let count = read_be_u32(&mut file)? as usize;
    let rows = read_be_u32(&mut file)? as usize;
    let cols = read_be_u32(&mut file)? as usize;
    let mut out = Vec::with_capacity(count);
    let mut buf = vec![0u8; rows * cols];
    for _ in 0..count {
        file.read_exact(&mut buf)?;
        let data = buf.iter().map(|&b| b as f64 / 255.0).collect();
        out.push(Tensor::new(vec![1, rows, cols], data)?);
    }
    Ok(out)
}

/// Reads an IDX label file (magic 0x00000801).
pub fn read_idx_labels(path: &Path) -> Result<Vec<usize>> {
    let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
    let magic = read_be_u32(&mut file)?;
    if magic != 0x0000_0801 {
        return Err(Error::Container(format!(
            "bad IDX label magic {magic:#010x}"
        )));
    }
    let count = read_be_u32(&mut file)? as usize;
    let mut buf = vec![0u8; count];
    file.read_exact(&mut buf)?;
    Ok(buf.into_iter().map(|b| b as usize).collect())
}
