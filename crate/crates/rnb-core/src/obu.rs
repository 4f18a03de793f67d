//! Opto-electronic blend unit: the transforms applied between reuses of a
//! shared weight block.
//!
//! Shuffles are index remaps executed in the electrical domain on activation
//! tensors; transposes are served optically by driving the tile from the
//! orthogonal input port, so neither contributes tile writes. Shuffle
//! permutations derive from [`crate::rng::SplitMix64`] with Fisher-Yates, so
//! a (block_size, seed) pair names the same permutation on every platform.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Transform attached to one use of a shared weight block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObuTransform {
    Identity,
    /// Optical transpose: the tile computes with the transposed matrix.
    Transpose,
    /// Group-transpose shuffle of the channel dimension.
    ChannelShuffle {
        g: usize,
    },
    /// Seeded permutation of contiguous blocks of the flattened tensor.
    FlattenedShuffle {
        block: usize,
        seed: u64,
    },
}

impl ObuTransform {
    /// Shuffles act on activations; identity/transpose act on the weight view.
    pub fn is_activation_transform(&self) -> bool {
        matches!(
            self,
            ObuTransform::ChannelShuffle { .. } | ObuTransform::FlattenedShuffle { .. }
        )
    }

    /// Applies an activation-side transform. Identity/transpose pass through
    /// unchanged (the weight view handles them).
    pub fn apply_activation(&self, x: &Tensor) -> Result<Tensor> {
        match self {
            ObuTransform::Identity | ObuTransform::Transpose => Ok(x.clone()),
            ObuTransform::ChannelShuffle { g } => channel_shuffle(x, *g),
            ObuTransform::FlattenedShuffle { block, seed } => flattened_shuffle(x, *block, *seed),
        }
    }

    /// Inverse of [`apply_activation`], used by gradient adjoints.
    pub fn invert_activation(&self, x: &Tensor) -> Result<Tensor> {
        match self {
            ObuTransform::Identity | ObuTransform::Transpose => Ok(x.clone()),
            ObuTransform::ChannelShuffle { g } => {
                let c = channel_count(x);
                if *g == 0 || !c.is_multiple_of(*g) {
                    return Err(Error::Group(format!(
                        "group count {g} does not divide {c} channels"
                    )));
                }
                channel_shuffle(x, c / *g)
            }
            ObuTransform::FlattenedShuffle { block, seed } => {
                let perm = block_permutation(block_count(x.numel(), *block)?, *seed);
                apply_block_permutation(x, *block, &invert_permutation(&perm))
            }
        }
    }
}

fn channel_count(x: &Tensor) -> usize {
    x.shape()[0]
}

/// Channel shuffle with group-transpose semantics: output channel
/// `i*(c/g) + j` holds input channel `j*g + i`. Spatial content moves with
/// its channel. Rank-1 tensors are treated as c channels of one element.
pub fn channel_shuffle(x: &Tensor, g: usize) -> Result<Tensor> {
    let c = channel_count(x);
    if g == 0 || !c.is_multiple_of(g) {
        return Err(Error::Group(format!(
            "group count {g} does not divide {c} channels"
        )));
    }
    let per_group = c / g;
    let spatial: usize = x.shape()[1..].iter().product::<usize>().max(1);
    let mut out = vec![0.0; x.numel()];
    for i in 0..g {
        for j in 0..per_group {
            let dst = i * per_group + j;
            let src = j * g + i;
            out[dst * spatial..(dst + 1) * spatial]
                .copy_from_slice(&x.data()[src * spatial..(src + 1) * spatial]);
        }
    }
    Tensor::new(x.shape().to_vec(), out)
}

fn block_count(numel: usize, block_size: usize) -> Result<usize> {
    if block_size == 0 || !numel.is_multiple_of(block_size) {
        return Err(Error::Block(format!(
            "block size {block_size} does not divide {numel} elements"
        )));
    }
    Ok(numel / block_size)
}

/// Fisher-Yates permutation of `n` block indices, seeded with SplitMix64.
pub fn block_permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = crate::rng::SplitMix64::new(seed);
    for i in (1..n).rev() {
        let j = rng.next_below(i as u64 + 1) as usize;
        perm.swap(i, j);
    }
    perm
}

pub fn invert_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0usize; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

fn apply_block_permutation(x: &Tensor, block_size: usize, perm: &[usize]) -> Result<Tensor> {
    let mut out = vec![0.0; x.numel()];
    for (dst, &src) in perm.iter().enumerate() {
        out[dst * block_size..(dst + 1) * block_size]
            .copy_from_slice(&x.data()[src * block_size..(src + 1) * block_size]);
    }
    Tensor::new(x.shape().to_vec(), out)
}

/// Flatten, permute contiguous blocks with the seeded permutation, reshape.
pub fn flattened_shuffle(x: &Tensor, block_size: usize, seed: u64) -> Result<Tensor> {
    let n = block_count(x.numel(), block_size)?;
    let perm = block_permutation(n, seed);
    apply_block_permutation(x, block_size, &perm)
}

/// Transpose of the two spatial dimensions of a c x h x w tensor. Rank-2
/// input is treated as a single channel.
pub fn transpose_hw(x: &Tensor) -> Result<Tensor> {
    let (c, h, w) = match x.shape() {
        [h, w] => (1, *h, *w),
        [c, h, w] => (*c, *h, *w),
        other => {
            return Err(Error::Dimension(format!(
                "transpose_hw needs rank 2 or 3, got {other:?}"
            )))
        }
    };
    let mut out = vec![0.0; x.numel()];
    for k in 0..c {
        for i in 0..h {
            for j in 0..w {
                out[k * w * h + j * h + i] = x.data()[k * h * w + i * w + j];
            }
        }
    }
    let shape = if x.rank() == 2 {
        vec![w, h]
    } else {
        vec![c, w, h]
    };
    Tensor::new(shape, out)
}

/// Orientation of the optical input driving a programmed tile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightView {
    /// Horizontal input: the tile computes W x.
    Direct,
    /// Vertical input: the tile computes W^T x with zero extra writes.
    Transposed,
}

impl WeightView {
    /// Effective (rows, cols) of a stored rows x cols matrix under this view.
    pub fn effective_dims(&self, rows: usize, cols: usize) -> (usize, usize) {
        match self {
            WeightView::Direct => (rows, cols),
            WeightView::Transposed => (cols, rows),
        }
    }
}

/// Maps a per-use transform to the weight view it needs on the tile.
/// Shuffle kinds are rejected: they act on activations, not weights.
pub fn weight_view(transform: &ObuTransform) -> Result<WeightView> {
    match transform {
        ObuTransform::Identity => Ok(WeightView::Direct),
        ObuTransform::Transpose => Ok(WeightView::Transposed),
        other => Err(Error::Schedule(format!(
            "transform {other:?} acts on activations, not on the weight view"
        ))),
    }
}
