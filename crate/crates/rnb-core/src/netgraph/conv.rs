//! im2col convolution lowering, so conv layers run on the same tiled MVM
//! path as dense layers.

use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Output spatial dims of a convolution over an h x w input.
pub fn conv_output_dims(
    h: usize,
    w: usize,
    k: usize,
    stride: usize,
    pad: usize,
) -> Result<(usize, usize)> {
    if k == 0 || stride == 0 {
        return Err(Error::Dimension(
            "kernel and stride must be positive".into(),
        ));
    }
    if h + 2 * pad < k || w + 2 * pad < k {
        return Err(Error::Dimension(format!(
            "kernel {k} larger than padded input {}x{}",
            h + 2 * pad,
            w + 2 * pad
        )));
    }
    Ok((
        (h + 2 * pad - k) / stride + 1,
        (w + 2 * pad - k) / stride + 1,
    ))
}

/// Lowers a convolution input to the patch matrix.
///
/// Input is cin x h x w; the result is a (cin*k*k) x (oh*ow) matrix whose
/// column p holds the receptive field of output position p, so
/// weight_matrix (cout x cin*k*k) times patch matrix gives the cout x oh x ow
/// output directly.
pub fn lower_conv_im2col(
    input: &Tensor,
    k: usize,
    stride: usize,
    pad: usize,
) -> Result<(Tensor, usize, usize)> {
    let (cin, h, w) = match input.shape() {
        [c, h, w] => (*c, *h, *w),
        other => {
            return Err(Error::Dimension(format!(
                "conv input must be rank 3, got {other:?}"
            )))
        }
    };
    let (oh, ow) = conv_output_dims(h, w, k, stride, pad)?;
    let patch_len = cin * k * k;
    let n_patches = oh * ow;
    let mut patches = vec![0.0; patch_len * n_patches];
    for oy in 0..oh {
        for ox in 0..ow {
            let p = oy * ow + ox;
            for c in 0..cin {
                for ky in 0..k {
                    for kx in 0..k {
                        let iy = (oy * stride + ky) as isize - pad as isize;
                        let ix = (ox * stride + kx) as isize - pad as isize;
                        let v = if iy >= 0 && ix >= 0 && (iy as usize) < h && (ix as usize) < w {
                            input.data()[c * h * w + iy as usize * w + ix as usize]
                        } else {
                            0.0
                        };
                        let row = c * k * k + ky * k + kx;
                        patches[row * n_patches + p] = v;
                    }
                }
            }
        }
    }
    Ok((Tensor::new(vec![patch_len, n_patches], patches)?, oh, ow))
}

/// Direct convolution oracle: the brute-force loop the lowered path is
/// checked against.
pub fn direct_conv2d(
    input: &Tensor,
    weight: &Tensor,
    k: usize,
    stride: usize,
    pad: usize,
) -> Result<Tensor> {
    let (cin, h, w) = match input.shape() {
        [c, h, w] => (*c, *h, *w),
        other => {
            return Err(Error::Dimension(format!(
                "conv input must be rank 3, got {other:?}"
            )))
        }
    };
    let cout = weight.shape()[0];
    if weight.shape() != [cout, cin * k * k] {
        return Err(Error::Dimension(format!(
            "conv weight must be {cout}x{}, got {:?}",
            cin * k * k,
            weight.shape()
        )));
    }
    let (oh, ow) = conv_output_dims(h, w, k, stride, pad)?;
    let mut out = vec![0.0; cout * oh * ow];
    for co in 0..cout {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut acc = 0.0f64;
                for c in 0..cin {
                    for ky in 0..k {
                        for kx in 0..k {
                            let iy = (oy * stride + ky) as isize - pad as isize;
                            let ix = (ox * stride + kx) as isize - pad as isize;
                            if iy >= 0 && ix >= 0 && (iy as usize) < h && (ix as usize) < w {
                                let wv = weight.data()[co * cin * k * k + c * k * k + ky * k + kx];
                                acc += wv * input.data()[c * h * w + iy as usize * w + ix as usize];
                            }
                        }
                    }
                }
                out[co * oh * ow + oy * ow + ox] = acc;
            }
        }
    }
    Tensor::new(vec![cout, oh, ow], out)
}
