//! Blur `K`, its adjoint, and the fused blur-then-decimate `S·K` pair.
//!
//! Convolution uses the correlation convention (kernel not flipped):
//! `y(i,j) = Σ_ab k(a,b) · x(i + a - r, j + b - r)` with coordinates clamped
//! into the frame.

use super::{BlurKernel, Boundary};
use crate::error::{dim_err, Result};
use crate::image::Frame;

#[inline]
fn clamp_idx(p: isize, n: usize) -> usize {
    p.clamp(0, n as isize - 1) as usize
}

/// Correlates at output position `(i, j)` for all channels, writing into `out`.
#[inline]
fn correlate_at(src: &Frame, kernel: &BlurKernel, i: usize, j: usize, out: &mut [f64]) {
    let (h, w, c) = src.dims();
    let (k, r) = (kernel.size(), kernel.radius() as isize);
    let data = src.as_slice();
    out.iter_mut().for_each(|v| *v = 0.0);
    for a in 0..k {
        let row = clamp_idx(i as isize + a as isize - r, h);
        for b in 0..k {
            let t = kernel.tap(a, b);
            let col = clamp_idx(j as isize + b as isize - r, w);
            let base = (row * w + col) * c;
            for (ch, o) in out.iter_mut().enumerate() {
                *o += t * data[base + ch];
            }
        }
    }
}

/// Adds `k(a,b) · val[ch]` into every source position read by `correlate_at(i, j)`.
#[inline]
fn scatter_at(dst: &mut [f64], dims: (usize, usize, usize), kernel: &BlurKernel, i: usize, j: usize, val: &[f64]) {
    let (h, w, c) = dims;
    let (k, r) = (kernel.size(), kernel.radius() as isize);
    for a in 0..k {
        let row = clamp_idx(i as isize + a as isize - r, h);
        for b in 0..k {
            let t = kernel.tap(a, b);
            let col = clamp_idx(j as isize + b as isize - r, w);
            let base = (row * w + col) * c;
            for (ch, v) in val.iter().enumerate() {
                dst[base + ch] += t * v;
            }
        }
    }
}

/// Blur with replicate boundary. Linear; never clamps.
pub fn convolve2d(src: &Frame, kernel: &BlurKernel, boundary: Boundary) -> Frame {
    let Boundary::Replicate = boundary;
    let (h, w, c) = src.dims();
    let mut out = Frame::zeros(h, w, c);
    let mut px = vec![0.0; c];
    let dst = out.as_mut_slice();
    for i in 0..h {
        for j in 0..w {
            correlate_at(src, kernel, i, j, &mut px);
            dst[(i * w + j) * c..(i * w + j + 1) * c].copy_from_slice(&px);
        }
    }
    out
}

/// Exact adjoint of [`convolve2d`]: each output sample scatters its taps back
/// onto the (clamped) source positions it read, so boundary pixels accumulate
/// the weight of every replicated read.
pub fn convolve2d_adjoint(src: &Frame, kernel: &BlurKernel, boundary: Boundary) -> Frame {
    let Boundary::Replicate = boundary;
    let dims @ (h, w, c) = src.dims();
    let mut out = Frame::zeros(h, w, c);
    let dst = out.as_mut_slice();
    for i in 0..h {
        for j in 0..w {
            let base = (i * w + j) * c;
            scatter_at(dst, dims, kernel, i, j, &src.as_slice()[base..base + c]);
        }
    }
    out
}

/// `S·K`: blur then keep samples at `(s·i, s·j)`. Only the retained samples
/// are computed; values equal `decimate(convolve2d(hr, k), s)` bit for bit.
pub fn sk_forward(hr: &Frame, kernel: &BlurKernel, s: usize) -> Result<Frame> {
    let (h, w, c) = hr.dims();
    if s == 0 || h % s != 0 || w % s != 0 {
        return dim_err(format!("{h}x{w} is not divisible by scale {s}"));
    }
    let (lh, lw) = (h / s, w / s);
    let mut out = Frame::zeros(lh, lw, c);
    let mut px = vec![0.0; c];
    let dst = out.as_mut_slice();
    for i in 0..lh {
        for j in 0..lw {
            correlate_at(hr, kernel, i * s, j * s, &mut px);
            dst[(i * lw + j) * c..(i * lw + j + 1) * c].copy_from_slice(&px);
        }
    }
    Ok(out)
}

/// `Kᵀ·Sᵀ`: adjoint of [`sk_forward`], producing a frame of `s×` the size of `lr`.
pub fn sk_adjoint(lr: &Frame, kernel: &BlurKernel, s: usize) -> Frame {
    let (lh, lw, c) = lr.dims();
    let dims @ (h, w, _) = (lh * s, lw * s, c);
    let mut out = Frame::zeros(h, w, c);
    let dst = out.as_mut_slice();
    for i in 0..lh {
        for j in 0..lw {
            let base = (i * lw + j) * c;
            scatter_at(dst, dims, kernel, i * s, j * s, &lr.as_slice()[base..base + c]);
        }
    }
    out
}
