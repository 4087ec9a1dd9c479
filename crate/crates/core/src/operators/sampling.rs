//! Decimation `S` (phase `(0,0)`) and its zero-filling adjoint.

use crate::error::{dim_err, Result};
use crate::image::Frame;

/// Keeps the samples at `(s·i, s·j)`.
pub fn decimate(src: &Frame, s: usize) -> Result<Frame> {
    let (h, w, c) = src.dims();
    if s == 0 || h % s != 0 || w % s != 0 {
        return dim_err(format!("{h}x{w} is not divisible by scale {s}"));
    }
    Ok(Frame::from_fn(h / s, w / s, c, |i, j, ch| src.get(i * s, j * s, ch)))
}

/// Zero-filled upsampling: `out(s·i, s·j) = src(i, j)`, zero elsewhere.
pub fn decimate_adjoint(src: &Frame, s: usize) -> Frame {
    let (h, w, c) = src.dims();
    let mut out = Frame::zeros(h * s, w * s, c);
    for i in 0..h {
        for j in 0..w {
            for ch in 0..c {
                out.set(i * s, j * s, ch, src.get(i, j, ch));
            }
        }
    }
    out
}
