//! Forward-difference derivative filters `D_h`, `D_v` and their adjoints.
//! The difference at the trailing edge is defined as zero.

use crate::image::Frame;

/// `x(i, j+1) - x(i, j)`, zero in the last column.
pub fn gradient_h(src: &Frame) -> Frame {
    let (h, w, c) = src.dims();
    Frame::from_fn(h, w, c, |i, j, ch| {
        if j + 1 < w {
            src.get(i, j + 1, ch) - src.get(i, j, ch)
        } else {
            0.0
        }
    })
}

/// `x(i+1, j) - x(i, j)`, zero in the last row.
pub fn gradient_v(src: &Frame) -> Frame {
    let (h, w, c) = src.dims();
    Frame::from_fn(h, w, c, |i, j, ch| {
        if i + 1 < h {
            src.get(i + 1, j, ch) - src.get(i, j, ch)
        } else {
            0.0
        }
    })
}

/// `D_hᵀ y (i,j) = y(i, j-1) - y(i, j)`, with the out-of-range and trailing terms dropped.
pub fn gradient_h_adjoint(src: &Frame) -> Frame {
    let (h, w, c) = src.dims();
    Frame::from_fn(h, w, c, |i, j, ch| {
        let left = if j >= 1 { src.get(i, j - 1, ch) } else { 0.0 };
        let here = if j + 1 < w { src.get(i, j, ch) } else { 0.0 };
        left - here
    })
}

pub fn gradient_v_adjoint(src: &Frame) -> Frame {
    let (h, w, c) = src.dims();
    Frame::from_fn(h, w, c, |i, j, ch| {
        let up = if i >= 1 { src.get(i - 1, j, ch) } else { 0.0 };
        let here = if i + 1 < h { src.get(i, j, ch) } else { 0.0 };
        up - here
    })
}

/// `(D_hᵀD_h + D_vᵀD_v) x`, the Neumann graph Laplacian, in one pass.
pub fn gradient_normal(src: &Frame) -> Frame {
    let (h, w, c) = src.dims();
    Frame::from_fn(h, w, c, |i, j, ch| {
        let x = src.get(i, j, ch);
        let mut acc = 0.0;
        if j >= 1 {
            acc += x - src.get(i, j - 1, ch);
        }
        if j + 1 < w {
            acc += x - src.get(i, j + 1, ch);
        }
        if i >= 1 {
            acc += x - src.get(i - 1, j, ch);
        }
        if i + 1 < h {
            acc += x - src.get(i + 1, j, ch);
        }
        acc
    })
}
