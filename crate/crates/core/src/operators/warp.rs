use crate::error::{dim_err, Error, Result};
use crate::image::Frame;

/// Dense per-pixel displacement `(u, v)`: `u` horizontal (columns), `v` vertical (rows).
#[derive(Clone, Debug, PartialEq)]
pub struct FlowField {
    height: usize,
    width: usize,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl FlowField {
    pub fn new(height: usize, width: usize, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || u.len() != height * width || v.len() != height * width {
            return dim_err(format!(
                "flow {height}x{width} with {} / {} components",
                u.len(),
                v.len()
            ));
        }
        if u.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(Error::InvalidData("flow field contains non-finite values".into()));
        }
        Ok(Self { height, width, u, v })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self::uniform(height, width, 0.0, 0.0)
    }

    pub fn uniform(height: usize, width: usize, u: f64, v: f64) -> Self {
        Self { height, width, u: vec![u; height * width], v: vec![v; height * width] }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> (f64, f64) {
        let k = row * self.width + col;
        (self.u[k], self.v[k])
    }

    pub fn max_magnitude(&self) -> f64 {
        self.u.iter().zip(&self.v).map(|(u, v)| u.hypot(*v)).fold(0.0, f64::max)
    }

    /// Mean `(u, v)` over rows `r0..r1`, columns `c0..c1`.
    pub fn mean_in(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> (f64, f64) {
        let (mut su, mut sv, mut n) = (0.0, 0.0, 0usize);
        for i in r0..r1 {
            for j in c0..c1 {
                let (u, v) = self.at(i, j);
                su += u;
                sv += v;
                n += 1;
            }
        }
        (su / n as f64, sv / n as f64)
    }
}

/// Bilinear sample at a real position, with the position clamped into the frame.
#[inline]
pub(crate) fn sample_bilinear(src: &Frame, y: f64, x: f64, out: &mut [f64]) {
    let (h, w, c) = src.dims();
    let y = y.clamp(0.0, (h - 1) as f64);
    let x = x.clamp(0.0, (w - 1) as f64);
    let (y0, x0) = (y.floor() as usize, x.floor() as usize);
    let (y1, x1) = ((y0 + 1).min(h - 1), (x0 + 1).min(w - 1));
    let (fy, fx) = (y - y0 as f64, x - x0 as f64);
    let d = src.as_slice();
    let (p00, p01) = ((y0 * w + x0) * c, (y0 * w + x1) * c);
    let (p10, p11) = ((y1 * w + x0) * c, (y1 * w + x1) * c);
    for (ch, o) in out.iter_mut().enumerate() {
        let top = d[p00 + ch] + fx * (d[p01 + ch] - d[p00 + ch]);
        let bot = d[p10 + ch] + fx * (d[p11 + ch] - d[p10 + ch]);
        *o = top + fy * (bot - top);
    }
}

/// `out(x) = src(x + flow(x))`, bilinear, replicate boundary.
pub fn warp(src: &Frame, flow: &FlowField) -> Result<Frame> {
    let (h, w, c) = src.dims();
    if flow.height != h || flow.width != w {
        return dim_err(format!(
            "flow {}x{} does not match frame {h}x{w}",
            flow.height, flow.width
        ));
    }
    let mut out = Frame::zeros(h, w, c);
    let mut px = vec![0.0; c];
    let dst = out.as_mut_slice();
    for i in 0..h {
        for j in 0..w {
            let (u, v) = flow.at(i, j);
            if u == 0.0 && v == 0.0 {
                let base = (i * w + j) * c;
                dst[base..base + c].copy_from_slice(&src.as_slice()[base..base + c]);
            } else {
                sample_bilinear(src, i as f64 + v, j as f64 + u, &mut px);
                dst[(i * w + j) * c..(i * w + j + 1) * c].copy_from_slice(&px);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn distinct(h: usize, w: usize) -> Frame {
        Frame::from_fn(h, w, 2, |i, j, c| (i * 10 + j) as f64 / 100.0 + c as f64 * 0.5)
    }

    #[test]
    fn zero_flow_is_identity() {
        let x = distinct(4, 5);
        assert_eq!(warp(&x, &FlowField::zeros(4, 5)).unwrap(), x);
    }

    #[test]
    fn integer_shift_replicates_edge() {
        let x = distinct(3, 4);
        let y = warp(&x, &FlowField::uniform(3, 4, 1.0, 0.0)).unwrap();
        for i in 0..3 {
            for j in 0..4 {
                for c in 0..2 {
                    assert_eq!(y.get(i, j, c), x.get(i, (j + 1).min(3), c));
                }
            }
        }
    }

    #[test]
    fn half_pixel_shift_averages_neighbours() {
        let x = Frame::from_fn(1, 6, 1, |_, j, _| (j * j) as f64 / 36.0);
        let y = warp(&x, &FlowField::uniform(1, 6, 0.5, 0.0)).unwrap();
        for j in 0..5 {
            let want = 0.5 * (x.get(0, j, 0) + x.get(0, j + 1, 0));
            assert!((y.get(0, j, 0) - want).abs() < 1e-15);
        }
    }

    #[test]
    fn linear_in_image() {
        let a = distinct(5, 5);
        let b = Frame::from_fn(5, 5, 2, |i, j, c| ((i * 7 + j * 3 + c) % 5) as f64);
        let flow = FlowField::new(
            5,
            5,
            (0..25).map(|k| (k as f64 * 0.37).sin()).collect(),
            (0..25).map(|k| (k as f64 * 0.11).cos()).collect(),
        )
        .unwrap();
        let lhs = warp(&a.zip_map(&b, |p, q| 2.0 * p - 3.0 * q).unwrap(), &flow).unwrap();
        let rhs = warp(&a, &flow)
            .unwrap()
            .zip_map(&warp(&b, &flow).unwrap(), |p, q| 2.0 * p - 3.0 * q)
            .unwrap();
        for (p, q) in lhs.as_slice().iter().zip(rhs.as_slice()) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn mismatched_flow_is_rejected() {
        assert!(warp(&distinct(3, 3), &FlowField::zeros(3, 4)).is_err());
        assert!(FlowField::new(2, 2, vec![0.0; 4], vec![f64::NAN; 4]).is_err());
    }
}
