//! Coarse-to-fine Horn-Schunck with incremental warping.
//!
//! At every level the source is warped by the current flow and the
//! linearized brightness-constancy equation is solved for the total flow
//! with Jacobi sweeps:
//!
//! ```text
//! U ← Ū − I_x (I_x (Ū − u₀) + I_y (V̄ − v₀) + I_t) / (α² + I_x² + I_y²)
//! ```

use super::FlowConfig;
use crate::image::{resize_to, Frame};
use crate::operators::{warp, FlowField};

/// Intensities are scaled to 8-bit units so the smoothness weight keeps its
/// conventional magnitude.
const INTENSITY_SCALE: f64 = 255.0;
/// Pyramid levels stop before either side drops below this.
const MIN_LEVEL_SIZE: usize = 8;

/// Single-channel working image.
#[derive(Clone)]
struct Plane {
    h: usize,
    w: usize,
    d: Vec<f64>,
}

impl Plane {
    fn from_frame(f: &Frame, scale: f64) -> Self {
        let lum = f.luminance();
        Self { h: lum.height(), w: lum.width(), d: lum.into_vec().into_iter().map(|v| v * scale).collect() }
    }

    fn to_frame(&self) -> Frame {
        Frame::from_vec_unchecked(self.h, self.w, 1, self.d.clone())
    }

    #[inline]
    fn at(&self, i: isize, j: isize) -> f64 {
        let i = i.clamp(0, self.h as isize - 1) as usize;
        let j = j.clamp(0, self.w as isize - 1) as usize;
        self.d[i * self.w + j]
    }

    /// Separable [1 4 6 4 1]/16 smoothing, replicate boundary.
    fn binomial_blur(&self) -> Plane {
        const K: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];
        let mut tmp = vec![0.0; self.h * self.w];
        for i in 0..self.h {
            for j in 0..self.w {
                tmp[i * self.w + j] = (0..5).map(|t| K[t] * self.at(i as isize, j as isize + t as isize - 2)).sum();
            }
        }
        let tmp = Plane { h: self.h, w: self.w, d: tmp };
        let mut out = vec![0.0; self.h * self.w];
        for i in 0..self.h {
            for j in 0..self.w {
                out[i * self.w + j] = (0..5).map(|t| K[t] * tmp.at(i as isize + t as isize - 2, j as isize)).sum();
            }
        }
        Plane { h: self.h, w: self.w, d: out }
    }

    fn downsample(&self) -> Plane {
        let (h, w) = (self.h.div_ceil(2), self.w.div_ceil(2));
        let f = resize_to(&self.binomial_blur().to_frame(), h, w).expect("non-empty level");
        Plane { h, w, d: f.into_vec() }
    }

    /// Five-point central differences `(x, y)`.
    fn derivatives(&self) -> (Vec<f64>, Vec<f64>) {
        let mut dx = vec![0.0; self.h * self.w];
        let mut dy = vec![0.0; self.h * self.w];
        for i in 0..self.h as isize {
            for j in 0..self.w as isize {
                let k = i as usize * self.w + j as usize;
                dx[k] = (self.at(i, j - 2) - 8.0 * self.at(i, j - 1) + 8.0 * self.at(i, j + 1) - self.at(i, j + 2)) / 12.0;
                dy[k] = (self.at(i - 2, j) - 8.0 * self.at(i - 1, j) + 8.0 * self.at(i + 1, j) - self.at(i + 2, j)) / 12.0;
            }
        }
        (dx, dy)
    }
}

/// 4-neighbour average with replicate boundary.
fn neighbour_mean(field: &[f64], h: usize, w: usize, out: &mut [f64]) {
    for i in 0..h {
        let up = i.saturating_sub(1);
        let down = (i + 1).min(h - 1);
        for j in 0..w {
            let left = j.saturating_sub(1);
            let right = (j + 1).min(w - 1);
            out[i * w + j] =
                0.25 * (field[up * w + j] + field[down * w + j] + field[i * w + left] + field[i * w + right]);
        }
    }
}

fn refine_level(target: &Plane, source: &Plane, u: &mut [f64], v: &mut [f64], cfg: &FlowConfig) {
    let (h, w) = (target.h, target.w);
    let alpha2 = cfg.smoothness_weight * cfg.smoothness_weight;
    let (tx, ty) = target.derivatives();
    let mut ubar = vec![0.0; h * w];
    let mut vbar = vec![0.0; h * w];
    for _ in 0..cfg.warp_steps_per_level {
        let flow = FlowField::new(h, w, u.to_vec(), v.to_vec()).expect("finite flow");
        let warped = warp(&source.to_frame(), &flow).expect("matching dims");
        let warped = Plane { h, w, d: warped.into_vec() };
        let (wx, wy) = warped.derivatives();
        let ix: Vec<f64> = wx.iter().zip(&tx).map(|(a, b)| 0.5 * (a + b)).collect();
        let iy: Vec<f64> = wy.iter().zip(&ty).map(|(a, b)| 0.5 * (a + b)).collect();
        let it: Vec<f64> = warped.d.iter().zip(&target.d).map(|(a, b)| a - b).collect();
        let (u0, v0) = (u.to_vec(), v.to_vec());
        for _ in 0..cfg.iters_per_level {
            neighbour_mean(u, h, w, &mut ubar);
            neighbour_mean(v, h, w, &mut vbar);
            for k in 0..h * w {
                let num = ix[k] * (ubar[k] - u0[k]) + iy[k] * (vbar[k] - v0[k]) + it[k];
                let den = alpha2 + ix[k] * ix[k] + iy[k] * iy[k];
                u[k] = ubar[k] - ix[k] * num / den;
                v[k] = vbar[k] - iy[k] * num / den;
            }
        }
    }
}

/// Flow `u` such that `source(x + u(x)) ≈ target(x)`.
pub(super) fn horn_schunck_pyramidal(target: &Frame, source: &Frame, cfg: &FlowConfig) -> FlowField {
    let mut targets = vec![Plane::from_frame(target, INTENSITY_SCALE)];
    let mut sources = vec![Plane::from_frame(source, INTENSITY_SCALE)];
    while targets.len() < cfg.pyramid_levels {
        let last = targets.last().expect("non-empty");
        if last.h.div_ceil(2) < MIN_LEVEL_SIZE || last.w.div_ceil(2) < MIN_LEVEL_SIZE {
            break;
        }
        let t = last.downsample();
        let s = sources.last().expect("non-empty").downsample();
        targets.push(t);
        sources.push(s);
    }

    let coarsest = targets.last().expect("non-empty");
    let mut u = vec![0.0; coarsest.h * coarsest.w];
    let mut v = vec![0.0; coarsest.h * coarsest.w];
    let (mut ch, mut cw) = (coarsest.h, coarsest.w);
    for level in (0..targets.len()).rev() {
        let (t, s) = (&targets[level], &sources[level]);
        if (t.h, t.w) != (ch, cw) {
            let (sy, sx) = (t.h as f64 / ch as f64, t.w as f64 / cw as f64);
            u = resize_to(&Frame::from_vec_unchecked(ch, cw, 1, u), t.h, t.w)
                .expect("non-empty")
                .into_vec()
                .into_iter()
                .map(|x| x * sx)
                .collect();
            v = resize_to(&Frame::from_vec_unchecked(ch, cw, 1, v), t.h, t.w)
                .expect("non-empty")
                .into_vec()
                .into_iter()
                .map(|x| x * sy)
                .collect();
            (ch, cw) = (t.h, t.w);
        }
        refine_level(t, s, &mut u, &mut v, cfg);
    }
    FlowField::new(ch, cw, u, v).expect("finite flow")
}
