//! PSNR / SSIM over all channels, and the kernel-accuracy protocol: re-degrade
//! ground-truth HR frames with an estimated kernel and score the result
//! against the observed LR frames.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{dim_err, Result};
use crate::image::{Frame, Sequence};
use crate::operators::{sk_forward, BlurKernel};

/// SSIM window side length.
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = 0.01 * 0.01;
const SSIM_C2: f64 = 0.03 * 0.03;

/// Peak signal-to-noise ratio with peak 1.0. Identical inputs give `+∞`.
pub fn psnr(a: &Frame, b: &Frame) -> Result<f64> {
    a.check_same_dims(b, "psnr")?;
    let mse = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (1.0 / mse).log10())
}

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let r = (SSIM_WINDOW / 2) as f64;
    let mut w = [0.0; SSIM_WINDOW];
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - r;
        *v = (-(d * d) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let sum: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= sum);
    w
}

/// Separable "valid" filtering of one plane.
fn filter_valid(plane: &[f64], h: usize, w: usize, win: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let (oh, ow) = (h - SSIM_WINDOW + 1, w - SSIM_WINDOW + 1);
    let mut tmp = vec![0.0; h * ow];
    for i in 0..h {
        for j in 0..ow {
            tmp[i * ow + j] = win.iter().enumerate().map(|(t, g)| g * plane[i * w + j + t]).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for i in 0..oh {
        for j in 0..ow {
            out[i * ow + j] = win.iter().enumerate().map(|(t, g)| g * tmp[(i + t) * ow + j]).sum();
        }
    }
    out
}

fn ssim_plane(a: &[f64], b: &[f64], h: usize, w: usize) -> f64 {
    let win = gaussian_window();
    let aa: Vec<f64> = a.iter().map(|x| x * x).collect();
    let bb: Vec<f64> = b.iter().map(|x| x * x).collect();
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    let mu_a = filter_valid(a, h, w, &win);
    let mu_b = filter_valid(b, h, w, &win);
    let e_aa = filter_valid(&aa, h, w, &win);
    let e_bb = filter_valid(&bb, h, w, &win);
    let e_ab = filter_valid(&ab, h, w, &win);
    let n = mu_a.len();
    let mut total = 0.0;
    for k in 0..n {
        let (ma, mb) = (mu_a[k], mu_b[k]);
        let va = e_aa[k] - ma * ma;
        let vb = e_bb[k] - mb * mb;
        let cov = e_ab[k] - ma * mb;
        total += ((2.0 * ma * mb + SSIM_C1) * (2.0 * cov + SSIM_C2))
            / ((ma * ma + mb * mb + SSIM_C1) * (va + vb + SSIM_C2));
    }
    total / n as f64
}

/// Structural similarity: 11×11 Gaussian window (σ = 1.5) over fully covered
/// positions, `C1 = 0.01²`, `C2 = 0.03²` for unit peak, averaged over channels.
pub fn ssim(a: &Frame, b: &Frame) -> Result<f64> {
    a.check_same_dims(b, "ssim")?;
    let (h, w, c) = a.dims();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return dim_err(format!("ssim needs at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {h}x{w}"));
    }
    let per_channel: Vec<f64> = (0..c)
        .map(|ch| ssim_plane(a.channel(ch).as_slice(), b.channel(ch).as_slice(), h, w))
        .collect();
    Ok(per_channel.iter().sum::<f64>() / c as f64)
}

/// Per-frame and averaged quality scores.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricReport {
    pub psnr_db: f64,
    pub ssim: f64,
    pub frame_psnr: Vec<f64>,
    pub frame_ssim: Vec<f64>,
}

impl MetricReport {
    pub fn from_frames(frame_psnr: Vec<f64>, frame_ssim: Vec<f64>) -> Self {
        let n = frame_psnr.len().max(1) as f64;
        Self {
            psnr_db: frame_psnr.iter().sum::<f64>() / n,
            ssim: frame_ssim.iter().sum::<f64>() / n,
            frame_psnr,
            frame_ssim,
        }
    }

    /// `frame,psnr_db,ssim` rows followed by a `mean` summary row.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("frame,psnr_db,ssim\n");
        for (i, (p, q)) in self.frame_psnr.iter().zip(&self.frame_ssim).enumerate() {
            let _ = writeln!(s, "{i},{p:.6},{q:.6}");
        }
        let _ = writeln!(s, "mean,{:.6},{:.6}", self.psnr_db, self.ssim);
        s
    }
}

/// Scores `pred` against `truth` frame by frame.
pub fn evaluate_sequences(pred: &Sequence, truth: &Sequence) -> Result<MetricReport> {
    if pred.len() != truth.len() {
        return dim_err(format!("{} predicted frames vs {} reference frames", pred.len(), truth.len()));
    }
    let scores = pred
        .frames()
        .par_iter()
        .zip(truth.frames())
        .map(|(p, t)| Ok((psnr(p, t)?, ssim(p, t)?)))
        .collect::<Result<Vec<_>>>()?;
    let (ps, ss) = scores.into_iter().unzip();
    Ok(MetricReport::from_frames(ps, ss))
}

/// Regenerates LR frames as `S·K·hr` and scores them against `lr_seq`.
pub fn kernel_accuracy(hr_seq: &Sequence, lr_seq: &Sequence, kernel: &BlurKernel, s: usize) -> Result<MetricReport> {
    if hr_seq.len() != lr_seq.len() {
        return dim_err(format!("{} HR frames vs {} LR frames", hr_seq.len(), lr_seq.len()));
    }
    let regenerated = hr_seq
        .frames()
        .par_iter()
        .map(|hr| sk_forward(hr, kernel, s))
        .collect::<Result<Vec<_>>>()?;
    evaluate_sequences(&Sequence::new(regenerated)?, lr_seq)
}
