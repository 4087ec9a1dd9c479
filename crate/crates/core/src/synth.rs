//! Seeded synthetic content: broadband textured frames and panning sequences.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::image::{Frame, Sequence};
use crate::operators::{warp, FlowField};

const WAVES: usize = 12;
const DISCS: usize = 10;

/// A textured frame with values in `[0.05, 0.95]`: oriented sinusoids with
/// wavelengths between 4 and 40 pixels (amplitude falling with frequency)
/// plus soft-edged discs. Identical seeds give identical frames.
pub fn textured_frame(height: usize, width: usize, channels: usize, seed: u64) -> Frame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let waves: Vec<(f64, f64, f64, f64, Vec<f64>)> = (0..WAVES)
        .map(|_| {
            let wavelength = rng.random_range(4.0..40.0);
            let theta = rng.random_range(0.0..PI);
            let freq = 2.0 * PI / wavelength;
            let phase = rng.random_range(0.0..2.0 * PI);
            let amp = wavelength / 40.0;
            let tint = (0..channels).map(|_| rng.random_range(0.6..1.0)).collect();
            (freq * theta.cos(), freq * theta.sin(), phase, amp, tint)
        })
        .collect();
    let discs: Vec<(f64, f64, f64, f64, Vec<f64>)> = (0..DISCS)
        .map(|_| {
            let cy = rng.random_range(0.0..height as f64);
            let cx = rng.random_range(0.0..width as f64);
            let radius = rng.random_range(3.0..(height.min(width) as f64 / 4.0).max(4.0));
            let edge = rng.random_range(0.6..1.5);
            let color = (0..channels).map(|_| rng.random_range(-1.0..1.0)).collect();
            (cy, cx, radius, edge, color)
        })
        .collect();

    let raw = Frame::from_fn(height, width, channels, |i, j, c| {
        let (y, x) = (i as f64, j as f64);
        let mut v = 0.0;
        for (fx, fy, phase, amp, tint) in &waves {
            v += amp * tint[c] * (fx * x + fy * y + phase).sin();
        }
        for (cy, cx, r, edge, color) in &discs {
            let d = ((y - cy).powi(2) + (x - cx).powi(2)).sqrt();
            v += 0.8 * color[c] / (1.0 + ((d - r) / edge).exp());
        }
        v
    });
    let (lo, hi) = raw
        .as_slice()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = (hi - lo).max(1e-12);
    raw.map(|v| 0.05 + 0.9 * (v - lo) / span)
}

/// Frames `base(x + shift_k)` for each global shift `(u, v)`.
pub fn panning_sequence(base: &Frame, shifts: &[(f64, f64)]) -> Result<Sequence> {
    let frames = shifts
        .iter()
        .map(|&(u, v)| warp(base, &FlowField::uniform(base.height(), base.width(), u, v)))
        .collect::<Result<Vec<_>>>()?;
    Sequence::new(frames)
}
