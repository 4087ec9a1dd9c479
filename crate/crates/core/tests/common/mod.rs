//! Independent oracles for the integration tests: explicit dense operator
//! matrices and naive loop implementations of the forward maps.
#![allow(dead_code)]

use blind_vsr::{BlurKernel, Frame};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_frame(rng: &mut ChaCha8Rng, h: usize, w: usize, c: usize) -> Frame {
    let data = (0..h * w * c).map(|_| rng.random::<f64>()).collect();
    Frame::new(h, w, c, data).unwrap()
}

pub fn random_kernel(rng: &mut ChaCha8Rng, k: usize) -> BlurKernel {
    BlurKernel::normalized(k, (0..k * k).map(|_| rng.random::<f64>() + 0.01).collect()).unwrap()
}

/// Row-major `h·w` vector of one channel.
pub fn channel_vec(f: &Frame, c: usize) -> DVector<f64> {
    let (h, w, _) = f.dims();
    DVector::from_fn(h * w, |p, _| f.get(p / w, p % w, c))
}

pub fn frame_from_vec(v: &DVector<f64>, h: usize, w: usize) -> Frame {
    Frame::new(h, w, 1, v.iter().copied().collect()).unwrap()
}

fn clamp(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

/// Blur with replicate boundary: `out(i,j) = Σ k(a,b) x(clamp(i+a−r), clamp(j+b−r))`.
pub fn dense_blur(h: usize, w: usize, kernel: &BlurKernel) -> DMatrix<f64> {
    let k = kernel.size();
    let r = k as isize / 2;
    let mut m = DMatrix::zeros(h * w, h * w);
    for i in 0..h {
        for j in 0..w {
            for a in 0..k {
                for b in 0..k {
                    let y = clamp(i as isize + a as isize - r, h);
                    let x = clamp(j as isize + b as isize - r, w);
                    m[(i * w + j, y * w + x)] += kernel.tap(a, b);
                }
            }
        }
    }
    m
}

/// Keeps pixels `(s·i, s·j)`.
pub fn dense_decimate(h: usize, w: usize, s: usize) -> DMatrix<f64> {
    let (lh, lw) = (h / s, w / s);
    let mut m = DMatrix::zeros(lh * lw, h * w);
    for i in 0..lh {
        for j in 0..lw {
            m[(i * lw + j, i * s * w + j * s)] = 1.0;
        }
    }
    m
}

/// Horizontal forward difference, zero in the last column.
pub fn dense_dh(h: usize, w: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(h * w, h * w);
    for i in 0..h {
        for j in 0..w - 1 {
            m[(i * w + j, i * w + j + 1)] = 1.0;
            m[(i * w + j, i * w + j)] = -1.0;
        }
    }
    m
}

/// Vertical forward difference, zero in the last row.
pub fn dense_dv(h: usize, w: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(h * w, h * w);
    for i in 0..h - 1 {
        for j in 0..w {
            m[(i * w + j, (i + 1) * w + j)] = 1.0;
            m[(i * w + j, i * w + j)] = -1.0;
        }
    }
    m
}

/// `KᵀSᵀSK + γ(DhᵀDh + DvᵀDv)`.
pub fn dense_normal_matrix(h: usize, w: usize, kernel: &BlurKernel, s: usize, gamma: f64) -> DMatrix<f64> {
    let sk = dense_decimate(h, w, s) * dense_blur(h, w, kernel);
    let dh = dense_dh(h, w);
    let dv = dense_dv(h, w);
    sk.transpose() * &sk + (dh.transpose() * &dh + dv.transpose() * &dv) * gamma
}

/// Blur-then-decimate by direct summation.
pub fn naive_sk_forward(hr: &Frame, taps: &[f64], k: usize, s: usize) -> Frame {
    let (h, w, c) = hr.dims();
    let r = k as isize / 2;
    Frame::from_fn(h / s, w / s, c, |i, j, ch| {
        let (ci, cj) = ((i * s) as isize, (j * s) as isize);
        let mut acc = 0.0;
        for a in 0..k {
            for b in 0..k {
                acc += taps[a * k + b] * hr.get(clamp(ci + a as isize - r, h), clamp(cj + b as isize - r, w), ch);
            }
        }
        acc
    })
}

pub fn naive_l1_loss(taps: &[f64], k: usize, pairs: &[(Frame, Frame)], s: usize) -> f64 {
    let per_pair: Vec<f64> = pairs
        .iter()
        .map(|(hr, lr)| {
            let p = naive_sk_forward(hr, taps, k, s);
            p.as_slice().iter().zip(lr.as_slice()).map(|(a, b)| (a - b).abs()).sum::<f64>() / lr.len() as f64
        })
        .collect();
    per_pair.iter().sum::<f64>() / per_pair.len() as f64
}

pub fn naive_softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let sum: f64 = e.iter().sum();
    e.iter().map(|v| v / sum).collect()
}

/// `softmax(W2·relu(W1·x + b1) + b2)` with parameters laid out as
/// `[W1 (hidden×n), b1, W2 (n×hidden), b2]`.
pub fn naive_net_taps(params: &[f64], n: usize, hidden: usize, x: &[f64]) -> Vec<f64> {
    let (w1, rest) = params.split_at(hidden * n);
    let (b1, rest) = rest.split_at(hidden);
    let (w2, b2) = rest.split_at(n * hidden);
    let a: Vec<f64> = (0..hidden)
        .map(|q| (b1[q] + (0..n).map(|m| w1[q * n + m] * x[m]).sum::<f64>()).max(0.0))
        .collect();
    let z: Vec<f64> = (0..n).map(|m| b2[m] + (0..hidden).map(|q| w2[m * hidden + q] * a[q]).sum::<f64>()).collect();
    naive_softmax(&z)
}

pub fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

/// Prints the verdict line and returns whether it passed.
pub fn report(id: u32, name: &str, pass: bool, detail: &str) -> bool {
    println!("{} criterion {id} ({name}): {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}
