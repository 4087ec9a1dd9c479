//! Degradation-consistency loss `mean |S·K·hr − lr|` and its gradient with
//! respect to the kernel taps.

use rayon::prelude::*;

use crate::error::{dim_err, Error, Result};
use crate::image::Frame;
use crate::operators::{sk_forward, BlurKernel};

/// A high-resolution frame and its observed low-resolution counterpart.
#[derive(Clone, Debug)]
pub struct KernelPair {
    pub hr: Frame,
    pub lr: Frame,
}

impl KernelPair {
    pub fn new(hr: Frame, lr: Frame) -> Result<Self> {
        let pair = Self { hr, lr };
        pair.scale()?;
        Ok(pair)
    }

    /// Integer scale `s` with `hr dims = s × lr dims`.
    pub fn scale(&self) -> Result<usize> {
        let (hh, hw, hc) = self.hr.dims();
        let (lh, lw, lc) = self.lr.dims();
        let s = hh / lh;
        if hc != lc || s == 0 || hh != s * lh || hw != s * lw {
            return dim_err(format!(
                "hr {:?} is not an integer multiple of lr {:?}",
                self.hr.dims(),
                self.lr.dims()
            ));
        }
        Ok(s)
    }
}

/// Common scale of a set of pairs.
pub fn pairs_scale(pairs: &[KernelPair]) -> Result<usize> {
    let first = pairs.first().ok_or_else(|| Error::Config("at least one kernel pair is required".into()))?;
    let s = first.scale()?;
    for (i, p) in pairs.iter().enumerate().skip(1) {
        if p.scale()? != s {
            return Err(Error::Config(format!("pair {i} has a different scale than pair 0")));
        }
    }
    Ok(s)
}

#[inline]
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Mean absolute error between `S·K·hr` and `lr`.
pub fn kernel_loss(kernel: &BlurKernel, hr: &Frame, lr: &Frame, s: usize) -> Result<f64> {
    let pred = sk_forward(hr, kernel, s)?;
    pred.check_same_dims(lr, "kernel_loss")?;
    let sum: f64 = pred.as_slice().iter().zip(lr.as_slice()).map(|(p, l)| (p - l).abs()).sum();
    Ok(sum / lr.len() as f64)
}

/// Loss of one pair plus the subgradient w.r.t. the kernel taps (`sign(0) = 0`).
fn pair_loss_and_tap_grad(kernel: &BlurKernel, pair: &KernelPair, s: usize) -> Result<(f64, Vec<f64>)> {
    let pred = sk_forward(&pair.hr, kernel, s)?;
    pred.check_same_dims(&pair.lr, "kernel_loss")?;
    let n = pair.lr.len() as f64;
    let (lh, lw, c) = pair.lr.dims();
    let (h, w) = (pair.hr.height(), pair.hr.width());
    let (k, r) = (kernel.size(), kernel.radius() as isize);
    let hr = pair.hr.as_slice();

    let mut loss = 0.0;
    let mut grad = vec![0.0; k * k];
    let mut g = vec![0.0; c];
    for i in 0..lh {
        for j in 0..lw {
            let base = (i * lw + j) * c;
            let mut any = false;
            for ch in 0..c {
                let res = pred.as_slice()[base + ch] - pair.lr.as_slice()[base + ch];
                loss += res.abs();
                g[ch] = sign(res);
                any |= g[ch] != 0.0;
            }
            if !any {
                continue;
            }
            for a in 0..k {
                let row = (i as isize * s as isize + a as isize - r).clamp(0, h as isize - 1) as usize;
                for b in 0..k {
                    let col = (j as isize * s as isize + b as isize - r).clamp(0, w as isize - 1) as usize;
                    let px = &hr[(row * w + col) * c..(row * w + col + 1) * c];
                    grad[a * k + b] += g.iter().zip(px).map(|(gc, x)| gc * x).sum::<f64>();
                }
            }
        }
    }
    grad.iter_mut().for_each(|v| *v /= n);
    Ok((loss / n, grad))
}

/// Mean loss over `pairs` and its gradient w.r.t. the kernel taps.
pub fn loss_and_tap_grad(kernel: &BlurKernel, pairs: &[KernelPair], s: usize) -> Result<(f64, Vec<f64>)> {
    if pairs.is_empty() {
        return Err(Error::Config("at least one kernel pair is required".into()));
    }
    let parts = pairs
        .par_iter()
        .map(|p| pair_loss_and_tap_grad(kernel, p, s))
        .collect::<Result<Vec<_>>>()?;
    let np = pairs.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; kernel.size() * kernel.size()];
    for (l, g) in parts {
        loss += l;
        grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
    }
    grad.iter_mut().for_each(|v| *v /= np);
    Ok((loss / np, grad))
}

/// Mean of [`kernel_loss`] over `pairs`.
pub fn mean_kernel_loss(kernel: &BlurKernel, pairs: &[KernelPair], s: usize) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Config("at least one kernel pair is required".into()));
    }
    let losses = pairs
        .par_iter()
        .map(|p| kernel_loss(kernel, &p.hr, &p.lr, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(losses.iter().sum::<f64>() / pairs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::gaussian_kernel;
    use crate::operators::{convolve2d, decimate, Boundary};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_frame(rng: &mut impl Rng, h: usize, w: usize, c: usize) -> Frame {
        Frame::from_fn(h, w, c, |_, _, _| rng.random::<f64>())
    }

    #[test]
    fn zero_on_consistent_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let hr = random_frame(&mut rng, 8, 8, 3);
        let k = gaussian_kernel(5, 1.0).unwrap();
        let lr = sk_forward(&hr, &k, 2).unwrap();
        assert_eq!(kernel_loss(&k, &hr, &lr, 2).unwrap(), 0.0);
        let pair = KernelPair::new(hr, lr).unwrap();
        let (l, g) = loss_and_tap_grad(&k, &[pair], 2).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn uniform_offset_gives_offset() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let hr = random_frame(&mut rng, 8, 8, 1);
        let k = gaussian_kernel(3, 0.7).unwrap();
        let lr = sk_forward(&hr, &k, 2).unwrap().map(|v| v + 0.1);
        assert!((kernel_loss(&k, &hr, &lr, 2).unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn matches_composed_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let hr = random_frame(&mut rng, 6, 6, 2);
        let lr = random_frame(&mut rng, 3, 3, 2);
        let k = gaussian_kernel(3, 0.9).unwrap();
        let pred = decimate(&convolve2d(&hr, &k, Boundary::Replicate), 2).unwrap();
        let want = pred.as_slice().iter().zip(lr.as_slice()).map(|(p, l)| (p - l).abs()).sum::<f64>() / 18.0;
        assert!((kernel_loss(&k, &hr, &lr, 2).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn dimension_checks() {
        let hr = Frame::filled(8, 8, 1, 0.5);
        let lr = Frame::filled(3, 4, 1, 0.5);
        assert!(KernelPair::new(hr.clone(), lr).is_err());
        let k = gaussian_kernel(3, 1.0).unwrap();
        assert!(kernel_loss(&k, &hr, &Frame::filled(4, 4, 1, 0.0), 4).is_err());
        let a = KernelPair::new(hr.clone(), Frame::filled(4, 4, 1, 0.0)).unwrap();
        let b = KernelPair::new(hr, Frame::filled(2, 2, 1, 0.0)).unwrap();
        assert!(pairs_scale(&[a, b]).is_err());
        assert!(pairs_scale(&[]).is_err());
    }
}
