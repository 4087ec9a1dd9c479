//! Kernel parameterizations: sampled Gaussians and softmax over free logits.

use crate::error::{cfg_err, Result};
use crate::operators::{check_odd, BlurKernel};

/// Smallest tap value used when taking logarithms of a kernel.
const LOG_FLOOR: f64 = 1e-30;

/// Isotropic Gaussian sampled at integer offsets from the centre, normalized to unit sum.
pub fn gaussian_kernel(size: usize, sigma: f64) -> Result<BlurKernel> {
    check_odd(size)?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return cfg_err(format!("gaussian sigma must be positive, got {sigma}"));
    }
    let r = (size / 2) as f64;
    let inv = 1.0 / (2.0 * sigma * sigma);
    let mut taps = Vec::with_capacity(size * size);
    for a in 0..size {
        for b in 0..size {
            let (dy, dx) = (a as f64 - r, b as f64 - r);
            taps.push((-(dy * dy + dx * dx) * inv).exp());
        }
    }
    BlurKernel::normalized(size, taps)
}

/// Unconstrained `k × k` pre-softmax kernel parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelLogits {
    size: usize,
    values: Vec<f64>,
}

impl KernelLogits {
    pub fn new(size: usize, values: Vec<f64>) -> Result<Self> {
        check_odd(size)?;
        if values.len() != size * size {
            return cfg_err(format!("{} logits for kernel size {size}", values.len()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return cfg_err("logits must be finite");
        }
        Ok(Self { size, values })
    }

    /// Log-taps of `kernel` (floored), so that `softmax_kernel` reproduces it.
    pub fn from_kernel(kernel: &BlurKernel) -> Self {
        Self {
            size: kernel.size(),
            values: log_taps(kernel),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

pub(crate) fn log_taps(kernel: &BlurKernel) -> Vec<f64> {
    kernel.taps().iter().map(|t| t.max(LOG_FLOOR).ln()).collect()
}

/// Numerically stable softmax of a logit vector.
pub(crate) fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = e.iter().sum();
    e.iter_mut().for_each(|v| *v /= sum);
    e
}

/// Pulls a gradient w.r.t. softmax outputs back to the logits:
/// `dz_m = p_m (g_m - Σ_n p_n g_n)`.
pub(crate) fn softmax_backward(p: &[f64], grad_p: &[f64]) -> Vec<f64> {
    let inner: f64 = p.iter().zip(grad_p).map(|(a, b)| a * b).sum();
    p.iter().zip(grad_p).map(|(pm, gm)| pm * (gm - inner)).collect()
}

pub(crate) fn kernel_from_probs(size: usize, probs: Vec<f64>) -> BlurKernel {
    BlurKernel::normalized(size, probs).expect("softmax output is a valid kernel")
}

/// Maps logits to a valid kernel: `exp(z_i - max z) / Σ exp(z_j - max z)`.
pub fn softmax_kernel(logits: &KernelLogits) -> BlurKernel {
    kernel_from_probs(logits.size, softmax(&logits.values))
}
