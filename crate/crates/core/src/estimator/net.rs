//! Two fully connected layers mapping an initial kernel to a refined one:
//! `softmax(W2 · relu(W1 · vec(init) + b1) + b2)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::param::{kernel_from_probs, log_taps, softmax, softmax_backward};
use crate::error::{cfg_err, Result};
use crate::operators::{check_odd, BlurKernel};

/// Width of the hidden layer in the reference configuration.
pub const DEFAULT_HIDDEN: usize = 1000;

/// Network weights, stored flat as `[W1 (hidden×n), b1 (hidden), W2 (n×hidden), b2 (n)]`
/// with `n = k²`; matrices are row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelNet {
    kernel_size: usize,
    hidden: usize,
    params: Vec<f64>,
}

/// Intermediate activations kept for the backward pass.
pub(crate) struct NetForward {
    pub pre: Vec<f64>,
    pub hidden: Vec<f64>,
    pub probs: Vec<f64>,
}

impl KernelNet {
    pub fn param_count(kernel_size: usize, hidden: usize) -> usize {
        let n = kernel_size * kernel_size;
        2 * hidden * n + hidden + n
    }

    pub fn from_params(kernel_size: usize, hidden: usize, params: Vec<f64>) -> Result<Self> {
        check_odd(kernel_size)?;
        if hidden == 0 {
            return cfg_err("hidden layer must be non-empty");
        }
        if params.len() != Self::param_count(kernel_size, hidden) {
            return cfg_err(format!(
                "expected {} parameters, got {}",
                Self::param_count(kernel_size, hidden),
                params.len()
            ));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return cfg_err("network weights must be finite");
        }
        Ok(Self { kernel_size, hidden, params })
    }

    /// Seeded initialization whose output equals `init` exactly up to the log
    /// floor: `W1 ~ N(0, 1/n)`, `b1 = 0.1`, `W2 = 0`, `b2 = log(init)`.
    pub fn seeded(init: &BlurKernel, hidden: usize, seed: u64) -> Result<Self> {
        let k = init.size();
        let n = k * k;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0 / (n as f64).sqrt()).expect("finite std");
        let mut params = Vec::with_capacity(Self::param_count(k, hidden));
        params.extend((0..hidden * n).map(|_| normal.sample(&mut rng)));
        params.extend(std::iter::repeat_n(0.1, hidden));
        params.extend(std::iter::repeat_n(0.0, n * hidden));
        params.extend(log_taps(init));
        Self::from_params(k, hidden, params)
    }

    pub fn kernel_size(&self) -> usize {
        self.kernel_size
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub(crate) fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let n = self.kernel_size * self.kernel_size;
        let b1 = self.hidden * n;
        let w2 = b1 + self.hidden;
        let b2 = w2 + n * self.hidden;
        (b1, w2, b2)
    }

    pub(crate) fn forward_full(&self, init: &BlurKernel) -> Result<NetForward> {
        if init.size() != self.kernel_size {
            return cfg_err(format!(
                "network expects a {0}x{0} input kernel, got {1}x{1}",
                self.kernel_size,
                init.size()
            ));
        }
        let n = self.kernel_size * self.kernel_size;
        let (ob1, ow2, ob2) = self.offsets();
        let x = init.taps();
        let p = &self.params;
        let pre: Vec<f64> = (0..self.hidden)
            .map(|h| {
                let row = &p[h * n..(h + 1) * n];
                p[ob1 + h] + row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>()
            })
            .collect();
        let hidden: Vec<f64> = pre.iter().map(|v| v.max(0.0)).collect();
        let logits: Vec<f64> = (0..n)
            .map(|m| {
                let row = &p[ow2 + m * self.hidden..ow2 + (m + 1) * self.hidden];
                p[ob2 + m] + row.iter().zip(&hidden).map(|(w, hv)| w * hv).sum::<f64>()
            })
            .collect();
        let probs = softmax(&logits);
        Ok(NetForward { pre, hidden, probs })
    }

    pub fn forward(&self, init: &BlurKernel) -> Result<BlurKernel> {
        let f = self.forward_full(init)?;
        Ok(kernel_from_probs(self.kernel_size, f.probs))
    }

    /// Backpropagates a gradient w.r.t. the output taps to all parameters.
    pub(crate) fn backward(&self, init: &BlurKernel, fwd: &NetForward, grad_taps: &[f64]) -> Vec<f64> {
        let n = self.kernel_size * self.kernel_size;
        let (ob1, ow2, ob2) = self.offsets();
        let gz = softmax_backward(&fwd.probs, grad_taps);
        let mut grad = vec![0.0; self.params.len()];

        // second layer
        let mut gh = vec![0.0; self.hidden];
        for m in 0..n {
            let w_row = &self.params[ow2 + m * self.hidden..ow2 + (m + 1) * self.hidden];
            let g_row = &mut grad[ow2 + m * self.hidden..ow2 + (m + 1) * self.hidden];
            for h in 0..self.hidden {
                g_row[h] = gz[m] * fwd.hidden[h];
                gh[h] += w_row[h] * gz[m];
            }
            grad[ob2 + m] = gz[m];
        }
        // relu, first layer
        let x = init.taps();
        for h in 0..self.hidden {
            let gp = if fwd.pre[h] > 0.0 { gh[h] } else { 0.0 };
            if gp != 0.0 {
                grad[h * n..(h + 1) * n].iter_mut().zip(x).for_each(|(g, xi)| *g = gp * xi);
            }
            grad[ob1 + h] = gp;
        }
        grad
    }
}
