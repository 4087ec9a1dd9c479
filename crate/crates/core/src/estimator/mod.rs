//! Blur-kernel estimation by minimizing the degradation-consistency loss
//! `mean |S·K·hr − lr|` over a set of HR/LR pairs.
//!
//! Two parameterizations share the loss: free softmax logits
//! ([`EstimatorMode::DirectLogits`]) and the two-layer [`KernelNet`]
//! ([`EstimatorMode::FcNet`]). Both start from a sampled Gaussian and are
//! optimized with bias-corrected first/second-moment steps; the best iterate
//! seen is returned.

mod loss;
mod net;
mod param;

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

pub use loss::{kernel_loss, loss_and_tap_grad, mean_kernel_loss, pairs_scale, KernelPair};
pub use net::{KernelNet, DEFAULT_HIDDEN};
pub use param::{gaussian_kernel, softmax_kernel, KernelLogits};

use crate::error::{cfg_err, Error, Result};
use crate::operators::{check_odd, BlurKernel};
use param::softmax_backward;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EstimatorMode {
    #[default]
    DirectLogits,
    FcNet,
}

impl FromStr for EstimatorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct-logits" => Ok(Self::DirectLogits),
            "fc-net" => Ok(Self::FcNet),
            other => cfg_err(format!("unknown estimator mode {other:?} (direct-logits | fc-net)")),
        }
    }
}

impl std::fmt::Display for EstimatorMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::DirectLogits => "direct-logits",
            Self::FcNet => "fc-net",
        })
    }
}

#[derive(Clone, Debug)]
pub struct EstimatorConfig {
    pub mode: EstimatorMode,
    /// Width of the Gaussian the estimate starts from.
    pub init_sigma: f64,
    pub kernel_size: usize,
    pub max_iters: usize,
    pub step_size: f64,
    /// Stop once the gradient norm falls below this.
    pub grad_tolerance: f64,
    /// Hidden width of the network in `fc-net` mode.
    pub hidden: usize,
    /// Seed for the network initialization in `fc-net` mode.
    pub seed: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            mode: EstimatorMode::DirectLogits,
            init_sigma: 2.0,
            kernel_size: 15,
            max_iters: 1000,
            step_size: 1e-2,
            grad_tolerance: 1e-9,
            hidden: DEFAULT_HIDDEN,
            seed: 0,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        check_odd(self.kernel_size)?;
        if self.max_iters == 0 {
            return cfg_err("max_iters must be at least 1");
        }
        if !(self.init_sigma > 0.0 && self.init_sigma.is_finite()) {
            return cfg_err(format!("init_sigma must be positive, got {}", self.init_sigma));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return cfg_err(format!("step_size must be positive, got {}", self.step_size));
        }
        if !(self.grad_tolerance >= 0.0) {
            return cfg_err("grad_tolerance must be >= 0");
        }
        if self.hidden == 0 {
            return cfg_err("hidden width must be positive");
        }
        Ok(())
    }
}

/// Loss and gradient w.r.t. the logits (through the softmax).
pub fn logits_loss_grad(logits: &KernelLogits, pairs: &[KernelPair], s: usize) -> Result<(f64, Vec<f64>)> {
    let kernel = softmax_kernel(logits);
    let (loss, tap_grad) = loss_and_tap_grad(&kernel, pairs, s)?;
    Ok((loss, softmax_backward(kernel.taps(), &tap_grad)))
}

/// Loss and gradient w.r.t. every network parameter, in [`KernelNet::params`] order.
pub fn net_loss_grad(net: &KernelNet, init: &BlurKernel, pairs: &[KernelPair], s: usize) -> Result<(f64, Vec<f64>)> {
    let fwd = net.forward_full(init)?;
    let kernel = BlurKernel::normalized(net.kernel_size(), fwd.probs.clone())?;
    let (loss, tap_grad) = loss_and_tap_grad(&kernel, pairs, s)?;
    // `normalized` rescales by a sum that is 1 up to rounding; the gradient is
    // taken w.r.t. the raw softmax output.
    Ok((loss, net.backward(init, &fwd, &tap_grad)))
}

/// Adaptive first-order optimizer with bias-corrected moment estimates.
#[derive(Clone, Debug)]
pub struct Adam {
    step_size: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(len: usize, step_size: f64) -> Self {
        Self { step_size, beta1: 0.9, beta2: 0.999, eps: 1e-8, t: 0, m: vec![0.0; len], v: vec![0.0; len] }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for ((p, g), (m, v)) in params.iter_mut().zip(grad).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= self.step_size * (*m / c1) / ((*v / c2).sqrt() + self.eps);
        }
    }
}

/// Outcome of [`estimate_kernel`].
#[derive(Clone, Debug)]
pub struct KernelEstimate {
    /// Lowest-objective kernel encountered.
    pub kernel: BlurKernel,
    /// Objective at every evaluated iterate; entry 0 is the initialization.
    pub history: Vec<f64>,
    pub best_iteration: usize,
    pub best_loss: f64,
    /// True if the gradient-norm tolerance stopped the run.
    pub converged: bool,
}

impl KernelEstimate {
    pub fn initial_loss(&self) -> f64 {
        self.history[0]
    }

    /// `iteration,objective` rows with a header.
    pub fn history_csv(&self) -> String {
        let mut s = String::from("iteration,objective\n");
        for (i, l) in self.history.iter().enumerate() {
            let _ = writeln!(s, "{i},{l:e}");
        }
        s
    }

    pub fn write_history_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.history_csv())?;
        Ok(())
    }
}

enum Params {
    Logits(KernelLogits),
    Net(KernelNet),
}

/// Estimates a blur kernel from HR/LR pairs, starting from a Gaussian of width
/// `cfg.init_sigma`. Runs `cfg.max_iters` optimizer steps unless the gradient
/// norm drops below `cfg.grad_tolerance` first.
pub fn estimate_kernel(pairs: &[KernelPair], cfg: &EstimatorConfig) -> Result<KernelEstimate> {
    cfg.validate()?;
    let s = pairs_scale(pairs)?;
    let init = gaussian_kernel(cfg.kernel_size, cfg.init_sigma)?;
    let mut params = match cfg.mode {
        EstimatorMode::DirectLogits => Params::Logits(KernelLogits::from_kernel(&init)),
        EstimatorMode::FcNet => Params::Net(KernelNet::seeded(&init, cfg.hidden, cfg.seed)?),
    };
    let n_params = match &params {
        Params::Logits(l) => l.values().len(),
        Params::Net(n) => n.params().len(),
    };
    let mut opt = Adam::new(n_params, cfg.step_size);

    let mut history = Vec::with_capacity(cfg.max_iters + 1);
    let mut best: Option<(usize, f64, BlurKernel)> = None;
    let mut converged = false;
    for it in 0..=cfg.max_iters {
        let (kernel, loss, grad) = match &params {
            Params::Logits(l) => {
                let (loss, g) = logits_loss_grad(l, pairs, s)?;
                (softmax_kernel(l), loss, g)
            }
            Params::Net(n) => {
                let (loss, g) = net_loss_grad(n, &init, pairs, s)?;
                (n.forward(&init)?, loss, g)
            }
        };
        if !loss.is_finite() {
            return Err(Error::Numerical(format!("kernel objective became {loss} at iteration {it}")));
        }
        history.push(loss);
        if best.as_ref().is_none_or(|(_, b, _)| loss < *b) {
            best = Some((it, loss, kernel));
        }
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        log::trace!("kernel iter {it}: loss {loss:.6e} |grad| {gnorm:.3e}");
        if gnorm < cfg.grad_tolerance {
            converged = true;
            break;
        }
        if it == cfg.max_iters {
            break;
        }
        match &mut params {
            Params::Logits(l) => opt.step(l.values_mut(), &grad),
            Params::Net(n) => opt.step(n.params_mut(), &grad),
        }
    }
    let (best_iteration, best_loss, kernel) = best.expect("at least one evaluation");
    log::debug!(
        "kernel estimate: best loss {best_loss:.6e} at iteration {best_iteration} of {}",
        history.len() - 1
    );
    Ok(KernelEstimate { kernel, history, best_iteration, best_loss, converged })
}
