//! Gradient-regularized least-squares deconvolution:
//!
//! ```text
//! x* = argmin ‖S·K·x − L‖² + γ (‖D_h x‖² + ‖D_v x‖²)
//! (Kᵀ Sᵀ S K + γ (D_hᵀ D_h + D_vᵀ D_v)) x* = Kᵀ Sᵀ L
//! ```
//!
//! With replicate boundaries and decimation the system matrix is not
//! diagonalized by the DFT, so the normal equations are solved per channel
//! with conjugate gradient.

use rayon::prelude::*;

use crate::error::{cfg_err, Result};
use crate::image::{bicubic_resize_unclamped, Frame};
use crate::operators::{gradient_normal, sk_adjoint, sk_forward, BlurKernel};
use crate::solver::{conjugate_gradient, CgReport};

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Weight of the gradient penalty.
    pub gamma: f64,
    /// Target relative residual `‖Ax − b‖ / ‖b‖`.
    pub cg_tolerance: f64,
    pub cg_max_iters: usize,
    /// Start CG from the bicubic upsampling instead of zero.
    pub warm_start: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { gamma: 0.02, cg_tolerance: 1e-6, cg_max_iters: 200, warm_start: false }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return cfg_err(format!("gamma must be >= 0, got {}", self.gamma));
        }
        if !(self.cg_tolerance >= 0.0) {
            return cfg_err("cg_tolerance must be >= 0");
        }
        if self.cg_max_iters == 0 {
            return cfg_err("cg_max_iters must be at least 1");
        }
        Ok(())
    }
}

/// `(Kᵀ Sᵀ S K + γ (D_vᵀ D_v + D_hᵀ D_h)) x`, channel by channel.
pub fn normal_operator_apply(x: &Frame, kernel: &BlurKernel, s: usize, gamma: f64) -> Result<Frame> {
    let data = sk_adjoint(&sk_forward(x, kernel, s)?, kernel, s);
    if gamma == 0.0 {
        return Ok(data);
    }
    data.zip_map(&gradient_normal(x), |d, l| d + gamma * l)
}

#[derive(Clone, Debug)]
pub struct DeconvReport {
    pub channels: Vec<CgReport>,
    /// Set when `γ = 0` and `s > 1`: the system is rank-deficient and CG
    /// convergence is not guaranteed.
    pub singular_warning: bool,
}

impl DeconvReport {
    pub fn converged(&self) -> bool {
        self.channels.iter().all(|c| c.converged)
    }
}

#[derive(Clone, Debug)]
pub struct Deconvolved {
    /// Restored high-resolution frame; not clamped.
    pub frame: Frame,
    pub report: DeconvReport,
}

/// Restores an HR frame from `lr` given the blur kernel and scale.
pub fn deconvolve(lr: &Frame, kernel: &BlurKernel, s: usize, cfg: &SolverConfig) -> Result<Deconvolved> {
    cfg.validate()?;
    if s == 0 {
        return cfg_err("scale must be positive");
    }
    let singular_warning = cfg.gamma == 0.0 && s > 1;
    if singular_warning {
        log::warn!("gamma = 0 with scale {s}: normal equations are singular, CG may not converge");
    }
    let (lh, lw, c) = lr.dims();
    let (h, w) = (lh * s, lw * s);
    let start = if cfg.warm_start { Some(bicubic_resize_unclamped(lr, s as f64)?) } else { None };

    let solved = (0..c)
        .into_par_iter()
        .map(|ch| -> Result<(Vec<f64>, CgReport)> {
            let lr_c = lr.channel(ch);
            let b = sk_adjoint(&lr_c, kernel, s).into_vec();
            let mut x = match &start {
                Some(f) => f.channel(ch).into_vec(),
                None => vec![0.0; h * w],
            };
            let apply = |v: &[f64]| {
                let f = Frame::from_vec_unchecked(h, w, 1, v.to_vec());
                normal_operator_apply(&f, kernel, s, cfg.gamma).expect("dims checked").into_vec()
            };
            let rep = conjugate_gradient(apply, &b, &mut x, cfg.cg_tolerance, cfg.cg_max_iters, |_, _| {});
            log::debug!(
                "deconvolve channel {ch}: {} iterations, relative residual {:.3e}",
                rep.iterations,
                rep.relative_residual
            );
            Ok((x, rep))
        })
        .collect::<Result<Vec<_>>>()?;

    let planes: Vec<Frame> = solved.iter().map(|(x, _)| Frame::from_vec_unchecked(h, w, 1, x.clone())).collect();
    let frame = Frame::concat_channels(&planes)?;
    let channels = solved.into_iter().map(|(_, r)| r).collect();
    Ok(Deconvolved { frame, report: DeconvReport { channels, singular_warning } })
}
