//! Optical flow between bicubic-upsampled neighbours and the warped guide
//! frames used by the fusion stage.

mod flo;
mod horn_schunck;

use std::str::FromStr;

pub use flo::{decode_flo, encode_flo, read_flo, write_flo, FLO_MAGIC};

use crate::error::{cfg_err, Error, Result};
use crate::image::{bicubic_resize, Frame};
use crate::operators::{warp, FlowField};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FlowEstimator {
    #[default]
    HornSchunckPyramidal,
    /// Flows are supplied as `.flo` files instead of being estimated.
    External,
}

impl FromStr for FlowEstimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "horn-schunck-pyramidal" => Ok(Self::HornSchunckPyramidal),
            "external" => Ok(Self::External),
            other => cfg_err(format!("unknown flow estimator {other:?} (horn-schunck-pyramidal | external)")),
        }
    }
}

impl std::fmt::Display for FlowEstimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::HornSchunckPyramidal => "horn-schunck-pyramidal",
            Self::External => "external",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowConfig {
    pub estimator: FlowEstimator,
    pub pyramid_levels: usize,
    /// Smoothness weight α, for intensities in 8-bit units.
    pub smoothness_weight: f64,
    pub iters_per_level: usize,
    pub warp_steps_per_level: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            estimator: FlowEstimator::HornSchunckPyramidal,
            pyramid_levels: 4,
            smoothness_weight: 15.0,
            iters_per_level: 100,
            warp_steps_per_level: 3,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pyramid_levels == 0 {
            return cfg_err("pyramid_levels must be at least 1");
        }
        if !(self.smoothness_weight > 0.0 && self.smoothness_weight.is_finite()) {
            return cfg_err(format!("smoothness weight must be positive, got {}", self.smoothness_weight));
        }
        Ok(())
    }
}

/// Estimates `u` with `source(x + u(x)) ≈ target(x)` on luminance.
pub fn estimate_flow(target: &Frame, source: &Frame, cfg: &FlowConfig) -> Result<FlowField> {
    cfg.validate()?;
    target.check_same_dims(source, "estimate_flow")?;
    match cfg.estimator {
        FlowEstimator::HornSchunckPyramidal => Ok(horn_schunck::horn_schunck_pyramidal(target, source, cfg)),
        FlowEstimator::External => cfg_err("external flows must be supplied as files, not estimated"),
    }
}

/// Neighbour frames upsampled and motion-compensated onto the reference.
#[derive(Clone, Debug)]
pub struct AlignedGuides {
    pub prev: Frame,
    pub next: Frame,
    pub flow_prev: FlowField,
    pub flow_next: FlowField,
    /// Bicubic upsampling of the reference frame.
    pub reference: Frame,
}

/// Upsamples the three LR frames by `s`, estimates `u_{prev→ref}` and
/// `u_{next→ref}` against the upsampled reference, and warps the upsampled
/// neighbours onto it.
pub fn align_guides(prev: &Frame, reference: &Frame, next: &Frame, s: usize, cfg: &FlowConfig) -> Result<AlignedGuides> {
    prev.check_same_dims(reference, "align_guides")?;
    next.check_same_dims(reference, "align_guides")?;
    let up_ref = bicubic_resize(reference, s as f64)?;
    let up_prev = bicubic_resize(prev, s as f64)?;
    let up_next = bicubic_resize(next, s as f64)?;
    let (flow_prev, flow_next) = rayon::join(
        || estimate_flow(&up_ref, &up_prev, cfg),
        || estimate_flow(&up_ref, &up_next, cfg),
    );
    warp_guides(up_prev, up_ref, up_next, flow_prev?, flow_next?)
}

/// [`align_guides`] with precomputed HR-resolution flows.
pub fn align_guides_with_flows(
    prev: &Frame,
    reference: &Frame,
    next: &Frame,
    s: usize,
    flow_prev: FlowField,
    flow_next: FlowField,
) -> Result<AlignedGuides> {
    prev.check_same_dims(reference, "align_guides")?;
    next.check_same_dims(reference, "align_guides")?;
    let up_ref = bicubic_resize(reference, s as f64)?;
    let up_prev = bicubic_resize(prev, s as f64)?;
    let up_next = bicubic_resize(next, s as f64)?;
    warp_guides(up_prev, up_ref, up_next, flow_prev, flow_next)
}

fn warp_guides(
    up_prev: Frame,
    up_ref: Frame,
    up_next: Frame,
    flow_prev: FlowField,
    flow_next: FlowField,
) -> Result<AlignedGuides> {
    Ok(AlignedGuides {
        prev: warp(&up_prev, &flow_prev)?,
        next: warp(&up_next, &flow_next)?,
        flow_prev,
        flow_next,
        reference: up_ref,
    })
}
