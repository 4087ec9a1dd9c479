//! End-to-end super-resolution of a three-frame window:
//!
//! 1. deconvolve the reference LR frame with the kernel → intermediate HR frame
//! 2. bicubic-upsample all three frames, estimate flow onto the reference and
//!    warp the neighbours → guides
//! 3. space-to-depth pack `(next guide, intermediate, previous guide)`
//! 4. restore (confidence fusion by default, or an external program)
//!
//! Sequences use one kernel for all frames and replicate the reference frame
//! where a neighbour is missing.

mod interchange;
mod restorer;

use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;

pub use interchange::{read_packed_dir, write_packed_dir, PackedDir, MANIFEST, REFERENCE};
pub use restorer::{
    fuse_confidence, fuse_packed_dir, l1_loss, pack_restorer_input, ConfidenceFusion, ExternalRestorer, Restorer,
    RestorerInput, BLOCK_ORDER,
};

use crate::deconv::{deconvolve, DeconvReport, SolverConfig};
use crate::error::{cfg_err, Error, Result};
use crate::estimator::{estimate_kernel, EstimatorConfig, KernelEstimate, KernelPair};
use crate::flow::{align_guides, align_guides_with_flows, read_flo, AlignedGuides, FlowConfig, FlowEstimator};
use crate::image::{bicubic_resize, Frame, Sequence};
use crate::operators::{BlurKernel, FlowField};

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum RestorerKind {
    #[default]
    ConfidenceFusion,
    /// Command line of an external restorer; it is called as
    /// `<command...> <packed_dir> <output.png>`.
    External(String),
}

impl FromStr for RestorerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "confidence-fusion" => Ok(Self::ConfidenceFusion),
            "external" => cfg_err("external restorer needs a command (restorer_cmd)"),
            other => cfg_err(format!("unknown restorer {other:?} (confidence-fusion | external)")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub scale: usize,
    pub estimator: EstimatorConfig,
    pub solver: SolverConfig,
    pub flow: FlowConfig,
    pub restorer: RestorerKind,
    pub fusion_bandwidth: f64,
    /// Directory of `frame_%06d_prev.flo` / `frame_%06d_next.flo` when the
    /// flow estimator is `external`.
    pub flow_dir: Option<PathBuf>,
    /// Scratch space for external restorers.
    pub work_dir: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            scale: 4,
            estimator: EstimatorConfig::default(),
            solver: SolverConfig::default(),
            flow: FlowConfig::default(),
            restorer: RestorerKind::ConfidenceFusion,
            fusion_bandwidth: 0.05,
            flow_dir: None,
            work_dir: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.scale) {
            return cfg_err(format!("scale must be 1, 2, 3 or 4, got {}", self.scale));
        }
        if !(self.fusion_bandwidth > 0.0 && self.fusion_bandwidth.is_finite()) {
            return cfg_err(format!("fusion bandwidth must be positive, got {}", self.fusion_bandwidth));
        }
        if self.flow.estimator == FlowEstimator::External && self.flow_dir.is_none() {
            return cfg_err("external flow estimator needs flow_dir");
        }
        self.estimator.validate()?;
        self.solver.validate()?;
        self.flow.validate()
    }

    fn make_restorer(&self) -> Result<Box<dyn Restorer>> {
        Ok(match &self.restorer {
            RestorerKind::ConfidenceFusion => Box::new(ConfidenceFusion { bandwidth: self.fusion_bandwidth }),
            RestorerKind::External(cmd) => {
                let work = self
                    .work_dir
                    .clone()
                    .unwrap_or_else(|| std::env::temp_dir().join(format!("blind-vsr-{}", std::process::id())));
                Box::new(ExternalRestorer::from_command(cmd, work)?)
            }
        })
    }
}

/// Flow statistics of one window, for run logs.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowStats {
    pub prev_mean: (f64, f64),
    pub next_mean: (f64, f64),
    pub prev_max: f64,
    pub next_max: f64,
}

impl FlowStats {
    fn from_guides(g: &AlignedGuides) -> Self {
        let (h, w) = (g.flow_prev.height(), g.flow_prev.width());
        Self {
            prev_mean: g.flow_prev.mean_in(0, h, 0, w),
            next_mean: g.flow_next.mean_in(0, h, 0, w),
            prev_max: g.flow_prev.max_magnitude(),
            next_max: g.flow_next.max_magnitude(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct FrameResult {
    pub frame: Frame,
    pub deconv: DeconvReport,
    pub flow: FlowStats,
}

fn check_window(prev: &Frame, reference: &Frame, next: &Frame, cfg: &PipelineConfig) -> Result<()> {
    cfg.validate()?;
    prev.check_same_dims(reference, "superresolve_frame")?;
    next.check_same_dims(reference, "superresolve_frame")
}

fn finish_window(
    reference: &Frame,
    kernel: &BlurKernel,
    cfg: &PipelineConfig,
    frame_index: usize,
    align: impl FnOnce() -> Result<AlignedGuides> + Send,
) -> Result<FrameResult> {
    let (deconvolved, guides) = rayon::join(|| deconvolve(reference, kernel, cfg.scale, &cfg.solver), align);
    let (deconvolved, guides) = (deconvolved?, guides?);
    let packed = pack_restorer_input(&guides.next, &deconvolved.frame, &guides.prev, cfg.scale)?;
    let frame = cfg.make_restorer()?.restore(&packed, &guides.reference, frame_index)?;
    Ok(FrameResult { frame, deconv: deconvolved.report, flow: FlowStats::from_guides(&guides) })
}

/// Super-resolves `reference` using its two neighbours and a known kernel.
pub fn superresolve_frame(
    prev: &Frame,
    reference: &Frame,
    next: &Frame,
    kernel: &BlurKernel,
    cfg: &PipelineConfig,
) -> Result<Frame> {
    superresolve_frame_detailed(prev, reference, next, kernel, cfg, 0).map(|r| r.frame)
}

pub fn superresolve_frame_detailed(
    prev: &Frame,
    reference: &Frame,
    next: &Frame,
    kernel: &BlurKernel,
    cfg: &PipelineConfig,
    frame_index: usize,
) -> Result<FrameResult> {
    check_window(prev, reference, next, cfg)?;
    finish_window(reference, kernel, cfg, frame_index, || {
        align_guides(prev, reference, next, cfg.scale, &cfg.flow)
    })
}

/// Like [`superresolve_frame_detailed`] with precomputed HR flows onto the reference.
pub fn superresolve_frame_with_flows(
    prev: &Frame,
    reference: &Frame,
    next: &Frame,
    flows: (FlowField, FlowField),
    kernel: &BlurKernel,
    cfg: &PipelineConfig,
    frame_index: usize,
) -> Result<FrameResult> {
    check_window(prev, reference, next, cfg)?;
    finish_window(reference, kernel, cfg, frame_index, || {
        align_guides_with_flows(prev, reference, next, cfg.scale, flows.0, flows.1)
    })
}

pub fn external_flow_paths(dir: &std::path::Path, index: usize) -> (PathBuf, PathBuf) {
    (
        dir.join(format!("frame_{index:06}_prev.flo")),
        dir.join(format!("frame_{index:06}_next.flo")),
    )
}

/// Pseudo HR/LR pairs for blind estimation: each LR frame (cropped to a
/// multiple of `s`) serves as HR, and its antialiased bicubic downscaling by
/// `s` as LR.
pub fn blind_kernel_pairs(seq: &Sequence, s: usize) -> Result<Vec<KernelPair>> {
    let (h, w, c) = seq.dims();
    let (ch, cw) = (h / s * s, w / s * s);
    if ch == 0 || cw == 0 {
        return cfg_err(format!("{h}x{w} frames are too small for blind estimation at scale {s}"));
    }
    seq.frames()
        .iter()
        .map(|f| {
            let hr = if (ch, cw) == (h, w) {
                f.clone()
            } else {
                Frame::from_fn(ch, cw, c, |i, j, k| f.get(i, j, k))
            };
            let lr = bicubic_resize(&hr, 1.0 / s as f64)?;
            KernelPair::new(hr, lr)
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct SequenceResult {
    pub frames: Sequence,
    pub kernel: BlurKernel,
    /// Present when the kernel was estimated blindly.
    pub estimate: Option<KernelEstimate>,
    pub reports: Vec<FrameResult>,
}

/// Blind mode: estimates one kernel from the sequence itself, then
/// super-resolves every frame with it.
pub fn superresolve_sequence(seq: &Sequence, cfg: &PipelineConfig) -> Result<SequenceResult> {
    cfg.validate()?;
    let pairs = blind_kernel_pairs(seq, cfg.scale)?;
    let estimate = estimate_kernel(&pairs, &cfg.estimator)?;
    let mut result = superresolve_sequence_with_kernel(seq, &estimate.kernel, cfg)?;
    result.estimate = Some(estimate);
    Ok(result)
}

pub fn superresolve_sequence_with_kernel(seq: &Sequence, kernel: &BlurKernel, cfg: &PipelineConfig) -> Result<SequenceResult> {
    cfg.validate()?;
    let frames = seq.frames();
    let n = frames.len();
    let reports = (0..n)
        .into_par_iter()
        .map(|i| {
            let reference = &frames[i];
            let prev = if i > 0 { &frames[i - 1] } else { reference };
            let next = if i + 1 < n { &frames[i + 1] } else { reference };
            match (&cfg.flow.estimator, &cfg.flow_dir) {
                (FlowEstimator::External, Some(dir)) => {
                    let (pp, np) = external_flow_paths(dir, i);
                    let flows = (read_flo(pp)?, read_flo(np)?);
                    superresolve_frame_with_flows(prev, reference, next, flows, kernel, cfg, i)
                }
                _ => superresolve_frame_detailed(prev, reference, next, kernel, cfg, i),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let out = Sequence::new(reports.iter().map(|r| r.frame.clone()).collect())?;
    Ok(SequenceResult { frames: out, kernel: kernel.clone(), estimate: None, reports })
}
