//! Packed restorer input and the restorers that consume it.

use std::path::PathBuf;
use std::process::Command;

use super::interchange::{read_packed_dir, write_packed_dir};
use crate::error::{dim_err, Error, Result};
use crate::image::{clamp01, depth_to_space, space_to_depth, Frame};
use crate::io::read_png;

/// Block order inside [`RestorerInput::packed`].
pub const BLOCK_ORDER: [&str; 3] = ["guide_next", "intermediate", "guide_prev"];

/// Space-to-depth of `(guide_next, intermediate, guide_prev)`, concatenated
/// along channels in that order.
#[derive(Clone, Debug, PartialEq)]
pub struct RestorerInput {
    pub packed: Frame,
    pub scale: usize,
}

impl RestorerInput {
    /// Channels per block (`C·s²`).
    pub fn block_channels(&self) -> usize {
        self.packed.channels() / 3
    }

    /// Channels of the HR frames (`C`).
    pub fn source_channels(&self) -> usize {
        self.block_channels() / (self.scale * self.scale)
    }

    /// Recovers block `index` (0 = next guide, 1 = intermediate, 2 = previous guide) at HR size.
    pub fn unpack(&self, index: usize) -> Result<Frame> {
        if index > 2 {
            return dim_err(format!("block index {index} out of range"));
        }
        let bc = self.block_channels();
        depth_to_space(&self.packed.channel_range(index * bc, bc)?, self.scale)
    }

    pub fn guide_next(&self) -> Result<Frame> {
        self.unpack(0)
    }

    pub fn intermediate(&self) -> Result<Frame> {
        self.unpack(1)
    }

    pub fn guide_prev(&self) -> Result<Frame> {
        self.unpack(2)
    }
}

pub fn pack_restorer_input(guide_next: &Frame, intermediate: &Frame, guide_prev: &Frame, s: usize) -> Result<RestorerInput> {
    intermediate.check_same_dims(guide_next, "pack_restorer_input")?;
    intermediate.check_same_dims(guide_prev, "pack_restorer_input")?;
    let blocks = [guide_next, intermediate, guide_prev]
        .iter()
        .map(|f| space_to_depth(f, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(RestorerInput { packed: Frame::concat_channels(&blocks)?, scale: s })
}

/// Per-pixel weighted average of the three blocks. Each guide is weighted by
/// `exp(−d/h)`, `d` being its mean absolute deviation from `ref_bicubic` over
/// channels at that pixel; the intermediate has weight 1. Output is clamped.
pub fn fuse_confidence(input: &RestorerInput, ref_bicubic: &Frame, bandwidth: f64) -> Result<Frame> {
    let next = input.guide_next()?;
    let mid = input.intermediate()?;
    let prev = input.guide_prev()?;
    mid.check_same_dims(ref_bicubic, "fuse_confidence")?;
    let (h, w, c) = mid.dims();
    let (gn, im, gp, rb) = (next.as_slice(), mid.as_slice(), prev.as_slice(), ref_bicubic.as_slice());
    let mut out = Vec::with_capacity(h * w * c);
    for px in 0..h * w {
        let span = px * c..(px + 1) * c;
        let dev = |g: &[f64]| {
            g[span.clone()].iter().zip(&rb[span.clone()]).map(|(a, b)| (a - b).abs()).sum::<f64>() / c as f64
        };
        let wn = (-dev(gn) / bandwidth).exp();
        let wp = (-dev(gp) / bandwidth).exp();
        let norm = wn + 1.0 + wp;
        for k in span.clone() {
            out.push((wn * gn[k] + im[k] + wp * gp[k]) / norm);
        }
    }
    Ok(clamp01(&Frame::from_vec_unchecked(h, w, c, out)))
}

/// Mean absolute error.
pub fn l1_loss(pred: &Frame, truth: &Frame) -> Result<f64> {
    pred.check_same_dims(truth, "l1_loss")?;
    Ok(pred.as_slice().iter().zip(truth.as_slice()).map(|(a, b)| (a - b).abs()).sum::<f64>() / pred.len() as f64)
}

/// Turns packed guides + intermediate into the final HR frame.
pub trait Restorer: Sync {
    fn restore(&self, input: &RestorerInput, ref_bicubic: &Frame, frame_index: usize) -> Result<Frame>;
}

#[derive(Clone, Debug)]
pub struct ConfidenceFusion {
    pub bandwidth: f64,
}

impl Restorer for ConfidenceFusion {
    fn restore(&self, input: &RestorerInput, ref_bicubic: &Frame, _frame_index: usize) -> Result<Frame> {
        fuse_confidence(input, ref_bicubic, self.bandwidth)
    }
}

/// Runs `program args... <packed_dir> <output.png>` for each frame, after
/// writing the packed input as an interchange directory.
#[derive(Clone, Debug)]
pub struct ExternalRestorer {
    pub program: String,
    pub args: Vec<String>,
    pub work_dir: PathBuf,
}

impl ExternalRestorer {
    /// Splits a whitespace-separated command line.
    pub fn from_command(command: &str, work_dir: PathBuf) -> Result<Self> {
        let mut parts = command.split_whitespace().map(str::to_owned);
        let program = parts.next().ok_or_else(|| Error::Config("empty external restorer command".into()))?;
        Ok(Self { program, args: parts.collect(), work_dir })
    }
}

impl Restorer for ExternalRestorer {
    fn restore(&self, input: &RestorerInput, ref_bicubic: &Frame, frame_index: usize) -> Result<Frame> {
        let dir = self.work_dir.join(format!("packed_{frame_index:06}"));
        write_packed_dir(&dir, input, ref_bicubic, frame_index)?;
        let out = dir.join("restored.png");
        let status = Command::new(&self.program).args(&self.args).arg(&dir).arg(&out).status()?;
        if !status.success() {
            return Err(Error::Numerical(format!("external restorer {} exited with {status}", self.program)));
        }
        let frame = clamp01(&read_png(&out)?);
        frame.check_same_dims(ref_bicubic, "external restorer output")?;
        Ok(frame)
    }
}

/// Applies [`fuse_confidence`] to an interchange directory; the inverse side
/// of [`ExternalRestorer`].
pub fn fuse_packed_dir(dir: &std::path::Path, bandwidth: f64) -> Result<Frame> {
    let packed = read_packed_dir(dir)?;
    fuse_confidence(&packed.input, &packed.reference, bandwidth)
}
