//! Frame containers and the resampling / rearrangement primitives shared by
//! every other module.
//!
//! Samples are `f64`, nominally in `[0, 1]`, stored row-major with channels
//! interleaved. Linear operators never clamp; clamping happens only in
//! [`clamp01`], after [`bicubic_resize`], and on final pipeline output.

use crate::error::{dim_err, Error, Result};

/// A single image: `height × width × channels` finite samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Frame {
    /// Builds a frame, checking the sample count and that every sample is finite.
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return dim_err(format!("empty frame {height}x{width}x{channels}"));
        }
        if data.len() != height * width * channels {
            return dim_err(format!(
                "sample count {} does not match {height}x{width}x{channels}",
                data.len()
            ));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!("non-finite sample at index {pos}")));
        }
        Ok(Self { height, width, channels, data })
    }

    pub(crate) fn from_vec_unchecked(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), height * width * channels);
        Self { height, width, channels, data }
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f64) -> Self {
        Self::from_vec_unchecked(height, width, channels, vec![value; height * width * channels])
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        Self::filled(height, width, channels, 0.0)
    }

    /// Builds a frame from a per-sample function `f(row, col, channel)`.
    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(height * width * channels);
        for i in 0..height {
            for j in 0..width {
                for c in 0..channels {
                    data.push(f(i, j, c));
                }
            }
        }
        Self::from_vec_unchecked(height, width, channels, data)
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    /// `(height, width, channels)`
    #[inline]
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize, channel: usize) -> usize {
        (row * self.width + col) * self.channels + channel
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, channel: usize) -> f64 {
        self.data[self.index(row, col, channel)]
    }

    #[inline]
    pub(crate) fn set(&mut self, row: usize, col: usize, channel: usize, value: f64) {
        let idx = self.index(row, col, channel);
        self.data[idx] = value;
    }

    /// Sample at a signed position, with coordinates clamped to the frame (replicate boundary).
    #[inline]
    pub fn get_clamped(&self, row: isize, col: isize, channel: usize) -> f64 {
        let r = row.clamp(0, self.height as isize - 1) as usize;
        let c = col.clamp(0, self.width as isize - 1) as usize;
        self.get(r, c, channel)
    }

    pub fn same_dims(&self, other: &Frame) -> bool {
        self.dims() == other.dims()
    }

    pub(crate) fn check_same_dims(&self, other: &Frame, what: &str) -> Result<()> {
        if self.same_dims(other) {
            Ok(())
        } else {
            dim_err(format!("{what}: {:?} vs {:?}", self.dims(), other.dims()))
        }
    }

    /// Extracts one channel as a single-channel frame.
    pub fn channel(&self, c: usize) -> Frame {
        assert!(c < self.channels, "channel {c} out of range");
        let data = self.data.iter().skip(c).step_by(self.channels).copied().collect();
        Frame::from_vec_unchecked(self.height, self.width, 1, data)
    }

    /// Concatenates frames of equal spatial size along the channel axis.
    pub fn concat_channels(parts: &[Frame]) -> Result<Frame> {
        let first = parts.first().ok_or_else(|| Error::Dimension("no frames to concatenate".into()))?;
        let (h, w) = (first.height, first.width);
        if let Some(bad) = parts.iter().find(|p| p.height != h || p.width != w) {
            return dim_err(format!(
                "cannot concatenate {}x{} with {}x{}",
                h, w, bad.height, bad.width
            ));
        }
        let channels: usize = parts.iter().map(|p| p.channels).sum();
        let mut data = Vec::with_capacity(h * w * channels);
        for px in 0..h * w {
            for p in parts {
                data.extend_from_slice(&p.data[px * p.channels..(px + 1) * p.channels]);
            }
        }
        Ok(Frame::from_vec_unchecked(h, w, channels, data))
    }

    /// Takes channels `start..start + count` as a new frame.
    pub fn channel_range(&self, start: usize, count: usize) -> Result<Frame> {
        if count == 0 || start + count > self.channels {
            return dim_err(format!(
                "channel range {start}..{} outside 0..{}",
                start + count,
                self.channels
            ));
        }
        let mut data = Vec::with_capacity(self.height * self.width * count);
        for px in 0..self.height * self.width {
            let base = px * self.channels + start;
            data.extend_from_slice(&self.data[base..base + count]);
        }
        Ok(Frame::from_vec_unchecked(self.height, self.width, count, data))
    }

    /// Rec. 601 luma of a 3-channel frame; single-channel frames are returned as-is.
    pub fn luminance(&self) -> Frame {
        match self.channels {
            3 => {
                let data = self
                    .data
                    .chunks_exact(3)
                    .map(|p| 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2])
                    .collect();
                Frame::from_vec_unchecked(self.height, self.width, 1, data)
            }
            1 => self.clone(),
            // Fall back to the plain channel mean for packed frames.
            c => {
                let data = self.data.chunks_exact(c).map(|p| p.iter().sum::<f64>() / c as f64).collect();
                Frame::from_vec_unchecked(self.height, self.width, 1, data)
            }
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Frame {
        let data = self.data.iter().map(|&v| f(v)).collect();
        Frame::from_vec_unchecked(self.height, self.width, self.channels, data)
    }

    /// Element-wise combination of two frames of identical dims.
    pub fn zip_map(&self, other: &Frame, f: impl Fn(f64, f64) -> f64) -> Result<Frame> {
        self.check_same_dims(other, "zip_map")?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Frame::from_vec_unchecked(self.height, self.width, self.channels, data))
    }

    /// Euclidean inner product over all samples.
    pub fn dot(&self, other: &Frame) -> f64 {
        assert!(self.same_dims(other), "dot of mismatched frames");
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// An ordered, non-empty list of frames with identical dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct Sequence {
    frames: Vec<Frame>,
}

impl Sequence {
    pub fn new(frames: Vec<Frame>) -> Result<Self> {
        let first = frames.first().ok_or_else(|| Error::Dimension("empty sequence".into()))?;
        if let Some((i, f)) = frames.iter().enumerate().find(|(_, f)| !f.same_dims(first)) {
            return dim_err(format!(
                "frame {i} has dims {:?}, expected {:?}",
                f.dims(),
                first.dims()
            ));
        }
        Ok(Self { frames })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<Frame> {
        self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.frames[0].dims()
    }
}

/// Catmull-Rom cubic (`a = -0.5`).
#[inline]
pub fn cubic_weight(x: f64) -> f64 {
    const A: f64 = -0.5;
    let x = x.abs();
    if x <= 1.0 {
        ((A + 2.0) * x - (A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((A * x - 5.0 * A) * x + 8.0 * A) * x - 4.0 * A
    } else {
        0.0
    }
}

struct AxisTaps {
    /// Per output position: (source indices, normalized weights).
    taps: Vec<(Vec<usize>, Vec<f64>)>,
}

impl AxisTaps {
    /// Half-pixel-centred mapping `src = (dst + 0.5) / scale - 0.5`. When
    /// downscaling the kernel is stretched by `1/scale` so it also low-passes.
    fn new(out_len: usize, in_len: usize, scale: f64) -> Self {
        let stretch = if scale < 1.0 { 1.0 / scale } else { 1.0 };
        let support = 2.0 * stretch;
        let taps = (0..out_len)
            .map(|o| {
                let center = (o as f64 + 0.5) / scale - 0.5;
                let lo = (center - support).floor() as isize;
                let hi = (center + support).ceil() as isize;
                let mut idx = Vec::new();
                let mut wts = Vec::new();
                for p in lo..=hi {
                    let w = cubic_weight((center - p as f64) / stretch);
                    if w != 0.0 {
                        idx.push(p.clamp(0, in_len as isize - 1) as usize);
                        wts.push(w);
                    }
                }
                let sum: f64 = wts.iter().sum();
                wts.iter_mut().for_each(|w| *w /= sum);
                (idx, wts)
            })
            .collect();
        Self { taps }
    }
}

fn resample_with_scales(src: &Frame, out_h: usize, out_w: usize, scale_y: f64, scale_x: f64) -> Frame {
    let (h, w, c) = src.dims();
    let xt = AxisTaps::new(out_w, w, scale_x);
    let yt = AxisTaps::new(out_h, h, scale_y);

    let mut tmp = vec![0.0; h * out_w * c];
    for i in 0..h {
        for (j, (idx, wts)) in xt.taps.iter().enumerate() {
            for ch in 0..c {
                let mut acc = 0.0;
                for (&p, &wt) in idx.iter().zip(wts) {
                    acc += wt * src.data[(i * w + p) * c + ch];
                }
                tmp[(i * out_w + j) * c + ch] = acc;
            }
        }
    }
    let mut out = vec![0.0; out_h * out_w * c];
    for (i, (idx, wts)) in yt.taps.iter().enumerate() {
        for j in 0..out_w {
            for ch in 0..c {
                let mut acc = 0.0;
                for (&p, &wt) in idx.iter().zip(wts) {
                    acc += wt * tmp[(p * out_w + j) * c + ch];
                }
                out[(i * out_w + j) * c + ch] = acc;
            }
        }
    }
    Frame::from_vec_unchecked(out_h, out_w, c, out)
}

fn scaled_dims(src: &Frame, scale: f64) -> Result<(usize, usize)> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Config(format!("resize scale must be positive, got {scale}")));
    }
    let out_h = (src.height as f64 * scale).round() as usize;
    let out_w = (src.width as f64 * scale).round() as usize;
    if out_h == 0 || out_w == 0 {
        return dim_err(format!(
            "resizing {}x{} by {scale} gives an empty frame",
            src.height, src.width
        ));
    }
    Ok((out_h, out_w))
}

/// Bicubic (Catmull-Rom) resize by `scale` without clamping the result.
pub fn bicubic_resize_unclamped(src: &Frame, scale: f64) -> Result<Frame> {
    let (out_h, out_w) = scaled_dims(src, scale)?;
    Ok(resample_with_scales(src, out_h, out_w, scale, scale))
}

/// Bicubic (Catmull-Rom, `a = -0.5`) resize with replicate boundary; output
/// dims are `round(dims * scale)` and samples are clamped to `[0, 1]`.
pub fn bicubic_resize(src: &Frame, scale: f64) -> Result<Frame> {
    Ok(clamp01(&bicubic_resize_unclamped(src, scale)?))
}

/// Unclamped bicubic resample to explicit output dims (per-axis scale).
pub fn resize_to(src: &Frame, out_h: usize, out_w: usize) -> Result<Frame> {
    if out_h == 0 || out_w == 0 {
        return dim_err("resize target is empty");
    }
    let sy = out_h as f64 / src.height as f64;
    let sx = out_w as f64 / src.width as f64;
    Ok(resample_with_scales(src, out_h, out_w, sy, sx))
}

/// Rearranges each `s × s` block into `C·s²` channels. Sub-pixel `(dy, dx)` of
/// source channel `c` lands in slot `c·s² + dy·s + dx`.
pub fn space_to_depth(src: &Frame, s: usize) -> Result<Frame> {
    if s == 0 {
        return Err(Error::Config("space_to_depth factor must be positive".into()));
    }
    let (h, w, c) = src.dims();
    if h % s != 0 || w % s != 0 {
        return dim_err(format!("{h}x{w} is not divisible by {s}"));
    }
    let (oh, ow, oc) = (h / s, w / s, c * s * s);
    let mut out = vec![0.0; oh * ow * oc];
    for i in 0..h {
        for j in 0..w {
            let (bi, dy, bj, dx) = (i / s, i % s, j / s, j % s);
            for ch in 0..c {
                let slot = ch * s * s + dy * s + dx;
                out[(bi * ow + bj) * oc + slot] = src.get(i, j, ch);
            }
        }
    }
    Ok(Frame::from_vec_unchecked(oh, ow, oc, out))
}

/// Exact inverse of [`space_to_depth`].
pub fn depth_to_space(src: &Frame, s: usize) -> Result<Frame> {
    if s == 0 {
        return Err(Error::Config("depth_to_space factor must be positive".into()));
    }
    let (h, w, oc) = src.dims();
    if oc % (s * s) != 0 {
        return dim_err(format!("{oc} channels not divisible by {}", s * s));
    }
    let c = oc / (s * s);
    let (oh, ow) = (h * s, w * s);
    let mut out = Frame::zeros(oh, ow, c);
    for bi in 0..h {
        for bj in 0..w {
            for ch in 0..c {
                for dy in 0..s {
                    for dx in 0..s {
                        let v = src.get(bi, bj, ch * s * s + dy * s + dx);
                        out.set(bi * s + dy, bj * s + dx, ch, v);
                    }
                }
            }
        }
    }
    Ok(out)
}

pub fn clamp01(src: &Frame) -> Frame {
    src.map(|v| v.clamp(0.0, 1.0))
}
