//! PNG frame I/O and numbered-frame directories (`frame_%06d.png`).

use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageBuffer, Luma, Rgb};

use crate::error::{Error, Result};
use crate::image::{Frame, Sequence};

/// Sample depth used when encoding PNGs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BitDepth {
    #[default]
    Eight,
    Sixteen,
}

/// Decodes a PNG. Integer value `v` maps to `v / (2^bits - 1)`. Gray and
/// gray+alpha become 1 channel, RGB(A) becomes 3; alpha is dropped.
pub fn read_png(path: impl AsRef<Path>) -> Result<Frame> {
    let path = path.as_ref();
    let img = image::open(path)?;
    let frame = match img {
        DynamicImage::ImageLuma8(_) | DynamicImage::ImageLumaA8(_) => {
            let buf = img.to_luma8();
            let data = buf.as_raw().iter().map(|&v| v as f64 / 255.0).collect();
            Frame::new(buf.height() as usize, buf.width() as usize, 1, data)?
        }
        DynamicImage::ImageLuma16(_) | DynamicImage::ImageLumaA16(_) => {
            let buf = img.to_luma16();
            let data = buf.as_raw().iter().map(|&v| v as f64 / 65535.0).collect();
            Frame::new(buf.height() as usize, buf.width() as usize, 1, data)?
        }
        DynamicImage::ImageRgb16(_) | DynamicImage::ImageRgba16(_) => {
            let buf = img.to_rgb16();
            let data = buf.as_raw().iter().map(|&v| v as f64 / 65535.0).collect();
            Frame::new(buf.height() as usize, buf.width() as usize, 3, data)?
        }
        _ => {
            let buf = img.to_rgb8();
            let data = buf.as_raw().iter().map(|&v| v as f64 / 255.0).collect();
            Frame::new(buf.height() as usize, buf.width() as usize, 3, data)?
        }
    };
    Ok(frame)
}

/// Clamp to `[0,1]`, scale to the integer range and round half-up.
#[inline]
fn quantize(v: f64, max: f64) -> f64 {
    (v.clamp(0.0, 1.0) * max + 0.5).floor()
}

/// Encodes a 1- or 3-channel frame as PNG.
pub fn write_png(path: impl AsRef<Path>, frame: &Frame, depth: BitDepth) -> Result<()> {
    let path = path.as_ref();
    let (h, w, c) = frame.dims();
    let (w32, h32) = (w as u32, h as u32);
    match (c, depth) {
        (1, BitDepth::Eight) => {
            let raw = frame.as_slice().iter().map(|&v| quantize(v, 255.0) as u8).collect();
            ImageBuffer::<Luma<u8>, Vec<u8>>::from_raw(w32, h32, raw)
                .expect("buffer size")
                .save(path)?;
        }
        (1, BitDepth::Sixteen) => {
            let raw = frame.as_slice().iter().map(|&v| quantize(v, 65535.0) as u16).collect();
            ImageBuffer::<Luma<u16>, Vec<u16>>::from_raw(w32, h32, raw)
                .expect("buffer size")
                .save(path)?;
        }
        (3, BitDepth::Eight) => {
            let raw = frame.as_slice().iter().map(|&v| quantize(v, 255.0) as u8).collect();
            ImageBuffer::<Rgb<u8>, Vec<u8>>::from_raw(w32, h32, raw)
                .expect("buffer size")
                .save(path)?;
        }
        (3, BitDepth::Sixteen) => {
            let raw = frame.as_slice().iter().map(|&v| quantize(v, 65535.0) as u16).collect();
            ImageBuffer::<Rgb<u16>, Vec<u16>>::from_raw(w32, h32, raw)
                .expect("buffer size")
                .save(path)?;
        }
        _ => {
            return Err(Error::Dimension(format!(
                "PNG output needs 1 or 3 channels, frame has {c}"
            )))
        }
    }
    Ok(())
}

pub fn frame_file_name(index: usize) -> String {
    format!("frame_{index:06}.png")
}

/// Lists the PNG files of a directory in lexicographic order.
pub fn list_pngs(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir.as_ref())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| e.eq_ignore_ascii_case("png"))
        })
        .collect();
    paths.sort();
    Ok(paths)
}

/// Reads every PNG in `dir` (sorted by name) as a sequence.
pub fn read_sequence(dir: impl AsRef<Path>) -> Result<Sequence> {
    let dir = dir.as_ref();
    let paths = list_pngs(dir)?;
    if paths.is_empty() {
        return Err(Error::InvalidData(format!("no PNG frames in {}", dir.display())));
    }
    let frames = paths.iter().map(read_png).collect::<Result<Vec<_>>>()?;
    Sequence::new(frames)
}

/// Writes `frame_000000.png`, `frame_000001.png`, ... into `dir`.
pub fn write_sequence(dir: impl AsRef<Path>, frames: &[Frame], depth: BitDepth) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    frames
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let p = dir.join(frame_file_name(i));
            write_png(&p, f, depth).map(|_| p)
        })
        .collect()
}
