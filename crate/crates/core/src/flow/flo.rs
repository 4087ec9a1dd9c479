//! Middlebury `.flo` files: `202021.25f32`, width `i32`, height `i32`, then
//! row-major interleaved `(u, v)` `f32`, all little-endian.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::operators::FlowField;

pub const FLO_MAGIC: f32 = 202021.25;

pub fn encode_flo(flow: &FlowField) -> Vec<u8> {
    let n = flow.height() * flow.width();
    let mut buf = Vec::with_capacity(12 + 8 * n);
    buf.extend_from_slice(&FLO_MAGIC.to_le_bytes());
    buf.extend_from_slice(&(flow.width() as i32).to_le_bytes());
    buf.extend_from_slice(&(flow.height() as i32).to_le_bytes());
    for (u, v) in flow.u().iter().zip(flow.v()) {
        buf.extend_from_slice(&(*u as f32).to_le_bytes());
        buf.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    buf
}

pub fn decode_flo(bytes: &[u8]) -> Result<FlowField> {
    let word = |k: usize| -> Result<[u8; 4]> {
        bytes
            .get(4 * k..4 * k + 4)
            .map(|b| b.try_into().expect("4 bytes"))
            .ok_or_else(|| Error::InvalidData("truncated .flo data".into()))
    };
    if f32::from_le_bytes(word(0)?) != FLO_MAGIC {
        return Err(Error::InvalidData("bad .flo magic".into()));
    }
    let width = i32::from_le_bytes(word(1)?);
    let height = i32::from_le_bytes(word(2)?);
    if width <= 0 || height <= 0 {
        return Err(Error::InvalidData(format!("bad .flo size {width}x{height}")));
    }
    let (w, h) = (width as usize, height as usize);
    if bytes.len() != 12 + 8 * w * h {
        return Err(Error::InvalidData(format!(
            ".flo payload is {} bytes, expected {}",
            bytes.len() - 12,
            8 * w * h
        )));
    }
    let mut u = Vec::with_capacity(w * h);
    let mut v = Vec::with_capacity(w * h);
    for k in 0..w * h {
        u.push(f32::from_le_bytes(word(3 + 2 * k)?) as f64);
        v.push(f32::from_le_bytes(word(4 + 2 * k)?) as f64);
    }
    FlowField::new(h, w, u, v)
}

pub fn read_flo(path: impl AsRef<Path>) -> Result<FlowField> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    decode_flo(&bytes).map_err(|e| Error::Parse { path: path.to_owned(), msg: e.to_string() })
}

pub fn write_flo(path: impl AsRef<Path>, flow: &FlowField) -> Result<()> {
    fs::write(path, encode_flo(flow))?;
    Ok(())
}
