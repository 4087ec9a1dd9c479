//! Directory format handed to external restorers.
//!
//! ```text
//! manifest.txt          key=value lines (scale, frame_index, dims, channel order)
//! packed_c0000.png ...  one 16-bit grayscale PNG per packed channel
//! reference.png         16-bit bicubic upsampling of the reference frame
//! ```
//!
//! PNG storage clamps samples to `[0, 1]` and quantizes to 1/65535.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::restorer::{RestorerInput, BLOCK_ORDER};
use crate::error::{Error, Result};
use crate::image::Frame;
use crate::io::{read_png, write_png, BitDepth};

pub const MANIFEST: &str = "manifest.txt";
pub const REFERENCE: &str = "reference.png";

fn channel_file(k: usize) -> String {
    format!("packed_c{k:04}.png")
}

pub fn write_packed_dir(dir: &Path, input: &RestorerInput, reference: &Frame, frame_index: usize) -> Result<()> {
    fs::create_dir_all(dir)?;
    let (h, w, c) = input.packed.dims();
    let mut manifest = String::new();
    let _ = writeln!(manifest, "scale={}", input.scale);
    let _ = writeln!(manifest, "frame_index={frame_index}");
    let _ = writeln!(manifest, "height={h}");
    let _ = writeln!(manifest, "width={w}");
    let _ = writeln!(manifest, "channels={c}");
    let _ = writeln!(manifest, "source_channels={}", input.source_channels());
    let _ = writeln!(manifest, "channel_order={}", BLOCK_ORDER.join(","));
    let _ = writeln!(manifest, "block_layout=c*s*s+dy*s+dx");
    let _ = writeln!(manifest, "reference={REFERENCE}");
    fs::write(dir.join(MANIFEST), manifest)?;
    for k in 0..c {
        write_png(dir.join(channel_file(k)), &input.packed.channel(k), BitDepth::Sixteen)?;
    }
    write_png(dir.join(REFERENCE), reference, BitDepth::Sixteen)?;
    Ok(())
}

#[derive(Clone, Debug)]
pub struct PackedDir {
    pub input: RestorerInput,
    pub reference: Frame,
    pub frame_index: usize,
}

pub fn read_packed_dir(dir: &Path) -> Result<PackedDir> {
    let manifest_path = dir.join(MANIFEST);
    let text = fs::read_to_string(&manifest_path)?;
    let bad = |msg: String| Error::Parse { path: manifest_path.clone(), msg };
    let mut kv = BTreeMap::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        let (k, v) = line.split_once('=').ok_or_else(|| bad(format!("not key=value: {line:?}")))?;
        kv.insert(k.trim().to_owned(), v.trim().to_owned());
    }
    let num = |key: &str| -> Result<usize> {
        kv.get(key)
            .ok_or_else(|| bad(format!("missing {key}")))?
            .parse()
            .map_err(|e| bad(format!("{key}: {e}")))
    };
    let order = kv.get("channel_order").ok_or_else(|| bad("missing channel_order".into()))?;
    if *order != BLOCK_ORDER.join(",") {
        return Err(bad(format!("unsupported channel_order {order:?}")));
    }
    let (scale, frame_index, channels) = (num("scale")?, num("frame_index")?, num("channels")?);
    let planes = (0..channels).map(|k| read_png(dir.join(channel_file(k)))).collect::<Result<Vec<_>>>()?;
    let packed = Frame::concat_channels(&planes)?;
    if (packed.height(), packed.width()) != (num("height")?, num("width")?) {
        return Err(bad("packed planes do not match the manifest size".into()));
    }
    let reference_name = kv.get("reference").map(String::as_str).unwrap_or(REFERENCE);
    let reference = read_png(dir.join(reference_name))?;
    Ok(PackedDir { input: RestorerInput { packed, scale }, reference, frame_index })
}
