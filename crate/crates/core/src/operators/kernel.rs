use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{cfg_err, Error, Result};

/// Maximum allowed deviation of the tap sum from 1.
pub const SUM_TOLERANCE: f64 = 1e-8;

/// A `k × k` point-spread function: odd size, nonnegative taps summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct BlurKernel {
    size: usize,
    taps: Vec<f64>,
}

impl BlurKernel {
    pub fn new(size: usize, taps: Vec<f64>) -> Result<Self> {
        check_odd(size)?;
        if taps.len() != size * size {
            return cfg_err(format!("kernel of size {size} needs {} taps, got {}", size * size, taps.len()));
        }
        if let Some(t) = taps.iter().find(|t| !t.is_finite() || **t < 0.0) {
            return cfg_err(format!("kernel taps must be finite and nonnegative, found {t}"));
        }
        let sum: f64 = taps.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return cfg_err(format!("kernel taps sum to {sum}, expected 1"));
        }
        Ok(Self { size, taps })
    }

    /// Scales nonnegative weights to unit sum.
    pub fn normalized(size: usize, mut weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0 && sum.is_finite()) {
            return cfg_err("kernel weights must have a positive finite sum");
        }
        weights.iter_mut().for_each(|w| *w /= sum);
        Self::new(size, weights)
    }

    /// Identity kernel: a single unit tap in the centre.
    pub fn delta(size: usize) -> Result<Self> {
        check_odd(size)?;
        let mut taps = vec![0.0; size * size];
        taps[size * size / 2] = 1.0;
        Ok(Self { size, taps })
    }

    pub fn uniform(size: usize) -> Result<Self> {
        check_odd(size)?;
        let n = (size * size) as f64;
        Ok(Self { size, taps: vec![1.0 / n; size * size] })
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn radius(&self) -> usize {
        self.size / 2
    }

    #[inline]
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Tap at row `a`, column `b` (both in `0..size`).
    #[inline]
    pub fn tap(&self, a: usize, b: usize) -> f64 {
        self.taps[a * self.size + b]
    }

    /// Serializes to the text format: `K <k>` then `k` rows of `k` reals.
    pub fn to_text(&self) -> String {
        let mut s = format!("K {}\n", self.size);
        for row in self.taps.chunks(self.size) {
            let line: Vec<String> = row.iter().map(|t| format!("{t:e}")).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::InvalidData("empty kernel file".into()))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("K") {
            return Err(Error::InvalidData(format!("kernel header must start with 'K', got {header:?}")));
        }
        let size: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::InvalidData(format!("bad kernel size in header {header:?}")))?;
        if parts.next().is_some() {
            return Err(Error::InvalidData(format!("trailing tokens in header {header:?}")));
        }
        check_odd(size)?;
        let mut taps = Vec::with_capacity(size * size);
        for r in 0..size {
            let line = lines
                .next()
                .ok_or_else(|| Error::InvalidData(format!("kernel file ends after {r} of {size} rows")))?;
            let row = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| Error::InvalidData(format!("row {r}: {t:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            if row.len() != size {
                return Err(Error::InvalidData(format!("row {r} has {} values, expected {size}", row.len())));
            }
            taps.extend(row);
        }
        if lines.next().is_some() {
            return Err(Error::InvalidData("extra rows after kernel data".into()));
        }
        Self::new(size, taps)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        Self::from_text(&text).map_err(|e| Error::Parse { path: path.to_owned(), msg: e.to_string() })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }
}

pub(crate) fn check_odd(size: usize) -> Result<()> {
    if size % 2 == 1 {
        Ok(())
    } else {
        cfg_err(format!("kernel size must be odd, got {size}"))
    }
}
