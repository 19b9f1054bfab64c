//! Equal-width 8-bit feature quantization.
//!
//! A value `x` in dimension `f` maps to `floor((x - lower[f]) / width[f])`,
//! clamped into `[0, bin_count - 1]`. A value sitting exactly on an interior
//! boundary therefore lands in the higher bin, and the fitted maximum lands
//! in the top bin. Constant dimensions have width 0 and always map to bin 0.

use serde::{Deserialize, Serialize};

use super::RawDataset;
use crate::error::{Error, Result};
use crate::par::{self, Parallelism};

pub const DEFAULT_BIN_COUNT: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantizer {
    lower: Vec<f64>,
    width: Vec<f64>,
    bin_count: usize,
}

impl Quantizer {
    /// Builds a quantizer from explicit parameters.
    pub fn from_parts(lower: Vec<f64>, width: Vec<f64>, bin_count: usize) -> Result<Self> {
        if !(2..=256).contains(&bin_count) {
            return Err(Error::input(format!("bin_count must be in 2..=256, got {bin_count}")));
        }
        if lower.len() != width.len() || lower.is_empty() {
            return Err(Error::input("quantizer bounds and widths must be nonempty and aligned"));
        }
        if lower.iter().any(|v| !v.is_finite())
            || width.iter().any(|w| !w.is_finite() || *w < 0.0)
        {
            return Err(Error::input("quantizer parameters must be finite, widths nonnegative"));
        }
        Ok(Quantizer { lower, width, bin_count })
    }

    pub fn dims(&self) -> usize {
        self.lower.len()
    }

    pub fn bin_count(&self) -> usize {
        self.bin_count
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn width(&self) -> &[f64] {
        &self.width
    }

    #[inline]
    pub fn bin(&self, f: usize, x: f64) -> u8 {
        let w = self.width[f];
        if w == 0.0 {
            return 0;
        }
        let top = (self.bin_count - 1) as f64;
        let pos = ((x - self.lower[f]) / w).floor();
        // NaN never reaches here: RawDataset rejects non-finite input.
        pos.clamp(0.0, top) as u8
    }

    pub fn quantize_point(&self, x: &[f64]) -> Result<Vec<u8>> {
        if x.len() != self.dims() {
            return Err(Error::input(format!(
                "point has {} dimensions, quantizer expects {}",
                x.len(),
                self.dims()
            )));
        }
        Ok(x.iter().enumerate().map(|(f, &v)| self.bin(f, v)).collect())
    }
}

/// Fits per-dimension bounds so `[min, max]` splits into `bin_count` equal bins.
pub fn fit_quantizer(raw: &RawDataset, bin_count: usize, mode: Parallelism) -> Result<Quantizer> {
    let (n, d) = (raw.n(), raw.d());
    let ranges = par::map_indexed(d, mode, |f| {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let v = raw.get(i, f);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    });
    let lower = ranges.iter().map(|r| r.0).collect();
    let width = ranges
        .iter()
        .map(|&(lo, hi)| {
            let w = (hi - lo) / bin_count as f64;
            // A range so narrow the width underflows is treated as constant.
            if w > 0.0 && w.is_finite() {
                w
            } else {
                0.0
            }
        })
        .collect();
    Quantizer::from_parts(lower, width, bin_count)
}

/// Anything that yields a bin index per feature.
pub trait FeatureBins {
    fn bin(&self, feature: usize) -> u8;
}

impl FeatureBins for [u8] {
    #[inline]
    fn bin(&self, feature: usize) -> u8 {
        self[feature]
    }
}

impl FeatureBins for Vec<u8> {
    #[inline]
    fn bin(&self, feature: usize) -> u8 {
        self[feature]
    }
}

/// Bin indices for `n` points, stored column-major so per-feature
/// histograms read contiguous memory.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedDataset {
    n: usize,
    d: usize,
    columns: Vec<u8>,
    quantizer: Quantizer,
}

impl QuantizedDataset {
    /// Builds a dataset directly from row-major bins (mainly for tests).
    pub fn from_rows(rows: &[Vec<u8>], quantizer: Quantizer) -> Result<Self> {
        let n = rows.len();
        let d = quantizer.dims();
        if n == 0 || rows.iter().any(|r| r.len() != d) {
            return Err(Error::input("rows must be nonempty and match the quantizer"));
        }
        let top = (quantizer.bin_count() - 1) as u8;
        if rows.iter().flatten().any(|&b| b > top) {
            return Err(Error::input("bin index exceeds bin_count - 1"));
        }
        let mut columns = vec![0u8; n * d];
        for (i, r) in rows.iter().enumerate() {
            for (f, &b) in r.iter().enumerate() {
                columns[f * n + i] = b;
            }
        }
        Ok(QuantizedDataset { n, d, columns, quantizer })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn quantizer(&self) -> &Quantizer {
        &self.quantizer
    }

    #[inline]
    pub fn get(&self, i: usize, f: usize) -> u8 {
        self.columns[f * self.n + i]
    }

    #[inline]
    pub fn column(&self, f: usize) -> &[u8] {
        &self.columns[f * self.n..(f + 1) * self.n]
    }

    pub fn row(&self, i: usize) -> Vec<u8> {
        (0..self.d).map(|f| self.get(i, f)).collect()
    }

    pub fn point(&self, i: usize) -> PointBins<'_> {
        PointBins { data: self, i }
    }
}

/// Borrowed view of one point in a [`QuantizedDataset`].
#[derive(Clone, Copy)]
pub struct PointBins<'a> {
    data: &'a QuantizedDataset,
    i: usize,
}

impl FeatureBins for PointBins<'_> {
    #[inline]
    fn bin(&self, feature: usize) -> u8 {
        self.data.get(self.i, feature)
    }
}

/// Applies a fitted quantizer; values outside the fitted range clamp.
pub fn quantize(raw: &RawDataset, q: &Quantizer, mode: Parallelism) -> Result<QuantizedDataset> {
    if raw.d() != q.dims() {
        return Err(Error::input(format!(
            "dataset has {} dimensions, quantizer expects {}",
            raw.d(),
            q.dims()
        )));
    }
    let n = raw.n();
    let columns = par::map_indexed(q.dims(), mode, |f| {
        (0..n).map(|i| q.bin(f, raw.get(i, f))).collect::<Vec<u8>>()
    })
    .concat();
    Ok(QuantizedDataset { n, d: q.dims(), columns, quantizer: q.clone() })
}
