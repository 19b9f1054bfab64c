//! Feature matrices, 8-bit quantization and pairwise supervision.

mod affinity;
mod quantize;

pub use affinity::{
    affinity_from_class_labels, affinity_from_tags, tag_relation, AffinityStore, PairPolicy,
    PartialOverlap, TagSets,
};
pub use quantize::{
    fit_quantizer, quantize, FeatureBins, PointBins, QuantizedDataset, Quantizer, DEFAULT_BIN_COUNT,
};

use crate::error::{Error, Result};

/// A dense row-major `n × d` matrix of finite feature values.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    n: usize,
    d: usize,
    values: Vec<f64>,
}

impl RawDataset {
    pub fn new(n: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::input(format!("dataset must be nonempty, got {n}x{d}")));
        }
        if values.len() != n * d {
            return Err(Error::input(format!(
                "expected {} values for a {n}x{d} matrix, got {}",
                n * d,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!(
                "non-finite feature value at row {}, column {}",
                pos / d,
                pos % d
            )));
        }
        Ok(RawDataset { n, d, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::input(format!(
                "row {bad} has {} columns, expected {d}",
                rows[bad].len()
            )));
        }
        RawDataset::new(rows.len(), d, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    #[inline]
    pub fn get(&self, i: usize, f: usize) -> f64 {
        self.values[i * self.d + f]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Rows `range` as a new dataset.
    pub fn slice_rows(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.end > self.n || range.start >= range.end {
            return Err(Error::input(format!(
                "row range {range:?} out of bounds for {} rows",
                self.n
            )));
        }
        RawDataset::new(
            range.len(),
            self.d,
            self.values[range.start * self.d..range.end * self.d].to_vec(),
        )
    }
}
