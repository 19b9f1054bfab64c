//! Synthetic Gaussian class clusters for tests, benchmarks and the CLI.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::RawDataset;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n: usize,
    pub d: usize,
    pub classes: usize,
    /// Standard deviation of each point around its class centre. Centre
    /// coordinates are standard normal.
    pub spread: f64,
    /// Dimensions that carry class signal; the rest are pure noise with the
    /// same spread. `None` makes every dimension informative.
    pub informative: Option<usize>,
    pub seed: u64,
}

impl SynthConfig {
    pub fn new(n: usize, d: usize, classes: usize, spread: f64, seed: u64) -> Self {
        SynthConfig { n, d, classes, spread, informative: None, seed }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 || self.classes == 0 {
            return Err(Error::input("n, d and classes must all be positive"));
        }
        if self.classes > self.n {
            return Err(Error::input(format!("{} classes need at least as many points", self.classes)));
        }
        if !(self.spread.is_finite() && self.spread >= 0.0) {
            return Err(Error::input(format!("spread {} must be finite and nonnegative", self.spread)));
        }
        if let Some(k) = self.informative {
            if k == 0 || k > self.d {
                return Err(Error::input(format!("informative dims {k} outside 1..={}", self.d)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub features: RawDataset,
    pub labels: Vec<i64>,
    /// `classes × d`, row-major.
    pub centres: Vec<f64>,
}

/// Draws `n` points with near-balanced classes in shuffled order.
pub fn gaussian_clusters(cfg: &SynthConfig) -> Result<SynthData> {
    cfg.validate()?;
    let (n, d, c) = (cfg.n, cfg.d, cfg.classes);
    let informative = cfg.informative.unwrap_or(d);
    let mut rng = seed::stream(cfg.seed, "synth-centres", 0);
    let mut centres = vec![0.0; c * d];
    for row in centres.chunks_mut(d) {
        for v in &mut row[..informative] {
            *v = StandardNormal.sample(&mut rng);
        }
    }

    let mut labels: Vec<i64> = (0..n).map(|i| (i % c) as i64).collect();
    let mut rng = seed::stream(cfg.seed, "synth-points", 0);
    labels.shuffle(&mut rng);
    let mut values = Vec::with_capacity(n * d);
    for &l in &labels {
        let centre = &centres[l as usize * d..(l as usize + 1) * d];
        for &mu in centre {
            let z: f64 = StandardNormal.sample(&mut rng);
            values.push(mu + cfg.spread * z);
        }
    }
    Ok(SynthData { features: RawDataset::new(n, d, values)?, labels, centres })
}

/// Index of the nearest class centre for every point.
pub fn nearest_centre(data: &SynthData) -> Vec<i64> {
    let d = data.features.d();
    let c = data.centres.len() / d;
    (0..data.features.n())
        .map(|i| {
            let x = data.features.row(i);
            (0..c)
                .map(|k| {
                    let mu = &data.centres[k * d..(k + 1) * d];
                    let dist: f64 = x.iter().zip(mu).map(|(a, b)| (a - b) * (a - b)).sum();
                    (dist, k)
                })
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .unwrap()
                .1 as i64
        })
        .collect()
}

/// Features with one label per row.
pub type Labelled = (RawDataset, Vec<i64>);

/// Splits the first `train` points off as the training set.
pub fn split(data: &SynthData, train: usize) -> Result<(Labelled, Labelled)> {
    let n = data.features.n();
    if train == 0 || train >= n {
        return Err(Error::input(format!("training size {train} must be in 1..{n}")));
    }
    Ok((
        (data.features.slice_rows(0..train)?, data.labels[..train].to_vec()),
        (data.features.slice_rows(train..n)?, data.labels[train..].to_vec()),
    ))
}
