use serde::{Deserialize, Serialize};

use crate::data::{FeatureBins, QuantizedDataset};
use crate::error::{Error, Result};
use crate::par::{self, Parallelism};

/// Candidates whose weighted errors differ by less than this fraction of
/// the total weight count as tied, so float noise in the cumulative sums
/// cannot override the tie-break order.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Axis-aligned test on one quantized feature: predicts `polarity` when the
/// bin is above `threshold`, `-polarity` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: u32,
    pub threshold: u8,
    pub polarity: i8,
}

impl Stump {
    #[inline]
    pub fn predict_bin(&self, bin: u8) -> i8 {
        if bin > self.threshold {
            self.polarity
        } else {
            -self.polarity
        }
    }

    #[inline]
    pub fn predict<B: FeatureBins + ?Sized>(&self, x: &B) -> i8 {
        self.predict_bin(x.bin(self.feature as usize))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StumpFit {
    pub stump: Stump,
    /// Weighted misclassification (unnormalized).
    pub error: f64,
    pub total_weight: f64,
}

impl StumpFit {
    pub fn normalized_error(&self) -> f64 {
        self.error / self.total_weight
    }
}

pub(crate) fn check_targets(targets: &[i8], n: usize) -> Result<()> {
    if targets.len() != n {
        return Err(Error::contract(format!("{} targets for {n} examples", targets.len())));
    }
    if targets.iter().any(|&t| t != 1 && t != -1) {
        return Err(Error::contract("targets must be -1 or +1"));
    }
    Ok(())
}

/// Best stump over `candidate_dims` for all examples of `data`.
///
/// Ties go to the lowest feature index, then the lowest threshold, then
/// polarity `+1`.
pub fn train_stump(
    data: &QuantizedDataset,
    weights: &[f64],
    targets: &[i8],
    candidate_dims: &[usize],
    mode: Parallelism,
) -> Result<StumpFit> {
    check_targets(targets, data.n())?;
    if weights.len() != data.n() || weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::contract("weights must be finite, nonnegative, one per example"));
    }
    let all: Vec<u32> = (0..data.n() as u32).collect();
    train_stump_on(data, weights, targets, candidate_dims, &all, mode)
}

/// [`train_stump`] restricted to the examples listed in `examples`.
pub(crate) fn train_stump_on(
    data: &QuantizedDataset,
    weights: &[f64],
    targets: &[i8],
    candidate_dims: &[usize],
    examples: &[u32],
    mode: Parallelism,
) -> Result<StumpFit> {
    if candidate_dims.is_empty() {
        return Err(Error::contract("stump search needs at least one candidate dimension"));
    }
    if let Some(&f) = candidate_dims.iter().find(|&&f| f >= data.d()) {
        return Err(Error::contract(format!("candidate dimension {f} out of range")));
    }
    let mut dims = candidate_dims.to_vec();
    dims.sort_unstable();
    dims.dedup();

    let thresholds = data.quantizer().bin_count() - 1;
    // (error, threshold, polarity) per dimension; reduced in dimension order.
    let per_dim = par::map_slice(&dims, mode, |&f| {
        let column = data.column(f);
        let mut pos = [0.0f64; 256];
        let mut neg = [0.0f64; 256];
        for &i in examples {
            let w = weights[i as usize];
            let b = column[i as usize] as usize;
            if targets[i as usize] > 0 {
                pos[b] += w;
            } else {
                neg[b] += w;
            }
        }
        let tot_pos: f64 = pos.iter().sum();
        let tot_neg: f64 = neg.iter().sum();
        let tol = TIE_TOLERANCE * (tot_pos + tot_neg);
        let (mut cum_pos, mut cum_neg) = (0.0, 0.0);
        let mut best = (f64::INFINITY, 0u8, 1i8);
        for t in 0..thresholds {
            cum_pos += pos[t];
            cum_neg += neg[t];
            // Polarity +1 errs on positives at or below t and negatives above.
            let plus = cum_pos + (tot_neg - cum_neg);
            let minus = cum_neg + (tot_pos - cum_pos);
            if plus < best.0 - tol {
                best = (plus, t as u8, 1);
            }
            if minus < best.0 - tol {
                best = (minus, t as u8, -1);
            }
        }
        (best, tot_pos + tot_neg)
    });

    let mut winner: Option<(usize, (f64, u8, i8))> = None;
    let total = per_dim[0].1;
    let tol = TIE_TOLERANCE * total;
    for (&f, &(cand, _)) in dims.iter().zip(&per_dim) {
        if winner.is_none_or(|(_, w)| cand.0 < w.0 - tol) {
            winner = Some((f, cand));
        }
    }
    let (f, (error, threshold, polarity)) = winner.expect("nonempty dims");
    if total <= 0.0 {
        return Err(Error::contract("example weights sum to zero"));
    }
    Ok(StumpFit {
        stump: Stump { feature: f as u32, threshold, polarity },
        error,
        total_weight: total,
    })
}
