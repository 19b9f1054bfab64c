use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::stump::check_targets;
use super::tree::{train_tree_on, DecisionTree, TreeParams};
use crate::data::{FeatureBins, QuantizedDataset};
use crate::error::{Error, Result};
use crate::par::{self, Parallelism};
use crate::seed;

/// Bounds applied to the weighted error before taking the log.
pub const ERROR_FLOOR: f64 = 1e-10;

/// Relative slack allowed when checking that the exponential loss does not
/// increase between rounds.
pub const LOSS_TOLERANCE: f64 = 1e-9;

/// `h(x) = sign(Σ_q w_q T_q(x))`, with `sign(0) = +1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedHashFunction {
    trees: Vec<DecisionTree>,
    weights: Vec<f64>,
}

impl BoostedHashFunction {
    pub fn new(trees: Vec<DecisionTree>, weights: Vec<f64>) -> Result<Self> {
        if trees.len() != weights.len() {
            return Err(Error::format("tree and weight counts differ"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::format("tree weights must be finite and nonnegative"));
        }
        Ok(BoostedHashFunction { trees, weights })
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weighted vote `Σ_q w_q T_q(x)`, summed in tree order.
    pub fn score<B: FeatureBins + ?Sized>(&self, x: &B) -> f64 {
        let mut s = 0.0;
        for (t, &w) in self.trees.iter().zip(&self.weights) {
            s += w * t.predict(x) as f64;
        }
        s
    }

    pub fn apply<B: FeatureBins + ?Sized>(&self, x: &B) -> i8 {
        if self.score(x) >= 0.0 {
            1
        } else {
            -1
        }
    }
}

/// Applies one hash function to a single quantized point.
pub fn hash_apply<B: FeatureBins + ?Sized>(h: &BoostedHashFunction, x: &B) -> i8 {
    h.apply(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostConfig {
    /// Boosting rounds `Q`.
    pub rounds: usize,
    pub tree: TreeParams,
    /// Fraction of the smallest example weights zeroed for each round's
    /// tree fit.
    pub trim_fraction: f64,
    /// Fraction of feature dimensions offered to each round's tree.
    pub lazy_fraction: f64,
    /// Keep trimmed examples out of all later rounds' tree fits instead of
    /// re-selecting every round.
    pub permanent_trim: bool,
}

impl Default for BoostConfig {
    fn default() -> Self {
        BoostConfig {
            rounds: 200,
            tree: TreeParams::default(),
            trim_fraction: 0.1,
            lazy_fraction: 0.2,
            permanent_trim: false,
        }
    }
}

impl BoostConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::contract("boosting needs at least one round"));
        }
        if !(0.0..1.0).contains(&self.trim_fraction) {
            return Err(Error::contract(format!("trim fraction {} not in [0, 1)", self.trim_fraction)));
        }
        if !(self.lazy_fraction > 0.0 && self.lazy_fraction <= 1.0) {
            return Err(Error::contract(format!("lazy fraction {} not in (0, 1]", self.lazy_fraction)));
        }
        if self.tree.depth == 0 || self.tree.depth > 20 {
            return Err(Error::contract(format!("tree depth {} outside 1..=20", self.tree.depth)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// All rounds ran.
    Completed,
    /// A tree classified every weighted example correctly.
    Perfect,
    /// The weighted error reached 0.5; the tree was discarded.
    NoImprovement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Exponential loss `Σ_i exp(-z_i F(x_i))`: initial value, then after
    /// each accepted round.
    pub loss_trace: Vec<f64>,
    /// Normalized weighted error of each accepted round.
    pub round_errors: Vec<f64>,
    /// Rounds whose loss exceeded the previous one beyond [`LOSS_TOLERANCE`].
    pub loss_increases: usize,
    /// Fraction of examples where `h(x_i) != z_i` after the last round.
    pub training_error: f64,
    pub stop: StopReason,
}

/// Discrete AdaBoost on the exponential loss with weight trimming and
/// per-round random feature subsets.
pub fn fit_hash_function(
    data: &QuantizedDataset,
    targets: &[i8],
    cfg: &BoostConfig,
    rng_seed: u64,
    mode: Parallelism,
) -> Result<(BoostedHashFunction, FitReport)> {
    cfg.validate()?;
    let n = data.n();
    check_targets(targets, n)?;
    let d = data.d();
    let subset = ((cfg.lazy_fraction * d as f64).ceil() as usize).clamp(1, d);
    let trim_count = (cfg.trim_fraction * n as f64).floor() as usize;

    let mut margin = vec![0.0f64; n];
    let mut trees = Vec::new();
    let mut alphas = Vec::new();
    let mut loss = n as f64;
    let mut report = FitReport {
        loss_trace: vec![loss],
        round_errors: Vec::new(),
        loss_increases: 0,
        training_error: 0.0,
        stop: StopReason::Completed,
    };
    let mut excluded = vec![false; n];

    for q in 0..cfg.rounds {
        let weights = example_weights(&margin, targets);
        let mut fit_weights = weights.clone();
        for (w, &x) in fit_weights.iter_mut().zip(&excluded) {
            if x {
                *w = 0.0;
            }
        }
        for i in smallest(&fit_weights, trim_count) {
            fit_weights[i] = 0.0;
            if cfg.permanent_trim {
                excluded[i] = true;
            }
        }
        if !fit_weights.iter().any(|&w| w > 0.0) {
            report.stop = StopReason::NoImprovement;
            break;
        }

        let dims: Vec<usize> = if subset == d {
            (0..d).collect()
        } else {
            let mut rng = seed::stream(rng_seed, "lazy", q as u64);
            let mut v = index::sample(&mut rng, d, subset).into_vec();
            v.sort_unstable();
            v
        };
        let live: Vec<u32> = (0..n as u32).collect();
        let tree = train_tree_on(data, &fit_weights, targets, cfg.tree, &dims, &live, mode)?;
        let pred: Vec<i8> = par::map_indexed(n, mode, |i| tree.predict(&data.point(i)));

        let eps: f64 = (0..n).filter(|&i| pred[i] != targets[i]).map(|i| weights[i]).sum();
        if eps >= 0.5 {
            report.stop = StopReason::NoImprovement;
            break;
        }
        let eps_c = eps.clamp(ERROR_FLOOR, 0.5 - ERROR_FLOOR);
        let alpha = 0.5 * ((1.0 - eps_c) / eps_c).ln();
        for i in 0..n {
            margin[i] += alpha * pred[i] as f64;
        }
        trees.push(tree);
        alphas.push(alpha);

        let next = exp_loss(&margin, targets);
        if next > loss * (1.0 + LOSS_TOLERANCE) {
            report.loss_increases += 1;
        }
        loss = next;
        report.loss_trace.push(loss);
        report.round_errors.push(eps);
        if eps <= ERROR_FLOOR {
            report.stop = StopReason::Perfect;
            break;
        }
    }

    report.training_error = (0..n)
        .filter(|&i| (if margin[i] >= 0.0 { 1 } else { -1 }) != targets[i])
        .count() as f64
        / n as f64;
    Ok((BoostedHashFunction { trees, weights: alphas }, report))
}

/// Normalized `exp(-z_i F_i)`, shifted for stability.
fn example_weights(margin: &[f64], targets: &[i8]) -> Vec<f64> {
    let shift = margin
        .iter()
        .zip(targets)
        .map(|(&m, &z)| z as f64 * m)
        .fold(f64::INFINITY, f64::min);
    let mut w: Vec<f64> = margin
        .iter()
        .zip(targets)
        .map(|(&m, &z)| (-(z as f64 * m - shift)).exp())
        .collect();
    let total: f64 = w.iter().sum();
    for v in &mut w {
        *v /= total;
    }
    w
}

fn exp_loss(margin: &[f64], targets: &[i8]) -> f64 {
    margin.iter().zip(targets).map(|(&m, &z)| (-(z as f64) * m).exp()).sum()
}

/// Indices of the `k` smallest weights; ties resolved by lower index.
fn smallest(weights: &[f64], k: usize) -> Vec<usize> {
    if k == 0 {
        return Vec::new();
    }
    let mut idx: Vec<usize> = (0..weights.len()).collect();
    let key = |&i: &usize| (weights[i], i);
    idx.select_nth_unstable_by(k - 1, |a, b| key(a).partial_cmp(&key(b)).unwrap());
    idx.truncate(k);
    idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boosting::tree::TreeNode;
    use crate::data::Quantizer;
    use rand::Rng;

    fn dataset(rows: &[Vec<u8>]) -> QuantizedDataset {
        let d = rows[0].len();
        let q = Quantizer::from_parts(vec![0.0; d], vec![1.0; d], 256).unwrap();
        QuantizedDataset::from_rows(rows, q).unwrap()
    }

    const SEQ: Parallelism = Parallelism::Sequential;

    #[test]
    fn closed_form_weight() {
        let eps: f64 = 0.1;
        let w = 0.5 * ((1.0 - eps) / eps).ln();
        assert!((w - 0.5 * 9f64.ln()).abs() < 1e-15);
        assert!((w - 1.0986).abs() < 1e-4);
    }

    #[test]
    fn separable_data_stops_after_one_tree() {
        let rows: Vec<Vec<u8>> = (0..20).map(|i| vec![if i < 10 { 5 } else { 250 }, (i * 7 % 256) as u8]).collect();
        let y: Vec<i8> = (0..20).map(|i| if i < 10 { -1 } else { 1 }).collect();
        let cfg = BoostConfig { rounds: 5, trim_fraction: 0.0, lazy_fraction: 1.0, ..Default::default() };
        let (h, rep) = fit_hash_function(&dataset(&rows), &y, &cfg, 0, SEQ).unwrap();
        assert_eq!(h.trees().len(), 1);
        assert!(h.weights()[0] > 0.0);
        assert_eq!(rep.stop, StopReason::Perfect);
        assert_eq!(rep.training_error, 0.0);
    }

    #[test]
    fn weighted_vote() {
        let plus = DecisionTree::from_parts(1, vec![TreeNode::Pass], vec![1, 1]).unwrap();
        let minus = DecisionTree::from_parts(1, vec![TreeNode::Pass], vec![-1, -1]).unwrap();
        let single = BoostedHashFunction::new(vec![minus.clone()], vec![1.0]).unwrap();
        assert_eq!(hash_apply(&single, &vec![0u8]), -1);
        let h = BoostedHashFunction::new(vec![plus.clone(), minus.clone()], vec![2.0, 1.0]).unwrap();
        assert_eq!(hash_apply(&h, &vec![0u8]), 1);
        let tie = BoostedHashFunction::new(vec![plus, minus], vec![1.0, 1.0]).unwrap();
        assert_eq!(hash_apply(&tie, &vec![0u8]), 1);
        assert!(BoostedHashFunction::new(vec![], vec![1.0]).is_err());
    }

    fn two_clusters(n: usize, seed: u64) -> (QuantizedDataset, Vec<i8>) {
        let mut rng = crate::seed::stream(seed, "clusters", 0);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let c = i % 2;
            let row: Vec<u8> = (0..6)
                .map(|f| {
                    let center = if f < 3 { 90.0 + 70.0 * c as f64 } else { 128.0 };
                    (center + rng.random_range(-60.0..60.0f64)).clamp(0.0, 255.0) as u8
                })
                .collect();
            rows.push(row);
            // Some label noise keeps the problem from being separable.
            let flip = rng.random::<f64>() < 0.1;
            y.push(if (c == 1) != flip { 1 } else { -1 });
        }
        (dataset(&rows), y)
    }

    #[test]
    fn loss_decreases_on_two_clusters() {
        let (data, y) = two_clusters(200, 1);
        let cfg = BoostConfig {
            rounds: 200,
            tree: TreeParams { depth: 4, min_node: 1 },
            trim_fraction: 0.1,
            lazy_fraction: 1.0,
            permanent_trim: false,
        };
        let (h, rep) = fit_hash_function(&data, &y, &cfg, 3, Parallelism::Parallel).unwrap();
        assert_eq!(rep.loss_increases, 0);
        assert!(h.weights().iter().all(|&w| w >= 0.0));
        let steps = rep.loss_trace.len() - 1;
        let strict = rep.loss_trace.windows(2).filter(|w| w[1] < w[0]).count();
        assert!(strict as f64 >= 0.95 * steps as f64, "{strict}/{steps}");

        // Agreement on the training set equals 1 - final training error.
        let agree = (0..200).filter(|&i| h.apply(&data.point(i)) == y[i]).count() as f64 / 200.0;
        assert_eq!(agree, 1.0 - rep.training_error);
    }

    #[test]
    fn seq_and_parallel_match() {
        let (data, y) = two_clusters(120, 4);
        let cfg = BoostConfig { rounds: 20, ..Default::default() };
        let a = fit_hash_function(&data, &y, &cfg, 9, SEQ).unwrap();
        let b = fit_hash_function(&data, &y, &cfg, 9, Parallelism::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_validation() {
        let (data, y) = two_clusters(10, 0);
        for cfg in [
            BoostConfig { rounds: 0, ..Default::default() },
            BoostConfig { trim_fraction: 1.0, ..Default::default() },
            BoostConfig { lazy_fraction: 0.0, ..Default::default() },
            BoostConfig { tree: TreeParams { depth: 0, min_node: 1 }, ..Default::default() },
        ] {
            assert!(fit_hash_function(&data, &y, &cfg, 0, SEQ).is_err());
        }
    }

    #[test]
    fn trimming_picks_smallest_with_index_ties() {
        assert_eq!(smallest(&[0.3, 0.1, 0.1, 0.5], 2), vec![1, 2]);
        let mut s = smallest(&[0.2, 0.2, 0.2], 2);
        s.sort();
        assert_eq!(s, vec![0, 1]);
        assert!(smallest(&[1.0], 0).is_empty());
    }

    #[test]
    fn permanent_trim_still_descends() {
        let (data, y) = two_clusters(100, 8);
        let cfg = BoostConfig { rounds: 15, permanent_trim: true, trim_fraction: 0.05, ..Default::default() };
        let (_, rep) = fit_hash_function(&data, &y, &cfg, 2, SEQ).unwrap();
        assert_eq!(rep.loss_increases, 0);
    }

    /// Plain discrete AdaBoost over stumps, with routing and majority
    /// leaves written out by hand and an exhaustive stump search.
    fn plain_adaboost(data: &QuantizedDataset, y: &[i8], rounds: usize) -> Vec<(u32, u8, i8, [i8; 2], f64)> {
        let n = data.n();
        let mut w = vec![1.0 / n as f64; n];
        let mut out = Vec::new();
        for _ in 0..rounds {
            let mut best: Option<(f64, u32, u8, i8)> = None;
            for f in 0..data.d() {
                for t in 0..=254u8 {
                    for pol in [1i8, -1] {
                        let err: f64 = (0..n)
                            .filter(|&i| (if data.get(i, f) > t { pol } else { -pol }) != y[i])
                            .map(|i| w[i])
                            .sum();
                        if best.is_none_or(|b| err < b.0 - crate::boosting::TIE_TOLERANCE) {
                            best = Some((err, f as u32, t, pol));
                        }
                    }
                }
            }
            let (_, f, t, pol) = best.unwrap();
            let side = |i: usize| ((if data.get(i, f as usize) > t { pol } else { -pol }) > 0) as usize;
            let mut sums = [0.0f64; 2];
            for i in 0..n {
                sums[side(i)] += w[i] * y[i] as f64;
            }
            let leaves = [if sums[0] >= 0.0 { 1 } else { -1 }, if sums[1] >= 0.0 { 1 } else { -1 }];
            let pred = |i: usize| leaves[side(i)];
            let eps: f64 = (0..n).filter(|&i| pred(i) != y[i]).map(|i| w[i]).sum();
            let eps_c = eps.clamp(ERROR_FLOOR, 0.5 - ERROR_FLOOR);
            let alpha = 0.5 * ((1.0 - eps_c) / eps_c).ln();
            out.push((f, t, pol, leaves, alpha));
            for i in 0..n {
                w[i] *= (-alpha * y[i] as f64 * pred(i) as f64).exp();
            }
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v /= s);
        }
        out
    }

    #[test]
    fn reduces_to_plain_adaboost() {
        let (data, y) = two_clusters(60, 21);
        let cfg = BoostConfig {
            rounds: 8,
            tree: TreeParams { depth: 1, min_node: 1 },
            trim_fraction: 0.0,
            lazy_fraction: 1.0,
            permanent_trim: false,
        };
        let (h, _) = fit_hash_function(&data, &y, &cfg, 0, SEQ).unwrap();
        let reference = plain_adaboost(&data, &y, h.trees().len());
        assert_eq!(h.trees().len(), 8);
        for ((tree, &alpha), (f, t, pol, leaves, ref_alpha)) in h.trees().iter().zip(h.weights()).zip(reference) {
            assert_eq!(tree.nodes(), &[TreeNode::Split(crate::boosting::Stump { feature: f, threshold: t, polarity: pol })]);
            assert_eq!(tree.leaves(), &leaves);
            assert!((alpha - ref_alpha).abs() < 1e-9, "{alpha} vs {ref_alpha}");
        }
    }
}
