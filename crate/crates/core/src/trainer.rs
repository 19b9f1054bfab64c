//! Bit-by-bit training: code inference, tree boosting, then overwriting the
//! bit with the learned function's output before moving on.

use std::io::{Read, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::blocks::{construct_blocks, BlockPartition, BlockStats, SeedOrder};
use crate::boosting::{fit_hash_function, BoostConfig, BoostedHashFunction, DecisionTree, FitReport, Stump, TreeNode};
use crate::data::{
    affinity_from_class_labels, affinity_from_tags, fit_quantizer, quantize, AffinityStore, PairPolicy,
    PartialOverlap, QuantizedDataset, Quantizer, RawDataset, TagSets, DEFAULT_BIN_COUNT,
};
use crate::error::{Error, Result};
use crate::inference::{
    bit_objective, compute_bit_coefficients, infer_with_energy, initial_bits, total_objective, CodeMatrix,
    InferConfig, InferStats, InitPolicy,
};
use crate::io::{read_exact_or, read_u32};
use crate::par::{self, Parallelism};
use crate::seed;

pub const MODEL_MAGIC: &[u8; 4] = b"FHSH";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub bits: usize,
    pub boost: BoostConfig,
    pub inference: InferConfig,
    pub init: InitPolicy,
    pub max_block_size: Option<usize>,
    /// Passes over all bits. Later passes start each bit from its current
    /// codes instead of a fresh initialisation.
    pub outer_passes: usize,
    pub bin_count: usize,
    pub pairs: PairPolicy,
    /// Shared-tag count at which two points become similar.
    pub tag_threshold: usize,
    pub partial_overlap: PartialOverlap,
    pub seed: u64,
    /// Scheduling only; never changes results.
    #[serde(skip)]
    pub parallelism: Parallelism,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            bits: 64,
            boost: BoostConfig::default(),
            inference: InferConfig::default(),
            init: InitPolicy::default(),
            max_block_size: None,
            outer_passes: 1,
            bin_count: DEFAULT_BIN_COUNT,
            pairs: PairPolicy::default(),
            tag_threshold: 2,
            partial_overlap: PartialOverlap::default(),
            seed: 0,
            parallelism: Parallelism::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bits == 0 {
            return Err(Error::contract("need at least one bit"));
        }
        if self.outer_passes == 0 {
            return Err(Error::contract("need at least one outer pass"));
        }
        if !(2..=256).contains(&self.bin_count) {
            return Err(Error::contract(format!("bin count {} outside 2..=256", self.bin_count)));
        }
        if self.tag_threshold == 0 {
            return Err(Error::contract("tag threshold must be at least 1"));
        }
        self.boost.validate()
    }

    pub fn affinity_from_labels(&self, labels: &[i64]) -> Result<AffinityStore> {
        affinity_from_class_labels(labels, self.pairs, self.seed, self.parallelism)
    }

    pub fn affinity_from_tags(&self, tags: &TagSets) -> Result<AffinityStore> {
        affinity_from_tags(tags, self.tag_threshold, self.partial_overlap, self.pairs, self.seed, self.parallelism)
    }
}

/// `m` boosted hash functions sharing one quantizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HashModel {
    quantizer: Quantizer,
    functions: Vec<BoostedHashFunction>,
    /// Settings the model was trained with. Kept in the JSON mirror only.
    config: Option<TrainConfig>,
}

impl HashModel {
    pub fn new(quantizer: Quantizer, functions: Vec<BoostedHashFunction>, config: Option<TrainConfig>) -> Result<Self> {
        if functions.is_empty() {
            return Err(Error::format("model has no hash functions"));
        }
        let d = quantizer.dims();
        let bins = quantizer.bin_count();
        for h in &functions {
            for s in h.trees().iter().flat_map(|t| t.splits()) {
                if s.feature as usize >= d || s.threshold as usize >= bins {
                    return Err(Error::format(format!(
                        "split on feature {} bin {} outside a {d}-dim, {bins}-bin quantizer",
                        s.feature, s.threshold
                    )));
                }
            }
        }
        Ok(HashModel { quantizer, functions, config })
    }

    pub fn bits(&self) -> usize {
        self.functions.len()
    }

    pub fn dims(&self) -> usize {
        self.quantizer.dims()
    }

    pub fn quantizer(&self) -> &Quantizer {
        &self.quantizer
    }

    pub fn functions(&self) -> &[BoostedHashFunction] {
        &self.functions
    }

    pub fn config(&self) -> Option<&TrainConfig> {
        self.config.as_ref()
    }

    /// Codes for already quantized points.
    pub fn encode_quantized(&self, data: &QuantizedDataset, mode: Parallelism) -> Result<CodeMatrix> {
        if data.d() != self.dims() {
            return Err(Error::input(format!("points have {} dimensions, model expects {}", data.d(), self.dims())));
        }
        let n = data.n();
        let rows: Vec<Vec<i8>> = self
            .functions
            .iter()
            .map(|h| par::map_indexed(n, mode, |i| h.apply(&data.point(i))))
            .collect();
        CodeMatrix::from_rows(&rows)
    }

    /// Quantizes with the embedded quantizer, then applies every function.
    pub fn encode(&self, raw: &RawDataset, mode: Parallelism) -> Result<CodeMatrix> {
        if raw.d() != self.dims() {
            return Err(Error::input(format!("points have {} dimensions, model expects {}", raw.d(), self.dims())));
        }
        self.encode_quantized(&quantize(raw, &self.quantizer, mode)?, mode)
    }

    /// Number of splitting nodes using each feature, over all trees.
    pub fn feature_usage(&self) -> Vec<usize> {
        let mut counts = vec![0; self.dims()];
        for h in &self.functions {
            for s in h.trees().iter().flat_map(|t| t.splits()) {
                counts[s.feature as usize] += 1;
            }
        }
        counts
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let q = &self.quantizer;
        w.write_all(MODEL_MAGIC)?;
        for v in [MODEL_FORMAT_VERSION, self.bits() as u32, q.dims() as u32, q.bin_count() as u32] {
            w.write_all(&v.to_le_bytes())?;
        }
        for (lo, width) in q.lower().iter().zip(q.width()) {
            w.write_all(&lo.to_le_bytes())?;
            w.write_all(&width.to_le_bytes())?;
        }
        for h in &self.functions {
            w.write_all(&(h.trees().len() as u32).to_le_bytes())?;
            for t in h.trees() {
                w.write_all(&t.depth().to_le_bytes())?;
                for node in t.nodes() {
                    // A pass-through node is stored with polarity 0.
                    let (f, th, p) = match node {
                        TreeNode::Split(s) => (s.feature, s.threshold, s.polarity),
                        TreeNode::Pass => (0, 0, 0),
                    };
                    w.write_all(&f.to_le_bytes())?;
                    w.write_all(&[th, p as u8])?;
                }
                let leaves: Vec<u8> = t.leaves().iter().map(|&l| l as u8).collect();
                w.write_all(&leaves)?;
            }
            for wt in h.weights() {
                w.write_all(&wt.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn to_binary(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_binary(&mut buf).expect("writing to memory cannot fail");
        buf
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        read_exact_or(&mut r, &mut magic, "model header")?;
        if &magic != MODEL_MAGIC {
            return Err(Error::format("not a model file"));
        }
        let version = read_u32(&mut r, "model header")?;
        if version != MODEL_FORMAT_VERSION {
            return Err(Error::format(format!("unsupported model format version {version}")));
        }
        let m = read_u32(&mut r, "model header")? as usize;
        let d = read_u32(&mut r, "model header")? as usize;
        let bins = read_u32(&mut r, "model header")? as usize;
        let (mut lower, mut width) = (Vec::with_capacity(d), Vec::with_capacity(d));
        for _ in 0..d {
            lower.push(read_f64(&mut r)?);
            width.push(read_f64(&mut r)?);
        }
        let quantizer = Quantizer::from_parts(lower, width, bins).map_err(|e| Error::format(e.to_string()))?;
        let mut functions = Vec::with_capacity(m);
        for _ in 0..m {
            let q = read_u32(&mut r, "tree count")? as usize;
            let mut trees = Vec::with_capacity(q.min(1 << 16));
            for _ in 0..q {
                let depth = read_u32(&mut r, "tree depth")?;
                if depth == 0 || depth > 20 {
                    return Err(Error::format(format!("tree depth {depth} outside 1..=20")));
                }
                let width = 1usize << depth;
                let mut nodes = Vec::with_capacity(width - 1);
                for _ in 0..width - 1 {
                    let feature = read_u32(&mut r, "tree node")?;
                    let mut b = [0u8; 2];
                    read_exact_or(&mut r, &mut b, "tree node")?;
                    let polarity = b[1] as i8;
                    nodes.push(match polarity {
                        0 => TreeNode::Pass,
                        _ => TreeNode::Split(Stump { feature, threshold: b[0], polarity }),
                    });
                }
                let mut leaves = vec![0u8; width];
                read_exact_or(&mut r, &mut leaves, "tree leaves")?;
                trees.push(DecisionTree::from_parts(depth, nodes, leaves.into_iter().map(|l| l as i8).collect())?);
            }
            let mut weights = Vec::with_capacity(q);
            for _ in 0..q {
                weights.push(read_f64(&mut r)?);
            }
            functions.push(BoostedHashFunction::new(trees, weights)?);
        }
        let mut extra = [0u8; 1];
        if r.read(&mut extra)? != 0 {
            return Err(Error::format("trailing bytes after model"));
        }
        HashModel::new(quantizer, functions, None)
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Mirror<'a> {
            format_version: u32,
            bits: usize,
            dims: usize,
            #[serde(flatten)]
            model: &'a HashModel,
        }
        let mirror = Mirror { format_version: MODEL_FORMAT_VERSION, bits: self.bits(), dims: self.dims(), model: self };
        serde_json::to_string_pretty(&mirror).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: HashModel = serde_json::from_str(text).map_err(|e| Error::format(format!("model JSON: {e}")))?;
        HashModel::new(m.quantizer, m.functions, m.config)
    }
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact_or(r, &mut b, "model body")?;
    Ok(f64::from_le_bytes(b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitReport {
    /// 1-based bit index.
    pub bit: usize,
    pub pass: usize,
    pub inference: InferStats,
    pub boosting: FitReport,
    /// Fraction of points where the learned function reproduces the
    /// inferred bit.
    pub agreement: f64,
    /// Bit objective of the inferred codes and of the function's output.
    pub inferred_objective: i64,
    pub feedback_objective: i64,
    pub inference_seconds: f64,
    pub boosting_seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub quantize: f64,
    pub blocks: f64,
    pub inference: f64,
    pub boosting: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub blocks: BlockStats,
    pub bits: Vec<BitReport>,
    /// Normalized objective of the final training codes over all bits.
    pub final_objective: f64,
    pub timings: PhaseTimings,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub model: HashModel,
    /// Training codes after the last overwrite; equal to encoding the
    /// training set with `model`.
    pub codes: CodeMatrix,
    pub partition: BlockPartition,
    pub report: TrainReport,
}

/// Trains `cfg.bits` hash functions on `data` supervised by `affinity`.
pub fn train(data: &RawDataset, affinity: &AffinityStore, cfg: &TrainConfig) -> Result<TrainOutput> {
    cfg.validate()?;
    let n = data.n();
    if affinity.n() != n {
        return Err(Error::contract(format!("affinity covers {} points, data has {n}", affinity.n())));
    }
    if affinity.pair_count() == 0 {
        return Err(Error::contract("affinity has no defined pair"));
    }
    let mode = cfg.parallelism;
    let start = Instant::now();
    let mut timings = PhaseTimings::default();

    let t = Instant::now();
    let quantizer = fit_quantizer(data, cfg.bin_count, mode)?;
    let qdata = quantize(data, &quantizer, mode)?;
    timings.quantize = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let order = SeedOrder::Random(seed::derive(cfg.seed, "blocks", 0));
    let partition = construct_blocks(affinity, n, order, cfg.max_block_size);
    timings.blocks = t.elapsed().as_secs_f64();
    let stats = partition.stats();
    log::info!("{} blocks, mean size {:.2}", stats.count, stats.mean_size);

    let m = cfg.bits;
    let mut codes = CodeMatrix::new(m, n);
    let mut functions: Vec<Option<BoostedHashFunction>> = vec![None; m];
    let mut reports = Vec::with_capacity(m * cfg.outer_passes);
    for pass in 0..cfg.outer_passes {
        let pass_seed = if pass == 0 { cfg.seed } else { seed::derive(cfg.seed, "pass", pass as u64) };
        for k in 1..=m {
            let t = Instant::now();
            let init = if pass == 0 { initial_bits(n, cfg.init, cfg.seed, k) } else { codes.row(k - 1) };
            let energy = compute_bit_coefficients(k, affinity, &codes, mode)?;
            let inferred = infer_with_energy(&energy, &partition, &cfg.inference, &init, pass_seed, mode)?;
            let inference_seconds = t.elapsed().as_secs_f64();

            let t = Instant::now();
            let boost_seed = seed::derive(cfg.seed, "boost", (pass * m + k) as u64);
            let (h, fit) = fit_hash_function(&qdata, &inferred.bits, &cfg.boost, boost_seed, mode)?;
            let output: Vec<i8> = par::map_indexed(n, mode, |i| h.apply(&qdata.point(i)));
            let boosting_seconds = t.elapsed().as_secs_f64();

            let agree = output.iter().zip(&inferred.bits).filter(|(a, b)| a == b).count();
            let inferred_objective = *inferred.stats.objective_trace.last().unwrap();
            let feedback_objective = bit_objective(&output, &energy, mode);
            codes.set_row(k - 1, &output)?;
            functions[k - 1] = Some(h);
            log::debug!(
                "bit {k}: objective {inferred_objective} -> {feedback_objective} after feedback, {} trees",
                fit.round_errors.len()
            );
            timings.inference += inference_seconds;
            timings.boosting += boosting_seconds;
            reports.push(BitReport {
                bit: k,
                pass,
                inference: inferred.stats,
                boosting: fit,
                agreement: agree as f64 / n as f64,
                inferred_objective,
                feedback_objective,
                inference_seconds,
                boosting_seconds,
            });
        }
    }
    let final_objective = total_objective(&codes, affinity, m, mode)?;
    timings.total = start.elapsed().as_secs_f64();

    let functions = functions.into_iter().map(|f| f.expect("every bit trained")).collect();
    let model = HashModel::new(quantizer, functions, Some(*cfg))?;
    Ok(TrainOutput {
        model,
        codes,
        partition,
        report: TrainReport { blocks: stats, bits: reports, final_objective, timings },
    })
}

/// Codes for raw points under `model`.
pub fn encode(model: &HashModel, raw: &RawDataset, mode: Parallelism) -> Result<CodeMatrix> {
    model.encode(raw, mode)
}
