use std::io::Read;
use std::path::Path;

use fasthash::blocks::BlockStats;
use fasthash::trainer::{PhaseTimings, TrainConfig, TrainReport};
use fasthash::Result;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

pub fn digest_file(path: &Path) -> Result<FileDigest> {
    let mut f = std::fs::File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut bytes = 0u64;
    loop {
        let k = f.read(&mut buf)?;
        if k == 0 {
            break;
        }
        bytes += k as u64;
        hasher.update(&buf[..k]);
    }
    Ok(FileDigest { path: path.display().to_string(), sha256: hex::encode(hasher.finalize()), bytes })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitSummary {
    pub bit: usize,
    pub pass: usize,
    /// Bit objective before the first sweep and after the last.
    pub initial_objective: i64,
    pub inferred_objective: i64,
    pub feedback_objective: i64,
    pub trees: usize,
    pub training_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub load: f64,
    pub affinity: f64,
    pub train: PhaseTimings,
    pub write: f64,
    pub total: f64,
}

/// Record of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    /// Command line as invoked, program name excluded.
    pub args: Vec<String>,
    pub config: TrainConfig,
    pub seed: u64,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub defined_pairs: usize,
    pub blocks: BlockStats,
    pub bits: Vec<BitSummary>,
    pub final_objective: f64,
    pub timings: Timings,
}

pub fn summarize(report: &TrainReport) -> Vec<BitSummary> {
    report
        .bits
        .iter()
        .map(|b| BitSummary {
            bit: b.bit,
            pass: b.pass,
            initial_objective: b.inference.objective_trace[0],
            inferred_objective: b.inferred_objective,
            feedback_objective: b.feedback_objective,
            trees: b.boosting.round_errors.len(),
            training_error: b.boosting.training_error,
        })
        .collect()
}
