//! Training settings: defaults, overridden by a TOML file, overridden by
//! flags.

use std::path::Path;

use fasthash::data::{PairPolicy, PartialOverlap};
use fasthash::inference::InitPolicy;
use fasthash::trainer::TrainConfig;
use fasthash::{Error, Result};
use serde::Deserialize;

use crate::cli::TrainFlags;

/// Keys accepted in a config file. Names match the long flags, with
/// underscores.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub bits: Option<usize>,
    pub depth: Option<u32>,
    pub trees: Option<usize>,
    pub sweeps: Option<usize>,
    pub trim: Option<f64>,
    pub lazy: Option<f64>,
    pub seed: Option<u64>,
    pub tag_threshold: Option<usize>,
    pub pairs: Option<toml::Value>,
    pub min_node: Option<usize>,
    pub bin_count: Option<usize>,
    pub max_block_size: Option<usize>,
    pub outer_passes: Option<usize>,
    pub init: Option<String>,
    pub partial_overlap: Option<String>,
    pub permanent_trim: Option<bool>,
}

pub fn load_file(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| {
        let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1).unwrap_or(0);
        Error::Parse { path: path.display().to_string(), line, message: e.message().to_owned() }
    })
}

fn parse_pairs(s: &str) -> Result<PairPolicy> {
    match s {
        "full" => Ok(PairPolicy::Full),
        "auto" => Ok(PairPolicy::default()),
        n => match n.parse::<usize>() {
            Ok(per_point) if per_point > 0 => Ok(PairPolicy::Sampled { per_point }),
            _ => Err(Error::Input(format!("pairs must be `full`, `auto` or a positive count, got {s:?}"))),
        },
    }
}

fn pairs_from_toml(v: &toml::Value) -> Result<PairPolicy> {
    match v {
        toml::Value::String(s) => parse_pairs(s),
        toml::Value::Integer(n) if *n > 0 => Ok(PairPolicy::Sampled { per_point: *n as usize }),
        other => Err(Error::Input(format!("pairs must be `full`, `auto` or a positive count, got {other}"))),
    }
}

fn parse_init(s: &str) -> Result<InitPolicy> {
    match s {
        "random" => Ok(InitPolicy::Random),
        "all-positive" => Ok(InitPolicy::AllPositive),
        _ => Err(Error::Input(format!("init must be `random` or `all-positive`, got {s:?}"))),
    }
}

fn parse_partial(s: &str) -> Result<PartialOverlap> {
    match s {
        "dissimilar" => Ok(PartialOverlap::Dissimilar),
        "undefined" => Ok(PartialOverlap::Undefined),
        _ => Err(Error::Input(format!("partial overlap must be `dissimilar` or `undefined`, got {s:?}"))),
    }
}

/// Applies `file` then `flags` on top of the defaults.
pub fn resolve(file: &FileConfig, flags: &TrainFlags) -> Result<TrainConfig> {
    let mut c = TrainConfig::default();
    macro_rules! layer {
        ($src:expr) => {
            let s = $src;
            if let Some(v) = s.bits { c.bits = v; }
            if let Some(v) = s.depth { c.boost.tree.depth = v; }
            if let Some(v) = s.trees { c.boost.rounds = v; }
            if let Some(v) = s.sweeps { c.inference.max_sweeps = v; }
            if let Some(v) = s.trim { c.boost.trim_fraction = v; }
            if let Some(v) = s.lazy { c.boost.lazy_fraction = v; }
            if let Some(v) = s.seed { c.seed = v; }
            if let Some(v) = s.tag_threshold { c.tag_threshold = v; }
            if let Some(v) = s.min_node { c.boost.tree.min_node = v; }
            if let Some(v) = s.bin_count { c.bin_count = v; }
            if let Some(v) = s.max_block_size { c.max_block_size = Some(v); }
            if let Some(v) = s.outer_passes { c.outer_passes = v; }
            if let Some(v) = &s.init { c.init = parse_init(v)?; }
            if let Some(v) = &s.partial_overlap { c.partial_overlap = parse_partial(v)?; }
        };
    }
    layer!(file);
    if let Some(v) = &file.pairs {
        c.pairs = pairs_from_toml(v)?;
    }
    if let Some(v) = file.permanent_trim {
        c.boost.permanent_trim = v;
    }
    layer!(flags);
    if let Some(v) = &flags.pairs {
        c.pairs = parse_pairs(v)?;
    }
    if flags.permanent_trim {
        c.boost.permanent_trim = true;
    }
    c.validate().map_err(|e| match e {
        Error::Contract(m) => Error::Input(m),
        other => other,
    })?;
    Ok(c)
}
