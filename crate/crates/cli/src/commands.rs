use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use fasthash::data::{RawDataset, TagSets};
use fasthash::eval::{evaluate_codes, ClassRelevance, MetricsConfig, Relevance, TagRelevance};
use fasthash::io;
use fasthash::synth::{gaussian_clusters, SynthConfig};
use fasthash::trainer::{train as train_model, HashModel, MODEL_MAGIC};
use fasthash::{Error, Parallelism, Result};

use crate::cli::{EncodeArgs, EvalArgs, FeatureFormat, InspectArgs, InspectTarget, SynthArgs, TrainArgs};
use crate::config;
use crate::manifest::{digest_file, summarize, RunManifest, Timings};

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_features(path: &Path, data: &RawDataset, format: FeatureFormat) -> Result<()> {
    let mut w = create(path)?;
    match format {
        FeatureFormat::Binary => io::write_features_binary(&mut w, data)?,
        FeatureFormat::Csv => io::write_features_csv(&mut w, data)?,
    }
    w.flush()?;
    Ok(())
}

fn write_labels(path: &Path, labels: &[i64]) -> Result<()> {
    let mut w = create(path)?;
    io::write_labels(&mut w, labels)?;
    w.flush()?;
    Ok(())
}

pub fn synth(a: &SynthArgs) -> Result<()> {
    let mut cfg = SynthConfig::new(a.n, a.d, a.classes, a.spread, a.seed);
    cfg.informative = a.informative;
    let data = gaussian_clusters(&cfg)?;
    std::fs::create_dir_all(&a.out)?;
    let ext = match a.format {
        FeatureFormat::Binary => "thd",
        FeatureFormat::Csv => "csv",
    };
    let mut written = Vec::new();
    let mut emit = |name: &str, x: &RawDataset, y: &[i64]| -> Result<()> {
        let f = a.out.join(format!("{name}.{ext}"));
        let l = a.out.join(format!("{name}.labels"));
        write_features(&f, x, a.format)?;
        write_labels(&l, y)?;
        written.push(f);
        written.push(l);
        Ok(())
    };
    match a.train {
        None => emit("features", &data.features, &data.labels)?,
        Some(t) => {
            let ((xt, yt), (xq, yq)) = fasthash::synth::split(&data, t)?;
            emit("train", &xt, &yt)?;
            emit("query", &xq, &yq)?;
        }
    }
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

pub fn train(a: &TrainArgs, mode: Parallelism) -> Result<()> {
    let start = Instant::now();
    let file_cfg = match &a.config {
        Some(p) => config::load_file(p)?,
        None => config::FileConfig::default(),
    };
    let mut cfg = config::resolve(&file_cfg, &a.settings)?;
    cfg.parallelism = mode;

    let t = Instant::now();
    let data = io::load_features(&a.features)?;
    let mut inputs = vec![a.features.clone()];
    enum Supervision {
        Labels(Vec<i64>),
        Tags(TagSets),
    }
    let (sup, count) = if let Some(p) = &a.labels {
        inputs.push(p.clone());
        let l = io::load_labels(p)?;
        let n = l.len();
        (Supervision::Labels(l), n)
    } else {
        let p = a.tags.as_ref().expect("clap requires labels or tags");
        inputs.push(p.clone());
        let t = TagSets::from_tokens(&io::load_tags(p)?);
        let n = t.len();
        (Supervision::Tags(t), n)
    };
    if count != data.n() {
        return Err(Error::Input(format!("{} feature rows but {count} supervision lines", data.n())));
    }
    if let Some(p) = &a.config {
        inputs.push(p.clone());
    }
    let load = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let affinity = match &sup {
        Supervision::Labels(l) => cfg.affinity_from_labels(l)?,
        Supervision::Tags(tags) => cfg.affinity_from_tags(tags)?,
    };
    if affinity.pair_count() == 0 {
        return Err(Error::Input("supervision defines no pairwise relation".into()));
    }
    let affinity_time = t.elapsed().as_secs_f64();
    log::info!("{} defined pairs over {} points", affinity.pair_count(), data.n());

    let out = train_model(&data, &affinity, &cfg)?;

    let t = Instant::now();
    let mut outputs = vec![a.out.clone()];
    {
        let mut w = create(&a.out)?;
        out.model.write_binary(&mut w)?;
        w.flush()?;
    }
    let json_path = with_suffix(&a.out, ".json");
    std::fs::write(&json_path, out.model.to_json())?;
    outputs.push(json_path);
    if let Some(prefix) = &a.trace {
        let obj = with_suffix(prefix, ".objective.csv");
        let traces: Vec<Vec<i64>> = out.report.bits.iter().map(|b| b.inference.objective_trace.clone()).collect();
        let mut w = create(&obj)?;
        io::write_objective_trace(&mut w, &traces)?;
        w.flush()?;
        let loss = with_suffix(prefix, ".loss.csv");
        let traces: Vec<Vec<f64>> = out.report.bits.iter().map(|b| b.boosting.loss_trace.clone()).collect();
        let mut w = create(&loss)?;
        io::write_loss_trace(&mut w, &traces)?;
        w.flush()?;
        outputs.push(obj);
        outputs.push(loss);
    }
    if let Some(p) = &a.blocks {
        let mut w = create(p)?;
        io::write_blocks(&mut w, &out.partition)?;
        w.flush()?;
        outputs.push(p.clone());
    }
    let write = t.elapsed().as_secs_f64();

    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        args: std::env::args().skip(1).collect(),
        config: cfg,
        seed: cfg.seed,
        inputs: inputs.iter().map(|p| digest_file(p)).collect::<Result<_>>()?,
        outputs: outputs.iter().map(|p| digest_file(p)).collect::<Result<_>>()?,
        defined_pairs: affinity.pair_count(),
        blocks: out.report.blocks,
        bits: summarize(&out.report),
        final_objective: out.report.final_objective,
        timings: Timings {
            load,
            affinity: affinity_time,
            train: out.report.timings.clone(),
            write,
            total: start.elapsed().as_secs_f64(),
        },
    };
    let manifest_path = a.manifest.clone().unwrap_or_else(|| with_suffix(&a.out, ".manifest.json"));
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest).expect("manifest serializes"))?;
    println!(
        "trained {} bits on {} points; objective {:.4}; model {}",
        cfg.bits,
        data.n(),
        out.report.final_objective,
        a.out.display()
    );
    Ok(())
}

fn load_model(path: &Path) -> Result<HashModel> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.starts_with(MODEL_MAGIC) {
        HashModel::read_binary(&bytes[..])
    } else if bytes.first() == Some(&b'{') {
        HashModel::from_json(std::str::from_utf8(&bytes).map_err(|_| Error::Format("model JSON is not UTF-8".into()))?)
    } else {
        Err(Error::Format(format!("{}: unknown file magic, expected a model", path.display())))
    }
}

pub fn encode(a: &EncodeArgs, mode: Parallelism) -> Result<()> {
    let model = load_model(&a.model)?;
    let data = io::load_features(&a.features)?;
    let codes = model.encode(&data, mode)?;
    io::save_codes(&a.out, &codes)?;
    println!("encoded {} points with {} bits into {}", codes.n(), codes.m(), a.out.display());
    Ok(())
}

pub fn eval(a: &EvalArgs, mode: Parallelism) -> Result<()> {
    let db = io::load_codes(&a.db)?;
    let q = io::load_codes(&a.query)?;
    if db.m() != q.m() {
        return Err(Error::Input(format!("database codes have {} bits, query codes {}", db.m(), q.m())));
    }
    let cfg = MetricsConfig { k: a.k, map_cutoff: a.map_cutoff };
    let labels;
    let tags;
    let truth: Box<dyn Relevance> = match (&a.db_labels, &a.query_labels, &a.db_tags, &a.query_tags) {
        (Some(dl), Some(ql), _, _) => {
            labels = (io::load_labels(dl)?, io::load_labels(ql)?);
            check_count(labels.0.len(), db.n(), dl)?;
            check_count(labels.1.len(), q.n(), ql)?;
            Box::new(ClassRelevance { query: &labels.1, database: &labels.0 })
        }
        (_, _, Some(dt), Some(qt)) => {
            let (d, qq) = (io::load_tags(dt)?, io::load_tags(qt)?);
            check_count(d.len(), db.n(), dt)?;
            check_count(qq.len(), q.n(), qt)?;
            tags = TagSets::from_token_groups(&[&qq, &d]);
            Box::new(TagRelevance { query: &tags[0], database: &tags[1], threshold: a.tag_threshold })
        }
        _ => return Err(Error::Input("ground truth needs --db-labels/--query-labels or --db-tags/--query-tags".into())),
    };
    let report = evaluate_codes(&db, &q, truth.as_ref(), &cfg, mode)?;
    let json = report.to_json();
    match &a.out {
        Some(p) => std::fs::write(p, format!("{json}\n"))?,
        None => println!("{json}"),
    }
    if let Some(p) = &a.per_query {
        let mut w = create(p)?;
        report.write_per_query_csv(&mut w)?;
        w.flush()?;
    }
    if let Some(p) = &a.pr_curve {
        let mut w = create(p)?;
        report.write_pr_curve_csv(&mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn check_count(got: usize, want: usize, path: &Path) -> Result<()> {
    if got != want {
        return Err(Error::Input(format!("{}: {got} lines, expected {want}", path.display())));
    }
    Ok(())
}

pub fn inspect(a: &InspectArgs) -> Result<()> {
    match &a.what {
        InspectTarget::Model { path } => inspect_model(path),
        InspectTarget::Trace { path } => inspect_trace(path),
        InspectTarget::Blocks { path } => inspect_blocks(path),
    }
}

fn inspect_model(path: &Path) -> Result<()> {
    let model = load_model(path)?;
    let trees: Vec<_> = model.functions().iter().flat_map(|h| h.trees()).collect();
    let internal: usize = trees.iter().map(|t| t.nodes().len()).sum();
    let splits: usize = trees.iter().map(|t| t.splits().count()).sum();
    let depths: BTreeMap<u32, usize> = trees.iter().fold(BTreeMap::new(), |mut m, t| {
        *m.entry(t.depth()).or_default() += 1;
        m
    });
    println!("bits: {}", model.bits());
    println!("dimensions: {}", model.dims());
    println!("bins: {}", model.quantizer().bin_count());
    println!("trees: {}", trees.len());
    for (d, c) in &depths {
        println!("  depth {d}: {c}");
    }
    let per_bit: Vec<String> = model.functions().iter().map(|h| h.trees().len().to_string()).collect();
    println!("trees per bit: {}", per_bit.join(" "));
    println!("internal nodes: {internal} ({splits} splits, {} pass-through)", internal - splits);
    let usage = model.feature_usage();
    let used = usage.iter().filter(|&&c| c > 0).count();
    println!("features used: {used} of {} (histogram total {})", model.dims(), usage.iter().sum::<usize>());
    let mut ranked: Vec<(usize, usize)> = usage.iter().copied().enumerate().filter(|x| x.1 > 0).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    for (f, c) in ranked.iter().take(20) {
        println!("  feature {f}: {c}");
    }
    if let Some(c) = model.config() {
        println!("config: {}", serde_json::to_string(c).expect("config serializes"));
    }
    Ok(())
}

fn inspect_trace(path: &Path) -> Result<()> {
    let rows = io::read_objective_trace(BufReader::new(File::open(path)?), &path.display().to_string())?;
    let mut by_bit: BTreeMap<usize, Vec<i64>> = BTreeMap::new();
    for (bit, _, v) in rows {
        by_bit.entry(bit).or_default().push(v);
    }
    let mut increases = 0;
    for (bit, t) in &by_bit {
        increases += t.windows(2).filter(|w| w[1] > w[0]).count();
        let vals: Vec<String> = t.iter().map(|v| v.to_string()).collect();
        println!("bit {bit}: {}", vals.join(" -> "));
    }
    println!("bits: {}, sweep increases: {increases}", by_bit.len());
    Ok(())
}

fn inspect_blocks(path: &Path) -> Result<()> {
    let p = io::read_blocks(BufReader::new(File::open(path)?), &path.display().to_string(), None)?;
    let s = p.stats();
    println!("blocks: {}", s.count);
    println!("points: {}", p.n());
    println!("mean size: {:.3}", s.mean_size);
    println!("min size: {}", s.min_size);
    println!("max size: {}", s.max_size);
    println!("coverage ratio: {:.4}", s.coverage_ratio);
    let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
    for b in p.blocks() {
        *hist.entry(b.len()).or_default() += 1;
    }
    for (size, c) in hist {
        println!("  size {size}: {c}");
    }
    Ok(())
}
