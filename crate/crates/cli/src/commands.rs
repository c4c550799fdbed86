use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use log::info;
use serde_json::json;

use rlr_core::bench::{run_knn_bench, run_range_bench, BenchReport, NamedIndex};
use rlr_core::datagen::{gen_dataset, gen_knn_workload, gen_test_queries, DataGenConfig};
use rlr_core::dqn::{load_model, load_model_checked, save_model, AgentKind, QNetwork};
use rlr_core::io::{
    ingest_points_csv, read_dataset, read_knn_queries, read_queries, write_dataset, write_knn_queries,
    write_queries, KnnQuery,
};
use rlr_core::snapshot::{load_snapshot, save_snapshot, snapshot_dims};
use rlr_core::trainer::{build_rlr_tree, train_choose_subtree, train_combined, train_split, TrainConfig, TrainEvent};
use rlr_core::{Error, RTree};

use crate::manifest::Manifest;
use crate::{
    parse_policy, AgentChoice, BenchArgs, BuildArgs, GenDataArgs, GenKnnArgs, GenQueriesArgs, IngestArgs,
    InspectArgs, TrainArgs,
};

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_INTERNAL: u8 = 3;

/// Bad invocation: missing inputs, conflicting or incomplete options.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Inputs that parse but fail a check.
#[derive(Debug)]
pub struct DataError(pub String);

impl fmt::Display for DataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for DataError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<UsageError>() {
            return EXIT_USAGE;
        }
        if cause.is::<DataError>() {
            return EXIT_DATA;
        }
        if let Some(err) = cause.downcast_ref::<Error>() {
            return match err {
                Error::NonFiniteLoss(_) => EXIT_INTERNAL,
                _ => EXIT_DATA,
            };
        }
    }
    EXIT_INTERNAL
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(usage(format!("input file not found: {}", path.display())))
    }
}

macro_rules! dispatch_dims {
    ($dims:expr, $func:ident ( $($arg:expr),* )) => {
        match $dims {
            2 => $func::<2>($($arg),*),
            3 => $func::<3>($($arg),*),
            4 => $func::<4>($($arg),*),
            5 => $func::<5>($($arg),*),
            6 => $func::<6>($($arg),*),
            7 => $func::<7>($($arg),*),
            8 => $func::<8>($($arg),*),
            9 => $func::<9>($($arg),*),
            10 => $func::<10>($($arg),*),
            d => Err(usage(format!("unsupported dimensionality {d} (supported: 2..=10)"))),
        }
    };
}

pub fn gen_data(a: &GenDataArgs) -> Result<()> {
    let mut manifest = Manifest::new("gen-data", a)?;
    let cfg = DataGenConfig {
        distribution: a.dist,
        n: a.n,
        object_side: a.side,
        skew_c: a.skew_c,
        gauss_mu: a.mu,
        gauss_sigma: a.sigma,
        seed: a.seed,
    };
    dispatch_dims!(a.dims, gen_data_d(&cfg, &a.out))?;
    info!("wrote {} {} objects to {}", a.n, a.dist, a.out.display());
    manifest.seed("data", a.seed);
    manifest.output("dataset", &a.out)?;
    manifest.write(&a.out)?;
    Ok(())
}

fn gen_data_d<const D: usize>(cfg: &DataGenConfig, out: &Path) -> Result<()> {
    let data = gen_dataset::<D>(cfg)?;
    write_dataset(out, &data).with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}

pub fn gen_queries(a: &GenQueriesArgs) -> Result<()> {
    if !(a.size > 0.0 && a.size <= 1.0) {
        return Err(usage("--size must lie in (0, 1]"));
    }
    let mut manifest = Manifest::new("gen-queries", a)?;
    dispatch_dims!(a.dims, gen_queries_d(a))?;
    info!("wrote {} queries of size {} to {}", a.count, a.size, a.out.display());
    manifest.seed("queries", a.seed);
    manifest.output("queries", &a.out)?;
    manifest.write(&a.out)?;
    Ok(())
}

fn gen_queries_d<const D: usize>(a: &GenQueriesArgs) -> Result<()> {
    let queries = gen_test_queries::<D>(a.count, a.size, a.seed);
    write_queries(&a.out, &queries).with_context(|| format!("writing {}", a.out.display()))?;
    Ok(())
}

pub fn gen_knn(a: &GenKnnArgs) -> Result<()> {
    if a.k.is_empty() || a.k.contains(&0) {
        return Err(usage("--k needs positive values"));
    }
    let mut manifest = Manifest::new("gen-knn", a)?;
    dispatch_dims!(a.dims, gen_knn_d(a))?;
    info!("wrote {} KNN queries to {}", a.count * a.k.len(), a.out.display());
    manifest.seed("knn_points", a.seed);
    manifest.output("queries", &a.out)?;
    manifest.write(&a.out)?;
    Ok(())
}

fn gen_knn_d<const D: usize>(a: &GenKnnArgs) -> Result<()> {
    let points = gen_knn_workload::<D>(a.count, a.seed);
    let queries: Vec<KnnQuery<D>> = a
        .k
        .iter()
        .flat_map(|&k| points.iter().map(move |&point| KnnQuery { point, k }))
        .collect();
    write_knn_queries(&a.out, &queries).with_context(|| format!("writing {}", a.out.display()))?;
    Ok(())
}

pub fn ingest(a: &IngestArgs) -> Result<()> {
    require_file(&a.input)?;
    let mut manifest = Manifest::new("ingest", a)?;
    manifest.input("points", &a.input)?;
    let (n, scale) = dispatch_dims!(a.dims, ingest_d(&a.input, &a.out))?;
    info!("rescaled {n} points into {}", a.out.display());
    manifest.detail("objects", n)?;
    manifest.detail("scale", scale)?;
    manifest.output("dataset", &a.out)?;
    manifest.write(&a.out)?;
    Ok(())
}

fn ingest_d<const D: usize>(input: &Path, out: &Path) -> Result<(usize, rlr_core::io::Scale)> {
    let (objects, scale) = ingest_points_csv::<D>(input)?;
    write_dataset(out, &objects).with_context(|| format!("writing {}", out.display()))?;
    Ok((objects.len(), scale))
}

fn train_config(a: &TrainArgs) -> TrainConfig {
    TrainConfig {
        k: a.k,
        p: a.p,
        epochs_cs: a.epochs_cs,
        epochs_split: a.epochs_split,
        parts: a.parts,
        gamma_cs: a.gamma_cs,
        gamma_split: a.gamma_split,
        lr_cs: a.lr_cs,
        lr_split: a.lr_split,
        batch_size: a.batch,
        memory_capacity: a.memory,
        target_sync_every: a.sync_every,
        train_query_area_fraction: a.train_query_size,
        max_entries: a.max_entries,
        min_entries: a.min_entries,
        seed: a.seed,
        ..TrainConfig::default()
    }
}

/// Model files to write, in (agent, path) order.
fn model_outputs(a: &TrainArgs) -> Result<Vec<(AgentKind, PathBuf)>> {
    let need = |p: &Option<PathBuf>, flag: &str| {
        p.clone()
            .ok_or_else(|| usage(format!("--agent {} needs {flag}", agent_name(a.agent))))
    };
    Ok(match a.agent {
        AgentChoice::Cs => vec![(AgentKind::ChooseSubtree, need(&a.out_model, "--out-model")?)],
        AgentChoice::Split => vec![(AgentKind::Split, need(&a.out_model, "--out-model")?)],
        AgentChoice::Combined => vec![
            (AgentKind::ChooseSubtree, need(&a.out_cs, "--out-cs")?),
            (AgentKind::Split, need(&a.out_split, "--out-split")?),
        ],
    })
}

fn agent_name(a: AgentChoice) -> &'static str {
    match a {
        AgentChoice::Cs => "cs",
        AgentChoice::Split => "split",
        AgentChoice::Combined => "combined",
    }
}

pub fn train(a: &TrainArgs) -> Result<()> {
    require_file(&a.data)?;
    let outputs = model_outputs(a)?;
    let cfg = train_config(a);
    cfg.validate()?;
    let log_path = a.log.clone().unwrap_or_else(|| {
        let mut p = outputs[0].1.as_os_str().to_owned();
        p.push(".log");
        PathBuf::from(p)
    });
    let mut manifest = Manifest::new("train", &cfg)?;
    manifest.input("data", &a.data)?;
    manifest.detail("dims", a.dims)?;
    manifest.detail("agent", agent_name(a.agent))?;
    dispatch_dims!(a.dims, train_d(a, &cfg, &outputs, &log_path))?;
    manifest.seed("base", cfg.seed);
    for (kind, path) in &outputs {
        manifest.output(kind.as_str(), path)?;
    }
    manifest.output("log", &log_path)?;
    manifest.write(&outputs[0].1)?;
    Ok(())
}

fn train_d<const D: usize>(
    a: &TrainArgs,
    cfg: &TrainConfig,
    outputs: &[(AgentKind, PathBuf)],
    log_path: &Path,
) -> Result<()> {
    let data = read_dataset::<D>(&a.data)?;
    info!("training {} on {} objects", agent_name(a.agent), data.len());
    let mut log = BufWriter::new(
        File::create(log_path).with_context(|| format!("creating {}", log_path.display()))?,
    );
    let mut write_err: Option<std::io::Error> = None;
    let mut sink = |e: &TrainEvent| {
        match e {
            TrainEvent::Epoch { .. } => info!("{e}"),
            TrainEvent::Warning(msg) => log::warn!("{msg}"),
            TrainEvent::Round { .. } => {}
        }
        if write_err.is_none() {
            if let Err(err) = writeln!(log, "{e}") {
                write_err = Some(err);
            }
        }
    };
    let nets: Vec<QNetwork> = match a.agent {
        AgentChoice::Cs => vec![train_choose_subtree(&data, cfg, &mut sink)?],
        AgentChoice::Split => vec![train_split(&data, cfg, &mut sink)?],
        AgentChoice::Combined => {
            let (cs, sp) = train_combined(&data, cfg, &mut sink)?;
            vec![cs, sp]
        }
    };
    if let Some(err) = write_err {
        return Err(err).context("writing the training log");
    }
    log.flush().context("writing the training log")?;
    for ((kind, path), net) in outputs.iter().zip(&nets) {
        save_model(path, net, &cfg.model_meta(*kind, D, data.len()))
            .with_context(|| format!("writing {}", path.display()))?;
        info!("wrote {kind} model to {}", path.display());
    }
    Ok(())
}

pub fn build(a: &BuildArgs) -> Result<()> {
    let policy = parse_policy(&a.policy).map_err(usage)?;
    require_file(&a.data)?;
    if policy.is_none() && a.model_cs.is_none() && a.model_split.is_none() {
        return Err(usage("--policy rlr needs --model-cs and/or --model-split"));
    }
    if policy.is_some() && (a.model_cs.is_some() || a.model_split.is_some()) {
        return Err(usage("models are only used with --policy rlr"));
    }
    for p in a.model_cs.iter().chain(&a.model_split) {
        require_file(p)?;
    }
    let mut manifest = Manifest::new("build", a)?;
    manifest.input("data", &a.data)?;
    if let Some(p) = &a.model_cs {
        manifest.input("model_cs", p)?;
    }
    if let Some(p) = &a.model_split {
        manifest.input("model_split", p)?;
    }
    let summary = dispatch_dims!(a.dims, build_d(a, policy))?;
    manifest.detail("index", &summary)?;
    manifest.output("index", &a.out_index)?;
    manifest.write(&a.out_index)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn build_d<const D: usize>(a: &BuildArgs, policy: Option<rlr_core::PolicyName>) -> Result<serde_json::Value> {
    let data = read_dataset::<D>(&a.data)?;
    let started = Instant::now();
    let tree: RTree<D> = match policy {
        Some(name) => {
            let mut tree = RTree::new(a.max_entries, a.min_entries)?;
            tree.extend(data.iter().copied(), &mut name.policy());
            tree
        }
        None => {
            let load = |path: &Option<PathBuf>, kind| -> Result<Option<QNetwork>> {
                path.as_ref()
                    .map(|p| {
                        load_model_checked(p, kind, a.k, D)
                            .map(|(net, _)| net)
                            .with_context(|| format!("loading {}", p.display()))
                    })
                    .transpose()
            };
            let cs = load(&a.model_cs, AgentKind::ChooseSubtree)?;
            let sp = load(&a.model_split, AgentKind::Split)?;
            if let (Some(c), Some(s)) = (&cs, &sp) {
                if c.actions() != s.actions() {
                    return Err(Error::ModelMismatch(format!(
                        "ChooseSubtree model has k={}, Split model has k={}",
                        c.actions(),
                        s.actions()
                    ))
                    .into());
                }
            }
            build_rlr_tree(&data, cs.as_ref(), sp.as_ref(), a.max_entries, a.min_entries, a.k)?
        }
    };
    let build_seconds = started.elapsed().as_secs_f64();
    let violations = tree.validate();
    if let Some(v) = violations.first() {
        return Err(DataError(format!("built tree is invalid ({} violations): {v}", violations.len())).into());
    }
    save_snapshot(&a.out_index, &tree).with_context(|| format!("writing {}", a.out_index.display()))?;
    info!(
        "built {} over {} objects: height {}, {} nodes, {build_seconds:.2}s",
        a.policy,
        tree.len(),
        tree.height(),
        tree.node_count()
    );
    Ok(json!({
        "policy": a.policy,
        "dims": D,
        "objects": tree.len(),
        "height": tree.height(),
        "nodes": tree.node_count(),
        "max_entries": tree.max_entries(),
        "min_entries": tree.min_entries(),
        "build_seconds": build_seconds,
    }))
}

/// Splits `label=path`; a bare path is labeled by its file stem.
fn labeled(spec: &str) -> (String, PathBuf) {
    match spec.split_once('=') {
        Some((label, path)) if !label.is_empty() => (label.to_string(), PathBuf::from(path)),
        _ => {
            let path = PathBuf::from(spec);
            let label = path
                .file_stem()
                .map_or_else(|| spec.to_string(), |s| s.to_string_lossy().into_owned());
            (label, path)
        }
    }
}

pub fn bench(a: &BenchArgs, threads: usize) -> Result<()> {
    let mut indices = Vec::new();
    for spec in &a.indices {
        match spec.split_once('=') {
            Some((name, path)) if !name.is_empty() && !path.is_empty() => {
                indices.push((name.to_string(), PathBuf::from(path)))
            }
            _ => return Err(usage(format!("--index expects NAME=PATH, got `{spec}`"))),
        }
    }
    for (i, (name, _)) in indices.iter().enumerate() {
        if indices[..i].iter().any(|(n, _)| n == name) {
            return Err(usage(format!("index name `{name}` given twice")));
        }
    }
    let baseline = match &a.baseline {
        Some(b) => indices
            .iter()
            .position(|(n, _)| n == b)
            .ok_or_else(|| usage(format!("baseline `{b}` is not among the indices")))?,
        None => 0,
    };
    let queries: Vec<(String, PathBuf)> = a.queries.iter().map(|s| labeled(s)).collect();
    if queries.is_empty() && a.knn.is_none() {
        return Err(usage("nothing to run: pass --queries and/or --knn"));
    }
    for (_, p) in indices.iter().chain(&queries) {
        require_file(p)?;
    }
    if let Some(p) = &a.knn {
        require_file(p)?;
    }
    let dims = snapshot_dims(&indices[0].1)?;
    let mut manifest = Manifest::new("bench", a)?;
    for (name, path) in &indices {
        manifest.input(&format!("index:{name}"), path)?;
    }
    for (label, path) in &queries {
        manifest.input(&format!("queries:{label}"), path)?;
    }
    if let Some(p) = &a.knn {
        manifest.input("knn", p)?;
    }
    let report = dispatch_dims!(dims, bench_d(&indices, baseline, &queries, a.knn.as_deref(), threads != 1))?;
    let mut csv = a.report.as_os_str().to_owned();
    csv.push(".csv");
    let mut js = a.report.as_os_str().to_owned();
    js.push(".json");
    let (csv, js) = (PathBuf::from(csv), PathBuf::from(js));
    report.write_csv(&csv)?;
    report.write_json(&js)?;
    manifest.output("csv", &csv)?;
    manifest.output("json", &js)?;
    manifest.write(&a.report)?;
    println!("{}", serde_json::to_string_pretty(&report.summary_json())?);
    Ok(())
}

fn bench_d<const D: usize>(
    specs: &[(String, PathBuf)],
    baseline: usize,
    queries: &[(String, PathBuf)],
    knn: Option<&Path>,
    parallel: bool,
) -> Result<BenchReport> {
    let mut trees = Vec::with_capacity(specs.len());
    for (_, path) in specs {
        let tree: RTree<D> = load_snapshot(path).with_context(|| format!("loading {}", path.display()))?;
        trees.push(tree);
    }
    let named: Vec<NamedIndex<'_, D>> = specs
        .iter()
        .zip(&trees)
        .map(|((name, _), tree)| NamedIndex::new(name, tree))
        .collect();
    let mut report: Option<BenchReport> = None;
    let mut add = |r: BenchReport| -> Result<()> {
        match &mut report {
            Some(acc) => acc.merge(r)?,
            None => report = Some(r),
        }
        Ok(())
    };
    for (label, path) in queries {
        let windows = read_queries::<D>(path)?;
        info!("{label}: {} range queries", windows.len());
        add(run_range_bench(&named, &windows, baseline, label, parallel)?)?;
    }
    if let Some(path) = knn {
        let points = read_knn_queries::<D>(path)?;
        info!("knn: {} queries", points.len());
        add(run_knn_bench(&named, &points, baseline, parallel)?)?;
    }
    let mut report = report.expect("at least one workload");
    report.metadata.insert("dims".into(), D.to_string());
    Ok(report)
}

pub fn inspect(a: &InspectArgs) -> Result<()> {
    let value = match (&a.model, &a.index) {
        (Some(path), _) => {
            require_file(path)?;
            let (net, meta) = load_model(path)?;
            json!({
                "agent": meta.agent.as_str(),
                "k": net.actions(),
                "dims": meta.dims,
                "inputs": net.inputs(),
                "hidden": net.hidden(),
                "finite": net.is_finite(),
                "seed": meta.seed,
                "hyperparameters": meta.hyperparameters,
            })
        }
        (None, Some(path)) => {
            require_file(path)?;
            let dims = snapshot_dims(path)?;
            dispatch_dims!(dims, inspect_index_d(path))?
        }
        (None, None) => return Err(usage("pass --model or --index")),
    };
    println!("{}", serde_json::to_string_pretty(&value)?);
    Ok(())
}

fn inspect_index_d<const D: usize>(path: &Path) -> Result<serde_json::Value> {
    let tree: RTree<D> = load_snapshot(path)?;
    let leaves = tree.nodes().filter(|(_, n)| n.is_leaf()).count();
    let bounds = tree.root_mbr().map(|r| json!({ "lo": r.lo().to_vec(), "hi": r.hi().to_vec() }));
    Ok(json!({
        "dims": D,
        "objects": tree.len(),
        "height": tree.height(),
        "nodes": tree.node_count(),
        "leaves": leaves,
        "max_entries": tree.max_entries(),
        "min_entries": tree.min_entries(),
        "bounds": bounds,
        "valid": tree.validate().is_empty(),
    }))
}
