//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run a subset by passing criterion numbers, e.g.
//! `cargo test -p rlr-cli --test acceptance -- 3 4`.
//!
//! Criteria 1 to 5 check correctness and fail the run when they fail.
//! Criteria 6 to 13 reproduce published trends at desk scale; their FAIL
//! lines are reported but only fail the run when `RLR_ACCEPTANCE_STRICT=1`.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use rlr_core::bench::{ranking_experiment, run_knn_bench, run_range_bench, NamedIndex};
use rlr_core::datagen::{gen_dataset, gen_knn_workload, gen_test_queries, rng_for, DataGenConfig, Distribution};
use rlr_core::dqn::{masked_argmax, select_action, DqnAgent, QNetwork, Transition};
use rlr_core::features::StateVector;
use rlr_core::io::KnnQuery;
use rlr_core::trainer::{
    build_rlr_tree, train_choose_subtree, train_combined, train_split, TrainConfig, TrainEvent,
};
use rlr_core::{
    ChooseRule, HeuristicPolicy, InsertPolicy, LearnedPolicy, ObjectRecord, PolicyName, RTree, Rect, SplitRule,
};

const MAX_ENTRIES: usize = 50;
const MIN_ENTRIES: usize = 20;

// Criterion 1
const FUZZ_INSERTS: usize = 100_000;
const FUZZ_VALIDATE_EVERY: usize = 1_000;
const FUZZ_TIME_LIMIT: Duration = Duration::from_secs(120);

// Criterion 2
const ORACLE_OBJECTS: usize = 10_000;
const ORACLE_WINDOWS: usize = 1_000;
const ORACLE_KNN_POINTS: usize = 100;
const ORACLE_KS: [usize; 3] = [1, 5, 25];
const ORACLE_TIME_LIMIT: Duration = Duration::from_secs(60);

// Criterion 3
const GRAD_BATCHES: usize = 20;
const GRAD_BATCH_SIZE: usize = 64;
const GRAD_STEP: f64 = 1e-5;
const GRAD_MAX_RELATIVE_ERROR: f64 = 1e-4;
/// Keeps the relative error defined where both gradients vanish.
const GRAD_DENOMINATOR_FLOOR: f64 = 1e-6;

// Criterion 4
const BANDIT_SEEDS: u64 = 100;
const BANDIT_STEPS: usize = 500;
const BANDIT_REQUIRED: usize = 95;

// Criterion 5
const DETERMINISM_OBJECTS: usize = 25_000;

// Criterion 6
const RANKING_OBJECTS: usize = 1_000_000;
const RANKING_FALLBACK_OBJECTS: usize = 100_000;
const RANKING_QUERIES: usize = 1_000;
const RANKING_QUERY_SIZE: f64 = 1e-4;
const RANKING_MIN_SHARE: f64 = 0.10;
const RANKING_MIN_VARIANTS: usize = 2;
const RANKING_TIME_LIMIT: Duration = Duration::from_secs(30 * 60);

// Criteria 7 to 13
const TRAIN_OBJECTS: usize = 100_000;
const EVAL_OBJECTS: usize = 1_000_000;
const EVAL_QUERIES: usize = 1_000;
const SMALLEST_QUERY: f64 = 0.00005;
const DEFAULT_QUERY: f64 = 0.0001;
const LARGEST_QUERY: f64 = 0.02;
const QUERY_SIZES: [f64; 7] = [0.00005, 0.0001, 0.0005, 0.001, 0.005, 0.01, 0.02];
const CS_BOUND_GAU_SKE: f64 = 0.85;
const CS_BOUND_UNI: f64 = 0.95;
const SPLIT_BOUND: f64 = 0.95;
const COMBINED_SLACK: f64 = 0.05;
const LARGE_QUERY_BAND: (f64, f64) = (0.9, 1.1);
const TRAIN_TIME_LIMIT: Duration = Duration::from_secs(2 * 3600);
const DYNAMIC_INITIAL: usize = 100_000;
const DYNAMIC_INSERTS: usize = 1_000_000;
const DYNAMIC_SIGMA_INITIAL: f64 = 0.2;
const DYNAMIC_SIGMA_INSERTS: f64 = 0.4;
const KNN_POINTS: usize = 1_000;

const TRAIN_SEED: u64 = 7;

struct Outcome {
    id: u32,
    title: &'static str,
    pass: bool,
    detail: String,
}

struct Suite {
    selected: Vec<u32>,
    outcomes: Vec<Outcome>,
}

impl Suite {
    fn wants(&self, id: u32) -> bool {
        self.selected.is_empty() || self.selected.contains(&id)
    }

    fn record(&mut self, id: u32, title: &'static str, pass: bool, detail: String) {
        println!(
            "criterion {id:>2} {} {title}: {detail}",
            if pass { "PASS" } else { "FAIL" }
        );
        self.outcomes.push(Outcome {
            id,
            title,
            pass,
            detail,
        });
    }
}

fn f3(v: f64) -> String {
    format!("{v:.3}")
}

fn random_box(rng: &mut ChaCha8Rng, max_side: f64) -> Rect<2> {
    let w = rng.random_range(0.0..max_side);
    let h = rng.random_range(0.0..max_side);
    let x = rng.random_range(0.0..1.0 - w);
    let y = rng.random_range(0.0..1.0 - h);
    Rect::new([x, y], [x + w, y + h]).unwrap()
}

/// Boxes of mixed sizes, points and exact duplicates.
fn fuzz_objects(n: usize, seed: u64) -> Vec<ObjectRecord<2>> {
    let mut rng = rng_for(seed, 100);
    let mut out: Vec<ObjectRecord<2>> = Vec::with_capacity(n);
    for id in 0..n as u64 {
        let roll = rng.random_range(0..10);
        let mbr = if roll == 0 && !out.is_empty() {
            out[rng.random_range(0..out.len())].mbr
        } else if roll == 1 {
            Rect::point([rng.random(), rng.random()])
        } else {
            random_box(&mut rng, if roll == 2 { 0.2 } else { 0.01 })
        };
        out.push(ObjectRecord::new(id, mbr));
    }
    out
}

fn zero_nets() -> (QNetwork, QNetwork) {
    (QNetwork::zeros(2), QNetwork::zeros(2))
}

/// Every structural variant under test, by name.
fn build_all(data: &[ObjectRecord<2>], random_nets: &(QNetwork, QNetwork)) -> Vec<(String, RTree<2>)> {
    let zeros = zero_nets();
    let mut out = Vec::new();
    for name in PolicyName::ALL {
        let mut t = RTree::new(MAX_ENTRIES, MIN_ENTRIES).unwrap();
        t.extend(data.iter().copied(), &mut name.policy());
        out.push((name.as_str().to_string(), t));
    }
    for (label, nets) in [("rlr-zero", &zeros), ("rlr-random", random_nets)] {
        let t = build_rlr_tree(data, Some(&nets.0), Some(&nets.1), MAX_ENTRIES, MIN_ENTRIES, Some(2)).unwrap();
        out.push((label.to_string(), t));
    }
    out
}

fn criterion_1(suite: &mut Suite) {
    let data = fuzz_objects(FUZZ_INSERTS, 1);
    let zeros = zero_nets();
    let mut parts = Vec::new();
    let mut pass = true;
    let mut run = |label: &str, policy: &mut dyn InsertPolicy<2>| {
        let started = Instant::now();
        let mut tree = RTree::new(MAX_ENTRIES, MIN_ENTRIES).unwrap();
        let mut first_violation = None;
        for (i, obj) in data.iter().enumerate() {
            tree.insert(*obj, policy);
            if (i + 1) % FUZZ_VALIDATE_EVERY == 0 && first_violation.is_none() {
                if let Some(v) = tree.validate().first() {
                    first_violation = Some(format!("after {} inserts: {v}", i + 1));
                }
            }
        }
        let elapsed = started.elapsed();
        let ok = first_violation.is_none() && elapsed < FUZZ_TIME_LIMIT && tree.len() == FUZZ_INSERTS;
        pass &= ok;
        parts.push(match first_violation {
            Some(v) => format!("{label} INVALID {v}"),
            None => format!("{label} ok h={} {:.1}s", tree.height(), elapsed.as_secs_f64()),
        });
    };
    for name in PolicyName::ALL {
        run(name.as_str(), &mut name.policy());
    }
    run("rlr-zero", &mut LearnedPolicy::greedy(Some(&zeros.0), Some(&zeros.1)));
    suite.record(
        1,
        "structural fuzz",
        pass,
        format!(
            "{} inserts, validated every {}, limit {}s each; {}",
            FUZZ_INSERTS,
            FUZZ_VALIDATE_EVERY,
            FUZZ_TIME_LIMIT.as_secs(),
            parts.join(", ")
        ),
    );
}

fn brute_range(data: &[ObjectRecord<2>], w: &Rect<2>) -> Vec<u64> {
    let mut ids: Vec<u64> = data.iter().filter(|o| o.mbr.intersects(w)).map(|o| o.id).collect();
    ids.sort_unstable();
    ids
}

fn brute_knn(data: &[ObjectRecord<2>], p: &[f64; 2], k: usize) -> Vec<(u64, f64)> {
    let mut all: Vec<(u64, f64)> = data.iter().map(|o| (o.id, o.mbr.min_dist_sq(p))).collect();
    all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

fn criterion_2(suite: &mut Suite) {
    let started = Instant::now();
    let data = fuzz_objects(ORACLE_OBJECTS, 2);
    let mut rng = rng_for(2, 101);
    let random_nets = (QNetwork::random(2, &mut rng), QNetwork::random(2, &mut rng));
    let trees = build_all(&data, &random_nets);
    let mut windows: Vec<Rect<2>> = (0..ORACLE_WINDOWS)
        .map(|i| match i % 10 {
            // Degenerate windows touching object corners exercise closed-box
            // intersection.
            0 => Rect::point(*data[rng.random_range(0..data.len())].mbr.hi()),
            1 => random_box(&mut rng, 0.5),
            _ => random_box(&mut rng, 0.05),
        })
        .collect();
    windows.push(Rect::new([0.0, 0.0], [1.0, 1.0]).unwrap());
    let points: Vec<[f64; 2]> = (0..ORACLE_KNN_POINTS)
        .map(|_| [rng.random_range(-0.1..1.1), rng.random_range(-0.1..1.1)])
        .collect();
    let mut mismatches = BTreeMap::<String, usize>::new();
    for w in &windows {
        let expected = brute_range(&data, w);
        for (name, t) in &trees {
            let got = t.range_query(w);
            if got.ids != expected || got.stats.result_count != expected.len() as u64 {
                *mismatches.entry(name.clone()).or_default() += 1;
            }
        }
    }
    for p in &points {
        for k in ORACLE_KS {
            let expected = brute_knn(&data, p, k);
            for (name, t) in &trees {
                if t.knn_query(p, k).neighbors != expected {
                    *mismatches.entry(name.clone()).or_default() += 1;
                }
            }
        }
    }
    let elapsed = started.elapsed();
    let pass = mismatches.is_empty() && elapsed < ORACLE_TIME_LIMIT;
    suite.record(
        2,
        "query oracle",
        pass,
        format!(
            "{} indices x ({} windows + {} points x K {:?}); mismatches {:?}; {:.1}s (limit {}s)",
            trees.len(),
            windows.len(),
            points.len(),
            ORACLE_KS,
            mismatches,
            elapsed.as_secs_f64(),
            ORACLE_TIME_LIMIT.as_secs()
        ),
    );
}

fn random_state(rng: &mut ChaCha8Rng, k: usize) -> StateVector {
    let valid = rng.random_range(1..=k);
    let mut values = vec![0.0; 4 * k];
    for v in values.iter_mut().take(4 * valid) {
        *v = rng.random_range(0.0..1.0);
    }
    StateVector {
        values,
        valid_actions: valid,
    }
}

/// Parameters whose `±h` perturbation moves some hidden pre-activation of
/// the batch across 0, where SELU's derivative jumps; central differences
/// there average two slopes. Flattened order: `w1`, `b1`, `w2`, `b2`.
fn kink_straddling_params(net: &QNetwork, batch: &[&Transition]) -> Vec<bool> {
    let (inputs, hidden) = (net.inputs(), net.hidden());
    let flat: Vec<f64> = net.clone().params_mut().map(|p| *p).collect();
    let (w1, b1) = flat.split_at(inputs * hidden);
    let mut out = vec![false; flat.len()];
    for t in batch {
        let s = &t.state.values;
        for j in 0..hidden {
            let row = &w1[j * inputs..(j + 1) * inputs];
            let pre = b1[j] + row.iter().zip(s).map(|(w, x)| w * x).sum::<f64>();
            if pre.abs() <= GRAD_STEP {
                out[inputs * hidden + j] = true;
            }
            for (i, x) in s.iter().enumerate() {
                if pre.abs() <= GRAD_STEP * x.abs() {
                    out[j * inputs + i] = true;
                }
            }
        }
    }
    out
}

fn criterion_3(suite: &mut Suite) {
    let mut worst: f64 = 0.0;
    let mut params = 0;
    let mut skipped = 0;
    for b in 0..GRAD_BATCHES as u64 {
        let mut rng = rng_for(b, 102);
        let k = [2, 3, 5][b as usize % 3];
        let net = QNetwork::random(k, &mut rng);
        let target = QNetwork::random(k, &mut rng);
        let batch: Vec<Transition> = (0..GRAD_BATCH_SIZE)
            .map(|_| {
                let state = random_state(&mut rng, k);
                let action = rng.random_range(0..state.valid_actions);
                let terminal = rng.random_bool(0.3);
                Transition {
                    state,
                    action,
                    reward: rng.random_range(-1.0..1.0),
                    next: (!terminal).then(|| random_state(&mut rng, k)),
                }
            })
            .collect();
        let refs: Vec<&Transition> = batch.iter().collect();
        let targets: Vec<f64> = refs.iter().map(|t| target.td_target(t, 0.95).unwrap()).collect();
        let (_, grad) = net.loss_and_gradient(&refs, &targets).unwrap();
        let analytic = grad.flatten();
        let straddles = kink_straddling_params(&net, &refs);
        let mut probe = net.clone();
        let n = probe.params_mut().count();
        params += n;
        for (i, a) in analytic.iter().enumerate().take(n) {
            if straddles[i] {
                skipped += 1;
                continue;
            }
            let orig = *probe.params_mut().nth(i).unwrap();
            *probe.params_mut().nth(i).unwrap() = orig + GRAD_STEP;
            let up = probe.loss(&refs, &targets).unwrap();
            *probe.params_mut().nth(i).unwrap() = orig - GRAD_STEP;
            let down = probe.loss(&refs, &targets).unwrap();
            *probe.params_mut().nth(i).unwrap() = orig;
            let numeric = (up - down) / (2.0 * GRAD_STEP);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(GRAD_DENOMINATOR_FLOOR);
            worst = worst.max(rel);
        }
    }
    suite.record(
        3,
        "DQN gradient check",
        worst < GRAD_MAX_RELATIVE_ERROR,
        format!(
            "{GRAD_BATCHES} batches of {GRAD_BATCH_SIZE}, {params} parameters ({skipped} straddling the SELU breakpoint left out), h={GRAD_STEP:e}; max relative error {worst:.2e} (< {GRAD_MAX_RELATIVE_ERROR:e})"
        ),
    );
}

/// Two arms with rewards 0 and 1 from a fixed state.
fn bandit_converges(seed: u64) -> bool {
    let mut rng = rng_for(seed, 103);
    let state = StateVector {
        values: (0..8).map(|_| rng.random_range(0.0..1.0)).collect(),
        valid_actions: 2,
    };
    let cfg = TrainConfig::default();
    let mut agent = DqnAgent::new(QNetwork::random(2, &mut rng), 0.0, cfg.lr_cs);
    for _ in 0..BANDIT_STEPS {
        let action = select_action(&agent.net, &state, agent.exploration.epsilon, &mut rng).unwrap();
        agent.memory.push(Transition {
            state: state.clone(),
            action,
            reward: if action == 1 { 1.0 } else { 0.0 },
            next: None,
        });
        agent.learn(&mut rng).unwrap();
        agent.exploration.decay();
    }
    masked_argmax(&agent.net.forward(&state.values).unwrap(), 2) == 1
}

fn criterion_4(suite: &mut Suite) {
    let converged = (0..BANDIT_SEEDS).filter(|&s| bandit_converges(s)).count();
    suite.record(
        4,
        "DQN bandit sanity",
        converged >= BANDIT_REQUIRED,
        format!("{converged}/{BANDIT_SEEDS} seeds pick the better arm after {BANDIT_STEPS} steps (>= {BANDIT_REQUIRED})"),
    );
}

fn rlrtree(dir: &Path, args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_rlrtree"))
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .env_remove("RLR_SEED")
        .args(args)
        .status()
        .map(|s| s.success())
        .unwrap_or(false)
}

fn criterion_5(suite: &mut Suite) {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let n = DETERMINISM_OBJECTS.to_string();
    let mut ran = rlrtree(d, &["gen-data", "--dist", "gau", "--n", &n, "--seed", "5", "--out", "d.csv"]);
    for run in ["a", "b"] {
        let (cs, sp) = (format!("{run}_cs.json"), format!("{run}_split.json"));
        ran &= rlrtree(
            d,
            &["train", "--agent", "combined", "--data", "d.csv", "--seed", "11", "--out-cs", &cs, "--out-split", &sp],
        );
    }
    let same = |x: &str, y: &str| match (std::fs::read(d.join(x)), std::fs::read(d.join(y))) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    };
    let cs_same = same("a_cs.json", "b_cs.json");
    let sp_same = same("a_split.json", "b_split.json");
    suite.record(
        5,
        "determinism",
        ran && cs_same && sp_same,
        format!(
            "combined training twice on {DETERMINISM_OBJECTS} objects: commands ok {ran}, ChooseSubtree identical {cs_same}, Split identical {sp_same}"
        ),
    );
}

struct Ranking {
    listing: String,
    strong: usize,
    pass: bool,
}

fn ranking_at(objects: usize) -> Ranking {
    let data = gen_dataset::<2>(&DataGenConfig::new(Distribution::Uniform, objects, 6)).unwrap();
    // Only the split rule varies; every variant descends by minimum area
    // enlargement.
    let variants = [
        ("linear", SplitRule::Linear),
        ("quadratic", SplitRule::Quadratic),
        ("greene", SplitRule::Greene),
        ("rstar", SplitRule::RStarTopology),
    ];
    let trees: Vec<RTree<2>> = variants
        .iter()
        .map(|&(_, split)| {
            let mut t = RTree::new(MAX_ENTRIES, MIN_ENTRIES).unwrap();
            t.extend(
                data.iter().copied(),
                &mut HeuristicPolicy::new(ChooseRule::MinAreaEnlargement, split),
            );
            t
        })
        .collect();
    let named: Vec<NamedIndex<'_, 2>> = variants
        .iter()
        .zip(&trees)
        .map(|((n, _), t)| NamedIndex::new(n, t))
        .collect();
    let queries = gen_test_queries::<2>(RANKING_QUERIES, RANKING_QUERY_SIZE, 6);
    let table = ranking_experiment(&named, &queries);
    let shares = table.fractions();
    let none_always_best = shares.iter().all(|&s| s < 1.0);
    let strong = shares.iter().filter(|&&s| s >= RANKING_MIN_SHARE).count();
    let listing: Vec<String> = table
        .names
        .iter()
        .zip(&shares)
        .map(|(n, s)| format!("{n} {:.1}%", 100.0 * s))
        .collect();
    Ranking {
        listing: listing.join(", "),
        strong,
        pass: none_always_best && strong >= RANKING_MIN_VARIANTS,
    }
}

fn criterion_6(suite: &mut Suite) {
    let started = Instant::now();
    let full = ranking_at(RANKING_OBJECTS);
    let elapsed = started.elapsed();
    let fallback = ranking_at(RANKING_FALLBACK_OBJECTS);
    suite.record(
        6,
        "no single best split",
        full.pass && elapsed < RANKING_TIME_LIMIT,
        format!(
            "{RANKING_QUERIES} queries of {}% on uniform data, share of queries where each split is best (ties count for all), need no variant at 100% and {RANKING_MIN_VARIANTS} variants >= {:.0}%: {RANKING_OBJECTS} objects {} ({} strong, {:.0}s); {RANKING_FALLBACK_OBJECTS}-object fallback {} ({} strong, {})",
            100.0 * RANKING_QUERY_SIZE,
            100.0 * RANKING_MIN_SHARE,
            full.listing,
            full.strong,
            elapsed.as_secs_f64(),
            fallback.listing,
            fallback.strong,
            if fallback.pass { "would pass" } else { "would fail" }
        ),
    );
}

/// Models trained on one distribution.
struct Trained {
    cs: QNetwork,
    split: QNetwork,
    combined: (QNetwork, QNetwork),
    seconds: [f64; 3],
}

fn progress(label: String) -> impl FnMut(&TrainEvent) {
    move |e: &TrainEvent| {
        if !matches!(e, TrainEvent::Round { .. }) {
            eprintln!("[{label}] {e}");
        }
    }
}

fn train_all(dist: Distribution, data: &[ObjectRecord<2>]) -> Trained {
    let cfg = TrainConfig {
        seed: TRAIN_SEED,
        ..TrainConfig::default()
    };
    let t = Instant::now();
    let cs = train_choose_subtree(data, &cfg, &mut progress(format!("{dist} cs"))).unwrap();
    let t_cs = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let split = train_split(data, &cfg, &mut progress(format!("{dist} split"))).unwrap();
    let t_split = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let combined = train_combined(data, &cfg, &mut progress(format!("{dist} combined"))).unwrap();
    let t_combined = t.elapsed().as_secs_f64();
    Trained {
        cs,
        split,
        combined,
        seconds: [t_cs, t_split, t_combined],
    }
}

fn reference_tree(data: &[ObjectRecord<2>]) -> RTree<2> {
    let mut t = RTree::new(MAX_ENTRIES, MIN_ENTRIES).unwrap();
    t.extend(data.iter().copied(), &mut PolicyName::Reference.policy());
    t
}

fn rlr_tree(data: &[ObjectRecord<2>], cs: Option<&QNetwork>, split: Option<&QNetwork>) -> RTree<2> {
    build_rlr_tree(data, cs, split, MAX_ENTRIES, MIN_ENTRIES, Some(2)).unwrap()
}

/// Mean relative I/O per (variant, query size) against the first index.
type RelativeIo = BTreeMap<(String, String), f64>;

fn size_label(size: f64) -> String {
    format!("{}%", 100.0 * size)
}

fn relative_io(indices: &[NamedIndex<'_, 2>], sizes: &[f64], seed: u64) -> RelativeIo {
    let mut out = RelativeIo::new();
    for &size in sizes {
        let label = size_label(size);
        let queries = gen_test_queries::<2>(EVAL_QUERIES, size, seed);
        let report = run_range_bench(indices, &queries, 0, &label, false).unwrap();
        for ix in &indices[1..] {
            let v = report.mean_relative_io(ix.name, &label).unwrap();
            out.insert((ix.name.to_string(), label.clone()), v);
        }
    }
    out
}

struct DistResult {
    dist: Distribution,
    io: RelativeIo,
    trained: Trained,
}

impl DistResult {
    fn get(&self, variant: &str, size: f64) -> f64 {
        self.io[&(variant.to_string(), size_label(size))]
    }
}

fn evaluate(dist: Distribution, index: u64) -> (DistResult, Option<(Vec<ObjectRecord<2>>, RTree<2>, RTree<2>)>) {
    let train_data = gen_dataset::<2>(&DataGenConfig::new(dist, TRAIN_OBJECTS, 1_000 + index)).unwrap();
    let trained = train_all(dist, &train_data);
    drop(train_data);
    let eval_data = gen_dataset::<2>(&DataGenConfig::new(dist, EVAL_OBJECTS, 2_000 + index)).unwrap();
    let reference = reference_tree(&eval_data);
    let cs = rlr_tree(&eval_data, Some(&trained.cs), None);
    let split = rlr_tree(&eval_data, None, Some(&trained.split));
    let rlr = rlr_tree(&eval_data, Some(&trained.combined.0), Some(&trained.combined.1));
    let named = [
        NamedIndex::new("ref", &reference),
        NamedIndex::new("rl-cs", &cs),
        NamedIndex::new("rl-split", &split),
        NamedIndex::new("rlr", &rlr),
    ];
    let io = relative_io(&named, &QUERY_SIZES, 3_000 + index);
    eprintln!("relative I/O on {dist} ({EVAL_OBJECTS} objects):");
    for variant in ["rl-cs", "rl-split", "rlr"] {
        let row: Vec<String> = QUERY_SIZES
            .iter()
            .map(|&s| format!("{}={}", size_label(s), f3(io[&(variant.to_string(), size_label(s))])))
            .collect();
        eprintln!("  {variant:<9} {}", row.join(" "));
    }
    drop((cs, split));
    let keep = (dist == Distribution::Gaussian).then(|| (eval_data, reference, rlr));
    (DistResult { dist, io, trained }, keep)
}

fn learned_criteria(suite: &mut Suite) {
    let wanted: Vec<u32> = (7..=13).filter(|&c| suite.wants(c)).collect();
    if wanted.is_empty() {
        return;
    }
    let mut results = Vec::new();
    let mut gau = None;
    for (i, dist) in [Distribution::Gaussian, Distribution::Skew, Distribution::Uniform]
        .into_iter()
        .enumerate()
    {
        let (r, keep) = evaluate(dist, i as u64);
        results.push(r);
        if keep.is_some() {
            gau = keep;
        }
    }
    let (gau_data, gau_ref, gau_rlr) = gau.expect("gaussian evaluated first");
    let by = |d: Distribution| results.iter().find(|r| r.dist == d).unwrap();

    if suite.wants(7) {
        let mut pass = true;
        let mut parts = Vec::new();
        for r in &results {
            let bound = if r.dist == Distribution::Uniform { CS_BOUND_UNI } else { CS_BOUND_GAU_SKE };
            let a = r.get("rl-cs", SMALLEST_QUERY);
            let b = r.get("rl-cs", DEFAULT_QUERY);
            let slow = r.trained.seconds[0] > TRAIN_TIME_LIMIT.as_secs_f64();
            pass &= a <= bound && b <= bound && !slow;
            parts.push(format!(
                "{} {}/{} (<= {bound}, trained in {:.0}s)",
                r.dist.as_str(),
                f3(a),
                f3(b),
                r.trained.seconds[0]
            ));
        }
        suite.record(
            7,
            "RL ChooseSubtree beats reference",
            pass,
            format!("relative I/O at 0.005%/0.01%: {}", parts.join(", ")),
        );
    }

    if suite.wants(8) {
        let mut pass = true;
        let mut parts = Vec::new();
        for r in &results {
            let v = r.get("rl-split", SMALLEST_QUERY);
            pass &= v <= SPLIT_BOUND && r.trained.seconds[1] < TRAIN_TIME_LIMIT.as_secs_f64();
            parts.push(format!("{} {} (trained in {:.0}s)", r.dist.as_str(), f3(v), r.trained.seconds[1]));
        }
        suite.record(
            8,
            "RL Split beats reference",
            pass,
            format!("relative I/O at 0.005% (<= {SPLIT_BOUND}): {}", parts.join(", ")),
        );
    }

    if suite.wants(9) {
        let r = by(Distribution::Gaussian);
        let (cs, split, rlr) = (
            r.get("rl-cs", DEFAULT_QUERY),
            r.get("rl-split", DEFAULT_QUERY),
            r.get("rlr", DEFAULT_QUERY),
        );
        let bound = cs.min(split) + COMBINED_SLACK;
        suite.record(
            9,
            "combined at least as good as singles",
            rlr <= bound,
            format!(
                "gau at 0.01%: combined {} vs RL-CS {} / RL-Split {} (bound {})",
                f3(rlr),
                f3(cs),
                f3(split),
                f3(bound)
            ),
        );
    }

    if suite.wants(10) {
        let mut pass = true;
        let mut parts = Vec::new();
        for r in &results {
            let small = r.get("rlr", SMALLEST_QUERY);
            let large = r.get("rlr", LARGEST_QUERY);
            pass &= large >= small && (LARGE_QUERY_BAND.0..=LARGE_QUERY_BAND.1).contains(&large);
            parts.push(format!("{} 0.005%={} 2%={}", r.dist.as_str(), f3(small), f3(large)));
        }
        suite.record(
            10,
            "query-size trend",
            pass,
            format!(
                "need 2% >= 0.005% and 2% in [{}, {}]: {}",
                LARGE_QUERY_BAND.0,
                LARGE_QUERY_BAND.1,
                parts.join(", ")
            ),
        );
    }

    if suite.wants(11) {
        let ske = &by(Distribution::Skew).trained.combined;
        let transfer = rlr_tree(&gau_data, Some(&ske.0), Some(&ske.1));
        let io = relative_io(
            &[NamedIndex::new("ref", &gau_ref), NamedIndex::new("ske-on-gau", &transfer)],
            &[DEFAULT_QUERY],
            3_100,
        );
        let v = io[&("ske-on-gau".to_string(), size_label(DEFAULT_QUERY))];
        suite.record(
            11,
            "cross-distribution transfer",
            v < 1.0,
            format!("SKE-trained models on GAU {EVAL_OBJECTS}, 0.01% queries: relative I/O {} (< 1.0)", f3(v)),
        );
    }

    if suite.wants(13) {
        let points = gen_knn_workload::<2>(KNN_POINTS, 3_200);
        let queries: Vec<KnnQuery<2>> = points.into_iter().map(|point| KnnQuery { point, k: 1 }).collect();
        let report = run_knn_bench(
            &[NamedIndex::new("ref", &gau_ref), NamedIndex::new("rlr", &gau_rlr)],
            &queries,
            0,
            false,
        )
        .unwrap();
        let v = report.mean_relative_io("rlr", "K=1").unwrap();
        suite.record(
            13,
            "KNN transfer",
            v < 1.0,
            format!("GAU RLR-Tree, {KNN_POINTS} uniform points, K=1: relative I/O {} (< 1.0)", f3(v)),
        );
    }
    drop((gau_data, gau_ref, gau_rlr));

    if suite.wants(12) {
        let (cs, split) = &by(Distribution::Gaussian).trained.combined;
        let mut initial_cfg = DataGenConfig::new(Distribution::Gaussian, DYNAMIC_INITIAL, 4_001);
        initial_cfg.gauss_sigma = DYNAMIC_SIGMA_INITIAL;
        let mut later_cfg = DataGenConfig::new(Distribution::Gaussian, DYNAMIC_INSERTS, 4_002);
        later_cfg.gauss_sigma = DYNAMIC_SIGMA_INSERTS;
        let initial = gen_dataset::<2>(&initial_cfg).unwrap();
        let later: Vec<ObjectRecord<2>> = gen_dataset::<2>(&later_cfg)
            .unwrap()
            .into_iter()
            .map(|o| ObjectRecord::new(o.id + DYNAMIC_INITIAL as u64, o.mbr))
            .collect();
        let mut rlr = rlr_tree(&initial, Some(cs), Some(split));
        rlr.extend(later.iter().copied(), &mut LearnedPolicy::greedy(Some(cs), Some(split)));
        let mut reference = reference_tree(&initial);
        reference.extend(later.iter().copied(), &mut PolicyName::Reference.policy());
        let violations = rlr.validate().len() + reference.validate().len();
        let io = relative_io(
            &[NamedIndex::new("ref", &reference), NamedIndex::new("rlr", &rlr)],
            &[DEFAULT_QUERY],
            3_300,
        );
        let v = io[&("rlr".to_string(), size_label(DEFAULT_QUERY))];
        suite.record(
            12,
            "dynamic updates",
            violations == 0 && v < 1.0,
            format!(
                "{DYNAMIC_INITIAL} GAU(sigma={DYNAMIC_SIGMA_INITIAL}) then {DYNAMIC_INSERTS} GAU(sigma={DYNAMIC_SIGMA_INSERTS}) with frozen models: {violations} violations, relative I/O at 0.01% {} (< 1.0)",
                f3(v)
            ),
        );
    }
}

fn main() {
    let selected: Vec<u32> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut suite = Suite {
        selected,
        outcomes: Vec::new(),
    };
    let started = Instant::now();
    let steps: [(u32, fn(&mut Suite)); 6] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
    ];
    for (id, run) in steps {
        if suite.wants(id) {
            run(&mut suite);
        }
    }
    learned_criteria(&mut suite);

    let strict = std::env::var("RLR_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let passed = suite.outcomes.iter().filter(|o| o.pass).count();
    println!(
        "acceptance: {passed}/{} criteria passed in {:.0}s",
        suite.outcomes.len(),
        started.elapsed().as_secs_f64()
    );
    let blocking: Vec<&Outcome> = suite
        .outcomes
        .iter()
        .filter(|o| !o.pass && (o.id <= 5 || strict))
        .collect();
    for o in &blocking {
        eprintln!("failed: criterion {} ({}): {}", o.id, o.title, o.detail);
    }
    if !blocking.is_empty() {
        std::process::exit(1);
    }
}
