//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fail.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use ikf_core::bench::{
    dc_sis, distance_correlation, generate, run_experiment, ExperimentConfig, ExperimentResult,
    Method, Scenario, ScenarioId,
};
use ikf_core::data::{permute_column, Dataset, SeedContext, Task};
use ikf_core::forest::{build_forest, build_tree, extract_paths, KingForest, Mtry, Node, Tree, TreeParams};
use ikf_core::ikf::{run_ikf, IkfParams, InteractionKind};
use ikf_core::kings::{update_weights, KingParams, Metric};
use ikf_core::pvim::{kings_pvim, EvalSource, PvimParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_data(rng: &mut ChaCha8Rng, n: usize, p: usize, task: Task) -> Dataset {
    let x: Vec<f64> = (0..n * p).map(|_| (rng.random::<f64>() * 8.0).round() / 4.0 - 1.0).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| match task {
            Task::Regression => x[i] * x[(p - 1) * n + i] + rng.random::<f64>(),
            Task::BinaryClassification => f64::from(x[i] + rng.random::<f64>() > 0.5),
        })
        .collect();
    Dataset::from_column_major(n, p, x, y, task, None).unwrap()
}

/// Walks the node arena directly.
fn walk(tree: &Tree, value: impl Fn(usize) -> f64) -> f64 {
    let nodes = tree.nodes();
    let mut at = 0;
    loop {
        match &nodes[at] {
            Node::Leaf { value: v, .. } => return *v,
            Node::Split { var, threshold, left, right, .. } => {
                at = if value(*var) < *threshold { *left } else { *right };
            }
        }
    }
}

fn loss(task: Task, y: f64, pred: f64) -> f64 {
    match task {
        Task::Regression => (y - pred).powi(2),
        Task::BinaryClassification => f64::from(y != pred),
    }
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    let mut nonzero = 0;
    for case in 0..100u64 {
        let n = rng.random_range(10..=30);
        let p = rng.random_range(1..=6);
        let task = if case % 3 == 0 { Task::BinaryClassification } else { Task::Regression };
        let data = random_data(&mut rng, n, p, task);
        let king = rng.random_range(0..p);
        let params = TreeParams {
            mtry: Mtry::Fixed(rng.random_range(1..=p)),
            min_leaf: rng.random_range(1..=3),
            bootstrap: true,
        };
        let pool: Vec<usize> = (0..p).collect();
        let tree = build_tree(&data, king, &vec![1.0; p], &pool, rng.random_range(1..=4), &params, &mut rng).unwrap();
        let eval: Vec<usize> = if tree.oob.is_empty() { (0..n).collect() } else { tree.oob.clone() };
        let pvim_params = PvimParams {
            eval_source: EvalSource::Holdout(eval.clone()),
            n_permutations: 1,
        };
        let seed = rng.random::<u64>();
        let got = kings_pvim(&tree, &data, king, &pvim_params, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();

        let original: Vec<f64> = eval.iter().map(|&i| data.value(i, king)).collect();
        let shuffled = if tree.tree.split_variables().contains(&king) {
            permute_column(&original, &mut ChaCha8Rng::seed_from_u64(seed))
        } else {
            original.clone()
        };
        let mut permuted_sse = 0.0;
        let mut base_sse = 0.0;
        for (k, &i) in eval.iter().enumerate() {
            let y = data.y()[i];
            base_sse += loss(task, y, walk(&tree.tree, |v| data.value(i, v)));
            permuted_sse += loss(task, y, walk(&tree.tree, |v| if v == king { shuffled[k] } else { data.value(i, v) }));
        }
        let expected = (permuted_sse - base_sse) / eval.len() as f64;
        let err = if expected == 0.0 { got.abs() } else { ((got - expected) / expected).abs() };
        if expected != 0.0 {
            nonzero += 1;
        }
        worst = worst.max(err);
    }
    outcome(worst <= 1e-12, format!("100 instances ({nonzero} nonzero), max relative error {worst:e}"))
}

fn random_forest(rng: &mut ChaCha8Rng, case: u64) -> (KingForest, usize) {
    let n = rng.random_range(20..=60);
    let p = rng.random_range(2..=10);
    let data = random_data(rng, n, p, Task::Regression);
    let king = rng.random_range(0..p);
    let pool: Vec<usize> = (0..p).collect();
    let weights: Vec<f64> = (0..p).map(|_| rng.random::<f64>() + 0.05).collect();
    let params = TreeParams {
        min_leaf: rng.random_range(1..=4),
        ..TreeParams::default()
    };
    let n_trees = rng.random_range(1..=25);
    let depth = rng.random_range(1..=5);
    let seeds = SeedContext::new(case);
    (build_forest(&data, king, &weights, &pool, depth, &params, n_trees, &seeds).unwrap(), p)
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut mismatches = 0;
    for case in 0..200 {
        let (mut forest, p) = random_forest(&mut rng, case);
        for t in &mut forest.trees {
            t.pvim = rng.random::<f64>() * 2.0 - 0.7;
        }
        let w_prev: Vec<f64> = (0..p).map(|_| rng.random::<f64>() * 3.0).collect();
        let got = update_weights(&w_prev, &forest);
        let mut expected = w_prev.clone();
        for (i, e) in expected.iter_mut().enumerate() {
            for t in &forest.trees {
                let contains = t.tree.nodes().iter().any(|node| matches!(node, Node::Split { var, .. } if *var == i));
                let indicator = if t.pvim > 0.0 { 1.0 } else { 0.0 };
                if contains {
                    *e += t.pvim * indicator;
                }
            }
        }
        if got != expected {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("200 forests, {mismatches} mismatches"))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut violations = 0;
    let mut checked = 0;
    for case in 0..300 {
        let (forest, _) = random_forest(&mut rng, 10_000 + case);
        let n = forest.trees.len();
        for d in 1..=forest.max_depth {
            let distinct = extract_paths(&forest, d).len();
            checked += 1;
            if distinct > n << (d - 1) {
                violations += 1;
            }
        }
    }
    outcome(violations == 0, format!("{checked} (forest, depth) pairs, {violations} over the bound"))
}

fn run_cli(data: &Path, out: &Path, threads: usize) -> (bool, Duration) {
    let start = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_ikf"))
        .arg("run")
        .arg(data)
        .args(["--seed", "7", "--threads", &threads.to_string(), "--output-dir"])
        .arg(out)
        .output()
        .expect("failed to start ikf");
    (status.status.success(), start.elapsed())
}

fn criterion_4() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let data_path = dir.path().join("a1.csv");
    let data = generate(&Scenario::new(ScenarioId::A1, 200, 200), &SeedContext::new(4)).unwrap();
    ikf_core::data::save_csv(&data, &data_path, "y").unwrap();
    let (out1, out2) = (dir.path().join("one"), dir.path().join("four"));
    let (ok1, t1) = run_cli(&data_path, &out1, 1);
    let (ok2, t2) = run_cli(&data_path, &out2, 4);
    if !(ok1 && ok2) {
        return outcome(false, "ikf run failed".into());
    }
    let mut files: Vec<_> = std::fs::read_dir(&out1).unwrap().map(|e| e.unwrap().file_name()).collect();
    files.sort();
    let differing: Vec<String> = files
        .iter()
        .filter(|f| std::fs::read(out1.join(f)).ok() != std::fs::read(out2.join(f)).ok())
        .map(|f| f.to_string_lossy().into_owned())
        .collect();
    let count_two = std::fs::read_dir(&out2).unwrap().count();
    let slowest = t1.max(t2);
    outcome(
        differing.is_empty() && count_two == files.len() && slowest < Duration::from_secs(120),
        format!(
            "{} files, {} differ, runtimes {:.1}s / {:.1}s",
            files.len(),
            differing.len(),
            t1.as_secs_f64(),
            t2.as_secs_f64()
        ),
    )
}

fn criterion_5() -> Outcome {
    let params = IkfParams::default();
    let mut depth1 = Vec::new();
    let mut first: BTreeMap<usize, usize> = BTreeMap::new();
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let (n, p) = (200, 50);
        let x: Vec<f64> = (0..n * p).map(|_| rand_distr_normal(&mut rng)).collect();
        let y: Vec<f64> = (0..n).map(|_| rand_distr_normal(&mut rng)).collect();
        let data = Dataset::from_column_major(n, p, x, y, Task::Regression, None).unwrap();
        let report = run_ikf(&data, &params, &SeedContext::new(seed)).unwrap();
        depth1.extend(report.kings.iter().map(|k| k.pvim_profile()[0]));
        *first.entry(report.ranking[0]).or_insert(0) += 1;
    }
    let mean = depth1.iter().sum::<f64>() / depth1.len() as f64;
    let most = first.values().copied().max().unwrap_or(0);
    outcome(
        (-0.10..=0.10).contains(&mean) && most <= 4,
        format!("mean depth-1 importance {mean:.4} over {} Kings, most frequent top variable {most}/20", depth1.len()),
    )
}

/// Box-Muller draw, independent of the library's sampler.
fn rand_distr_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn experiment(id: ScenarioId, method: Method, seed: u64) -> ExperimentResult {
    let config = ExperimentConfig {
        scenario: Scenario::new(id, 200, 200),
        method,
        params: IkfParams {
            king: KingParams {
                max_depth: id.default_max_depth(),
                ..KingParams::default()
            },
            ..IkfParams::default()
        },
        replications: 20,
        master_seed: seed,
    };
    run_experiment(&config).unwrap()
}

fn criterion_6(a1: &ExperimentResult) -> Outcome {
    let median = a1.summary.mrs_quantiles[2];
    let orr = a1.summary.orr.unwrap();
    outcome(
        median <= 8 && orr >= 0.45,
        format!("median MRS {median}, ORR {orr:.2}, quantiles {:?}", a1.summary.mrs_quantiles),
    )
}

fn criterion_7() -> Outcome {
    let b1 = experiment(ScenarioId::B1, Method::Ikf, 7);
    let orr = b1.summary.orr.unwrap();
    outcome(orr >= 0.6, format!("ORR {orr:.2}, MRS quantiles {:?}", b1.summary.mrs_quantiles))
}

fn criterion_8() -> Outcome {
    let ikf = experiment(ScenarioId::A4, Method::Ikf, 8);
    let dcsis = experiment(ScenarioId::A4, Method::DcSis, 8);
    let (a, b) = (ikf.summary.mrs_quantiles[2], dcsis.summary.mrs_quantiles[2]);
    // paired: replication r sees the same data under both methods
    let paired = ikf
        .replications
        .iter()
        .zip(&dcsis.replications)
        .all(|(x, y)| x.replication == y.replication);
    outcome(paired && a <= b, format!("median MRS iKF {a} vs DC-SIS {b}"))
}

fn kind_of(report: &ikf_core::IkfReport, vars: &[usize]) -> Option<InteractionKind> {
    report.typed_interactions.iter().find(|t| t.vars == vars).map(|t| t.kind)
}

fn criterion_9(a1: &ExperimentResult) -> Outcome {
    let mut recovered = 0;
    let mut correct = 0;
    for r in &a1.replications {
        if r.all_interactions != Some(true) {
            continue;
        }
        recovered += 1;
        let report = r.report.as_ref().unwrap();
        if kind_of(report, &[0, 2]) == Some(InteractionKind::Synergistic)
            && kind_of(report, &[4, 6]) == Some(InteractionKind::Accompanied)
        {
            correct += 1;
        }
    }
    let rate = if recovered == 0 { 0.0 } else { correct as f64 / recovered as f64 };
    outcome(rate >= 0.7, format!("{correct}/{recovered} recovering replications typed correctly ({rate:.2})"))
}

fn criterion_10() -> Outcome {
    let b = experiment(ScenarioId::B3, Method::Ikf, 10);
    let mut recovering = 0;
    let mut directional = 0;
    for r in &b.replications {
        let report = r.report.as_ref().unwrap();
        let merged = |d: usize| -> Vec<Vec<usize>> {
            Metric::ALL
                .iter()
                .flat_map(|&m| report.merged_top(d, m))
                .map(|rec| rec.vars)
                .collect()
        };
        let depth3: Vec<Vec<usize>> = merged(3)
            .into_iter()
            .filter(|v| {
                let mut s = v.clone();
                s.sort();
                s == [0, 2, 4]
            })
            .collect();
        if depth3.is_empty() {
            continue;
        }
        recovering += 1;
        let depth2 = merged(2);
        let both = depth2.contains(&vec![0, 4]) && depth2.contains(&vec![4, 0]);
        let trailing = depth3.iter().all(|v| v[2] == 2);
        if both && trailing {
            directional += 1;
        }
    }
    let rate = if recovering == 0 { 0.0 } else { directional as f64 / recovering as f64 };
    outcome(rate >= 0.6, format!("{directional}/{recovering} recovering replications ({rate:.2})"))
}

/// Textbook double-centering, one loop per index.
fn naive_dcor(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let centered = |v: &[f64]| {
        let d = |k: usize, l: usize| (v[k] - v[l]).abs();
        let mut grand = 0.0;
        for i in 0..n {
            for j in 0..n {
                grand += d(i, j);
            }
        }
        grand /= (n * n) as f64;
        let mut out = vec![vec![0.0; n]; n];
        for k in 0..n {
            for l in 0..n {
                let mut row = 0.0;
                let mut col = 0.0;
                for j in 0..n {
                    row += d(k, j);
                    col += d(j, l);
                }
                out[k][l] = d(k, l) - row / n as f64 - col / n as f64 + grand;
            }
        }
        out
    };
    let (a, b) = (centered(x), centered(y));
    let avg = |p: &Vec<Vec<f64>>, q: &Vec<Vec<f64>>| {
        let mut s = 0.0;
        for k in 0..n {
            for l in 0..n {
                s += p[k][l] * q[k][l];
            }
        }
        s / (n * n) as f64
    };
    let (vx, vy) = (avg(&a, &a), avg(&b, &b));
    if vx <= 0.0 || vy <= 0.0 {
        return 0.0;
    }
    (avg(&a, &b).max(0.0) / (vx * vy).sqrt()).sqrt()
}

fn criterion_11() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1111);
    let mut worst: f64 = 0.0;
    let mut worst_self: f64 = 0.0;
    for _ in 0..50 {
        let n = rng.random_range(4..=40);
        let x: Vec<f64> = (0..n).map(|_| rand_distr_normal(&mut rng)).collect();
        let y: Vec<f64> = x.iter().map(|v| v.abs() + 0.5 * rand_distr_normal(&mut rng)).collect();
        worst = worst.max((distance_correlation(&x, &y) - naive_dcor(&x, &y)).abs());
        worst_self = worst_self.max((distance_correlation(&x, &x) - 1.0).abs());
    }
    // the screening ranking is the score order
    let data = generate(&Scenario::new(ScenarioId::B5, 60, 8), &SeedContext::new(3)).unwrap();
    let ranking = dc_sis(&data);
    let scores: Vec<f64> = (0..8).map(|v| naive_dcor(data.column(v), data.y())).collect();
    let ordered = ranking.windows(2).all(|w| scores[w[0]] >= scores[w[1]] - 1e-10);
    outcome(
        worst <= 1e-10 && worst_self <= 1e-12 && ordered,
        format!("max oracle gap {worst:e}, max |dcor(x,x) - 1| {worst_self:e}"),
    )
}

fn main() {
    // `cargo test -- --list` and filters expect a harness; this target takes none.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut results: Vec<(usize, &str, Outcome, f64)> = Vec::new();
    let mut run = |id: usize, name: &'static str, f: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let secs = start.elapsed().as_secs_f64();
        println!(
            "criterion {id:>2} {name:<28} {} ({}) [{secs:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        results.push((id, name, o, secs));
    };
    run(1, "importance oracle", &criterion_1);
    run(2, "weight update oracle", &criterion_2);
    run(3, "path count bound", &criterion_3);
    run(4, "cli determinism", &criterion_4);
    run(5, "null calibration", &criterion_5);
    let a1 = experiment(ScenarioId::A1, Method::Ikf, 6);
    run(6, "a1 recovery", &|| criterion_6(&a1));
    run(7, "b1 third-order recovery", &criterion_7);
    run(8, "a4 versus distance screening", &criterion_8);
    run(9, "a1 interaction typing", &|| criterion_9(&a1));
    run(10, "b3 hierarchy direction", &criterion_10);
    run(11, "distance correlation oracle", &criterion_11);

    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {}/{} passed",
        results.len() - failed.len(),
        results.len()
    );
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
