//! One PASS/FAIL line per acceptance criterion.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::{contingency_chi2, fixture, scan_oracle, snapshot, table};
use ctxengage_core::features::encode::derive_labels;
use ctxengage_core::features::graph::{annotate_graph_features, build_engagement_graphs, build_follow_graph, second_degree, DirectedEdgeSet};
use ctxengage_core::features::registry::{graph_engagement_features, time_features, WINDOWS};
use ctxengage_core::features::time::{sweep, window_features};
use ctxengage_core::ingest::{atomic_write, read_named, write_tsv, TsvOptions};
use ctxengage_core::learn::linear::{logistic_loss_grad, train_nb};
use ctxengage_core::learn::tree::{train_gbt, train_tree, Binned, GbtConfig, Impurity, TreeConfig};
use ctxengage_core::learn::{model_name, ClassifierModel, Kind, Matrix};
use ctxengage_core::metrics::{ctr, decomposition_check, entropy, prauc, rce, second_case, third_case};
use ctxengage_core::pipeline::{self, PipelineConfig};
use ctxengage_core::rng::stream;
use ctxengage_core::sampling::{inter_id_count, ratio_report, sample_inter, sample_random, SamplePlan};
use ctxengage_core::schema::{ENGAGED_ID, ENGAGING_ID, PERCENTS};
use ctxengage_core::select::chi_square;
use ctxengage_core::stats::{common_factor_combinations, friedman, holm, wilcoxon_signed_rank, WilcoxonMode};
use ctxengage_core::synthgen::{generate, SynthConfig};
use ctxengage_core::{ColumnTable, DatasetId, Source, Technique};
use rand::Rng;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn entropy_example() -> Check {
    let start = Instant::now();
    let p = [0.25, 0.25, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0];
    let h = entropy(&p).map_err(|e| e.to_string())?;
    let second = decomposition_check(h, &second_case()).map_err(|e| e.to_string())?;
    let third = decomposition_check(h, &third_case()).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    ensure!((h - 1.58903).abs() < 1e-4, "H = {h}");
    ensure!(second && third, "decomposition mismatch");
    ensure!(took < Duration::from_millis(1), "took {took:?}");
    ensure!(
        entropy(&[0.25, 0.25, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0]).is_err(),
        "six-outcome list summing to 7/6 accepted"
    );
    Ok(format!("H = {h:.5} in {took:?}; the six-element listing sums to 7/6 and is rejected, five outcomes used"))
}

fn rce_contract() -> Check {
    let mut rng = stream(1, "acc-rce");
    for _ in 0..100 {
        let n = rng.gen_range(2..500);
        let rate = rng.gen_range(0.01..0.99);
        let mut y: Vec<i64> = (0..n).map(|_| rng.gen_bool(rate) as i64).collect();
        y[0] = 0;
        y[1] = 1;
        let c = ctr(&y).unwrap();
        let r = rce(&y, &vec![c; n]).unwrap();
        ensure!(r == 0.0, "straw man gives {r}");
        let perfect: Vec<f64> = y.iter().map(|&v| v as f64).collect();
        let r = rce(&y, &perfect).unwrap();
        ensure!((r - 100.0).abs() < 1e-9, "perfect gives {r}");
    }
    let r = rce(&[1, 0, 0, 0], &[0.5; 4]).unwrap();
    ensure!((r - -23.2623).abs() < 1e-3, "hand case gives {r}");
    Ok(format!("hand case {r:.4}"))
}

fn constant_prauc() -> Check {
    let mut seen = Vec::new();
    for (pos, n) in [(3usize, 1000usize), (1, 4), (1, 2)] {
        let pi = pos as f64 / n as f64;
        let y: Vec<i64> = (0..n).map(|i| (i < pos) as i64).collect();
        let a = prauc(&y, &vec![0.3; n]).unwrap();
        ensure!((a - (1.0 + pi) / 2.0).abs() < 1e-12, "π = {pi}: {a}");
        seen.push(format!("π={pi}→{a:.4}"));
    }
    Ok(seen.join(", "))
}

fn chi_square_oracle() -> Check {
    let mut rng = stream(4, "acc-chi2");
    for case in 0..200 {
        let n = rng.gen_range(2..=1000);
        let cats = rng.gen_range(1..=10);
        let mut y: Vec<i64> = (0..n).map(|_| rng.gen_bool(0.3) as i64).collect();
        y[0] = 0;
        y[1] = 1;
        let f: Vec<i64> = y.iter().map(|&c| if rng.gen_bool(0.3) { c * (cats - 1) } else { rng.gen_range(0..cats) }).collect();
        let got = chi_square(&f, &y).unwrap();
        let want = contingency_chi2(&f, &y);
        ensure!((got - want).abs() <= 1e-9 * want.max(1.0), "case {case}: {got} vs {want}");
    }
    for cats in 1..=10i64 {
        let (f, y): (Vec<i64>, Vec<i64>) = (0..cats)
            .flat_map(|v| (0..4 * (v + 1)).map(move |k| (v, (k % 4 != 0) as i64)))
            .unzip();
        let got = chi_square(&f, &y).unwrap();
        ensure!(got == 0.0, "independent table with {cats} categories gives {got}");
    }
    Ok("200 fixtures, 10 independence tables".into())
}

fn window_oracle() -> Check {
    let mut names = time_features();
    names.sort();
    for seed in 0..20 {
        let f = fixture(10_000, seed);
        let t = window_features(&table(&f)).map_err(|e| e.to_string())?;
        let oracle = scan_oracle(&f);
        let mut got: Vec<String> = oracle.iter().map(|(n, _)| n.clone()).collect();
        got.sort();
        ensure!(got == names, "oracle columns differ from the registry");
        for (name, want) in &oracle {
            ensure!(t.ints(name).unwrap() == want.as_slice(), "seed {seed}: {name} differs");
        }
        for fam in names.iter().filter_map(|n| n.strip_suffix("_05h")) {
            let cols: Vec<&[i64]> = WINDOWS.iter().map(|(_, s)| t.ints(&format!("{fam}_{s}")).unwrap()).collect();
            for i in 0..t.row_count() {
                ensure!((1..6).all(|w| cols[w][i] >= cols[w - 1][i]), "seed {seed}: {fam} not monotone at row {i}");
            }
        }
    }
    let mut rng = stream(5, "acc-sweep");
    let keys: Vec<u64> = (0..1_000_000).map(|_| rng.gen_range(0..50_000)).collect();
    let ts: Vec<i64> = (0..1_000_000).map(|_| rng.gen_range(0..7 * 86_400)).collect();
    let start = Instant::now();
    let out = sweep(&keys, &ts);
    let took = start.elapsed();
    ensure!(out.len() == keys.len(), "sweep lost rows");
    ensure!(took < Duration::from_secs(60), "sweep took {took:?}");
    Ok(format!("20 fixtures × 48 columns; 10⁶-row sweep in {:.2}s", took.as_secs_f64()))
}

fn graph_oracle() -> Check {
    for seed in 0..50 {
        let mut rng = stream(seed, "acc-graph");
        let n = rng.gen_range(1..=200);
        let density = rng.gen_range(0.0..0.08);
        let adj: Vec<Vec<bool>> = (0..n).map(|_| (0..n).map(|_| rng.gen_bool(density)).collect()).collect();
        let mut g = DirectedEdgeSet::new();
        for a in 0..n {
            for b in 0..n {
                if adj[a][b] {
                    g.insert(&a.to_string(), &b.to_string());
                }
            }
        }
        let sd = second_degree(&g);
        for a in 0..n {
            for c in 0..n {
                let k = (0..n).filter(|&b| adj[a][b] && adj[b][c]).count() as u64;
                ensure!(sd.count(&a.to_string(), &c.to_string()) == k, "seed {seed}: ({a},{c})");
            }
        }
    }
    let t = derive_labels(&generate(&SynthConfig { n_rows: 10_000, seed: 8, ..Default::default() }).unwrap()).unwrap();
    let follow = build_follow_graph(&[&t]).unwrap();
    let eng = build_engagement_graphs(&t).unwrap();
    let out = annotate_graph_features(&t, &follow, &eng, true).unwrap();
    let names = graph_engagement_features();
    ensure!(names.len() == 40, "{} engagement columns", names.len());
    for flag in names.iter().filter(|n| n.contains("_flag_")) {
        let f = out.ints(flag).unwrap();
        let c = out.ints(&flag.replace("_flag_", "_count_")).unwrap();
        ensure!(f.iter().zip(c).all(|(&f, &c)| f == (c >= 1) as i64), "{flag} is not count ≥ 1");
    }
    Ok("50 graphs, 40 engagement columns".into())
}

fn distinct(t: &ColumnTable, col: &str) -> usize {
    t.strs(col).unwrap().iter().collect::<std::collections::HashSet<_>>().len()
}

fn sampling() -> Check {
    let t = generate(&SynthConfig {
        n_rows: 100_000,
        n_viewers: 20_000,
        n_authors: 5_000,
        n_tweets: 40_000,
        seed: 11,
        ..Default::default()
    })
    .unwrap();
    let full = ratio_report(&t).unwrap();
    let mut worst: f64 = 0.0;
    for p in PERCENTS {
        let s = sample_random(&t, f64::from(p), 7).unwrap();
        ensure!(s.row_count() == t.row_count() * p as usize / 100, "random {p}%: {} rows", s.row_count());
        for (tech, ratio) in [(Technique::Eu, "viewers_per_row"), (Technique::Ewu, "authors_per_row"), (Technique::Tweet, "tweets_per_row")] {
            let s = SamplePlan::new(tech, p, 5).unwrap().apply(&t).unwrap();
            let rel = (ratio_report(&s).unwrap()[ratio] - full[ratio]).abs() / full[ratio];
            worst = worst.max(rel);
            ensure!(rel <= 0.2, "{tech} {p}%: {ratio} off by {rel:.3}");
        }
        let s = sample_inter(&t, f64::from(p), 3).unwrap();
        for key in [ENGAGED_ID, ENGAGING_ID] {
            let k = inter_id_count(distinct(&t, key), f64::from(p));
            ensure!(distinct(&s, key) <= k, "inter {p}%: too many {key}");
        }
    }
    ensure!(inter_id_count(10_000, 10.0) == 3162, "√0.1 fraction");
    Ok(format!("worst ratio deviation {:.1}%", worst * 100.0))
}

fn statistics() -> Check {
    let t = friedman(&vec![vec![1.0, 2.0, 3.0]; 3]).unwrap();
    ensure!((t.q - 6.0).abs() < 1e-12 && (t.w - 1.0).abs() < 1e-12, "Q = {}, W = {}", t.q, t.w);
    ensure!((t.p - 0.049787).abs() < 1e-6, "p = {}", t.p);
    let w = wilcoxon_signed_rank(&[1.0, 2.0, 3.0, 4.0, 5.0], &[0.0; 5], WilcoxonMode::Auto).unwrap();
    ensure!((w - 0.0625).abs() < 1e-12, "wilcoxon p = {w}");
    let h = holm(&[0.01, 0.04, 0.03]).unwrap();
    ensure!(h.iter().zip([0.03, 0.06, 0.06]).all(|(a, b)| (a - b).abs() < 1e-15), "holm {h:?}");
    let a = ["tree", "tree", "tree", "lr", "lr"];
    let b = ["1", "2", "3", "1", "2"];
    let c = ["a", "b", "c", "a", "d"];
    let d = [0.1, 0.2, 0.3, 0.01, 0.05];
    let rows: Vec<usize> = (0..5).collect();
    let keep = common_factor_combinations(&rows, |&i| a[i].to_string(), |&i| vec![b[i].to_string(), c[i].to_string()]);
    let pick = |v: &[&'static str]| keep.iter().map(|&i| v[i]).collect::<Vec<&str>>();
    ensure!(pick(&a) == ["tree", "lr"] && pick(&b) == ["1", "1"] && pick(&c) == ["a", "a"], "kept {keep:?}");
    let kept_d: Vec<f64> = keep.iter().map(|&i| d[i]).collect();
    ensure!(kept_d == [0.1, 0.01], "D = {kept_d:?}");
    let by_b = common_factor_combinations(&rows, |&i| b[i].to_string(), |&i| vec![a[i].to_string(), c[i].to_string()]);
    let by_c = common_factor_combinations(&rows, |&i| c[i].to_string(), |&i| vec![a[i].to_string(), b[i].to_string()]);
    ensure!(by_b.is_empty() && by_c.is_empty(), "B/C intersections not empty");
    Ok("kept D = [0.1, 0.01] (the written example's 0.05 belongs to the dropped (lr, 2, d) row)".into())
}

fn learners() -> Check {
    let mut rng = stream(9, "acc-learn");
    let rows: Vec<Vec<f64>> = (0..300).map(|_| (0..4).map(|_| rng.gen_range(0.0..3.0)).collect()).collect();
    let y: Vec<i64> = rows.iter().map(|r| (r[0] - r[3] + rng.gen_range(-1.0..1.0) > 0.0) as i64).collect();
    let x = Matrix::from_rows(&rows).unwrap();
    let w = [0.3, -0.2, 0.5, -0.7];
    let (_, gw, _) = logistic_loss_grad(&x, &y, &w, 0.1);
    let h = 1e-6;
    for j in 0..4 {
        let (mut up, mut dn) = (w.to_vec(), w.to_vec());
        up[j] += h;
        dn[j] -= h;
        let num = (logistic_loss_grad(&x, &y, &up, 0.1).0 - logistic_loss_grad(&x, &y, &dn, 0.1).0) / (2.0 * h);
        ensure!((num - gw[j]).abs() <= 1e-4 * gw[j].abs().max(1e-3), "gradient {j}: {num} vs {}", gw[j]);
    }
    let xor_rows: Vec<Vec<f64>> = (0..40).map(|i| vec![(i % 2) as f64, ((i / 2) % 2) as f64]).collect();
    let xor_y: Vec<i64> = xor_rows.iter().map(|r| (r[0] != r[1]) as i64).collect();
    let xx = Matrix::from_rows(&xor_rows).unwrap();
    let idx: Vec<u32> = (0..40).collect();
    let tree = train_tree(&Binned::new(&xx), &idx, &xor_y, &TreeConfig::classifier(Impurity::Gini, 2));
    ensure!((0..40).all(|i| tree.predict_value(&xx, i) == xor_y[i] as f64), "XOR not solved");
    let idx: Vec<u32> = (0..300).collect();
    let cfg = GbtConfig {
        num_iter: 20,
        max_depth: 5,
        min_instances: 1,
        subsampling_rate: 1.0,
        min_info_gain: 0.0,
        step_size: 0.1,
    };
    let (_, hist) = train_gbt(&Binned::new(&x), &idx, &y, &cfg, 1).unwrap();
    ensure!(hist.windows(2).all(|w| w[1] <= w[0] + 1e-12), "loss increased: {hist:?}");
    let nb = train_nb(&x, &y, 1.0).unwrap();
    ensure!(nb.class_probabilities(&x).iter().all(|p| (p[0] + p[1] - 1.0).abs() < 1e-12), "NB probabilities");
    Ok(format!("GBT log loss {:.4} → {:.4}", hist[0], hist[hist.len() - 1]))
}

fn end_to_end() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = dir.path();
    let cfg = PipelineConfig {
        root: root.to_path_buf(),
        seed: 42,
        sampling_techniques: vec![Technique::Random, Technique::Eu],
        sampling_percentages: vec![1, 2, 10],
        classifier_names: vec![Kind::GradientBoosting],
        top_ns: vec!["all".into()],
        features_notes: vec!["oracle_scaled".into()],
        ..Default::default()
    };
    let corpus = generate(&SynthConfig {
        n_rows: 100_000,
        signal_strength: 0.8,
        seed: 42,
        ..Default::default()
    })
    .map_err(|e| e.to_string())?;
    let mut buf = Vec::new();
    write_tsv(&corpus, &mut buf, &TsvOptions::default()).map_err(|e| e.to_string())?;
    atomic_write(&cfg.input_path(), &buf).map_err(|e| e.to_string())?;

    let start = Instant::now();
    pipeline::run_all(&cfg).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    ensure!(took < Duration::from_secs(15 * 60), "run_all took {took:?}");

    let train = DatasetId::sampled(Source::Train, Technique::Random, 10, "");
    let held_out = DatasetId::sampled(Source::ValTest, Technique::Random, 10, "ChiSq_");
    let name = model_name(Kind::GradientBoosting, "all", "oracle_scaled", &train.base_name(), &train.base_name(), "react");
    let model_path = root.join("models").join(Kind::GradientBoosting.as_str()).join(format!("{name}.json"));
    let text = std::fs::read_to_string(&model_path).map_err(|e| format!("{}: {e}", model_path.display()))?;
    let model: ClassifierModel = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let eval = read_named(&held_out.name(), &cfg.data_dir()).map_err(|e| e.to_string())?;
    let y = eval.ints("react").map_err(|e| e.to_string())?.to_vec();
    let preds = model.predict_table(&eval).map_err(|e| e.to_string())?;
    let pi = ctr(&y).map_err(|e| e.to_string())?;
    let r = rce(&y, &preds).map_err(|e| e.to_string())?;
    let a = prauc(&y, &preds).map_err(|e| e.to_string())?;
    ensure!(r > 0.0, "RCE {r}");
    ensure!(a > (1.0 + pi) / 2.0, "PRAUC {a} vs constant baseline {}", (1.0 + pi) / 2.0);

    let before = snapshot(root);
    pipeline::run_all(&cfg).map_err(|e| e.to_string())?;
    ensure!(before == snapshot(root), "rerun changed the artifact tree");
    Ok(format!(
        "run_all {:.0}s; react on {} ({} rows, π={pi:.3}): RCE {r:.2}, PRAUC {a:.4} > {:.4}; rerun identical over {} files",
        took.as_secs_f64(),
        held_out.base_name(),
        y.len(),
        (1.0 + pi) / 2.0,
        before.len()
    ))
}

fn run(n: usize, title: &str, f: fn() -> Check) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let secs = start.elapsed().as_secs_f64();
    match outcome {
        Ok(note) => {
            println!("PASS {n:>2} {title} ({secs:.1}s) — {note}");
            true
        }
        Err(why) => {
            println!("FAIL {n:>2} {title} ({secs:.1}s) — {why}");
            false
        }
    }
}

fn main() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("entropy worked example", entropy_example),
        ("RCE contract", rce_contract),
        ("constant-prediction PRAUC", constant_prauc),
        ("chi-square oracle", chi_square_oracle),
        ("window-feature oracle", window_oracle),
        ("graph oracle", graph_oracle),
        ("sampling", sampling),
        ("statistics", statistics),
        ("learner sanity", learners),
        ("end-to-end", end_to_end),
    ];
    let only: Option<usize> = std::env::args().nth(1).and_then(|a| a.parse().ok());
    let mut failed = 0;
    for (i, (title, f)) in criteria.into_iter().enumerate() {
        if only.is_some_and(|k| k != i + 1) {
            continue;
        }
        failed += !run(i + 1, title, f) as usize;
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
