use ctxengage_core::rng::stream;
use ctxengage_core::stats::{friedman, holm, mid_ranks, run_factor_suite, wilcoxon_signed_rank, EvalRecord, WilcoxonMode};
use rand::Rng;

fn record(alg: &str, eval: usize, prauc: f64, rce: f64) -> EvalRecord {
    EvalRecord {
        algorithm: alg.into(),
        note: "oracle_scaled".into(),
        feature_selection: "all".into(),
        trained_on: "train_full".into(),
        to_technique: "random".into(),
        to_percent: "10".into(),
        evaluated_on: format!("holdout_{eval:02}"),
        target: "like".into(),
        prauc,
        rce,
    }
}

#[test]
fn dominant_algorithm_is_detected() {
    let mut rng = stream(1, "dominant");
    let mut recs = Vec::new();
    for e in 0..12 {
        for (alg, level) in [("a", 0.9), ("b", 0.6), ("c", 0.3)] {
            let jitter = rng.gen_range(-0.05..0.05);
            recs.push(record(alg, e, level + jitter, 100.0 * (level + jitter)));
        }
    }
    let out = run_factor_suite(&recs, 0.05).unwrap();
    let rows: Vec<_> = out.friedman.iter().filter(|r| r.within == "algorithm").collect();
    assert_eq!(rows.len(), 2);
    for r in rows {
        assert!(r.result.p_corr < 0.05, "{r:?}");
        assert!((r.result.w - 1.0).abs() < 1e-12);
    }
    let post: Vec<_> = out.posthoc.iter().filter(|r| r.within == "algorithm").collect();
    assert_eq!(post.len(), 6);
    assert!(post.iter().all(|r| r.p_corr < 0.05), "{post:?}");
}

#[test]
fn identical_results_are_not_significant() {
    let recs: Vec<_> = (0..8)
        .flat_map(|e| ["a", "b", "c"].map(|alg| record(alg, e, 0.5, 1.0)))
        .collect();
    let out = run_factor_suite(&recs, 0.05).unwrap();
    assert!(!out.friedman.is_empty());
    for r in &out.friedman {
        assert_eq!(r.result.p, 1.0);
        assert_eq!(r.result.p_corr, 1.0);
    }
    assert!(out.posthoc.is_empty());
}

fn oracle_rank(row: &[f64], j: usize) -> f64 {
    let less = row.iter().filter(|&&v| v < row[j]).count() as f64;
    let equal = row.iter().filter(|&&v| v == row[j]).count() as f64;
    less + (equal + 1.0) / 2.0
}

/// Survival function of χ² with 3 degrees of freedom by Simpson integration.
fn chi2_sf_3(x: f64) -> f64 {
    let pdf = |t: f64| t.sqrt() * (-t / 2.0).exp() / (2f64.powf(1.5) * std::f64::consts::PI.sqrt() / 2.0);
    let steps = 20_000;
    let h = x / steps as f64;
    let mut s = pdf(0.0) + pdf(x);
    for i in 1..steps {
        s += pdf(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    1.0 - s * h / 3.0
}

#[test]
fn friedman_matches_rank_oracle() {
    let mut rng = stream(2, "friedman");
    for _ in 0..50 {
        let m: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..4).map(|_| rng.gen_range(0..5) as f64).collect())
            .collect();
        let (n, k) = (5.0, 4.0);
        let mut col_sums = [0.0; 4];
        let mut ties = 0.0;
        for row in &m {
            for (j, s) in col_sums.iter_mut().enumerate() {
                *s += oracle_rank(row, j);
            }
            let mut seen = Vec::new();
            for &v in row {
                if !seen.contains(&v) {
                    seen.push(v);
                    let t = row.iter().filter(|&&x| x == v).count() as f64;
                    ties += t * t * t - t;
                }
            }
            let ranks = mid_ranks(row);
            for j in 0..4 {
                assert_eq!(ranks[j], oracle_rank(row, j));
            }
        }
        let denom = 1.0 - ties / (n * (k * k * k - k));
        if denom == 0.0 {
            continue;
        }
        let raw: f64 = 12.0 / (n * k * (k + 1.0)) * col_sums.iter().map(|r| r * r).sum::<f64>() - 3.0 * n * (k + 1.0);
        let q = raw / denom;
        let t = friedman(&m).unwrap();
        assert!((t.q - q).abs() < 1e-9, "{m:?}: {} vs {q}", t.q);
        assert_eq!(t.ddof1, 3);
        assert!((t.w - q / (n * (k - 1.0))).abs() < 1e-9);
        assert!((t.p - chi2_sf_3(q)).abs() < 1e-6, "{} vs {}", t.p, chi2_sf_3(q));
    }
}

#[test]
fn holm_properties() {
    let mut rng = stream(3, "holm");
    for _ in 0..200 {
        let m = rng.gen_range(1..20);
        let p: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
        let c = holm(&p).unwrap();
        let min = p.iter().copied().fold(1.0, f64::min);
        for i in 0..m {
            assert!(c[i] >= p[i] && c[i] <= 1.0);
            for j in 0..m {
                if p[i] <= p[j] {
                    assert!(c[i] <= c[j]);
                }
            }
        }
        let cmin = c.iter().copied().fold(1.0, f64::min);
        assert!((cmin - (m as f64 * min).min(1.0)).abs() < 1e-15);
    }
    assert!(holm(&[0.5, 1.2]).is_err());
    assert_eq!(holm(&[0.01, 0.04, 0.03]).unwrap(), vec![0.03, 0.06, 0.06]);
}

#[test]
fn wilcoxon_exact_small_sample() {
    let a = [1.0, 2.0, 3.0, 4.0, 5.0];
    let b = [0.5, 1.2, 2.1, 2.5, 3.4];
    let p = wilcoxon_signed_rank(&a, &b, WilcoxonMode::Auto).unwrap();
    assert!((p - 0.0625).abs() < 1e-12);
    assert_eq!(wilcoxon_signed_rank(&a, &a, WilcoxonMode::Auto).unwrap(), 1.0);
    let normal = wilcoxon_signed_rank(&a, &b, WilcoxonMode::Normal).unwrap();
    assert!(normal > 0.0 && normal < 0.1);
}
