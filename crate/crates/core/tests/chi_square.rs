mod common;

use common::contingency_chi2;
use ctxengage_core::rng::stream;
use ctxengage_core::select::{chi_square, select_top_k};
use rand::Rng;

#[test]
fn matches_contingency_table() {
    let mut rng = stream(3, "chi2");
    for case in 0..200 {
        let n = rng.gen_range(2..=1000);
        let cats = rng.gen_range(1..=10);
        let skew = rng.gen_range(0.0..1.0);
        let mut y: Vec<i64> = (0..n).map(|_| rng.gen_bool(0.3) as i64).collect();
        y[0] = 0;
        y[1] = 1;
        let f: Vec<i64> = y
            .iter()
            .map(|&c| {
                if rng.gen_bool(skew) {
                    c * (cats - 1).max(0)
                } else {
                    rng.gen_range(0..cats)
                }
            })
            .collect();
        let got = chi_square(&f, &y).unwrap();
        let want = contingency_chi2(&f, &y);
        assert!((got - want).abs() <= 1e-9 * want.max(1.0), "case {case}: {got} vs {want}");
    }
}

#[test]
fn independent_tables_give_zero() {
    // class shares 1/4 and 3/4, every category a multiple of 4 rows
    for cats in 1..=10i64 {
        let mut f = Vec::new();
        let mut y = Vec::new();
        for v in 0..cats {
            for k in 0..4 * (v + 1) {
                f.push(v);
                y.push((k % 4 != 0) as i64);
            }
        }
        assert_eq!(chi_square(&f, &y).unwrap(), 0.0, "{cats} categories");
    }
}

#[test]
fn single_class_is_rejected() {
    assert!(chi_square(&[1, 2, 3], &[0, 0, 0]).is_err());
    assert!(chi_square(&[], &[]).is_err());
}

#[test]
fn top_k_picks_highest_scores() {
    let mut rng = stream(4, "topk");
    for _ in 0..100 {
        let n = rng.gen_range(1..60);
        let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0..20) as f64).collect();
        let k = rng.gen_range(0..=n);
        let sel = select_top_k(&scores, k).unwrap();
        assert_eq!(sel.len(), k);
        let min_in = sel.iter().map(|&i| scores[i]).fold(f64::INFINITY, f64::min);
        for i in (0..n).filter(|i| !sel.contains(i)) {
            assert!(scores[i] <= min_in);
        }
    }
    assert!(select_top_k(&[1.0], 2).is_err());
}
