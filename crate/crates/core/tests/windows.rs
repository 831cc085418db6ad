use std::time::Instant;

mod common;

use common::{fixture, scan_oracle, table};
use ctxengage_core::features::registry::{time_features, WINDOWS};
use ctxengage_core::features::time::{sweep, window_features};
use ctxengage_core::rng::stream;
use rand::Rng;

#[test]
fn window_columns_match_scan_oracle() {
    for seed in 0..20 {
        let f = fixture(10_000, seed);
        let t = window_features(&table(&f)).unwrap();
        let oracle = scan_oracle(&f);
        assert_eq!(oracle.len(), 48);
        let names: Vec<&str> = oracle.iter().map(|(n, _)| n.as_str()).collect();
        let registry = time_features();
        let mut sorted_registry: Vec<&str> = registry.iter().map(String::as_str).collect();
        let mut sorted_names = names.clone();
        sorted_registry.sort_unstable();
        sorted_names.sort_unstable();
        assert_eq!(sorted_names, sorted_registry);
        for (name, expected) in &oracle {
            assert_eq!(t.ints(name).unwrap(), expected.as_slice(), "seed {seed}, column {name}");
        }
    }
}

#[test]
fn windows_are_monotone_per_row() {
    let f = fixture(5_000, 99);
    let t = window_features(&table(&f)).unwrap();
    for name in time_features().iter().filter(|n| n.ends_with("_05h")) {
        let family = name.strip_suffix("_05h").unwrap();
        let cols: Vec<&[i64]> = WINDOWS
            .iter()
            .map(|(_, s)| t.ints(&format!("{family}_{s}")).unwrap())
            .collect();
        for i in 0..t.row_count() {
            for w in 1..6 {
                assert!(cols[w][i] >= cols[w - 1][i], "{family} row {i}");
            }
        }
    }
}

#[test]
fn sweep_million_rows_under_a_minute() {
    let n = 1_000_000;
    let mut rng = stream(5, "sweep-perf");
    let keys: Vec<u64> = (0..n).map(|_| rng.gen_range(0..50_000)).collect();
    let ts: Vec<i64> = (0..n).map(|_| rng.gen_range(0..7 * 86_400)).collect();
    let start = Instant::now();
    let out = sweep(&keys, &ts);
    let took = start.elapsed();
    assert_eq!(out.len(), n);
    assert!(took.as_secs_f64() < 60.0, "sweep took {took:?}");
}
