use std::collections::HashSet;

use ctxengage_core::sampling::{floor_count, inter_id_count, ratio_report, sample_by_key, sample_inter, sample_random, SamplePlan};
use ctxengage_core::schema::{ENGAGED_ID, ENGAGING_ID, PERCENTS, TWEET_ID};
use ctxengage_core::synthgen::{generate, SynthConfig};
use ctxengage_core::{ColumnTable, Technique};

fn corpus() -> ColumnTable {
    generate(&SynthConfig {
        n_rows: 100_000,
        n_viewers: 20_000,
        n_authors: 5_000,
        n_tweets: 40_000,
        seed: 11,
        ..Default::default()
    })
    .unwrap()
}

fn distinct(t: &ColumnTable, col: &str) -> usize {
    t.strs(col).unwrap().iter().collect::<HashSet<_>>().len()
}

#[test]
fn random_sample_sizes_are_exact() {
    let t = corpus();
    for p in PERCENTS {
        let s = sample_random(&t, f64::from(p), 7).unwrap();
        assert_eq!(s.row_count(), t.row_count() * p as usize / 100);
    }
    assert_eq!(floor_count(999, 10.0), 99);
    assert_eq!(floor_count(7, 50.0), 3);
}

#[test]
fn key_samples_preserve_their_ratio() {
    let t = corpus();
    let full = ratio_report(&t).unwrap();
    for (technique, key, ratio) in [
        (Technique::Eu, ENGAGING_ID, "viewers_per_row"),
        (Technique::Ewu, ENGAGED_ID, "authors_per_row"),
        (Technique::Tweet, TWEET_ID, "tweets_per_row"),
    ] {
        for p in PERCENTS {
            let s = SamplePlan::new(technique, p, 5).unwrap().apply(&t).unwrap();
            let expected_keys = distinct(&t, key) * p as usize / 100;
            assert_eq!(distinct(&s, key), expected_keys, "{technique} {p}%");
            let r = ratio_report(&s).unwrap()[ratio];
            let rel = (r - full[ratio]).abs() / full[ratio];
            assert!(rel <= 0.2, "{technique} {p}%: {r} vs {} ({rel})", full[ratio]);
        }
    }
}

#[test]
fn key_sample_rows_keep_whole_groups() {
    let t = corpus();
    let s = sample_by_key(&t, ENGAGING_ID, 10.0, 1).unwrap();
    let kept: HashSet<&String> = s.strs(ENGAGING_ID).unwrap().iter().collect();
    let expected = t.strs(ENGAGING_ID).unwrap().iter().filter(|v| kept.contains(v)).count();
    assert_eq!(s.row_count(), expected);
}

#[test]
fn inter_draws_square_root_fractions() {
    assert_eq!(inter_id_count(10_000, 10.0), 3162);
    assert_eq!(inter_id_count(100, 1.0), 10);
    let t = corpus();
    for p in PERCENTS {
        let s = sample_inter(&t, f64::from(p), 3).unwrap();
        for key in [ENGAGED_ID, ENGAGING_ID] {
            let k = inter_id_count(distinct(&t, key), f64::from(p));
            assert_eq!(k, ((f64::from(p) / 100.0).sqrt() * distinct(&t, key) as f64).floor() as usize);
            assert!(distinct(&s, key) <= k);
        }
        assert!(s.row_count() > 0);
    }
}
