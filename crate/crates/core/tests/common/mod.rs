//! Oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;

use ctxengage_core::features::registry::WINDOWS;
use ctxengage_core::rng::stream;
use ctxengage_core::schema::{ENGAGED_ID, ENGAGING_ID, HASHTAGS, PRESENT_DOMAINS, PRESENT_LINKS, TWEET_TIMESTAMP};
use ctxengage_core::{Column, ColumnTable};
use rand::Rng;

pub struct Fixture {
    pub viewer: Vec<u32>,
    pub author: Vec<u32>,
    pub ts: Vec<i64>,
    pub elems: [Vec<Vec<u32>>; 3],
}

pub fn fixture(n: usize, seed: u64) -> Fixture {
    let mut rng = stream(seed, "windows");
    let ts = (0..n).map(|_| rng.gen_range(0..3 * 86_400i64 / 60) * 60).collect();
    let mut set = |m: u32| -> Vec<u32> {
        let k = rng.gen_range(0..4);
        let mut s: Vec<u32> = (0..k).map(|_| rng.gen_range(0..m)).collect();
        s.sort_unstable();
        s.dedup();
        s
    };
    let elems = [
        (0..n).map(|_| set(60)).collect(),
        (0..n).map(|_| set(30)).collect(),
        (0..n).map(|_| set(10)).collect(),
    ];
    let mut rng = stream(seed, "windows-ids");
    Fixture {
        viewer: (0..n).map(|_| rng.gen_range(0..200)).collect(),
        author: (0..n).map(|_| rng.gen_range(0..80)).collect(),
        ts,
        elems,
    }
}

pub fn table(f: &Fixture) -> ColumnTable {
    let strs = |p: &str, v: &[u32]| Column::Str(v.iter().map(|x| format!("{p}{x}")).collect());
    let sets = |p: &str, v: &[Vec<u32>]| Column::set(v.iter().map(|s| s.iter().map(|x| format!("{p}{x}")).collect()).collect());
    ColumnTable::from_columns(vec![
        (ENGAGING_ID, strs("v", &f.viewer)),
        (ENGAGED_ID, strs("a", &f.author)),
        (TWEET_TIMESTAMP, Column::Int(f.ts.clone())),
        (HASHTAGS, sets("h", &f.elems[0])),
        (PRESENT_LINKS, sets("l", &f.elems[1])),
        (PRESENT_DOMAINS, sets("d", &f.elems[2])),
    ])
    .unwrap()
}

/// Index of the smallest window containing an earlier event `dt` seconds
/// back, if any.
pub fn smallest_window(dt: i64) -> Option<usize> {
    if dt <= 0 {
        return None;
    }
    WINDOWS.iter().position(|&(w, _)| dt <= w)
}

/// All 48 columns by comparing every row with every row in the preceding
/// 48 hours.
pub fn scan_oracle(f: &Fixture) -> Vec<(String, Vec<i64>)> {
    let n = f.ts.len();
    // per row, per family, per smallest window
    let mut acc = vec![[[0i64; 6]; 8]; n];
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| f.ts[i]);
    for (pos, &i) in order.iter().enumerate() {
        for &j in order[..pos].iter().rev() {
            let Some(wi) = smallest_window(f.ts[i] - f.ts[j]) else {
                if f.ts[i] - f.ts[j] > WINDOWS[5].0 {
                    break;
                }
                continue;
            };
            let same_viewer = f.viewer[i] == f.viewer[j];
            for e in 0..3 {
                let shared = f.elems[e][i].iter().filter(|x| f.elems[e][j].contains(x)).count() as i64;
                acc[i][e][wi] += shared;
                if same_viewer {
                    acc[i][3 + e][wi] += shared;
                }
            }
            acc[i][6][wi] += same_viewer as i64;
            acc[i][7][wi] += (f.author[i] == f.author[j]) as i64;
        }
    }
    let families = [
        "hashtags_frequency",
        "links_frequency",
        "domains_frequency",
        "user_hashtags_frequency",
        "user_links_frequency",
        "user_domains_frequency",
        "engaging_saw_tweets_count",
        "engageds_tweets_views_count",
    ];
    let mut out = Vec::new();
    for (k, fam) in families.iter().enumerate() {
        for (wi, (_, suffix)) in WINDOWS.iter().enumerate() {
            let col = (0..n).map(|i| acc[i][k][..=wi].iter().sum()).collect();
            out.push((format!("{fam}_{suffix}"), col));
        }
    }
    out
}

/// Pearson statistic from an explicit contingency table.
pub fn contingency_chi2(f: &[i64], y: &[i64]) -> f64 {
    let mut table: BTreeMap<i64, BTreeMap<i64, f64>> = BTreeMap::new();
    let mut rows: BTreeMap<i64, f64> = BTreeMap::new();
    let mut cols: BTreeMap<i64, f64> = BTreeMap::new();
    for (&a, &b) in f.iter().zip(y) {
        *table.entry(a).or_default().entry(b).or_insert(0.0) += 1.0;
        *rows.entry(a).or_insert(0.0) += 1.0;
        *cols.entry(b).or_insert(0.0) += 1.0;
    }
    let n = f.len() as f64;
    let mut chi = 0.0;
    for (a, ra) in &rows {
        for (b, cb) in &cols {
            let e = ra * cb / n;
            let o = table[a].get(b).copied().unwrap_or(0.0);
            chi += (o - e).powi(2) / e;
        }
    }
    chi
}

pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let key = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(key, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}
