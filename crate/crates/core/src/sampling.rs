//! Exact-size subsampling by rows, by key, and by the intersection of two keys.

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream;
use crate::schema::{Technique, ENGAGED_ID, ENGAGING_ID, PERCENTS, TWEET_ID};
use crate::table::ColumnTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub technique: Technique,
    pub percent: u32,
    pub seed: u64,
}

impl SamplePlan {
    pub fn new(technique: Technique, percent: u32, seed: u64) -> Result<Self> {
        if technique == Technique::Full || !PERCENTS.contains(&percent) {
            return Err(Error::input(format!(
                "invalid sample plan {technique} at {percent}%"
            )));
        }
        Ok(SamplePlan {
            technique,
            percent,
            seed,
        })
    }

    pub fn apply(&self, table: &ColumnTable) -> Result<ColumnTable> {
        let p = f64::from(self.percent);
        match self.technique {
            Technique::Full => Ok(table.clone()),
            Technique::Random => sample_random(table, p, self.seed),
            Technique::Eu => sample_by_key(table, ENGAGING_ID, p, self.seed),
            Technique::Ewu => sample_by_key(table, ENGAGED_ID, p, self.seed),
            Technique::Tweet => sample_by_key(table, TWEET_ID, p, self.seed),
            Technique::Inter => sample_inter(table, p, self.seed),
        }
    }
}

/// ⌊n·fraction⌋, exact for integral percentages.
pub fn floor_count(n: usize, percent: f64) -> usize {
    if percent.fract() == 0.0 {
        ((n as u128 * percent as u128) / 100) as usize
    } else {
        (n as f64 * percent / 100.0).floor() as usize
    }
}

fn check_percent(percent: f64) -> Result<()> {
    if !(percent > 0.0 && percent <= 100.0) {
        return Err(Error::input(format!("percent {percent} outside (0, 100]")));
    }
    Ok(())
}

pub fn sample_random(table: &ColumnTable, percent: f64, seed: u64) -> Result<ColumnTable> {
    check_percent(percent)?;
    let n = table.row_count();
    if n == 0 {
        return Err(Error::input("cannot sample an empty table"));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut stream(seed, "sample_random"));
    let mut keep = idx[..floor_count(n, percent)].to_vec();
    keep.sort_unstable();
    Ok(table.take(&keep))
}

/// Distinct ids in ascending order, shuffled under the seed.
fn shuffled_ids<'a>(ids: &'a [String], seed: u64, name: &str) -> Vec<&'a str> {
    let mut u: Vec<&str> = ids.iter().map(String::as_str).collect::<HashSet<_>>().into_iter().collect();
    u.sort_unstable();
    u.shuffle(&mut stream(seed, name));
    u
}

/// The first ⌊|ids|·percent/100⌋ ids of the seeded shuffle.
pub fn sampled_keys(table: &ColumnTable, key: &str, percent: f64, seed: u64) -> Result<HashSet<String>> {
    check_percent(percent)?;
    let ids = table.strs(key)?;
    let order = shuffled_ids(ids, seed, &format!("sample_by_key/{key}"));
    if order.is_empty() {
        return Err(Error::input(format!("no ids in column {key}")));
    }
    let k = floor_count(order.len(), percent);
    Ok(order[..k].iter().map(|s| s.to_string()).collect())
}

pub fn sample_by_key(table: &ColumnTable, key: &str, percent: f64, seed: u64) -> Result<ColumnTable> {
    let keys = sampled_keys(table, key, percent, seed)?;
    let ids = table.strs(key)?;
    let keep: Vec<bool> = ids.iter().map(|id| keys.contains(id)).collect();
    Ok(table.filter(&keep))
}

/// Number of ids drawn per key by [`sample_inter`].
pub fn inter_id_count(n_ids: usize, percent: f64) -> usize {
    if percent >= 100.0 {
        n_ids
    } else {
        ((percent / 100.0).sqrt() * n_ids as f64).floor() as usize
    }
}

pub fn sample_inter(table: &ColumnTable, percent: f64, seed: u64) -> Result<ColumnTable> {
    check_percent(percent)?;
    let mut sets = Vec::new();
    for key in [ENGAGED_ID, ENGAGING_ID] {
        let ids = table.strs(key)?;
        let order = shuffled_ids(ids, seed, &format!("sample_inter/{key}"));
        if order.is_empty() {
            return Err(Error::input(format!("no ids in column {key}")));
        }
        let k = inter_id_count(order.len(), percent);
        sets.push(order[..k].iter().map(|s| s.to_string()).collect::<HashSet<_>>());
    }
    let a = table.strs(ENGAGED_ID)?;
    let v = table.strs(ENGAGING_ID)?;
    let keep: Vec<bool> = (0..table.row_count())
        .map(|i| sets[0].contains(&a[i]) && sets[1].contains(&v[i]))
        .collect();
    Ok(table.filter(&keep))
}

/// Unique-id count divided by row count for viewers, authors and tweets.
pub fn ratio_report(table: &ColumnTable) -> Result<BTreeMap<&'static str, f64>> {
    let n = table.row_count();
    if n == 0 {
        return Err(Error::input("ratio report of an empty table"));
    }
    let uniq = |k: &str| -> Result<f64> {
        Ok(table.strs(k)?.iter().collect::<HashSet<_>>().len() as f64 / n as f64)
    };
    let mut m = BTreeMap::new();
    m.insert("viewers_per_row", uniq(ENGAGING_ID)?);
    m.insert("authors_per_row", uniq(ENGAGED_ID)?);
    m.insert("tweets_per_row", uniq(TWEET_ID)?);
    Ok(m)
}
