//! Sliding-window trend features and their whole-corpus counterparts.
//!
//! Windows are half-open `[t - w, t)`: rows sharing a timestamp never count
//! toward each other.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::features::registry::WINDOWS;
use crate::schema::{element_short, ELEMENTS, ENGAGED_ID, ENGAGING_ID, TWEET_TIMESTAMP};
use crate::table::{Column, ColumnTable};

pub const HISTORY_ONLY: &str = "history_only";
pub const HISTORY_SPAN: i64 = 172_800;

type Counts = [i64; 6];

/// Interns strings to dense ids in first-seen order.
fn intern<'a>(values: impl Iterator<Item = &'a str>, map: &mut HashMap<&'a str, u32>) -> Vec<u32> {
    values
        .map(|s| {
            let next = map.len() as u32;
            *map.entry(s).or_insert(next)
        })
        .collect()
}

/// For each event, the number of events with the same key and a timestamp in
/// each window before it. Runs one sort plus a two-pointer pass per window.
pub fn sweep(keys: &[u64], ts: &[i64]) -> Vec<Counts> {
    let n = keys.len();
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_unstable_by_key(|&i| (keys[i as usize], ts[i as usize]));
    let mut out = vec![[0i64; 6]; n];
    let mut g = 0;
    while g < n {
        let key = keys[order[g] as usize];
        let mut end = g;
        while end < n && keys[order[end] as usize] == key {
            end += 1;
        }
        let t_at = |k: usize| ts[order[k] as usize];
        let mut lo = [g; 6];
        let mut start = g;
        for i in g..end {
            let t = t_at(i);
            if i > g && t != t_at(i - 1) {
                start = i;
            }
            let row = &mut out[order[i] as usize];
            for (wi, &(w, _)) in WINDOWS.iter().enumerate() {
                while t_at(lo[wi]) < t - w {
                    lo[wi] += 1;
                }
                row[wi] = (start - lo[wi]) as i64;
            }
        }
        g = end;
    }
    out
}

fn push_counts(table: &mut ColumnTable, prefix: &str, counts: Vec<Counts>) -> Result<()> {
    for (wi, &(_, suffix)) in WINDOWS.iter().enumerate() {
        table.push(
            format!("{prefix}_{suffix}"),
            Column::Int(counts.iter().map(|c| c[wi]).collect()),
        )?;
    }
    Ok(())
}

/// Adds engaging_saw_tweets_count_{w} and engageds_tweets_views_count_{w}.
pub fn view_counts(table: &ColumnTable) -> Result<ColumnTable> {
    let ts = table.ints(TWEET_TIMESTAMP)?;
    let mut out = table.clone();
    for (col, prefix) in [
        (ENGAGING_ID, "engaging_saw_tweets_count"),
        (ENGAGED_ID, "engageds_tweets_views_count"),
    ] {
        let mut map = HashMap::new();
        let keys: Vec<u64> = intern(table.strs(col)?.iter().map(String::as_str), &mut map)
            .into_iter()
            .map(u64::from)
            .collect();
        push_counts(&mut out, prefix, sweep(&keys, ts))?;
    }
    Ok(out)
}

/// Adds {elem}_frequency_{w} and user_{elem}_frequency_{w} for one element column.
pub fn element_frequency(table: &ColumnTable, element: &str) -> Result<ColumnTable> {
    let ts = table.ints(TWEET_TIMESTAMP)?;
    let sets = table.sets(element)?;
    let mut vmap = HashMap::new();
    let viewers = intern(table.strs(ENGAGING_ID)?.iter().map(String::as_str), &mut vmap);
    let mut emap: HashMap<&str, u32> = HashMap::new();
    let mut ev_row = Vec::new();
    let mut ev_elem = Vec::new();
    for (i, s) in sets.iter().enumerate() {
        for e in s {
            let next = emap.len() as u32;
            ev_elem.push(*emap.entry(e.as_str()).or_insert(next));
            ev_row.push(i);
        }
    }
    let ev_ts: Vec<i64> = ev_row.iter().map(|&r| ts[r]).collect();
    let global_keys: Vec<u64> = ev_elem.iter().map(|&e| u64::from(e)).collect();
    let user_keys: Vec<u64> = ev_row
        .iter()
        .zip(&ev_elem)
        .map(|(&r, &e)| (u64::from(viewers[r]) << 32) | u64::from(e))
        .collect();
    let n = table.row_count();
    let accumulate = |counts: Vec<Counts>| -> Vec<Counts> {
        let mut acc = vec![[0i64; 6]; n];
        for (k, c) in counts.into_iter().enumerate() {
            let row = &mut acc[ev_row[k]];
            for w in 0..6 {
                row[w] += c[w];
            }
        }
        acc
    };
    let short = element_short(element);
    let mut out = table.clone();
    push_counts(&mut out, &format!("{short}_frequency"), accumulate(sweep(&global_keys, &ev_ts)))?;
    push_counts(&mut out, &format!("user_{short}_frequency"), accumulate(sweep(&user_keys, &ev_ts)))?;
    Ok(out)
}

/// All 48 windowed columns.
pub fn window_features(table: &ColumnTable) -> Result<ColumnTable> {
    let mut t = view_counts(table)?;
    for e in ELEMENTS {
        t = element_frequency(&t, e)?;
    }
    Ok(t)
}

/// The 8 whole-corpus variants; only the row itself is excluded.
pub fn oracle_frequencies(table: &ColumnTable) -> Result<ColumnTable> {
    let n = table.row_count();
    let mut out = table.clone();
    let viewers = table.strs(ENGAGING_ID)?;
    for e in ELEMENTS {
        let sets = table.sets(e)?;
        let mut global: HashMap<&str, i64> = HashMap::new();
        let mut user: HashMap<(&str, &str), i64> = HashMap::new();
        for (i, s) in sets.iter().enumerate() {
            for x in s {
                *global.entry(x).or_insert(0) += 1;
                *user.entry((viewers[i].as_str(), x.as_str())).or_insert(0) += 1;
            }
        }
        let g: Vec<i64> = (0..n)
            .map(|i| sets[i].iter().map(|x| global[x.as_str()] - 1).sum())
            .collect();
        let u: Vec<i64> = (0..n)
            .map(|i| {
                sets[i]
                    .iter()
                    .map(|x| user[&(viewers[i].as_str(), x.as_str())] - 1)
                    .sum()
            })
            .collect();
        let short = element_short(e);
        out.push(format!("{short}_frequency"), Column::Int(g))?;
        out.push(format!("user_{short}_frequency"), Column::Int(u))?;
    }
    for (col, name) in [
        (ENGAGING_ID, "engaging_saw_tweets_count"),
        (ENGAGED_ID, "engageds_tweets_views_count"),
    ] {
        let ids = table.strs(col)?;
        let mut cnt: HashMap<&str, i64> = HashMap::new();
        for id in ids {
            *cnt.entry(id).or_insert(0) += 1;
        }
        out.push(name, Column::Int(ids.iter().map(|id| cnt[id.as_str()] - 1).collect()))?;
    }
    Ok(out)
}

/// Prepends the last 48 hours of `train` to `target`, flagged by a
/// `history_only` column. Returns the augmented table and the number of
/// prepended rows.
pub fn prepend_history_48h(train: &ColumnTable, target: &ColumnTable) -> Result<(ColumnTable, usize)> {
    let tts = train.ints(TWEET_TIMESTAMP)?;
    let keep: Vec<bool> = match tts.iter().max() {
        Some(&max) => tts.iter().map(|&t| t >= max - HISTORY_SPAN).collect(),
        None => Vec::new(),
    };
    let tail = train.filter(&keep);
    let tail = if tail.row_count() == 0 {
        ColumnTable::concat(&[&target.take(&[])])?
    } else {
        tail.select(&target.names().iter().map(String::as_str).collect::<Vec<_>>())?
    };
    if let (Some(&hmax), Some(&tmin)) = (
        tail.ints(TWEET_TIMESTAMP)?.iter().max(),
        target.ints(TWEET_TIMESTAMP)?.iter().min(),
    ) {
        if hmax >= tmin {
            return Err(Error::input("history rows overlap the target time range"));
        }
    }
    let k = tail.row_count();
    let mut flags = vec![true; k];
    flags.extend(std::iter::repeat(false).take(target.row_count()));
    let joined = ColumnTable::concat(&[&tail, target])?;
    Ok((joined.with(HISTORY_ONLY, Column::Bool(flags))?, k))
}
