//! Engagement-history counts, ratio features, and the final merge.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::features::graph::safe_ratio;
use crate::features::registry::{self, ELEMENT_NAMES, KEY_COLUMNS, SIGNS};
use crate::features::time::HISTORY_ONLY;
use crate::schema::*;
use crate::synthgen::DAY;
use crate::table::{Column, ColumnTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HistoryMode {
    TrainFirst3Days,
    WholeTrainForHoldout,
}

#[derive(Debug, Clone)]
pub struct HistorySplit {
    pub history: ColumnTable,
    pub remainder: ColumnTable,
    pub mode: HistoryMode,
}

/// Start of the fourth UTC day of a table: rows before it are history.
pub fn train_boundary(train: &ColumnTable) -> Result<i64> {
    let ts = train.ints(TWEET_TIMESTAMP)?;
    let (Some(&min), Some(&max)) = (ts.iter().min(), ts.iter().max()) else {
        return Err(Error::input("empty train table"));
    };
    let span = max.div_euclid(DAY) - min.div_euclid(DAY) + 1;
    if span < 7 {
        return Err(Error::input(format!(
            "train table spans {span} days, at least 7 are required"
        )));
    }
    Ok(min.div_euclid(DAY) * DAY + 3 * DAY)
}

pub fn designate_history(train: &ColumnTable, target: &ColumnTable, source: Source) -> Result<HistorySplit> {
    if source == Source::Train {
        let b = train_boundary(train)?;
        let ts = train.ints(TWEET_TIMESTAMP)?;
        let hist: Vec<bool> = ts.iter().map(|&t| t < b).collect();
        let rest: Vec<bool> = hist.iter().map(|h| !h).collect();
        Ok(HistorySplit {
            history: train.filter(&hist),
            remainder: train.filter(&rest),
            mode: HistoryMode::TrainFirst3Days,
        })
    } else {
        Ok(HistorySplit {
            history: train.clone(),
            remainder: target.clone(),
            mode: HistoryMode::WholeTrainForHoldout,
        })
    }
}

fn labels(t: &ColumnTable) -> Result<Vec<&[i64]>> {
    Target::ALL.iter().map(|x| t.ints(x.label())).collect()
}

/// [rows, positives per target] aggregated by key.
type Agg = [i64; 6];

fn aggregate<'a>(keys: impl Iterator<Item = &'a str>, y: &[&[i64]]) -> HashMap<&'a str, Agg> {
    let mut m: HashMap<&str, Agg> = HashMap::new();
    for (i, k) in keys.enumerate() {
        let e = m.entry(k).or_insert([0; 6]);
        e[0] += 1;
        for t in 0..5 {
            e[t + 1] += y[t][i];
        }
    }
    m
}

fn push_agg_columns(
    out: &mut ColumnTable,
    per_row: &[Agg],
    name: impl Fn(&str, &str) -> String,
) -> Result<()> {
    for (si, sign) in SIGNS.iter().enumerate() {
        for (t, target) in Target::ALL.iter().enumerate() {
            let col = per_row
                .iter()
                .map(|a| if si == 0 { a[t + 1] } else { a[0] - a[t + 1] })
                .collect();
            out.push(name(sign, target.as_str()), Column::Int(col))?;
        }
    }
    Ok(())
}

/// Adds the 20 per-user positive/negative counts and the two totals.
pub fn user_engagement_counts(history: &ColumnTable, target: &ColumnTable) -> Result<ColumnTable> {
    let y = labels(history)?;
    let mut out = target.clone();
    for (col, prefix) in [(ENGAGING_ID, "engaging"), (ENGAGED_ID, "engaged_with")] {
        let agg = aggregate(history.strs(col)?.iter().map(String::as_str), &y);
        let per_row: Vec<Agg> = target
            .strs(col)?
            .iter()
            .map(|k| agg.get(k.as_str()).copied().unwrap_or([0; 6]))
            .collect();
        push_agg_columns(&mut out, &per_row, |s, t| format!("{prefix}_count_{s}_tweet_{t}"))?;
        out.push(
            format!("{prefix}_count_all_tweets"),
            Column::Int(per_row.iter().map(|a| a[0]).collect()),
        )?;
    }
    Ok(out)
}

const MAX_SUBSET: usize = 12;

/// Counts of history rows whose element set intersects a query set, by
/// inclusion-exclusion over superset counts N(T) = #rows with set ⊇ T.
struct IntersectIndex {
    superset: HashMap<Vec<u32>, Agg>,
    /// History rows too large to enumerate; scanned directly.
    overflow: Vec<(Vec<u32>, Agg)>,
}

impl IntersectIndex {
    fn build(sets: &[Vec<u32>], rows: &[usize], y: &[&[i64]]) -> Self {
        let mut superset: HashMap<Vec<u32>, Agg> = HashMap::new();
        let mut overflow = Vec::new();
        for &r in rows {
            let s = &sets[r];
            if s.is_empty() {
                continue;
            }
            let mut a = [1, 0, 0, 0, 0, 0];
            for t in 0..5 {
                a[t + 1] = y[t][r];
            }
            if s.len() > MAX_SUBSET {
                overflow.push((s.clone(), a));
                continue;
            }
            for mask in 1u32..(1 << s.len()) {
                let sub: Vec<u32> = (0..s.len()).filter(|b| mask >> b & 1 == 1).map(|b| s[b]).collect();
                let e = superset.entry(sub).or_insert([0; 6]);
                for k in 0..6 {
                    e[k] += a[k];
                }
            }
        }
        IntersectIndex { superset, overflow }
    }

    fn query(&self, q: &[u32], fallback: &dyn Fn() -> Agg) -> Agg {
        let mut total = [0i64; 6];
        if q.is_empty() {
            return total;
        }
        if q.len() > MAX_SUBSET {
            return fallback();
        }
        for mask in 1u32..(1 << q.len()) {
            let sub: Vec<u32> = (0..q.len()).filter(|b| mask >> b & 1 == 1).map(|b| q[b]).collect();
            if let Some(a) = self.superset.get(&sub) {
                let sign = if sub.len() % 2 == 1 { 1 } else { -1 };
                for k in 0..6 {
                    total[k] += sign * a[k];
                }
            }
        }
        for (s, a) in &self.overflow {
            if intersects(s, q) {
                for k in 0..6 {
                    total[k] += a[k];
                }
            }
        }
        total
    }
}

fn intersects(a: &[u32], b: &[u32]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

/// Adds, for each element column, the all-viewer counts
/// `{elem}_count_{sign}_tweets_{t}`, the same-viewer counts
/// `{elem}_user_proxy_count_{sign}_tweets_{t}` and `{elem}_count_all_tweets`.
pub fn element_proxy_counts(history: &ColumnTable, target: &ColumnTable) -> Result<ColumnTable> {
    let y = labels(history)?;
    let hv = history.strs(ENGAGING_ID)?;
    let tv = target.strs(ENGAGING_ID)?;
    let mut out = target.clone();
    for (ei, col) in ELEMENTS.iter().enumerate() {
        let short = ELEMENT_NAMES[ei];
        let hs = history.sets(col)?;
        let mut dict: HashMap<&str, u32> = HashMap::new();
        for s in hs {
            for x in s {
                let next = dict.len() as u32;
                dict.entry(x.as_str()).or_insert(next);
            }
        }
        let encode = |sets: &[Vec<String>]| -> Vec<Vec<u32>> {
            sets.iter()
                .map(|s| {
                    let mut v: Vec<u32> = s.iter().filter_map(|x| dict.get(x.as_str()).copied()).collect();
                    v.sort_unstable();
                    v
                })
                .collect()
        };
        let hsets = encode(hs);
        let tsets = encode(target.sets(col)?);
        let all_rows: Vec<usize> = (0..history.row_count()).collect();
        let global = IntersectIndex::build(&hsets, &all_rows, &y);
        let mut by_viewer: HashMap<&str, Vec<usize>> = HashMap::new();
        for (i, v) in hv.iter().enumerate() {
            by_viewer.entry(v.as_str()).or_default().push(i);
        }
        let brute = |rows: &[usize], q: &[u32]| -> Agg {
            let mut a = [0i64; 6];
            for &r in rows {
                if intersects(&hsets[r], q) {
                    a[0] += 1;
                    for t in 0..5 {
                        a[t + 1] += y[t][r];
                    }
                }
            }
            a
        };
        let g_rows: Vec<Agg> = tsets
            .iter()
            .map(|q| global.query(q, &|| brute(&all_rows, q)))
            .collect();
        // per-viewer indexes are built only for viewers present in the target
        let mut user_idx: HashMap<&str, IntersectIndex> = HashMap::new();
        let mut u_rows: Vec<Agg> = Vec::with_capacity(target.row_count());
        let no_rows: Vec<usize> = Vec::new();
        for (i, q) in tsets.iter().enumerate() {
            let v = tv[i].as_str();
            let rows = by_viewer.get(v).unwrap_or(&no_rows);
            let idx = user_idx
                .entry(v)
                .or_insert_with(|| IntersectIndex::build(&hsets, rows, &y));
            u_rows.push(idx.query(q, &|| brute(rows, q)));
        }
        push_agg_columns(&mut out, &g_rows, |s, t| format!("{short}_count_{s}_tweets_{t}"))?;
        push_agg_columns(&mut out, &u_rows, |s, t| format!("{short}_user_proxy_count_{s}_tweets_{t}"))?;
        out.push(
            format!("{short}_count_all_tweets"),
            Column::Int(g_rows.iter().map(|a| a[0]).collect()),
        )?;
    }
    Ok(out)
}

/// Adds this_language_seen_count and this_language_authored_count.
pub fn language_history(history: &ColumnTable, target: &ColumnTable) -> Result<ColumnTable> {
    let hl = history.strs(LANGUAGE)?;
    let tl = target.strs(LANGUAGE)?;
    let mut out = target.clone();
    for (col, name) in [
        (ENGAGING_ID, "this_language_seen_count"),
        (ENGAGED_ID, "this_language_authored_count"),
    ] {
        let mut m: HashMap<(&str, &str), i64> = HashMap::new();
        for (u, l) in history.strs(col)?.iter().zip(hl) {
            *m.entry((u.as_str(), l.as_str())).or_insert(0) += 1;
        }
        let c = target
            .strs(col)?
            .iter()
            .zip(tl)
            .map(|(u, l)| m.get(&(u.as_str(), l.as_str())).copied().unwrap_or(0))
            .collect();
        out.push(name, Column::Int(c))?;
    }
    Ok(out)
}

/// Adds the 80 engagement ratios and the two language ratios.
pub fn ratio_features(table: &ColumnTable) -> Result<ColumnTable> {
    let mut out = table.clone();
    let ratio = |num: &str, den: &str| -> Result<Column> {
        let a = table.ints(num)?;
        let b = table.ints(den)?;
        Ok(Column::Float(
            a.iter().zip(b).map(|(&x, &y)| safe_ratio(x as f64, y as f64)).collect(),
        ))
    };
    for prefix in ["engaging", "engaged_with"] {
        for s in SIGNS {
            for t in Target::ALL {
                out.push(
                    format!("ratio_all_to_{prefix}_count_{s}_tweets_{t}"),
                    ratio(
                        &format!("{prefix}_count_{s}_tweet_{t}"),
                        &format!("{prefix}_count_all_tweets"),
                    )?,
                )?;
            }
        }
    }
    for e in ELEMENT_NAMES {
        for fam in ["count", "user_proxy_count"] {
            for s in SIGNS {
                for t in Target::ALL {
                    out.push(
                        format!("ratio_all_to_{e}_{fam}_{s}_tweets_{t}"),
                        ratio(&format!("{e}_{fam}_{s}_tweets_{t}"), &format!("{e}_count_all_tweets"))?,
                    )?;
                }
            }
        }
    }
    out.push(
        "ratio_seen_tweets_in_this_langauge_to_total_seen_tweets",
        ratio("this_language_seen_count", "engaging_count_all_tweets")?,
    )?;
    out.push(
        "ratio_authored_tweets_in_this_langauge_to_total_authored_tweets",
        ratio("this_language_authored_count", "engaged_with_count_all_tweets")?,
    )?;
    Ok(out)
}

/// All history features for `target` given its history.
pub fn history_features(history: &ColumnTable, target: &ColumnTable) -> Result<ColumnTable> {
    let t = user_engagement_counts(history, target)?;
    let t = element_proxy_counts(history, &t)?;
    let t = language_history(history, &t)?;
    ratio_features(&t)
}

pub fn row_keys(t: &ColumnTable) -> Result<Vec<String>> {
    let a = t.strs(KEY_COLUMNS[0])?;
    let b = t.strs(KEY_COLUMNS[1])?;
    Ok(a.iter().zip(b).map(|(x, y)| format!("{x}\u{1}{y}")).collect())
}

/// Columns of a final table: keys, labels, the relevant and oracle features.
pub fn final_columns() -> Vec<String> {
    let mut v: Vec<String> = KEY_COLUMNS.iter().map(|s| s.to_string()).collect();
    v.extend(registry::label_columns());
    v.extend(registry::relevant_features());
    v.extend(registry::oracle_features());
    v
}

/// Joins stage outputs on the row key. The row set is that of `base`
/// (the history remainder); rows flagged `history_only` are ignored.
pub fn merge_final(base: &ColumnTable, parts: &[&ColumnTable]) -> Result<ColumnTable> {
    let base_keys = row_keys(base)?;
    if base_keys.iter().collect::<HashSet<_>>().len() != base_keys.len() {
        return Err(Error::InvalidTable("duplicate row keys".into()));
    }
    let mut indexes: Vec<HashMap<String, usize>> = Vec::new();
    for p in parts {
        let keys = row_keys(p)?;
        let hist = if p.has(HISTORY_ONLY) {
            Some(p.bools(HISTORY_ONLY)?)
        } else {
            None
        };
        let mut m = HashMap::new();
        for (i, k) in keys.into_iter().enumerate() {
            if hist.is_some_and(|h| h[i]) {
                continue;
            }
            if m.insert(k, i).is_some() {
                return Err(Error::InvalidTable("duplicate row keys".into()));
            }
        }
        indexes.push(m);
    }
    let mut out = ColumnTable::with_rows(base.row_count());
    for name in final_columns() {
        let mut sources = Vec::new();
        if base.has(&name) {
            sources.push(None);
        }
        for (k, p) in parts.iter().enumerate() {
            if p.has(&name) && !KEY_COLUMNS.contains(&name.as_str()) {
                sources.push(Some(k));
            }
        }
        let col = match sources.as_slice() {
            [None] => base.column(&name)?.clone(),
            [Some(k)] => {
                let idx: Vec<usize> = base_keys
                    .iter()
                    .map(|key| {
                        indexes[*k].get(key).copied().ok_or_else(|| {
                            Error::InvalidTable(format!("row key missing from part {k}"))
                        })
                    })
                    .collect::<Result<_>>()?;
                parts[*k].column(&name)?.take(&idx)
            }
            [] => return Err(Error::ColumnNotFound(name)),
            _ => {
                return Err(Error::InvalidTable(format!(
                    "column {name} provided by more than one input"
                )))
            }
        };
        out.push(name, col)?;
    }
    Ok(out)
}
