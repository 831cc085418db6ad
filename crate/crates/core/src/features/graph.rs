//! Follow and engagement graphs with first- and second-degree lookups.

use std::collections::{BTreeSet, HashMap};

use crate::error::Result;
use crate::schema::{Target, ENGAGED_FOLLOWERS, ENGAGED_FOLLOWING, ENGAGED_ID, ENGAGING_FOLLOWERS, ENGAGING_FOLLOWING, ENGAGING_ID, FOLLOWS};
use crate::table::{Column, ColumnTable};

/// Directed edges with a non-negative count per edge.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DirectedEdgeSet {
    out: HashMap<String, HashMap<String, u64>>,
    inc: HashMap<String, HashMap<String, u64>>,
}

static EMPTY: std::sync::OnceLock<HashMap<String, u64>> = std::sync::OnceLock::new();

fn empty() -> &'static HashMap<String, u64> {
    EMPTY.get_or_init(HashMap::new)
}

impl DirectedEdgeSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts an edge with count 1 if absent.
    pub fn insert(&mut self, src: &str, dst: &str) {
        if !self.contains(src, dst) {
            self.add(src, dst, 1);
        }
    }

    pub fn add(&mut self, src: &str, dst: &str, count: u64) {
        *self
            .out
            .entry(src.to_string())
            .or_default()
            .entry(dst.to_string())
            .or_insert(0) += count;
        *self
            .inc
            .entry(dst.to_string())
            .or_default()
            .entry(src.to_string())
            .or_insert(0) += count;
    }

    pub fn contains(&self, src: &str, dst: &str) -> bool {
        self.count(src, dst) > 0
    }

    pub fn count(&self, src: &str, dst: &str) -> u64 {
        self.out
            .get(src)
            .and_then(|m| m.get(dst))
            .copied()
            .unwrap_or(0)
    }

    pub fn successors(&self, src: &str) -> &HashMap<String, u64> {
        self.out.get(src).unwrap_or_else(|| empty())
    }

    pub fn predecessors(&self, dst: &str) -> &HashMap<String, u64> {
        self.inc.get(dst).unwrap_or_else(|| empty())
    }

    pub fn len(&self) -> usize {
        self.out.values().map(HashMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All edges in ascending order.
    pub fn edges(&self) -> BTreeSet<(String, String)> {
        self.out
            .iter()
            .flat_map(|(s, m)| m.keys().map(move |d| (s.clone(), d.clone())))
            .collect()
    }

    /// Number of distinct intermediaries b with a→b and b→c.
    pub fn two_hop_count(&self, a: &str, c: &str) -> u64 {
        let succ = self.successors(a);
        let pred = self.predecessors(c);
        let (small, large) = if succ.len() <= pred.len() {
            (succ, pred)
        } else {
            (pred, succ)
        };
        small.keys().filter(|b| large.contains_key(*b)).count() as u64
    }
}

/// Follow relations: viewer→author always, author→viewer when any row asserts it.
pub fn build_follow_graph(tables: &[&ColumnTable]) -> Result<DirectedEdgeSet> {
    let mut g = DirectedEdgeSet::new();
    for t in tables {
        let a = t.strs(ENGAGED_ID)?;
        let v = t.strs(ENGAGING_ID)?;
        let f = t.bools(FOLLOWS)?;
        for i in 0..t.row_count() {
            g.insert(&v[i], &a[i]);
            if f[i] {
                g.insert(&a[i], &v[i]);
            }
        }
    }
    Ok(g)
}

/// Relational self-join: (a,c) iff some b has (a,b) and (b,c). Counts are the
/// number of distinct intermediaries.
pub fn second_degree(edges: &DirectedEdgeSet) -> DirectedEdgeSet {
    let mut out = DirectedEdgeSet::new();
    let mut srcs: Vec<&String> = edges.out.keys().collect();
    srcs.sort();
    for a in srcs {
        let mut reach: HashMap<&str, u64> = HashMap::new();
        for b in edges.successors(a).keys() {
            for c in edges.successors(b).keys() {
                *reach.entry(c.as_str()).or_insert(0) += 1;
            }
        }
        for (c, k) in reach {
            out.add(a, c, k);
        }
    }
    out
}

/// Edge viewer→author counted once per history row with a positive label.
pub fn build_engagement_graph(history: &ColumnTable, target: Target) -> Result<DirectedEdgeSet> {
    let a = history.strs(ENGAGED_ID)?;
    let v = history.strs(ENGAGING_ID)?;
    let y = history.ints(target.label())?;
    let mut g = DirectedEdgeSet::new();
    for i in 0..history.row_count() {
        if y[i] == 1 {
            g.add(&v[i], &a[i], 1);
        }
    }
    Ok(g)
}

/// The five engagement graphs, ordered as [`Target::ALL`].
pub fn build_engagement_graphs(history: &ColumnTable) -> Result<Vec<DirectedEdgeSet>> {
    Target::ALL
        .iter()
        .map(|&t| build_engagement_graph(history, t))
        .collect()
}

/// Adds the 42 graph columns. With `exclude_own`, each row's own label is
/// removed from the first-degree viewer→author count (the row is part of the
/// history the graph was built from).
pub fn annotate_graph_features(
    table: &ColumnTable,
    follow: &DirectedEdgeSet,
    engagement: &[DirectedEdgeSet],
    exclude_own: bool,
) -> Result<ColumnTable> {
    assert_eq!(engagement.len(), Target::ALL.len());
    let n = table.row_count();
    let a = table.strs(ENGAGED_ID)?;
    let v = table.strs(ENGAGING_ID)?;
    let mut out = table.clone();
    let fol_av: Vec<i64> = (0..n)
        .map(|i| (follow.two_hop_count(&a[i], &v[i]) > 0) as i64)
        .collect();
    let fol_va: Vec<i64> = (0..n)
        .map(|i| (follow.two_hop_count(&v[i], &a[i]) > 0) as i64)
        .collect();
    out.push("graph_engagee_follows_engager_2d", Column::Int(fol_av))?;
    out.push("graph_engager_follows_engagee_2d", Column::Int(fol_va))?;

    for d in ["1d", "2d"] {
        for (side, other) in [("engaging", "engaged"), ("engaged", "engaging")] {
            let mut counts: Vec<Vec<i64>> = Vec::new();
            for (k, t) in Target::ALL.iter().enumerate() {
                let g = &engagement[k];
                let own = if exclude_own {
                    Some(table.ints(t.label())?)
                } else {
                    None
                };
                let col: Vec<i64> = (0..n)
                    .map(|i| {
                        let (src, dst) = if side == "engaging" {
                            (&v[i], &a[i])
                        } else {
                            (&a[i], &v[i])
                        };
                        if d == "1d" {
                            let c = g.count(src, dst) as i64;
                            match own {
                                Some(y) if side == "engaging" => (c - y[i]).max(0),
                                _ => c,
                            }
                        } else {
                            g.two_hop_count(src, dst) as i64
                        }
                    })
                    .collect();
                counts.push(col);
            }
            for (k, t) in Target::ALL.iter().enumerate() {
                let flag = counts[k].iter().map(|&c| (c >= 1) as i64).collect();
                out.push(format!("graph_{side}_flag_{t}_from_{other}_{d}"), Column::Int(flag))?;
            }
            for (k, t) in Target::ALL.iter().enumerate() {
                out.push(
                    format!("graph_{side}_count_{t}_from_{other}_{d}"),
                    Column::Int(std::mem::take(&mut counts[k])),
                )?;
            }
        }
    }
    Ok(out)
}

/// Quotient with the zero-denominator convention.
pub fn safe_ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

pub fn follower_ratios(table: &ColumnTable) -> Result<ColumnTable> {
    let r = |a: &str, b: &str| -> Result<Column> {
        let x = table.ints(a)?;
        let y = table.ints(b)?;
        Ok(Column::Float(
            x.iter().zip(y).map(|(&p, &q)| safe_ratio(p as f64, q as f64)).collect(),
        ))
    };
    table
        .clone()
        .with(
            "ratio_engaged_to_engaging_follower_counts",
            r(ENGAGED_FOLLOWERS, ENGAGING_FOLLOWERS)?,
        )?
        .with(
            "ratio_engaged_to_engaging_following_counts",
            r(ENGAGED_FOLLOWING, ENGAGING_FOLLOWING)?,
        )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(edges: &[(&str, &str)]) -> DirectedEdgeSet {
        let mut s = DirectedEdgeSet::new();
        for (a, b) in edges {
            s.insert(a, b);
        }
        s
    }

    #[test]
    fn second_degree_basics() {
        let s = second_degree(&g(&[("a", "b"), ("b", "c")]));
        assert!(s.contains("a", "c"));
        let s = second_degree(&g(&[("a", "b"), ("b", "a")]));
        assert!(s.contains("a", "a") && s.contains("b", "b"));
        assert!(second_degree(&DirectedEdgeSet::new()).is_empty());
    }

    #[test]
    fn positive_case_wins() {
        let t = ColumnTable::from_columns(vec![
            (ENGAGED_ID, Column::Str(vec!["a".into(), "a".into()])),
            (ENGAGING_ID, Column::Str(vec!["v".into(), "v".into()])),
            (FOLLOWS, Column::Bool(vec![true, false])),
        ])
        .unwrap();
        let f = build_follow_graph(&[&t]).unwrap();
        assert!(f.contains("a", "v") && f.contains("v", "a"));
        assert_eq!(f.len(), 2);
    }

    #[test]
    fn ratios() {
        assert_eq!(safe_ratio(100.0, 50.0), 2.0);
        assert_eq!(safe_ratio(7.0, 0.0), 0.0);
        assert_eq!(safe_ratio(3.0, 3.0), 1.0);
    }
}
