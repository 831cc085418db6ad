//! Categorisation (string indexing, quantile binning), χ² scoring, top-k
//! selection and feature vectors.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::registry::{label_columns, oracle_features, relevant_features, KEY_COLUMNS};
use crate::schema::Target;
use crate::table::{Column, ColumnTable};

pub const NBINS: usize = 100;
pub const TOP_NS: [&str; 5] = ["top_5", "top_10", "top_25", "top_50", "all"];
pub const NOTES: [&str; 2] = ["scaled", "oracle_scaled"];

/// Codes by descending frequency, ties broken lexicographically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StringIndex {
    pub labels: Vec<String>,
}

impl StringIndex {
    pub fn fit(values: &[String]) -> Self {
        let mut freq: HashMap<&str, usize> = HashMap::new();
        for v in values {
            *freq.entry(v).or_insert(0) += 1;
        }
        let mut pairs: Vec<(&str, usize)> = freq.into_iter().collect();
        pairs.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        StringIndex {
            labels: pairs.into_iter().map(|(s, _)| s.to_string()).collect(),
        }
    }

    /// Unseen values map to the next free code.
    pub fn transform(&self, values: &[String]) -> Vec<i64> {
        let m: HashMap<&str, i64> = self
            .labels
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i as i64))
            .collect();
        values
            .iter()
            .map(|v| m.get(v.as_str()).copied().unwrap_or(self.labels.len() as i64))
            .collect()
    }
}

pub fn string_index(values: &[String]) -> (Vec<i64>, StringIndex) {
    let idx = StringIndex::fit(values);
    (idx.transform(values), idx)
}

/// Nearest-rank quantile cut points at i/nbins, deduplicated; cuts at or
/// below the minimum are dropped so the smallest value lands in bin 0.
pub fn quantile_cuts(values: &[f64], nbins: usize) -> Vec<f64> {
    let mut x: Vec<f64> = values.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut cuts: Vec<f64> = Vec::new();
    for i in 1..nbins {
        let rank = (i * n).div_ceil(nbins).max(1);
        let q = x[rank - 1];
        if q > x[0] && cuts.last() != Some(&q) {
            cuts.push(q);
        }
    }
    cuts
}

/// Bin index = number of cut points ≤ value.
pub fn apply_cuts(cuts: &[f64], v: f64) -> i64 {
    cuts.partition_point(|&c| c <= v) as i64
}

pub fn quantile_bin(values: &[f64], nbins: usize) -> (Vec<i64>, Vec<f64>) {
    let cuts = quantile_cuts(values, nbins);
    (values.iter().map(|&v| apply_cuts(&cuts, v)).collect(), cuts)
}

/// How one Final_ column becomes a categorical column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnRule {
    Indexed { labels: Vec<String> },
    Binned { cuts: Vec<f64> },
    Boolean,
    Passthrough,
}

impl ColumnRule {
    pub fn output_name(&self, name: &str) -> String {
        match self {
            ColumnRule::Indexed { .. } => format!("{name}_indexed"),
            ColumnRule::Binned { .. } => format!("{name}_binned"),
            _ => name.to_string(),
        }
    }
}

/// Per-feature rules fitted on a train table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Categorisation {
    pub rules: Vec<(String, ColumnRule)>,
}

fn distinct_count(v: &[i64]) -> usize {
    let mut s = v.to_vec();
    s.sort_unstable();
    s.dedup();
    s.len()
}

impl Categorisation {
    /// Fits rules for the 185 relevant and 8 oracle features. Floats are
    /// always binned; integers only with more than `NBINS` distinct values.
    pub fn fit(train: &ColumnTable) -> Result<Self> {
        let mut rules = Vec::new();
        for name in relevant_features().into_iter().chain(oracle_features()) {
            let rule = match train.column(&name)? {
                Column::Str(v) => ColumnRule::Indexed {
                    labels: StringIndex::fit(v).labels,
                },
                Column::Bool(_) => ColumnRule::Boolean,
                Column::Float(v) => ColumnRule::Binned {
                    cuts: quantile_cuts(v, NBINS),
                },
                Column::Int(v) if distinct_count(v) > NBINS => ColumnRule::Binned {
                    cuts: quantile_cuts(&v.iter().map(|&x| x as f64).collect::<Vec<_>>(), NBINS),
                },
                Column::Int(_) => ColumnRule::Passthrough,
                other => {
                    return Err(Error::ColumnType {
                        name,
                        expected: "categorisable",
                        actual: other.column_type().as_str(),
                    })
                }
            };
            rules.push((name, rule));
        }
        Ok(Categorisation { rules })
    }

    pub fn output_names(&self) -> Vec<String> {
        self.rules.iter().map(|(n, r)| r.output_name(n)).collect()
    }

    /// Keys, labels, then one integer column per rule.
    pub fn apply(&self, table: &ColumnTable) -> Result<ColumnTable> {
        let mut out = ColumnTable::with_rows(table.row_count());
        for k in KEY_COLUMNS {
            out.push(k, table.column(k)?.clone())?;
        }
        for l in label_columns() {
            out.push(l.clone(), table.column(&l)?.clone())?;
        }
        for (name, rule) in &self.rules {
            let col = table.column(name)?;
            let codes: Vec<i64> = match (rule, col) {
                (ColumnRule::Indexed { labels }, Column::Str(v)) => {
                    StringIndex { labels: labels.clone() }.transform(v)
                }
                (ColumnRule::Boolean, Column::Bool(v)) => v.iter().map(|&b| b as i64).collect(),
                (ColumnRule::Binned { cuts }, c) => c
                    .to_f64()
                    .ok_or_else(|| Error::input(format!("column {name} is not numeric")))?
                    .into_iter()
                    .map(|x| apply_cuts(cuts, x))
                    .collect(),
                (ColumnRule::Passthrough, Column::Int(v)) => v.to_vec(),
                _ => {
                    return Err(Error::ColumnType {
                        name: name.clone(),
                        expected: "type seen at fit time",
                        actual: col.column_type().as_str(),
                    })
                }
            };
            out.push(rule.output_name(name), Column::Int(codes))?;
        }
        Ok(out)
    }
}

/// χ² statistic of a categorical feature against a class column.
pub fn chi_square(feature: &[i64], label: &[i64]) -> Result<f64> {
    if feature.len() != label.len() || feature.is_empty() {
        return Err(Error::input("chi_square needs equally long non-empty columns"));
    }
    let n = feature.len() as f64;
    let mut class_count: BTreeMap<i64, f64> = BTreeMap::new();
    let mut cat_count: BTreeMap<i64, f64> = BTreeMap::new();
    let mut joint: HashMap<(i64, i64), f64> = HashMap::new();
    for (&f, &c) in feature.iter().zip(label) {
        *class_count.entry(c).or_insert(0.0) += 1.0;
        *cat_count.entry(f).or_insert(0.0) += 1.0;
        *joint.entry((f, c)).or_insert(0.0) += 1.0;
    }
    if class_count.len() < 2 {
        return Err(Error::Numeric("chi_square with a single observed class".into()));
    }
    let mut chi = 0.0;
    for (&c, &cc) in &class_count {
        let p = cc / n;
        for (&v, &vc) in &cat_count {
            let e = vc * p;
            let o = joint.get(&(v, c)).copied().unwrap_or(0.0);
            chi += (o - e) * (o - e) / e;
        }
    }
    Ok(chi)
}

pub fn note_candidates(note: &str) -> Result<usize> {
    match note {
        "scaled" => Ok(relevant_features().len()),
        "oracle_scaled" => Ok(relevant_features().len() + oracle_features().len()),
        _ => Err(Error::input(format!("unknown feature note {note:?}"))),
    }
}

pub fn top_n(fs: &str) -> Result<Option<usize>> {
    match fs {
        "all" => Ok(None),
        _ => fs
            .strip_prefix("top_")
            .and_then(|k| k.parse().ok())
            .map(Some)
            .ok_or_else(|| Error::input(format!("unknown feature selection {fs:?}"))),
    }
}

/// Indices of the k highest scores; ties go to the lower index.
pub fn select_top_k(scores: &[f64], k: usize) -> Result<Vec<usize>> {
    if k > scores.len() {
        return Err(Error::input(format!(
            "cannot select {k} of {} features",
            scores.len()
        )));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx.truncate(k);
    Ok(idx)
}

pub fn vector_name(fs: &str, note: &str, target: Target) -> String {
    format!("ev__{fs}__{note}__{target}__sdotd")
}

/// Feature vectors as named index lists into a categorised frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorRegistry {
    pub features: Vec<String>,
    pub vectors: BTreeMap<String, Vec<usize>>,
    pub scores: BTreeMap<String, Vec<f64>>,
}

impl VectorRegistry {
    pub fn vector(&self, name: &str) -> Result<&[usize]> {
        self.vectors
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::input(format!("unknown feature vector {name}")))
    }

    pub fn feature_names(&self, name: &str) -> Result<Vec<&str>> {
        Ok(self
            .vector(name)?
            .iter()
            .map(|&i| self.features[i].as_str())
            .collect())
    }
}

/// Scores every feature on a categorised train table and builds all 50 vectors.
pub fn build_vectors(train: &ColumnTable, features: &[String]) -> Result<VectorRegistry> {
    let mut vectors = BTreeMap::new();
    let mut all_scores = BTreeMap::new();
    let cols: Vec<&[i64]> = features.iter().map(|f| train.ints(f)).collect::<Result<_>>()?;
    for target in Target::ALL {
        let y = train.ints(target.label())?;
        let scores: Vec<f64> = match cols.iter().map(|c| chi_square(c, y)).collect::<Result<Vec<_>>>() {
            Ok(s) => s,
            Err(e) => {
                tracing::warn!(%target, error = %e, "chi-square undefined, keeping registry order");
                vec![0.0; cols.len()]
            }
        };
        for note in NOTES {
            let n = note_candidates(note)?;
            for fs in TOP_NS {
                let sel = match top_n(fs)? {
                    None => (0..n).collect(),
                    Some(k) => select_top_k(&scores[..n], k)?,
                };
                vectors.insert(vector_name(fs, note, target), sel);
            }
        }
        all_scores.insert(target.as_str().to_string(), scores);
    }
    Ok(VectorRegistry {
        features: features.to_vec(),
        vectors,
        scores: all_scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn indexing() {
        assert_eq!(string_index(&s(&["a", "a", "b"])).0, vec![0, 0, 1]);
        let (codes, idx) = string_index(&s(&["b", "a"]));
        assert_eq!(codes, vec![1, 0]);
        assert_eq!(idx.transform(&s(&["zzz"])), vec![2]);
        assert_eq!(string_index(&s(&["q", "q"])).0, vec![0, 0]);
    }

    #[test]
    fn binning() {
        let (b, cuts) = quantile_bin(&[5.0; 10], 100);
        assert!(cuts.is_empty() && b.iter().all(|&x| x == 0));
        let v: Vec<f64> = (0..1000).map(f64::from).collect();
        let (b, _) = quantile_bin(&v, 100);
        let mut hist = vec![0; 100];
        for x in &b {
            hist[*x as usize] += 1;
        }
        assert!(hist.iter().all(|&h| (9..=11).contains(&h)), "{hist:?}");
        assert!(b.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn chi_examples() {
        assert!((chi_square(&[0, 0, 1, 1], &[0, 0, 1, 1]).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(chi_square(&[0, 1, 0, 1], &[0, 0, 1, 1]).unwrap(), 0.0);
        assert_eq!(chi_square(&[3, 3, 3, 3], &[0, 1, 0, 1]).unwrap(), 0.0);
        assert!(chi_square(&[0, 1], &[1, 1]).is_err());
    }

    #[test]
    fn top_k() {
        let sc = [1.0, 3.0, 3.0, 0.5];
        assert_eq!(select_top_k(&sc, 3).unwrap(), vec![1, 2, 0]);
        assert!(select_top_k(&sc, 5).is_err());
        assert_eq!(vector_name("top_5", "scaled", Target::Like), "ev__top_5__scaled__like__sdotd");
    }
}
