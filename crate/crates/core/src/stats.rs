//! Result balancing and significance tests.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One evaluated model on one dataset for one target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub algorithm: String,
    pub note: String,
    pub feature_selection: String,
    pub trained_on: String,
    pub to_technique: String,
    pub to_percent: String,
    pub evaluated_on: String,
    pub target: String,
    pub prauc: f64,
    pub rce: f64,
}

pub const FACTORS: [&str; 5] = ["algorithm", "note", "feature_selection", "to_technique", "to_percent"];
pub const METRICS: [&str; 2] = ["PRAUC", "RCE"];

impl EvalRecord {
    pub fn factor(&self, name: &str) -> &str {
        match name {
            "algorithm" => &self.algorithm,
            "note" => &self.note,
            "feature_selection" => &self.feature_selection,
            "to_technique" => &self.to_technique,
            "to_percent" => &self.to_percent,
            "evaluated_on" => &self.evaluated_on,
            "trained_on" => &self.trained_on,
            "target" => &self.target,
            _ => panic!("unknown factor {name}"),
        }
    }

    /// The parts of `evaluated_on` not fixed by `factor`: the source, plus
    /// the percentage or technique that the factor leaves free.
    pub fn evaluated_context(&self, factor: &str) -> String {
        match (factor, crate::schema::DatasetId::parse_base(&self.evaluated_on, "")) {
            ("to_technique", Ok(id)) => format!("{}/{}", id.source, id.percent),
            ("to_percent", Ok(id)) => format!("{}/{}", id.source, id.technique),
            _ => self.evaluated_on.clone(),
        }
    }

    pub fn metric(&self, name: &str) -> f64 {
        match name {
            "PRAUC" => self.prauc,
            "RCE" => self.rce,
            _ => panic!("unknown metric {name}"),
        }
    }
}

/// Kept row indices: rows whose combination of `others` occurs for every
/// distinct value of `target`.
pub fn common_factor_combinations<R>(
    rows: &[R],
    target: impl Fn(&R) -> String,
    others: impl Fn(&R) -> Vec<String>,
) -> Vec<usize> {
    let mut by_value: BTreeMap<String, BTreeSet<Vec<String>>> = BTreeMap::new();
    for r in rows {
        by_value.entry(target(r)).or_default().insert(others(r));
    }
    let mut sets = by_value.values();
    let Some(first) = sets.next() else {
        return Vec::new();
    };
    let common: BTreeSet<Vec<String>> = sets.fold(first.clone(), |acc, s| acc.intersection(s).cloned().collect());
    (0..rows.len()).filter(|&i| common.contains(&others(&rows[i]))).collect()
}

/// Friedman test result; `p_corr` starts equal to `p` until corrected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub w: f64,
    pub ddof1: usize,
    pub q: f64,
    pub p: f64,
    pub p_corr: f64,
}

/// Average ranks (1-based) with ties sharing their mean rank.
pub fn mid_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

fn tie_sum(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let mut total = 0.0;
    let mut i = 0;
    while i < s.len() {
        let mut j = i;
        while j < s.len() && s[j] == s[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        total += t * t * t - t;
        i = j;
    }
    total
}

/// Rows are subjects, columns treatments.
pub fn friedman(matrix: &[Vec<f64>]) -> Result<TestResult> {
    let n = matrix.len();
    let k = matrix.first().map_or(0, Vec::len);
    if n < 2 || k < 2 {
        return Err(Error::input("friedman needs at least 2 subjects and 2 treatments"));
    }
    if matrix.iter().any(|r| r.len() != k) {
        return Err(Error::input("friedman matrix is ragged"));
    }
    let (nf, kf) = (n as f64, k as f64);
    let mut mean_rank = vec![0.0; k];
    let mut ties = 0.0;
    for row in matrix {
        for (j, r) in mid_ranks(row).into_iter().enumerate() {
            mean_rank[j] += r / nf;
        }
        ties += tie_sum(row);
    }
    let c = 1.0 - ties / (nf * kf * (kf * kf - 1.0));
    let ss: f64 = mean_rank.iter().map(|r| (r - (kf + 1.0) / 2.0).powi(2)).sum();
    let q = if c <= 0.0 {
        0.0
    } else {
        12.0 * nf / (kf * (kf + 1.0)) * ss / c
    };
    let p = chi2_sf(q, (k - 1) as f64);
    Ok(TestResult {
        w: q / (nf * (kf - 1.0)),
        ddof1: k - 1,
        q,
        p,
        p_corr: p,
    })
}

pub fn ln_gamma(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = G[0];
    let t = x + 7.5;
    for (i, g) in G.iter().enumerate().skip(1) {
        a += g / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized upper incomplete gamma Q(a, x).
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let lead = -x + a * x.ln() - ln_gamma(a);
    if x < a + 1.0 {
        let mut sum = 1.0 / a;
        let mut term = sum;
        let mut ap = a;
        for _ in 0..10_000 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-17 {
                break;
            }
        }
        (1.0 - sum * lead.exp()).clamp(0.0, 1.0)
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-17 {
                break;
            }
        }
        (lead.exp() * h).clamp(0.0, 1.0)
    }
}

/// Chi-square survival function.
pub fn chi2_sf(x: f64, dof: f64) -> f64 {
    gamma_q(dof / 2.0, x / 2.0)
}

/// Standard normal two-sided tail 2·(1 − Φ(|z|)).
pub fn normal_two_sided(z: f64) -> f64 {
    gamma_q(0.5, z * z / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WilcoxonMode {
    Auto,
    Exact,
    Normal,
}

/// Two-sided Wilcoxon signed-rank p-value; zero differences are dropped.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64], mode: WilcoxonMode) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::input("wilcoxon needs equally long non-empty samples"));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|&x| x != 0.0).collect();
    let n = d.len();
    if n == 0 {
        return Ok(1.0);
    }
    let abs: Vec<f64> = d.iter().map(|x| x.abs()).collect();
    let ranks = mid_ranks(&abs);
    let w_plus: f64 = d.iter().zip(&ranks).filter(|(x, _)| **x > 0.0).map(|(_, r)| r).sum();
    let ties = tie_sum(&abs);
    let exact = match mode {
        WilcoxonMode::Exact => true,
        WilcoxonMode::Normal => false,
        WilcoxonMode::Auto => n <= 25 && ties == 0.0,
    };
    let nf = n as f64;
    if exact {
        let max = n * (n + 1) / 2;
        let mut counts = vec![0f64; max + 1];
        counts[0] = 1.0;
        for r in 1..=n {
            for s in (r..=max).rev() {
                counts[s] += counts[s - r];
            }
        }
        let total = 2f64.powi(n as i32);
        let w = w_plus.round() as usize;
        let lower: f64 = counts[..=w.min(max)].iter().sum::<f64>() / total;
        let upper: f64 = counts[w.min(max)..].iter().sum::<f64>() / total;
        return Ok((2.0 * lower.min(upper)).min(1.0));
    }
    let mean = nf * (nf + 1.0) / 4.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - ties / 48.0;
    if var <= 0.0 {
        return Ok(1.0);
    }
    Ok(normal_two_sided((w_plus - mean) / var.sqrt()).min(1.0))
}

/// Holm step-down correction, returned in input order.
pub fn holm(p: &[f64]) -> Result<Vec<f64>> {
    if p.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        return Err(Error::input("p-values must lie in [0, 1]"));
    }
    let m = p.len();
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    let mut out = vec![0.0; m];
    let mut run: f64 = 0.0;
    for (i, &k) in idx.iter().enumerate() {
        run = run.max(((m - i) as f64 * p[k]).min(1.0));
        out[k] = run;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FriedmanRow {
    pub metric: String,
    pub target: String,
    pub within: String,
    pub balanced_on: String,
    pub result: TestResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosthocRow {
    pub metric: String,
    pub target: String,
    pub within: String,
    pub a: String,
    pub b: String,
    pub p_uncorr: f64,
    pub p_corr: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SuiteResult {
    pub friedman: Vec<FriedmanRow>,
    pub posthoc: Vec<PosthocRow>,
    pub skipped: Vec<(String, String, String, String)>,
}

pub const FRIEDMAN_HEADER: &str = "metric\ttarget\twithin\tbalanced_on\tW\tddof1\tQ\tp-corr";
pub const POSTHOC_HEADER: &str = "metric\ttarget\twithin\tA\tB\tp-uncorr\tp-corr";

impl SuiteResult {
    pub fn friedman_tsv(&self) -> String {
        let mut s = format!("{FRIEDMAN_HEADER}\n");
        for r in &self.friedman {
            let t = r.result;
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{:.6}\t{}\t{:.6}\t{:.6e}",
                r.metric, r.target, r.within, r.balanced_on, t.w, t.ddof1, t.q, t.p_corr
            );
        }
        s
    }

    pub fn posthoc_tsv(&self) -> String {
        let mut s = format!("{POSTHOC_HEADER}\n");
        for r in &self.posthoc {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{:.6e}\t{:.6e}",
                r.metric, r.target, r.within, r.a, r.b, r.p_uncorr, r.p_corr
            );
        }
        s
    }
}

pub fn balancing_column(factor: &str) -> &'static str {
    match factor {
        "to_technique" | "to_percent" => "evaluated_on",
        "algorithm" => "algorithm",
        "note" => "note",
        "feature_selection" => "feature_selection",
        _ => panic!("unknown factor {factor}"),
    }
}

struct Block {
    treatments: Vec<String>,
    matrix: Vec<Vec<f64>>,
}

/// Subject key: the model (other factors, train set) and the evaluation
/// dataset up to the compared factor.
fn subject(r: &EvalRecord, factor: &str) -> Vec<String> {
    let mut k: Vec<String> = FACTORS
        .iter()
        .filter(|f| **f != factor && !is_evaluation_factor(f))
        .map(|f| r.factor(f).to_string())
        .collect();
    k.push(r.trained_on.clone());
    k.push(r.evaluated_context(factor));
    k
}

fn is_evaluation_factor(f: &str) -> bool {
    matches!(f, "to_technique" | "to_percent")
}

/// Complete-block matrix for `factor` from balanced records.
fn block_matrix(records: &[&EvalRecord], factor: &str, metric: &str) -> Block {
    let mut cells: BTreeMap<Vec<String>, HashMap<String, (f64, f64)>> = BTreeMap::new();
    let mut treatments: BTreeSet<String> = BTreeSet::new();
    for r in records {
        let subject = subject(r, factor);
        let t = r.factor(factor).to_string();
        treatments.insert(t.clone());
        let e = cells.entry(subject).or_default().entry(t).or_insert((0.0, 0.0));
        e.0 += r.metric(metric);
        e.1 += 1.0;
    }
    let treatments: Vec<String> = treatments.into_iter().collect();
    let matrix = cells
        .values()
        .filter(|m| m.len() == treatments.len())
        .map(|m| treatments.iter().map(|t| m[t].0 / m[t].1).collect())
        .collect();
    Block { treatments, matrix }
}

/// Friedman per (metric, target, factor), Holm across all of them, then
/// pairwise Wilcoxon with Holm within each family where p-corr < alpha.
pub fn run_factor_suite(records: &[EvalRecord], alpha: f64) -> Result<SuiteResult> {
    let mut out = SuiteResult::default();
    let targets: BTreeSet<&str> = records.iter().map(|r| r.target.as_str()).collect();
    let mut blocks = Vec::new();
    for metric in METRICS {
        for target in &targets {
            let rows: Vec<&EvalRecord> = records.iter().filter(|r| r.target == *target).collect();
            for factor in FACTORS {
                let bal = balancing_column(factor);
                let keep = common_factor_combinations(&rows, |r| r.factor(bal).to_string(), |r| {
                    let mut k: Vec<String> = FACTORS
                        .iter()
                        .filter(|f| **f != bal && **f != factor)
                        .filter(|f| bal != "evaluated_on" || !is_evaluation_factor(f))
                        .map(|f| r.factor(f).to_string())
                        .collect();
                    k.push(r.trained_on.clone());
                    if bal != "evaluated_on" {
                        k.push(r.evaluated_on.clone());
                    }
                    k
                });
                let kept: Vec<&EvalRecord> = keep.into_iter().map(|i| rows[i]).collect();
                let block = block_matrix(&kept, factor, metric);
                let reason = if block.treatments.len() < 2 {
                    Some("fewer than 2 factor values")
                } else if block.matrix.len() < 2 {
                    Some("fewer than 2 complete blocks")
                } else {
                    None
                };
                if let Some(reason) = reason {
                    tracing::info!(metric, target, factor, reason, "friedman test skipped");
                    out.skipped.push((metric.into(), target.to_string(), factor.into(), reason.into()));
                    continue;
                }
                let result = friedman(&block.matrix)?;
                out.friedman.push(FriedmanRow {
                    metric: metric.into(),
                    target: target.to_string(),
                    within: factor.into(),
                    balanced_on: bal.into(),
                    result,
                });
                blocks.push(block);
            }
        }
    }
    let ps: Vec<f64> = out.friedman.iter().map(|r| r.result.p).collect();
    for (r, pc) in out.friedman.iter_mut().zip(holm(&ps)?) {
        r.result.p_corr = pc;
    }
    for (row, block) in out.friedman.iter().zip(&blocks) {
        if row.result.p_corr >= alpha {
            continue;
        }
        let k = block.treatments.len();
        let mut fam = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                let a: Vec<f64> = block.matrix.iter().map(|r| r[i]).collect();
                let b: Vec<f64> = block.matrix.iter().map(|r| r[j]).collect();
                fam.push((i, j, wilcoxon_signed_rank(&a, &b, WilcoxonMode::Auto)?));
            }
        }
        let corr = holm(&fam.iter().map(|x| x.2).collect::<Vec<_>>())?;
        for ((i, j, p), pc) in fam.into_iter().zip(corr) {
            out.posthoc.push(PosthocRow {
                metric: row.metric.clone(),
                target: row.target.clone(),
                within: row.within.clone(),
                a: block.treatments[i].clone(),
                b: block.treatments[j].clone(),
                p_uncorr: p,
                p_corr: pc,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn friedman_concordance() {
        let m = vec![vec![1.0, 2.0, 3.0]; 3];
        let t = friedman(&m).unwrap();
        assert!((t.q - 6.0).abs() < 1e-12 && (t.w - 1.0).abs() < 1e-12 && t.ddof1 == 2);
        assert!((t.p - (-3f64).exp()).abs() < 1e-10);
        let t = friedman(&vec![vec![4.0, 4.0, 4.0]; 3]).unwrap();
        assert_eq!((t.q, t.p), (0.0, 1.0));
        assert!(friedman(&[vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn survival() {
        for x in [0.1, 1.0, 3.0, 10.0, 40.0] {
            assert!((chi2_sf(x, 2.0) - (-x / 2.0).exp()).abs() < 1e-10);
        }
        assert!((normal_two_sided(1.959963984540054) - 0.05).abs() < 1e-10);
    }

    #[test]
    fn wilcoxon() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let z = [0.0; 5];
        assert!((wilcoxon_signed_rank(&a, &z, WilcoxonMode::Auto).unwrap() - 0.0625).abs() < 1e-12);
        assert_eq!(wilcoxon_signed_rank(&a, &z, WilcoxonMode::Auto).unwrap(), wilcoxon_signed_rank(&z, &a, WilcoxonMode::Auto).unwrap());
        assert_eq!(wilcoxon_signed_rank(&a, &a, WilcoxonMode::Auto).unwrap(), 1.0);
    }

    #[test]
    fn holm_examples() {
        let h = holm(&[0.01, 0.04, 0.03]).unwrap();
        for (x, y) in h.iter().zip([0.03, 0.06, 0.06]) {
            assert!((x - y).abs() < 1e-12);
        }
        assert_eq!(holm(&[0.2]).unwrap(), vec![0.2]);
        assert!(holm(&[1.5]).is_err());
    }

    #[test]
    fn worked_intersection() {
        let a = ["tree", "tree", "tree", "lr", "lr"];
        let b = ["1", "2", "3", "1", "2"];
        let c = ["a", "b", "c", "a", "d"];
        let rows: Vec<usize> = (0..5).collect();
        let keep = common_factor_combinations(&rows, |&i| a[i].into(), |&i| vec![b[i].into(), c[i].into()]);
        assert_eq!(keep, vec![0, 3]);
        let keep = common_factor_combinations(&rows, |&i| b[i].into(), |&i| vec![a[i].into(), c[i].into()]);
        assert!(keep.is_empty());
    }
}
