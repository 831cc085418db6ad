//! Histogram decision trees over pre-binned features, random forests and
//! gradient-boosted trees with logistic loss.

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::error::{Error, Result};
use crate::rng::indexed_stream;

pub const MAX_BINS: usize = 256;
pub const FOREST_DEPTH: usize = 5;
pub const GBT_DEPTH: usize = 5;
pub const GBT_ITERATIONS: usize = 20;
/// Variance reductions are compared with minInfoGain on the scale of ±1
/// labels with a doubled margin, where residuals are 4× ours.
pub const GBT_GAIN_SCALE: f64 = 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Impurity {
    Gini,
    Entropy,
    Variance,
}

impl Impurity {
    pub fn as_str(self) -> &'static str {
        match self {
            Impurity::Gini => "gini",
            Impurity::Entropy => "entropy",
            Impurity::Variance => "variance",
        }
    }

    /// Impurity of accumulated [w, Σwy, Σwy², Σwh].
    fn of(self, s: &Stat) -> f64 {
        let w = s[0];
        if w <= 0.0 {
            return 0.0;
        }
        let m = s[1] / w;
        match self {
            Impurity::Gini => {
                let p = m.clamp(0.0, 1.0);
                2.0 * p * (1.0 - p)
            }
            Impurity::Entropy => {
                let p = m.clamp(0.0, 1.0);
                let h = |q: f64| if q > 0.0 { -q * q.ln() } else { 0.0 };
                h(p) + h(1.0 - p)
            }
            Impurity::Variance => (s[2] / w - m * m).max(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubsetStrategy {
    Log2,
    Sqrt,
    All,
}

impl SubsetStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            SubsetStrategy::Log2 => "log2",
            SubsetStrategy::Sqrt => "sqrt",
            SubsetStrategy::All => "all",
        }
    }

    pub fn count(self, d: usize) -> usize {
        let k = match self {
            SubsetStrategy::Log2 => (d as f64).log2().ceil() as usize,
            SubsetStrategy::Sqrt => (d as f64).sqrt().ceil() as usize,
            SubsetStrategy::All => d,
        };
        k.clamp(1, d.max(1))
    }
}

type Stat = [f64; 4];

fn add(a: &mut Stat, b: &Stat) {
    for k in 0..4 {
        a[k] += b[k];
    }
}

fn sub(a: &Stat, b: &Stat) -> Stat {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
}

/// Features discretised to at most 256 codes; code c means value ≤ thresholds[c].
#[derive(Debug, Clone)]
pub struct Binned {
    pub n_rows: usize,
    pub thresholds: Vec<Vec<f64>>,
    pub codes: Vec<Vec<u8>>,
}

impl Binned {
    pub fn new(x: &Matrix) -> Self {
        let mut thresholds = Vec::with_capacity(x.n_cols());
        let mut codes = Vec::with_capacity(x.n_cols());
        for col in &x.cols {
            let mut d = col.clone();
            d.sort_by(f64::total_cmp);
            d.dedup();
            let t: Vec<f64> = if d.len() <= MAX_BINS {
                d[..d.len().saturating_sub(1)].to_vec()
            } else {
                let mut t: Vec<f64> = (0..MAX_BINS - 1)
                    .map(|k| d[(k + 1) * d.len() / MAX_BINS - 1])
                    .collect();
                t.dedup();
                t
            };
            codes.push(col.iter().map(|&v| t.partition_point(|&c| c < v) as u8).collect());
            thresholds.push(t);
        }
        Binned {
            n_rows: x.n_rows,
            thresholds,
            codes,
        }
    }

    pub fn n_features(&self) -> usize {
        self.codes.len()
    }

    fn n_bins(&self, f: usize) -> usize {
        self.thresholds[f].len() + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        code: u8,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_value(&self, x: &Matrix, i: usize) -> f64 {
        let mut k = 0;
        loop {
            match &self.nodes[k] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => k = if x.cols[*feature][i] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn predict_code(&self, b: &Binned, i: usize) -> f64 {
        let mut k = 0;
        loop {
            match &self.nodes[k] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    code,
                    left,
                    right,
                    ..
                } => k = if b.codes[*feature][i] <= *code { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, k: usize) -> usize {
            match &t.nodes[k] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, *left).max(go(t, *right)),
            }
        }
        go(self, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafKind {
    Fraction,
    Newton,
}

#[derive(Debug, Clone)]
pub struct TreeConfig {
    pub impurity: Impurity,
    pub max_depth: usize,
    pub min_instances: f64,
    pub min_info_gain: f64,
    pub gain_scale: f64,
    pub leaf: LeafKind,
    pub subset: Option<usize>,
}

impl TreeConfig {
    pub fn classifier(impurity: Impurity, max_depth: usize) -> Self {
        TreeConfig {
            impurity,
            max_depth,
            min_instances: 1.0,
            min_info_gain: 0.0,
            gain_scale: 1.0,
            leaf: LeafKind::Fraction,
            subset: None,
        }
    }
}

struct Builder<'a> {
    b: &'a Binned,
    y: &'a [f64],
    h: &'a [f64],
    w: &'a [f64],
    cfg: &'a TreeConfig,
    offsets: Vec<usize>,
    total_bins: usize,
    rng: Option<&'a mut ChaCha8Rng>,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn stat(&self, i: usize) -> Stat {
        let (w, y) = (self.w[i], self.y[i]);
        let h = if self.h.is_empty() { 0.0 } else { self.h[i] };
        [w, w * y, w * y * y, w * h]
    }

    fn hist(&self, rows: &[u32], feats: &[usize]) -> Vec<Stat> {
        let mut hist = vec![[0.0; 4]; self.total_bins];
        let stats: Vec<Stat> = rows.iter().map(|&i| self.stat(i as usize)).collect();
        for &f in feats {
            let codes = &self.b.codes[f];
            let off = self.offsets[f];
            for (&i, s) in rows.iter().zip(&stats) {
                add(&mut hist[off + codes[i as usize] as usize], s);
            }
        }
        hist
    }

    fn leaf_value(&self, s: &Stat) -> f64 {
        match self.cfg.leaf {
            LeafKind::Fraction => {
                if s[0] > 0.0 {
                    s[1] / s[0]
                } else {
                    0.0
                }
            }
            LeafKind::Newton => {
                if s[3] > 1e-12 {
                    s[1] / s[3]
                } else {
                    0.0
                }
            }
        }
    }

    fn grow(&mut self, rows: Vec<u32>, hist: Option<Vec<Stat>>, depth: usize) -> usize {
        let mut total = [0.0; 4];
        for &i in &rows {
            add(&mut total, &self.stat(i as usize));
        }
        let me = self.nodes.len();
        self.nodes.push(Node::Leaf {
            value: self.leaf_value(&total),
        });
        let imp = self.cfg.impurity.of(&total);
        let d = self.b.n_features();
        if depth >= self.cfg.max_depth || rows.len() < 2 || imp <= 1e-15 || total[0] < 2.0 * self.cfg.min_instances || d == 0 {
            return me;
        }
        let (feats, full) = match (self.cfg.subset, self.rng.as_mut()) {
            (Some(k), Some(rng)) if k < d => {
                let mut f: Vec<usize> = sample(&mut **rng, d, k).into_vec();
                f.sort_unstable();
                (f, false)
            }
            _ => ((0..d).collect::<Vec<_>>(), true),
        };
        let hist = match hist {
            Some(h) if full => h,
            _ => self.hist(&rows, &feats),
        };
        let mut best: Option<(f64, usize, usize)> = None;
        for &f in &feats {
            let off = self.offsets[f];
            let nb = self.b.n_bins(f);
            let mut left = [0.0; 4];
            for c in 0..nb - 1 {
                add(&mut left, &hist[off + c]);
                let right = sub(&total, &left);
                if left[0] < self.cfg.min_instances || right[0] < self.cfg.min_instances || left[0] <= 0.0 || right[0] <= 0.0 {
                    continue;
                }
                let gain = imp
                    - left[0] / total[0] * self.cfg.impurity.of(&left)
                    - right[0] / total[0] * self.cfg.impurity.of(&right);
                if best.map_or(true, |b| gain > b.0) {
                    best = Some((gain, f, c));
                }
            }
        }
        let Some((gain, f, c)) = best else {
            return me;
        };
        if gain * self.cfg.gain_scale < self.cfg.min_info_gain {
            return me;
        }
        let codes = &self.b.codes[f];
        let (l_rows, r_rows): (Vec<u32>, Vec<u32>) = rows.iter().partition(|&&i| codes[i as usize] as usize <= c);
        if l_rows.is_empty() || r_rows.is_empty() {
            return me;
        }
        drop(rows);
        let (l_hist, r_hist) = if full {
            let (small, small_is_left) = if l_rows.len() <= r_rows.len() {
                (&l_rows, true)
            } else {
                (&r_rows, false)
            };
            let sh = self.hist(small, &feats);
            let lh: Vec<Stat> = hist.iter().zip(&sh).map(|(p, s)| sub(p, s)).collect();
            if small_is_left {
                (Some(sh), Some(lh))
            } else {
                (Some(lh), Some(sh))
            }
        } else {
            (None, None)
        };
        drop(hist);
        let left = self.grow(l_rows, l_hist, depth + 1);
        let right = self.grow(r_rows, r_hist, depth + 1);
        self.nodes[me] = Node::Split {
            feature: f,
            threshold: self.b.thresholds[f].get(c).copied().unwrap_or(f64::INFINITY),
            code: c as u8,
            left,
            right,
        };
        me
    }
}

/// Grows one tree on `rows` with per-row weights `w` (indexed by row id).
/// `h` holds per-row hessians for Newton leaves and may be empty otherwise.
pub fn grow_tree(
    b: &Binned,
    rows: &[u32],
    y: &[f64],
    h: &[f64],
    w: &[f64],
    cfg: &TreeConfig,
    rng: Option<&mut ChaCha8Rng>,
) -> Tree {
    let mut offsets = Vec::with_capacity(b.n_features());
    let mut total_bins = 0;
    for f in 0..b.n_features() {
        offsets.push(total_bins);
        total_bins += b.n_bins(f);
    }
    let mut builder = Builder {
        b,
        y,
        h,
        w,
        cfg,
        offsets,
        total_bins,
        rng,
        nodes: Vec::new(),
    };
    builder.grow(rows.to_vec(), None, 0);
    Tree { nodes: builder.nodes }
}

pub fn train_tree(b: &Binned, rows: &[u32], y: &[i64], cfg: &TreeConfig) -> Tree {
    let yf: Vec<f64> = y.iter().map(|&v| v as f64).collect();
    let w = vec![1.0; b.n_rows];
    grow_tree(b, rows, &yf, &[], &w, cfg, None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
}

impl Forest {
    pub fn predict_value(&self, x: &Matrix, i: usize) -> f64 {
        self.trees.iter().map(|t| t.predict_value(x, i)).sum::<f64>() / self.trees.len() as f64
    }

    pub fn predict_code(&self, b: &Binned, i: usize) -> f64 {
        self.trees.iter().map(|t| t.predict_code(b, i)).sum::<f64>() / self.trees.len() as f64
    }
}

#[derive(Debug, Clone)]
pub struct ForestConfig {
    pub impurity: Impurity,
    pub num_trees: usize,
    pub strategy: SubsetStrategy,
    pub max_depth: usize,
    pub bootstrap: bool,
}

pub fn train_forest(b: &Binned, rows: &[u32], y: &[i64], cfg: &ForestConfig, seed: u64) -> Forest {
    let yf: Vec<f64> = y.iter().map(|&v| v as f64).collect();
    let k = cfg.strategy.count(b.n_features());
    let trees = (0..cfg.num_trees)
        .map(|t| {
            let mut rng = indexed_stream(seed, "forest", t as u64);
            let mut w = vec![0.0; b.n_rows];
            let tree_rows: Vec<u32> = if cfg.bootstrap {
                for _ in 0..rows.len() {
                    w[rows[rng.gen_range(0..rows.len())] as usize] += 1.0;
                }
                rows.iter().copied().filter(|&i| w[i as usize] > 0.0).collect()
            } else {
                for &i in rows {
                    w[i as usize] = 1.0;
                }
                rows.to_vec()
            };
            let tc = TreeConfig {
                subset: Some(k),
                ..TreeConfig::classifier(cfg.impurity, cfg.max_depth)
            };
            grow_tree(b, &tree_rows, &yf, &[], &w, &tc, Some(&mut rng))
        })
        .collect();
    Forest { trees }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub f0: f64,
    pub step_size: f64,
    pub trees: Vec<Tree>,
}

impl GbtModel {
    pub fn margin(&self, tree_sum: f64) -> f64 {
        self.f0 + self.step_size * tree_sum
    }
}

#[derive(Debug, Clone)]
pub struct GbtConfig {
    pub num_iter: usize,
    pub max_depth: usize,
    pub min_instances: usize,
    pub subsampling_rate: f64,
    pub min_info_gain: f64,
    pub step_size: f64,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Returns the model and the training log loss after each iteration
/// (index 0 is the base score).
pub fn train_gbt(b: &Binned, rows: &[u32], y: &[i64], cfg: &GbtConfig, seed: u64) -> Result<(GbtModel, Vec<f64>)> {
    let pos = rows.iter().filter(|&&i| y[i as usize] == 1).count();
    if pos == 0 || pos == rows.len() {
        return Err(Error::Numeric("gradient boosting needs both classes".into()));
    }
    let pi = pos as f64 / rows.len() as f64;
    let f0 = (pi / (1.0 - pi)).ln();
    let mut f = vec![f0; b.n_rows];
    let yf: Vec<f64> = y.iter().map(|&v| v as f64).collect();
    let w = vec![1.0; b.n_rows];
    let mut r = vec![0.0; b.n_rows];
    let mut h = vec![0.0; b.n_rows];
    let loss = |f: &[f64]| -> f64 {
        rows.iter()
            .map(|&i| {
                let p = sigmoid(f[i as usize]).clamp(1e-15, 1.0 - 1e-15);
                if y[i as usize] == 1 {
                    -p.ln()
                } else {
                    -(1.0 - p).ln()
                }
            })
            .sum::<f64>()
            / rows.len() as f64
    };
    let mut history = vec![loss(&f)];
    let tc = TreeConfig {
        impurity: Impurity::Variance,
        max_depth: cfg.max_depth,
        min_instances: cfg.min_instances as f64,
        min_info_gain: cfg.min_info_gain,
        gain_scale: GBT_GAIN_SCALE,
        leaf: LeafKind::Newton,
        subset: None,
    };
    let mut trees = Vec::with_capacity(cfg.num_iter);
    for it in 0..cfg.num_iter {
        for &i in rows {
            let i = i as usize;
            let p = sigmoid(f[i]);
            r[i] = yf[i] - p;
            h[i] = p * (1.0 - p);
        }
        let sub: Vec<u32> = if cfg.subsampling_rate >= 1.0 {
            rows.to_vec()
        } else {
            let mut rng = indexed_stream(seed, "gbt", it as u64);
            let s: Vec<u32> = rows.iter().copied().filter(|_| rng.gen::<f64>() < cfg.subsampling_rate).collect();
            if s.is_empty() {
                vec![rows[rng.gen_range(0..rows.len())]]
            } else {
                s
            }
        };
        let tree = grow_tree(b, &sub, &r, &h, &w, &tc, None);
        for &i in rows {
            f[i as usize] += cfg.step_size * tree.predict_code(b, i as usize);
        }
        trees.push(tree);
        history.push(loss(&f));
    }
    Ok((
        GbtModel {
            f0,
            step_size: cfg.step_size,
            trees,
        },
        history,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor() -> (Matrix, Vec<i64>) {
        (
            Matrix::from_cols(vec![vec![0.0, 0.0, 1.0, 1.0], vec![0.0, 1.0, 0.0, 1.0]]).unwrap(),
            vec![0, 1, 1, 0],
        )
    }

    #[test]
    fn xor_depth_two() {
        let (x, y) = xor();
        let b = Binned::new(&x);
        let t = train_tree(&b, &[0, 1, 2, 3], &y, &TreeConfig::classifier(Impurity::Entropy, 2));
        for i in 0..4 {
            assert_eq!(t.predict_value(&x, i).round() as i64, y[i]);
        }
    }

    #[test]
    fn pure_is_leaf() {
        let x = Matrix::from_cols(vec![vec![1.0, 2.0, 3.0]]).unwrap();
        let b = Binned::new(&x);
        let t = train_tree(&b, &[0, 1, 2], &[1, 1, 1], &TreeConfig::classifier(Impurity::Gini, 5));
        assert_eq!(t.nodes.len(), 1);
    }

    #[test]
    fn binning_caps_codes() {
        let x = Matrix::from_cols(vec![(0..1000).map(f64::from).collect()]).unwrap();
        let b = Binned::new(&x);
        assert!(b.thresholds[0].len() < MAX_BINS);
        assert_eq!(b.codes[0][0], 0);
        assert_eq!(b.codes[0][999] as usize, b.thresholds[0].len());
    }
}
