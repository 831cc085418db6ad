//! Multinomial naive Bayes, logistic regression and a linear SVM.

use serde::{Deserialize, Serialize};

use super::tree::sigmoid;
use super::Matrix;
use crate::error::{Error, Result};

pub const LR_RATE: f64 = 0.1;
pub const SVC_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbModel {
    pub smoothing: f64,
    /// log p(c) for c = 0, 1.
    pub log_prior: [f64; 2],
    /// θ_{c,i}.
    pub theta: [Vec<f64>; 2],
}

pub fn train_nb(x: &Matrix, y: &[i64], smoothing: f64) -> Result<NbModel> {
    if !(0.0..=1.0).contains(&smoothing) {
        return Err(Error::input(format!("smoothing {smoothing} outside [0, 1]")));
    }
    if x.cols.iter().flatten().any(|&v| v < 0.0) {
        return Err(Error::input("naive Bayes needs non-negative features"));
    }
    let n = x.n_rows as f64;
    let d = x.n_cols();
    let mut counts = [0.0f64; 2];
    for &c in y {
        counts[(c == 1) as usize] += 1.0;
    }
    if counts.iter().any(|&c| c == 0.0) {
        return Err(Error::Numeric("naive Bayes with a class that has no rows".into()));
    }
    let mut sums = [vec![0.0; d], vec![0.0; d]];
    for (j, col) in x.cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            sums[(y[i] == 1) as usize][j] += v;
        }
    }
    let theta = sums.map(|s| {
        let total: f64 = s.iter().sum::<f64>() + smoothing * d as f64;
        s.iter()
            .map(|&v| if total > 0.0 { (v + smoothing) / total } else { 0.0 })
            .collect()
    });
    Ok(NbModel {
        smoothing,
        log_prior: [(counts[0] / n).ln(), (counts[1] / n).ln()],
        theta,
    })
}

impl NbModel {
    /// Per-row [p(0|x), p(1|x)].
    pub fn class_probabilities(&self, x: &Matrix) -> Vec<[f64; 2]> {
        let mut score = vec![self.log_prior; x.n_rows];
        for (j, col) in x.cols.iter().enumerate() {
            let lt = [self.theta[0][j].ln(), self.theta[1][j].ln()];
            for (i, &v) in col.iter().enumerate() {
                if v != 0.0 {
                    score[i][0] += v * lt[0];
                    score[i][1] += v * lt[1];
                }
            }
        }
        let prior = [self.log_prior[0].exp(), self.log_prior[1].exp()];
        score
            .into_iter()
            .map(|s| {
                let m = s[0].max(s[1]);
                if m == f64::NEG_INFINITY {
                    return prior;
                }
                let e = [(s[0] - m).exp(), (s[1] - m).exp()];
                let z = e[0] + e[1];
                [e[0] / z, e[1] / z]
            })
            .collect()
    }

    pub fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        self.class_probabilities(x).into_iter().map(|p| p[1]).collect()
    }
}

/// Linear scorer in original feature units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Per-feature scale used while fitting.
    pub sigma: Vec<f64>,
}

impl LinearModel {
    pub fn margins(&self, x: &Matrix) -> Vec<f64> {
        let mut z = vec![self.intercept; x.n_rows];
        for (col, &w) in x.cols.iter().zip(&self.weights) {
            if w != 0.0 {
                for (zi, &v) in z.iter_mut().zip(col) {
                    *zi += w * v;
                }
            }
        }
        z
    }

    pub fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        self.margins(x).into_iter().map(sigmoid).collect()
    }
}

fn mean_std(col: &[f64]) -> (f64, f64) {
    let n = col.len().max(1) as f64;
    let m = col.iter().sum::<f64>() / n;
    let v = col.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, v.sqrt())
}

/// Mean logistic loss and its gradient (weights, intercept) on raw features.
pub fn logistic_loss_grad(x: &Matrix, y: &[i64], w: &[f64], b: f64) -> (f64, Vec<f64>, f64) {
    let n = x.n_rows as f64;
    let mut z = vec![b; x.n_rows];
    for (col, &wj) in x.cols.iter().zip(w) {
        for (zi, &v) in z.iter_mut().zip(col) {
            *zi += wj * v;
        }
    }
    let mut loss = 0.0;
    let mut resid = vec![0.0; x.n_rows];
    for i in 0..x.n_rows {
        let yi = y[i] as f64;
        // log(1 + e^z) − y z, computed stably
        let sp = if z[i] > 0.0 { z[i] + (-z[i]).exp().ln_1p() } else { z[i].exp().ln_1p() };
        loss += sp - yi * z[i];
        resid[i] = sigmoid(z[i]) - yi;
    }
    let gw = x
        .cols
        .iter()
        .map(|col| col.iter().zip(&resid).map(|(v, r)| v * r).sum::<f64>() / n)
        .collect();
    let gb = resid.iter().sum::<f64>() / n;
    (loss / n, gw, gb)
}

#[derive(Debug, Clone)]
pub struct LrConfig {
    pub elastic_net: f64,
    pub reg: f64,
    pub fit_intercept: bool,
    pub max_iter: usize,
}

/// Proximal gradient descent on standardized features; zero-variance
/// features keep weight 0.
pub fn train_lr(x: &Matrix, y: &[i64], cfg: &LrConfig) -> Result<LinearModel> {
    let d = x.n_cols();
    let sigma: Vec<f64> = x.cols.iter().map(|c| mean_std(c).1).collect();
    let active: Vec<usize> = (0..d).filter(|&j| sigma[j] > 0.0).collect();
    let xs = Matrix {
        n_rows: x.n_rows,
        cols: active
            .iter()
            .map(|&j| x.cols[j].iter().map(|v| v / sigma[j]).collect())
            .collect(),
    };
    let mut w = vec![0.0; active.len()];
    let mut b = 0.0;
    let l1 = LR_RATE * cfg.reg * cfg.elastic_net;
    let l2 = 1.0 + LR_RATE * cfg.reg * (1.0 - cfg.elastic_net);
    for _ in 0..cfg.max_iter {
        let (loss, gw, gb) = logistic_loss_grad(&xs, y, &w, b);
        if !loss.is_finite() {
            return Err(Error::Numeric("logistic regression loss is not finite".into()));
        }
        for (wj, g) in w.iter_mut().zip(gw) {
            let v = *wj - LR_RATE * g;
            *wj = v.signum() * (v.abs() - l1).max(0.0) / l2;
        }
        if cfg.fit_intercept {
            b -= LR_RATE * gb;
        }
    }
    let mut weights = vec![0.0; d];
    for (k, &j) in active.iter().enumerate() {
        weights[j] = w[k] / sigma[j];
    }
    Ok(LinearModel {
        weights,
        intercept: b,
        sigma,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvcModel {
    pub linear: LinearModel,
    pub threshold: f64,
}

impl SvcModel {
    pub fn decisions(&self, x: &Matrix) -> Vec<i64> {
        self.linear
            .margins(x)
            .into_iter()
            .map(|m| (m >= self.threshold) as i64)
            .collect()
    }

    /// σ(margin), used for the probability-based metrics.
    pub fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        self.linear.predict_proba(x)
    }
}

#[derive(Debug, Clone)]
pub struct SvcConfig {
    pub reg: f64,
    pub threshold: f64,
    pub standardization: bool,
    pub fit_intercept: bool,
    pub num_iter: usize,
}

pub fn train_svc(x: &Matrix, y: &[i64], cfg: &SvcConfig) -> Result<SvcModel> {
    let d = x.n_cols();
    let n = x.n_rows as f64;
    let (mu, sd): (Vec<f64>, Vec<f64>) = if cfg.standardization {
        x.cols
            .iter()
            .map(|c| {
                let (m, s) = mean_std(c);
                (m, if s > 0.0 { s } else { 1.0 })
            })
            .unzip()
    } else {
        (vec![0.0; d], vec![1.0; d])
    };
    let xs: Vec<Vec<f64>> = x
        .cols
        .iter()
        .enumerate()
        .map(|(j, c)| c.iter().map(|v| (v - mu[j]) / sd[j]).collect())
        .collect();
    if xs.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::input("non-finite feature value"));
    }
    let ys: Vec<f64> = y.iter().map(|&v| if v == 1 { 1.0 } else { -1.0 }).collect();
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    for t in 0..cfg.num_iter {
        let rate = 0.1 / (1.0 + 0.01 * t as f64);
        let mut z = vec![b; x.n_rows];
        for (col, &wj) in xs.iter().zip(&w) {
            for (zi, &v) in z.iter_mut().zip(col) {
                *zi += wj * v;
            }
        }
        let viol: Vec<usize> = (0..x.n_rows).filter(|&i| ys[i] * z[i] < 1.0).collect();
        for (j, col) in xs.iter().enumerate() {
            let g = cfg.reg * w[j] - viol.iter().map(|&i| ys[i] * col[i]).sum::<f64>() / n;
            w[j] -= rate * g;
        }
        if cfg.fit_intercept {
            b += rate * viol.iter().map(|&i| ys[i]).sum::<f64>() / n;
        }
    }
    let weights: Vec<f64> = (0..d).map(|j| w[j] / sd[j]).collect();
    let intercept = b - (0..d).map(|j| w[j] * mu[j] / sd[j]).sum::<f64>();
    Ok(SvcModel {
        linear: LinearModel {
            weights,
            intercept,
            sigma: sd,
        },
        threshold: cfg.threshold,
    })
}
