//! The six classifiers, their hyperparameter grids and grid search.

pub mod linear;
pub mod tree;
pub mod tuning;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::ColumnTable;
use linear::{LinearModel, LrConfig, NbModel, SvcConfig, SvcModel};
use tree::{Binned, Forest, ForestConfig, GbtConfig, GbtModel, Impurity, SubsetStrategy, Tree, TreeConfig};

pub use tuning::{cross_validate, CvResult};

/// Column-major feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub n_rows: usize,
    pub cols: Vec<Vec<f64>>,
}

impl Matrix {
    pub fn from_cols(cols: Vec<Vec<f64>>) -> Result<Self> {
        let n_rows = cols.first().map_or(0, Vec::len);
        if cols.iter().any(|c| c.len() != n_rows) {
            return Err(Error::input("matrix columns differ in length"));
        }
        Ok(Matrix { n_rows, cols })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::input("matrix rows differ in length"));
        }
        Ok(Matrix {
            n_rows: rows.len(),
            cols: (0..d).map(|j| rows.iter().map(|r| r[j]).collect()).collect(),
        })
    }

    pub fn from_table(table: &ColumnTable, names: &[&str]) -> Result<Self> {
        let cols = names.iter().map(|n| table.numeric(n)).collect::<Result<Vec<_>>>()?;
        Ok(Matrix {
            n_rows: table.row_count(),
            cols,
        })
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn take(&self, rows: &[u32]) -> Matrix {
        Matrix {
            n_rows: rows.len(),
            cols: self
                .cols
                .iter()
                .map(|c| rows.iter().map(|&i| c[i as usize]).collect())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Kind {
    #[serde(rename = "bayes")]
    Bayes,
    #[serde(rename = "lr")]
    Lr,
    #[serde(rename = "tree")]
    Tree,
    #[serde(rename = "forest")]
    Forest,
    #[serde(rename = "GradientBoosting")]
    GradientBoosting,
    #[serde(rename = "svc")]
    Svc,
}

impl Kind {
    pub const ALL: [Kind; 6] = [Kind::Bayes, Kind::Lr, Kind::Tree, Kind::Forest, Kind::GradientBoosting, Kind::Svc];

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Bayes => "bayes",
            Kind::Lr => "lr",
            Kind::Tree => "tree",
            Kind::Forest => "forest",
            Kind::GradientBoosting => "GradientBoosting",
            Kind::Svc => "svc",
        }
    }

    fn uses_bins(self) -> bool {
        matches!(self, Kind::Tree | Kind::Forest | Kind::GradientBoosting)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Kind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::input(format!("unknown classifier {s:?}")))
    }
}

/// One grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Params {
    #[serde(rename = "bayes")]
    Bayes { smoothing: f64 },
    #[serde(rename = "lr")]
    Lr {
        elastic_net: f64,
        reg: f64,
        fit_intercept: bool,
        max_iter: usize,
    },
    #[serde(rename = "tree")]
    Tree { impurity: Impurity, max_depth: usize },
    #[serde(rename = "forest")]
    Forest {
        impurity: Impurity,
        num_trees: usize,
        strategy: SubsetStrategy,
    },
    #[serde(rename = "GradientBoosting")]
    GradientBoosting {
        min_instances: usize,
        subsampling_rate: f64,
        min_info_gain: f64,
        step_size: f64,
    },
    #[serde(rename = "svc")]
    Svc {
        reg: f64,
        threshold: f64,
        standardization: bool,
        fit_intercept: bool,
    },
}

impl Params {
    pub fn kind(&self) -> Kind {
        match self {
            Params::Bayes { .. } => Kind::Bayes,
            Params::Lr { .. } => Kind::Lr,
            Params::Tree { .. } => Kind::Tree,
            Params::Forest { .. } => Kind::Forest,
            Params::GradientBoosting { .. } => Kind::GradientBoosting,
            Params::Svc { .. } => Kind::Svc,
        }
    }
}

const THIRDS: [f64; 3] = [0.0, 0.5, 1.0];
const TENTHS: [f64; 3] = [0.1, 0.5, 1.0];
const BOOLS: [bool; 2] = [true, false];
const CLASS_IMPURITIES: [Impurity; 2] = [Impurity::Gini, Impurity::Entropy];

/// The fixed grid of a classifier in iteration order (first listed
/// parameter varies slowest).
pub fn hyper_grid(kind: Kind) -> Vec<Params> {
    let mut g = Vec::new();
    match kind {
        Kind::Bayes => g.extend(THIRDS.map(|smoothing| Params::Bayes { smoothing })),
        Kind::Lr => {
            for elastic_net in THIRDS {
                for reg in THIRDS {
                    for fit_intercept in BOOLS {
                        for max_iter in [10, 50, 100] {
                            g.push(Params::Lr {
                                elastic_net,
                                reg,
                                fit_intercept,
                                max_iter,
                            });
                        }
                    }
                }
            }
        }
        Kind::Tree => {
            for impurity in CLASS_IMPURITIES {
                for max_depth in [5, 15, 30] {
                    g.push(Params::Tree { impurity, max_depth });
                }
            }
        }
        Kind::Forest => {
            for impurity in CLASS_IMPURITIES {
                for num_trees in [10, 50, 100] {
                    for strategy in [SubsetStrategy::Log2, SubsetStrategy::Sqrt, SubsetStrategy::All] {
                        g.push(Params::Forest {
                            impurity,
                            num_trees,
                            strategy,
                        });
                    }
                }
            }
        }
        Kind::GradientBoosting => {
            for min_instances in [1, 5, 10] {
                for subsampling_rate in TENTHS {
                    for min_info_gain in TENTHS {
                        for step_size in TENTHS {
                            g.push(Params::GradientBoosting {
                                min_instances,
                                subsampling_rate,
                                min_info_gain,
                                step_size,
                            });
                        }
                    }
                }
            }
        }
        Kind::Svc => {
            for reg in THIRDS {
                for threshold in THIRDS {
                    for standardization in BOOLS {
                        for fit_intercept in BOOLS {
                            g.push(Params::Svc {
                                reg,
                                threshold,
                                standardization,
                                fit_intercept,
                            });
                        }
                    }
                }
            }
        }
    }
    g
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Fitted {
    Bayes(NbModel),
    Lr(LinearModel),
    Tree(Tree),
    Forest(Forest),
    GradientBoosting(GbtModel),
    Svc(SvcModel),
}

/// A feature matrix with its binned form when a tree learner needs it.
pub struct Prepared {
    pub x: Matrix,
    pub binned: Option<Binned>,
}

impl Prepared {
    pub fn new(x: Matrix, kind: Kind) -> Self {
        let binned = kind.uses_bins().then(|| Binned::new(&x));
        Prepared { x, binned }
    }

    fn bins(&self) -> Result<&Binned> {
        self.binned
            .as_ref()
            .ok_or_else(|| Error::input("tree learner on unbinned data"))
    }
}

/// Fits `params` on the given rows of `data`.
pub fn fit_rows(params: &Params, data: &Prepared, rows: &[u32], y: &[i64], seed: u64) -> Result<Fitted> {
    let sub = || {
        (
            data.x.take(rows),
            rows.iter().map(|&i| y[i as usize]).collect::<Vec<i64>>(),
        )
    };
    Ok(match params {
        Params::Bayes { smoothing } => {
            let (x, ys) = sub();
            Fitted::Bayes(linear::train_nb(&x, &ys, *smoothing)?)
        }
        Params::Lr {
            elastic_net,
            reg,
            fit_intercept,
            max_iter,
        } => {
            let (x, ys) = sub();
            Fitted::Lr(linear::train_lr(
                &x,
                &ys,
                &LrConfig {
                    elastic_net: *elastic_net,
                    reg: *reg,
                    fit_intercept: *fit_intercept,
                    max_iter: *max_iter,
                },
            )?)
        }
        Params::Svc {
            reg,
            threshold,
            standardization,
            fit_intercept,
        } => {
            let (x, ys) = sub();
            Fitted::Svc(linear::train_svc(
                &x,
                &ys,
                &SvcConfig {
                    reg: *reg,
                    threshold: *threshold,
                    standardization: *standardization,
                    fit_intercept: *fit_intercept,
                    num_iter: linear::SVC_ITERATIONS,
                },
            )?)
        }
        Params::Tree { impurity, max_depth } => Fitted::Tree(tree::train_tree(
            data.bins()?,
            rows,
            y,
            &TreeConfig::classifier(*impurity, *max_depth),
        )),
        Params::Forest {
            impurity,
            num_trees,
            strategy,
        } => Fitted::Forest(tree::train_forest(
            data.bins()?,
            rows,
            y,
            &ForestConfig {
                impurity: *impurity,
                num_trees: *num_trees,
                strategy: *strategy,
                max_depth: tree::FOREST_DEPTH,
                bootstrap: true,
            },
            seed,
        )),
        Params::GradientBoosting {
            min_instances,
            subsampling_rate,
            min_info_gain,
            step_size,
        } => Fitted::GradientBoosting(
            tree::train_gbt(
                data.bins()?,
                rows,
                y,
                &GbtConfig {
                    num_iter: tree::GBT_ITERATIONS,
                    max_depth: tree::GBT_DEPTH,
                    min_instances: *min_instances,
                    subsampling_rate: *subsampling_rate,
                    min_info_gain: *min_info_gain,
                    step_size: *step_size,
                },
                seed,
            )?
            .0,
        ),
    })
}

impl Fitted {
    pub fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        let rows = 0..x.n_rows;
        match self {
            Fitted::Bayes(m) => m.predict_proba(x),
            Fitted::Lr(m) => m.predict_proba(x),
            Fitted::Svc(m) => m.predict_proba(x),
            Fitted::Tree(t) => rows.map(|i| t.predict_value(x, i)).collect(),
            Fitted::Forest(f) => rows.map(|i| f.predict_value(x, i)).collect(),
            Fitted::GradientBoosting(g) => rows
                .map(|i| tree::sigmoid(g.margin(g.trees.iter().map(|t| t.predict_value(x, i)).sum())))
                .collect(),
        }
    }

    /// Predictions for a subset of prepared rows; tree models read the bins.
    pub fn predict_rows(&self, data: &Prepared, rows: &[u32]) -> Vec<f64> {
        match (self, data.binned.as_ref()) {
            (Fitted::Tree(t), Some(b)) => rows.iter().map(|&i| t.predict_code(b, i as usize)).collect(),
            (Fitted::Forest(f), Some(b)) => rows.iter().map(|&i| f.predict_code(b, i as usize)).collect(),
            (Fitted::GradientBoosting(g), Some(b)) => rows
                .iter()
                .map(|&i| tree::sigmoid(g.margin(g.trees.iter().map(|t| t.predict_code(b, i as usize)).sum())))
                .collect(),
            _ => self.predict_proba(&data.x.take(rows)),
        }
    }
}

/// A fitted classifier with the metadata needed to apply it again.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub kind: Kind,
    pub params: Params,
    pub fitted: Fitted,
    pub vector: String,
    pub features: Vec<String>,
    pub trained_on: String,
    pub target: String,
}

impl ClassifierModel {
    pub fn predict_proba(&self, x: &Matrix) -> Vec<f64> {
        self.fitted.predict_proba(x)
    }

    pub fn predict_table(&self, table: &ColumnTable) -> Result<Vec<f64>> {
        let names: Vec<&str> = self.features.iter().map(String::as_str).collect();
        Ok(self.predict_proba(&Matrix::from_table(table, &names)?))
    }
}

/// File stem of a persisted model.
pub fn model_name(kind: Kind, fs: &str, note: &str, dataset: &str, trained_on: &str, target: &str) -> String {
    format!(
        "classifier_model_of_type-{kind}-for_features-{fs}-{note}--for_dataset-{dataset}-based_on_dataset-{trained_on}-predicting_target-{target}-ht"
    )
}
