//! Stage-oriented, resumable orchestration.
//!
//! Layout under the root directory:
//! `raw/` input corpus, `data/` stage tables and selection artifacts,
//! `models/` fitted classifiers, `evaluations/` metric TSVs, `stats/`
//! significance tables and `manifests/` completion markers.

pub mod config;
mod predict;
mod stages;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use config::PipelineConfig;
pub use predict::{evaluation_rows, read_evaluations, report, EVAL_HEADER};

use crate::error::{Error, Result};
use crate::ingest::atomic_write;
use crate::schema::DatasetId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Dataprep,
    Fe00,
    Fe01,
    Fe02,
    Fe03,
    Fe04,
    Fe05,
    Fs00,
    Fs01,
    Pred00,
    Pred01,
    Stats,
}

impl Stage {
    pub const ALL: [Stage; 12] = [
        Stage::Dataprep,
        Stage::Fe00,
        Stage::Fe01,
        Stage::Fe02,
        Stage::Fe03,
        Stage::Fe04,
        Stage::Fe05,
        Stage::Fs00,
        Stage::Fs01,
        Stage::Pred00,
        Stage::Pred01,
        Stage::Stats,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Dataprep => "dataprep",
            Stage::Fe00 => "fe00",
            Stage::Fe01 => "fe01",
            Stage::Fe02 => "fe02",
            Stage::Fe03 => "fe03",
            Stage::Fe04 => "fe04",
            Stage::Fe05 => "fe05",
            Stage::Fs00 => "fs00",
            Stage::Fs01 => "fs01",
            Stage::Pred00 => "pred00",
            Stage::Pred01 => "pred01",
            Stage::Stats => "stats",
        }
    }

    /// Prefix of the tables this stage writes, if it writes tables.
    pub fn output_prefix(self) -> Option<&'static str> {
        match self {
            Stage::Dataprep => Some(""),
            Stage::Fe00 => Some("FE_"),
            Stage::Fe01 => Some("Encoding_"),
            Stage::Fe02 => Some("GraphBased_"),
            Stage::Fe03 => Some("Time_"),
            Stage::Fe04 => Some("Engagement_"),
            Stage::Fe05 => Some("Final_"),
            Stage::Fs00 => Some("Categorised_"),
            Stage::Fs01 => Some("ChiSq_"),
            Stage::Pred00 | Stage::Pred01 | Stage::Stats => None,
        }
    }

    /// Stages whose outputs this stage reads.
    pub fn inputs(self) -> &'static [Stage] {
        match self {
            Stage::Dataprep => &[],
            Stage::Fe00 => &[Stage::Dataprep],
            Stage::Fe01 => &[Stage::Fe00],
            Stage::Fe02 | Stage::Fe03 | Stage::Fe04 => &[Stage::Fe01],
            Stage::Fe05 => &[Stage::Fe01, Stage::Fe02, Stage::Fe03, Stage::Fe04],
            Stage::Fs00 => &[Stage::Fe05],
            Stage::Fs01 => &[Stage::Fs00],
            Stage::Pred00 => &[Stage::Fs01],
            Stage::Pred01 => &[Stage::Pred00],
            Stage::Stats => &[Stage::Pred01],
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| Error::input(format!("unknown stage {s:?}")))
    }
}

/// Written last for each (stage, dataset); its presence marks completion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub dataset: String,
    pub outputs: Vec<String>,
}

pub fn manifest_path(root: &Path, stage: Stage, id: &DatasetId) -> PathBuf {
    root.join("manifests").join(stage.as_str()).join(format!("{}.json", id.base_name()))
}

pub fn is_complete(root: &Path, stage: Stage, id: &DatasetId) -> bool {
    manifest_path(root, stage, id).is_file()
}

fn write_manifest(root: &Path, stage: Stage, id: &DatasetId, outputs: Vec<String>) -> Result<()> {
    let m = Manifest {
        stage: stage.as_str().into(),
        dataset: id.base_name(),
        outputs,
    };
    let mut json = serde_json::to_string_pretty(&m)?;
    json.push('\n');
    atomic_write(&manifest_path(root, stage, id), json.as_bytes())
}

/// Fails with the name of the first upstream artifact that is not complete.
pub(crate) fn require(cfg: &PipelineConfig, stage: Stage, id: &DatasetId) -> Result<()> {
    if is_complete(&cfg.root, stage, id) {
        return Ok(());
    }
    let what = match stage.output_prefix() {
        Some(p) => id.with_prefix(p).name(),
        None => format!("{} output for {}", stage, id.base_name()),
    };
    Err(Error::Missing(format!(
        "{what} (run stage {stage} first, or add its source to the configured datasets)"
    )))
}

/// Runs one stage over every configured dataset, skipping completed ones
/// unless CREATE_EVEN_IF_ALREADY_EXIST is set. Returns the number of
/// datasets processed.
pub fn run_stage(stage: Stage, cfg: &PipelineConfig) -> Result<usize> {
    cfg.validate()?;
    let datasets = cfg.datasets();
    for id in &datasets {
        for &up in stage.inputs() {
            require(cfg, up, id)?;
        }
    }
    let mut done = 0;
    if stage == Stage::Dataprep {
        let todo: Vec<DatasetId> = datasets
            .iter()
            .filter(|id| cfg.create_even_if_already_exist || !is_complete(&cfg.root, stage, id))
            .cloned()
            .collect();
        if !todo.is_empty() {
            for (id, outputs) in stages::dataprep(cfg, &todo)? {
                write_manifest(&cfg.root, stage, &id, outputs)?;
                done += 1;
            }
        }
        return Ok(done);
    }
    if stage == Stage::Stats {
        if cfg.create_even_if_already_exist || datasets.iter().any(|id| !is_complete(&cfg.root, stage, id)) {
            let outputs = predict::stats(cfg)?;
            for id in &datasets {
                write_manifest(&cfg.root, stage, id, outputs.clone())?;
            }
            done = datasets.len();
        }
        return Ok(done);
    }
    for id in &datasets {
        if !cfg.create_even_if_already_exist && is_complete(&cfg.root, stage, id) {
            tracing::debug!(%stage, dataset = %id.base_name(), "already complete");
            continue;
        }
        tracing::info!(%stage, dataset = %id.base_name(), "running");
        let outputs = match stage {
            Stage::Fe00 => stages::fe00(cfg, id)?,
            Stage::Fe01 => stages::fe01(cfg, id)?,
            Stage::Fe02 => stages::fe02(cfg, id)?,
            Stage::Fe03 => stages::fe03(cfg, id)?,
            Stage::Fe04 => stages::fe04(cfg, id)?,
            Stage::Fe05 => stages::fe05(cfg, id)?,
            Stage::Fs00 => stages::fs00(cfg, id)?,
            Stage::Fs01 => stages::fs01(cfg, id)?,
            Stage::Pred00 => predict::pred00(cfg, id)?,
            Stage::Pred01 => predict::pred01(cfg, id)?,
            Stage::Dataprep | Stage::Stats => unreachable!(),
        };
        write_manifest(&cfg.root, stage, id, outputs)?;
        done += 1;
    }
    Ok(done)
}

/// Every stage in order.
pub fn run_all(cfg: &PipelineConfig) -> Result<()> {
    for stage in Stage::ALL {
        let n = run_stage(stage, cfg)?;
        tracing::info!(%stage, processed = n, "stage finished");
    }
    Ok(())
}

/// One line per (dataset, stage) with its completion state.
pub fn status(cfg: &PipelineConfig) -> String {
    let mut s = String::from("dataset\tstage\tstate\n");
    for id in cfg.datasets() {
        for stage in Stage::ALL {
            let state = if is_complete(&cfg.root, stage, &id) { "complete" } else { "pending" };
            s.push_str(&format!("{}\t{}\t{}\n", id.base_name(), stage, state));
        }
    }
    s
}

pub(crate) fn rel(cfg: &PipelineConfig, path: &Path) -> String {
    path.strip_prefix(&cfg.root)
        .unwrap_or(path)
        .to_string_lossy()
        .replace('\\', "/")
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    atomic_write(path, text.as_bytes())
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
