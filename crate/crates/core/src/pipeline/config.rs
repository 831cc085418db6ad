use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learn::Kind;
use crate::schema::{DatasetId, Source, Technique, PERCENTS};
use crate::select::{NOTES, TOP_NS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub root: PathBuf,
    /// Raw 14-day interaction TSV, relative to `root` unless absolute.
    pub input: PathBuf,
    pub seed: u64,
    #[serde(alias = "CREATE_EVEN_IF_ALREADY_EXIST")]
    pub create_even_if_already_exist: bool,
    #[serde(alias = "DEV")]
    pub dev: bool,
    #[serde(alias = "REWRITE_EXISTING_MODELS")]
    pub rewrite_existing_models: bool,
    #[serde(alias = "RECREATE_MISSING_MODELS")]
    pub recreate_missing_models: bool,
    #[serde(alias = "IMPORT_DATASETS")]
    pub import_datasets: Vec<Source>,
    #[serde(alias = "SAMPLING_TECHNIQUES")]
    pub sampling_techniques: Vec<Technique>,
    #[serde(alias = "SAMPLING_PERCENTAGES")]
    pub sampling_percentages: Vec<u32>,
    #[serde(alias = "CLASSIFIER_NAMES")]
    pub classifier_names: Vec<Kind>,
    #[serde(alias = "TOP_NS")]
    pub top_ns: Vec<String>,
    #[serde(alias = "FEATURES_NOTES")]
    pub features_notes: Vec<String>,
    /// Sources whose datasets get models fitted in pred00.
    pub fit_sources: Vec<Source>,
    pub alpha: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            root: PathBuf::from("."),
            input: PathBuf::from("raw/interactions.tsv"),
            seed: 42,
            create_even_if_already_exist: false,
            dev: false,
            rewrite_existing_models: false,
            recreate_missing_models: false,
            import_datasets: Source::ALL.to_vec(),
            sampling_techniques: Technique::ALL.to_vec(),
            sampling_percentages: PERCENTS.to_vec(),
            classifier_names: Kind::ALL.to_vec(),
            top_ns: TOP_NS.iter().map(|s| s.to_string()).collect(),
            features_notes: NOTES.iter().map(|s| s.to_string()).collect(),
            fit_sources: vec![Source::Train],
            alpha: 0.05,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if let Some(p) = self.sampling_percentages.iter().find(|p| !PERCENTS.contains(p)) {
            return bad(format!("sampling percentage {p} not in {PERCENTS:?}"));
        }
        if let Some(t) = self.top_ns.iter().find(|t| !TOP_NS.contains(&t.as_str())) {
            return bad(format!("unknown top-n selection {t:?}"));
        }
        if let Some(n) = self.features_notes.iter().find(|n| !NOTES.contains(&n.as_str())) {
            return bad(format!("unknown features note {n:?}"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha {} outside (0, 1)", self.alpha));
        }
        if self.import_datasets.is_empty() || self.sampling_techniques.is_empty() {
            return bad("no datasets selected".into());
        }
        Ok(())
    }

    pub fn input_path(&self) -> PathBuf {
        if self.input.is_absolute() {
            self.input.clone()
        } else {
            self.root.join(&self.input)
        }
    }

    pub fn data_dir(&self) -> PathBuf {
        self.root.join("data")
    }

    /// Datasets in canonical order (source, technique, percent). DEV keeps
    /// only the 1% subsets.
    pub fn datasets(&self) -> Vec<DatasetId> {
        let mut out = Vec::new();
        for source in Source::ALL.into_iter().filter(|s| self.import_datasets.contains(s)) {
            for tech in Technique::ALL.into_iter().filter(|t| self.sampling_techniques.contains(t)) {
                if tech == Technique::Full {
                    if !self.dev {
                        out.push(DatasetId::full(source, ""));
                    }
                    continue;
                }
                for p in PERCENTS {
                    let wanted = if self.dev { p == 1 } else { self.sampling_percentages.contains(&p) };
                    if wanted {
                        out.push(DatasetId::sampled(source, tech, p, ""));
                    }
                }
            }
        }
        out
    }

    pub fn fit_datasets(&self) -> Vec<DatasetId> {
        self.datasets()
            .into_iter()
            .filter(|d| self.fit_sources.contains(&d.source))
            .collect()
    }

    /// 1% and 2% subsets used for cross-evaluation.
    pub fn eval_datasets(&self) -> Vec<DatasetId> {
        self.datasets()
            .into_iter()
            .filter(|d| d.technique != Technique::Full && d.percent <= 2)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dev_keeps_one_percent() {
        let cfg = PipelineConfig {
            dev: true,
            ..Default::default()
        };
        let d = cfg.datasets();
        assert_eq!(d.len(), 20);
        assert!(d.iter().all(|x| x.percent == 1));
        assert_eq!(PipelineConfig::default().datasets().len(), 84);
    }

    #[test]
    fn toml_aliases() {
        let cfg = PipelineConfig::from_toml("DEV = true\nCLASSIFIER_NAMES = [\"GradientBoosting\"]\nseed = 3\n").unwrap();
        assert!(cfg.dev);
        assert_eq!(cfg.classifier_names, vec![Kind::GradientBoosting]);
        assert!(PipelineConfig::from_toml("TOP_NS = [\"top_7\"]").is_err());
        assert!(PipelineConfig::from_toml("bogus = 1").is_err());
    }
}
