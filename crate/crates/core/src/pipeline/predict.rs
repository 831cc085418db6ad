//! Model fitting, cross-evaluation, evaluation TSVs and the significance suite.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::stages::{load_categorisation, load_vectors};
use super::{is_complete, read_text, rel, write_text, PipelineConfig, Stage};
use crate::error::{Error, Result};
use crate::ingest::read_named;
use crate::learn::{cross_validate, fit_rows, hyper_grid, model_name, ClassifierModel, Kind, Matrix, Params, Prepared};
use crate::learn::tuning::FOLDS;
use crate::metrics::{prauc, rce};
use crate::rng::hash_seed;
use crate::schema::{DatasetId, Source, Target};
use crate::select::vector_name;
use crate::stats::{run_factor_suite, EvalRecord};
use crate::table::ColumnTable;

pub const EVAL_HEADER: &str = "metric\ttarget\talgorithm\tnote\tfeature_selection\ttrained_on\tevaluated_on\tvalue";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Tuned {
    params: Params,
    /// Mean fold RCE per grid cell; None where a cell could not be scored.
    scores: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModelMeta {
    params: Params,
    cv_scores: Vec<Option<f64>>,
    tuned_on: String,
    prauc: Option<f64>,
    rce: Option<f64>,
}

/// One (classifier, feature set, target) combination to fit on a dataset.
struct Job {
    kind: Kind,
    note: String,
    fs: String,
    target: Target,
}

fn jobs(cfg: &PipelineConfig) -> Vec<Job> {
    let mut v = Vec::new();
    for &kind in &cfg.classifier_names {
        for note in &cfg.features_notes {
            for fs in &cfg.top_ns {
                for target in Target::ALL {
                    v.push(Job {
                        kind,
                        note: note.clone(),
                        fs: fs.clone(),
                        target,
                    });
                }
            }
        }
    }
    v
}

fn model_dir(cfg: &PipelineConfig, kind: Kind) -> PathBuf {
    cfg.root.join("models").join(kind.as_str())
}

fn job_name(job: &Job, id: &DatasetId) -> String {
    let train = id.with_source(Source::Train).with_prefix("");
    model_name(job.kind, &job.fs, &job.note, &id.base_name(), &train.base_name(), job.target.as_str())
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn chisq(cfg: &PipelineConfig, id: &DatasetId) -> Result<ColumnTable> {
    read_named(&id.with_prefix("ChiSq_").name(), &cfg.data_dir())
}

fn two_classes(y: &[i64]) -> bool {
    y.iter().any(|&v| v == 1) && y.iter().any(|&v| v != 1)
}

/// Scores one set of predictions; None when either metric is undefined.
fn score(y: &[i64], p: &[f64]) -> Option<(f64, f64)> {
    match (prauc(y, p), rce(y, p)) {
        (Ok(a), Ok(b)) if a.is_finite() && b.is_finite() => Some((a, b)),
        _ => None,
    }
}

fn record(model: &ClassifierModel, note: &str, fs: &str, trained_on: &str, on: &DatasetId, s: (f64, f64)) -> EvalRecord {
    EvalRecord {
        algorithm: model.kind.as_str().into(),
        note: note.into(),
        feature_selection: fs.into(),
        trained_on: trained_on.into(),
        to_technique: on.technique.as_str().into(),
        to_percent: on.percent.to_string(),
        evaluated_on: on.base_name(),
        target: model.target.clone(),
        prauc: s.0,
        rce: s.1,
    }
}

fn tune(cfg: &PipelineConfig, job: &Job, train: &DatasetId, features: &[&str]) -> Result<(Tuned, PathBuf)> {
    let stem = format!("{}-{}-{}-{}", job.fs, job.note, train.base_name(), job.target);
    let path = model_dir(cfg, job.kind).join("tuned").join(format!("{stem}.json"));
    if path.is_file() && !cfg.rewrite_existing_models {
        return Ok((serde_json::from_str(&read_text(&path)?)?, path));
    }
    if !is_complete(&cfg.root, Stage::Fs01, train) {
        return Err(Error::Missing(format!(
            "{} (tuning needs the matching train subset)",
            train.with_prefix("ChiSq_").name()
        )));
    }
    let t = chisq(cfg, train)?;
    let y = t.ints(job.target.label())?;
    let grid = hyper_grid(job.kind);
    let tuned = if two_classes(y) {
        let data = Prepared::new(Matrix::from_table(&t, features)?, job.kind);
        let cv = cross_validate(&data, y, &grid, FOLDS, hash_seed(cfg.seed, &format!("cv-{stem}")))?;
        tracing::info!(kind = %job.kind, %stem, best = cv.best, score = cv.scores[cv.best], "tuned");
        Tuned {
            params: grid[cv.best].clone(),
            scores: cv.scores.iter().map(|s| s.is_finite().then_some(*s)).collect(),
        }
    } else {
        tracing::warn!(kind = %job.kind, %stem, "single-class train subset, using the first grid cell");
        Tuned {
            params: grid[0].clone(),
            scores: vec![None; grid.len()],
        }
    };
    write_text(&path, &json(&tuned)?)?;
    Ok((tuned, path))
}

/// Fits (or reloads) every configured model on `id` and self-evaluates it.
pub(super) fn pred00(cfg: &PipelineConfig, id: &DatasetId) -> Result<Vec<String>> {
    if !cfg.fit_sources.contains(&id.source) {
        return Ok(Vec::new());
    }
    let base = id.with_prefix("");
    let table = chisq(cfg, &base)?;
    let registry = load_vectors(cfg, &base)?;
    let train = base.with_source(Source::Train);
    let mut outputs = Vec::new();
    let mut records = Vec::new();
    let mut prepared: BTreeMap<(Kind, String), Prepared> = BTreeMap::new();
    for job in jobs(cfg) {
        let name = job_name(&job, &base);
        let dir = model_dir(cfg, job.kind);
        let model_path = dir.join(format!("{name}.json"));
        let meta_path = dir.join(format!("{name}.meta.json"));
        let vname = vector_name(&job.fs, &job.note, job.target);
        let features = registry.feature_names(&vname)?;
        let y = table.ints(job.target.label())?;
        let model: ClassifierModel = if model_path.is_file() && !cfg.rewrite_existing_models {
            serde_json::from_str(&read_text(&model_path)?)?
        } else if meta_path.is_file() && !cfg.recreate_missing_models && !cfg.rewrite_existing_models {
            tracing::info!(%name, "model missing but evaluated, not recreated");
            continue;
        } else {
            if !two_classes(y) {
                tracing::warn!(%name, "single-class target, no model fitted");
                continue;
            }
            let (tuned, tuned_path) = tune(cfg, &job, &train, &features)?;
            let key = (job.kind, vname.clone());
            let data = prepared
                .entry(key)
                .or_insert_with(|| Prepared::new(Matrix::from_table(&table, &features).expect("columns checked"), job.kind));
            let rows: Vec<u32> = (0..table.row_count() as u32).collect();
            let fitted = match fit_rows(&tuned.params, data, &rows, y, hash_seed(cfg.seed, &name)) {
                Ok(f) => f,
                Err(e) => {
                    tracing::warn!(%name, error = %e, "fit failed");
                    continue;
                }
            };
            let model = ClassifierModel {
                kind: job.kind,
                params: tuned.params.clone(),
                fitted,
                vector: vname.clone(),
                features: features.iter().map(|s| s.to_string()).collect(),
                trained_on: base.base_name(),
                target: job.target.as_str().into(),
            };
            write_text(&model_path, &json(&model)?)?;
            let s = score(y, &model.predict_table(&table)?);
            let meta = ModelMeta {
                params: tuned.params,
                cv_scores: tuned.scores,
                tuned_on: train.base_name(),
                prauc: s.map(|x| x.0),
                rce: s.map(|x| x.1),
            };
            write_text(&meta_path, &json(&meta)?)?;
            outputs.push(rel(cfg, &tuned_path));
            model
        };
        outputs.push(rel(cfg, &model_path));
        outputs.push(rel(cfg, &meta_path));
        if let Some(s) = score(y, &model.predict_table(&table)?) {
            records.push(record(&model, &job.note, &job.fs, &base.base_name(), &base, s));
        }
    }
    let path = cfg.root.join("evaluations").join("pred00").join(format!("{}.tsv", base.base_name()));
    write_text(&path, &evaluation_rows(&records))?;
    outputs.push(rel(cfg, &path));
    outputs.sort();
    outputs.dedup();
    Ok(outputs)
}

/// Evaluates every model fitted on `id` on all complete 1% and 2% subsets.
/// Each subset is categorised with the rules the models were trained under.
pub(super) fn pred01(cfg: &PipelineConfig, id: &DatasetId) -> Result<Vec<String>> {
    if !cfg.fit_sources.contains(&id.source) {
        return Ok(Vec::new());
    }
    let base = id.with_prefix("");
    let cat = load_categorisation(cfg, &base)?;
    let targets: Vec<(DatasetId, ColumnTable)> = cfg
        .eval_datasets()
        .into_iter()
        .filter(|e| is_complete(&cfg.root, Stage::Fs01, e))
        .map(|e| {
            let fin = read_named(&e.with_prefix("Final_").name(), &cfg.data_dir())?;
            cat.apply(&fin).map(|t| (e, t))
        })
        .collect::<Result<_>>()?;
    let mut records = Vec::new();
    for job in jobs(cfg) {
        let name = job_name(&job, &base);
        let path = model_dir(cfg, job.kind).join(format!("{name}.json"));
        if !path.is_file() {
            continue;
        }
        let model: ClassifierModel = serde_json::from_str(&read_text(&path)?)?;
        for (e, t) in &targets {
            let y = t.ints(job.target.label())?;
            match score(y, &model.predict_table(t)?) {
                Some(s) => records.push(record(&model, &job.note, &job.fs, &base.base_name(), e, s)),
                None => tracing::info!(%name, on = %e.base_name(), "metric undefined, record dropped"),
            }
        }
    }
    let path = cfg.root.join("evaluations").join("pred01").join(format!("{}.tsv", base.base_name()));
    write_text(&path, &evaluation_rows(&records))?;
    Ok(vec![rel(cfg, &path)])
}

/// Two lines per record, PRAUC then RCE.
pub fn evaluation_rows(records: &[EvalRecord]) -> String {
    let mut s = format!("{EVAL_HEADER}\n");
    for r in records {
        for (m, v) in [("PRAUC", r.prauc), ("RCE", r.rce)] {
            let _ = writeln!(
                s,
                "{m}\t{}\t{}\t{}\t{}\t{}\t{}\t{v}",
                r.target, r.algorithm, r.note, r.feature_selection, r.trained_on, r.evaluated_on
            );
        }
    }
    s
}

/// Parses an evaluation TSV back into records. A record missing either
/// metric is dropped.
pub fn read_evaluations(text: &str) -> Result<Vec<EvalRecord>> {
    let mut lines = text.lines();
    if lines.next() != Some(EVAL_HEADER) {
        return Err(Error::input("bad evaluation header"));
    }
    let mut pending: BTreeMap<Vec<String>, (Option<f64>, Option<f64>)> = BTreeMap::new();
    let mut order = Vec::new();
    for (n, line) in lines.enumerate() {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 8 {
            return Err(Error::Parse {
                line: n + 2,
                field: f.len(),
                message: "expected 8 fields".into(),
            });
        }
        let v: f64 = f[7].parse().map_err(|_| Error::Parse {
            line: n + 2,
            field: 8,
            message: format!("bad value {:?}", f[7]),
        })?;
        let key: Vec<String> = f[1..7].iter().map(|s| s.to_string()).collect();
        let e = pending.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            (None, None)
        });
        match f[0] {
            "PRAUC" => e.0 = Some(v),
            "RCE" => e.1 = Some(v),
            other => return Err(Error::input(format!("unknown metric {other:?}"))),
        }
    }
    let mut out = Vec::new();
    for key in order {
        let (Some(p), Some(r)) = pending[&key] else {
            tracing::info!(?key, "record with a single metric dropped");
            continue;
        };
        let on = DatasetId::parse_base(&key[5], "")?;
        out.push(EvalRecord {
            target: key[0].clone(),
            algorithm: key[1].clone(),
            note: key[2].clone(),
            feature_selection: key[3].clone(),
            trained_on: key[4].clone(),
            to_technique: on.technique.as_str().into(),
            to_percent: on.percent.to_string(),
            evaluated_on: key[5].clone(),
            prauc: p,
            rce: r,
        });
    }
    Ok(out)
}

fn tsv_files(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "tsv"))
        .collect();
    v.sort();
    Ok(v)
}

fn cross_records(cfg: &PipelineConfig) -> Result<Vec<EvalRecord>> {
    let mut out = Vec::new();
    for p in tsv_files(&cfg.root.join("evaluations").join("pred01"))? {
        out.extend(read_evaluations(&read_text(&p)?)?);
    }
    Ok(out)
}

pub(super) fn stats(cfg: &PipelineConfig) -> Result<Vec<String>> {
    let suite = run_factor_suite(&cross_records(cfg)?, cfg.alpha)?;
    let dir = cfg.root.join("stats");
    let mut skipped = String::from("metric\ttarget\twithin\treason\n");
    for (m, t, f, r) in &suite.skipped {
        let _ = writeln!(skipped, "{m}\t{t}\t{f}\t{r}");
    }
    let files = [
        ("friedman.tsv", suite.friedman_tsv()),
        ("posthoc.tsv", suite.posthoc_tsv()),
        ("skipped.tsv", skipped),
    ];
    let mut out = Vec::new();
    for (name, text) in files {
        let p = dir.join(name);
        write_text(&p, &text)?;
        out.push(rel(cfg, &p));
    }
    Ok(out)
}

fn best_table(records: &[EvalRecord], metric: &str) -> String {
    let mut s = format!("target\talgorithm\tnote\tfs\ttrained\tevaluated\t{metric}\n");
    let mut targets: Vec<&str> = records.iter().map(|r| r.target.as_str()).collect();
    targets.sort_by_key(|t| Target::ALL.iter().position(|x| x.as_str() == *t).unwrap_or(usize::MAX));
    targets.dedup();
    for t in targets {
        let mut best: Option<&EvalRecord> = None;
        for r in records.iter().filter(|r| r.target == t) {
            if best.map_or(true, |b| r.metric(metric) > b.metric(metric)) {
                best = Some(r);
            }
        }
        if let Some(r) = best {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.target,
                r.algorithm,
                r.note,
                r.feature_selection,
                r.trained_on,
                r.evaluated_on,
                r.metric(metric)
            );
        }
    }
    s
}

/// Best results per target and the factor statistics.
pub fn report(cfg: &PipelineConfig) -> Result<String> {
    let records = cross_records(cfg)?;
    if records.is_empty() {
        return Err(Error::Missing("evaluation records (run pred01 first)".into()));
    }
    let suite = run_factor_suite(&records, cfg.alpha)?;
    Ok(format!(
        "# best PRAUC\n{}\n# best RCE\n{}\n# friedman\n{}\n# posthoc\n{}",
        best_table(&records, "PRAUC"),
        best_table(&records, "RCE"),
        suite.friedman_tsv(),
        suite.posthoc_tsv()
    ))
}
