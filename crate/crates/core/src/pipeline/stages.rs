//! dataprep and the feature / selection stages.

use std::collections::HashSet;
use std::fs::File;
use std::path::PathBuf;

use super::{read_text, rel, require, write_text, PipelineConfig, Stage};
use crate::error::{Error, Result};
use crate::features::encode::{derive_labels, encode_all};
use crate::features::graph::{annotate_graph_features, build_engagement_graphs, build_follow_graph, follower_ratios};
use crate::features::history::{designate_history, history_features, merge_final};
use crate::features::registry::KEY_COLUMNS;
use crate::features::time::{oracle_frequencies, prepend_history_48h, window_features, HISTORY_ONLY};
use crate::ingest::{data_path, parse_tsv, read_named, schema_path, write_named, TsvOptions};
use crate::rng::hash_seed;
use crate::sampling::SamplePlan;
use crate::schema::{DatasetId, Source, Technique, TWEET_ID};
use crate::select::{build_vectors, Categorisation, VectorRegistry};
use crate::synthgen::split_by_week;
use crate::table::{Column, ColumnTable};

fn read(cfg: &PipelineConfig, id: &DatasetId, prefix: &str) -> Result<ColumnTable> {
    read_named(&id.with_prefix(prefix).name(), &cfg.data_dir())
}

fn write(cfg: &PipelineConfig, table: &ColumnTable, id: &DatasetId, prefix: &str) -> Result<Vec<String>> {
    let name = id.with_prefix(prefix).name();
    let dir = cfg.data_dir();
    write_named(table, &name, &dir, true)?;
    Ok(vec![rel(cfg, &schema_path(&dir, &name)), rel(cfg, &data_path(&dir, &name))])
}

fn train_of(id: &DatasetId) -> DatasetId {
    id.with_source(Source::Train).with_prefix("")
}

/// Key columns followed by the columns of `after` missing from `before`.
fn new_columns(before: &ColumnTable, after: ColumnTable) -> Result<ColumnTable> {
    let old: HashSet<&str> = before.names().iter().map(String::as_str).collect();
    let mut keep: Vec<&str> = KEY_COLUMNS.to_vec();
    keep.extend(after.names().iter().map(String::as_str).filter(|n| !old.contains(n)));
    after.select(&keep)
}

/// Loads the raw corpus, splits it into the four sources and writes every
/// requested dataset.
pub(super) fn dataprep(cfg: &PipelineConfig, todo: &[DatasetId]) -> Result<Vec<(DatasetId, Vec<String>)>> {
    let path = cfg.input_path();
    let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
    let raw = parse_tsv(std::io::BufReader::new(file), &TsvOptions::default())?;
    let (train, holdout) = split_by_week(&raw)?;
    let ids = holdout.strs(TWEET_ID)?;
    let is_test: Vec<bool> = ids.iter().map(|t| hash_seed(cfg.seed, t) & 1 == 1).collect();
    let is_val: Vec<bool> = is_test.iter().map(|t| !t).collect();
    let val = holdout.filter(&is_val);
    let test = holdout.filter(&is_test);
    tracing::info!(
        train = train.row_count(),
        val = val.row_count(),
        test = test.row_count(),
        "split corpus"
    );
    let mut out = Vec::new();
    for id in todo {
        let src = match id.source {
            Source::Train => &train,
            Source::Val => &val,
            Source::Test => &test,
            Source::ValTest => &holdout,
        };
        let table = if id.technique == Technique::Full {
            src.clone()
        } else {
            SamplePlan::new(id.technique, id.percent, hash_seed(cfg.seed, &id.base_name()))?.apply(src)?
        };
        out.push((id.clone(), write(cfg, &table, id, "")?));
    }
    Ok(out)
}

pub(super) fn fe00(cfg: &PipelineConfig, id: &DatasetId) -> Result<Vec<String>> {
    let t = derive_labels(&read(cfg, id, "")?)?;
    write(cfg, &t, id, "FE_")
}

pub(super) fn fe01(cfg: &PipelineConfig, id: &DatasetId) -> Result<Vec<String>> {
    let t = encode_all(&read(cfg, id, "FE_")?)?;
    write(cfg, &t, id, "Encoding_")
}

/// Sources whose rows may inform the follow graph of `source`.
fn follow_scope(source: Source) -> &'static [Source] {
    match source {
        Source::Train => &[Source::Train],
        Source::Val => &[Source::Train, Source::Val],
        Source::Test => &[Source::Train, Source::Val, Source::Test],
        Source::ValTest => &[Source::Train, Source::Val, Source::Test, Source::ValTest],
    }
}

pub(super) fn fe02(cfg: &PipelineConfig, id: &DatasetId) -> Result<Vec<String>> {
    let target = read(cfg, id, "Encoding_")?;
    let mut scope = Vec::new();
    for &s in follow_scope(id.source) {
        if s == id.source {
            continue;
        }
        let other = id.with_source(s);
        require(cfg, Stage::Fe01, &other)?;
        scope.push(read(cfg, &other, "Encoding_")?);
    }
    let mut tables: Vec<&ColumnTable> = scope.iter().collect();
    tables.push(&target);
    let follow = build_follow_graph(&tables)?;
    let engagement = if id.source == Source::Train {
        build_engagement_graphs(&target)?
    } else {
        require(cfg, Stage::Fe01, &train_of(id))?;
        build_engagement_graphs(&read(cfg, &train_of(id), "Encoding_")?)?
    };
    let t = annotate_graph_features(&target, &follow, &engagement, id.source == Source::Train)?;
    let t = follower_ratios(&t)?;
    write(cfg, &new_columns(&target, t)?, id, "GraphBased_")
}

pub(super) fn fe03(cfg: &PipelineConfig, id: &DatasetId) -> Result<Vec<String>> {
    let target = read(cfg, id, "Encoding_")?;
    let oracle = new_columns(&target, oracle_frequencies(&target)?)?;
    let out = if id.source == Source::Train {
        let w = new_columns(&target, window_features(&target)?)?;
        w.hstack(oracle.drop_columns(&KEY_COLUMNS))?
    } else {
        require(cfg, Stage::Fe01, &train_of(id))?;
        let train = read(cfg, &train_of(id), "Encoding_")?;
        let (aug, k) = prepend_history_48h(&train, &target)?;
        let mut w = new_columns(&target, window_features(&aug)?)?;
        if !w.has(HISTORY_ONLY) {
            return Err(Error::InvalidTable("history flag lost in window features".into()));
        }
        let pad: Vec<usize> = (0..k).map(|_| usize::MAX).chain(0..target.row_count()).collect();
        for (name, col) in oracle.drop_columns(&KEY_COLUMNS).columns() {
            let Column::Int(v) = col else {
                return Err(Error::InvalidTable(format!("oracle column {name} is not integer")));
            };
            let padded = pad.iter().map(|&i| if i == usize::MAX { 0 } else { v[i] }).collect();
            w.push(name, Column::Int(padded))?;
        }
        w
    };
    write(cfg, &out, id, "Time_")
}

fn history_split(cfg: &PipelineConfig, id: &DatasetId, target: &ColumnTable) -> Result<(ColumnTable, ColumnTable)> {
    let train = if id.source == Source::Train {
        target.clone()
    } else {
        require(cfg, Stage::Fe01, &train_of(id))?;
        read(cfg, &train_of(id), "Encoding_")?
    };
    let split = designate_history(&train, target, id.source)?;
    Ok((split.history, split.remainder))
}

pub(super) fn fe04(cfg: &PipelineConfig, id: &DatasetId) -> Result<Vec<String>> {
    let target = read(cfg, id, "Encoding_")?;
    let (history, remainder) = history_split(cfg, id, &target)?;
    let t = history_features(&history, &remainder)?;
    write(cfg, &new_columns(&remainder, t)?, id, "Engagement_")
}

pub(super) fn fe05(cfg: &PipelineConfig, id: &DatasetId) -> Result<Vec<String>> {
    let target = read(cfg, id, "Encoding_")?;
    let (_, base) = history_split(cfg, id, &target)?;
    let parts = [
        read(cfg, id, "GraphBased_")?,
        read(cfg, id, "Time_")?,
        read(cfg, id, "Engagement_")?,
    ];
    let t = merge_final(&base, &parts.iter().collect::<Vec<_>>())?;
    write(cfg, &t, id, "Final_")
}

fn categorisation_path(cfg: &PipelineConfig, train: &DatasetId) -> PathBuf {
    cfg.data_dir()
        .join(format!("Categorised_{}.categorisation.json", train.base_name()))
}

fn vectors_path(cfg: &PipelineConfig, train: &DatasetId) -> PathBuf {
    cfg.data_dir().join(format!("ChiSq_{}.vectors.json", train.base_name()))
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

pub(super) fn fs00(cfg: &PipelineConfig, id: &DatasetId) -> Result<Vec<String>> {
    let train = train_of(id);
    let path = categorisation_path(cfg, &train);
    let cat: Categorisation = if path.is_file() && !cfg.rewrite_existing_models {
        serde_json::from_str(&read_text(&path)?)?
    } else {
        require(cfg, Stage::Fe05, &train)?;
        let c = Categorisation::fit(&read(cfg, &train, "Final_")?)?;
        write_text(&path, &to_json(&c)?)?;
        c
    };
    let t = cat.apply(&read(cfg, id, "Final_")?)?;
    let mut out = write(cfg, &t, id, "Categorised_")?;
    out.push(rel(cfg, &path));
    Ok(out)
}

/// Categorisation fitted on the train subset matching `id`.
pub(super) fn load_categorisation(cfg: &PipelineConfig, id: &DatasetId) -> Result<Categorisation> {
    let path = categorisation_path(cfg, &train_of(id));
    if !path.is_file() {
        return Err(Error::Missing(rel(cfg, &path)));
    }
    Ok(serde_json::from_str(&read_text(&path)?)?)
}

pub(super) fn load_vectors(cfg: &PipelineConfig, id: &DatasetId) -> Result<VectorRegistry> {
    let path = vectors_path(cfg, &train_of(id));
    if !path.is_file() {
        return Err(Error::Missing(rel(cfg, &path)));
    }
    Ok(serde_json::from_str(&read_text(&path)?)?)
}

pub(super) fn fs01(cfg: &PipelineConfig, id: &DatasetId) -> Result<Vec<String>> {
    let train = train_of(id);
    let path = vectors_path(cfg, &train);
    if !path.is_file() || cfg.rewrite_existing_models {
        require(cfg, Stage::Fs00, &train)?;
        let cat: Categorisation = serde_json::from_str(&read_text(&categorisation_path(cfg, &train))?)?;
        let reg = build_vectors(&read(cfg, &train, "Categorised_")?, &cat.output_names())?;
        write_text(&path, &to_json(&reg)?)?;
    }
    let t = read(cfg, id, "Categorised_")?;
    let mut out = write(cfg, &t, id, "ChiSq_")?;
    out.push(rel(cfg, &path));
    Ok(out)
}
