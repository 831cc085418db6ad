//! Parsing of the challenge TSV format and persistence of stage outputs.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::*;
use crate::table::{Column, ColumnTable, ColumnType};

/// Delimiters of the input format.
#[derive(Debug, Clone, Copy)]
pub struct TsvOptions {
    pub field_separator: char,
    /// Separator inside list-valued fields.
    pub sub_separator: char,
}

impl Default for TsvOptions {
    fn default() -> Self {
        TsvOptions {
            field_separator: '\t',
            sub_separator: ' ',
        }
    }
}

/// One viewer/tweet instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionRecord {
    pub text_tokens: String,
    pub hashtags: Vec<String>,
    pub tweet_id: String,
    pub present_media: Vec<Media>,
    pub present_links: Vec<String>,
    pub present_domains: Vec<String>,
    pub tweet_type: TweetType,
    pub language: String,
    pub tweet_timestamp: i64,
    pub engaged_with_user_id: String,
    pub engaged_with_user_follower_count: i64,
    pub engaged_with_user_following_count: i64,
    pub engaged_with_user_is_verified: bool,
    pub engaged_with_user_account_creation: i64,
    pub engaging_user_id: String,
    pub engaging_user_follower_count: i64,
    pub engaging_user_following_count: i64,
    pub engaging_user_is_verified: bool,
    pub engaging_user_account_creation: i64,
    pub engagee_follows_engager: bool,
    pub reply_ts: Option<i64>,
    pub retweet_ts: Option<i64>,
    pub quote_ts: Option<i64>,
    pub like_ts: Option<i64>,
}

fn raw_types() -> [ColumnType; 24] {
    use ColumnType::*;
    [
        Str, StrSet, Str, StrList, StrSet, StrSet, Str, Str, Int, Str, Int, Int, Bool, Int, Str,
        Int, Int, Bool, Int, Bool, OptInt, OptInt, OptInt, OptInt,
    ]
}

/// Builds a table in the raw schema from records.
pub fn records_to_table(records: &[InteractionRecord]) -> ColumnTable {
    let n = records.len();
    let strs = |f: &dyn Fn(&InteractionRecord) -> &String| {
        Column::Str(records.iter().map(|r| f(r).clone()).collect())
    };
    let sets = |f: &dyn Fn(&InteractionRecord) -> &Vec<String>| {
        Column::set(records.iter().map(|r| f(r).clone()).collect())
    };
    let ints = |f: &dyn Fn(&InteractionRecord) -> i64| Column::Int(records.iter().map(f).collect());
    let bools = |f: &dyn Fn(&InteractionRecord) -> bool| Column::Bool(records.iter().map(f).collect());
    let opts = |f: &dyn Fn(&InteractionRecord) -> Option<i64>| {
        Column::OptInt(records.iter().map(f).collect())
    };
    let cols = vec![
        strs(&|r| &r.text_tokens),
        sets(&|r| &r.hashtags),
        strs(&|r| &r.tweet_id),
        Column::StrList(
            records
                .iter()
                .map(|r| r.present_media.iter().map(|m| m.as_str().to_string()).collect())
                .collect(),
        ),
        sets(&|r| &r.present_links),
        sets(&|r| &r.present_domains),
        Column::Str(records.iter().map(|r| r.tweet_type.as_str().to_string()).collect()),
        strs(&|r| &r.language),
        ints(&|r| r.tweet_timestamp),
        strs(&|r| &r.engaged_with_user_id),
        ints(&|r| r.engaged_with_user_follower_count),
        ints(&|r| r.engaged_with_user_following_count),
        bools(&|r| r.engaged_with_user_is_verified),
        ints(&|r| r.engaged_with_user_account_creation),
        strs(&|r| &r.engaging_user_id),
        ints(&|r| r.engaging_user_follower_count),
        ints(&|r| r.engaging_user_following_count),
        bools(&|r| r.engaging_user_is_verified),
        ints(&|r| r.engaging_user_account_creation),
        bools(&|r| r.engagee_follows_engager),
        opts(&|r| r.reply_ts),
        opts(&|r| r.retweet_ts),
        opts(&|r| r.quote_ts),
        opts(&|r| r.like_ts),
    ];
    let mut t = ColumnTable::with_rows(n);
    for (name, c) in RAW_COLUMNS.iter().zip(cols) {
        t.push(*name, c).expect("raw schema is consistent");
    }
    t
}

/// Reads row `i` of a raw-schema table back into a record.
pub fn record_at(t: &ColumnTable, i: usize) -> Result<InteractionRecord> {
    let s = |n: &str| -> Result<String> { Ok(t.strs(n)?[i].clone()) };
    let set = |n: &str| -> Result<Vec<String>> { Ok(t.sets(n)?[i].clone()) };
    let int = |n: &str| -> Result<i64> { Ok(t.ints(n)?[i]) };
    let b = |n: &str| -> Result<bool> { Ok(t.bools(n)?[i]) };
    let o = |n: &str| -> Result<Option<i64>> { Ok(t.opt_ints(n)?[i]) };
    let media = t.lists(PRESENT_MEDIA)?[i]
        .iter()
        .map(|m| m.parse::<Media>().map_err(Error::input))
        .collect::<Result<Vec<_>>>()?;
    Ok(InteractionRecord {
        text_tokens: s(TEXT_TOKENS)?,
        hashtags: set(HASHTAGS)?,
        tweet_id: s(TWEET_ID)?,
        present_media: media,
        present_links: set(PRESENT_LINKS)?,
        present_domains: set(PRESENT_DOMAINS)?,
        tweet_type: t.strs(TWEET_TYPE)?[i].parse().map_err(Error::input)?,
        language: s(LANGUAGE)?,
        tweet_timestamp: int(TWEET_TIMESTAMP)?,
        engaged_with_user_id: s(ENGAGED_ID)?,
        engaged_with_user_follower_count: int(ENGAGED_FOLLOWERS)?,
        engaged_with_user_following_count: int(ENGAGED_FOLLOWING)?,
        engaged_with_user_is_verified: b(ENGAGED_VERIFIED)?,
        engaged_with_user_account_creation: int(ENGAGED_CREATION)?,
        engaging_user_id: s(ENGAGING_ID)?,
        engaging_user_follower_count: int(ENGAGING_FOLLOWERS)?,
        engaging_user_following_count: int(ENGAGING_FOLLOWING)?,
        engaging_user_is_verified: b(ENGAGING_VERIFIED)?,
        engaging_user_account_creation: int(ENGAGING_CREATION)?,
        engagee_follows_engager: b(FOLLOWS)?,
        reply_ts: o(REPLY_TS)?,
        retweet_ts: o(RETWEET_TS)?,
        quote_ts: o(QUOTE_TS)?,
        like_ts: o(LIKE_TS)?,
    })
}

enum Builder {
    Int(Vec<i64>),
    OptInt(Vec<Option<i64>>),
    Bool(Vec<bool>),
    Str(Vec<String>),
    Set(Vec<Vec<String>>),
    List(Vec<Vec<String>>),
}

fn parse_nonneg(s: &str) -> std::result::Result<i64, String> {
    let v: i64 = s.parse().map_err(|_| format!("not an integer: {s:?}"))?;
    if v < 0 {
        return Err(format!("negative value {v}"));
    }
    Ok(v)
}

fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("not a boolean: {s:?}")),
    }
}

/// Parses the 24-column challenge format.
pub fn parse_tsv<R: Read>(mut input: R, opts: &TsvOptions) -> Result<ColumnTable> {
    if opts.field_separator == opts.sub_separator {
        return Err(Error::InvalidConfig(
            "field and sub separators must differ".into(),
        ));
    }
    let mut text = String::new();
    input
        .read_to_string(&mut text)
        .map_err(|e| Error::io("<input>", e))?;
    let mut builders: Vec<Builder> = raw_types()
        .iter()
        .map(|t| match t {
            ColumnType::Int => Builder::Int(Vec::new()),
            ColumnType::OptInt => Builder::OptInt(Vec::new()),
            ColumnType::Bool => Builder::Bool(Vec::new()),
            ColumnType::Str => Builder::Str(Vec::new()),
            ColumnType::StrSet => Builder::Set(Vec::new()),
            ColumnType::StrList => Builder::List(Vec::new()),
            ColumnType::Float => unreachable!(),
        })
        .collect();
    let mut rows = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let fields: Vec<&str> = line.split(opts.field_separator).collect();
        if fields.len() != 24 {
            return Err(Error::Parse {
                line: line_no,
                field: fields.len().min(24),
                message: format!("expected 24 fields, found {}", fields.len()),
            });
        }
        for (fi, (field, b)) in fields.iter().zip(builders.iter_mut()).enumerate() {
            let err = |message: String| Error::Parse {
                line: line_no,
                field: fi,
                message,
            };
            let tokens = || -> Vec<String> {
                field
                    .split(opts.sub_separator)
                    .filter(|t| !t.is_empty())
                    .map(str::to_string)
                    .collect()
            };
            match b {
                Builder::Int(v) => v.push(parse_nonneg(field).map_err(err)?),
                Builder::OptInt(v) => v.push(if field.is_empty() {
                    None
                } else {
                    Some(parse_nonneg(field).map_err(err)?)
                }),
                Builder::Bool(v) => v.push(parse_bool(field).map_err(err)?),
                Builder::Str(v) => {
                    if RAW_COLUMNS[fi] == TWEET_TYPE {
                        field.parse::<TweetType>().map_err(err)?;
                    }
                    v.push(field.to_string())
                }
                Builder::Set(v) => {
                    let mut t = tokens();
                    t.sort();
                    t.dedup();
                    v.push(t)
                }
                Builder::List(v) => {
                    let t = tokens();
                    for m in &t {
                        m.parse::<Media>().map_err(err)?;
                    }
                    v.push(t)
                }
            }
        }
        rows += 1;
    }
    let mut table = ColumnTable::with_rows(rows);
    for (name, b) in RAW_COLUMNS.iter().zip(builders) {
        let col = match b {
            Builder::Int(v) => Column::Int(v),
            Builder::OptInt(v) => Column::OptInt(v),
            Builder::Bool(v) => Column::Bool(v),
            Builder::Str(v) => Column::Str(v),
            Builder::Set(v) => Column::StrSet(v),
            Builder::List(v) => Column::StrList(v),
        };
        table.push(*name, col)?;
    }
    Ok(table)
}

/// Serializes a raw-schema table back into the challenge format.
pub fn write_tsv<W: Write>(table: &ColumnTable, out: W, opts: &TsvOptions) -> Result<()> {
    let mut w = BufWriter::new(out);
    let cols: Vec<&Column> = RAW_COLUMNS
        .iter()
        .map(|n| table.column(n))
        .collect::<Result<_>>()?;
    let sub = opts.sub_separator.to_string();
    let mut line = String::new();
    for i in 0..table.row_count() {
        line.clear();
        for (ci, c) in cols.iter().enumerate() {
            if ci > 0 {
                line.push(opts.field_separator);
            }
            match c {
                Column::Int(v) => line.push_str(&v[i].to_string()),
                Column::OptInt(v) => {
                    if let Some(x) = v[i] {
                        line.push_str(&x.to_string())
                    }
                }
                Column::Bool(v) => line.push_str(if v[i] { "true" } else { "false" }),
                Column::Str(v) => line.push_str(&v[i]),
                Column::StrSet(v) | Column::StrList(v) => line.push_str(&v[i].join(&sub)),
                Column::Float(v) => line.push_str(&format!("{:?}", v[i])),
            }
        }
        line.push('\n');
        w.write_all(line.as_bytes())
            .map_err(|e| Error::io("<output>", e))?;
    }
    w.flush().map_err(|e| Error::io("<output>", e))?;
    Ok(())
}

// ---- persisted stage artifacts ----

fn escape_into(out: &mut String, s: &str, escape_space: bool) {
    for ch in s.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            ' ' if escape_space => out.push_str("\\s"),
            c => out.push(c),
        }
    }
}

fn unescape(s: &str) -> std::result::Result<String, String> {
    if !s.contains('\\') {
        return Ok(s.to_string());
    }
    let mut out = String::with_capacity(s.len());
    let mut it = s.chars();
    while let Some(c) = it.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match it.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('s') => out.push(' '),
            other => return Err(format!("bad escape {other:?}")),
        }
    }
    Ok(out)
}

fn format_cell(out: &mut String, c: &Column, i: usize) {
    match c {
        Column::Int(v) => out.push_str(&v[i].to_string()),
        Column::OptInt(v) => {
            if let Some(x) = v[i] {
                out.push_str(&x.to_string())
            }
        }
        Column::Float(v) => out.push_str(&format!("{:?}", v[i])),
        Column::Bool(v) => out.push_str(if v[i] { "true" } else { "false" }),
        Column::Str(v) => escape_into(out, &v[i], false),
        Column::StrSet(v) | Column::StrList(v) => {
            for (k, tok) in v[i].iter().enumerate() {
                if k > 0 {
                    out.push(' ');
                }
                escape_into(out, tok, true);
            }
        }
    }
}

fn parse_cell(c: &mut Column, s: &str) -> std::result::Result<(), String> {
    let int = |s: &str| s.parse::<i64>().map_err(|_| format!("not an integer: {s:?}"));
    match c {
        Column::Int(v) => v.push(int(s)?),
        Column::OptInt(v) => v.push(if s.is_empty() { None } else { Some(int(s)?) }),
        Column::Float(v) => v.push(s.parse().map_err(|_| format!("not a float: {s:?}"))?),
        Column::Bool(v) => v.push(parse_bool(s)?),
        Column::Str(v) => v.push(unescape(s)?),
        Column::StrSet(v) | Column::StrList(v) => {
            let toks = if s.is_empty() {
                Vec::new()
            } else {
                s.split(' ').map(unescape).collect::<std::result::Result<_, _>>()?
            };
            v.push(toks)
        }
    }
    Ok(())
}

pub fn schema_path(root: &Path, name: &str) -> PathBuf {
    root.join(format!("{name}.schema.tsv"))
}

pub fn data_path(root: &Path, name: &str) -> PathBuf {
    root.join(format!("{name}.data.tsv"))
}

/// Writes `bytes` to `path` through a temporary file and a rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Renders the data file contents (header line plus one line per row).
pub fn render_data(table: &ColumnTable) -> String {
    let mut out = String::new();
    out.push_str(&table.names().join("\t"));
    out.push('\n');
    let cols: Vec<&Column> = table.columns().map(|(_, c)| c).collect();
    for i in 0..table.row_count() {
        for (k, c) in cols.iter().enumerate() {
            if k > 0 {
                out.push('\t');
            }
            format_cell(&mut out, c, i);
        }
        out.push('\n');
    }
    out
}

fn render_schema(table: &ColumnTable) -> String {
    let mut out = String::from("column\ttype\n");
    for (n, c) in table.columns() {
        out.push_str(n);
        out.push('\t');
        out.push_str(c.column_type().as_str());
        out.push('\n');
    }
    out
}

/// Persists a table under an arbitrary artifact name.
pub fn write_named(table: &ColumnTable, name: &str, root: &Path, overwrite: bool) -> Result<()> {
    let sp = schema_path(root, name);
    let dp = data_path(root, name);
    if !overwrite && (sp.exists() || dp.exists()) {
        return Err(Error::Collision(name.to_string()));
    }
    atomic_write(&dp, render_data(table).as_bytes())?;
    atomic_write(&sp, render_schema(table).as_bytes())?;
    tracing::debug!(name, rows = table.row_count(), "wrote table");
    Ok(())
}

pub fn read_named(name: &str, root: &Path) -> Result<ColumnTable> {
    let sp = schema_path(root, name);
    let dp = data_path(root, name);
    if !sp.exists() || !dp.exists() {
        return Err(Error::Missing(name.to_string()));
    }
    let mismatch = |message: String| Error::SchemaMismatch {
        name: name.to_string(),
        message,
    };
    let schema = fs::read_to_string(&sp).map_err(|e| Error::io(&sp, e))?;
    let mut lines = schema.lines();
    if lines.next() != Some("column\ttype") {
        return Err(mismatch("bad schema header".into()));
    }
    let mut names = Vec::new();
    let mut cols = Vec::new();
    for l in lines {
        let (n, t) = l
            .split_once('\t')
            .ok_or_else(|| mismatch(format!("bad schema line {l:?}")))?;
        let ty = ColumnType::parse(t).ok_or_else(|| mismatch(format!("unknown type {t:?}")))?;
        names.push(n.to_string());
        cols.push(Column::empty(ty));
    }
    let data = fs::read_to_string(&dp).map_err(|e| Error::io(&dp, e))?;
    let body = data
        .strip_suffix('\n')
        .ok_or_else(|| mismatch("truncated data file".into()))?;
    let mut rows = body.split('\n');
    let header = rows.next().unwrap_or("");
    let header_names: Vec<&str> = if header.is_empty() {
        Vec::new()
    } else {
        header.split('\t').collect()
    };
    if header_names != names {
        return Err(mismatch("data header differs from schema".into()));
    }
    let mut n_rows = 0;
    for (ri, row) in rows.enumerate() {
        let fields: Vec<&str> = if names.is_empty() {
            Vec::new()
        } else {
            row.split('\t').collect()
        };
        if fields.len() != names.len() {
            return Err(mismatch(format!("row {} has {} fields", ri + 1, fields.len())));
        }
        for (c, f) in cols.iter_mut().zip(fields) {
            parse_cell(c, f).map_err(|m| mismatch(format!("row {}: {m}", ri + 1)))?;
        }
        n_rows += 1;
    }
    let mut t = ColumnTable::with_rows(n_rows);
    for (n, c) in names.into_iter().zip(cols) {
        t.push(n, c)?;
    }
    Ok(t)
}

pub fn write_table(table: &ColumnTable, id: &DatasetId, root: &Path, overwrite: bool) -> Result<()> {
    write_named(table, &id.name(), root, overwrite)
}

pub fn read_table(id: &DatasetId, root: &Path) -> Result<ColumnTable> {
    read_named(&id.name(), root)
}

/// True iff both the schema and data files of `id` exist.
pub fn stage_exists(id: &DatasetId, root: &Path) -> bool {
    let name = id.name();
    schema_path(root, &name).is_file() && data_path(root, &name).is_file()
}
