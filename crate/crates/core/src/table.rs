//! Immutable named-column tables.

use std::collections::HashMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColumnType {
    Int,
    OptInt,
    Float,
    Bool,
    Str,
    StrSet,
    StrList,
}

impl ColumnType {
    pub fn as_str(self) -> &'static str {
        match self {
            ColumnType::Int => "int64",
            ColumnType::OptInt => "opt_int64",
            ColumnType::Float => "float64",
            ColumnType::Bool => "boolean",
            ColumnType::Str => "string",
            ColumnType::StrSet => "string_set",
            ColumnType::StrList => "string_list",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "int64" => ColumnType::Int,
            "opt_int64" => ColumnType::OptInt,
            "float64" => ColumnType::Float,
            "boolean" => ColumnType::Bool,
            "string" => ColumnType::Str,
            "string_set" => ColumnType::StrSet,
            "string_list" => ColumnType::StrList,
            _ => return None,
        })
    }
}

/// A typed column. Set columns hold sorted, deduplicated tokens.
#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Int(Vec<i64>),
    OptInt(Vec<Option<i64>>),
    Float(Vec<f64>),
    Bool(Vec<bool>),
    Str(Vec<String>),
    StrSet(Vec<Vec<String>>),
    StrList(Vec<Vec<String>>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Int(v) => v.len(),
            Column::OptInt(v) => v.len(),
            Column::Float(v) => v.len(),
            Column::Bool(v) => v.len(),
            Column::Str(v) => v.len(),
            Column::StrSet(v) => v.len(),
            Column::StrList(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn column_type(&self) -> ColumnType {
        match self {
            Column::Int(_) => ColumnType::Int,
            Column::OptInt(_) => ColumnType::OptInt,
            Column::Float(_) => ColumnType::Float,
            Column::Bool(_) => ColumnType::Bool,
            Column::Str(_) => ColumnType::Str,
            Column::StrSet(_) => ColumnType::StrSet,
            Column::StrList(_) => ColumnType::StrList,
        }
    }

    pub fn empty(ty: ColumnType) -> Column {
        match ty {
            ColumnType::Int => Column::Int(Vec::new()),
            ColumnType::OptInt => Column::OptInt(Vec::new()),
            ColumnType::Float => Column::Float(Vec::new()),
            ColumnType::Bool => Column::Bool(Vec::new()),
            ColumnType::Str => Column::Str(Vec::new()),
            ColumnType::StrSet => Column::StrSet(Vec::new()),
            ColumnType::StrList => Column::StrList(Vec::new()),
        }
    }

    /// Builds a set column, normalizing every entry to sorted unique tokens.
    pub fn set(mut rows: Vec<Vec<String>>) -> Column {
        for r in &mut rows {
            r.sort();
            r.dedup();
        }
        Column::StrSet(rows)
    }

    pub fn take(&self, idx: &[usize]) -> Column {
        fn pick<T: Clone>(v: &[T], idx: &[usize]) -> Vec<T> {
            idx.iter().map(|&i| v[i].clone()).collect()
        }
        match self {
            Column::Int(v) => Column::Int(pick(v, idx)),
            Column::OptInt(v) => Column::OptInt(pick(v, idx)),
            Column::Float(v) => Column::Float(pick(v, idx)),
            Column::Bool(v) => Column::Bool(pick(v, idx)),
            Column::Str(v) => Column::Str(pick(v, idx)),
            Column::StrSet(v) => Column::StrSet(pick(v, idx)),
            Column::StrList(v) => Column::StrList(pick(v, idx)),
        }
    }

    fn extend_from(&mut self, other: &Column) -> bool {
        match (self, other) {
            (Column::Int(a), Column::Int(b)) => a.extend_from_slice(b),
            (Column::OptInt(a), Column::OptInt(b)) => a.extend_from_slice(b),
            (Column::Float(a), Column::Float(b)) => a.extend_from_slice(b),
            (Column::Bool(a), Column::Bool(b)) => a.extend_from_slice(b),
            (Column::Str(a), Column::Str(b)) => a.extend_from_slice(b),
            (Column::StrSet(a), Column::StrSet(b)) => a.extend_from_slice(b),
            (Column::StrList(a), Column::StrList(b)) => a.extend_from_slice(b),
            _ => return false,
        }
        true
    }

    /// Numeric view of the column, if it has one. Absent optionals become 0.
    pub fn to_f64(&self) -> Option<Vec<f64>> {
        Some(match self {
            Column::Int(v) => v.iter().map(|&x| x as f64).collect(),
            Column::OptInt(v) => v.iter().map(|x| x.unwrap_or(0) as f64).collect(),
            Column::Float(v) => v.clone(),
            Column::Bool(v) => v.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
            _ => return None,
        })
    }
}

/// Ordered mapping of unique column names to equally long columns.
#[derive(Debug, Clone, Default)]
pub struct ColumnTable {
    names: Vec<String>,
    columns: Vec<Column>,
    index: HashMap<String, usize>,
    row_count: usize,
}

impl PartialEq for ColumnTable {
    fn eq(&self, other: &Self) -> bool {
        self.row_count == other.row_count
            && self.names == other.names
            && self.columns == other.columns
    }
}

macro_rules! typed_getter {
    ($fn:ident, $variant:ident, $ty:ty, $label:expr) => {
        pub fn $fn(&self, name: &str) -> Result<&[$ty]> {
            match self.column(name)? {
                Column::$variant(v) => Ok(v),
                other => Err(Error::ColumnType {
                    name: name.to_string(),
                    expected: $label,
                    actual: other.column_type().as_str(),
                }),
            }
        }
    };
}

impl ColumnTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// An empty table with no columns but a fixed row count.
    pub fn with_rows(row_count: usize) -> Self {
        ColumnTable {
            row_count,
            ..Default::default()
        }
    }

    pub fn from_columns<S: Into<String>>(cols: Vec<(S, Column)>) -> Result<Self> {
        let mut t = ColumnTable::new();
        let mut first = true;
        for (name, col) in cols {
            if first {
                t.row_count = col.len();
                first = false;
            }
            t.push(name, col)?;
        }
        Ok(t)
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    pub fn n_columns(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn columns(&self) -> impl Iterator<Item = (&str, &Column)> {
        self.names.iter().map(String::as_str).zip(self.columns.iter())
    }

    pub fn has(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn push(&mut self, name: impl Into<String>, col: Column) -> Result<()> {
        let name = name.into();
        if self.names.is_empty() && self.row_count == 0 {
            self.row_count = col.len();
        }
        if col.len() != self.row_count {
            return Err(Error::InvalidTable(format!(
                "column {name} has {} rows, table has {}",
                col.len(),
                self.row_count
            )));
        }
        if self.index.contains_key(&name) {
            return Err(Error::InvalidTable(format!("duplicate column {name}")));
        }
        self.index.insert(name.clone(), self.names.len());
        self.names.push(name);
        self.columns.push(col);
        Ok(())
    }

    pub fn with(mut self, name: impl Into<String>, col: Column) -> Result<Self> {
        self.push(name, col)?;
        Ok(self)
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        self.index
            .get(name)
            .map(|&i| &self.columns[i])
            .ok_or_else(|| Error::ColumnNotFound(name.to_string()))
    }

    typed_getter!(ints, Int, i64, "int64");
    typed_getter!(opt_ints, OptInt, Option<i64>, "opt_int64");
    typed_getter!(floats, Float, f64, "float64");
    typed_getter!(bools, Bool, bool, "boolean");
    typed_getter!(strs, Str, String, "string");
    typed_getter!(sets, StrSet, Vec<String>, "string_set");
    typed_getter!(lists, StrList, Vec<String>, "string_list");

    pub fn numeric(&self, name: &str) -> Result<Vec<f64>> {
        let col = self.column(name)?;
        col.to_f64().ok_or_else(|| Error::ColumnType {
            name: name.to_string(),
            expected: "numeric",
            actual: col.column_type().as_str(),
        })
    }

    pub fn take(&self, idx: &[usize]) -> ColumnTable {
        ColumnTable {
            names: self.names.clone(),
            columns: self.columns.iter().map(|c| c.take(idx)).collect(),
            index: self.index.clone(),
            row_count: idx.len(),
        }
    }

    pub fn filter(&self, keep: &[bool]) -> ColumnTable {
        let idx: Vec<usize> = (0..self.row_count).filter(|&i| keep[i]).collect();
        self.take(&idx)
    }

    pub fn select(&self, names: &[&str]) -> Result<ColumnTable> {
        let mut t = ColumnTable::with_rows(self.row_count);
        for &n in names {
            t.push(n, self.column(n)?.clone())?;
        }
        Ok(t)
    }

    pub fn drop_columns(&self, names: &[&str]) -> ColumnTable {
        let mut t = ColumnTable::with_rows(self.row_count);
        for (n, c) in self.columns() {
            if !names.contains(&n) {
                t.push(n, c.clone()).expect("unique names preserved");
            }
        }
        t
    }

    /// Vertical concatenation; all parts must share names and types.
    pub fn concat(parts: &[&ColumnTable]) -> Result<ColumnTable> {
        let Some(first) = parts.first() else {
            return Ok(ColumnTable::new());
        };
        let mut out = (*first).clone();
        for p in &parts[1..] {
            if p.names != out.names {
                return Err(Error::InvalidTable("concat of differing schemas".into()));
            }
            for (a, b) in out.columns.iter_mut().zip(&p.columns) {
                if !a.extend_from(b) {
                    return Err(Error::InvalidTable("concat of differing types".into()));
                }
            }
            out.row_count += p.row_count;
        }
        Ok(out)
    }

    /// Appends all columns of `other` (same row count, disjoint names).
    pub fn hstack(mut self, other: ColumnTable) -> Result<ColumnTable> {
        if other.row_count != self.row_count && !other.names.is_empty() {
            return Err(Error::InvalidTable("hstack row count mismatch".into()));
        }
        for (n, c) in other.names.into_iter().zip(other.columns) {
            self.push(n, c)?;
        }
        Ok(self)
    }
}
