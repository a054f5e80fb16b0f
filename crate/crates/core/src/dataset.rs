//! Typed rectangular data with missing-value masks.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("csv error at line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("ragged row at line {line}: expected {expected} cells, found {found}")]
    Ragged { line: u64, expected: usize, found: usize },
    #[error("line {line}, column `{column}`: non-numeric cell `{value}`")]
    NonNumeric { line: u64, column: String, value: String },
    #[error("column `{column}`, row {row}: value {value} invalid for {kind}")]
    InvalidValue { column: String, row: usize, value: f64, kind: ColumnType },
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("column `{0}` is not covered by the schema")]
    Uncovered(String),
    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),
    #[error("column `{column}` has {found} rows, expected {expected}")]
    Length { column: String, expected: usize, found: usize },
    #[error("schema line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("column `{0}` is constant")]
    ConstantColumn(String),
    #[error("column `{0}` has no missing values")]
    NoMissing(String),
    #[error("column `{0}` is entirely missing")]
    AllMissing(String),
    #[error("column `{0}` has missing values")]
    HasMissing(String),
    #[error("column `{column}` must be {expected}")]
    WrongType { column: String, expected: String },
}

pub type Result<T> = std::result::Result<T, DataError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ColumnType {
    Continuous,
    Binary,
    Categorical(usize),
    Ordinal(usize),
}

impl ColumnType {
    pub fn is_discrete(&self) -> bool {
        !matches!(self, ColumnType::Continuous)
    }

    /// Number of levels for discrete types.
    pub fn levels(&self) -> Option<usize> {
        match *self {
            ColumnType::Continuous => None,
            ColumnType::Binary => Some(2),
            ColumnType::Categorical(k) | ColumnType::Ordinal(k) => Some(k),
        }
    }

    pub fn admits(&self, v: f64) -> bool {
        match self.levels() {
            None => v.is_finite(),
            Some(k) => v.fract() == 0.0 && v >= 0.0 && v < k as f64,
        }
    }
}

impl fmt::Display for ColumnType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnType::Continuous => write!(f, "continuous"),
            ColumnType::Binary => write!(f, "binary"),
            ColumnType::Categorical(k) => write!(f, "categorical({k})"),
            ColumnType::Ordinal(k) => write!(f, "ordinal({k})"),
        }
    }
}

/// Declared type for one schema column. `Categorical(None)` and
/// `Ordinal(None)` take their level count from the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnSpec {
    Auto,
    Continuous,
    Binary,
    Categorical(Option<usize>),
    Ordinal(Option<usize>),
}

impl std::str::FromStr for ColumnSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        let (head, arg) = match s.find('(') {
            Some(i) if s.ends_with(')') => (&s[..i], Some(&s[i + 1..s.len() - 1])),
            Some(_) => return Err(format!("unbalanced parentheses in `{s}`")),
            None => (s, None),
        };
        let k = arg
            .map(|a| a.trim().parse::<usize>().map_err(|_| format!("bad level count `{a}`")))
            .transpose()?;
        if k == Some(0) {
            return Err("level count must be positive".into());
        }
        match (head.trim(), k) {
            ("auto", None) => Ok(ColumnSpec::Auto),
            ("continuous", None) => Ok(ColumnSpec::Continuous),
            ("binary", None) => Ok(ColumnSpec::Binary),
            ("categorical", k) => Ok(ColumnSpec::Categorical(k)),
            ("ordinal", k) => Ok(ColumnSpec::Ordinal(k)),
            _ => Err(format!("unknown column type `{s}`")),
        }
    }
}

/// Column-type map for CSV loading.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Schema {
    /// Infer every column.
    #[default]
    Auto,
    Explicit(Vec<(String, ColumnSpec)>),
}

impl Schema {
    /// Parses `name=type` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Schema> {
        let mut entries: Vec<(String, ColumnSpec)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| DataError::Schema { line: i + 1, message };
            let (name, ty) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `name=type`, got `{line}`")))?;
            let spec: ColumnSpec = ty.parse().map_err(err)?;
            let name = name.trim().to_string();
            if entries.iter().any(|(n, _)| *n == name) {
                return Err(err(format!("column `{name}` listed twice")));
            }
            entries.push((name, spec));
        }
        Ok(Schema::Explicit(entries))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Schema> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| DataError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Schema::parse(&text)
    }
}

/// One typed column. Missing cells hold `NaN` and are flagged in `missing`.
#[derive(Debug, Clone)]
pub struct Column {
    name: String,
    kind: ColumnType,
    values: Vec<f64>,
    missing: Vec<bool>,
    bounds: Option<(f64, f64)>,
}

impl PartialEq for Column {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.kind == other.kind
            && self.missing == other.missing
            && self.bounds == other.bounds
            && self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .zip(&self.missing)
                .all(|((a, b), &m)| m || a.to_bits() == b.to_bits())
    }
}

impl Column {
    /// A fully observed column.
    pub fn new(name: impl Into<String>, kind: ColumnType, values: Vec<f64>) -> Result<Column> {
        let n = values.len();
        Column::build(name.into(), kind, values, vec![false; n])
    }

    /// A column where `None` marks a missing cell.
    pub fn with_missing(
        name: impl Into<String>,
        kind: ColumnType,
        cells: Vec<Option<f64>>,
    ) -> Result<Column> {
        let missing = cells.iter().map(Option::is_none).collect();
        let values = cells.into_iter().map(|c| c.unwrap_or(f64::NAN)).collect();
        Column::build(name.into(), kind, values, missing)
    }

    fn build(name: String, kind: ColumnType, values: Vec<f64>, missing: Vec<bool>) -> Result<Column> {
        if !crate::graph::valid_name(&name) {
            return Err(DataError::WrongType {
                column: name,
                expected: "named like [A-Za-z_][A-Za-z0-9_.@-]*".into(),
            });
        }
        for (row, (&v, &m)) in values.iter().zip(&missing).enumerate() {
            if !m && !kind.admits(v) {
                return Err(DataError::InvalidValue { column: name, row, value: v, kind });
            }
        }
        Ok(Column { name, kind, values, missing, bounds: None })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> ColumnType {
        self.kind
    }

    /// Raw values; missing cells are `NaN`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn missing(&self) -> &[bool] {
        &self.missing
    }

    pub fn missing_count(&self) -> usize {
        self.missing.iter().filter(|&&m| m).count()
    }

    /// Original-scale `(min, max)` if the column was rescaled.
    pub fn bounds(&self) -> Option<(f64, f64)> {
        self.bounds
    }

    fn observed(&self) -> impl Iterator<Item = f64> + '_ {
        self.values
            .iter()
            .zip(&self.missing)
            .filter(|(_, &m)| !m)
            .map(|(&v, _)| v)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    columns: Vec<Column>,
    n_rows: usize,
}

impl Dataset {
    pub fn new(columns: Vec<Column>) -> Result<Dataset> {
        let n_rows = columns.first().map_or(0, |c| c.values.len());
        let mut seen = BTreeSet::new();
        for c in &columns {
            if !seen.insert(c.name.clone()) {
                return Err(DataError::DuplicateColumn(c.name.clone()));
            }
            if c.values.len() != n_rows {
                return Err(DataError::Length {
                    column: c.name.clone(),
                    expected: n_rows,
                    found: c.values.len(),
                });
            }
        }
        Ok(Dataset { columns, n_rows })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.iter().any(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| DataError::UnknownColumn(name.to_string()))
    }

    pub fn values(&self, name: &str) -> Result<&[f64]> {
        Ok(self.column(name)?.values())
    }

    pub fn kind(&self, name: &str) -> Result<ColumnType> {
        Ok(self.column(name)?.kind)
    }

    /// `(column, missing count)` for every column.
    pub fn missing_counts(&self) -> Vec<(String, usize)> {
        self.columns
            .iter()
            .map(|c| (c.name.clone(), c.missing_count()))
            .collect()
    }

    pub fn has_missing(&self) -> bool {
        self.columns.iter().any(|c| c.missing.iter().any(|&m| m))
    }

    /// Errors on the first column that still has missing cells.
    pub fn ensure_complete(&self) -> Result<()> {
        match self.columns.iter().find(|c| c.missing_count() > 0) {
            Some(c) => Err(DataError::HasMissing(c.name.clone())),
            None => Ok(()),
        }
    }

    /// Rows picked by index (duplicates allowed), e.g. for a bootstrap.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let columns = self
            .columns
            .iter()
            .map(|c| Column {
                name: c.name.clone(),
                kind: c.kind,
                values: rows.iter().map(|&r| c.values[r]).collect(),
                missing: rows.iter().map(|&r| c.missing[r]).collect(),
                bounds: c.bounds,
            })
            .collect();
        Dataset { columns, n_rows: rows.len() }
    }

    /// Returns a copy with `column` appended.
    pub fn with_column(&self, column: Column) -> Result<Dataset> {
        let mut columns = self.columns.clone();
        columns.push(column);
        Dataset::new(columns)
    }

    /// Returns a copy holding only the named columns, in the given order.
    pub fn subset(&self, names: &[&str]) -> Result<Dataset> {
        let columns = names
            .iter()
            .map(|n| self.column(n).cloned())
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(columns)
    }

    fn replace(&self, column: Column) -> Dataset {
        let columns = self
            .columns
            .iter()
            .map(|c| if c.name == column.name { column.clone() } else { c.clone() })
            .collect();
        Dataset { columns, n_rows: self.n_rows }
    }

    /// Loads a headed CSV. Empty cells and `NA` are missing.
    pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| DataError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Dataset::read_csv(file, schema)
    }

    pub fn read_csv<R: std::io::Read>(reader: R, schema: &Schema) -> Result<Dataset> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(reader);
        let csv_err = |e: csv::Error| DataError::Csv {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        };
        let header: Vec<String> = rdr
            .headers()
            .map_err(csv_err)?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let mut cells: Vec<Vec<Option<f64>>> = vec![Vec::new(); header.len()];
        for (i, record) in rdr.records().enumerate() {
            let record = record.map_err(csv_err)?;
            let line = record.position().map_or(i as u64 + 2, |p| p.line());
            if record.len() != header.len() {
                return Err(DataError::Ragged { line, expected: header.len(), found: record.len() });
            }
            for (j, cell) in record.iter().enumerate() {
                let cell = cell.trim();
                if cell.is_empty() || cell == "NA" {
                    cells[j].push(None);
                    continue;
                }
                let v: f64 = cell.parse().map_err(|_| DataError::NonNumeric {
                    line,
                    column: header[j].clone(),
                    value: cell.to_string(),
                })?;
                if !v.is_finite() {
                    return Err(DataError::NonNumeric {
                        line,
                        column: header[j].clone(),
                        value: cell.to_string(),
                    });
                }
                cells[j].push(Some(v));
            }
        }
        if let Schema::Explicit(entries) = schema {
            for (name, _) in entries {
                if !header.contains(name) {
                    return Err(DataError::UnknownColumn(name.clone()));
                }
            }
        }
        let mut columns = Vec::with_capacity(header.len());
        for (name, col) in header.into_iter().zip(cells) {
            let spec = match schema {
                Schema::Auto => ColumnSpec::Auto,
                Schema::Explicit(entries) => entries
                    .iter()
                    .find(|(n, _)| *n == name)
                    .map(|(_, s)| *s)
                    .ok_or_else(|| DataError::Uncovered(name.clone()))?,
            };
            let kind = resolve_type(spec, &col);
            columns.push(Column::with_missing(name, kind, col)?);
        }
        Dataset::new(columns)
    }

    /// CSV text; missing cells are written as `NA`.
    pub fn to_csv_string(&self) -> String {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record(self.column_names()).expect("in-memory write");
        for r in 0..self.n_rows {
            let row: Vec<String> = self
                .columns
                .iter()
                .map(|c| if c.missing[r] { "NA".to_string() } else { format_value(c.values[r]) })
                .collect();
            wtr.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(wtr.into_inner().expect("flush")).expect("utf-8 output")
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string()).map_err(|e| DataError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    /// Min-max rescales a continuous column to `[0, 1]`, recording bounds.
    pub fn rescale_outcome(&self, name: &str) -> Result<Dataset> {
        let col = self.column(name)?;
        if col.kind != ColumnType::Continuous {
            return Err(DataError::WrongType { column: name.into(), expected: "continuous".into() });
        }
        if col.missing_count() > 0 {
            return Err(DataError::HasMissing(name.into()));
        }
        let (lo, hi) = col
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if hi <= lo {
            return Err(DataError::ConstantColumn(name.into()));
        }
        let range = hi - lo;
        let mut out = col.clone();
        out.values = col.values.iter().map(|&v| (v - lo) / range).collect();
        out.bounds = Some((lo, hi));
        Ok(self.replace(out))
    }

    /// Converts an effect on the rescaled column back to original units.
    pub fn unscale_effect(&self, name: &str, delta: f64) -> Result<f64> {
        let (lo, hi) = self
            .column(name)?
            .bounds
            .ok_or_else(|| DataError::WrongType { column: name.into(), expected: "rescaled".into() })?;
        Ok(delta * (hi - lo))
    }

    /// Imputes missing cells of `name` and appends the indicator `Q_<name>`
    /// (1 = observed, 0 = missing).
    pub fn make_censoring(&self, name: &str) -> Result<Dataset> {
        let col = self.column(name)?;
        let n_missing = col.missing_count();
        if n_missing == 0 {
            return Err(DataError::NoMissing(name.into()));
        }
        if n_missing == self.n_rows {
            return Err(DataError::AllMissing(name.into()));
        }
        let fill = imputation_value(col);
        let mut imputed = col.clone();
        for (v, m) in imputed.values.iter_mut().zip(imputed.missing.iter_mut()) {
            if *m {
                *v = fill;
                *m = false;
            }
        }
        let indicator = Column::new(
            censoring_name(name),
            ColumnType::Binary,
            col.missing.iter().map(|&m| if m { 0.0 } else { 1.0 }).collect(),
        )?;
        self.replace(imputed).with_column(indicator)
    }
}

/// Name of the censoring indicator created for `column`.
pub fn censoring_name(column: &str) -> String {
    format!("Q_{column}")
}

/// Shortest representation that parses back to the same `f64`.
pub(crate) fn format_value(v: f64) -> String {
    format!("{v}")
}

fn imputation_value(col: &Column) -> f64 {
    match col.kind {
        ColumnType::Continuous => mean(col.observed()),
        ColumnType::Ordinal(k) => mean(col.observed()).round().clamp(0.0, (k - 1) as f64),
        ColumnType::Binary | ColumnType::Categorical(_) => {
            let k = col.kind.levels().unwrap_or(2);
            let mut counts = vec![0usize; k];
            for v in col.observed() {
                counts[v as usize] += 1;
            }
            // first maximum wins, so ties go to the lowest level
            let best = counts
                .iter()
                .enumerate()
                .fold((0, 0), |acc, (i, &c)| if c > acc.1 { (i, c) } else { acc });
            best.0 as f64
        }
    }
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    s / n as f64
}

fn resolve_type(spec: ColumnSpec, cells: &[Option<f64>]) -> ColumnType {
    let observed: Vec<f64> = cells.iter().flatten().copied().collect();
    let max_level = || observed.iter().fold(0.0f64, |m, &v| m.max(v)) as usize + 1;
    match spec {
        ColumnSpec::Continuous => ColumnType::Continuous,
        ColumnSpec::Binary => ColumnType::Binary,
        ColumnSpec::Categorical(k) => ColumnType::Categorical(k.unwrap_or_else(max_level)),
        ColumnSpec::Ordinal(k) => ColumnType::Ordinal(k.unwrap_or_else(max_level)),
        ColumnSpec::Auto => infer_type(&observed),
    }
}

/// At most two distinct values in {0,1}: binary; at most ten distinct
/// non-negative integers: ordinal; anything else: continuous.
fn infer_type(observed: &[f64]) -> ColumnType {
    let distinct: BTreeSet<u64> = observed.iter().map(|v| v.to_bits()).collect();
    let all_int = observed.iter().all(|v| v.fract() == 0.0 && *v >= 0.0);
    if observed.is_empty() || !all_int {
        return ColumnType::Continuous;
    }
    if distinct.len() <= 2 && observed.iter().all(|&v| v == 0.0 || v == 1.0) {
        ColumnType::Binary
    } else if distinct.len() <= 10 {
        let max = observed.iter().fold(0.0f64, |m, &v| m.max(v));
        ColumnType::Ordinal(max as usize + 1)
    } else {
        ColumnType::Continuous
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str, schema: &Schema) -> Result<Dataset> {
        Dataset::read_csv(text.as_bytes(), schema)
    }

    #[test]
    fn na_cell_is_missing() {
        let ds = read("a,b\n1,2\nNA,3\n4,\n", &Schema::Auto).unwrap();
        assert_eq!(ds.n_rows(), 3);
        assert_eq!(ds.missing_counts(), vec![("a".into(), 1), ("b".into(), 1)]);
        let ds = read("a,b\n1,2\nNA,3\n4,5\n", &Schema::Auto).unwrap();
        let total: usize = ds.missing_counts().iter().map(|(_, c)| c).sum();
        assert_eq!(total, 1);
    }

    #[test]
    fn auto_inference() {
        let ds = read("b,o,c\n0,3,0.5\n1,1,1.25\n0,2,2\n", &Schema::Auto).unwrap();
        assert_eq!(ds.kind("b").unwrap(), ColumnType::Binary);
        assert_eq!(ds.kind("o").unwrap(), ColumnType::Ordinal(4));
        assert_eq!(ds.kind("c").unwrap(), ColumnType::Continuous);
    }

    #[test]
    fn ragged_row_names_line() {
        let err = read("a,b\n1,2\n3\n", &Schema::Auto).unwrap_err();
        assert_eq!(err, DataError::Ragged { line: 3, expected: 2, found: 1 });
    }

    #[test]
    fn schema_errors() {
        let schema = Schema::parse("a=continuous\nz=binary\n").unwrap();
        assert_eq!(
            read("a,b\n1,2\n", &schema).unwrap_err(),
            DataError::UnknownColumn("z".into())
        );
        let schema = Schema::parse("a=continuous\n").unwrap();
        assert_eq!(read("a,b\n1,2\n", &schema).unwrap_err(), DataError::Uncovered("b".into()));
        assert!(Schema::parse("a=weird").is_err());
        assert!(matches!(
            read("a\nx\n", &Schema::Auto).unwrap_err(),
            DataError::NonNumeric { line: 2, .. }
        ));
        let schema = Schema::parse("a=binary").unwrap();
        assert!(matches!(read("a\n2\n", &schema), Err(DataError::InvalidValue { .. })));
    }

    #[test]
    fn explicit_schema_types() {
        let schema = Schema::parse("t = categorical(3)\ny=continuous # outcome\nk=ordinal").unwrap();
        let ds = read("t,y,k\n0,1.5,4\n2,2.5,0\n", &schema).unwrap();
        assert_eq!(ds.kind("t").unwrap(), ColumnType::Categorical(3));
        assert_eq!(ds.kind("k").unwrap(), ColumnType::Ordinal(5));
    }

    #[test]
    fn rescale_and_unscale() {
        let ds = Dataset::new(vec![
            Column::new("y", ColumnType::Continuous, vec![2.0, 4.0, 6.0]).unwrap(),
        ])
        .unwrap();
        let r = ds.rescale_outcome("y").unwrap();
        assert_eq!(r.values("y").unwrap(), &[0.0, 0.5, 1.0]);
        assert_eq!(r.column("y").unwrap().bounds(), Some((2.0, 6.0)));
        assert!((r.unscale_effect("y", 0.1).unwrap() - 0.4).abs() < 1e-12);
        let c = Dataset::new(vec![Column::new("y", ColumnType::Continuous, vec![3.0; 4]).unwrap()])
            .unwrap();
        assert_eq!(c.rescale_outcome("y"), Err(DataError::ConstantColumn("y".into())));
    }

    #[test]
    fn censoring_indicator() {
        let col = Column::with_missing("x", ColumnType::Continuous, vec![Some(1.0), None, Some(3.0)])
            .unwrap();
        let ds = Dataset::new(vec![col]).unwrap();
        let c = ds.make_censoring("x").unwrap();
        assert_eq!(c.values("x").unwrap(), &[1.0, 2.0, 3.0]);
        assert_eq!(c.values("Q_x").unwrap(), &[1.0, 0.0, 1.0]);
        assert!(!c.has_missing());

        let full = Dataset::new(vec![Column::new("x", ColumnType::Continuous, vec![1.0]).unwrap()])
            .unwrap();
        assert_eq!(full.make_censoring("x"), Err(DataError::NoMissing("x".into())));
        let empty = Dataset::new(vec![
            Column::with_missing("x", ColumnType::Continuous, vec![None, None]).unwrap(),
        ])
        .unwrap();
        assert_eq!(empty.make_censoring("x"), Err(DataError::AllMissing("x".into())));
    }

    #[test]
    fn censoring_uses_mode_for_binary() {
        let col = Column::with_missing(
            "b",
            ColumnType::Binary,
            vec![Some(1.0), Some(1.0), Some(0.0), None],
        )
        .unwrap();
        let c = Dataset::new(vec![col]).unwrap().make_censoring("b").unwrap();
        assert_eq!(c.values("b").unwrap(), &[1.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn csv_round_trip_keeps_mask() {
        let ds = read("a,b\n0.1,NA\n1e-300,3\n-2.5,7\n", &Schema::Auto).unwrap();
        let again = read(&ds.to_csv_string(), &Schema::Auto).unwrap();
        assert_eq!(again, ds);
    }
}
