//! Tabular data: typed feature columns, the output vector, and CSV I/O.
//!
//! Columns keep the raw numeric values read from disk. Discrete columns are
//! re-coded to `0..C` only when they are discretized for the information
//! estimators (see [`crate::infotheory::discretize`]), so writing a loaded
//! dataset back out reproduces its values bit-for-bit.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Columns with at most this many distinct integer values are auto-typed as
/// discrete.
pub const DEFAULT_MAX_CATEGORIES: usize = 32;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("dataset is empty")]
    Empty,
    #[error("dataset has no feature columns")]
    NoFeatures,
    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}, column `{column}`: `{value}` is not a number")]
    NonNumeric {
        line: usize,
        column: String,
        value: String,
    },
    #[error("column `{column}` row {row}: value is not finite")]
    NonFinite { column: String, row: usize },
    #[error("column `{column}` row {row}: discrete column holds non-integer value {value}")]
    NonInteger {
        column: String,
        row: usize,
        value: f64,
    },
    #[error("column `{0}` not found")]
    MissingColumn(String),
    #[error("duplicate column name `{0}`")]
    DuplicateName(String),
    #[error("column `{column}` has length {found}, expected {expected}")]
    LengthMismatch {
        column: String,
        expected: usize,
        found: usize,
    },
    #[error("row index {index} out of range for {n} rows")]
    RowOutOfRange { index: usize, n: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Discrete,
    Continuous,
}

impl FeatureKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FeatureKind::Discrete => "discrete",
            FeatureKind::Continuous => "continuous",
        }
    }
}

impl std::str::FromStr for FeatureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "discrete" => Ok(FeatureKind::Discrete),
            "continuous" => Ok(FeatureKind::Continuous),
            other => Err(format!("unknown feature kind `{other}`")),
        }
    }
}

fn check_finite(name: &str, values: &[f64]) -> Result<(), DataError> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(row) => Err(DataError::NonFinite {
            column: name.to_string(),
            row,
        }),
        None => Ok(()),
    }
}

/// One named feature with `n` observations.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureColumn {
    name: String,
    kind: FeatureKind,
    values: Vec<f64>,
}

impl FeatureColumn {
    pub fn new(
        name: impl Into<String>,
        kind: FeatureKind,
        values: Vec<f64>,
    ) -> Result<Self, DataError> {
        let name = name.into();
        if values.is_empty() {
            return Err(DataError::Empty);
        }
        check_finite(&name, &values)?;
        if kind == FeatureKind::Discrete {
            if let Some(row) = values.iter().position(|v| v.fract() != 0.0) {
                return Err(DataError::NonInteger {
                    column: name,
                    row,
                    value: values[row],
                });
            }
        }
        Ok(Self { name, kind, values })
    }

    /// Builds a column, picking the kind by [`infer_kind`].
    pub fn auto(
        name: impl Into<String>,
        values: Vec<f64>,
        max_categories: usize,
    ) -> Result<Self, DataError> {
        let kind = infer_kind(&values, max_categories);
        Self::new(name, kind, values)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn select(&self, rows: &[usize]) -> Self {
        Self {
            name: self.name.clone(),
            kind: self.kind,
            values: rows.iter().map(|&r| self.values[r]).collect(),
        }
    }
}

/// Discrete when every value is an integer and there are at most
/// `max_categories` distinct values.
pub fn infer_kind(values: &[f64], max_categories: usize) -> FeatureKind {
    let mut seen = HashSet::new();
    for v in values {
        if v.fract() != 0.0 || !v.is_finite() {
            return FeatureKind::Continuous;
        }
        seen.insert(v.to_bits());
        if seen.len() > max_categories {
            return FeatureKind::Continuous;
        }
    }
    FeatureKind::Discrete
}

/// Model output (or observed target) aligned with a dataset's rows.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputVector {
    values: Vec<f64>,
}

impl OutputVector {
    pub fn new(values: Vec<f64>) -> Result<Self, DataError> {
        check_finite("output", &values)?;
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn select(&self, rows: &[usize]) -> Self {
        Self {
            values: rows.iter().map(|&r| self.values[r]).collect(),
        }
    }
}

/// A column carried along with the dataset but excluded from the feature
/// space, e.g. a precomputed prediction column.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxColumn {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<FeatureColumn>,
    output: Option<(String, OutputVector)>,
    auxiliary: Vec<AuxColumn>,
}

impl Dataset {
    pub fn new(features: Vec<FeatureColumn>) -> Result<Self, DataError> {
        let first = features.first().ok_or(DataError::NoFeatures)?;
        let n = first.len();
        let mut names = HashSet::new();
        for f in &features {
            if f.len() != n {
                return Err(DataError::LengthMismatch {
                    column: f.name.clone(),
                    expected: n,
                    found: f.len(),
                });
            }
            if !names.insert(f.name.as_str()) {
                return Err(DataError::DuplicateName(f.name.clone()));
            }
        }
        Ok(Self {
            features,
            output: None,
            auxiliary: Vec::new(),
        })
    }

    pub fn with_output(
        mut self,
        name: impl Into<String>,
        output: OutputVector,
    ) -> Result<Self, DataError> {
        let name = name.into();
        self.check_new_column(&name, output.len())?;
        self.output = Some((name, output));
        Ok(self)
    }

    pub fn with_auxiliary(
        mut self,
        name: impl Into<String>,
        values: Vec<f64>,
    ) -> Result<Self, DataError> {
        let name = name.into();
        self.check_new_column(&name, values.len())?;
        check_finite(&name, &values)?;
        self.auxiliary.push(AuxColumn { name, values });
        Ok(self)
    }

    fn check_new_column(&self, name: &str, len: usize) -> Result<(), DataError> {
        if len != self.n() {
            return Err(DataError::LengthMismatch {
                column: name.to_string(),
                expected: self.n(),
                found: len,
            });
        }
        if self.column_values(name).is_some() {
            return Err(DataError::DuplicateName(name.to_string()));
        }
        Ok(())
    }

    /// Number of observations.
    pub fn n(&self) -> usize {
        self.features[0].len()
    }

    /// Number of features.
    pub fn k(&self) -> usize {
        self.features.len()
    }

    pub fn features(&self) -> &[FeatureColumn] {
        &self.features
    }

    pub fn feature(&self, i: usize) -> &FeatureColumn {
        &self.features[i]
    }

    pub fn feature_names(&self) -> Vec<&str> {
        self.features.iter().map(|f| f.name()).collect()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn output(&self) -> Option<&OutputVector> {
        self.output.as_ref().map(|(_, o)| o)
    }

    pub fn output_name(&self) -> Option<&str> {
        self.output.as_ref().map(|(n, _)| n.as_str())
    }

    pub fn auxiliary(&self) -> &[AuxColumn] {
        &self.auxiliary
    }

    /// Looks a column up by name among features, auxiliary columns and the
    /// output.
    pub fn column_values(&self, name: &str) -> Option<&[f64]> {
        if let Some(f) = self.features.iter().find(|f| f.name == name) {
            return Some(f.values());
        }
        if let Some(a) = self.auxiliary.iter().find(|a| a.name == name) {
            return Some(&a.values);
        }
        match &self.output {
            Some((n, o)) if n == name => Some(o.values()),
            _ => None,
        }
    }

    /// Feature values of row `i`, in feature order.
    pub fn row(&self, i: usize) -> Vec<f64> {
        self.features.iter().map(|f| f.values[i]).collect()
    }

    pub fn write_row(&self, i: usize, buf: &mut [f64]) {
        for (slot, f) in buf.iter_mut().zip(&self.features) {
            *slot = f.values[i];
        }
    }

    /// Row subset in the given order. Indices must be in range.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self, DataError> {
        let n = self.n();
        if rows.is_empty() {
            return Err(DataError::Empty);
        }
        if let Some(&index) = rows.iter().find(|&&r| r >= n) {
            return Err(DataError::RowOutOfRange { index, n });
        }
        Ok(Self {
            features: self.features.iter().map(|f| f.select(rows)).collect(),
            output: self
                .output
                .as_ref()
                .map(|(name, o)| (name.clone(), o.select(rows))),
            auxiliary: self
                .auxiliary
                .iter()
                .map(|a| AuxColumn {
                    name: a.name.clone(),
                    values: rows.iter().map(|&r| a.values[r]).collect(),
                })
                .collect(),
        })
    }
}

/// Options controlling how a CSV file is mapped onto a [`Dataset`].
#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Column holding the observed output. Excluded from the features.
    pub output_col: Option<String>,
    /// Columns kept as auxiliary (e.g. precomputed predictions).
    pub auxiliary: Vec<String>,
    /// Columns dropped entirely.
    pub drop: Vec<String>,
    pub hints: HashMap<String, FeatureKind>,
    pub max_categories: usize,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            output_col: None,
            auxiliary: Vec::new(),
            drop: Vec::new(),
            hints: HashMap::new(),
            max_categories: DEFAULT_MAX_CATEGORIES,
        }
    }
}

impl LoadOptions {
    pub fn with_output(col: impl Into<String>) -> Self {
        Self {
            output_col: Some(col.into()),
            ..Self::default()
        }
    }
}

pub fn load_dataset(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<Dataset, DataError> {
    read_dataset(File::open(path)?, opts)
}

pub fn read_dataset<R: Read>(reader: R, opts: &LoadOptions) -> Result<Dataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.is_empty() || header.iter().all(|h| h.is_empty()) {
        return Err(DataError::Empty);
    }
    let mut seen = HashSet::new();
    for h in &header {
        if !seen.insert(h.as_str()) {
            return Err(DataError::DuplicateName(h.clone()));
        }
    }
    let wanted = opts
        .output_col
        .iter()
        .chain(&opts.auxiliary)
        .chain(&opts.drop)
        .chain(opts.hints.keys());
    for name in wanted {
        if !seen.contains(name.as_str()) {
            return Err(DataError::MissingColumn(name.clone()));
        }
    }

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        // header is line 1
        let line = i + 2;
        if record.len() != header.len() {
            return Err(DataError::RaggedRow {
                line,
                expected: header.len(),
                found: record.len(),
            });
        }
        for (c, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| DataError::NonNumeric {
                line,
                column: header[c].clone(),
                value: field.to_string(),
            })?;
            columns[c].push(value);
        }
    }
    if columns[0].is_empty() {
        return Err(DataError::Empty);
    }

    let mut features = Vec::new();
    let mut output = None;
    let mut auxiliary = Vec::new();
    for (name, values) in header.into_iter().zip(columns) {
        if opts.drop.contains(&name) {
            continue;
        }
        if opts.output_col.as_deref() == Some(name.as_str()) {
            output = Some((name, values));
        } else if opts.auxiliary.contains(&name) {
            auxiliary.push((name, values));
        } else {
            let col = match opts.hints.get(&name) {
                Some(&kind) => FeatureColumn::new(name, kind, values)?,
                None => FeatureColumn::auto(name, values, opts.max_categories)?,
            };
            features.push(col);
        }
    }

    let mut ds = Dataset::new(features)?;
    for (name, values) in auxiliary {
        ds = ds.with_auxiliary(name, values)?;
    }
    if let Some((name, values)) = output {
        ds = ds.with_output(name, OutputVector::new(values)?)?;
    }
    Ok(ds)
}

pub fn write_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<(), DataError> {
    let file = File::create(path)?;
    write_dataset_to(dataset, file)
}

/// Writes features, then auxiliary columns, then the output column. Values use
/// the shortest representation that parses back to the same `f64`.
pub fn write_dataset_to<W: Write>(dataset: &Dataset, writer: W) -> Result<(), DataError> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut names: Vec<&str> = dataset.feature_names();
    let mut cols: Vec<&[f64]> = dataset.features.iter().map(|f| f.values()).collect();
    for a in &dataset.auxiliary {
        names.push(&a.name);
        cols.push(&a.values);
    }
    if let Some((name, o)) = &dataset.output {
        names.push(name);
        cols.push(o.values());
    }
    wtr.write_record(&names)?;
    let mut record = Vec::with_capacity(cols.len());
    for i in 0..dataset.n() {
        record.clear();
        record.extend(cols.iter().map(|c| c[i].to_string()));
        wtr.write_record(&record)?;
    }
    wtr.flush()?;
    Ok(())
}
