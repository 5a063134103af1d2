//! Black-box model evaluation.
//!
//! A model is anything that maps a feature row to one real prediction. Three
//! variants are supported: the closed-form ratio model used by the synthetic
//! generators, a column of precomputed predictions, and an external command
//! speaking a line protocol (CSV rows on stdin, one prediction per line on
//! stdout).

use std::io::{BufRead, BufReader, Write};
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{DataError, Dataset, OutputVector};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("row index {index} out of range for {n} rows")]
    RowOutOfRange { index: usize, n: usize },
    #[error("ratio model expects {expected} features, dataset has {found}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("invalid ratio model: {0}")]
    InvalidModel(String),
    #[error("row {row}: denominator is zero")]
    SingularRow { row: usize },
    #[error("prediction column `{0}` not found")]
    MissingColumn(String),
    #[error("failed to run external model `{command}`: {source}")]
    Spawn {
        command: String,
        source: std::io::Error,
    },
    #[error("external model exited with {status}: {stderr}")]
    ExternalFailed { status: String, stderr: String },
    #[error(
        "external model returned {got} predictions for {expected} rows (first offending row {row})"
    )]
    PredictionCount {
        expected: usize,
        got: usize,
        row: usize,
    },
    #[error("row {row}: cannot parse prediction `{text}`")]
    BadPrediction { row: usize, text: String },
    #[error("row {row}: prediction is not finite")]
    NonFinite { row: usize },
    #[error(transparent)]
    Data(#[from] DataError),
}

/// `y = Σ_{i<split} w_i f_i / Σ_{i≥split} w_i f_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioModel {
    weights: Vec<f64>,
    split: usize,
}

impl RatioModel {
    /// The first `split` features form the numerator, the rest the
    /// denominator. Both groups must be non-empty.
    pub fn new(weights: Vec<f64>, split: usize) -> Result<Self, ModelError> {
        if split == 0 || split >= weights.len() {
            return Err(ModelError::InvalidModel(format!(
                "split {split} must satisfy 1 <= split < {}",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(ModelError::InvalidModel("non-finite weight".into()));
        }
        Ok(Self { weights, split })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn split(&self) -> usize {
        self.split
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn numerator(&self, row: &[f64]) -> f64 {
        dot(&self.weights[..self.split], &row[..self.split])
    }

    pub fn denominator(&self, row: &[f64]) -> f64 {
        dot(&self.weights[self.split..], &row[self.split..])
    }

    /// `None` when the denominator vanishes.
    pub fn predict(&self, row: &[f64]) -> Option<f64> {
        let d = self.denominator(row);
        if d == 0.0 {
            None
        } else {
            Some(self.numerator(row) / d)
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelHandle {
    Synthetic(RatioModel),
    Precomputed(String),
    External(String),
}

impl ModelHandle {
    /// Short textual form, matching the CLI `--model` syntax.
    pub fn describe(&self) -> String {
        match self {
            ModelHandle::Synthetic(_) => "synthetic".to_string(),
            ModelHandle::Precomputed(col) => format!("precomputed:{col}"),
            ModelHandle::External(cmd) => format!("exec:{cmd}"),
        }
    }
}

/// One prediction per requested row, in the order given.
pub fn evaluate_model(
    model: &ModelHandle,
    dataset: &Dataset,
    rows: &[usize],
) -> Result<OutputVector, ModelError> {
    let n = dataset.n();
    if let Some(&index) = rows.iter().find(|&&r| r >= n) {
        return Err(ModelError::RowOutOfRange { index, n });
    }
    let values = match model {
        ModelHandle::Synthetic(m) => {
            if m.k() != dataset.k() {
                return Err(ModelError::WidthMismatch {
                    expected: m.k(),
                    found: dataset.k(),
                });
            }
            let mut buf = vec![0.0; dataset.k()];
            rows.iter()
                .map(|&r| {
                    dataset.write_row(r, &mut buf);
                    m.predict(&buf).ok_or(ModelError::SingularRow { row: r })
                })
                .collect::<Result<Vec<_>, _>>()?
        }
        ModelHandle::Precomputed(col) => {
            let values = dataset
                .column_values(col)
                .ok_or_else(|| ModelError::MissingColumn(col.clone()))?;
            rows.iter().map(|&r| values[r]).collect()
        }
        ModelHandle::External(cmd) => run_external(cmd, dataset, rows)?,
    };
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(ModelError::NonFinite { row: rows[i] });
    }
    Ok(OutputVector::new(values)?)
}

fn run_external(cmd: &str, dataset: &Dataset, rows: &[usize]) -> Result<Vec<f64>, ModelError> {
    let spawn_err = |source| ModelError::Spawn {
        command: cmd.to_string(),
        source,
    };
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(cmd)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(spawn_err)?;

    let mut payload = String::new();
    let mut buf = vec![0.0; dataset.k()];
    for &r in rows {
        dataset.write_row(r, &mut buf);
        let line: Vec<String> = buf.iter().map(f64::to_string).collect();
        payload.push_str(&line.join(","));
        payload.push('\n');
    }
    let mut stdin = child.stdin.take().expect("piped stdin");
    // Write on a separate thread so a model that streams output does not
    // deadlock against a full pipe.
    let writer = std::thread::spawn(move || {
        // A model may legitimately exit before reading everything.
        let _ = stdin.write_all(payload.as_bytes());
    });
    let stdout = child.stdout.take().expect("piped stdout");
    let lines: Vec<String> = BufReader::new(stdout)
        .lines()
        .collect::<Result<_, _>>()
        .map_err(spawn_err)?;
    let _ = writer.join();
    let output = child.wait_with_output().map_err(spawn_err)?;
    if !output.status.success() {
        return Err(ModelError::ExternalFailed {
            status: output.status.to_string(),
            stderr: String::from_utf8_lossy(&output.stderr).trim().to_string(),
        });
    }

    let lines: Vec<&str> = lines
        .iter()
        .map(|l| l.trim())
        .filter(|l| !l.is_empty())
        .collect();
    if lines.len() != rows.len() {
        let first_bad = lines.len().min(rows.len());
        return Err(ModelError::PredictionCount {
            expected: rows.len(),
            got: lines.len(),
            row: rows.get(first_bad).copied().unwrap_or(first_bad),
        });
    }
    lines
        .iter()
        .zip(rows)
        .map(|(text, &row)| {
            text.parse::<f64>().map_err(|_| ModelError::BadPrediction {
                row,
                text: text.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{FeatureColumn, FeatureKind};

    fn ones(k: usize, n: usize) -> Dataset {
        let cols = (0..k)
            .map(|i| {
                FeatureColumn::new(format!("f{}", i + 1), FeatureKind::Continuous, vec![1.0; n])
                    .unwrap()
            })
            .collect();
        Dataset::new(cols).unwrap()
    }

    #[test]
    fn synthetic_equal_weights_give_one() {
        let m = ModelHandle::Synthetic(RatioModel::new(vec![0.5; 4], 2).unwrap());
        let y = evaluate_model(&m, &ones(4, 1), &[0]).unwrap();
        assert_eq!(y.values(), &[1.0]);
    }

    #[test]
    fn ratio_model_rejects_bad_split() {
        assert!(RatioModel::new(vec![1.0, 1.0], 0).is_err());
        assert!(RatioModel::new(vec![1.0, 1.0], 2).is_err());
    }

    #[test]
    fn precomputed_is_identity() {
        let ds = ones(1, 3)
            .with_auxiliary("pred", vec![0.25, -1.0, 7.5])
            .unwrap();
        let m = ModelHandle::Precomputed("pred".into());
        let y = evaluate_model(&m, &ds, &[0, 1, 2]).unwrap();
        assert_eq!(y.values(), &[0.25, -1.0, 7.5]);
        let y = evaluate_model(&m, &ds, &[2, 0]).unwrap();
        assert_eq!(y.values(), &[7.5, 0.25]);
        assert!(matches!(
            evaluate_model(&ModelHandle::Precomputed("nope".into()), &ds, &[0]),
            Err(ModelError::MissingColumn(_))
        ));
    }

    #[test]
    fn out_of_range_rows() {
        let m = ModelHandle::Precomputed("f1".into());
        assert!(matches!(
            evaluate_model(&m, &ones(1, 2), &[2]),
            Err(ModelError::RowOutOfRange { index: 2, n: 2 })
        ));
    }

    #[test]
    fn singular_row_reports_index() {
        let ds = Dataset::new(vec![
            FeatureColumn::new("a", FeatureKind::Continuous, vec![1.0, 1.0]).unwrap(),
            FeatureColumn::new("b", FeatureKind::Continuous, vec![1.0, 0.0]).unwrap(),
        ])
        .unwrap();
        let m = ModelHandle::Synthetic(RatioModel::new(vec![1.0, 1.0], 1).unwrap());
        assert!(matches!(
            evaluate_model(&m, &ds, &[0, 1]),
            Err(ModelError::SingularRow { row: 1 })
        ));
    }

    #[test]
    fn external_sums_columns() {
        let ds = Dataset::new(vec![
            FeatureColumn::new("a", FeatureKind::Continuous, vec![1.0, 2.0, 3.0]).unwrap(),
            FeatureColumn::new("b", FeatureKind::Continuous, vec![0.5, 0.5, 0.5]).unwrap(),
        ])
        .unwrap();
        let m = ModelHandle::External("awk -F, '{ print $1 + $2 }'".into());
        let y = evaluate_model(&m, &ds, &[2, 0]).unwrap();
        assert_eq!(y.values(), &[3.5, 1.5]);
    }

    #[test]
    fn external_line_count_mismatch() {
        let m = ModelHandle::External("cat; echo 9".into());
        let err = evaluate_model(&m, &ones(1, 2), &[0, 1]).unwrap_err();
        assert!(matches!(
            err,
            ModelError::PredictionCount {
                expected: 2,
                got: 3,
                ..
            }
        ));
        let m = ModelHandle::External("head -n 1".into());
        let err = evaluate_model(&m, &ones(1, 2), &[0, 1]).unwrap_err();
        assert!(matches!(
            err,
            ModelError::PredictionCount { got: 1, row: 1, .. }
        ));
    }

    #[test]
    fn external_failure_status() {
        let m = ModelHandle::External("exit 4".into());
        assert!(matches!(
            evaluate_model(&m, &ones(1, 1), &[0]),
            Err(ModelError::ExternalFailed { .. })
        ));
    }
}
