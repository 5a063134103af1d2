//! Partial correlation impact ratio (PCIR) for independent features and the
//! ratio model built from it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{FeatureColumn, OutputVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PcirError {
    #[error("empty input")]
    Empty,
    #[error("length mismatch: feature has {feature} values, output has {output}")]
    LengthMismatch { feature: usize, output: usize },
    #[error("feature `{0}`: feature and output are constant and equal, ratio is 0/0")]
    Degenerate(String),
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
    #[error("row has {found} values, model expects {expected}")]
    RowWidth { expected: usize, found: usize },
    #[error("denominator is zero")]
    SingularRow,
    #[error("step must be positive and finite, got {0}")]
    BadStep(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Numerator,
    Denominator,
}

impl Direction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::Numerator => "numerator",
            Direction::Denominator => "denominator",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Means {
    pub f_mean: f64,
    pub y_mean: f64,
    pub joint_mean: f64,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn check_lengths(f: &[f64], y: &[f64]) -> Result<(), PcirError> {
    if f.len() != y.len() {
        return Err(PcirError::LengthMismatch {
            feature: f.len(),
            output: y.len(),
        });
    }
    if f.is_empty() {
        return Err(PcirError::Empty);
    }
    Ok(())
}

pub fn feature_means(f: &[f64], y: &[f64]) -> Result<Means, PcirError> {
    check_lengths(f, y)?;
    let f_mean = mean(f);
    let y_mean = mean(y);
    Ok(Means {
        f_mean,
        y_mean,
        joint_mean: 0.5 * (f_mean + y_mean),
    })
}

/// Raw ratio on slices; `None` for the 0/0 case.
///
/// Uses the decomposition total SS = between SS + within SS about the joint
/// mean. With two equal-size groups the between part is `n (f̂ - ŷ)² / 2`,
/// so the ratio lands in [0, 1] without any clamping.
pub fn pcir_ratio(f: &[f64], y: &[f64]) -> Result<Option<f64>, PcirError> {
    let m = feature_means(f, y)?;
    let n = f.len() as f64;
    let diff = m.f_mean - m.y_mean;
    let between = n * diff * diff / 2.0;
    let within = sum_sq(f, m.f_mean) + sum_sq(y, m.y_mean);
    let total = between + within;
    if total == 0.0 {
        return Ok(None);
    }
    Ok(Some(between / total))
}

fn sum_sq(v: &[f64], center: f64) -> f64 {
    v.iter().map(|x| (x - center) * (x - center)).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcirScore {
    pub name: String,
    pub eta: f64,
    pub f_mean: f64,
    pub y_mean: f64,
    pub joint_mean: f64,
    pub direction: Direction,
    /// Zero covariance: the direction defaulted to numerator.
    pub direction_tie: bool,
}

pub fn pcir(f: &FeatureColumn, y: &OutputVector) -> Result<PcirScore, PcirError> {
    pcir_values(f.name(), f.values(), y.values())
}

pub fn pcir_values(name: &str, f: &[f64], y: &[f64]) -> Result<PcirScore, PcirError> {
    let eta = pcir_ratio(f, y)?.ok_or_else(|| PcirError::Degenerate(name.to_string()))?;
    let m = feature_means(f, y)?;
    let (direction, direction_tie) = assign_direction(f, y)?;
    Ok(PcirScore {
        name: name.to_string(),
        eta,
        f_mean: m.f_mean,
        y_mean: m.y_mean,
        joint_mean: m.joint_mean,
        direction,
        direction_tie,
    })
}

/// Numerator iff the sample covariance is nonnegative. The flag is set when
/// the covariance is exactly zero.
pub fn assign_direction(f: &[f64], y: &[f64]) -> Result<(Direction, bool), PcirError> {
    check_lengths(f, y)?;
    let (fm, ym) = (mean(f), mean(y));
    let cov: f64 = f.iter().zip(y).map(|(a, b)| (a - fm) * (b - ym)).sum();
    Ok(if cov > 0.0 {
        (Direction::Numerator, false)
    } else if cov < 0.0 {
        (Direction::Denominator, false)
    } else {
        (Direction::Numerator, true)
    })
}

/// Ratio model weighted by PCIR values: the first `m` features form the
/// numerator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependentModelSpec {
    etas: Vec<f64>,
    m: usize,
}

impl IndependentModelSpec {
    pub fn new(etas: Vec<f64>, m: usize) -> Result<Self, PcirError> {
        if m == 0 || m >= etas.len() {
            return Err(PcirError::InvalidSpec(format!(
                "split {m} must satisfy 1 <= m < {}",
                etas.len()
            )));
        }
        if let Some(bad) = etas.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(PcirError::InvalidSpec(format!("eta {bad} outside [0, 1]")));
        }
        Ok(Self { etas, m })
    }

    pub fn etas(&self) -> &[f64] {
        &self.etas
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.etas.len()
    }

    fn parts(&self, row: &[f64]) -> Result<(f64, f64), PcirError> {
        if row.len() != self.k() {
            return Err(PcirError::RowWidth {
                expected: self.k(),
                found: row.len(),
            });
        }
        let dot = |r: std::ops::Range<usize>| -> f64 { r.map(|i| self.etas[i] * row[i]).sum() };
        Ok((dot(0..self.m), dot(self.m..self.k())))
    }
}

pub fn excir_independent_predict(
    spec: &IndependentModelSpec,
    row: &[f64],
) -> Result<f64, PcirError> {
    let (num, den) = spec.parts(row)?;
    if den == 0.0 {
        return Err(PcirError::SingularRow);
    }
    Ok(num / den)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeCheck {
    pub analytic: f64,
    pub finite_diff: f64,
    /// `analytic / eta`; `NaN` when eta is zero.
    pub ratio_to_eta: f64,
}

/// Partial derivatives of the ratio model at `row`, each feature varied with
/// the others held fixed: `η_j / D` for numerator features and
/// `-η_j N / D²` for denominator features, next to central differences with
/// step `h`.
///
/// `ratio_to_eta` is `1/D` for every numerator feature and `-N/D²` for every
/// denominator feature. The denominator side is therefore proportional to
/// η_j, not to 1/η_j.
pub fn theorem1_check(
    spec: &IndependentModelSpec,
    row: &[f64],
    h: f64,
) -> Result<Vec<DerivativeCheck>, PcirError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(PcirError::BadStep(h));
    }
    let (num, den) = spec.parts(row)?;
    if den == 0.0 {
        return Err(PcirError::SingularRow);
    }
    let mut probe = row.to_vec();
    (0..spec.k())
        .map(|j| {
            let eta = spec.etas[j];
            let analytic = if j < spec.m {
                eta / den
            } else {
                -eta * num / (den * den)
            };
            probe[j] = row[j] + h;
            let up = excir_independent_predict(spec, &probe)?;
            probe[j] = row[j] - h;
            let down = excir_independent_predict(spec, &probe)?;
            probe[j] = row[j];
            Ok(DerivativeCheck {
                analytic,
                finite_diff: (up - down) / (2.0 * h),
                ratio_to_eta: if eta == 0.0 { f64::NAN } else { analytic / eta },
            })
        })
        .collect()
}
