//! Distances between empirical measures that may live in spaces of different
//! dimension.
//!
//! A measure `mu` on R^d' and a measure `delta` on R^d (d' <= d) are compared
//! either by projecting `delta` down with an orthonormal affine map
//! `x -> Px + b` ([`projection_distance`]) or by rigidly embedding `mu` into
//! R^d ([`embedding_distance`]). Both take the infimum of a histogram
//! f-divergence over the map; the infimum is approximated by random restarts
//! plus small-rotation hill climbing.

mod divergence;
mod histogram;
mod search;

pub use divergence::{f_divergence, DivergenceKind};
pub use histogram::{histogram, Grid, GridSpec, HistogramGrid, DEFAULT_PAD_FRACTION};
pub use search::{
    distance_hat, embedding_distance, projection_distance, DistanceConfig, DistanceHat,
    DistanceResult, SearchConfig,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DimDistError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("target dimension {low} exceeds source dimension {high}")]
    DimensionOrder { low: usize, high: usize },
    #[error("measure has no points")]
    EmptyMeasure,
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("rows of the map are not orthonormal (max deviation {0:e})")]
    NotOrthonormal(f64),
    #[error("bin count must be at least 1")]
    ZeroBins,
    #[error("histogram would need {cells} cells, budget is {budget}")]
    TooManyCells { cells: u128, budget: usize },
    #[error("point {index} lies outside the shared grid")]
    PointOutsideGrid { index: usize },
    #[error("histograms are defined on different grids")]
    GridMismatch,
    #[error("KL divergence is infinite: p has mass where q has none")]
    InfiniteDivergence,
    #[error("non-finite coordinate in point {index}")]
    NonFinite { index: usize },
}

/// Weighted point cloud in R^dim. Weights default to uniform.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    dim: usize,
    points: Vec<f64>,
    weights: Option<Vec<f64>>,
}

impl EmpiricalMeasure {
    /// `points` is row-major, `len * dim` coordinates.
    pub fn from_flat(dim: usize, points: Vec<f64>) -> Result<Self, DimDistError> {
        if dim == 0 || points.is_empty() {
            return Err(DimDistError::EmptyMeasure);
        }
        if !points.len().is_multiple_of(dim) {
            return Err(DimDistError::DimensionMismatch {
                expected: dim,
                found: points.len() % dim,
            });
        }
        if let Some(i) = points.iter().position(|v| !v.is_finite()) {
            return Err(DimDistError::NonFinite { index: i / dim });
        }
        Ok(Self {
            dim,
            points,
            weights: None,
        })
    }

    pub fn from_points(points: &[Vec<f64>]) -> Result<Self, DimDistError> {
        let dim = points.first().ok_or(DimDistError::EmptyMeasure)?.len();
        let mut flat = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.len() != dim {
                return Err(DimDistError::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            flat.extend_from_slice(p);
        }
        Self::from_flat(dim, flat)
    }

    pub fn from_scalars(values: &[f64]) -> Result<Self, DimDistError> {
        Self::from_flat(1, values.to_vec())
    }

    /// Weights must be nonnegative and sum to 1 within 1e-12.
    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self, DimDistError> {
        if weights.len() != self.len() {
            return Err(DimDistError::InvalidWeights(format!(
                "{} weights for {} points",
                weights.len(),
                self.len()
            )));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(DimDistError::InvalidWeights("negative weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(DimDistError::InvalidWeights(format!(
                "weights sum to {total}"
            )));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn weight(&self, i: usize) -> f64 {
        match &self.weights {
            Some(w) => w[i],
            None => 1.0 / self.len() as f64,
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for (i, p) in self.points().enumerate() {
            let w = self.weight(i);
            for (acc, x) in m.iter_mut().zip(p) {
                *acc += w * x;
            }
        }
        m
    }

    /// Largest distance from `center` to a point.
    pub fn radius_about(&self, center: &[f64]) -> f64 {
        self.points()
            .map(|p| {
                p.iter()
                    .zip(center)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// `x -> P x + b` with `P` a `rows x cols` matrix whose rows are orthonormal.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalMap {
    rows: usize,
    cols: usize,
    matrix: Vec<f64>,
    offset: Vec<f64>,
}

pub const ORTHONORMAL_TOLERANCE: f64 = 1e-10;

impl OrthonormalMap {
    pub fn new(matrix: &[Vec<f64>], offset: Vec<f64>) -> Result<Self, DimDistError> {
        let rows = matrix.len();
        let cols = matrix.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 {
            return Err(DimDistError::EmptyMeasure);
        }
        let mut flat = Vec::with_capacity(rows * cols);
        for r in matrix {
            if r.len() != cols {
                return Err(DimDistError::DimensionMismatch {
                    expected: cols,
                    found: r.len(),
                });
            }
            flat.extend_from_slice(r);
        }
        Self::from_flat(rows, cols, flat, offset)
    }

    pub fn from_flat(
        rows: usize,
        cols: usize,
        matrix: Vec<f64>,
        offset: Vec<f64>,
    ) -> Result<Self, DimDistError> {
        if rows > cols {
            return Err(DimDistError::DimensionOrder {
                low: cols,
                high: rows,
            });
        }
        if offset.len() != rows {
            return Err(DimDistError::DimensionMismatch {
                expected: rows,
                found: offset.len(),
            });
        }
        let map = Self {
            rows,
            cols,
            matrix,
            offset,
        };
        let dev = map.orthonormality_error();
        if dev > ORTHONORMAL_TOLERANCE {
            return Err(DimDistError::NotOrthonormal(dev));
        }
        Ok(map)
    }

    pub(crate) fn from_parts_unchecked(
        rows: usize,
        cols: usize,
        matrix: Vec<f64>,
        offset: Vec<f64>,
    ) -> Self {
        Self {
            rows,
            cols,
            matrix,
            offset,
        }
    }

    pub fn identity(d: usize) -> Self {
        Self::coordinate(d, d)
    }

    /// Keeps the first `rows` coordinates.
    pub fn coordinate(rows: usize, cols: usize) -> Self {
        assert!(rows <= cols);
        let mut matrix = vec![0.0; rows * cols];
        for i in 0..rows {
            matrix[i * cols + i] = 1.0;
        }
        Self {
            rows,
            cols,
            matrix,
            offset: vec![0.0; rows],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn matrix_row(&self, i: usize) -> &[f64] {
        &self.matrix[i * self.cols..(i + 1) * self.cols]
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    /// `max |P P^T - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..self.rows {
                let dot: f64 = self
                    .matrix_row(i)
                    .iter()
                    .zip(self.matrix_row(j))
                    .map(|(a, b)| a * b)
                    .sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let row = self.matrix_row(i);
            *o = self.offset[i] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.apply_into(x, &mut out);
        out
    }
}

/// Image of `m` under `map`; weights carry over unchanged.
pub fn pushforward(
    map: &OrthonormalMap,
    m: &EmpiricalMeasure,
) -> Result<EmpiricalMeasure, DimDistError> {
    if map.cols != m.dim {
        return Err(DimDistError::DimensionMismatch {
            expected: map.cols,
            found: m.dim,
        });
    }
    let mut points = vec![0.0; m.len() * map.rows];
    for (p, out) in m.points().zip(points.chunks_exact_mut(map.rows)) {
        map.apply_into(p, out);
    }
    Ok(EmpiricalMeasure {
        dim: map.rows,
        points,
        weights: m.weights.clone(),
    })
}
