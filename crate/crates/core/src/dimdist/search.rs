use rayon::prelude::*;

use super::divergence::{js_bits, kl_bits};
use super::histogram::{extend_bounds, Grid, HistogramGrid, DEFAULT_PAD_FRACTION};
use super::{DimDistError, DivergenceKind, EmpiricalMeasure, OrthonormalMap};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    /// Independent starting maps. Restart 0 always starts from the
    /// coordinate projection; the others from random orthonormal matrices.
    pub restarts: usize,
    /// Hill-climbing steps per restart.
    pub refine_iters: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            restarts: 64,
            refine_iters: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceConfig {
    pub kind: DivergenceKind,
    pub bins: usize,
    pub epsilon: f64,
    pub search: SearchConfig,
}

impl Default for DistanceConfig {
    fn default() -> Self {
        Self {
            kind: DivergenceKind::Js,
            bins: 32,
            epsilon: 1e-10,
            search: SearchConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceResult {
    /// Divergence in bits at the best map found.
    pub value: f64,
    /// Best map `x -> Px + b` from R^d onto R^d'.
    pub map: OrthonormalMap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceHat {
    pub value: f64,
    pub projection: DistanceResult,
    pub embedding: DistanceResult,
    /// `|projection - embedding|`; zero in exact arithmetic for an exact
    /// search.
    pub disagreement: f64,
}

/// A fixed histogram problem: the reference histogram is built once and each
/// candidate map is scored by re-binning the moving measure.
struct Problem<'a> {
    reference: HistogramGrid,
    moving: &'a EmpiricalMeasure,
    moving_center: Vec<f64>,
    target_center: Vec<f64>,
    /// true: moving points are mapped by `P` (projection, d -> d');
    /// false: by `P^T` (embedding, d' -> d).
    forward: bool,
    rows: usize,
    cols: usize,
    kind: DivergenceKind,
    epsilon: f64,
}

impl Problem<'_> {
    fn evaluate(&self, p: &[f64]) -> f64 {
        let grid = self.reference.grid();
        let out_dim = self.target_center.len();
        let in_dim = self.moving_center.len();
        let mut centered = vec![0.0; in_dim];
        let mut image = vec![0.0; out_dim];
        let mut counts = vec![0usize; grid.cells()];
        let mut weighted = self.moving.weights().map(|_| vec![0.0; grid.cells()]);
        for (i, x) in self.moving.points().enumerate() {
            for ((c, &xi), &m) in centered.iter_mut().zip(x).zip(&self.moving_center) {
                *c = xi - m;
            }
            if self.forward {
                for (r, out) in image.iter_mut().enumerate() {
                    let row = &p[r * self.cols..(r + 1) * self.cols];
                    *out = row.iter().zip(&centered).map(|(a, b)| a * b).sum();
                }
            } else {
                for (c, out) in image.iter_mut().enumerate() {
                    *out = (0..self.rows)
                        .map(|r| p[r * self.cols + c] * centered[r])
                        .sum();
                }
            }
            for (out, &t) in image.iter_mut().zip(&self.target_center) {
                *out += t;
            }
            // Images lie within the radius used to size the grid, so a miss
            // can only come from rounding at the padded edge.
            let cell = match grid.cell(&image) {
                Some(c) => c,
                None => return f64::INFINITY,
            };
            match &mut weighted {
                Some(w) => w[cell] += self.moving.weight(i),
                None => counts[cell] += 1,
            }
        }
        let moved = match weighted {
            Some(w) => w,
            None => {
                let total = self.moving.len() as f64;
                counts.iter().map(|&c| c as f64 / total).collect()
            }
        };
        let reference = self.reference.masses();
        match self.kind {
            DivergenceKind::Kl => kl_bits(reference, &moved, self.epsilon).unwrap_or(f64::INFINITY),
            DivergenceKind::Js => js_bits(reference, &moved),
        }
    }
}

/// Grid over `anchor`'s bounding box widened to contain the ball of radius
/// `radius` about `center`.
fn anchored_grid(
    bins: usize,
    anchor: &EmpiricalMeasure,
    center: &[f64],
    radius: f64,
) -> Result<Grid, DimDistError> {
    let mut lo: Vec<f64> = center.iter().map(|c| c - radius).collect();
    let mut hi: Vec<f64> = center.iter().map(|c| c + radius).collect();
    extend_bounds(anchor, &mut lo, &mut hi);
    Grid::padded(bins, &lo, &hi, DEFAULT_PAD_FRACTION)
}

fn check_dims(mu: &EmpiricalMeasure, delta: &EmpiricalMeasure) -> Result<(), DimDistError> {
    if mu.dim() > delta.dim() {
        return Err(DimDistError::DimensionOrder {
            low: delta.dim(),
            high: mu.dim(),
        });
    }
    Ok(())
}

/// Random `rows x cols` matrix with orthonormal rows: Gram-Schmidt on a
/// Gaussian matrix.
pub(crate) fn random_orthonormal(
    rng: &mut Rng,
    rows: usize,
    cols: usize,
    offset: Vec<f64>,
) -> OrthonormalMap {
    loop {
        let mut m: Vec<f64> = (0..rows * cols).map(|_| rng.normal()).collect();
        if gram_schmidt(&mut m, rows, cols) {
            return OrthonormalMap::from_parts_unchecked(rows, cols, m, offset);
        }
    }
}

/// Orthonormalizes rows in place (two passes). False if the rows are
/// numerically dependent.
fn gram_schmidt(m: &mut [f64], rows: usize, cols: usize) -> bool {
    for i in 0..rows {
        for _ in 0..2 {
            for j in 0..i {
                let dot: f64 = (0..cols).map(|c| m[i * cols + c] * m[j * cols + c]).sum();
                for c in 0..cols {
                    m[i * cols + c] -= dot * m[j * cols + c];
                }
            }
        }
        let norm: f64 = (0..cols)
            .map(|c| m[i * cols + c].powi(2))
            .sum::<f64>()
            .sqrt();
        if norm < 1e-8 {
            return false;
        }
        for c in 0..cols {
            m[i * cols + c] /= norm;
        }
    }
    true
}

/// Rotates columns `a` and `b` of every row by `theta` (right-multiplication
/// by a Givens rotation), preserving row orthonormality.
fn rotate_columns(m: &mut [f64], rows: usize, cols: usize, a: usize, b: usize, theta: f64) {
    let (s, c) = theta.sin_cos();
    for r in 0..rows {
        let (x, y) = (m[r * cols + a], m[r * cols + b]);
        m[r * cols + a] = c * x - s * y;
        m[r * cols + b] = s * x + c * y;
    }
}

/// Best `(value, matrix)` over restarts. Ties resolve to the lowest restart.
fn search(problem: &Problem<'_>, cfg: &SearchConfig) -> (f64, Vec<f64>) {
    let (rows, cols) = (problem.rows, problem.cols);
    let restarts = cfg.restarts.max(1);
    let results: Vec<(f64, Vec<f64>)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = Rng::derive(cfg.seed, r as u64);
            let mut p = if r == 0 {
                let mut m = vec![0.0; rows * cols];
                for i in 0..rows {
                    m[i * cols + i] = 1.0;
                }
                m
            } else {
                let map = random_orthonormal(&mut rng, rows, cols, vec![0.0; rows]);
                (0..rows).flat_map(|i| map.matrix_row(i).to_vec()).collect()
            };
            let mut value = problem.evaluate(&p);
            if cols < 2 {
                return (value, p);
            }
            let mut step = 0.5f64;
            let mut trial = p.clone();
            for _ in 0..cfg.refine_iters {
                let a = rng.below(cols);
                let mut b = rng.below(cols - 1);
                if b >= a {
                    b += 1;
                }
                let theta = step * rng.normal();
                trial.copy_from_slice(&p);
                rotate_columns(&mut trial, rows, cols, a, b, theta);
                let v = problem.evaluate(&trial);
                if v <= value {
                    value = v;
                    std::mem::swap(&mut p, &mut trial);
                    step = (step * 1.5).min(std::f64::consts::PI);
                } else {
                    step = (step * 0.8).max(1e-4);
                }
            }
            (value, p)
        })
        .collect();
    let mut best = 0;
    for (i, (v, _)) in results.iter().enumerate() {
        if *v < results[best].0 {
            best = i;
        }
    }
    results.into_iter().nth(best).expect("at least one restart")
}

fn finish(
    value: f64,
    rows: usize,
    cols: usize,
    p: Vec<f64>,
    mu_center: &[f64],
    delta_center: &[f64],
) -> Result<DistanceResult, DimDistError> {
    if !value.is_finite() {
        return Err(DimDistError::InfiniteDivergence);
    }
    // b = mean(mu) - P mean(delta), so that x -> Px + b aligns the means.
    let offset = (0..rows)
        .map(|r| {
            mu_center[r]
                - (0..cols)
                    .map(|c| p[r * cols + c] * delta_center[c])
                    .sum::<f64>()
        })
        .collect();
    let map = OrthonormalMap::from_parts_unchecked(rows, cols, p, offset);
    debug_assert!(map.orthonormality_error() <= super::ORTHONORMAL_TOLERANCE);
    Ok(DistanceResult { value, map })
}

/// `inf_P d(mu, Phi_{P,b}(delta))` over orthonormal `P` (d' x d), with `b`
/// fixed by mean alignment. Both histograms share a grid covering `mu` and
/// every possible image of `delta`.
pub fn projection_distance(
    mu: &EmpiricalMeasure,
    delta: &EmpiricalMeasure,
    cfg: &DistanceConfig,
) -> Result<DistanceResult, DimDistError> {
    check_dims(mu, delta)?;
    let mu_center = mu.mean();
    let delta_center = delta.mean();
    let radius = delta.radius_about(&delta_center);
    let grid = anchored_grid(cfg.bins, mu, &mu_center, radius)?;
    let reference = super::histogram(mu, super::GridSpec::Shared(&grid))?;
    let problem = Problem {
        reference,
        moving: delta,
        moving_center: delta_center.clone(),
        target_center: mu_center.clone(),
        forward: true,
        rows: mu.dim(),
        cols: delta.dim(),
        kind: cfg.kind,
        epsilon: cfg.epsilon,
    };
    let (value, p) = search(&problem, &cfg.search);
    finish(value, mu.dim(), delta.dim(), p, &mu_center, &delta_center)
}

/// `inf_alpha d(delta, alpha)` over rigid embeddings `alpha` of `mu` into
/// R^d: `alpha = mean(delta) + P^T (x - mean(mu))`, which satisfies
/// `Phi_{P,b}(alpha) = mu` for the returned map.
pub fn embedding_distance(
    mu: &EmpiricalMeasure,
    delta: &EmpiricalMeasure,
    cfg: &DistanceConfig,
) -> Result<DistanceResult, DimDistError> {
    check_dims(mu, delta)?;
    let mu_center = mu.mean();
    let delta_center = delta.mean();
    let radius = mu.radius_about(&mu_center);
    let grid = anchored_grid(cfg.bins, delta, &delta_center, radius)?;
    let reference = super::histogram(delta, super::GridSpec::Shared(&grid))?;
    let problem = Problem {
        reference,
        moving: mu,
        moving_center: mu_center.clone(),
        target_center: delta_center.clone(),
        forward: false,
        rows: mu.dim(),
        cols: delta.dim(),
        kind: cfg.kind,
        epsilon: cfg.epsilon,
    };
    let (value, p) = search(&problem, &cfg.search);
    finish(value, mu.dim(), delta.dim(), p, &mu_center, &delta_center)
}

/// The smaller of the projection and embedding distances.
pub fn distance_hat(
    mu: &EmpiricalMeasure,
    delta: &EmpiricalMeasure,
    cfg: &DistanceConfig,
) -> Result<DistanceHat, DimDistError> {
    let projection = projection_distance(mu, delta, cfg)?;
    let embedding = embedding_distance(mu, delta, cfg)?;
    Ok(DistanceHat {
        value: projection.value.min(embedding.value),
        disagreement: (projection.value - embedding.value).abs(),
        projection,
        embedding,
    })
}
