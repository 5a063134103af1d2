use super::{DimDistError, EmpiricalMeasure};

/// Supports are widened by this fraction of their range on each side.
pub const DEFAULT_PAD_FRACTION: f64 = 0.01;

/// Hard cap on `bins^dim`.
pub const MAX_CELLS: usize = 10_000_000;

/// Equal-width grid with `bins` cells per dimension over `[lo_k, hi_k]`.
///
/// A coordinate `x` falls in cell `floor((x - lo) / (hi - lo) * bins)`, with
/// `x == hi` assigned to the last cell. Cells are flattened row-major (last
/// dimension fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    bins: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Grid {
    pub fn new(bins: usize, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, DimDistError> {
        if bins == 0 {
            return Err(DimDistError::ZeroBins);
        }
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(DimDistError::DimensionMismatch {
                expected: lo.len(),
                found: hi.len(),
            });
        }
        let cells = (bins as u128)
            .checked_pow(lo.len() as u32)
            .unwrap_or(u128::MAX);
        if cells > MAX_CELLS as u128 {
            return Err(DimDistError::TooManyCells {
                cells,
                budget: MAX_CELLS,
            });
        }
        Ok(Self { bins, lo, hi })
    }

    /// Bounds padded by `pad_fraction` of each range; a zero-width range
    /// becomes a unit interval centred on the value.
    pub fn padded(
        bins: usize,
        lo: &[f64],
        hi: &[f64],
        pad_fraction: f64,
    ) -> Result<Self, DimDistError> {
        let (lo, hi): (Vec<f64>, Vec<f64>) = lo
            .iter()
            .zip(hi)
            .map(|(&l, &h)| {
                let range = h - l;
                if range > 0.0 {
                    let pad = pad_fraction * range;
                    (l - pad, h + pad)
                } else {
                    (l - 0.5, h + 0.5)
                }
            })
            .unzip();
        Self::new(bins, lo, hi)
    }

    /// Padded bounding box of all points of all `measures`.
    pub fn covering(bins: usize, measures: &[&EmpiricalMeasure]) -> Result<Self, DimDistError> {
        let dim = measures.first().ok_or(DimDistError::EmptyMeasure)?.dim();
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for m in measures {
            if m.dim() != dim {
                return Err(DimDistError::DimensionMismatch {
                    expected: dim,
                    found: m.dim(),
                });
            }
            extend_bounds(m, &mut lo, &mut hi);
        }
        Self::padded(bins, &lo, &hi, DEFAULT_PAD_FRACTION)
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn cells(&self) -> usize {
        self.bins.pow(self.dim() as u32)
    }

    pub fn axis_cell(&self, axis: usize, x: f64) -> Option<usize> {
        let (lo, hi) = (self.lo[axis], self.hi[axis]);
        if !(x >= lo && x <= hi) {
            return None;
        }
        let width = hi - lo;
        if width <= 0.0 {
            return Some(0);
        }
        let c = ((x - lo) / width * self.bins as f64) as usize;
        Some(c.min(self.bins - 1))
    }

    /// Flattened cell index of a point, or `None` outside the grid.
    pub fn cell(&self, point: &[f64]) -> Option<usize> {
        let mut idx = 0;
        for (axis, &x) in point.iter().enumerate() {
            idx = idx * self.bins + self.axis_cell(axis, x)?;
        }
        Some(idx)
    }
}

pub(crate) fn extend_bounds(m: &EmpiricalMeasure, lo: &mut [f64], hi: &mut [f64]) {
    for p in m.points() {
        for ((l, h), &x) in lo.iter_mut().zip(hi.iter_mut()).zip(p) {
            *l = l.min(x);
            *h = h.max(x);
        }
    }
}

/// Cell masses of a measure on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramGrid {
    grid: Grid,
    masses: Vec<f64>,
}

impl HistogramGrid {
    /// Masses must be nonnegative, one per cell, summing to 1.
    pub fn from_masses(grid: Grid, masses: Vec<f64>) -> Result<Self, DimDistError> {
        if masses.len() != grid.cells() {
            return Err(DimDistError::DimensionMismatch {
                expected: grid.cells(),
                found: masses.len(),
            });
        }
        if masses.iter().any(|m| !(*m >= 0.0)) {
            return Err(DimDistError::InvalidWeights("negative mass".into()));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(DimDistError::InvalidWeights(format!(
                "masses sum to {total}"
            )));
        }
        Ok(Self { grid, masses })
    }

    /// Masses from integer counts, `count / total`.
    pub fn from_counts(grid: Grid, counts: &[usize]) -> Self {
        let total: usize = counts.iter().sum();
        let scale = total as f64;
        Self {
            grid,
            masses: counts.iter().map(|&c| c as f64 / scale).collect(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }
}

pub enum GridSpec<'a> {
    /// `B` bins per dimension over the measure's own padded bounding box.
    Bins(usize),
    /// A grid shared with other histograms; every point must fall inside.
    Shared(&'a Grid),
}

pub fn histogram(m: &EmpiricalMeasure, spec: GridSpec<'_>) -> Result<HistogramGrid, DimDistError> {
    let grid = match spec {
        GridSpec::Bins(b) => Grid::covering(b, &[m])?,
        GridSpec::Shared(g) => {
            if g.dim() != m.dim() {
                return Err(DimDistError::DimensionMismatch {
                    expected: g.dim(),
                    found: m.dim(),
                });
            }
            g.clone()
        }
    };
    match m.weights() {
        None => {
            let mut counts = vec![0usize; grid.cells()];
            for (i, p) in m.points().enumerate() {
                let c = grid
                    .cell(p)
                    .ok_or(DimDistError::PointOutsideGrid { index: i })?;
                counts[c] += 1;
            }
            Ok(HistogramGrid::from_counts(grid, &counts))
        }
        Some(w) => {
            let mut masses = vec![0.0; grid.cells()];
            for (i, p) in m.points().enumerate() {
                let c = grid
                    .cell(p)
                    .ok_or(DimDistError::PointOutsideGrid { index: i })?;
                masses[c] += w[i];
            }
            Ok(HistogramGrid { grid, masses })
        }
    }
}
