use serde::{Deserialize, Serialize};

use super::{DimDistError, HistogramGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DivergenceKind {
    /// Kullback-Leibler, `KL(p || q)`.
    Kl,
    /// Jensen-Shannon, bounded by 1 bit.
    Js,
}

impl DivergenceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DivergenceKind::Kl => "kl",
            DivergenceKind::Js => "js",
        }
    }
}

impl std::str::FromStr for DivergenceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "kl" => Ok(DivergenceKind::Kl),
            "js" => Ok(DivergenceKind::Js),
            other => Err(format!("unknown divergence `{other}` (expected kl or js)")),
        }
    }
}

/// Divergence in bits between two histograms on the same grid.
///
/// For KL, a positive `epsilon` replaces the empty cells of `q` by `epsilon`
/// and renormalizes `q`; with `epsilon == 0` any cell where `p > 0 = q`
/// yields [`DimDistError::InfiniteDivergence`]. `epsilon` does not affect JS.
pub fn f_divergence(
    p: &HistogramGrid,
    q: &HistogramGrid,
    kind: DivergenceKind,
    epsilon: f64,
) -> Result<f64, DimDistError> {
    if p.grid() != q.grid() {
        return Err(DimDistError::GridMismatch);
    }
    match kind {
        DivergenceKind::Kl => kl_bits(p.masses(), q.masses(), epsilon),
        DivergenceKind::Js => Ok(js_bits(p.masses(), q.masses())),
    }
}

pub(crate) fn kl_bits(p: &[f64], q: &[f64], epsilon: f64) -> Result<f64, DimDistError> {
    let smoothing = epsilon > 0.0 && q.contains(&0.0);
    let norm = if smoothing {
        q.iter()
            .map(|&x| if x == 0.0 { epsilon } else { x })
            .sum::<f64>()
    } else {
        1.0
    };
    let mut total = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi == 0.0 {
            continue;
        }
        let qi = if qi == 0.0 {
            if !smoothing {
                return Err(DimDistError::InfiniteDivergence);
            }
            epsilon / norm
        } else if smoothing {
            qi / norm
        } else {
            qi
        };
        total += pi * (pi / qi).log2();
    }
    Ok(total.max(0.0))
}

/// Symmetric in its arguments bit-for-bit: each cell's term is formed from
/// `p + q` and the sum of two commuting contributions.
pub(crate) fn js_bits(p: &[f64], q: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        let m = 0.5 * (pi + qi);
        if m == 0.0 {
            continue;
        }
        total += 0.5 * (js_term(pi, m) + js_term(qi, m));
    }
    total.clamp(0.0, 1.0)
}

fn js_term(x: f64, m: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * (x / m).log2()
    }
}
