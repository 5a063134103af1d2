//! Plug-in information measures over discretized columns, in bits.
//!
//! Every quantity is assembled from joint entropies. Entropies are computed
//! from the multiset of nonzero cell probabilities summed in ascending order,
//! so reordering variables never changes a result, not even in the last bit.

use std::collections::HashMap;

use thiserror::Error;

use crate::dataset::{FeatureColumn, FeatureKind, OutputVector};

pub const DEFAULT_TABLE_BUDGET: usize = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InfoError {
    #[error("joint table needs {cells} cells (arities {arities:?}), budget is {budget}")]
    BudgetExceeded {
        arities: Vec<usize>,
        cells: u128,
        budget: usize,
    },
    #[error("columns have different lengths ({expected} vs {found})")]
    LengthMismatch { expected: usize, found: usize },
    #[error("no columns given")]
    NoColumns,
    #[error("columns are empty")]
    Empty,
    #[error("invalid probability table: {0}")]
    InvalidTable(String),
    #[error("variable index {0} out of range")]
    BadVariable(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ColumnOrigin {
    /// Integer-coded categories, re-coded in first-appearance order.
    Native,
    /// Equal-width bins over `[lo, hi]`.
    Binned { bins: usize, lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedColumn {
    codes: Vec<u32>,
    categories: usize,
    origin: ColumnOrigin,
}

impl DiscretizedColumn {
    /// Codes must all be `< categories`.
    pub fn from_codes(codes: Vec<u32>, categories: usize) -> Result<Self, InfoError> {
        if codes.is_empty() {
            return Err(InfoError::Empty);
        }
        if codes.iter().any(|&c| c as usize >= categories) {
            return Err(InfoError::InvalidTable(format!(
                "code out of range for {categories} categories"
            )));
        }
        Ok(Self {
            codes,
            categories,
            origin: ColumnOrigin::Native,
        })
    }

    pub fn codes(&self) -> &[u32] {
        &self.codes
    }

    pub fn categories(&self) -> usize {
        self.categories
    }

    pub fn origin(&self) -> ColumnOrigin {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn select(&self, rows: &[usize]) -> Self {
        Self {
            codes: rows.iter().map(|&r| self.codes[r]).collect(),
            categories: self.categories,
            origin: self.origin,
        }
    }
}

/// Discrete values keep their categories (re-coded `0..C` by first
/// appearance); continuous values go into `bins` equal-width bins over
/// `[min, max]`. A constant column always yields a single category.
pub fn discretize(values: &[f64], kind: FeatureKind, bins: usize) -> DiscretizedColumn {
    let bins = bins.max(1);
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if values.is_empty() || min == max {
        return DiscretizedColumn {
            codes: vec![0; values.len()],
            categories: 1,
            origin: ColumnOrigin::Native,
        };
    }
    match kind {
        FeatureKind::Discrete => {
            let mut map: HashMap<u64, u32> = HashMap::new();
            let codes = values
                .iter()
                .map(|v| {
                    let next = map.len() as u32;
                    *map.entry(v.to_bits()).or_insert(next)
                })
                .collect();
            DiscretizedColumn {
                codes,
                categories: map.len(),
                origin: ColumnOrigin::Native,
            }
        }
        FeatureKind::Continuous => {
            let width = max - min;
            let codes = values
                .iter()
                .map(|&v| (((v - min) / width * bins as f64) as usize).min(bins - 1) as u32)
                .collect();
            DiscretizedColumn {
                codes,
                categories: bins,
                origin: ColumnOrigin::Binned {
                    bins,
                    lo: min,
                    hi: max,
                },
            }
        }
    }
}

pub fn discretize_feature(col: &FeatureColumn, bins: usize) -> DiscretizedColumn {
    discretize(col.values(), col.kind(), bins)
}

pub fn discretize_output(y: &OutputVector, kind: FeatureKind, bins: usize) -> DiscretizedColumn {
    discretize(y.values(), kind, bins)
}

/// Bias correction applied to every entropy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BiasCorrection {
    /// Maximum likelihood (raw frequencies).
    #[default]
    None,
    /// Adds `(m - 1) / (2 n ln 2)` bits, `m` the number of occupied cells.
    /// Needs a sample count, so it is ignored for probability tables.
    MillerMadow,
}

/// Dense joint table over variables with arities `(C_1, ..., C_v)`, last
/// variable fastest. Tables built from data keep their integer counts so
/// marginals are exact.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    arities: Vec<usize>,
    probs: Vec<f64>,
    counts: Option<Vec<u64>>,
}

fn table_size(arities: &[usize], budget: usize) -> Result<usize, InfoError> {
    let cells = arities
        .iter()
        .try_fold(1u128, |acc, &a| acc.checked_mul(a as u128))
        .unwrap_or(u128::MAX);
    if cells > budget as u128 {
        return Err(InfoError::BudgetExceeded {
            arities: arities.to_vec(),
            cells,
            budget,
        });
    }
    Ok(cells as usize)
}

impl JointDistribution {
    pub fn from_columns(cols: &[&DiscretizedColumn], budget: usize) -> Result<Self, InfoError> {
        let first = cols.first().ok_or(InfoError::NoColumns)?;
        let n = first.len();
        if n == 0 {
            return Err(InfoError::Empty);
        }
        for c in cols {
            if c.len() != n {
                return Err(InfoError::LengthMismatch {
                    expected: n,
                    found: c.len(),
                });
            }
        }
        let arities: Vec<usize> = cols.iter().map(|c| c.categories).collect();
        let size = table_size(&arities, budget)?;
        let mut counts = vec![0u64; size];
        for i in 0..n {
            let mut idx = 0usize;
            for c in cols {
                idx = idx * c.categories + c.codes[i] as usize;
            }
            counts[idx] += 1;
        }
        let total = n as f64;
        let probs = counts.iter().map(|&c| c as f64 / total).collect();
        Ok(Self {
            arities,
            probs,
            counts: Some(counts),
        })
    }

    /// Table from explicit probabilities (e.g. an exhaustive weighted truth
    /// table).
    pub fn from_probabilities(arities: Vec<usize>, probs: Vec<f64>) -> Result<Self, InfoError> {
        let size = table_size(&arities, usize::MAX)?;
        if probs.len() != size {
            return Err(InfoError::InvalidTable(format!(
                "{} entries for {size} cells",
                probs.len()
            )));
        }
        if probs.iter().any(|p| !(*p >= 0.0)) {
            return Err(InfoError::InvalidTable("negative entry".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(InfoError::InvalidTable(format!("entries sum to {total}")));
        }
        Ok(Self {
            arities,
            probs,
            counts: None,
        })
    }

    pub fn arities(&self) -> &[usize] {
        &self.arities
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn variables(&self) -> usize {
        self.arities.len()
    }

    /// Number of observations behind a table built from data.
    pub fn samples(&self) -> Option<u64> {
        self.counts.as_ref().map(|c| c.iter().sum())
    }

    /// Multi-index of a flat cell.
    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.arities.len()];
        for (slot, &a) in idx.iter_mut().zip(&self.arities).rev() {
            *slot = flat % a;
            flat /= a;
        }
        idx
    }

    /// Distribution of the variables `vars` (in that order).
    pub fn marginal(&self, vars: &[usize]) -> Result<Self, InfoError> {
        if let Some(&bad) = vars.iter().find(|&&v| v >= self.arities.len()) {
            return Err(InfoError::BadVariable(bad));
        }
        let arities: Vec<usize> = vars.iter().map(|&v| self.arities[v]).collect();
        let size = table_size(&arities, usize::MAX)?;
        // stride of each kept variable inside the marginal table
        let mut strides = vec![0usize; self.arities.len()];
        let mut s = 1;
        for &v in vars.iter().rev() {
            strides[v] += s;
            s *= self.arities[v];
        }
        let target = |flat: usize| -> usize {
            let mut rem = flat;
            let mut out = 0;
            for (v, &a) in self.arities.iter().enumerate().rev() {
                out += (rem % a) * strides[v];
                rem /= a;
            }
            out
        };
        match &self.counts {
            Some(counts) => {
                let mut m = vec![0u64; size];
                for (flat, &c) in counts.iter().enumerate() {
                    if c > 0 {
                        m[target(flat)] += c;
                    }
                }
                let total: u64 = m.iter().sum();
                let probs = m.iter().map(|&c| c as f64 / total as f64).collect();
                Ok(Self {
                    arities,
                    probs,
                    counts: Some(m),
                })
            }
            None => {
                let mut m = vec![0.0; size];
                for (flat, &p) in self.probs.iter().enumerate() {
                    if p > 0.0 {
                        m[target(flat)] += p;
                    }
                }
                Ok(Self {
                    arities,
                    probs: m,
                    counts: None,
                })
            }
        }
    }

    pub fn entropy(&self, correction: BiasCorrection) -> f64 {
        let h = match &self.counts {
            Some(counts) => {
                let mut nz: Vec<u64> = counts.iter().copied().filter(|&c| c > 0).collect();
                nz.sort_unstable();
                let total = nz.iter().sum::<u64>() as f64;
                let mut h = 0.0;
                for c in &nz {
                    let p = *c as f64 / total;
                    h -= p * p.log2();
                }
                if correction == BiasCorrection::MillerMadow && total > 0.0 {
                    h += (nz.len() as f64 - 1.0) / (2.0 * total * std::f64::consts::LN_2);
                }
                h
            }
            None => {
                let mut nz: Vec<f64> = self.probs.iter().copied().filter(|&p| p > 0.0).collect();
                nz.sort_unstable_by(f64::total_cmp);
                nz.iter().fold(0.0, |h, &p| h - p * p.log2())
            }
        };
        h.max(0.0)
    }

    /// Entropy of the marginal over `vars`; the empty set has entropy 0.
    pub fn entropy_of(&self, vars: &[usize], correction: BiasCorrection) -> Result<f64, InfoError> {
        if vars.is_empty() {
            return Ok(0.0);
        }
        Ok(self.marginal(vars)?.entropy(correction))
    }

    /// `I(Y; X | Z) = H(Y,Z) + H(X,Z) - H(Z) - H(Y,X,Z)` over variable
    /// groups of this table, clamped at zero.
    pub fn conditional_mutual_information(
        &self,
        y: &[usize],
        x: &[usize],
        z: &[usize],
        correction: BiasCorrection,
    ) -> Result<f64, InfoError> {
        let join = |parts: &[&[usize]]| parts.concat();
        let h_yz = self.entropy_of(&join(&[y, z]), correction)?;
        let h_xz = self.entropy_of(&join(&[x, z]), correction)?;
        let h_z = self.entropy_of(z, correction)?;
        let h_yxz = self.entropy_of(&join(&[y, x, z]), correction)?;
        Ok(clamp_information(h_yz + h_xz - h_z - h_yxz))
    }
}

/// Information quantities are nonnegative; rounding can leave a tiny
/// negative residue.
fn clamp_information(v: f64) -> f64 {
    v.max(0.0)
}

/// Estimator settings shared by the column-level functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfoEstimator {
    pub correction: BiasCorrection,
    pub table_budget: usize,
}

impl Default for InfoEstimator {
    fn default() -> Self {
        Self {
            correction: BiasCorrection::None,
            table_budget: DEFAULT_TABLE_BUDGET,
        }
    }
}

impl InfoEstimator {
    pub fn joint(&self, cols: &[&DiscretizedColumn]) -> Result<JointDistribution, InfoError> {
        JointDistribution::from_columns(cols, self.table_budget)
    }

    pub fn entropy(&self, cols: &[&DiscretizedColumn]) -> Result<f64, InfoError> {
        Ok(self.joint(cols)?.entropy(self.correction))
    }

    pub fn mutual_information(
        &self,
        x: &[&DiscretizedColumn],
        y: &[&DiscretizedColumn],
    ) -> Result<f64, InfoError> {
        self.conditional_mutual_information(y, x, &[])
    }

    /// `I(Y; X | Z)`; with empty `z` this is the mutual information.
    pub fn conditional_mutual_information(
        &self,
        y: &[&DiscretizedColumn],
        x: &[&DiscretizedColumn],
        z: &[&DiscretizedColumn],
    ) -> Result<f64, InfoError> {
        if y.is_empty() || x.is_empty() {
            return Err(InfoError::NoColumns);
        }
        let all: Vec<&DiscretizedColumn> = y.iter().chain(x).chain(z).copied().collect();
        let table = self.joint(&all)?;
        let ys: Vec<usize> = (0..y.len()).collect();
        let xs: Vec<usize> = (y.len()..y.len() + x.len()).collect();
        let zs: Vec<usize> = (y.len() + x.len()..all.len()).collect();
        table.conditional_mutual_information(&ys, &xs, &zs, self.correction)
    }

    /// `I(Y; f_target | all other features)`.
    pub fn cmmi(
        &self,
        y: &DiscretizedColumn,
        target: &DiscretizedColumn,
        others: &[&DiscretizedColumn],
    ) -> Result<f64, InfoError> {
        self.conditional_mutual_information(&[y], &[target], others)
    }

    /// `I(Y; (f_1, ..., f_k))`: information between the output and the joint
    /// feature tuple.
    pub fn joint_mutual_information(
        &self,
        y: &DiscretizedColumn,
        features: &[&DiscretizedColumn],
    ) -> Result<f64, InfoError> {
        self.conditional_mutual_information(&[y], features, &[])
    }
}

pub fn joint_distribution(cols: &[&DiscretizedColumn]) -> Result<JointDistribution, InfoError> {
    InfoEstimator::default().joint(cols)
}

pub fn shannon_entropy(cols: &[&DiscretizedColumn]) -> Result<f64, InfoError> {
    InfoEstimator::default().entropy(cols)
}

pub fn mutual_information(
    x: &[&DiscretizedColumn],
    y: &[&DiscretizedColumn],
) -> Result<f64, InfoError> {
    InfoEstimator::default().mutual_information(x, y)
}

pub fn conditional_mutual_information(
    y: &DiscretizedColumn,
    x: &DiscretizedColumn,
    z: &[&DiscretizedColumn],
) -> Result<f64, InfoError> {
    InfoEstimator::default().conditional_mutual_information(&[y], &[x], z)
}

pub fn cmmi(
    y: &DiscretizedColumn,
    target: &DiscretizedColumn,
    others: &[&DiscretizedColumn],
) -> Result<f64, InfoError> {
    InfoEstimator::default().cmmi(y, target, others)
}

pub fn joint_mutual_information(
    y: &DiscretizedColumn,
    features: &[&DiscretizedColumn],
) -> Result<f64, InfoError> {
    InfoEstimator::default().joint_mutual_information(y, features)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use proptest::prelude::*;

    fn col(codes: &[u32]) -> DiscretizedColumn {
        let c = codes.iter().max().map_or(1, |&m| m as usize + 1);
        DiscretizedColumn::from_codes(codes.to_vec(), c).unwrap()
    }

    fn xor() -> (DiscretizedColumn, DiscretizedColumn, DiscretizedColumn) {
        (col(&[0, 0, 1, 1]), col(&[0, 1, 0, 1]), col(&[0, 1, 1, 0]))
    }

    #[test]
    fn discretize_cases() {
        let d = discretize(&[0.0, 1.0, 0.0, 1.0], FeatureKind::Discrete, 8);
        assert_eq!(d.codes(), &[0, 1, 0, 1]);
        assert_eq!(d.categories(), 2);
        let c = discretize(&[3.0; 5], FeatureKind::Continuous, 8);
        assert_eq!(c.categories(), 1);
        let b = discretize(&[0.0, 0.4, 0.6, 1.0], FeatureKind::Continuous, 2);
        assert_eq!(b.codes(), &[0, 0, 1, 1]);
        // first-appearance coding
        let r = discretize(&[5.0, -2.0, 5.0, 9.0], FeatureKind::Discrete, 8);
        assert_eq!(r.codes(), &[0, 1, 0, 2]);
    }

    #[test]
    fn joint_tables() {
        let fair = col(&[0, 1]);
        assert_eq!(
            joint_distribution(&[&fair]).unwrap().probabilities(),
            &[0.5, 0.5]
        );
        let a = col(&[0, 1, 1, 0]);
        let diag = joint_distribution(&[&a, &a]).unwrap();
        assert_eq!(diag.probabilities(), &[0.5, 0.0, 0.0, 0.5]);
        let (f1, f2, y) = xor();
        let t = joint_distribution(&[&f1, &f2, &y]).unwrap();
        let occupied: Vec<Vec<usize>> = t
            .probabilities()
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, &p)| {
                assert_eq!(p, 0.25);
                t.unravel(i)
            })
            .collect();
        assert_eq!(
            occupied,
            vec![vec![0, 0, 0], vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]]
        );
    }

    #[test]
    fn budget_exceeded_names_arities() {
        let wide = DiscretizedColumn::from_codes(vec![0], 10_000).unwrap();
        let err = JointDistribution::from_columns(&[&wide, &wide], 1_000_000).unwrap_err();
        assert!(matches!(
            err,
            InfoError::BudgetExceeded {
                cells: 100_000_000,
                ..
            }
        ));
    }

    #[test]
    fn entropy_cases() {
        assert_eq!(shannon_entropy(&[&col(&[0, 1, 2, 3])]).unwrap(), 2.0);
        assert_eq!(shannon_entropy(&[&col(&[0, 0, 0])]).unwrap(), 0.0);
        let h = shannon_entropy(&[&col(&[0, 1, 1, 1])]).unwrap();
        let expected = -(0.25f64 * 0.25f64.log2() + 0.75 * 0.75f64.log2());
        assert!((h - expected).abs() < 1e-15);
        assert!((h - 0.811_278_124_459_133).abs() < 1e-12);
    }

    #[test]
    fn mutual_information_cases() {
        // product table: x and y independent by construction
        let x = col(&[0, 0, 1, 1]);
        let y = col(&[0, 1, 0, 1]);
        assert_eq!(mutual_information(&[&x], &[&y]).unwrap(), 0.0);
        assert_eq!(mutual_information(&[&x], &[&x]).unwrap(), 1.0);
        let (f1, _, yx) = xor();
        assert_eq!(mutual_information(&[&yx], &[&f1]).unwrap(), 0.0);
    }

    #[test]
    fn cmi_cases() {
        let (f1, f2, y) = xor();
        assert_eq!(
            conditional_mutual_information(&y, &f1, &[&f2]).unwrap(),
            1.0
        );
        // Z independent of (X, Y): product of a 4-row table with a fair bit
        let x = col(&[0, 0, 1, 1, 0, 0, 1, 1]);
        let yy = col(&[0, 1, 1, 1, 0, 1, 1, 1]);
        let z = col(&[0, 0, 0, 0, 1, 1, 1, 1]);
        let cmi = conditional_mutual_information(&yy, &x, &[&z]).unwrap();
        let mi = mutual_information(&[&x], &[&yy]).unwrap();
        assert_eq!(cmi, mi);
        let b = col(&[0, 1, 0, 1]);
        assert_eq!(conditional_mutual_information(&b, &b, &[&b]).unwrap(), 0.0);
    }

    #[test]
    fn cmmi_cases() {
        let (f1, f2, y) = xor();
        assert_eq!(
            cmmi(&y, &f1, &[&f2]).unwrap().to_bits(),
            conditional_mutual_information(&y, &f1, &[&f2])
                .unwrap()
                .to_bits()
        );
        assert_eq!(cmmi(&y, &f1, &[&f2]).unwrap(), 1.0);
        let constant = col(&[0, 0, 0, 0]);
        assert_eq!(
            cmmi(&y, &f1, &[&f2, &constant]).unwrap(),
            cmmi(&y, &f1, &[&f2]).unwrap()
        );
    }

    #[test]
    fn jmi_cases() {
        let (f1, f2, y) = xor();
        assert_eq!(joint_mutual_information(&y, &[&f1, &f2]).unwrap(), 1.0);
        // y independent of the pair: 8-row product table
        let a = col(&[0, 0, 1, 1, 0, 0, 1, 1]);
        let b = col(&[0, 1, 0, 1, 0, 1, 0, 1]);
        let yi = col(&[0, 0, 0, 0, 1, 1, 1, 1]);
        assert_eq!(joint_mutual_information(&yi, &[&a, &b]).unwrap(), 0.0);
        // y = f1 with f2 independent noise: JMI = H(f1)
        let yf = a.clone();
        let h = shannon_entropy(&[&a]).unwrap();
        assert_eq!(joint_mutual_information(&yf, &[&a, &b]).unwrap(), h);
    }

    #[test]
    fn weighted_table_matches_counts() {
        let (f1, f2, y) = xor();
        let counts = joint_distribution(&[&y, &f1, &f2]).unwrap();
        let probs =
            JointDistribution::from_probabilities(vec![2, 2, 2], counts.probabilities().to_vec())
                .unwrap();
        let a = counts
            .conditional_mutual_information(&[0], &[1], &[2], BiasCorrection::None)
            .unwrap();
        let b = probs
            .conditional_mutual_information(&[0], &[1], &[2], BiasCorrection::None)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn miller_madow_adds_occupancy_term() {
        let c = col(&[0, 1, 2, 3]);
        let est = InfoEstimator {
            correction: BiasCorrection::MillerMadow,
            ..InfoEstimator::default()
        };
        let h = est.entropy(&[&c]).unwrap();
        let expected = 2.0 + 3.0 / (2.0 * 4.0 * std::f64::consts::LN_2);
        assert!((h - expected).abs() < 1e-12);
    }

    fn random_cols(seed: u64, n: usize, arity: &[usize]) -> Vec<DiscretizedColumn> {
        let mut rng = Rng::new(seed);
        arity
            .iter()
            .map(|&a| {
                let codes = (0..n).map(|_| rng.below(a) as u32).collect();
                DiscretizedColumn::from_codes(codes, a).unwrap()
            })
            .collect()
    }

    proptest! {
        #[test]
        fn subadditivity(seed in 0u64..500, n in 1usize..60) {
            let cols = random_cols(seed, n, &[2, 3, 4]);
            let refs: Vec<&DiscretizedColumn> = cols.iter().collect();
            let joint = shannon_entropy(&refs).unwrap();
            let sum: f64 = cols.iter().map(|c| shannon_entropy(&[c]).unwrap()).sum();
            prop_assert!(joint <= sum + 1e-12);
        }

        #[test]
        fn cmi_symmetric_and_nonnegative(seed in 0u64..500, n in 1usize..80) {
            let c = random_cols(seed, n, &[3, 2, 3]);
            let a = conditional_mutual_information(&c[0], &c[1], &[&c[2]]).unwrap();
            let b = conditional_mutual_information(&c[1], &c[0], &[&c[2]]).unwrap();
            prop_assert!(a >= 0.0);
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }

        #[test]
        fn chain_rule(seed in 0u64..500, n in 1usize..80) {
            let c = random_cols(seed, n, &[3, 2, 3, 2]);
            let (y, x, z1, z2) = (&c[0], &c[1], &c[2], &c[3]);
            let est = InfoEstimator::default();
            let lhs = est.conditional_mutual_information(&[y], &[x], &[z1, z2]).unwrap();
            let joint = est.mutual_information(&[x, z1, z2], &[y]).unwrap();
            let cond = est.mutual_information(&[z1, z2], &[y]).unwrap();
            prop_assert!((lhs - (joint - cond)).abs() <= 1e-10);
        }
    }
}
