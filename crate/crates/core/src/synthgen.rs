//! Seeded synthetic datasets with known structure.
//!
//! Rows follow the ratio model `y = Σ_{j<m} β_j f_j / Σ_{j≥m} β_j f_j`. Each
//! feature is drawn from its distribution and then zeroed with probability
//! `1 - presence_p`. Dependency edges overwrite a target feature with its
//! source's value, except with probability `noise` where the target keeps its
//! own independent draw. Rows whose denominator vanishes are redrawn.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{DataError, Dataset, FeatureColumn, FeatureKind, OutputVector};
use crate::model::RatioModel;
use crate::rng::Rng;

pub const MAX_RESAMPLES: usize = 1000;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("row {row}: denominator still zero after {attempts} attempts")]
    Unsatisfiable { row: usize, attempts: usize },
    #[error("unknown preset `{0}` (expected xor, independent_k4 or chain_dependent_k3)")]
    UnknownPreset(String),
    #[error("xor preset needs n divisible by 4, got {0}")]
    XorSize(usize),
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum FeatureDistribution {
    Bernoulli {
        p: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// Values `1..=categories`, uniformly.
    Categorical {
        categories: u32,
    },
}

impl FeatureDistribution {
    fn kind(&self) -> FeatureKind {
        match self {
            FeatureDistribution::Uniform { .. } => FeatureKind::Continuous,
            _ => FeatureKind::Discrete,
        }
    }

    fn draw(&self, rng: &mut Rng) -> f64 {
        match *self {
            FeatureDistribution::Bernoulli { p } => rng.bernoulli(p) as u8 as f64,
            FeatureDistribution::Uniform { lo, hi } => rng.uniform(lo, hi),
            FeatureDistribution::Categorical { categories } => {
                (1 + rng.below(categories as usize)) as f64
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependencyEdge {
    pub source: usize,
    pub target: usize,
    pub noise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub m: usize,
    pub betas: Vec<f64>,
    pub presence_p: Vec<f64>,
    pub distributions: Vec<FeatureDistribution>,
    pub edges: Vec<DependencyEdge>,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn k(&self) -> usize {
        self.betas.len()
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let k = self.k();
        let bad = |msg: String| Err(SynthError::InvalidSpec(msg));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if self.m == 0 || self.m >= k {
            return bad(format!("split m={} must satisfy 1 <= m < k={k}", self.m));
        }
        if self.presence_p.len() != k || self.distributions.len() != k {
            return bad("betas, presence_p and distributions need one entry per feature".into());
        }
        if self.betas.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
            return bad("betas must be positive".into());
        }
        if self.presence_p.iter().any(|p| !(*p > 0.0 && *p <= 1.0)) {
            return bad("presence_p must lie in (0, 1]".into());
        }
        for d in &self.distributions {
            let ok = match *d {
                FeatureDistribution::Bernoulli { p } => (0.0..=1.0).contains(&p),
                FeatureDistribution::Uniform { lo, hi } => {
                    lo.is_finite() && hi.is_finite() && lo <= hi
                }
                FeatureDistribution::Categorical { categories } => categories >= 1,
            };
            if !ok {
                return bad(format!("invalid distribution {d:?}"));
            }
        }
        for e in &self.edges {
            if e.source >= k || e.target >= k || e.source == e.target {
                return bad(format!("invalid edge {} -> {}", e.source, e.target));
            }
            if !(0.0..=1.0).contains(&e.noise) {
                return bad(format!("edge noise {} outside [0, 1]", e.noise));
            }
        }
        Ok(())
    }

    pub fn model(&self) -> RatioModel {
        RatioModel::new(self.betas.clone(), self.m).expect("validated split")
    }
}

/// Everything needed to rebuild the generating model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub preset: Option<String>,
    pub feature_names: Vec<String>,
    pub output_name: String,
    pub spec: SyntheticSpec,
}

impl GroundTruth {
    pub fn model(&self) -> RatioModel {
        self.spec.model()
    }
}

pub fn feature_name(j: usize) -> String {
    format!("f{}", j + 1)
}

pub fn generate(spec: &SyntheticSpec) -> Result<(Dataset, GroundTruth), SynthError> {
    spec.validate()?;
    let k = spec.k();
    let model = spec.model();
    let mut rng = Rng::new(spec.seed);
    let mut cols = vec![Vec::with_capacity(spec.n); k];
    let mut y = Vec::with_capacity(spec.n);
    let mut row = vec![0.0; k];
    for i in 0..spec.n {
        let mut attempts = 0;
        let value = loop {
            if attempts == MAX_RESAMPLES {
                return Err(SynthError::Unsatisfiable { row: i, attempts });
            }
            attempts += 1;
            for (j, slot) in row.iter_mut().enumerate() {
                let v = spec.distributions[j].draw(&mut rng);
                *slot = if rng.bernoulli(spec.presence_p[j]) {
                    v
                } else {
                    0.0
                };
            }
            for e in &spec.edges {
                // one draw per edge whatever the outcome, so streams stay aligned
                if !rng.bernoulli(e.noise) {
                    row[e.target] = row[e.source];
                }
            }
            if let Some(v) = model.predict(&row) {
                break v;
            }
        };
        for (c, &v) in cols.iter_mut().zip(&row) {
            c.push(v);
        }
        y.push(value);
    }
    let features = cols
        .into_iter()
        .enumerate()
        .map(|(j, v)| FeatureColumn::new(feature_name(j), spec.distributions[j].kind(), v))
        .collect::<Result<Vec<_>, _>>()?;
    let feature_names = (0..k).map(feature_name).collect();
    let ds = Dataset::new(features)?.with_output("y", OutputVector::new(y)?)?;
    Ok((
        ds,
        GroundTruth {
            preset: None,
            feature_names,
            output_name: "y".into(),
            spec: spec.clone(),
        },
    ))
}

/// Four independent continuous features, two per side. The generative
/// weights `β_j` are drawn per seed from `[1.5, 4)` and feature `j` is
/// uniform on `[0.5/β_j, 1.5/β_j]`, so every term `β_j f_j` has the same law
/// and the ranking of features by effect size follows `β`.
pub fn independent_k4_spec(n: usize, seed: u64) -> SyntheticSpec {
    let mut rng = Rng::derive(seed, u64::MAX);
    let betas: Vec<f64> = (0..4).map(|_| rng.uniform(1.5, 4.0)).collect();
    let distributions = betas
        .iter()
        .map(|b| FeatureDistribution::Uniform {
            lo: 0.5 / b,
            hi: 1.5 / b,
        })
        .collect();
    SyntheticSpec {
        n,
        m: 2,
        betas,
        presence_p: vec![0.9; 4],
        distributions,
        edges: vec![],
        seed,
    }
}

pub const CHAIN_NOISE: f64 = 0.1;

/// `f1 -> f2` with the given noise, `f3` independent, all categorical with
/// four levels; `f1` alone forms the numerator.
pub fn chain_dependent_k3_spec(n: usize, seed: u64, noise: f64) -> SyntheticSpec {
    SyntheticSpec {
        n,
        m: 1,
        betas: vec![1.0, 1.0, 1.0],
        presence_p: vec![1.0; 3],
        distributions: vec![FeatureDistribution::Categorical { categories: 4 }; 3],
        edges: vec![DependencyEdge {
            source: 0,
            target: 1,
            noise,
        }],
        seed,
    }
}

/// The XOR truth table `(f1, f2, y)` repeated `n / 4` times.
pub fn xor(n: usize) -> Result<Dataset, SynthError> {
    if n == 0 || !n.is_multiple_of(4) {
        return Err(SynthError::XorSize(n));
    }
    let table = [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)];
    let (mut a, mut b, mut y) = (vec![], vec![], vec![]);
    for _ in 0..n / 4 {
        for &(x1, x2) in &table {
            a.push(x1);
            b.push(x2);
            y.push(if x1 != x2 { 1.0 } else { 0.0 });
        }
    }
    let ds = Dataset::new(vec![
        FeatureColumn::new("f1", FeatureKind::Discrete, a)?,
        FeatureColumn::new("f2", FeatureKind::Discrete, b)?,
    ])?
    .with_output("y", OutputVector::new(y)?)?;
    Ok(ds)
}

/// Named fixtures. The XOR preset has no ratio-model truth and returns
/// `None` for it.
pub fn preset(
    name: &str,
    n: usize,
    seed: u64,
) -> Result<(Dataset, Option<GroundTruth>), SynthError> {
    let spec = match name {
        "xor" => return Ok((xor(n)?, None)),
        "independent_k4" => independent_k4_spec(n, seed),
        "chain_dependent_k3" => chain_dependent_k3_spec(n, seed, CHAIN_NOISE),
        other => return Err(SynthError::UnknownPreset(other.to_string())),
    };
    let (ds, mut truth) = generate(&spec)?;
    truth.preset = Some(name.to_string());
    Ok((ds, Some(truth)))
}
