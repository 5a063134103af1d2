//! End-to-end explanation: predictions, lightweight sample, per-feature
//! scores, report.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{infer_kind, DataError, Dataset, OutputVector, DEFAULT_MAX_CATEGORIES};
use crate::dimdist::DivergenceKind;
use crate::envmatch::{risk_minimize_outputs, EnvMatchError, RiskSearchConfig};
use crate::infotheory::{
    discretize, discretize_feature, BiasCorrection, DiscretizedColumn, InfoError, InfoEstimator,
    DEFAULT_TABLE_BUDGET,
};
use crate::mcir::{mcir_full_with_jmi, mcir_pair, McirError, McirScore};
use crate::model::{evaluate_model, ModelError, ModelHandle};
use crate::pcir::{pcir_values, Direction, PcirError, PcirScore};
use crate::report::{ExplanationReport, FeatureRecord, Globals, ReportConfig, REPORT_VERSION};

pub const DEFAULT_N_PRIME_CAP: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DependenceMode {
    /// PCIR only.
    Independent,
    /// MCIR conditioned on one partner feature.
    Pairwise,
    /// MCIR conditioned on all other features.
    Full,
}

impl DependenceMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            DependenceMode::Independent => "independent",
            DependenceMode::Pairwise => "pairwise",
            DependenceMode::Full => "full",
        }
    }
}

impl std::str::FromStr for DependenceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "independent" => Ok(DependenceMode::Independent),
            "pairwise" => Ok(DependenceMode::Pairwise),
            "full" => Ok(DependenceMode::Full),
            other => Err(format!(
                "unknown mode `{other}` (expected independent, pairwise or full)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplainConfig {
    pub model: ModelHandle,
    /// Name of the output column, echoed in the report.
    pub output_col: Option<String>,
    pub mode: DependenceMode,
    pub bins: usize,
    /// Defaults to `min(n, 1000)`.
    pub n_prime: Option<usize>,
    pub lambda: f64,
    pub divergence: DivergenceKind,
    pub epsilon: f64,
    pub candidates: usize,
    pub refine_iters: usize,
    pub seed: u64,
    pub miller_madow: bool,
    /// Explicit numerator features; all others go to the denominator.
    pub numerator: Option<Vec<String>>,
    pub table_budget: usize,
}

impl ExplainConfig {
    pub fn new(model: ModelHandle) -> Self {
        Self {
            model,
            output_col: None,
            mode: DependenceMode::Pairwise,
            bins: 8,
            n_prime: None,
            lambda: 1.0,
            divergence: DivergenceKind::Js,
            epsilon: 1e-10,
            candidates: 8,
            refine_iters: 200,
            seed: 0,
            miller_madow: false,
            numerator: None,
            table_budget: DEFAULT_TABLE_BUDGET,
        }
    }

    /// Predictions come straight from a column of the input file.
    pub fn for_output_column(col: impl Into<String>) -> Self {
        let col = col.into();
        let mut cfg = Self::new(ModelHandle::Precomputed(col.clone()));
        cfg.output_col = Some(col);
        cfg
    }

    fn estimator(&self) -> InfoEstimator {
        InfoEstimator {
            correction: if self.miller_madow {
                BiasCorrection::MillerMadow
            } else {
                BiasCorrection::None
            },
            table_budget: self.table_budget,
        }
    }
}

#[derive(Debug, Error)]
pub enum ExplainError {
    #[error("{0}")]
    Input(String),
    #[error("degenerate information:\n  {}", .0.join("\n  "))]
    Degenerate(Vec<String>),
    #[error("{0}")]
    Other(String),
}

impl ExplainError {
    /// 2 for input errors, 3 for degenerate information, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExplainError::Input(_) => 2,
            ExplainError::Degenerate(_) => 3,
            ExplainError::Other(_) => 1,
        }
    }
}

impl From<DataError> for ExplainError {
    fn from(e: DataError) -> Self {
        ExplainError::Input(e.to_string())
    }
}

impl From<ModelError> for ExplainError {
    fn from(e: ModelError) -> Self {
        use ModelError::*;
        match e {
            RowOutOfRange { .. }
            | WidthMismatch { .. }
            | InvalidModel(_)
            | SingularRow { .. }
            | MissingColumn(_)
            | Data(_) => ExplainError::Input(e.to_string()),
            _ => ExplainError::Other(e.to_string()),
        }
    }
}

impl From<EnvMatchError> for ExplainError {
    fn from(e: EnvMatchError) -> Self {
        match e {
            EnvMatchError::Model(m) => m.into(),
            EnvMatchError::NPrimeTooLarge { .. }
            | EnvMatchError::NPrimeZero
            | EnvMatchError::NoCandidates
            | EnvMatchError::BadLambda(_)
            | EnvMatchError::LengthMismatch { .. }
            | EnvMatchError::FeatureCountMismatch { .. }
            | EnvMatchError::Data(_) => ExplainError::Input(e.to_string()),
            EnvMatchError::DegenerateSupport => ExplainError::Degenerate(vec![e.to_string()]),
            _ => ExplainError::Other(e.to_string()),
        }
    }
}

impl From<InfoError> for ExplainError {
    fn from(e: InfoError) -> Self {
        ExplainError::Other(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Explanation {
    pub report: ExplanationReport,
    /// Ascending indices of the lightweight sample.
    pub sample_rows: Vec<usize>,
    pub predictions: OutputVector,
    pub pcir: Vec<PcirScore>,
    pub mcir: Option<Vec<McirScore>>,
    /// Partner of each feature in pairwise mode.
    pub partners: Option<Vec<usize>>,
}

/// Runs the whole pipeline on an in-memory dataset.
pub fn explain(dataset: &Dataset, cfg: &ExplainConfig) -> Result<Explanation, ExplainError> {
    if cfg.bins == 0 {
        return Err(ExplainError::Input("bins must be at least 1".into()));
    }
    let n = dataset.n();
    let k = dataset.k();
    let all: Vec<usize> = (0..n).collect();
    let y = evaluate_model(&cfg.model, dataset, &all)?;
    let n_prime = cfg.n_prime.unwrap_or(n.min(DEFAULT_N_PRIME_CAP));
    let search = RiskSearchConfig {
        n_prime,
        lambda: cfg.lambda,
        candidates: cfg.candidates,
        refine_iters: cfg.refine_iters,
        seed: cfg.seed,
        divergence: cfg.divergence,
        bins: cfg.bins,
        epsilon: cfg.epsilon,
    };

    let (rows, env_gap, loss) = if n_prime == n {
        // the sample is the data: nothing to search
        (all, 0.0, 0.0)
    } else {
        let out = risk_minimize_outputs(dataset, y.clone(), &search)?;
        log::info!(
            "lightweight sample: n'={n_prime}, gap={:e}, loss={:e}, exhaustive={}",
            out.env.gap,
            out.loss,
            out.exhaustive
        );
        (out.env.selected_rows, out.env.gap, out.loss)
    };
    let sample = dataset.select_rows(&rows)?;
    let ys = y.select(&rows);

    let directions = override_directions(dataset, cfg.numerator.as_deref())?;
    let mut warnings = Vec::new();
    let mut degenerate = Vec::new();

    let pcir_results: Vec<Result<PcirScore, PcirError>> = sample
        .features()
        .par_iter()
        .map(|c| pcir_values(c.name(), c.values(), ys.values()))
        .collect();
    let mut pcir = Vec::with_capacity(k);
    for r in pcir_results {
        match r {
            Ok(mut s) => {
                if let Some(d) = &directions {
                    s.direction = d[pcir.len()];
                    s.direction_tie = false;
                } else if s.direction_tie {
                    warnings.push(format!(
                        "feature `{}`: zero covariance with the output, assigned to the numerator",
                        s.name
                    ));
                }
                pcir.push(s);
            }
            Err(PcirError::Degenerate(name)) => {
                degenerate.push(format!(
                    "feature `{name}`: pcir is 0/0 (feature and output constant and equal)"
                ));
                pcir.push(placeholder_pcir(&name));
            }
            Err(e) => return Err(ExplainError::Other(e.to_string())),
        }
    }

    let est = cfg.estimator();
    let feat_codes: Vec<DiscretizedColumn> = sample
        .features()
        .par_iter()
        .map(|c| discretize_feature(c, cfg.bins))
        .collect();
    let y_kind = infer_kind(ys.values(), DEFAULT_MAX_CATEGORIES);
    let y_codes = discretize(ys.values(), y_kind, cfg.bins);
    let entropies = feat_codes
        .par_iter()
        .map(|c| est.entropy(&[c]))
        .collect::<Result<Vec<f64>, InfoError>>()?;

    let feat_refs: Vec<&DiscretizedColumn> = feat_codes.iter().collect();
    let (mcir, partners, jmi_all) = match cfg.mode {
        DependenceMode::Independent => (None, None, None),
        _ if k < 2 => {
            return Err(ExplainError::Input(format!(
                "{} mode needs at least two features",
                cfg.mode.as_str()
            )))
        }
        DependenceMode::Pairwise => {
            let partners = pick_partners(&est, &feat_refs)?;
            let scores: Vec<Result<McirScore, McirError>> = (0..k)
                .into_par_iter()
                .map(|i| {
                    let name = sample.feature(i).name();
                    mcir_pair(&est, name, &y_codes, feat_refs[i], feat_refs[partners[i]])
                })
                .collect();
            (Some(scores), Some(partners), None)
        }
        DependenceMode::Full => {
            let jmi = est.joint_mutual_information(&y_codes, &feat_refs)?;
            let scores: Vec<Result<McirScore, McirError>> = (0..k)
                .into_par_iter()
                .map(|i| {
                    let name = sample.feature(i).name();
                    mcir_full_with_jmi(&est, name, &y_codes, i, &feat_refs, jmi)
                })
                .collect();
            (Some(scores), None, Some(jmi))
        }
    };
    let mcir = match mcir {
        None => None,
        Some(results) => {
            let mut scores = Vec::with_capacity(k);
            for r in results {
                match r {
                    Ok(s) => scores.push(s),
                    Err(McirError::Degenerate(name)) => degenerate.push(format!(
                        "feature `{name}`: mcir is 0/0 (no information between output and features)"
                    )),
                    Err(e) => return Err(ExplainError::Other(e.to_string())),
                }
            }
            Some(scores)
        }
    };
    if !degenerate.is_empty() {
        return Err(ExplainError::Degenerate(degenerate));
    }

    let (jmi_bits, joint_mutual_impact) = match &mcir {
        Some(scores) => {
            warnings.push(
                "pcir and mcir are on different scales; compare features within one score only"
                    .to_string(),
            );
            let top = top_index(scores.iter().map(|s| s.mcir));
            (
                Some(jmi_all.unwrap_or(scores[top].jmi_bits)),
                Some(scores[top].joint_mutual_impact),
            )
        }
        None => (None, None),
    };

    let features = (0..k)
        .map(|i| FeatureRecord {
            name: sample.feature(i).name().to_string(),
            kind: sample.feature(i).kind(),
            direction: pcir[i].direction,
            pcir: pcir[i].eta,
            mcir: mcir.as_ref().map(|m| m[i].mcir),
            entropy_bits: entropies[i],
            cmmi_bits: mcir.as_ref().map(|m| m[i].cmmi_bits),
        })
        .collect();

    let report = ExplanationReport {
        version: REPORT_VERSION.to_string(),
        config: ReportConfig {
            model: cfg.model.describe(),
            output_col: cfg.output_col.clone(),
            mode: cfg.mode.as_str().to_string(),
            bins: cfg.bins,
            n_prime,
            lambda: cfg.lambda.is_finite().then_some(cfg.lambda),
            divergence: cfg.divergence,
            epsilon: cfg.epsilon,
            candidates: cfg.candidates,
            refine_iters: cfg.refine_iters,
            miller_madow: cfg.miller_madow,
            numerator: cfg.numerator.clone(),
        },
        globals: Globals {
            n,
            n_prime,
            env_gap,
            output_divergence_bits: loss,
            jmi_bits,
            joint_mutual_impact,
            seed: cfg.seed,
            warnings,
        },
        features,
    };
    Ok(Explanation {
        report,
        sample_rows: rows,
        predictions: y,
        pcir,
        mcir,
        partners,
    })
}

fn placeholder_pcir(name: &str) -> PcirScore {
    PcirScore {
        name: name.to_string(),
        eta: 0.0,
        f_mean: 0.0,
        y_mean: 0.0,
        joint_mean: 0.0,
        direction: Direction::Numerator,
        direction_tie: false,
    }
}

fn override_directions(
    dataset: &Dataset,
    numerator: Option<&[String]>,
) -> Result<Option<Vec<Direction>>, ExplainError> {
    let Some(names) = numerator else {
        return Ok(None);
    };
    for name in names {
        if dataset.feature_index(name).is_none() {
            return Err(ExplainError::Input(format!(
                "numerator feature `{name}` is not a feature column"
            )));
        }
    }
    Ok(Some(
        dataset
            .features()
            .iter()
            .map(|c| {
                if names.iter().any(|n| n == c.name()) {
                    Direction::Numerator
                } else {
                    Direction::Denominator
                }
            })
            .collect(),
    ))
}

/// Index of the largest value; the first one wins ties.
fn top_index(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Pairwise partner of each feature: the other feature sharing the most
/// mutual information with it (lowest index on ties).
pub fn pick_partners(
    est: &InfoEstimator,
    features: &[&DiscretizedColumn],
) -> Result<Vec<usize>, InfoError> {
    let k = features.len();
    let pairs: Vec<(usize, usize)> = (0..k)
        .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
        .collect();
    let mi = pairs
        .par_iter()
        .map(|&(i, j)| est.mutual_information(&[features[i]], &[features[j]]))
        .collect::<Result<Vec<f64>, InfoError>>()?;
    let mut table = vec![vec![f64::NEG_INFINITY; k]; k];
    for (&(i, j), &v) in pairs.iter().zip(&mi) {
        table[i][j] = v;
        table[j][i] = v;
    }
    Ok((0..k)
        .map(|i| top_index(table[i].iter().copied()))
        .collect())
}
