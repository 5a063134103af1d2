//! Mutual correlation impact ratio (MCIR) for dependent features.
//!
//! For a feature `f_i`, `mcir = CMMI_i / (CMMI_i + JMI)` and the joint mutual
//! impact is the complementary share `JMI / (CMMI_i + JMI)`. In pairwise mode
//! the conditioning set is a single partner feature; in full mode it is every
//! other feature.

use thiserror::Error;

use crate::infotheory::{DiscretizedColumn, InfoError, InfoEstimator};
use crate::pcir::Direction;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum McirError {
    #[error("feature `{0}`: conditional and joint information are both zero, ratio is 0/0")]
    Degenerate(String),
    #[error("target index {index} out of range for {k} features")]
    BadIndex { index: usize, k: usize },
    #[error("need at least two features, got {0}")]
    TooFewFeatures(usize),
    #[error("invalid dependent model: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Info(#[from] InfoError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct McirScore {
    pub name: String,
    pub cmmi_bits: f64,
    pub jmi_bits: f64,
    pub mcir: f64,
    pub joint_mutual_impact: f64,
}

impl McirScore {
    /// Normalizes the two information terms. Both shares come from the same
    /// denominator; `joint_mutual_impact` is taken as `1 - mcir` so the pair
    /// sums to one.
    pub fn from_terms(name: &str, cmmi_bits: f64, jmi_bits: f64) -> Result<Self, McirError> {
        let total = cmmi_bits + jmi_bits;
        if !(total > 0.0) {
            return Err(McirError::Degenerate(name.to_string()));
        }
        let mcir = (cmmi_bits / total).clamp(0.0, 1.0);
        Ok(Self {
            name: name.to_string(),
            cmmi_bits,
            jmi_bits,
            mcir,
            joint_mutual_impact: 1.0 - mcir,
        })
    }
}

/// `I(Y; f_i | f_j) / (I(Y; f_i | f_j) + I(Y; (f_i, f_j)))`.
pub fn mcir_pair(
    est: &InfoEstimator,
    name: &str,
    y: &DiscretizedColumn,
    target: &DiscretizedColumn,
    other: &DiscretizedColumn,
) -> Result<McirScore, McirError> {
    let cmi = est.cmmi(y, target, &[other])?;
    let jmi = est.joint_mutual_information(y, &[target, other])?;
    McirScore::from_terms(name, cmi, jmi)
}

/// MCIR of `features[index]` conditioned on every other feature.
pub fn mcir_full(
    est: &InfoEstimator,
    name: &str,
    y: &DiscretizedColumn,
    index: usize,
    features: &[&DiscretizedColumn],
) -> Result<McirScore, McirError> {
    let jmi = est.joint_mutual_information(y, features)?;
    mcir_full_with_jmi(est, name, y, index, features, jmi)
}

/// As [`mcir_full`] with the joint term already computed, so a caller
/// scoring every feature builds the full joint table once.
pub fn mcir_full_with_jmi(
    est: &InfoEstimator,
    name: &str,
    y: &DiscretizedColumn,
    index: usize,
    features: &[&DiscretizedColumn],
    jmi_bits: f64,
) -> Result<McirScore, McirError> {
    if features.len() < 2 {
        return Err(McirError::TooFewFeatures(features.len()));
    }
    if index >= features.len() {
        return Err(McirError::BadIndex {
            index,
            k: features.len(),
        });
    }
    let others: Vec<&DiscretizedColumn> = features
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != index)
        .map(|(_, c)| *c)
        .collect();
    let cmmi = est.cmmi(y, features[index], &others)?;
    McirScore::from_terms(name, cmmi, jmi_bits)
}

/// Where a weight in the dependent model came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightSource {
    Mcir,
    Pcir,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DependentModelSpec {
    weights: Vec<f64>,
    directions: Vec<Direction>,
    sources: Vec<WeightSource>,
    joint_mutual_impact: f64,
}

impl DependentModelSpec {
    pub fn new(
        weights: Vec<f64>,
        directions: Vec<Direction>,
        joint_mutual_impact: f64,
    ) -> Result<Self, McirError> {
        let sources = vec![WeightSource::Mcir; weights.len()];
        Self::with_sources(weights, directions, sources, joint_mutual_impact)
    }

    /// Mixed model: features with an MCIR score use it, the rest fall back to
    /// their PCIR value.
    pub fn mixed(
        mcir: &[Option<f64>],
        etas: &[f64],
        directions: Vec<Direction>,
        joint_mutual_impact: f64,
    ) -> Result<Self, McirError> {
        let (weights, sources) = mcir
            .iter()
            .zip(etas)
            .map(|(c, &e)| match c {
                Some(c) => (*c, WeightSource::Mcir),
                None => (e, WeightSource::Pcir),
            })
            .unzip();
        Self::with_sources(weights, directions, sources, joint_mutual_impact)
    }

    fn with_sources(
        weights: Vec<f64>,
        directions: Vec<Direction>,
        sources: Vec<WeightSource>,
        joint_mutual_impact: f64,
    ) -> Result<Self, McirError> {
        if weights.len() != directions.len() || weights.len() != sources.len() {
            return Err(McirError::InvalidModel(format!(
                "{} weights for {} directions",
                weights.len(),
                directions.len()
            )));
        }
        if !directions.contains(&Direction::Denominator) {
            return Err(McirError::InvalidModel("no denominator feature".into()));
        }
        Ok(Self {
            weights,
            directions,
            sources,
            joint_mutual_impact,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// True when MCIR and PCIR weights are combined in one ratio. The two
    /// scales are not calibrated against each other.
    pub fn mixes_scales(&self) -> bool {
        self.sources.contains(&WeightSource::Mcir) && self.sources.contains(&WeightSource::Pcir)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PredictError {
    #[error("row has {found} values, model expects {expected}")]
    RowWidth { expected: usize, found: usize },
    #[error("denominator is zero")]
    SingularRow,
}

/// `𝔍 + Σ_num w_i f_i / Σ_den w_i f_i`.
pub fn excir_dependent_predict(
    spec: &DependentModelSpec,
    row: &[f64],
) -> Result<f64, PredictError> {
    if row.len() != spec.weights.len() {
        return Err(PredictError::RowWidth {
            expected: spec.weights.len(),
            found: row.len(),
        });
    }
    let (mut num, mut den) = (0.0, 0.0);
    for ((w, d), x) in spec.weights.iter().zip(&spec.directions).zip(row) {
        match d {
            Direction::Numerator => num += w * x,
            Direction::Denominator => den += w * x,
        }
    }
    if den == 0.0 {
        return Err(PredictError::SingularRow);
    }
    Ok(spec.joint_mutual_impact + num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::infotheory::{BiasCorrection, JointDistribution};
    use crate::rng::Rng;
    use proptest::prelude::*;

    fn col(codes: &[u32], c: usize) -> DiscretizedColumn {
        DiscretizedColumn::from_codes(codes.to_vec(), c).unwrap()
    }

    fn est() -> InfoEstimator {
        InfoEstimator::default()
    }

    #[test]
    fn xor_pair_and_full() {
        let f1 = col(&[0, 0, 1, 1], 2);
        let f2 = col(&[0, 1, 0, 1], 2);
        let y = col(&[0, 1, 1, 0], 2);
        let p = mcir_pair(&est(), "f1", &y, &f1, &f2).unwrap();
        assert_eq!((p.cmmi_bits, p.jmi_bits, p.mcir), (1.0, 1.0, 0.5));
        for i in 0..2 {
            let s = mcir_full(&est(), "f", &y, i, &[&f1, &f2]).unwrap();
            assert_eq!((s.mcir, s.joint_mutual_impact), (0.5, 0.5));
        }
    }

    #[test]
    fn redundant_target_scores_zero() {
        // y = f2 and f1 is independent noise
        let f1 = col(&[0, 0, 1, 1], 2);
        let f2 = col(&[0, 1, 0, 1], 2);
        let s = mcir_pair(&est(), "f1", &f2, &f1, &f2).unwrap();
        assert_eq!(s.mcir, 0.0);
        assert_eq!(s.joint_mutual_impact, 1.0);
    }

    #[test]
    fn independent_output_is_degenerate() {
        let a = col(&[0, 0, 1, 1, 0, 0, 1, 1], 2);
        let b = col(&[0, 1, 0, 1, 0, 1, 0, 1], 2);
        let y = col(&[0, 0, 0, 0, 1, 1, 1, 1], 2);
        assert_eq!(
            mcir_pair(&est(), "a", &y, &a, &b),
            Err(McirError::Degenerate("a".into()))
        );
    }

    fn random_cols(rng: &mut Rng, n: usize, k: usize, c: usize) -> Vec<DiscretizedColumn> {
        (0..k)
            .map(|_| col(&(0..n).map(|_| rng.below(c) as u32).collect::<Vec<_>>(), c))
            .collect()
    }

    #[test]
    fn full_reduces_to_pair_for_two_features() {
        let mut rng = Rng::new(5);
        for _ in 0..30 {
            let cols = random_cols(&mut rng, 40, 3, 3);
            let (y, a, b) = (&cols[0], &cols[1], &cols[2]);
            for (i, (t, o)) in [(a, b), (b, a)].into_iter().enumerate() {
                let (Ok(p), Ok(f)) = (
                    mcir_pair(&est(), "x", y, t, o),
                    mcir_full(&est(), "x", y, i, &[a, b]),
                ) else {
                    continue;
                };
                assert_eq!(p.mcir.to_bits(), f.mcir.to_bits());
            }
        }
    }

    #[test]
    fn noisy_xor_cmmi_decreases_with_noise() {
        // exhaustive table over (y, f1, f2): uniform features, y = f1 xor f2
        // flipped with probability rho
        let table = |rho: f64| {
            let mut p = vec![0.0; 8];
            for y in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        p[y * 4 + a * 2 + b] = 0.25 * if y == a ^ b { 1.0 - rho } else { rho };
                    }
                }
            }
            JointDistribution::from_probabilities(vec![2, 2, 2], p).unwrap()
        };
        let mut prev = f64::INFINITY;
        for step in 0..=5 {
            let rho = step as f64 / 10.0;
            let cmmi = table(rho)
                .conditional_mutual_information(&[0], &[1], &[2], BiasCorrection::None)
                .unwrap();
            assert!(
                cmmi < prev || (step == 5 && cmmi <= prev),
                "rho {rho}: {cmmi}"
            );
            prev = cmmi;
        }
        assert!(prev.abs() < 1e-12);
    }

    #[test]
    fn dependent_predict_cases() {
        use Direction::*;
        let spec = DependentModelSpec::new(
            vec![0.5; 4],
            vec![Numerator, Numerator, Denominator, Denominator],
            0.5,
        )
        .unwrap();
        assert_eq!(
            excir_dependent_predict(&spec, &[1.0, 1.0, 1.0, 1.0]).unwrap(),
            1.5
        );
        assert_eq!(
            excir_dependent_predict(&spec, &[1.0, 1.0, 2.0, 2.0]).unwrap(),
            1.0
        );
        assert_eq!(
            excir_dependent_predict(&spec, &[1.0, 1.0, 0.0, 0.0]),
            Err(PredictError::SingularRow)
        );
        let mixed = DependentModelSpec::mixed(
            &[Some(0.5), None, Some(0.5), None],
            &[0.1, 0.2, 0.3, 0.4],
            vec![Numerator, Numerator, Denominator, Denominator],
            0.5,
        )
        .unwrap();
        assert_eq!(mixed.weights(), &[0.5, 0.2, 0.5, 0.4]);
        assert!(mixed.mixes_scales());
        assert!(!spec.mixes_scales());
    }

    proptest! {
        #[test]
        fn bounded_and_complementary(seed in 0u64..1000, n in 1usize..120, k in 2usize..5) {
            let mut rng = Rng::new(seed);
            let cols = random_cols(&mut rng, n, k + 1, 3);
            let y = &cols[0];
            let feats: Vec<&DiscretizedColumn> = cols[1..].iter().collect();
            for i in 0..k {
                match mcir_full(&est(), "f", y, i, &feats) {
                    Ok(s) => {
                        prop_assert!((0.0..=1.0).contains(&s.mcir));
                        prop_assert!((s.mcir + s.joint_mutual_impact - 1.0).abs() <= 1e-12);
                    }
                    Err(e) => prop_assert_eq!(e, McirError::Degenerate("f".into())),
                }
            }
        }

        #[test]
        fn feature_order_does_not_matter(seed in 0u64..1000, n in 2usize..80) {
            let mut rng = Rng::new(seed);
            let cols = random_cols(&mut rng, n, 4, 3);
            let y = &cols[0];
            let fwd = [&cols[1], &cols[2], &cols[3]];
            let rev = [&cols[3], &cols[2], &cols[1]];
            for i in 0..3 {
                let a = mcir_full(&est(), "f", y, i, &fwd);
                let b = mcir_full(&est(), "f", y, 2 - i, &rev);
                match (a, b) {
                    (Ok(a), Ok(b)) => prop_assert_eq!(a.mcir.to_bits(), b.mcir.to_bits()),
                    (a, b) => prop_assert_eq!(a.is_err(), b.is_err()),
                }
            }
        }
    }
}
