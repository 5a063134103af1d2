//! Environment matching: choose `n'` rows whose mean feature-to-output
//! distance matches the full data, optionally trading that gap against how
//! well the sample reproduces the output distribution.

use std::collections::BTreeSet;

use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::{DataError, Dataset, OutputVector};
use crate::dimdist::{
    f_divergence, histogram, DimDistError, DivergenceKind, EmpiricalMeasure, Grid, GridSpec,
    HistogramGrid, DEFAULT_PAD_FRACTION,
};
use crate::model::{evaluate_model, ModelError, ModelHandle};
use crate::rng::Rng;

/// Largest subset count searched exhaustively.
pub const EXHAUSTIVE_SUBSETS: u128 = 100_000;
/// Cap on `n' * C(n, n')`, the cost of a full enumeration.
pub const EXHAUSTIVE_WORK: u128 = 10_000_000;

const OBJECTIVE_STREAM: u64 = 0x6f62_6a65_6374_6976;
const RANDOM_STREAM: u64 = 0x7261_6e64_6f6d_7365;

#[derive(Debug, Error)]
pub enum EnvMatchError {
    #[error("n' = {n_prime} exceeds the {n} available rows")]
    NPrimeTooLarge { n_prime: usize, n: usize },
    #[error("n' must be at least 1")]
    NPrimeZero,
    #[error("candidates must be at least 1")]
    NoCandidates,
    #[error("lambda must be nonnegative, got {0}")]
    BadLambda(f64),
    #[error("length mismatch: {expected} rows expected, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("feature count mismatch: {expected} vs {found}")]
    FeatureCountMismatch { expected: usize, found: usize },
    #[error("output support has zero width; use bins = 1 or vary the output")]
    DegenerateSupport,
    #[error("every candidate sample has infinite KL divergence; set a positive epsilon")]
    InfiniteLoss,
    #[error(transparent)]
    Divergence(#[from] DimDistError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvGapResult {
    pub d2_final: f64,
    pub d2_prime_final: f64,
    pub gap: f64,
    /// Ascending row indices.
    pub selected_rows: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskSearchConfig {
    pub n_prime: usize,
    pub lambda: f64,
    pub candidates: usize,
    pub refine_iters: usize,
    pub seed: u64,
    pub divergence: DivergenceKind,
    pub bins: usize,
    pub epsilon: f64,
}

impl RiskSearchConfig {
    pub fn new(n_prime: usize) -> Self {
        Self {
            n_prime,
            lambda: 1.0,
            candidates: 8,
            refine_iters: 200,
            seed: 0,
            divergence: DivergenceKind::Js,
            bins: 32,
            epsilon: 1e-10,
        }
    }

    fn validate(&self, n: usize) -> Result<(), EnvMatchError> {
        if self.n_prime == 0 {
            return Err(EnvMatchError::NPrimeZero);
        }
        if self.n_prime > n {
            return Err(EnvMatchError::NPrimeTooLarge {
                n_prime: self.n_prime,
                n,
            });
        }
        if self.candidates == 0 {
            return Err(EnvMatchError::NoCandidates);
        }
        if !(self.lambda >= 0.0) {
            return Err(EnvMatchError::BadLambda(self.lambda));
        }
        if self.bins == 0 {
            return Err(DimDistError::ZeroBins.into());
        }
        Ok(())
    }
}

pub fn local_distance(y: f64, row: &[f64]) -> f64 {
    row.iter().map(|f| (y - f) * (y - f)).sum()
}

/// `r_i = Σ_j (y_i - f_ji)²` for every row.
pub fn row_distances(dataset: &Dataset, output: &OutputVector) -> Result<Vec<f64>, EnvMatchError> {
    if output.len() != dataset.n() {
        return Err(EnvMatchError::LengthMismatch {
            expected: dataset.n(),
            found: output.len(),
        });
    }
    let mut row = vec![0.0; dataset.k()];
    Ok(output
        .values()
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            dataset.write_row(i, &mut row);
            local_distance(y, &row)
        })
        .collect())
}

/// Sum of `r` over `rows`, folded left to right, divided by the row count.
/// Every average in this module goes through this fold so that equal row
/// sets give bit-identical values.
fn mean_over(r: &[f64], rows: impl Iterator<Item = usize>) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in rows {
        sum += r[i];
        count += 1;
    }
    sum / count as f64
}

/// `(1/n) Σ_j Σ_i (y_i - f_ji)²`. The sum runs over features and rows but is
/// divided by `n` only.
pub fn final_distance(output: &OutputVector, dataset: &Dataset) -> Result<f64, EnvMatchError> {
    let r = row_distances(dataset, output)?;
    Ok(mean_over(&r, 0..r.len()))
}

/// Gap between the full data and a sample drawn from its rows. The sample is
/// given as its own dataset, so `selected_rows` is filled with `0..n'`.
pub fn environment_gap(
    full: (&Dataset, &OutputVector),
    sample: (&Dataset, &OutputVector),
) -> Result<EnvGapResult, EnvMatchError> {
    if full.0.k() != sample.0.k() {
        return Err(EnvMatchError::FeatureCountMismatch {
            expected: full.0.k(),
            found: sample.0.k(),
        });
    }
    let d2 = final_distance(full.1, full.0)?;
    let d2p = final_distance(sample.1, sample.0)?;
    Ok(EnvGapResult {
        d2_final: d2,
        d2_prime_final: d2p,
        gap: (d2 - d2p).abs(),
        selected_rows: (0..sample.0.n()).collect(),
    })
}

fn gap_result(r: &[f64], d2: f64, mut rows: Vec<usize>) -> EnvGapResult {
    rows.sort_unstable();
    let d2p = mean_over(r, rows.iter().copied());
    EnvGapResult {
        d2_final: d2,
        d2_prime_final: d2p,
        gap: (d2 - d2p).abs(),
        selected_rows: rows,
    }
}

pub fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k) as u128;
    let mut c: u128 = 1;
    for i in 0..k {
        c = match c.checked_mul(n as u128 - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    c
}

/// Whether `(n, n')` is searched by full enumeration.
pub fn is_exhaustive(n: usize, n_prime: usize) -> bool {
    let c = binomial(n, n_prime);
    c <= EXHAUSTIVE_SUBSETS && c.saturating_mul(n_prime as u128) <= EXHAUSTIVE_WORK
}

/// Lexicographic `k`-subsets of `0..n`.
struct Combinations {
    current: Vec<usize>,
    n: usize,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        Self {
            current: (0..k).collect(),
            n,
        }
    }

    /// Moves to the next subset and returns the first position that changed.
    fn advance(&mut self) -> Option<usize> {
        let k = self.current.len();
        let mut t = k;
        loop {
            if t == 0 {
                return None;
            }
            t -= 1;
            if self.current[t] < self.n - k + t {
                break;
            }
        }
        self.current[t] += 1;
        for u in t + 1..k {
            self.current[u] = self.current[u - 1] + 1;
        }
        Some(t)
    }
}

/// Runs `visit(changed, rows, sum)` over every `k`-subset, where `sum` is the
/// left fold of `r` over the subset (kept as a prefix stack) and positions
/// before `changed` are the same as in the previous subset.
fn enumerate_subsets(r: &[f64], k: usize, mut visit: impl FnMut(usize, &[usize], f64)) {
    let mut combos = Combinations::new(r.len(), k);
    let mut prefix = vec![0.0; k + 1];
    let mut from = 0;
    loop {
        for u in from..k {
            prefix[u + 1] = prefix[u] + r[combos.current[u]];
        }
        visit(from, &combos.current, prefix[k]);
        match combos.advance() {
            Some(t) => from = t,
            None => return,
        }
    }
}

fn exhaustive_gap(r: &[f64], d2: f64, k: usize) -> Vec<usize> {
    let mut best = f64::INFINITY;
    let mut best_rows = Vec::new();
    enumerate_subsets(r, k, |_, rows, sum| {
        let gap = (d2 - sum / k as f64).abs();
        if gap < best || best_rows.is_empty() {
            best = gap;
            best_rows = rows.to_vec();
        }
    });
    best_rows
}

type Pool = BTreeSet<(u64, usize)>;

fn key(r: &[f64], i: usize) -> (u64, usize) {
    // r >= 0, so the bit pattern orders like the value
    (r[i].to_bits(), i)
}

/// Pool entry whose value is closest to `target`; ties go to the smaller
/// value.
fn nearest(pool: &Pool, r: &[f64], target: f64) -> Option<usize> {
    let probe = (target.max(0.0).to_bits(), 0);
    let above = pool.range(probe..).next().map(|&(_, i)| i);
    let below = pool.range(..probe).next_back().map(|&(_, i)| i);
    match (below, above) {
        (Some(b), Some(a)) => {
            if (r[a] - target).abs() < (target - r[b]).abs() {
                Some(a)
            } else {
                Some(b)
            }
        }
        (b, a) => b.or(a),
    }
}

/// Greedy construction plus single-swap descent on the gap. Restart 0 is
/// purely greedy; later restarts seed half the sample at random first.
fn gap_restart(
    r: &[f64],
    d2: f64,
    k: usize,
    seed: u64,
    restart: usize,
    passes: usize,
) -> Vec<usize> {
    let n = r.len();
    let mut rng = Rng::derive(seed, restart as u64);
    let mut pool: Pool = (0..n).map(|i| key(r, i)).collect();
    let mut members = Vec::with_capacity(k);
    let mut sum = 0.0;
    if restart > 0 {
        for i in rng.sample_indices(n, k / 2) {
            pool.remove(&key(r, i));
            members.push(i);
            sum += r[i];
        }
    }
    while members.len() < k {
        let target = (members.len() + 1) as f64 * d2 - sum;
        let i = nearest(&pool, r, target).expect("k <= n");
        pool.remove(&key(r, i));
        members.push(i);
        sum += r[i];
    }
    let goal = k as f64 * d2;
    for _ in 0..passes {
        let mut improved = false;
        for pos in 0..k {
            let out = members[pos];
            let Some(inn) = nearest(&pool, r, r[out] + (goal - sum)) else {
                break;
            };
            let new_sum = sum - r[out] + r[inn];
            if (goal - new_sum).abs() < (goal - sum).abs() {
                pool.remove(&key(r, inn));
                pool.insert(key(r, out));
                members[pos] = inn;
                sum = new_sum;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    members
}

fn best_by_gap(r: &[f64], d2: f64, candidates: Vec<Vec<usize>>) -> EnvGapResult {
    let mut best: Option<EnvGapResult> = None;
    for rows in candidates {
        let res = gap_result(r, d2, rows);
        if best.as_ref().is_none_or(|b| res.gap < b.gap) {
            best = Some(res);
        }
    }
    best.expect("at least one candidate")
}

fn search_gap(r: &[f64], cfg: &RiskSearchConfig) -> EnvGapResult {
    let d2 = mean_over(r, 0..r.len());
    if is_exhaustive(r.len(), cfg.n_prime) {
        return gap_result(r, d2, exhaustive_gap(r, d2, cfg.n_prime));
    }
    let candidates: Vec<Vec<usize>> = (0..cfg.candidates)
        .into_par_iter()
        .map(|s| gap_restart(r, d2, cfg.n_prime, cfg.seed, s, cfg.refine_iters))
        .collect();
    best_by_gap(r, d2, candidates)
}

/// Row subset of size `n'` with the smallest gap found. Exhaustive (hence
/// optimal) when [`is_exhaustive`] holds; otherwise the best of
/// `cfg.candidates` greedy+swap restarts.
pub fn select_lightweight_sample(
    dataset: &Dataset,
    output: &OutputVector,
    cfg: &RiskSearchConfig,
) -> Result<EnvGapResult, EnvMatchError> {
    cfg.validate(dataset.n())?;
    let r = row_distances(dataset, output)?;
    Ok(search_gap(&r, cfg))
}

/// Shared grid for comparing the output distribution with a sample of it:
/// `bins` cells over the padded union support.
fn output_grid(values: &[&[f64]], bins: usize) -> Result<Grid, EnvMatchError> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.iter().flat_map(|v| v.iter()) {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    if lo == hi && bins > 1 {
        return Err(EnvMatchError::DegenerateSupport);
    }
    Ok(Grid::padded(bins, &[lo], &[hi], DEFAULT_PAD_FRACTION)?)
}

/// Divergence in bits between the histograms of the full and sampled outputs
/// on one shared grid. No alignment is applied, so a shifted sample counts
/// as different.
pub fn output_distribution_loss(
    y_full: &OutputVector,
    y_sample: &OutputVector,
    cfg: &RiskSearchConfig,
) -> Result<f64, EnvMatchError> {
    let grid = output_grid(&[y_full.values(), y_sample.values()], cfg.bins)?;
    let p = histogram(
        &EmpiricalMeasure::from_scalars(y_full.values())?,
        GridSpec::Shared(&grid),
    )?;
    let q = histogram(
        &EmpiricalMeasure::from_scalars(y_sample.values())?,
        GridSpec::Shared(&grid),
    )?;
    Ok(f_divergence(&p, &q, cfg.divergence, cfg.epsilon)?)
}

/// Objective evaluation against a fixed full-data histogram. The sample
/// histogram is rebuilt from bin counts exactly as [`histogram`] does, so the
/// loss matches [`output_distribution_loss`] bit for bit.
struct LossTable<'a> {
    r: &'a [f64],
    bin_of: Vec<usize>,
    full: HistogramGrid,
    grid: Grid,
    d2: f64,
    k: usize,
    cfg: &'a RiskSearchConfig,
    /// Output is constant: every sample reproduces it.
    constant: bool,
}

impl<'a> LossTable<'a> {
    fn new(r: &'a [f64], y: &[f64], cfg: &'a RiskSearchConfig) -> Result<Self, EnvMatchError> {
        let d2 = mean_over(r, 0..r.len());
        let constant = y.iter().all(|&v| v == y[0]);
        let grid = if constant {
            Grid::padded(1, &[y[0]], &[y[0]], DEFAULT_PAD_FRACTION)?
        } else {
            output_grid(&[y], cfg.bins)?
        };
        let bin_of: Vec<usize> = y
            .iter()
            .map(|&v| grid.cell(&[v]).expect("grid covers the data"))
            .collect();
        let mut counts = vec![0usize; grid.cells()];
        for &b in &bin_of {
            counts[b] += 1;
        }
        let full = HistogramGrid::from_counts(grid.clone(), &counts);
        Ok(Self {
            r,
            bin_of,
            full,
            grid,
            d2,
            k: cfg.n_prime,
            cfg,
            constant,
        })
    }

    fn loss(&self, counts: &[usize]) -> f64 {
        if self.constant {
            return 0.0;
        }
        let q = HistogramGrid::from_counts(self.grid.clone(), counts);
        f_divergence(&self.full, &q, self.cfg.divergence, self.cfg.epsilon).unwrap_or(f64::INFINITY)
    }

    fn objective(&self, counts: &[usize], sum: f64) -> f64 {
        let gap = (self.d2 - sum / self.k as f64).abs();
        combine(self.loss(counts), self.cfg.lambda, gap)
    }

    fn counts_of(&self, rows: &[usize]) -> Vec<usize> {
        let mut counts = vec![0usize; self.grid.cells()];
        for &i in rows {
            counts[self.bin_of[i]] += 1;
        }
        counts
    }

    /// Exact objective of a candidate, with rows in ascending order.
    fn score(&self, rows: Vec<usize>) -> Scored {
        let env = gap_result(self.r, self.d2, rows);
        let loss = self.loss(&self.counts_of(&env.selected_rows));
        Scored {
            objective: combine(loss, self.cfg.lambda, env.gap),
            loss,
            env,
        }
    }
}

fn combine(loss: f64, lambda: f64, gap: f64) -> f64 {
    // 0 * gap stays 0 even when lambda is 0 and gap is large
    if lambda == 0.0 {
        loss
    } else {
        loss + lambda * gap
    }
}

struct Scored {
    objective: f64,
    loss: f64,
    env: EnvGapResult,
}

/// Random single swaps, each trying the best replacement from every output
/// bin, accepted on strict improvement of the objective.
fn refine_objective(table: &LossTable<'_>, mut members: Vec<usize>, rng: &mut Rng) -> Vec<usize> {
    let n = table.r.len();
    let k = members.len();
    if k == n {
        return members;
    }
    let r = table.r;
    let cells = table.grid.cells();
    let mut in_sample = vec![false; n];
    for &i in &members {
        in_sample[i] = true;
    }
    let mut pools: Vec<Pool> = vec![Pool::new(); cells];
    for i in (0..n).filter(|&i| !in_sample[i]) {
        pools[table.bin_of[i]].insert(key(r, i));
    }
    let mut counts = table.counts_of(&members);
    let mut sum: f64 = members.iter().map(|&i| r[i]).sum();
    let mut current = table.objective(&counts, sum);
    let goal = k as f64 * table.d2;
    for _ in 0..table.cfg.refine_iters {
        let pos = rng.below(k);
        let out = members[pos];
        let out_bin = table.bin_of[out];
        let mut best: Option<(f64, usize, f64)> = None;
        for pool in &pools {
            let Some(inn) = nearest(pool, r, r[out] + (goal - sum)) else {
                continue;
            };
            let in_bin = table.bin_of[inn];
            counts[out_bin] -= 1;
            counts[in_bin] += 1;
            let new_sum = sum - r[out] + r[inn];
            let obj = table.objective(&counts, new_sum);
            counts[in_bin] -= 1;
            counts[out_bin] += 1;
            if best.is_none_or(|(b, _, _)| obj < b) {
                best = Some((obj, inn, new_sum));
            }
        }
        if let Some((obj, inn, new_sum)) = best {
            if obj < current {
                let in_bin = table.bin_of[inn];
                pools[in_bin].remove(&key(r, inn));
                pools[out_bin].insert(key(r, out));
                counts[out_bin] -= 1;
                counts[in_bin] += 1;
                members[pos] = inn;
                sum = new_sum;
                current = obj;
            }
        }
    }
    members
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskOutcome {
    pub env: EnvGapResult,
    pub loss: f64,
    /// `loss + lambda * gap` of the chosen sample.
    pub objective: f64,
    pub exhaustive: bool,
    /// Model predictions on every row.
    pub predictions: OutputVector,
}

/// Evaluates the model once on all rows and returns the candidate sample
/// minimizing `output_distribution_loss + lambda * gap`.
///
/// Exhaustive below the enumeration budget. Otherwise each restart `s`
/// contributes three candidates: the gap-search sample of restart `s`, that
/// sample refined on the objective, and a random sample refined on the
/// objective. Candidates depend only on `(seed, s)`, so raising
/// `cfg.candidates` never worsens the result. `lambda = inf` returns
/// [`select_lightweight_sample`]'s choice.
pub fn risk_minimize(
    dataset: &Dataset,
    model: &ModelHandle,
    cfg: &RiskSearchConfig,
) -> Result<RiskOutcome, EnvMatchError> {
    cfg.validate(dataset.n())?;
    let all: Vec<usize> = (0..dataset.n()).collect();
    let y = evaluate_model(model, dataset, &all)?;
    risk_minimize_outputs(dataset, y, cfg)
}

/// [`risk_minimize`] with predictions already materialized.
pub fn risk_minimize_outputs(
    dataset: &Dataset,
    y: OutputVector,
    cfg: &RiskSearchConfig,
) -> Result<RiskOutcome, EnvMatchError> {
    cfg.validate(dataset.n())?;
    let r = row_distances(dataset, &y)?;
    let table = LossTable::new(&r, y.values(), cfg)?;
    let exhaustive = is_exhaustive(r.len(), cfg.n_prime);

    let best = if cfg.lambda == f64::INFINITY {
        let env = search_gap(&r, cfg);
        let loss = table.loss(&table.counts_of(&env.selected_rows));
        Scored {
            objective: f64::INFINITY,
            loss,
            env,
        }
    } else if exhaustive {
        let k = cfg.n_prime;
        let mut counts = vec![0usize; table.grid.cells()];
        let mut prev: Vec<Option<usize>> = vec![None; k];
        let mut best_obj = f64::INFINITY;
        let mut best_rows: Option<Vec<usize>> = None;
        enumerate_subsets(&r, k, |from, rows, sum| {
            for u in from..k {
                if let Some(old) = prev[u] {
                    counts[table.bin_of[old]] -= 1;
                }
                counts[table.bin_of[rows[u]]] += 1;
                prev[u] = Some(rows[u]);
            }
            let obj = table.objective(&counts, sum);
            if obj < best_obj || best_rows.is_none() {
                best_obj = obj;
                best_rows = Some(rows.to_vec());
            }
        });
        table.score(best_rows.expect("at least one subset"))
    } else {
        let d2 = table.d2;
        let k = cfg.n_prime;
        let per_restart: Vec<[Vec<usize>; 3]> = (0..cfg.candidates)
            .into_par_iter()
            .map(|s| {
                let a = gap_restart(&r, d2, k, cfg.seed, s, cfg.refine_iters);
                let mut rng = Rng::derive(cfg.seed ^ OBJECTIVE_STREAM, s as u64);
                let b = refine_objective(&table, a.clone(), &mut rng);
                let mut rng = Rng::derive(cfg.seed ^ RANDOM_STREAM, s as u64);
                let start = rng.sample_indices(r.len(), k);
                let c = refine_objective(&table, start, &mut rng);
                [a, b, c]
            })
            .collect();
        let mut best: Option<Scored> = None;
        for rows in per_restart.into_iter().flatten() {
            let cand = table.score(rows);
            if best.as_ref().is_none_or(|b| cand.objective < b.objective) {
                best = Some(cand);
            }
        }
        best.expect("at least one candidate")
    };
    if best.loss == f64::INFINITY {
        return Err(EnvMatchError::InfiniteLoss);
    }
    Ok(RiskOutcome {
        env: best.env,
        loss: best.loss,
        objective: best.objective,
        exhaustive,
        predictions: y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{FeatureColumn, FeatureKind};
    use crate::rng::Rng;
    use proptest::prelude::*;

    fn dataset(cols: &[&[f64]]) -> Dataset {
        Dataset::new(
            cols.iter()
                .enumerate()
                .map(|(j, v)| {
                    FeatureColumn::new(format!("f{j}"), FeatureKind::Continuous, v.to_vec())
                        .unwrap()
                })
                .collect(),
        )
        .unwrap()
    }

    fn out(v: &[f64]) -> OutputVector {
        OutputVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn local_distance_cases() {
        assert_eq!(local_distance(1.0, &[0.0, 0.0]), 2.0);
        assert_eq!(local_distance(2.5, &[2.5, 2.5, 2.5]), 0.0);
        assert_eq!(local_distance(0.0, &[3.0, 4.0]), 25.0);
    }

    #[test]
    fn final_distance_cases() {
        assert_eq!(
            final_distance(&out(&[1.0, 1.0]), &dataset(&[&[0.0, 0.0]])).unwrap(),
            1.0
        );
        let v = [0.3, -1.0, 7.0];
        assert_eq!(final_distance(&out(&v), &dataset(&[&v])).unwrap(), 0.0);
        assert_eq!(
            final_distance(&out(&[0.0, 3.0]), &dataset(&[&[1.0, 1.0]])).unwrap(),
            2.5
        );
        assert!(matches!(
            final_distance(&out(&[0.0]), &dataset(&[&[1.0, 1.0]])),
            Err(EnvMatchError::LengthMismatch { .. })
        ));
    }

    fn fixture4() -> (Dataset, OutputVector) {
        (
            dataset(&[&[0.0, 1.0, 2.0, 3.0], &[1.0, 1.0, 0.0, 2.0]]),
            out(&[1.0, 0.0, 2.0, 5.0]),
        )
    }

    #[test]
    fn gap_cases() {
        let (ds, y) = fixture4();
        assert_eq!(environment_gap((&ds, &y), (&ds, &y)).unwrap().gap, 0.0);
        // rows: r = (1+0, 1+1, 0+4, 4+9) = (1, 2, 4, 13); D² = 5, D'² over {0,1} = 1.5
        let sub = ds.select_rows(&[0, 1]).unwrap();
        let g = environment_gap((&ds, &y), (&sub, &y.select(&[0, 1]))).unwrap();
        assert_eq!((g.d2_final, g.d2_prime_final, g.gap), (5.0, 1.5, 3.5));
        let twin = dataset(&[&[1.0, 1.0]]);
        let ty = out(&[4.0, 4.0]);
        let one = twin.select_rows(&[1]).unwrap();
        assert_eq!(
            environment_gap((&twin, &ty), (&one, &ty.select(&[1])))
                .unwrap()
                .gap,
            0.0
        );
    }

    #[test]
    fn identical_rows_give_zero_gap() {
        let ds = dataset(&[&[2.0; 30], &[1.0; 30]]);
        let y = out(&[0.5; 30]);
        for n_prime in [1, 7, 30] {
            let res = select_lightweight_sample(&ds, &y, &RiskSearchConfig::new(n_prime)).unwrap();
            assert_eq!(res.gap, 0.0);
            assert_eq!(res.selected_rows.len(), n_prime);
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let (ds, y) = fixture4();
        assert!(matches!(
            select_lightweight_sample(&ds, &y, &RiskSearchConfig::new(5)),
            Err(EnvMatchError::NPrimeTooLarge { .. })
        ));
        let mut cfg = RiskSearchConfig::new(2);
        cfg.candidates = 0;
        assert!(matches!(
            select_lightweight_sample(&ds, &y, &cfg),
            Err(EnvMatchError::NoCandidates)
        ));
    }

    fn random_problem(seed: u64, n: usize, k: usize) -> (Dataset, OutputVector) {
        let mut rng = Rng::new(seed);
        let cols: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..n).map(|_| rng.uniform(-2.0, 2.0)).collect())
            .collect();
        let y: Vec<f64> = (0..n).map(|_| rng.uniform(-2.0, 2.0)).collect();
        let refs: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
        (dataset(&refs), out(&y))
    }

    /// Every subset evaluated through `environment_gap` on materialized
    /// sample datasets.
    fn brute_force_min_gap(ds: &Dataset, y: &OutputVector, k: usize) -> f64 {
        let n = ds.n();
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != k {
                continue;
            }
            let rows: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            let sub = ds.select_rows(&rows).unwrap();
            let g = environment_gap((ds, y), (&sub, &y.select(&rows)))
                .unwrap()
                .gap;
            best = best.min(g);
        }
        best
    }

    #[test]
    fn six_choose_three_matches_enumeration() {
        let (ds, y) = random_problem(42, 6, 3);
        let res = select_lightweight_sample(&ds, &y, &RiskSearchConfig::new(3)).unwrap();
        assert_eq!(res.gap, brute_force_min_gap(&ds, &y, 3));
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(6, 3), 20);
        assert_eq!(binomial(12, 6), 924);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(5, 5), 1);
        assert!(is_exhaustive(12, 6));
        assert!(!is_exhaustive(2000, 100));
    }

    #[test]
    fn loss_cases() {
        let cfg = RiskSearchConfig::new(1);
        let y = out(&[0.1, 0.5, 0.2, 0.9, 0.3]);
        assert_eq!(output_distribution_loss(&y, &y, &cfg).unwrap(), 0.0);
        let perm = out(&[0.9, 0.3, 0.1, 0.2, 0.5]);
        assert_eq!(output_distribution_loss(&y, &perm, &cfg).unwrap(), 0.0);
        let zeros = out(&[0.0; 100]);
        let ones = out(&[1.0; 100]);
        let mut two = RiskSearchConfig::new(1);
        two.bins = 2;
        assert_eq!(output_distribution_loss(&zeros, &ones, &two).unwrap(), 1.0);
        two.divergence = DivergenceKind::Kl;
        two.epsilon = 0.0;
        assert!(matches!(
            output_distribution_loss(&zeros, &ones, &two),
            Err(EnvMatchError::Divergence(DimDistError::InfiniteDivergence))
        ));
        assert!(matches!(
            output_distribution_loss(&zeros, &zeros, &two),
            Err(EnvMatchError::DegenerateSupport)
        ));
    }

    #[test]
    fn duplicated_rows_reach_zero_loss() {
        let base = [0.0, 1.0, 2.0, 3.0];
        let col: Vec<f64> = base.iter().chain(&base).copied().collect();
        let ds = dataset(&[&col])
            .with_auxiliary("pred", col.clone())
            .unwrap();
        let mut cfg = RiskSearchConfig::new(4);
        cfg.lambda = 0.0;
        cfg.bins = 4;
        let res = risk_minimize(&ds, &ModelHandle::Precomputed("pred".into()), &cfg).unwrap();
        assert_eq!(res.loss, 0.0);
        assert!(res.exhaustive);
    }

    #[test]
    fn infinite_lambda_matches_gap_search() {
        for (n, k) in [(10, 4), (300, 30)] {
            let (ds, y) = random_problem(n as u64, n, 3);
            let mut cfg = RiskSearchConfig::new(k);
            cfg.lambda = f64::INFINITY;
            let risk = risk_minimize_outputs(&ds, y.clone(), &cfg).unwrap();
            let gap = select_lightweight_sample(&ds, &y, &cfg).unwrap();
            assert_eq!(risk.env, gap);
        }
    }

    #[test]
    fn exhaustive_risk_is_exact() {
        let (ds, y) = random_problem(9, 10, 2);
        let mut cfg = RiskSearchConfig::new(4);
        cfg.bins = 4;
        let res = risk_minimize_outputs(&ds, y.clone(), &cfg).unwrap();
        assert!(res.exhaustive);
        for mask in 0u32..(1 << 10) {
            if mask.count_ones() != 4 {
                continue;
            }
            let rows: Vec<usize> = (0..10).filter(|i| mask & (1 << i) != 0).collect();
            let sub = ds.select_rows(&rows).unwrap();
            let ys = y.select(&rows);
            let gap = environment_gap((&ds, &y), (&sub, &ys)).unwrap().gap;
            let loss = output_distribution_loss(&y, &ys, &cfg).unwrap();
            assert!(res.objective <= loss + gap);
        }
        let ys = y.select(&res.env.selected_rows);
        assert_eq!(res.loss, output_distribution_loss(&y, &ys, &cfg).unwrap());
    }

    #[test]
    fn more_candidates_never_hurt() {
        let (ds, y) = random_problem(17, 200, 3);
        let mut prev = f64::INFINITY;
        for c in [1, 2, 4, 8] {
            let mut cfg = RiskSearchConfig::new(20);
            cfg.candidates = c;
            let res = risk_minimize_outputs(&ds, y.clone(), &cfg).unwrap();
            assert!(res.objective <= prev);
            prev = res.objective;
        }
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let (ds, y) = random_problem(3, 400, 3);
        let cfg = RiskSearchConfig::new(40);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| risk_minimize_outputs(&ds, y.clone(), &cfg).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn exhaustive_search_is_optimal(seed in 0u64..10_000, n in 1usize..=10, k in 1usize..4) {
            let k = k.min(n);
            let (ds, y) = random_problem(seed, n, 2);
            let res = select_lightweight_sample(&ds, &y, &RiskSearchConfig::new(k)).unwrap();
            prop_assert_eq!(res.gap, brute_force_min_gap(&ds, &y, k));
        }

        #[test]
        fn final_distance_row_permutation(seed in 0u64..10_000, n in 1usize..30) {
            let (ds, y) = random_problem(seed, n, 3);
            let mut rows: Vec<usize> = (0..n).collect();
            Rng::new(seed).shuffle(&mut rows);
            let a = final_distance(&y, &ds).unwrap();
            let b = final_distance(&y.select(&rows), &ds.select_rows(&rows).unwrap()).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }

        #[test]
        fn final_distance_additive_over_features(seed in 0u64..10_000, n in 1usize..30) {
            let (ds, y) = random_problem(seed, n, 3);
            let whole = final_distance(&y, &ds).unwrap();
            let parts: f64 = ds
                .features()
                .iter()
                .map(|c| final_distance(&y, &Dataset::new(vec![c.clone()]).unwrap()).unwrap())
                .sum();
            prop_assert!((whole - parts).abs() <= 1e-12 * whole.max(1.0));
        }
    }
}
