mod config;

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use excir::dataset::{load_dataset, write_dataset, DataError, LoadOptions};
use excir::dimdist::{
    distance_hat, DistanceConfig, DivergenceKind, EmpiricalMeasure, SearchConfig,
};
use excir::envmatch::{risk_minimize_outputs, RiskSearchConfig};
use excir::infotheory::{discretize, discretize_feature, InfoEstimator};
use excir::mcir::{mcir_full, mcir_pair};
use excir::pcir::pcir_values;
use excir::pipeline::{explain, pick_partners, DependenceMode, ExplainConfig, ExplainError};
use excir::report::to_json_bytes;
use excir::synthgen::{self, GroundTruth};
use excir::{evaluate_model, Dataset, FeatureKind, ModelHandle};

use config::FileSettings;

/// Bad user input; exits with status 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

#[derive(Parser)]
#[command(
    name = "excir",
    version,
    about = "Correlation-impact-ratio feature attribution"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: lightweight sample, per-feature scores, report.json.
    Explain(ExplainArgs),
    /// Select a lightweight sample and print its diagnostics as JSON.
    Envmatch(EnvmatchArgs),
    /// Distance between two point clouds of possibly different dimension.
    Dimdist(DimdistArgs),
    /// PCIR of every feature on the full data, as CSV.
    Pcir(ScoreArgs),
    /// MCIR of every feature on the full data, as CSV.
    Mcir(ScoreArgs),
    /// Write a synthetic dataset and its ground-truth sidecar.
    Synth(SynthArgs),
    /// Time the explain pipeline for several sample sizes.
    Bench(BenchArgs),
}

#[derive(Args, Clone, Default)]
struct DataArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Column holding the output.
    #[arg(long)]
    output_col: Option<String>,
    /// synthetic | precomputed:<col> | exec:<cmd>
    #[arg(long)]
    model: Option<String>,
    /// Ground-truth JSON written by `synth`, required by the synthetic model.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Columns forced to discrete (comma separated).
    #[arg(long, value_delimiter = ',')]
    discrete: Vec<String>,
    /// Columns forced to continuous (comma separated).
    #[arg(long, value_delimiter = ',')]
    continuous: Vec<String>,
}

#[derive(Args)]
struct ExplainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// independent | pairwise | full
    #[arg(long)]
    mode: Option<DependenceMode>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    n_prime: Option<usize>,
    /// Weight of the environment gap in the sample objective (`inf` allowed).
    #[arg(long)]
    lambda: Option<f64>,
    /// kl | js
    #[arg(long)]
    divergence: Option<DivergenceKind>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    candidates: Option<usize>,
    #[arg(long)]
    refine_iters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Also write report.csv.
    #[arg(long)]
    emit_plot_data: bool,
    /// Apply the Miller-Madow entropy correction.
    #[arg(long)]
    miller_madow: bool,
    /// Numerator features (comma separated); the rest form the denominator.
    #[arg(long, value_delimiter = ',')]
    numerator: Option<Vec<String>>,
    /// `key = value` file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

const EXPLAIN_KEYS: &[&str] = &[
    "data",
    "output-col",
    "model",
    "truth",
    "discrete",
    "continuous",
    "mode",
    "bins",
    "n-prime",
    "lambda",
    "divergence",
    "epsilon",
    "candidates",
    "refine-iters",
    "seed",
    "threads",
    "out-dir",
    "emit-plot-data",
    "miller-madow",
    "numerator",
];

#[derive(Args)]
struct EnvmatchArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    n_prime: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 32)]
    bins: usize,
    #[arg(long, default_value = "js")]
    divergence: DivergenceKind,
    #[arg(long, default_value_t = 1e-10)]
    epsilon: f64,
    #[arg(long, default_value_t = 8)]
    candidates: usize,
    #[arg(long, default_value_t = 200)]
    refine_iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    threads: Option<usize>,
    /// Write the JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DimdistArgs {
    /// Lower-dimensional cloud: CSV with header, one column per coordinate.
    #[arg(long)]
    mu: PathBuf,
    /// Higher-dimensional cloud, same format.
    #[arg(long)]
    delta: PathBuf,
    #[arg(long, default_value = "js")]
    divergence: DivergenceKind,
    #[arg(long, default_value_t = 32)]
    bins: usize,
    #[arg(long, default_value_t = 1e-10)]
    epsilon: f64,
    #[arg(long, default_value_t = 64)]
    restarts: usize,
    #[arg(long, default_value_t = 200)]
    refine_iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct ScoreArgs {
    #[command(flatten)]
    data: DataArgs,
    /// MCIR only: pairwise | full
    #[arg(long, default_value = "pairwise")]
    mode: DependenceMode,
    #[arg(long, default_value_t = 8)]
    bins: usize,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct SynthArgs {
    /// xor | independent_k4 | chain_dependent_k3
    #[arg(long)]
    preset: String,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Edge noise for chain_dependent_k3.
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    /// Ground-truth path; defaults to `<out>.truth.json`.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Sample sizes to time (comma separated).
    #[arg(long, value_delimiter = ',', required = true)]
    n_prime: Vec<usize>,
    /// Rows of the generated dataset.
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value = "pairwise")]
    mode: DependenceMode,
    #[arg(long, default_value_t = 8)]
    bins: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("EXCIR_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if let Some(x) = e.downcast_ref::<ExplainError>() {
        return x.exit_code() as u8;
    }
    if e.downcast_ref::<InputError>().is_some() || e.downcast_ref::<DataError>().is_some() {
        return 2;
    }
    1
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Explain(a) => cmd_explain(a),
        Command::Envmatch(a) => cmd_envmatch(a),
        Command::Dimdist(a) => cmd_dimdist(a),
        Command::Pcir(a) => cmd_pcir(a),
        Command::Mcir(a) => cmd_mcir(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

fn init_threads(threads: Option<usize>) -> Result<()> {
    if let Some(t) = threads {
        if t == 0 {
            bail!(InputError("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("cannot size the worker pool")?;
    }
    Ok(())
}

/// Resolves `--model`. A synthetic model also names its output column.
fn parse_model(
    spec: Option<&str>,
    truth: Option<&Path>,
) -> Result<Option<(ModelHandle, Option<String>)>> {
    let Some(spec) = spec else {
        return Ok(None);
    };
    if spec == "synthetic" {
        let path = truth.ok_or_else(|| InputError("--model synthetic needs --truth".into()))?;
        let text = fs::read_to_string(path)
            .map_err(|e| InputError(format!("cannot read {}: {e}", path.display())))?;
        let truth: GroundTruth = serde_json::from_str(&text)
            .map_err(|e| InputError(format!("bad ground truth {}: {e}", path.display())))?;
        let output = truth.output_name.clone();
        return Ok(Some((ModelHandle::Synthetic(truth.model()), Some(output))));
    }
    if let Some(col) = spec.strip_prefix("precomputed:") {
        return Ok(Some((ModelHandle::Precomputed(col.to_string()), None)));
    }
    if let Some(cmd) = spec.strip_prefix("exec:") {
        return Ok(Some((ModelHandle::External(cmd.to_string()), None)));
    }
    bail!(InputError(format!(
        "unknown model `{spec}` (expected synthetic, precomputed:<col> or exec:<cmd>)"
    )))
}

/// Loads the data and resolves the model. Without `--model` the output
/// column itself serves as the prediction. Returns the resolved output column.
fn load_with_model(d: &DataArgs) -> Result<(Dataset, ModelHandle, Option<String>)> {
    let path = d
        .data
        .as_ref()
        .ok_or_else(|| InputError("--data is required".into()))?;
    let model = parse_model(d.model.as_deref(), d.truth.as_deref())?;
    let (model, output_col) = match (model, &d.output_col) {
        (Some((m, _)), Some(col)) => (m, Some(col.clone())),
        (Some((m, implied)), None) => (m, implied.filter(|c| header_has(path, c))),
        (None, Some(col)) => (ModelHandle::Precomputed(col.clone()), Some(col.clone())),
        (None, None) => bail!(InputError(
            "no output: pass --output-col or a --model".into()
        )),
    };
    let mut opts = LoadOptions {
        output_col: output_col.clone(),
        ..LoadOptions::default()
    };
    if let ModelHandle::Precomputed(col) = &model {
        if output_col.as_deref() != Some(col.as_str()) {
            opts.auxiliary.push(col.clone());
        }
    }
    let mut hints = HashMap::new();
    for c in &d.discrete {
        hints.insert(c.clone(), FeatureKind::Discrete);
    }
    for c in &d.continuous {
        hints.insert(c.clone(), FeatureKind::Continuous);
    }
    opts.hints = hints;
    let ds = load_dataset(path, &opts).with_context(|| format!("loading {}", path.display()))?;
    Ok((ds, model, output_col))
}

fn header_has(path: &Path, col: &str) -> bool {
    fs::read_to_string(path)
        .ok()
        .and_then(|t| {
            t.lines()
                .next()
                .map(|h| h.split(',').any(|c| c.trim().trim_matches('"') == col))
        })
        .unwrap_or(false)
}

fn list_setting(file: &FileSettings, cli: Vec<String>, key: &str) -> Result<Vec<String>> {
    if !cli.is_empty() {
        return Ok(cli);
    }
    Ok(file
        .pick::<String>(None, key)?
        .map(|v| {
            v.split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect()
        })
        .unwrap_or_default())
}

fn cmd_explain(a: ExplainArgs) -> Result<()> {
    let file = match &a.config {
        Some(p) => FileSettings::load(p, EXPLAIN_KEYS)?,
        None => FileSettings::default(),
    };
    let data = DataArgs {
        data: file.pick(a.data.data, "data")?,
        output_col: file.pick(a.data.output_col, "output-col")?,
        model: file.pick(a.data.model, "model")?,
        truth: file.pick(a.data.truth, "truth")?,
        discrete: list_setting(&file, a.data.discrete, "discrete")?,
        continuous: list_setting(&file, a.data.continuous, "continuous")?,
    };
    init_threads(file.pick(a.threads, "threads")?)?;
    let (ds, model, output_col) = load_with_model(&data)?;

    let mut cfg = ExplainConfig::new(model);
    cfg.output_col = output_col;
    if let Some(v) = file.pick(a.mode, "mode")? {
        cfg.mode = v;
    }
    if let Some(v) = file.pick(a.bins, "bins")? {
        cfg.bins = v;
    }
    cfg.n_prime = file.pick(a.n_prime, "n-prime")?;
    if let Some(v) = file.pick(a.lambda, "lambda")? {
        cfg.lambda = v;
    }
    if let Some(v) = file.pick(a.divergence, "divergence")? {
        cfg.divergence = v;
    }
    if let Some(v) = file.pick(a.epsilon, "epsilon")? {
        cfg.epsilon = v;
    }
    if let Some(v) = file.pick(a.candidates, "candidates")? {
        cfg.candidates = v;
    }
    if let Some(v) = file.pick(a.refine_iters, "refine-iters")? {
        cfg.refine_iters = v;
    }
    if let Some(v) = file.pick(a.seed, "seed")? {
        cfg.seed = v;
    }
    cfg.miller_madow = file.flag(a.miller_madow, "miller-madow")?;
    let numerator = list_setting(&file, a.numerator.unwrap_or_default(), "numerator")?;
    cfg.numerator = (!numerator.is_empty()).then_some(numerator);
    let emit_plot = file.flag(a.emit_plot_data, "emit-plot-data")?;
    let out_dir = file
        .pick(a.out_dir, "out-dir")?
        .unwrap_or_else(|| PathBuf::from("."));

    let explanation = explain(&ds, &cfg)?;
    fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let report_path = out_dir.join("report.json");
    fs::write(&report_path, explanation.report.to_json())
        .with_context(|| format!("writing {}", report_path.display()))?;
    log::info!("wrote {}", report_path.display());
    if emit_plot {
        let csv_path = out_dir.join("report.csv");
        fs::write(&csv_path, explanation.report.to_csv())
            .with_context(|| format!("writing {}", csv_path.display()))?;
    }
    for w in &explanation.report.globals.warnings {
        log::warn!("{w}");
    }
    Ok(())
}

#[derive(Serialize)]
struct EnvmatchOutput {
    n: usize,
    n_prime: usize,
    d2_final: f64,
    d2_prime_final: f64,
    env_gap: f64,
    output_divergence_bits: f64,
    objective: Option<f64>,
    exhaustive: bool,
    selected_rows: Vec<usize>,
}

fn cmd_envmatch(a: EnvmatchArgs) -> Result<()> {
    init_threads(a.threads)?;
    let (ds, model, _) = load_with_model(&a.data)?;
    let all: Vec<usize> = (0..ds.n()).collect();
    let y = evaluate_model(&model, &ds, &all).map_err(ExplainError::from)?;
    let cfg = RiskSearchConfig {
        n_prime: a
            .n_prime
            .unwrap_or(ds.n().min(excir::pipeline::DEFAULT_N_PRIME_CAP)),
        lambda: a.lambda,
        candidates: a.candidates,
        refine_iters: a.refine_iters,
        seed: a.seed,
        divergence: a.divergence,
        bins: a.bins,
        epsilon: a.epsilon,
    };
    let out = risk_minimize_outputs(&ds, y, &cfg).map_err(ExplainError::from)?;
    let record = EnvmatchOutput {
        n: ds.n(),
        n_prime: cfg.n_prime,
        d2_final: out.env.d2_final,
        d2_prime_final: out.env.d2_prime_final,
        env_gap: out.env.gap,
        output_divergence_bits: out.loss,
        objective: out.objective.is_finite().then_some(out.objective),
        exhaustive: out.exhaustive,
        selected_rows: out.env.selected_rows,
    };
    let bytes = to_json_bytes(&record)?;
    match a.out {
        Some(p) => fs::write(&p, bytes).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(&bytes)?,
    }
    Ok(())
}

fn load_cloud(path: &Path) -> Result<EmpiricalMeasure> {
    let ds = load_dataset(path, &LoadOptions::default())
        .with_context(|| format!("loading {}", path.display()))?;
    let mut flat = Vec::with_capacity(ds.n() * ds.k());
    for i in 0..ds.n() {
        flat.extend(ds.row(i));
    }
    EmpiricalMeasure::from_flat(ds.k(), flat).map_err(|e| InputError(e.to_string()).into())
}

#[derive(Serialize)]
struct DimdistOutput {
    mu_dim: usize,
    delta_dim: usize,
    distance_hat: f64,
    projection: f64,
    embedding: f64,
    disagreement: f64,
    projection_matrix: Vec<Vec<f64>>,
    projection_offset: Vec<f64>,
}

fn cmd_dimdist(a: DimdistArgs) -> Result<()> {
    init_threads(a.threads)?;
    let mu = load_cloud(&a.mu)?;
    let delta = load_cloud(&a.delta)?;
    if mu.dim() > delta.dim() {
        bail!(InputError(format!(
            "mu has dimension {} > delta's {}",
            mu.dim(),
            delta.dim()
        )));
    }
    let cfg = DistanceConfig {
        kind: a.divergence,
        bins: a.bins,
        epsilon: a.epsilon,
        search: SearchConfig {
            restarts: a.restarts,
            refine_iters: a.refine_iters,
            seed: a.seed,
        },
    };
    let d = distance_hat(&mu, &delta, &cfg)?;
    let map = &d.projection.map;
    let record = DimdistOutput {
        mu_dim: mu.dim(),
        delta_dim: delta.dim(),
        distance_hat: d.value,
        projection: d.projection.value,
        embedding: d.embedding.value,
        disagreement: d.disagreement,
        projection_matrix: (0..map.rows())
            .map(|r| map.matrix_row(r).to_vec())
            .collect(),
        projection_offset: map.offset().to_vec(),
    };
    std::io::stdout().write_all(&to_json_bytes(&record)?)?;
    Ok(())
}

fn predictions(d: &DataArgs) -> Result<(Dataset, Vec<f64>)> {
    let (ds, model, _) = load_with_model(d)?;
    let all: Vec<usize> = (0..ds.n()).collect();
    let y = evaluate_model(&model, &ds, &all).map_err(ExplainError::from)?;
    Ok((ds, y.values().to_vec()))
}

fn cmd_pcir(a: ScoreArgs) -> Result<()> {
    init_threads(a.threads)?;
    let (ds, y) = predictions(&a.data)?;
    let mut out = String::from("feature,pcir,direction\n");
    let mut degenerate = Vec::new();
    for c in ds.features() {
        match pcir_values(c.name(), c.values(), &y) {
            Ok(s) => out.push_str(&format!(
                "{},{:.16e},{}\n",
                s.name,
                s.eta,
                s.direction.as_str()
            )),
            Err(e) => degenerate.push(e.to_string()),
        }
    }
    if !degenerate.is_empty() {
        return Err(ExplainError::Degenerate(degenerate).into());
    }
    print!("{out}");
    Ok(())
}

fn cmd_mcir(a: ScoreArgs) -> Result<()> {
    init_threads(a.threads)?;
    if a.mode == DependenceMode::Independent {
        bail!(InputError("mcir needs --mode pairwise or full".into()));
    }
    let (ds, y) = predictions(&a.data)?;
    if ds.k() < 2 {
        bail!(InputError("mcir needs at least two features".into()));
    }
    let est = InfoEstimator::default();
    let y_kind = excir::dataset::infer_kind(&y, excir::dataset::DEFAULT_MAX_CATEGORIES);
    let yc = discretize(&y, y_kind, a.bins);
    let cols: Vec<_> = ds
        .features()
        .iter()
        .map(|c| discretize_feature(c, a.bins))
        .collect();
    let refs: Vec<_> = cols.iter().collect();
    let partners = match a.mode {
        DependenceMode::Pairwise => Some(pick_partners(&est, &refs).map_err(|e| anyhow!(e))?),
        _ => None,
    };
    let mut out =
        String::from("feature,mcir,cmmi_bits,jmi_bits,joint_mutual_impact,conditioned_on\n");
    let mut degenerate = Vec::new();
    for (i, c) in ds.features().iter().enumerate() {
        let (score, given) = match &partners {
            Some(p) => (
                mcir_pair(&est, c.name(), &yc, refs[i], refs[p[i]]),
                ds.feature(p[i]).name().to_string(),
            ),
            None => (mcir_full(&est, c.name(), &yc, i, &refs), "all".to_string()),
        };
        match score {
            Ok(s) => out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
                s.name, s.mcir, s.cmmi_bits, s.jmi_bits, s.joint_mutual_impact, given
            )),
            Err(excir::mcir::McirError::Degenerate(_)) => {
                degenerate.push(format!("feature `{}`: mcir is 0/0", c.name()))
            }
            Err(e) => return Err(anyhow!(e)),
        }
    }
    if !degenerate.is_empty() {
        return Err(ExplainError::Degenerate(degenerate).into());
    }
    print!("{out}");
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let (ds, truth) = match (a.preset.as_str(), a.noise) {
        ("chain_dependent_k3", Some(noise)) => {
            let spec = synthgen::chain_dependent_k3_spec(a.n, a.seed, noise);
            let (ds, mut truth) =
                synthgen::generate(&spec).map_err(|e| InputError(e.to_string()))?;
            truth.preset = Some(a.preset.clone());
            (ds, Some(truth))
        }
        (_, Some(_)) => bail!(InputError(
            "--noise only applies to chain_dependent_k3".into()
        )),
        (name, None) => {
            synthgen::preset(name, a.n, a.seed).map_err(|e| InputError(e.to_string()))?
        }
    };
    write_dataset(&ds, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    if let Some(truth) = truth {
        let path = a.truth.unwrap_or_else(|| {
            let mut p = a.out.clone().into_os_string();
            p.push(".truth.json");
            PathBuf::from(p)
        });
        fs::write(&path, to_json_bytes(&truth)?)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

/// Eight independent continuous features, four per side.
fn bench_dataset(n: usize, seed: u64) -> Result<Dataset> {
    let mut spec = synthgen::independent_k4_spec(n, seed);
    let extra = synthgen::independent_k4_spec(n, seed.wrapping_add(1));
    let mut betas = spec.betas[..2].to_vec();
    betas.extend(&extra.betas[..2]);
    betas.extend(&spec.betas[2..]);
    betas.extend(&extra.betas[2..]);
    let mut dists = spec.distributions[..2].to_vec();
    dists.extend_from_slice(&extra.distributions[..2]);
    dists.extend_from_slice(&spec.distributions[2..]);
    dists.extend_from_slice(&extra.distributions[2..]);
    spec.betas = betas;
    spec.distributions = dists;
    spec.presence_p = vec![0.9; 8];
    spec.m = 4;
    Ok(synthgen::generate(&spec).map_err(|e| anyhow!(e))?.0)
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    init_threads(a.threads)?;
    let ds = bench_dataset(a.n, a.seed)?;
    let mut out = String::from("n_prime,seconds\n");
    for &n_prime in &a.n_prime {
        let mut cfg = ExplainConfig::for_output_column("y");
        cfg.mode = a.mode;
        cfg.bins = a.bins;
        cfg.seed = a.seed;
        cfg.n_prime = Some(n_prime);
        let start = Instant::now();
        explain(&ds, &cfg)?;
        out.push_str(&format!("{n_prime},{:.6}\n", start.elapsed().as_secs_f64()));
    }
    print!("{out}");
    Ok(())
}
