//! Batch frontend: generate operators and signals, sample them, run single
//! recoveries, drive γ-sweeps, and print reports. Everything is driven by
//! flags and files; reruns with the same inputs produce identical outputs.
//!
//! Exit codes: 0 ok, 1 usage or IO error, 2 solver did not converge,
//! 3 selftest failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use tdsamp::error::Error;
use tdsamp::experiments::{
    export_csv, run_experiment, ExperimentConfig, ExperimentFamily, GammaSummary,
};
use tdsamp::numerics::{norm2, read_vector_csv, rel_error, vsub, write_vector_csv, DenseMatrix};
use tdsamp::operators::{
    bivariate_haar, dif_2d, dif_ld, random_tight_frame, read_operator, write_operator,
    AnalysisOperator,
};
use tdsamp::rng::mix;
use tdsamp::schemes::{
    cosparse_tail, recover_analysis_baseline, recover_dif_scheme, recover_frame_scheme,
    recover_general_scheme, sobolev_check, SchemeResult,
};
use tdsamp::sensing::{
    compose_frame_ensemble, compose_stacked_ensemble, gaussian_matrix, measure, plain_ensemble,
    read_ensemble, write_ensemble, MeasurementEnsemble,
};
use tdsamp::signals::{gen_cosparse, gen_piecewise_image, read_signal, write_signal, NoiseModel};
use tdsamp::solvers::{
    brute_force_l0_synthesis, cosamp, l1_bpdn, omp, Algorithm, FitNorm, SynthesisProgramSpec,
};

type Result<T> = std::result::Result<T, Error>;

#[derive(Parser)]
#[command(
    name = "tdsamp",
    about = "Sample analysis-sparse signals in the transform domain and recover them",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an analysis operator and write it as CSV + JSON sidecar
    GenOperator(GenOperatorArgs),
    /// Generate a signal matched to an operator or an image geometry
    GenSignal(GenSignalArgs),
    /// Build a measurement ensemble and sample a signal through it
    Sample(SampleArgs),
    /// Recover a signal from sampled files with one of the schemes
    Recover(RecoverArgs),
    /// Run a γ-sweep from a JSON config and export trial/summary CSVs
    Experiment(ExperimentArgs),
    /// Pretty-print a summary CSV produced by `experiment`
    Report(ReportArgs),
    /// Run the built-in oracle and invariant checks
    Selftest(SelftestArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OperatorKindArg {
    TightFrame,
    Dif2d,
    DifLd,
    Haar,
}

#[derive(Args)]
struct GenOperatorArgs {
    #[arg(long, value_enum)]
    kind: OperatorKindArg,
    /// Transform rows (tight-frame only)
    #[arg(long)]
    n: Option<usize>,
    /// Signal dimension (tight-frame only)
    #[arg(long)]
    d: Option<usize>,
    /// Image side (dif2d, haar)
    #[arg(long = "N")]
    side: Option<usize>,
    /// Comma-separated axis lengths (dif-ld)
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output base path; writes <out>.csv and <out>.json
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenSignalArgs {
    /// Operator base path (cosparse signals)
    #[arg(long)]
    operator: Option<PathBuf>,
    /// Rows of the operator forced to zero (cosparse signals)
    #[arg(long)]
    cosparsity: Option<usize>,
    /// Generate a piecewise-constant image instead
    #[arg(long, default_value_t = false)]
    image: bool,
    /// Image side (with --image)
    #[arg(long = "N")]
    side: Option<usize>,
    /// Connected components (with --image)
    #[arg(long, default_value_t = 4)]
    components: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    Frame,
    Dif,
    General,
    Baseline,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long, value_enum)]
    scheme: SchemeArg,
    /// Operator base path (frame, dif, general)
    #[arg(long)]
    operator: Option<PathBuf>,
    /// Signal base path
    #[arg(long)]
    signal: PathBuf,
    /// Total measurements; alternatively --gamma
    #[arg(long)]
    m: Option<usize>,
    /// Sampling ratio; m = ceil(d·gamma)
    #[arg(long)]
    gamma: Option<f64>,
    /// Direct measurement rows (dif, general)
    #[arg(long, default_value_t = 2)]
    m2: usize,
    /// Gaussian noise standard deviation
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output base path; writes matrix blocks, <out>.y.csv, <out>.meta.json
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
enum AlgorithmArg {
    Omp,
    Cosamp,
    Iht,
    L1Bpdn,
    BruteL0,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Algorithm {
        match a {
            AlgorithmArg::Omp => Algorithm::Omp,
            AlgorithmArg::Cosamp => Algorithm::Cosamp,
            AlgorithmArg::Iht => Algorithm::Iht,
            AlgorithmArg::L1Bpdn => Algorithm::L1Bpdn,
            AlgorithmArg::BruteL0 => Algorithm::BruteL0,
        }
    }
}

#[derive(Args)]
struct RecoverArgs {
    #[arg(long, value_enum)]
    scheme: SchemeArg,
    /// Measurement base path produced by `sample`
    #[arg(long)]
    measurement: PathBuf,
    /// Operator base path
    #[arg(long)]
    operator: PathBuf,
    #[arg(long, value_enum, default_value_t = AlgorithmArg::L1Bpdn)]
    program: AlgorithmArg,
    /// Sparsity budget; defaults to the sampled signal's k
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Noise budget for the proxy solve; defaults to the recorded ‖e₁‖₂
    #[arg(long)]
    epsilon: Option<f64>,
    /// Direct-block budget; defaults to the recorded ‖e₂‖₂
    #[arg(long)]
    epsilon2: Option<f64>,
    /// Fit norm for the general scheme
    #[arg(long, default_value_t = 1)]
    p: u8,
    /// Signal base path; when given, prints and records the relative error
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON config (see docs/config.md)
    #[arg(long)]
    config: PathBuf,
    /// Override the config's trial count
    #[arg(long)]
    trials: Option<usize>,
    /// Override the γ grid, comma-separated
    #[arg(long, value_delimiter = ',')]
    gammas: Option<Vec<f64>>,
    /// Override the master seed
    #[arg(long)]
    master_seed: Option<u64>,
    /// Worker threads for trial execution (default: logical cores)
    #[arg(long)]
    workers: Option<usize>,
    /// Output base path; writes <out>.trials.csv and <out>.summary.csv
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// A <base>.summary.csv file written by `experiment`
    #[arg(long)]
    summary: PathBuf,
}

#[derive(Args)]
struct SelftestArgs {
    /// Corrupt a named check to prove the harness catches it
    #[arg(long)]
    inject_fault: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct MeasurementMeta {
    scheme: String,
    m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    split: Option<usize>,
    sigma: f64,
    seed: u64,
    /// Sparsity of the sampled signal's transform coefficients.
    k: usize,
    e_norm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    e1_norm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    e2_norm: Option<f64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Error::NonConvergence(msg)) => {
            eprintln!("error: solver did not converge: {}", msg);
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::GenOperator(args) => cmd_gen_operator(args),
        Command::GenSignal(args) => cmd_gen_signal(args),
        Command::Sample(args) => cmd_sample(args),
        Command::Recover(args) => cmd_recover(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Report(args) => cmd_report(args),
        Command::Selftest(args) => cmd_selftest(args),
    }
}

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn required<T>(value: Option<T>, flag: &str, context: &str) -> Result<T> {
    value.ok_or_else(|| usage(format!("{} requires {}", context, flag)))
}

fn cmd_gen_operator(args: GenOperatorArgs) -> Result<u8> {
    let op = match args.kind {
        OperatorKindArg::TightFrame => {
            let n = required(args.n, "--n", "tight-frame")?;
            let d = required(args.d, "--d", "tight-frame")?;
            random_tight_frame(n, d, args.seed)?
        }
        OperatorKindArg::Dif2d => dif_2d(required(args.side, "--N", "dif2d")?)?,
        OperatorKindArg::DifLd => {
            let dims = required(args.dims, "--dims", "dif-ld")?;
            dif_ld(&dims)?
        }
        OperatorKindArg::Haar => {
            let side = required(args.side, "--N", "haar")?;
            if !side.is_power_of_two() {
                return Err(usage(format!("N must be a power of 2, got {}", side)));
            }
            bivariate_haar(side)?
        }
    };
    write_operator(&op, &args.out)?;
    println!(
        "wrote {}.csv ({}x{}) and {}.json",
        args.out.display(),
        op.num_atoms(),
        op.signal_dim(),
        args.out.display()
    );
    match (op.lower_frame_bound, op.upper_frame_bound) {
        (Some(lo), Some(hi)) => println!("frame bounds: ({}, {})", lo, hi),
        _ => println!("frame bounds: none (not a frame)"),
    }
    Ok(0)
}

fn cmd_gen_signal(args: GenSignalArgs) -> Result<u8> {
    let sig = if args.image {
        let side = required(args.side, "--N", "--image")?;
        gen_piecewise_image(side, args.components, args.seed)?
    } else {
        let base = required(args.operator, "--operator", "cosparse generation")?;
        let cosparsity = required(args.cosparsity, "--cosparsity", "cosparse generation")?;
        let op = read_operator(&base)?;
        gen_cosparse(&op, cosparsity, args.seed)?
    };
    write_signal(&sig, &args.out)?;
    println!(
        "wrote {}.csv ({} entries, k = {}) and {}.json",
        args.out.display(),
        sig.x.len(),
        sig.k,
        args.out.display()
    );
    Ok(0)
}

fn noise_model(sigma: f64, seed: u64) -> NoiseModel {
    if sigma > 0.0 {
        NoiseModel::gaussian(sigma, seed)
    } else {
        NoiseModel::none()
    }
}

fn resolve_m(args: &SampleArgs, d: usize) -> Result<usize> {
    match (args.m, args.gamma) {
        (Some(m), _) => Ok(m),
        (None, Some(g)) => {
            if !(g > 0.0 && g <= 1.0) {
                return Err(usage(format!("gamma must lie in (0, 1], got {}", g)));
            }
            Ok((d as f64 * g).ceil() as usize)
        }
        (None, None) => Err(usage("sample requires --m or --gamma")),
    }
}

fn cmd_sample(args: SampleArgs) -> Result<u8> {
    let sig = read_signal(&args.signal)?;
    let d = sig.x.len();
    let m = resolve_m(&args, d)?;
    if m < 1 {
        return Err(usage("need at least one measurement"));
    }

    let ensemble: MeasurementEnsemble = match args.scheme {
        SchemeArg::Baseline => {
            let mat = gaussian_matrix(m, d, true, mix(&[args.seed, 1]))?;
            plain_ensemble(mat)
        }
        SchemeArg::Frame => {
            let base = required(args.operator.clone(), "--operator", "frame sampling")?;
            let op = read_operator(&base)?;
            let a = gaussian_matrix(m, op.num_atoms(), true, mix(&[args.seed, 1]))?;
            compose_frame_ensemble(a, op)?
        }
        SchemeArg::Dif | SchemeArg::General => {
            let base = required(args.operator.clone(), "--operator", "stacked sampling")?;
            let op = read_operator(&base)?;
            if m <= args.m2 {
                return Err(usage(format!(
                    "m = {} leaves no transform samples after m2 = {}",
                    m, args.m2
                )));
            }
            let a = gaussian_matrix(m - args.m2, op.num_atoms(), true, mix(&[args.seed, 1]))?;
            let b = gaussian_matrix(args.m2, d, true, mix(&[args.seed, 2]))?;
            compose_stacked_ensemble(a, op, b)?
        }
    }
    .with_seed(args.seed);

    let model = noise_model(args.sigma, mix(&[args.seed, 3]));
    let sampled = measure(&ensemble, &sig.x, &model)?;
    write_ensemble(&ensemble, &args.out)?;
    write_vector_csv(&sampled.y, &suffixed(&args.out, "y.csv"))?;

    let meta = MeasurementMeta {
        scheme: scheme_name(args.scheme).to_string(),
        m,
        split: sampled.split,
        sigma: args.sigma,
        seed: args.seed,
        k: sig.k,
        e_norm: norm2(&sampled.e),
        e1_norm: sampled.split.map(|_| norm2(sampled.e1())),
        e2_norm: sampled.split.map(|_| norm2(sampled.e2())),
    };
    write_json(&meta, &suffixed(&args.out, "meta.json"))?;
    println!(
        "wrote {} measurements to {}.y.csv (noise norm {})",
        sampled.y.len(),
        args.out.display(),
        meta.e_norm
    );
    Ok(0)
}

fn scheme_name(s: SchemeArg) -> &'static str {
    match s {
        SchemeArg::Frame => "frame",
        SchemeArg::Dif => "dif",
        SchemeArg::General => "general",
        SchemeArg::Baseline => "baseline",
    }
}

fn suffixed(base: &Path, suffix: &str) -> PathBuf {
    PathBuf::from(format!("{}.{}", base.display(), suffix))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Json {
        path: path.display().to_string(),
        source: e,
    })?;
    fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.display().to_string(),
        source: e,
    })
}

/// Dimension guard that names both offending files.
fn expect_len(
    actual: usize,
    expected: usize,
    what: &Path,
    what_suffix: &str,
    against: &str,
) -> Result<()> {
    if actual != expected {
        return Err(Error::DimensionMismatch(format!(
            "{}.{} has {} entries but {} expects {}",
            what.display(),
            what_suffix,
            actual,
            against,
            expected
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct RecoverReportFile {
    scheme: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    program: Option<SynthesisProgramSpec>,
    converged: bool,
    diagnostics: std::collections::BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rel_error: Option<f64>,
}

fn cmd_recover(args: RecoverArgs) -> Result<u8> {
    let ensemble = read_ensemble(&args.measurement)?;
    let y = read_vector_csv(&suffixed(&args.measurement, "y.csv"))?;
    let meta: MeasurementMeta = read_json(&suffixed(&args.measurement, "meta.json"))?;
    let op = read_operator(&args.operator)?;
    expect_len(
        y.len(),
        ensemble.num_measurements(),
        &args.measurement,
        "y.csv",
        &format!("{}.m.csv", args.measurement.display()),
    )?;
    if args.scheme != SchemeArg::Baseline && ensemble.a.cols != op.num_atoms() {
        return Err(Error::DimensionMismatch(format!(
            "{}.a.csv has {} columns but {}.csv has {} transform rows",
            args.measurement.display(),
            ensemble.a.cols,
            args.operator.display(),
            op.num_atoms()
        )));
    }

    let mut program = SynthesisProgramSpec::new(args.program.into(), args.k.unwrap_or(meta.k));
    if let Some(it) = args.max_iters {
        program = program.with_max_iters(it);
    }
    if let Some(tol) = args.tol {
        program = program.with_tol(tol);
    }
    let proxy_budget = args
        .epsilon
        .or(meta.e1_norm)
        .unwrap_or(meta.e_norm);
    if proxy_budget > 0.0 {
        program = program.with_noise_budget(proxy_budget);
    }

    let result: SchemeResult = match args.scheme {
        SchemeArg::Frame => recover_frame_scheme(&y, &ensemble.a, &op, &program)?,
        SchemeArg::Baseline => {
            let eps = args.epsilon.unwrap_or(meta.e_norm);
            recover_analysis_baseline(&y, &ensemble.m, &op, eps)?
        }
        SchemeArg::Dif | SchemeArg::General => {
            let split = meta.split.ok_or_else(|| {
                usage(format!(
                    "{}.meta.json has no split: sampled with a non-stacked scheme",
                    args.measurement.display()
                ))
            })?;
            let b = ensemble.b.as_ref().ok_or_else(|| {
                usage(format!(
                    "{}.json has no direct block B",
                    args.measurement.display()
                ))
            })?;
            let (y1, y2) = y.split_at(split);
            let eps2 = args.epsilon2.or(meta.e2_norm).unwrap_or(0.0);
            if args.scheme == SchemeArg::Dif {
                let side = op
                    .geometry
                    .as_ref()
                    .and_then(|g| g.first().copied())
                    .ok_or_else(|| {
                        usage(format!(
                            "{}.json carries no image geometry",
                            args.operator.display()
                        ))
                    })?;
                recover_dif_scheme(y1, y2, &ensemble.a, b, side, &program, eps2)?
            } else {
                let norm = FitNorm::from_p(args.p)?;
                recover_general_scheme(y1, y2, &ensemble.a, b, &op, &program, eps2, norm)?
            }
        }
    };

    write_vector_csv(&result.x_hat, &suffixed(&args.out, "x_hat.csv"))?;
    if let Some(w) = &result.w_hat {
        write_vector_csv(w, &suffixed(&args.out, "w_hat.csv"))?;
    }

    let rel = match &args.truth {
        Some(base) => {
            let truth = read_signal(base)?;
            expect_len(
                result.x_hat.len(),
                truth.x.len(),
                &args.out,
                "x_hat.csv",
                &format!("{}.csv", base.display()),
            )?;
            Some(rel_error(&result.x_hat, &truth.x))
        }
        None => None,
    };

    let converged = result
        .diagnostics
        .iter()
        .filter(|(name, _)| name.ends_with("converged"))
        .all(|(_, &v)| v == 1.0);
    let report = RecoverReportFile {
        scheme: result.scheme.as_str().to_string(),
        program: result.program.clone(),
        converged,
        diagnostics: result.diagnostics.clone(),
        rel_error: rel,
    };
    write_json(&report, &suffixed(&args.out, "report.json"))?;

    println!(
        "scheme {} with {}: converged = {}",
        result.scheme,
        result
            .program
            .as_ref()
            .map(|p| format!("{} (k = {})", p.algorithm, p.k))
            .unwrap_or_else(|| "direct l1 fit".to_string()),
        converged
    );
    for (name, value) in &result.diagnostics {
        println!("  {} = {}", name, value);
    }
    if let Some(r) = rel {
        println!("rel_error = {}", r);
    }
    Ok(if converged { 0 } else { 2 })
}

fn cmd_experiment(args: ExperimentArgs) -> Result<u8> {
    let mut config: ExperimentConfig = read_json(&args.config)?;
    if let Some(trials) = args.trials {
        config.trials = trials;
    }
    if let Some(gammas) = args.gammas {
        config.gamma_grid = gammas;
    }
    if let Some(seed) = args.master_seed {
        config.master_seed = seed;
    }
    if let Some(workers) = args.workers {
        if workers < 1 {
            return Err(usage("--workers must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| usage(format!("worker pool: {}", e)))?;
    }
    config.validate()?;
    let new_scheme = match config.family {
        ExperimentFamily::Frame => "frame_scheme",
        ExperimentFamily::Dif2d => "dif_scheme",
    };
    let result = run_experiment(&config)?;
    export_csv(&result, &args.out)?;
    print_summary_table(
        result
            .per_gamma
            .iter()
            .flat_map(|g| summary_rows(g, new_scheme)),
    );
    println!(
        "wrote {}.trials.csv and {}.summary.csv",
        args.out.display(),
        args.out.display()
    );
    Ok(0)
}

fn summary_rows(g: &GammaSummary, new_scheme: &str) -> [(f64, String, f64, f64, usize); 2] {
    [
        (
            g.gamma,
            new_scheme.to_string(),
            g.rate_new_scheme,
            g.mse_new_scheme,
            g.trials,
        ),
        (
            g.gamma,
            "analysis_baseline".to_string(),
            g.rate_baseline,
            g.mse_baseline,
            g.trials,
        ),
    ]
}

fn print_summary_table(rows: impl Iterator<Item = (f64, String, f64, f64, usize)>) {
    println!(
        "{:>6}  {:<18} {:>8} {:>13} {:>7}",
        "gamma", "scheme", "rate", "mse", "trials"
    );
    for (gamma, scheme, rate, mse, trials) in rows {
        println!(
            "{:>6}  {:<18} {:>8.3} {:>13.4e} {:>7}",
            gamma, scheme, rate, mse, trials
        );
    }
}

fn cmd_report(args: ReportArgs) -> Result<u8> {
    let text = fs::read_to_string(&args.summary)
        .map_err(|e| Error::io(args.summary.display().to_string(), e))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != "gamma,scheme,rate,mse,trials" {
        return Err(usage(format!(
            "{} is not a summary CSV (header: {})",
            args.summary.display(),
            header
        )));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 5 {
            return Err(Error::Parse {
                path: args.summary.display().to_string(),
                line: i + 2,
                message: format!("expected 5 columns, got {}", parts.len()),
            });
        }
        let parse_f = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Parse {
                path: args.summary.display().to_string(),
                line: i + 2,
                message: format!("bad number {}", s),
            })
        };
        rows.push((
            parse_f(parts[0])?,
            parts[1].to_string(),
            parse_f(parts[2])?,
            parse_f(parts[3])?,
            parts[4].parse::<usize>().map_err(|_| Error::Parse {
                path: args.summary.display().to_string(),
                line: i + 2,
                message: format!("bad count {}", parts[4]),
            })?,
        ));
    }
    print_summary_table(rows.into_iter());
    Ok(0)
}

// ── selftest ─────────────────────────────────────────────────────────────

struct Check {
    name: &'static str,
    run: fn(bool) -> std::result::Result<(), String>,
}

const CHECKS: &[Check] = &[
    Check {
        name: "haar_orthonormality",
        run: check_haar_orthonormality,
    },
    Check {
        name: "tight_frame_bounds",
        run: check_tight_frame_bounds,
    },
    Check {
        name: "dif_row_structure",
        run: check_dif_row_structure,
    },
    Check {
        name: "oracle_agreement",
        run: check_oracle_agreement,
    },
    Check {
        name: "frame_scheme_pullback",
        run: check_frame_scheme_pullback,
    },
    Check {
        name: "proxy_error_bound",
        run: check_proxy_error_bound,
    },
    Check {
        name: "bpdn_feasibility",
        run: check_bpdn_feasibility,
    },
    Check {
        name: "dif_scheme_constant_image",
        run: check_dif_scheme_constant_image,
    },
    Check {
        name: "cosparse_tail_split",
        run: check_cosparse_tail_split,
    },
    Check {
        name: "sobolev_inequality",
        run: check_sobolev_inequality,
    },
];

fn cmd_selftest(args: SelftestArgs) -> Result<u8> {
    if let Some(fault) = &args.inject_fault {
        if !CHECKS.iter().any(|c| c.name == fault.as_str()) {
            return Err(usage(format!(
                "unknown fault {}; known checks: {}",
                fault,
                CHECKS
                    .iter()
                    .map(|c| c.name)
                    .collect::<Vec<_>>()
                    .join(", ")
            )));
        }
    }
    let mut failures = Vec::new();
    for check in CHECKS {
        let fault = args.inject_fault.as_deref() == Some(check.name);
        match (check.run)(fault) {
            Ok(()) => println!("ok   {}", check.name),
            Err(msg) => {
                println!("FAIL {}: {}", check.name, msg);
                failures.push(check.name);
            }
        }
    }
    if failures.is_empty() {
        println!("selftest passed ({} checks)", CHECKS.len());
        Ok(0)
    } else {
        println!("selftest failed: {}", failures.join(", "));
        Ok(3)
    }
}

fn fail(msg: String) -> std::result::Result<(), String> {
    Err(msg)
}

fn check_haar_orthonormality(fault: bool) -> std::result::Result<(), String> {
    let mut h = bivariate_haar(4).map_err(|e| e.to_string())?.matrix;
    if fault {
        let v = h.get(0, 0);
        h.set(0, 0, v + 0.5);
    }
    let gram = h.tr_mul(&h).map_err(|e| e.to_string())?;
    for i in 0..gram.rows {
        for j in 0..gram.cols {
            let want = if i == j { 1.0 } else { 0.0 };
            if (gram.get(i, j) - want).abs() > 1e-10 {
                return fail(format!(
                    "gram[{},{}] = {} off identity",
                    i,
                    j,
                    gram.get(i, j)
                ));
            }
        }
    }
    Ok(())
}

fn check_tight_frame_bounds(_fault: bool) -> std::result::Result<(), String> {
    let op = random_tight_frame(18, 12, 0xC0).map_err(|e| e.to_string())?;
    let gram = op.matrix.tr_mul(&op.matrix).map_err(|e| e.to_string())?;
    for i in 0..12 {
        for j in 0..12 {
            let want = if i == j { 1.0 } else { 0.0 };
            if (gram.get(i, j) - want).abs() > 1e-10 {
                return fail(format!("Ω'Ω differs from identity at ({}, {})", i, j));
            }
        }
    }
    if op.lower_frame_bound != Some(1.0) {
        return fail("tight frame should carry lower bound 1".into());
    }
    Ok(())
}

fn check_dif_row_structure(_fault: bool) -> std::result::Result<(), String> {
    let op = dif_2d(5).map_err(|e| e.to_string())?;
    if op.num_atoms() != 2 * 5 * 4 {
        return fail(format!("expected 40 rows, got {}", op.num_atoms()));
    }
    for i in 0..op.num_atoms() {
        let mut sum = 0.0;
        let mut nonzero = 0;
        for j in 0..op.signal_dim() {
            let v = op.matrix.get(i, j);
            sum += v;
            if v != 0.0 {
                nonzero += 1;
            }
        }
        if sum.abs() > 1e-12 || nonzero != 2 {
            return fail(format!(
                "row {} sums to {} with {} nonzeros",
                i, sum, nonzero
            ));
        }
    }
    Ok(())
}

fn planted(m: usize, n: usize, k: usize, seed: u64) -> (DenseMatrix, Vec<f64>, Vec<usize>) {
    let a = gaussian_matrix(m, n, true, mix(&[seed, 1])).unwrap();
    let mut alpha = vec![0.0; n];
    let mut support = Vec::new();
    let mut s = mix(&[seed, 2]);
    while support.len() < k {
        s = mix(&[s, 7]);
        let idx = (s % n as u64) as usize;
        if !support.contains(&idx) {
            support.push(idx);
        }
    }
    support.sort_unstable();
    for (slot, &idx) in support.iter().enumerate() {
        let sign = if mix(&[seed, 3, slot as u64]) % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        alpha[idx] = sign * (1.0 + (slot as f64) * 0.25);
    }
    let y = a.matvec(&alpha).unwrap();
    (a, y, support)
}

fn check_oracle_agreement(_fault: bool) -> std::result::Result<(), String> {
    for seed in [1u64, 2, 3, 4, 6] {
        let (a, y, support) = planted(15, 30, 3, mix(&[0x0AC1E, seed]));
        let oracle =
            brute_force_l0_synthesis(&y, &a, 3, 1e-9).map_err(|e| e.to_string())?;
        if oracle.support != support {
            return fail(format!("seed {}: oracle missed the planted support", seed));
        }
        let o = omp(&y, &a, 3, 1e-10).map_err(|e| e.to_string())?;
        let c = cosamp(&y, &a, 3, 200, 1e-10).map_err(|e| e.to_string())?;
        let l = l1_bpdn(&y, &a, 0.0).map_err(|e| e.to_string())?;
        for (name, est) in [
            ("omp", &o.estimate),
            ("cosamp", &c.estimate),
            ("l1_bpdn", &l.estimate),
        ] {
            let dev = rel_error(est, &oracle.estimate);
            if dev > 1e-6 {
                return fail(format!("seed {}: {} deviates {:.2e} from oracle", seed, name, dev));
            }
        }
    }
    Ok(())
}

fn frame_pipeline(seed: u64) -> std::result::Result<(AnalysisOperator, Vec<f64>, SchemeResult), String> {
    let omega = random_tight_frame(12, 10, mix(&[seed, 1])).map_err(|e| e.to_string())?;
    let sig = gen_cosparse(&omega, 9, mix(&[seed, 2])).map_err(|e| e.to_string())?;
    let a = gaussian_matrix(10, 12, true, mix(&[seed, 3])).map_err(|e| e.to_string())?;
    let y = a
        .matvec(&omega.apply(&sig.x).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let program = SynthesisProgramSpec::new(Algorithm::L1Bpdn, sig.k);
    let out = recover_frame_scheme(&y, &a, &omega, &program).map_err(|e| e.to_string())?;
    Ok((omega, sig.x, out))
}

fn check_frame_scheme_pullback(_fault: bool) -> std::result::Result<(), String> {
    let (omega, x, out) = frame_pipeline(0)?;
    let rel = rel_error(&out.x_hat, &x);
    if rel > 1e-6 {
        return fail(format!("planted recovery off by {:.2e}", rel));
    }
    let pinv = omega.pseudo_inverse().map_err(|e| e.to_string())?;
    let rebuilt = pinv
        .matvec(out.w_hat.as_ref().ok_or("missing proxy")?)
        .map_err(|e| e.to_string())?;
    if norm2(&vsub(&out.x_hat, &rebuilt)) > 1e-10 {
        return fail("x_hat is not the pseudo-inverse pullback of w_hat".into());
    }
    Ok(())
}

fn check_proxy_error_bound(_fault: bool) -> std::result::Result<(), String> {
    let omega = random_tight_frame(24, 18, 0xB0).map_err(|e| e.to_string())?;
    let sig = gen_cosparse(&omega, 17, 0xB1).map_err(|e| e.to_string())?;
    let a = gaussian_matrix(15, 24, true, 0xB2).map_err(|e| e.to_string())?;
    let w = omega.apply(&sig.x).map_err(|e| e.to_string())?;
    let y_clean = a.matvec(&w).map_err(|e| e.to_string())?;
    let model = NoiseModel::gaussian(0.01, 0xB3);
    let (y, e) = tdsamp::signals::apply_noise(&y_clean, &model).map_err(|e| e.to_string())?;
    let program =
        SynthesisProgramSpec::new(Algorithm::L1Bpdn, sig.k).with_noise_budget(norm2(&e));
    let out = recover_frame_scheme(&y, &a, &omega, &program).map_err(|e| e.to_string())?;
    let w_err = norm2(&vsub(out.w_hat.as_ref().unwrap(), &w));
    let x_err = norm2(&vsub(&out.x_hat, &sig.x));
    let bound = w_err / omega.lower_frame_bound.unwrap();
    if x_err > bound * (1.0 + 1e-10) + 1e-12 {
        return fail(format!("error {:.3e} exceeds proxy bound {:.3e}", x_err, bound));
    }
    Ok(())
}

fn check_bpdn_feasibility(_fault: bool) -> std::result::Result<(), String> {
    let (a, y_clean, _) = planted(12, 24, 2, 0x10);
    let model = NoiseModel::gaussian(0.02, 0x11);
    let (y, e) = tdsamp::signals::apply_noise(&y_clean, &model).map_err(|e| e.to_string())?;
    let eps = norm2(&e);
    let fit = l1_bpdn(&y, &a, eps).map_err(|e| e.to_string())?;
    let resid = norm2(&vsub(
        &a.matvec(&fit.estimate).map_err(|e| e.to_string())?,
        &y,
    ));
    if resid > 1.001 * eps + 1e-8 {
        return fail(format!("residual {:.3e} breaks the {:.3e} budget", resid, eps));
    }
    Ok(())
}

fn check_dif_scheme_constant_image(_fault: bool) -> std::result::Result<(), String> {
    let n_side = 4;
    let d = n_side * n_side;
    let x = vec![1.25; d];
    let omega = dif_2d(n_side).map_err(|e| e.to_string())?;
    let a = gaussian_matrix(5, omega.num_atoms(), true, 0x20).map_err(|e| e.to_string())?;
    let y1 = a
        .matvec(&omega.apply(&x).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let mut b = DenseMatrix::zeros(1, d);
    for j in 0..d {
        b.set(0, j, 1.0);
    }
    let y2 = vec![1.25 * d as f64];
    let program = SynthesisProgramSpec::new(Algorithm::Omp, 1);
    let out = recover_dif_scheme(&y1, &y2, &a, &b, n_side, &program, 0.0)
        .map_err(|e| e.to_string())?;
    for v in &out.x_hat {
        if (v - 1.25).abs() > 1e-8 {
            return fail(format!("constant image entry drifted to {}", v));
        }
    }
    Ok(())
}

fn check_cosparse_tail_split(_fault: bool) -> std::result::Result<(), String> {
    let omega = random_tight_frame(16, 10, 0x30).map_err(|e| e.to_string())?;
    let sig = gen_cosparse(&omega, 9, 0x31).map_err(|e| e.to_string())?;
    let report = cosparse_tail(&omega, &sig.x, sig.k).map_err(|e| e.to_string())?;
    if report.l2_tail > 1e-9 || report.l1_tail > 1e-9 {
        return fail(format!(
            "cosparse tails should vanish, got l2 {:.2e} l1 {:.2e}",
            report.l2_tail, report.l1_tail
        ));
    }
    if report.l2_tail > report.l1_tail {
        return fail("l2 tail exceeds l1 tail".into());
    }
    Ok(())
}

fn check_sobolev_inequality(_fault: bool) -> std::result::Result<(), String> {
    for seed in 0..5u64 {
        let g = gaussian_matrix(64, 1, false, mix(&[0x40, seed])).map_err(|e| e.to_string())?;
        let z: Vec<f64> = (0..64).map(|i| g.get(i, 0)).collect();
        let b = gaussian_matrix(4, 64, false, mix(&[0x41, seed])).map_err(|e| e.to_string())?;
        let out = sobolev_check(&b, 8, &z, 5, 0.5).map_err(|e| e.to_string())?;
        if out["holds"] != 1.0 {
            return fail(format!("inequality failed at seed {}", seed));
        }
    }
    Ok(())
}
