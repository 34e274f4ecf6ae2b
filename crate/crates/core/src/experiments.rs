//! γ-sweep experiments comparing transform-domain sampling against standard
//! signal-domain sampling: deterministic per-trial seeding, success-rate and
//! MSE aggregation, CSV export.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{norm2, vsub};
use crate::operators::random_tight_frame;
use crate::par::map_indexed;
use crate::rng::mix;
use crate::schemes::{
    recover_analysis_baseline, recover_dif_scheme, recover_frame_scheme, SchemeKind,
};
use crate::sensing::gaussian_matrix;
use crate::signals::{apply_noise, gen_cosparse, gen_piecewise_image, NoiseKind, NoiseModel};
use crate::solvers::{SynthesisProgramSpec, Timer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentFamily {
    Frame,
    Dif2d,
}

/// How many of the m measurements go to the direct block B in dif sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum M2Rule {
    Fixed(usize),
    Fraction(f64),
}

impl M2Rule {
    fn split(self, m: usize) -> usize {
        match self {
            M2Rule::Fixed(m2) => m2,
            M2Rule::Fraction(f) => (m as f64 * f).ceil() as usize,
        }
    }
}

fn default_success_threshold() -> f64 {
    1e-3
}

fn default_trials() -> usize {
    50
}

fn default_program() -> SynthesisProgramSpec {
    SynthesisProgramSpec::new(crate::solvers::Algorithm::L1Bpdn, 1)
}

/// One γ-sweep: which family, problem sizes, grid, trial count, noise, and
/// the synthesis program driving the transform-domain scheme.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub family: ExperimentFamily,
    /// Signal dimension (N² for dif2d).
    pub d: usize,
    /// Transform rows: frame atoms, or 2N(N−1) for dif2d.
    pub n: usize,
    /// Cosparsity of generated signals (frame family only).
    #[serde(default)]
    pub cosparsity: usize,
    pub gamma_grid: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "NoiseModel::none")]
    pub noise: NoiseModel,
    /// Solver template; its `k` is replaced per trial by the generated
    /// signal's sparsity unless `proxy_k` overrides it.
    #[serde(default = "default_program")]
    pub program: SynthesisProgramSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proxy_k: Option<usize>,
    #[serde(default = "default_success_threshold")]
    pub success_threshold: f64,
    /// Defaults to fixed(2) without noise, fraction(0.1) with.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m2_rule: Option<M2Rule>,
    /// Connected components per generated image (dif2d only), default 4.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_components: Option<usize>,
    #[serde(default)]
    pub master_seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gamma_grid.is_empty() {
            return Err(Error::InvalidArgument("gamma grid is empty".into()));
        }
        for &g in &self.gamma_grid {
            if !(g > 0.0 && g <= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "gamma must lie in (0, 1], got {}",
                    g
                )));
            }
        }
        if self.trials < 1 {
            return Err(Error::InvalidArgument("trials must be >= 1".into()));
        }
        if !(self.success_threshold > 0.0) {
            return Err(Error::InvalidArgument(
                "success threshold must be > 0".into(),
            ));
        }
        self.program.validate()?;
        match self.family {
            ExperimentFamily::Frame => {
                if self.cosparsity >= self.n {
                    return Err(Error::InvalidArgument(format!(
                        "cosparsity {} must be below the {} transform rows",
                        self.cosparsity, self.n
                    )));
                }
                if self.n < self.d {
                    return Err(Error::InvalidArgument(format!(
                        "frame needs at least as many rows as the signal dimension, got {}x{}",
                        self.n, self.d
                    )));
                }
            }
            ExperimentFamily::Dif2d => {
                let n_side = self.image_side()?;
                let atoms = 2 * n_side * (n_side - 1);
                if self.n != atoms {
                    return Err(Error::InvalidArgument(format!(
                        "difference transform on {}x{} images has {} rows, config says {}",
                        n_side, n_side, atoms, self.n
                    )));
                }
            }
        }
        Ok(())
    }

    /// N for dif2d configs, where d = N².
    pub fn image_side(&self) -> Result<usize> {
        let n_side = (self.d as f64).sqrt().round() as usize;
        if n_side < 2 || n_side * n_side != self.d {
            return Err(Error::InvalidArgument(format!(
                "dif2d signal dimension {} is not a square of a side >= 2",
                self.d
            )));
        }
        Ok(n_side)
    }

    fn resolved_m2_rule(&self) -> M2Rule {
        self.m2_rule.unwrap_or(match self.noise.kind {
            NoiseKind::None => M2Rule::Fixed(2),
            _ => M2Rule::Fraction(0.1),
        })
    }

    /// Measurement count at γ; zero-measurement grid points are skipped.
    fn measurements(&self, gamma: f64) -> usize {
        (self.d as f64 * gamma).ceil() as usize
    }
}

/// One (γ, trial, scheme) outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub gamma: f64,
    pub trial_index: usize,
    pub scheme: SchemeKind,
    /// ‖x̂ − x‖₂ / ‖x‖₂.
    pub rel_error: f64,
    /// ‖x̂ − x‖₂.
    pub error_l2: f64,
    pub success: bool,
    pub seed: u64,
    /// Not serialized: reruns of the same config must produce identical
    /// serialized results.
    #[serde(skip, default)]
    pub wall_time: Duration,
}

/// Aggregates for one grid point, both schemes side by side.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GammaSummary {
    pub gamma: f64,
    pub rate_new_scheme: f64,
    pub rate_baseline: f64,
    pub mse_new_scheme: f64,
    pub mse_baseline: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: ExperimentConfig,
    pub per_gamma: Vec<GammaSummary>,
    pub records: Vec<TrialRecord>,
}

/// Per-trial seeds: one stream for the shared instance, one per scheme.
/// Everything hangs off (master, γ index, trial index, role), so results
/// never depend on execution order.
fn trial_seed(master: u64, gamma_index: usize, trial_index: usize, role: u64) -> u64 {
    mix(&[master, gamma_index as u64, trial_index as u64, role])
}

fn make_record(
    config: &ExperimentConfig,
    gamma: f64,
    trial_index: usize,
    scheme: SchemeKind,
    x_hat: &[f64],
    x: &[f64],
    seed: u64,
    wall_time: Duration,
) -> TrialRecord {
    let error_l2 = norm2(&vsub(x_hat, x));
    let rel_error = error_l2 / norm2(x).max(f64::MIN_POSITIVE);
    TrialRecord {
        gamma,
        trial_index,
        scheme,
        rel_error,
        error_l2,
        success: rel_error <= config.success_threshold,
        seed,
        wall_time,
    }
}

/// The program actually run in one trial: the signal's own sparsity unless
/// overridden, plus the oracle noise budget when noise is present.
fn trial_program(
    config: &ExperimentConfig,
    signal_k: usize,
    noise_norm: f64,
) -> SynthesisProgramSpec {
    let mut program = config.program.clone();
    program.k = config.proxy_k.unwrap_or(signal_k).max(1);
    if noise_norm > 0.0 {
        program = program.with_noise_budget(noise_norm);
    }
    program
}

fn baseline_trial(
    config: &ExperimentConfig,
    gamma: f64,
    gamma_index: usize,
    trial_index: usize,
    m: usize,
    omega: &crate::operators::AnalysisOperator,
    x: &[f64],
) -> Result<TrialRecord> {
    let seed = trial_seed(config.master_seed, gamma_index, trial_index, 2);
    let m_mat = gaussian_matrix(m, config.d, true, mix(&[seed, 1]))?;
    let y_clean = m_mat.matvec(x)?;
    let model = NoiseModel {
        seed: mix(&[seed, 2]),
        ..config.noise
    };
    let (y, e) = apply_noise(&y_clean, &model)?;
    let timer = Timer::start();
    let out = recover_analysis_baseline(&y, &m_mat, omega, norm2(&e))?;
    Ok(make_record(
        config,
        gamma,
        trial_index,
        SchemeKind::AnalysisBaseline,
        &out.x_hat,
        x,
        seed,
        timer.elapsed(),
    ))
}

fn frame_trial(
    config: &ExperimentConfig,
    gamma_index: usize,
    trial_index: usize,
    m: usize,
) -> Result<[TrialRecord; 2]> {
    let gamma = config.gamma_grid[gamma_index];
    let instance_seed = trial_seed(config.master_seed, gamma_index, trial_index, 0);
    let omega = random_tight_frame(config.n, config.d, mix(&[instance_seed, 1]))?;
    let sig = gen_cosparse(&omega, config.cosparsity, mix(&[instance_seed, 2]))?;

    let new_seed = trial_seed(config.master_seed, gamma_index, trial_index, 1);
    let a = gaussian_matrix(m, config.n, true, mix(&[new_seed, 1]))?;
    let y_clean = a.matvec(&omega.apply(&sig.x)?)?;
    let model = NoiseModel {
        seed: mix(&[new_seed, 2]),
        ..config.noise
    };
    let (y, e) = apply_noise(&y_clean, &model)?;
    let program = trial_program(config, sig.k, norm2(&e));
    let timer = Timer::start();
    let out = recover_frame_scheme(&y, &a, &omega, &program)?;
    let new_record = make_record(
        config,
        gamma,
        trial_index,
        SchemeKind::FrameScheme,
        &out.x_hat,
        &sig.x,
        new_seed,
        timer.elapsed(),
    );

    let base = baseline_trial(config, gamma, gamma_index, trial_index, m, &omega, &sig.x)?;
    Ok([new_record, base])
}

fn dif_trial(
    config: &ExperimentConfig,
    gamma_index: usize,
    trial_index: usize,
    m: usize,
) -> Result<[TrialRecord; 2]> {
    let gamma = config.gamma_grid[gamma_index];
    let n_side = config.image_side()?;
    let instance_seed = trial_seed(config.master_seed, gamma_index, trial_index, 0);
    let sig = gen_piecewise_image(
        n_side,
        config.num_components.unwrap_or(4),
        mix(&[instance_seed, 2]),
    )?;
    let omega = crate::operators::dif_2d(n_side)?;

    let new_seed = trial_seed(config.master_seed, gamma_index, trial_index, 1);
    let m2 = config.resolved_m2_rule().split(m);
    let new_record = if m <= m2 {
        // not enough measurements to split: the scheme cannot run, count a
        // total miss rather than aborting the sweep
        TrialRecord {
            gamma,
            trial_index,
            scheme: SchemeKind::DifScheme,
            rel_error: 1.0,
            error_l2: norm2(&sig.x),
            success: false,
            seed: new_seed,
            wall_time: Duration::ZERO,
        }
    } else {
        let m1 = m - m2;
        let a = gaussian_matrix(m1, config.n, true, mix(&[new_seed, 1]))?;
        let b = gaussian_matrix(m2, config.d, true, mix(&[new_seed, 2]))?;
        let y1_clean = a.matvec(&omega.apply(&sig.x)?)?;
        let y2_clean = b.matvec(&sig.x)?;
        let model1 = NoiseModel {
            seed: mix(&[new_seed, 3]),
            ..config.noise
        };
        let model2 = NoiseModel {
            seed: mix(&[new_seed, 4]),
            ..config.noise
        };
        let (y1, e1) = apply_noise(&y1_clean, &model1)?;
        let (y2, e2) = apply_noise(&y2_clean, &model2)?;
        let program = trial_program(config, sig.k, norm2(&e1));
        let timer = Timer::start();
        let out = recover_dif_scheme(&y1, &y2, &a, &b, n_side, &program, norm2(&e2))?;
        make_record(
            config,
            gamma,
            trial_index,
            SchemeKind::DifScheme,
            &out.x_hat,
            &sig.x,
            new_seed,
            timer.elapsed(),
        )
    };

    let base = baseline_trial(config, gamma, gamma_index, trial_index, m, &omega, &sig.x)?;
    Ok([new_record, base])
}

fn run_sweep(
    config: &ExperimentConfig,
    trial: impl Fn(&ExperimentConfig, usize, usize, usize) -> Result<[TrialRecord; 2]> + Sync + Send,
) -> Result<SweepResult> {
    config.validate()?;
    let mut jobs: Vec<(usize, usize, usize)> = Vec::new();
    for (gi, &gamma) in config.gamma_grid.iter().enumerate() {
        let m = config.measurements(gamma);
        if m < 1 {
            eprintln!(
                "warning: gamma {} yields no measurements for d = {}, skipping",
                gamma, config.d
            );
            continue;
        }
        for ti in 0..config.trials {
            jobs.push((gi, ti, m));
        }
    }
    let outcomes: Vec<Result<[TrialRecord; 2]>> = map_indexed(jobs.len(), |j| {
        let (gi, ti, m) = jobs[j];
        trial(config, gi, ti, m)
    });
    let mut records = Vec::with_capacity(2 * jobs.len());
    for outcome in outcomes {
        records.extend(outcome?);
    }
    summarize(&records, config)
}

/// Frame-family sweep: per (γ, trial) draw a tight frame and a cosparse
/// signal, sample both through the transform-domain map and the plain
/// signal-domain map, recover with both schemes.
pub fn run_frame_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    if config.family != ExperimentFamily::Frame {
        return Err(Error::InvalidArgument(
            "frame sweep needs a frame-family config".into(),
        ));
    }
    run_sweep(config, frame_trial)
}

/// Image-family sweep: piecewise-constant images under the 2-D difference
/// transform, with m split between transform samples and direct rows.
pub fn run_dif_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    if config.family != ExperimentFamily::Dif2d {
        return Err(Error::InvalidArgument(
            "dif sweep needs a dif2d-family config".into(),
        ));
    }
    run_sweep(config, dif_trial)
}

/// Dispatches on the config's family.
pub fn run_experiment(config: &ExperimentConfig) -> Result<SweepResult> {
    match config.family {
        ExperimentFamily::Frame => run_frame_sweep(config),
        ExperimentFamily::Dif2d => run_dif_sweep(config),
    }
}

fn group_stats(records: &[&TrialRecord]) -> (f64, f64) {
    if records.is_empty() {
        return (0.0, 0.0);
    }
    let n = records.len() as f64;
    let rate = records.iter().filter(|r| r.success).count() as f64 / n;
    let mse = records.iter().map(|r| r.error_l2 * r.error_l2).sum::<f64>() / n;
    (rate, mse)
}

/// Groups records by (γ, scheme) in grid order; rate = mean success, mse =
/// mean squared ℓ2 error. Grid points without records are dropped with a
/// warning.
pub fn summarize(records: &[TrialRecord], config: &ExperimentConfig) -> Result<SweepResult> {
    if records.is_empty() {
        return Err(Error::InvalidArgument(
            "no trial records to summarize".into(),
        ));
    }
    let mut per_gamma = Vec::new();
    for &gamma in &config.gamma_grid {
        let at_gamma: Vec<&TrialRecord> =
            records.iter().filter(|r| r.gamma == gamma).collect();
        if at_gamma.is_empty() {
            eprintln!("warning: no records at gamma {}, omitted", gamma);
            continue;
        }
        let new_scheme: Vec<&TrialRecord> = at_gamma
            .iter()
            .copied()
            .filter(|r| r.scheme != SchemeKind::AnalysisBaseline)
            .collect();
        let baseline: Vec<&TrialRecord> = at_gamma
            .iter()
            .copied()
            .filter(|r| r.scheme == SchemeKind::AnalysisBaseline)
            .collect();
        if new_scheme.is_empty() || baseline.is_empty() {
            eprintln!(
                "warning: gamma {} is missing one scheme's records",
                gamma
            );
        }
        let (rate_new_scheme, mse_new_scheme) = group_stats(&new_scheme);
        let (rate_baseline, mse_baseline) = group_stats(&baseline);
        per_gamma.push(GammaSummary {
            gamma,
            rate_new_scheme,
            rate_baseline,
            mse_new_scheme,
            mse_baseline,
            trials: new_scheme.len().max(baseline.len()),
        });
    }
    Ok(SweepResult {
        config: config.clone(),
        per_gamma,
        records: records.to_vec(),
    })
}

fn sibling_with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    name.push('.');
    name.push_str(suffix);
    path.with_file_name(name)
}

/// Writes `<path>.trials.csv` (one row per record) and `<path>.summary.csv`
/// (one row per γ×scheme). Floats go through `Display`, so identical sweeps
/// produce identical bytes.
pub fn export_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let new_scheme = match result.config.family {
        ExperimentFamily::Frame => SchemeKind::FrameScheme,
        ExperimentFamily::Dif2d => SchemeKind::DifScheme,
    };

    let mut trials = String::from("gamma,trial_index,scheme,rel_error,error_l2,success,seed\n");
    for r in &result.records {
        let _ = writeln!(
            trials,
            "{},{},{},{},{},{},{}",
            r.gamma, r.trial_index, r.scheme, r.rel_error, r.error_l2, r.success, r.seed
        );
    }
    let trials_path = sibling_with_suffix(path, "trials.csv");
    fs::write(&trials_path, trials)
        .map_err(|e| Error::io(trials_path.display().to_string(), e))?;

    let mut summary = String::from("gamma,scheme,rate,mse,trials\n");
    for g in &result.per_gamma {
        let _ = writeln!(
            summary,
            "{},{},{},{},{}",
            g.gamma, new_scheme, g.rate_new_scheme, g.mse_new_scheme, g.trials
        );
        let _ = writeln!(
            summary,
            "{},{},{},{},{}",
            g.gamma,
            SchemeKind::AnalysisBaseline,
            g.rate_baseline,
            g.mse_baseline,
            g.trials
        );
    }
    let summary_path = sibling_with_suffix(path, "summary.csv");
    fs::write(&summary_path, summary)
        .map_err(|e| Error::io(summary_path.display().to_string(), e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::Algorithm;

    fn tiny_frame_config() -> ExperimentConfig {
        ExperimentConfig {
            family: ExperimentFamily::Frame,
            d: 12,
            n: 15,
            cosparsity: 11,
            gamma_grid: vec![0.5, 1.0],
            trials: 3,
            noise: NoiseModel::none(),
            program: default_program(),
            proxy_k: None,
            success_threshold: 1e-3,
            m2_rule: None,
            num_components: None,
            master_seed: 7,
        }
    }

    fn tiny_dif_config() -> ExperimentConfig {
        ExperimentConfig {
            family: ExperimentFamily::Dif2d,
            d: 36,
            n: 60,
            cosparsity: 0,
            gamma_grid: vec![1.0],
            trials: 2,
            noise: NoiseModel::none(),
            program: default_program(),
            proxy_k: None,
            success_threshold: 1e-3,
            m2_rule: None,
            num_components: Some(2),
            master_seed: 9,
        }
    }

    #[test]
    fn config_validation_rejects_inconsistent_setups() {
        let mut c = tiny_frame_config();
        c.gamma_grid = vec![0.0];
        assert!(c.validate().is_err());
        c = tiny_frame_config();
        c.gamma_grid = vec![1.5];
        assert!(c.validate().is_err());
        c = tiny_frame_config();
        c.trials = 0;
        assert!(c.validate().is_err());
        c = tiny_frame_config();
        c.success_threshold = 0.0;
        assert!(c.validate().is_err());
        c = tiny_frame_config();
        c.cosparsity = 15;
        assert!(c.validate().is_err());
        c = tiny_dif_config();
        c.d = 35;
        assert!(c.validate().is_err());
        c = tiny_dif_config();
        c.n = 59;
        assert!(c.validate().is_err());
    }

    #[test]
    fn frame_sweep_covers_the_grid_and_nails_gamma_one_baseline() {
        let config = tiny_frame_config();
        let result = run_frame_sweep(&config).unwrap();
        assert_eq!(result.records.len(), 2 * 2 * 3);
        assert_eq!(result.per_gamma.len(), 2);
        for g in &result.per_gamma {
            assert!((0.0..=1.0).contains(&g.rate_new_scheme));
            assert!((0.0..=1.0).contains(&g.rate_baseline));
            assert!(g.mse_new_scheme >= 0.0 && g.mse_baseline >= 0.0);
            assert_eq!(g.trials, 3);
        }
        let at_one = result.per_gamma.iter().find(|g| g.gamma == 1.0).unwrap();
        assert_eq!(at_one.rate_baseline, 1.0);
        for r in &result.records {
            assert_eq!(r.success, r.rel_error <= config.success_threshold);
            assert!(r.error_l2.is_finite());
        }
    }

    #[test]
    fn frame_sweep_is_reproducible_byte_for_byte() {
        let config = tiny_frame_config();
        let a = run_frame_sweep(&config).unwrap();
        let b = run_frame_sweep(&config).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn dif_sweep_records_split_shortfalls_as_misses() {
        let mut config = tiny_dif_config();
        config.d = 16;
        config.n = 24;
        config.gamma_grid = vec![0.1];
        let result = run_dif_sweep(&config).unwrap();
        let new: Vec<&TrialRecord> = result
            .records
            .iter()
            .filter(|r| r.scheme == SchemeKind::DifScheme)
            .collect();
        assert_eq!(new.len(), 2);
        for r in new {
            assert_eq!(r.rel_error, 1.0);
            assert!(!r.success);
        }
        let summary = &result.per_gamma[0];
        assert_eq!(summary.rate_new_scheme, 0.0);
        assert!(summary.rate_baseline <= 1.0);
    }

    #[test]
    fn dif_sweep_recovers_images_at_full_sampling() {
        let config = tiny_dif_config();
        let result = run_dif_sweep(&config).unwrap();
        let summary = &result.per_gamma[0];
        assert_eq!(summary.rate_baseline, 1.0);
        assert!(summary.rate_new_scheme >= 0.5);
        for r in &result.records {
            assert!(r.rel_error.is_finite());
        }
    }

    #[test]
    fn summarize_reproduces_the_textbook_arithmetic() {
        let config = tiny_frame_config();
        let rec = |scheme, rel: f64, err: f64| TrialRecord {
            gamma: 0.5,
            trial_index: 0,
            scheme,
            rel_error: rel,
            error_l2: err,
            success: rel <= config.success_threshold,
            seed: 1,
            wall_time: Duration::ZERO,
        };
        let records = vec![
            rec(SchemeKind::FrameScheme, 0.0, 0.0),
            rec(SchemeKind::FrameScheme, 0.2, 0.2),
            rec(SchemeKind::AnalysisBaseline, 0.0, 0.0),
            rec(SchemeKind::AnalysisBaseline, 0.0, 0.0),
        ];
        let result = summarize(&records, &config).unwrap();
        assert_eq!(result.per_gamma.len(), 1);
        let g = &result.per_gamma[0];
        assert_eq!(g.rate_new_scheme, 0.5);
        assert!((g.mse_new_scheme - 0.02).abs() <= 1e-15);
        assert_eq!(g.rate_baseline, 1.0);
        assert_eq!(g.mse_baseline, 0.0);

        assert!(summarize(&[], &config).is_err());
    }

    #[test]
    fn export_csv_round_trips_the_summary() {
        let dir = tempfile::tempdir().unwrap();
        let base = dir.path().join("sweep");
        let config = tiny_frame_config();
        let result = run_frame_sweep(&config).unwrap();
        export_csv(&result, &base).unwrap();

        let summary = fs::read_to_string(dir.path().join("sweep.summary.csv")).unwrap();
        let mut lines = summary.lines();
        assert_eq!(lines.next().unwrap(), "gamma,scheme,rate,mse,trials");
        let mut parsed = 0;
        for line in lines {
            let parts: Vec<&str> = line.split(',').collect();
            assert_eq!(parts.len(), 5);
            let gamma: f64 = parts[0].parse().unwrap();
            let g = result
                .per_gamma
                .iter()
                .find(|g| g.gamma == gamma)
                .unwrap();
            let (rate, mse) = if parts[1] == "analysis_baseline" {
                (g.rate_baseline, g.mse_baseline)
            } else {
                assert_eq!(parts[1], "frame_scheme");
                (g.rate_new_scheme, g.mse_new_scheme)
            };
            assert_eq!(parts[2].parse::<f64>().unwrap(), rate);
            assert_eq!(parts[3].parse::<f64>().unwrap(), mse);
            assert_eq!(parts[4].parse::<usize>().unwrap(), g.trials);
            parsed += 1;
        }
        assert_eq!(parsed, 2 * result.per_gamma.len());

        let trials = fs::read_to_string(dir.path().join("sweep.trials.csv")).unwrap();
        assert_eq!(trials.lines().count(), 1 + result.records.len());
        assert!(trials
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .nth(3)
            .unwrap()
            .parse::<f64>()
            .is_ok());

        let empty = SweepResult {
            config: config.clone(),
            per_gamma: vec![],
            records: vec![],
        };
        export_csv(&empty, &dir.path().join("empty")).unwrap();
        let t = fs::read_to_string(dir.path().join("empty.trials.csv")).unwrap();
        let s = fs::read_to_string(dir.path().join("empty.summary.csv")).unwrap();
        assert_eq!(t.lines().count(), 1);
        assert_eq!(s.lines().count(), 1);
    }

    #[test]
    fn config_json_round_trips_with_defaults() {
        let json = r#"{
            "family": "frame",
            "d": 12,
            "n": 15,
            "cosparsity": 11,
            "gamma_grid": [0.5, 1.0],
            "master_seed": 3
        }"#;
        let config: ExperimentConfig = serde_json::from_str(json).unwrap();
        assert_eq!(config.trials, 50);
        assert_eq!(config.success_threshold, 1e-3);
        assert_eq!(config.program.algorithm, Algorithm::L1Bpdn);
        assert!(config.validate().is_ok());

        let m2: M2Rule = serde_json::from_str(r#"{"fixed": 2}"#).unwrap();
        assert_eq!(m2, M2Rule::Fixed(2));
        let m2: M2Rule = serde_json::from_str(r#"{"fraction": 0.1}"#).unwrap();
        assert_eq!(m2, M2Rule::Fraction(0.1));
        assert_eq!(M2Rule::Fixed(2).split(20), 2);
        assert_eq!(M2Rule::Fraction(0.1).split(25), 3);

        let back = serde_json::to_string(&config).unwrap();
        let again: ExperimentConfig = serde_json::from_str(&back).unwrap();
        assert_eq!(again.gamma_grid, config.gamma_grid);
    }
}
