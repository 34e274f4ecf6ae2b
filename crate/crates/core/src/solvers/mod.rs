//! Black-box synthesis solvers and constrained transform-domain programs.
//!
//! Every synthesis solver answers the same question: given measurements
//! `y ≈ A·alpha` and a sparsity budget `k`, produce a sparse coefficient
//! estimate. [`run_program`] dispatches on [`Algorithm`] so callers never
//! depend on which solver is behind the interface.

mod admm;
mod brute;
mod greedy;

pub use admm::{analysis_l1, constrained_transform_fit, l1_bpdn, FitNorm, FitOutput};
pub use brute::{brute_force_l0_analysis, brute_force_l0_synthesis};
pub use greedy::{cosamp, iht, omp};
pub(crate) use greedy::top_k_indices;

use crate::error::{Error, Result};
use crate::numerics::{norm2, vsub, DenseMatrix};
use serde::{Deserialize, Serialize};
use std::time::Duration;

/// Synthesis solver selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Omp,
    Cosamp,
    Iht,
    L1Bpdn,
    BruteL0,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Omp => "omp",
            Algorithm::Cosamp => "cosamp",
            Algorithm::Iht => "iht",
            Algorithm::L1Bpdn => "l1_bpdn",
            Algorithm::BruteL0 => "brute_l0",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Full description of one synthesis recovery call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisProgramSpec {
    pub algorithm: Algorithm,
    pub k: usize,
    pub max_iters: usize,
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_budget: Option<f64>,
}

impl SynthesisProgramSpec {
    /// Spec with per-algorithm default iteration caps and tolerances.
    pub fn new(algorithm: Algorithm, k: usize) -> Self {
        let (max_iters, tol) = match algorithm {
            Algorithm::Omp => (k.max(1), 1e-10),
            Algorithm::Cosamp => (200, 1e-10),
            Algorithm::Iht => (2000, 1e-10),
            Algorithm::L1Bpdn => (50_000, 1e-8),
            Algorithm::BruteL0 => (1, 1e-10),
        };
        SynthesisProgramSpec {
            algorithm,
            k,
            max_iters,
            tol,
            noise_budget: None,
        }
    }

    pub fn with_noise_budget(mut self, budget: f64) -> Self {
        self.noise_budget = Some(budget);
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 && self.algorithm != Algorithm::BruteL0 {
            return Err(Error::InvalidArgument("sparsity budget k must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        if let Some(b) = self.noise_budget {
            if !(b >= 0.0) || !b.is_finite() {
                return Err(Error::InvalidArgument("noise budget must be finite and >= 0".into()));
            }
        }
        Ok(())
    }
}

/// Outcome of a synthesis recovery call.
#[derive(Debug, Clone)]
pub struct RecoveryReport {
    /// Coefficient estimate, full length (zeros off the support).
    pub estimate: Vec<f64>,
    /// Indices of the nonzero entries, ascending.
    pub support: Vec<usize>,
    /// `‖y − A·estimate‖₂`, recomputed from the returned estimate.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time: Duration,
}

impl RecoveryReport {
    pub(crate) fn finish(
        estimate: Vec<f64>,
        y: &[f64],
        a: &DenseMatrix,
        iterations: usize,
        converged: bool,
        timer: Timer,
    ) -> Result<Self> {
        let residual_norm = norm2(&vsub(y, &a.matvec(&estimate)?));
        let support = nonzero_support(&estimate);
        Ok(RecoveryReport {
            estimate,
            support,
            residual_norm,
            iterations,
            converged,
            wall_time: timer.elapsed(),
        })
    }
}

/// Indices with magnitude above the reporting floor.
pub(crate) fn nonzero_support(v: &[f64]) -> Vec<usize> {
    v.iter()
        .enumerate()
        .filter(|(_, &x)| x.abs() > 1e-9)
        .map(|(i, _)| i)
        .collect()
}

/// Run the solver named by `spec` on measurements `y = A·alpha (+ e)`.
pub fn run_program(spec: &SynthesisProgramSpec, y: &[f64], a: &DenseMatrix) -> Result<RecoveryReport> {
    spec.validate()?;
    if y.len() != a.rows {
        return Err(Error::DimensionMismatch(format!(
            "measurement length {} does not match {} matrix rows",
            y.len(),
            a.rows
        )));
    }
    match spec.algorithm {
        Algorithm::Omp => omp(y, a, spec.k, spec.tol),
        Algorithm::Cosamp => cosamp(y, a, spec.k, spec.max_iters, spec.tol),
        Algorithm::Iht => iht(y, a, spec.k, None, spec.max_iters, spec.tol),
        Algorithm::L1Bpdn => l1_bpdn(y, a, spec.noise_budget.unwrap_or(0.0)),
        // The exhaustive oracle needs a strictly positive feasibility slack
        // to absorb floating-point residue on noiseless instances.
        Algorithm::BruteL0 => {
            let eps = spec.noise_budget.unwrap_or(0.0).max(1e-10);
            brute_force_l0_synthesis(y, a, spec.k, eps)
        }
    }
}

/// Wall-clock timer that degrades to zero where no monotonic clock exists.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Timer {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Timer {
    pub(crate) fn start() -> Self {
        Timer {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    pub(crate) fn elapsed(self) -> Duration {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.start.elapsed()
        }
        #[cfg(target_arch = "wasm32")]
        {
            Duration::ZERO
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rel_error;
    use crate::rng::{mix, rng_from_seed};
    use crate::sensing::gaussian_matrix;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    pub(crate) fn planted_instance(
        m: usize,
        n: usize,
        k: usize,
        seed: u64,
    ) -> (DenseMatrix, Vec<f64>, Vec<f64>, Vec<usize>) {
        let a = gaussian_matrix(m, n, true, mix(&[seed, 1])).unwrap();
        let mut rng = rng_from_seed(mix(&[seed, 2]));
        let support = rand::seq::index::sample(&mut rng, n, k).into_vec();
        let mut support: Vec<usize> = support;
        support.sort_unstable();
        let mut alpha = vec![0.0; n];
        for &j in &support {
            let mag: f64 = rng.gen_range(0.5..2.0);
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            alpha[j] = sign * mag;
        }
        let y = a.matvec(&alpha).unwrap();
        (a, y, alpha, support)
    }

    pub(crate) fn gaussian_vec(len: usize, seed: u64) -> Vec<f64> {
        let mut rng = rng_from_seed(seed);
        (0..len).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn spec_serializes_with_algorithm_names() {
        let spec = SynthesisProgramSpec::new(Algorithm::L1Bpdn, 12);
        let js = serde_json::to_string(&spec).unwrap();
        assert!(js.contains("\"algorithm\":\"l1_bpdn\""));
        assert!(js.contains("\"k\":12"));
        assert!(!js.contains("noise_budget"));
        let back: SynthesisProgramSpec = serde_json::from_str(&js).unwrap();
        assert_eq!(back, spec);
        let with_budget = spec.with_noise_budget(0.5);
        let js = serde_json::to_string(&with_budget).unwrap();
        let back: SynthesisProgramSpec = serde_json::from_str(&js).unwrap();
        assert_eq!(back.noise_budget, Some(0.5));
    }

    #[test]
    fn dispatch_rejects_bad_specs() {
        let a = DenseMatrix::identity(4);
        let y = vec![1.0, 0.0, 0.0, 0.0];
        let bad_k = SynthesisProgramSpec::new(Algorithm::Omp, 0);
        assert!(run_program(&bad_k, &y, &a).is_err());
        let spec = SynthesisProgramSpec::new(Algorithm::Omp, 1);
        assert!(run_program(&spec, &y[..3], &a).is_err());
        let bad_tol = spec.clone().with_tol(0.0);
        assert!(run_program(&bad_tol, &y, &a).is_err());
    }

    #[test]
    fn all_algorithms_recover_a_planted_instance_through_dispatch() {
        let (a, y, alpha, support) = planted_instance(16, 24, 3, 5);
        for algorithm in [
            Algorithm::Omp,
            Algorithm::Cosamp,
            Algorithm::Iht,
            Algorithm::L1Bpdn,
            Algorithm::BruteL0,
        ] {
            let spec = SynthesisProgramSpec::new(algorithm, 3);
            let report = run_program(&spec, &y, &a).unwrap();
            assert!(
                rel_error(&report.estimate, &alpha) <= 1e-5,
                "{algorithm} missed the planted solution"
            );
            assert_eq!(report.support, support, "{algorithm} support");
            assert!(report.converged, "{algorithm} convergence flag");
            let recheck = norm2(&vsub(&y, &a.matvec(&report.estimate).unwrap()));
            assert!((recheck - report.residual_norm).abs() <= 1e-10);
        }
    }

    #[test]
    fn greedy_estimates_respect_the_sparsity_budget() {
        let (a, y, _, _) = planted_instance(20, 40, 4, 0xB07);
        for algorithm in [Algorithm::Omp, Algorithm::Cosamp, Algorithm::Iht] {
            let spec = SynthesisProgramSpec::new(algorithm, 4);
            let report = run_program(&spec, &y, &a).unwrap();
            assert!(report.support.len() <= 4, "{algorithm} support too large");
            let nnz = report.estimate.iter().filter(|v| **v != 0.0).count();
            assert!(nnz <= 4, "{algorithm} estimate not k-sparse");
        }
    }
}
