//! Recovery pipelines: estimate transform coefficients from transform-domain
//! samples with a black-box synthesis solver, then map the proxy back to the
//! signal domain. Also the bound diagnostics (cosparse tail energies, the
//! discrete Sobolev inequality check).

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{norm1, norm2, DenseMatrix};
use crate::operators::{dif_2d, AnalysisOperator};
use crate::solvers::{
    analysis_l1, constrained_transform_fit, run_program, top_k_indices, FitNorm, FitOutput,
    SynthesisProgramSpec,
};

/// Which pipeline produced a [`SchemeResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    FrameScheme,
    DifScheme,
    GeneralScheme,
    AnalysisBaseline,
}

impl SchemeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SchemeKind::FrameScheme => "frame_scheme",
            SchemeKind::DifScheme => "dif_scheme",
            SchemeKind::GeneralScheme => "general_scheme",
            SchemeKind::AnalysisBaseline => "analysis_baseline",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Output of one recovery pipeline run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemeResult {
    pub x_hat: Vec<f64>,
    /// Transform-domain proxy, absent for the direct analysis baseline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_hat: Option<Vec<f64>>,
    pub scheme: SchemeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub program: Option<SynthesisProgramSpec>,
    /// Named solver diagnostics: residuals, objectives, iteration counts,
    /// convergence flags as 0/1.
    pub diagnostics: BTreeMap<String, f64>,
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn fit_diagnostics(diagnostics: &mut BTreeMap<String, f64>, fit: &FitOutput) {
    diagnostics.insert("fit_objective".into(), fit.objective);
    diagnostics.insert("fit_iterations".into(), fit.iterations as f64);
    diagnostics.insert("fit_converged".into(), flag(fit.converged));
}

/// Sample-the-coefficients pipeline for frame operators: recover `w_hat`
/// from `y = A·Ωx` with the chosen solver, then pull it back through the
/// pseudo-inverse, `x_hat = Ω†·w_hat`.
pub fn recover_frame_scheme(
    y: &[f64],
    a: &DenseMatrix,
    omega: &AnalysisOperator,
    program: &SynthesisProgramSpec,
) -> Result<SchemeResult> {
    if omega.lower_frame_bound.unwrap_or(0.0) <= 0.0 {
        return Err(Error::InvalidArgument(
            "frame scheme requires lower frame bound > 0".into(),
        ));
    }
    if a.cols != omega.num_atoms() {
        return Err(Error::DimensionMismatch(format!(
            "sensing matrix has {} columns, transform has {} atoms",
            a.cols,
            omega.num_atoms()
        )));
    }
    let report = run_program(program, y, a)?;
    let pinv = omega.pseudo_inverse()?;
    let x_hat = pinv.matvec(&report.estimate)?;
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("proxy_residual_norm".into(), report.residual_norm);
    diagnostics.insert("proxy_iterations".into(), report.iterations as f64);
    diagnostics.insert("proxy_converged".into(), flag(report.converged));
    Ok(SchemeResult {
        x_hat,
        w_hat: Some(report.estimate),
        scheme: SchemeKind::FrameScheme,
        program: Some(program.clone()),
        diagnostics,
    })
}

/// General pipeline for non-frame operators: recover the proxy from
/// `y1 = A·Ωx`, then fit a signal whose transform tracks the proxy while the
/// direct measurements `y2 = B·x` stay within `epsilon2`.
#[allow(clippy::too_many_arguments)]
pub fn recover_general_scheme(
    y1: &[f64],
    y2: &[f64],
    a: &DenseMatrix,
    b: &DenseMatrix,
    omega: &AnalysisOperator,
    program: &SynthesisProgramSpec,
    epsilon2: f64,
    norm: FitNorm,
) -> Result<SchemeResult> {
    if b.rows == 0 {
        return Err(Error::InvalidArgument(
            "general scheme requires B rows >= 1".into(),
        ));
    }
    if a.cols != omega.num_atoms() {
        return Err(Error::DimensionMismatch(format!(
            "sensing matrix has {} columns, transform has {} atoms",
            a.cols,
            omega.num_atoms()
        )));
    }
    let report = run_program(program, y1, a)?;
    let fit = constrained_transform_fit(omega, &report.estimate, b, y2, epsilon2, norm)?;
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("proxy_residual_norm".into(), report.residual_norm);
    diagnostics.insert("proxy_iterations".into(), report.iterations as f64);
    diagnostics.insert("proxy_converged".into(), flag(report.converged));
    diagnostics.insert("epsilon2".into(), epsilon2);
    fit_diagnostics(&mut diagnostics, &fit);
    Ok(SchemeResult {
        x_hat: fit.x,
        w_hat: Some(report.estimate),
        scheme: SchemeKind::GeneralScheme,
        program: Some(program.clone()),
        diagnostics,
    })
}

/// [`recover_general_scheme`] specialized to square images under the 2-D
/// finite-difference transform with an ℓ1 fit.
pub fn recover_dif_scheme(
    y1: &[f64],
    y2: &[f64],
    a: &DenseMatrix,
    b: &DenseMatrix,
    n_side: usize,
    program: &SynthesisProgramSpec,
    epsilon2: f64,
) -> Result<SchemeResult> {
    let omega = dif_2d(n_side)?;
    let mut out =
        recover_general_scheme(y1, y2, a, b, &omega, program, epsilon2, FitNorm::L1)?;
    out.scheme = SchemeKind::DifScheme;
    Ok(out)
}

/// Standard-sampling baseline: minimize `‖Ωx‖₁` subject to `‖Mx − y‖₂ ≤ ε`
/// directly in the signal domain. No transform proxy is produced.
pub fn recover_analysis_baseline(
    y: &[f64],
    m: &DenseMatrix,
    omega: &AnalysisOperator,
    epsilon: f64,
) -> Result<SchemeResult> {
    let fit = analysis_l1(y, m, omega, epsilon)?;
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("epsilon".into(), epsilon);
    fit_diagnostics(&mut diagnostics, &fit);
    Ok(SchemeResult {
        x_hat: fit.x,
        w_hat: None,
        scheme: SchemeKind::AnalysisBaseline,
        program: None,
        diagnostics,
    })
}

/// Energy of `Ωx` outside its top-k support.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailReport {
    /// Indices of the k largest-magnitude transform coefficients, ascending.
    pub support: Vec<usize>,
    pub l2_tail: f64,
    pub l1_tail: f64,
    pub k: usize,
}

/// Splits the transform coefficients of `x` at their top-k support (ties to
/// the lower index) and measures what is left over.
pub fn cosparse_tail(omega: &AnalysisOperator, x: &[f64], k: usize) -> Result<TailReport> {
    let n = omega.num_atoms();
    if k > n {
        return Err(Error::InvalidArgument(format!(
            "top-k budget {} exceeds the {} transform rows",
            k, n
        )));
    }
    let w = omega.apply(x)?;
    let support = top_k_indices(&w, k);
    let mut keep = vec![false; n];
    for &i in &support {
        keep[i] = true;
    }
    let mut sq = 0.0;
    let mut l1_tail = 0.0;
    for (i, wi) in w.iter().enumerate() {
        if !keep[i] {
            sq += wi * wi;
            l1_tail += wi.abs();
        }
    }
    Ok(TailReport {
        support,
        l2_tail: sq.sqrt(),
        l1_tail,
        k,
    })
}

/// Constant of the discrete Sobolev inequality for bivariate Haar systems:
/// `36·(480·√5 + 168·√3)`.
pub fn sobolev_constant() -> f64 {
    36.0 * (480.0 * 5.0f64.sqrt() + 168.0 * 3.0f64.sqrt())
}

/// Evaluates both sides of the inequality
/// `‖z‖₂ ≤ (2C_H/(1−δ))·(1/√k)·log₂(d/k)·‖Ω_dif z‖₁ + (1/(1−δ))·‖Bz‖₂`
/// for a column-stacked `N×N` image `z` and direct measurement matrix `B`.
/// Returns the named terms plus `holds` as 0/1.
pub fn sobolev_check(
    b: &DenseMatrix,
    n_side: usize,
    z: &[f64],
    k: usize,
    delta_hat: f64,
) -> Result<BTreeMap<String, f64>> {
    if !n_side.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "image side must be a power of 2, got {}",
            n_side
        )));
    }
    if !(delta_hat < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "embedding defect estimate must be < 1, got {}",
            delta_hat
        )));
    }
    if k == 0 {
        return Err(Error::InvalidArgument(
            "sparsity level k must be >= 1".into(),
        ));
    }
    let d = n_side * n_side;
    if z.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "image has {} entries, expected {}",
            z.len(),
            d
        )));
    }
    if b.cols != d {
        return Err(Error::DimensionMismatch(format!(
            "direct measurement matrix has {} columns, expected {}",
            b.cols, d
        )));
    }
    let dif = dif_2d(n_side)?;
    let grad = dif.apply(z)?;
    let denom = 1.0 - delta_hat;
    let log_term = ((d as f64) / (k as f64)).log2();
    let gradient_term =
        2.0 * sobolev_constant() / denom * log_term / (k as f64).sqrt() * norm1(&grad);
    let direct_term = norm2(&b.matvec(z)?) / denom;
    let lhs = norm2(z);
    let rhs = gradient_term + direct_term;
    let mut out = BTreeMap::new();
    out.insert("lhs".into(), lhs);
    out.insert("rhs".into(), rhs);
    out.insert("holds".into(), flag(lhs <= rhs));
    out.insert("gradient_term".into(), gradient_term);
    out.insert("direct_term".into(), direct_term);
    Ok(out)
}
