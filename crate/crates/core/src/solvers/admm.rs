//! Operator-splitting solver behind the three convex programs: basis-pursuit
//! denoising, analysis-form l1 minimization, and the constrained
//! transform-domain fit.
//!
//! All three instantiate one template,
//!
//! ```text
//!     minimize  f(G1·x)   subject to   ‖G2·x − y2‖2 ≤ eps
//! ```
//!
//! solved by ADMM on the splitting z = [G1; G2]·x with a fixed unit penalty.
//! `f` is an l1 or l2 distance, so every prox step is closed-form, and the
//! x-update reuses one Cholesky factor of G1ᵀG1 + G2ᵀG2 across iterations.

use super::{nonzero_support, RecoveryReport, Timer};
use crate::error::{Error, Result};
use crate::numerics::{
    axpy, cholesky, least_squares, norm1, norm2, vsub, DenseMatrix,
};
use crate::operators::AnalysisOperator;
use serde::{Deserialize, Serialize};

const PENALTY: f64 = 1.0;
const OVER_RELAX: f64 = 1.8;
const CHECK_EVERY: usize = 10;
const DEFAULT_MAX_ITERS: usize = 50_000;
const DEFAULT_TOL: f64 = 1e-8;

/// Norm used by the transform-domain fit objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitNorm {
    L1,
    L2,
}

impl FitNorm {
    pub fn from_p(p: u8) -> Result<FitNorm> {
        match p {
            1 => Ok(FitNorm::L1),
            2 => Ok(FitNorm::L2),
            _ => Err(Error::InvalidArgument(format!("fit norm must be 1 or 2, got {p}"))),
        }
    }

    pub fn as_p(self) -> u8 {
        match self {
            FitNorm::L1 => 1,
            FitNorm::L2 => 2,
        }
    }
}

/// Outcome of a constrained signal-domain program.
#[derive(Debug, Clone)]
pub struct FitOutput {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

enum Objective<'a> {
    L1,
    L1Shift(&'a [f64]),
    L2Shift(&'a [f64]),
}

struct SplitProblem<'a> {
    /// None means G1 is the identity on the x space.
    g1: Option<&'a DenseMatrix>,
    g2: &'a DenseMatrix,
    y2: &'a [f64],
    epsilon: f64,
    objective: Objective<'a>,
    max_iters: usize,
    tol: f64,
}

struct SplitSolution {
    x: Vec<f64>,
    /// Final transform-block iterate; exactly sparse for l1 objectives.
    z1: Vec<f64>,
    iterations: usize,
    converged: bool,
}

fn soft(t: f64, lam: f64) -> f64 {
    t.signum() * (t.abs() - lam).max(0.0)
}

fn apply_prox(objective: &Objective, v: &mut [f64], lam: f64) {
    match objective {
        Objective::L1 => {
            for t in v.iter_mut() {
                *t = soft(*t, lam);
            }
        }
        Objective::L1Shift(w) => {
            for (t, wi) in v.iter_mut().zip(w.iter()) {
                *t = wi + soft(*t - wi, lam);
            }
        }
        Objective::L2Shift(w) => {
            let mut nn = 0.0;
            for (t, wi) in v.iter().zip(w.iter()) {
                nn += (t - wi) * (t - wi);
            }
            nn = nn.sqrt();
            let scale = if nn > lam { 1.0 - lam / nn } else { 0.0 };
            for (t, wi) in v.iter_mut().zip(w.iter()) {
                *t = wi + scale * (*t - wi);
            }
        }
    }
}

fn objective_value(objective: &Objective, gx1: &[f64]) -> f64 {
    match objective {
        Objective::L1 => norm1(gx1),
        Objective::L1Shift(w) => gx1.iter().zip(w.iter()).map(|(a, b)| (a - b).abs()).sum(),
        Objective::L2Shift(w) => gx1
            .iter()
            .zip(w.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt(),
    }
}

/// Project v onto the l2 ball of given radius around center, in place.
fn project_ball(v: &mut [f64], center: &[f64], radius: f64) {
    let mut nn = 0.0;
    for (a, c) in v.iter().zip(center) {
        nn += (a - c) * (a - c);
    }
    nn = nn.sqrt();
    if nn > radius {
        let s = if nn > 0.0 { radius / nn } else { 0.0 };
        for (a, c) in v.iter_mut().zip(center) {
            *a = c + s * (*a - c);
        }
    }
}

/// (feasible within slack, score) ordering: feasible beats infeasible,
/// then lower objective (feasible) or lower violation (infeasible).
fn better(cand: (bool, f64), cur: (bool, f64)) -> bool {
    match (cand.0, cur.0) {
        (true, false) => true,
        (false, true) => false,
        _ => cand.1 < cur.1,
    }
}

fn solve_split(p: &SplitProblem) -> Result<SplitSolution> {
    let d = p.g2.cols;
    if let Some(g1) = p.g1 {
        if g1.cols != d {
            return Err(Error::DimensionMismatch(format!(
                "transform has {} columns but measurements have {}",
                g1.cols, d
            )));
        }
    }
    if p.y2.len() != p.g2.rows {
        return Err(Error::DimensionMismatch(format!(
            "constraint rhs length {} does not match {} rows",
            p.y2.len(),
            p.g2.rows
        )));
    }
    let n1 = p.g1.map_or(d, |g| g.rows);
    let n2 = p.g2.rows;

    let mut gram = p.g2.tr_mul(p.g2)?;
    match p.g1 {
        Some(g1) => {
            let gg = g1.tr_mul(g1)?;
            for (a, b) in gram.data.iter_mut().zip(&gg.data) {
                *a += b;
            }
        }
        None => gram.add_scaled_identity(1.0),
    }
    let chol = cholesky(&gram).map_err(|_| {
        Error::NonConvergence(
            "splitting normal matrix is singular; the operators share a null direction".into(),
        )
    })?;

    let lam = 1.0 / PENALTY;
    let mut x = vec![0.0; d];
    let mut z1 = vec![0.0; n1];
    let mut z2 = p.y2.to_vec();
    let mut u1 = vec![0.0; n1];
    let mut u2 = vec![0.0; n2];
    let mut z1_prev = vec![0.0; n1];
    let mut z2_prev = vec![0.0; n2];

    let feas_slack = 1e-3 * p.epsilon + 1e-9;
    let mut best: Option<(bool, f64, Vec<f64>)> = None;
    let mut iterations = 0;
    let mut converged = false;

    for it in 1..=p.max_iters {
        iterations = it;
        let checking = it % CHECK_EVERY == 0 || it == p.max_iters;
        if checking {
            z1_prev.copy_from_slice(&z1);
            z2_prev.copy_from_slice(&z2);
        }

        // x-update: solve (G1ᵀG1 + G2ᵀG2) x = G1ᵀ(z1−u1) + G2ᵀ(z2−u2).
        let v1 = vsub(&z1, &u1);
        let v2 = vsub(&z2, &u2);
        let mut rhs = match p.g1 {
            Some(g1) => g1.tr_matvec(&v1)?,
            None => v1,
        };
        let t2 = p.g2.tr_matvec(&v2)?;
        for (r, t) in rhs.iter_mut().zip(&t2) {
            *r += t;
        }
        x = chol.solve(&rhs)?;

        let gx1 = match p.g1 {
            Some(g1) => g1.matvec(&x)?,
            None => x.clone(),
        };
        let gx2 = p.g2.matvec(&x)?;

        // Track the best true iterate in case the cap is hit first.
        let viol = (norm2(&vsub(&gx2, p.y2)) - p.epsilon).max(0.0);
        let feasible = viol <= feas_slack;
        let score = if feasible {
            objective_value(&p.objective, &gx1)
        } else {
            viol
        };
        let improves = match &best {
            Some((f, s, _)) => better((feasible, score), (*f, *s)),
            None => true,
        };
        if improves {
            best = Some((feasible, score, x.clone()));
        }

        // Over-relaxed z and scaled dual updates.
        for i in 0..n1 {
            let h = OVER_RELAX * gx1[i] + (1.0 - OVER_RELAX) * z1[i];
            u1[i] += h;
            z1[i] = u1[i];
        }
        apply_prox(&p.objective, &mut z1, lam);
        for i in 0..n1 {
            u1[i] -= z1[i];
        }
        for i in 0..n2 {
            let h = OVER_RELAX * gx2[i] + (1.0 - OVER_RELAX) * z2[i];
            u2[i] += h;
            z2[i] = u2[i];
        }
        project_ball(&mut z2, p.y2, p.epsilon);
        for i in 0..n2 {
            u2[i] -= z2[i];
        }

        if checking {
            let mut r2 = 0.0;
            for (a, b) in gx1.iter().zip(&z1) {
                r2 += (a - b) * (a - b);
            }
            for (a, b) in gx2.iter().zip(&z2) {
                r2 += (a - b) * (a - b);
            }
            let r = r2.sqrt();

            let dz1 = vsub(&z1, &z1_prev);
            let dz2 = vsub(&z2, &z2_prev);
            let mut gtd = match p.g1 {
                Some(g1) => g1.tr_matvec(&dz1)?,
                None => dz1,
            };
            let t = p.g2.tr_matvec(&dz2)?;
            for (a, b) in gtd.iter_mut().zip(&t) {
                *a += b;
            }
            let s = PENALTY * norm2(&gtd);

            let gx_norm = {
                let mut n = 0.0;
                for v in gx1.iter().chain(gx2.iter()) {
                    n += v * v;
                }
                n.sqrt()
            };
            let z_norm = {
                let mut n = 0.0;
                for v in z1.iter().chain(z2.iter()) {
                    n += v * v;
                }
                n.sqrt()
            };
            let mut gtu = match p.g1 {
                Some(g1) => g1.tr_matvec(&u1)?,
                None => u1.clone(),
            };
            let t = p.g2.tr_matvec(&u2)?;
            for (a, b) in gtu.iter_mut().zip(&t) {
                *a += b;
            }

            let scale = ((n1 + n2) as f64).sqrt();
            let eps_pri = scale * p.tol + p.tol * gx_norm.max(z_norm);
            let eps_dual = (d as f64).sqrt() * p.tol + p.tol * PENALTY * norm2(&gtu);
            if r <= eps_pri && s <= eps_dual {
                converged = true;
                break;
            }
        }
    }

    let x_final = if converged {
        x
    } else {
        best.map(|(_, _, b)| b).unwrap_or(x)
    };
    Ok(SplitSolution {
        x: x_final,
        z1,
        iterations,
        converged,
    })
}

/// Pull x just inside the ball ‖op·x − y‖2 ≤ epsilon along the minimum-norm
/// correction reachable through op. A no-op when already feasible; when the
/// ball cannot be reached, lands at the closest attainable residual.
fn feasibility_correct(x: &mut [f64], op: &DenseMatrix, y: &[f64], epsilon: f64) -> Result<()> {
    let r = vsub(y, &op.matvec(x)?);
    let rn = norm2(&r);
    if rn <= epsilon + 1e-12 * epsilon.max(1.0) {
        return Ok(());
    }
    let ls = least_squares(op, &r)?;
    let reach = op.matvec(&ls.x)?;
    let q = vsub(&r, &reach);
    let (pn, qn) = (norm2(&reach), norm2(&q));
    if pn <= 0.0 {
        return Ok(());
    }
    let s = if qn >= epsilon {
        1.0
    } else {
        1.0 - (epsilon * epsilon - qn * qn).sqrt() / pn
    };
    axpy(s.clamp(0.0, 1.0), &ls.x, x);
    Ok(())
}

fn residual_norm(op: &DenseMatrix, x: &[f64], y: &[f64]) -> Result<f64> {
    Ok(norm2(&vsub(y, &op.matvec(x)?)))
}

/// Basis-pursuit denoising: min ‖alpha‖1 subject to ‖y − A·alpha‖2 ≤ epsilon.
pub fn l1_bpdn(y: &[f64], a: &DenseMatrix, epsilon: f64) -> Result<RecoveryReport> {
    l1_bpdn_with(y, a, epsilon, DEFAULT_MAX_ITERS, DEFAULT_TOL)
}

pub(crate) fn l1_bpdn_with(
    y: &[f64],
    a: &DenseMatrix,
    epsilon: f64,
    max_iters: usize,
    tol: f64,
) -> Result<RecoveryReport> {
    let timer = Timer::start();
    if y.len() != a.rows {
        return Err(Error::DimensionMismatch(format!(
            "measurement length {} does not match {} matrix rows",
            y.len(),
            a.rows
        )));
    }
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(Error::InvalidArgument("noise budget must be finite and >= 0".into()));
    }
    if a.cols == 0 || epsilon >= norm2(y) {
        // Zero is feasible, and no feasible point beats its objective.
        return RecoveryReport::finish(vec![0.0; a.cols], y, a, 0, true, timer);
    }

    let problem = SplitProblem {
        g1: None,
        g2: a,
        y2: y,
        epsilon,
        objective: Objective::L1,
        max_iters,
        tol,
    };
    let sol = solve_split(&problem)?;

    // Candidate 1: restrict to the exactly-sparse pattern of the final
    // transform iterate, then repair feasibility inside that support.
    let inner_eps = epsilon * (1.0 - 1e-9);
    let mut candidates: Vec<Vec<f64>> = Vec::new();
    let pattern = nonzero_support(&sol.z1);
    if !pattern.is_empty() && pattern.len() <= a.rows {
        let sub = a.select_columns(&pattern)?;
        let mut coef: Vec<f64> = pattern.iter().map(|&j| sol.x[j]).collect();
        feasibility_correct(&mut coef, &sub, y, inner_eps)?;
        let mut full = vec![0.0; a.cols];
        for (c, &j) in coef.iter().zip(&pattern) {
            full[j] = *c;
        }
        candidates.push(full);
    }
    // Candidate 2: the dense iterate with the same repair through all of A.
    {
        let mut dense = sol.x.clone();
        feasibility_correct(&mut dense, a, y, inner_eps)?;
        candidates.push(dense);
    }
    candidates.push(sol.x);

    let accept = 1e-4 * epsilon + 1e-9;
    let mut choice: Option<(bool, f64, Vec<f64>)> = None;
    for c in candidates {
        let viol = (residual_norm(a, &c, y)? - epsilon).max(0.0);
        let feasible = viol <= accept;
        let score = if feasible { norm1(&c) } else { viol };
        let improves = match &choice {
            Some((f, s, _)) => better((feasible, score), (*f, *s)),
            None => true,
        };
        if improves {
            choice = Some((feasible, score, c));
        }
    }
    let (feasible, _, estimate) = choice.expect("candidate list is never empty");
    RecoveryReport::finish(
        estimate,
        y,
        a,
        sol.iterations,
        sol.converged && feasible,
        timer,
    )
}

/// Analysis-form l1: min ‖Ω·x‖1 subject to ‖y − M·x‖2 ≤ epsilon.
pub fn analysis_l1(
    y: &[f64],
    m: &DenseMatrix,
    omega: &AnalysisOperator,
    epsilon: f64,
) -> Result<FitOutput> {
    analysis_l1_with(y, m, omega, epsilon, DEFAULT_MAX_ITERS, DEFAULT_TOL)
}

pub(crate) fn analysis_l1_with(
    y: &[f64],
    m: &DenseMatrix,
    omega: &AnalysisOperator,
    epsilon: f64,
    max_iters: usize,
    tol: f64,
) -> Result<FitOutput> {
    if m.cols != omega.signal_dim() {
        return Err(Error::DimensionMismatch(format!(
            "measurement matrix acts on {} entries but the operator analyzes {}",
            m.cols,
            omega.signal_dim()
        )));
    }
    if y.len() != m.rows {
        return Err(Error::DimensionMismatch(format!(
            "measurement length {} does not match {} matrix rows",
            y.len(),
            m.rows
        )));
    }
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(Error::InvalidArgument("noise budget must be finite and >= 0".into()));
    }

    // An exactly-determined consistent system has a single feasible point;
    // no l1 weighing is left to do.
    if epsilon == 0.0 && m.rows >= m.cols {
        let ls = least_squares(m, y)?;
        if !ls.rank_deficient {
            let resid = residual_norm(m, &ls.x, y)?;
            if resid <= 1e-9 * norm2(y).max(1.0) {
                let objective = norm1(&omega.apply(&ls.x)?);
                return Ok(FitOutput {
                    x: ls.x,
                    objective,
                    iterations: 0,
                    converged: true,
                });
            }
        }
    }

    let problem = SplitProblem {
        g1: Some(&omega.matrix),
        g2: m,
        y2: y,
        epsilon,
        objective: Objective::L1,
        max_iters,
        tol,
    };
    let sol = solve_split(&problem)?;
    let mut x = sol.x;
    feasibility_correct(&mut x, m, y, epsilon * (1.0 - 1e-9))?;
    let viol = (residual_norm(m, &x, y)? - epsilon).max(0.0);
    let objective = norm1(&omega.apply(&x)?);
    Ok(FitOutput {
        x,
        objective,
        iterations: sol.iterations,
        converged: sol.converged && viol <= 1e-4 * epsilon + 1e-9,
    })
}

/// Fit a signal to target transform coefficients under direct measurements:
/// min ‖Ω·x − w_hat‖_p subject to ‖B·x − y2‖2 ≤ epsilon2, p ∈ {1, 2}.
pub fn constrained_transform_fit(
    omega: &AnalysisOperator,
    w_hat: &[f64],
    b: &DenseMatrix,
    y2: &[f64],
    epsilon2: f64,
    norm: FitNorm,
) -> Result<FitOutput> {
    constrained_transform_fit_with(
        omega,
        w_hat,
        b,
        y2,
        epsilon2,
        norm,
        DEFAULT_MAX_ITERS,
        DEFAULT_TOL,
    )
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn constrained_transform_fit_with(
    omega: &AnalysisOperator,
    w_hat: &[f64],
    b: &DenseMatrix,
    y2: &[f64],
    epsilon2: f64,
    norm: FitNorm,
    max_iters: usize,
    tol: f64,
) -> Result<FitOutput> {
    if b.cols != omega.signal_dim() {
        return Err(Error::DimensionMismatch(format!(
            "direct measurements act on {} entries but the operator analyzes {}",
            b.cols,
            omega.signal_dim()
        )));
    }
    if w_hat.len() != omega.num_atoms() {
        return Err(Error::DimensionMismatch(format!(
            "target has {} coefficients but the operator produces {}",
            w_hat.len(),
            omega.num_atoms()
        )));
    }
    if y2.len() != b.rows {
        return Err(Error::DimensionMismatch(format!(
            "direct measurement length {} does not match {} rows",
            y2.len(),
            b.rows
        )));
    }
    if b.rows == 0 {
        return Err(Error::InvalidArgument(
            "need at least one direct measurement row".into(),
        ));
    }
    if !epsilon2.is_finite() || epsilon2 < 0.0 {
        return Err(Error::InvalidArgument("noise budget must be finite and >= 0".into()));
    }

    let objective = match norm {
        FitNorm::L1 => Objective::L1Shift(w_hat),
        FitNorm::L2 => Objective::L2Shift(w_hat),
    };
    let problem = SplitProblem {
        g1: Some(&omega.matrix),
        g2: b,
        y2,
        epsilon: epsilon2,
        objective,
        max_iters,
        tol,
    };
    let sol = solve_split(&problem)?;
    let mut x = sol.x;
    feasibility_correct(&mut x, b, y2, epsilon2 * (1.0 - 1e-9))?;
    let viol = (residual_norm(b, &x, y2)? - epsilon2).max(0.0);
    let coeffs = omega.apply(&x)?;
    let objective = match norm {
        FitNorm::L1 => coeffs.iter().zip(w_hat).map(|(a, b)| (a - b).abs()).sum(),
        FitNorm::L2 => norm2(&vsub(&coeffs, w_hat)),
    };
    Ok(FitOutput {
        x,
        objective,
        iterations: sol.iterations,
        converged: sol.converged && viol <= 1e-4 * epsilon2 + 1e-9,
    })
}
