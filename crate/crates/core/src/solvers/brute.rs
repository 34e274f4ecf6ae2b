//! Exhaustive l0 oracles. Both enumerate supports outright, so they serve as
//! ground truth for the scalable solvers and refuse instances whose
//! enumeration would not finish.

use super::{RecoveryReport, Timer};
use crate::combinatorics::{binomial_capped, Combinations};
use crate::error::{Error, Result};
use crate::numerics::{
    default_rank_tol, least_squares, norm2, null_space_basis, vsub, DenseMatrix,
};
use crate::operators::AnalysisOperator;

const ENUM_CAP: u128 = 100_000;
/// Overall work guard for the cosupport search, which walks several levels.
const TOTAL_CAP: u128 = 500_000;

/// Replace `best` when the candidate residual is more than a hair better;
/// exact and near ties keep the earlier (lexicographically first) entry.
fn strictly_better(candidate: f64, best: f64) -> bool {
    candidate < best - 1e-12
}

/// Smallest support of size ≤ k whose least-squares fit lands within
/// `epsilon` of y, found by trying every support in lexicographic order of
/// growing size. Infeasible instances return the best fit found, unconverged.
pub fn brute_force_l0_synthesis(
    y: &[f64],
    a: &DenseMatrix,
    k: usize,
    epsilon: f64,
) -> Result<RecoveryReport> {
    let timer = Timer::start();
    if y.len() != a.rows {
        return Err(Error::DimensionMismatch(format!(
            "measurement length {} does not match {} matrix rows",
            y.len(),
            a.rows
        )));
    }
    if k > a.cols {
        return Err(Error::InvalidArgument(format!(
            "sparsity budget {} exceeds the {} available columns",
            k, a.cols
        )));
    }
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(Error::InvalidArgument("noise budget must be finite and >= 0".into()));
    }
    if binomial_capped(a.cols, k, ENUM_CAP) > ENUM_CAP {
        return Err(Error::CombinatorialCap(format!(
            "C({}, {}) supports exceed the {} enumeration cap",
            a.cols, k, ENUM_CAP
        )));
    }

    let mut evaluated = 0usize;
    let mut best_fit: Option<(f64, Vec<usize>, Vec<f64>)> = None;
    for size in 0..=k {
        let mut best_level: Option<(f64, Vec<usize>, Vec<f64>)> = None;
        for support in Combinations::new(a.cols, size) {
            evaluated += 1;
            let (coef, resid) = if support.is_empty() {
                (Vec::new(), norm2(y))
            } else {
                let sub = a.select_columns(&support)?;
                let ls = least_squares(&sub, y)?;
                let resid = norm2(&vsub(y, &sub.matvec(&ls.x)?));
                (ls.x, resid)
            };
            if best_level
                .as_ref()
                .map_or(true, |(b, _, _)| strictly_better(resid, *b))
            {
                best_level = Some((resid, support.clone(), coef.clone()));
            }
            if best_fit
                .as_ref()
                .map_or(true, |(b, _, _)| strictly_better(resid, *b))
            {
                best_fit = Some((resid, support, coef));
            }
        }
        if let Some((resid, support, coef)) = &best_level {
            if *resid <= epsilon {
                let mut estimate = vec![0.0; a.cols];
                for (&j, &c) in support.iter().zip(coef) {
                    estimate[j] = c;
                }
                return RecoveryReport::finish(estimate, y, a, evaluated, true, timer);
            }
        }
    }

    let (_, support, coef) = best_fit.expect("at least the empty support is evaluated");
    let mut estimate = vec![0.0; a.cols];
    for (&j, &c) in support.iter().zip(&coef) {
        estimate[j] = c;
    }
    RecoveryReport::finish(estimate, y, a, evaluated, false, timer)
}

/// Most-cosparse feasible signal: enumerate cosupports from the full set
/// down to `cosparsity` rows, solve the least-squares fit restricted to each
/// annihilated subspace, and return the first feasible level's best fit.
/// When nothing is feasible, the overall best fit comes back instead.
pub fn brute_force_l0_analysis(
    y: &[f64],
    m: &DenseMatrix,
    omega: &AnalysisOperator,
    cosparsity: usize,
    epsilon: f64,
) -> Result<Vec<f64>> {
    let d = omega.signal_dim();
    let n = omega.num_atoms();
    if m.cols != d {
        return Err(Error::DimensionMismatch(format!(
            "measurement matrix acts on {} entries but the operator analyzes {}",
            m.cols, d
        )));
    }
    if y.len() != m.rows {
        return Err(Error::DimensionMismatch(format!(
            "measurement length {} does not match {} matrix rows",
            y.len(),
            m.rows
        )));
    }
    if cosparsity > n {
        return Err(Error::InvalidArgument(format!(
            "cosparsity {} exceeds the {} operator rows",
            cosparsity, n
        )));
    }
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(Error::InvalidArgument("noise budget must be finite and >= 0".into()));
    }
    if binomial_capped(n, cosparsity, ENUM_CAP) > ENUM_CAP {
        return Err(Error::CombinatorialCap(format!(
            "C({}, {}) cosupports exceed the {} enumeration cap",
            n, cosparsity, ENUM_CAP
        )));
    }

    let mut total: u128 = 0;
    let mut best_fit: Option<(f64, Vec<f64>)> = None;
    for ell in (cosparsity..=n).rev() {
        let level = binomial_capped(n, ell, TOTAL_CAP);
        total += level;
        if total > TOTAL_CAP {
            return Err(Error::CombinatorialCap(format!(
                "cosupport enumeration for C({}, {}) exceeds the {} total work cap",
                n, ell, TOTAL_CAP
            )));
        }
        let mut best_level: Option<(f64, Vec<f64>)> = None;
        for cosupport in Combinations::new(n, ell) {
            let x = if cosupport.is_empty() {
                least_squares(m, y)?.x
            } else {
                let sel = omega.matrix.select_rows(&cosupport)?;
                let basis = null_space_basis(&sel, default_rank_tol(ell, d))?;
                if basis.cols == 0 {
                    vec![0.0; d]
                } else {
                    let mq = m.matmul(&basis)?;
                    let ls = least_squares(&mq, y)?;
                    basis.matvec(&ls.x)?
                }
            };
            let resid = norm2(&vsub(y, &m.matvec(&x)?));
            if best_level
                .as_ref()
                .map_or(true, |(b, _)| strictly_better(resid, *b))
            {
                best_level = Some((resid, x.clone()));
            }
            if best_fit
                .as_ref()
                .map_or(true, |(b, _)| strictly_better(resid, *b))
            {
                best_fit = Some((resid, x));
            }
        }
        if let Some((resid, x)) = best_level {
            if resid <= epsilon {
                return Ok(x);
            }
        }
    }
    Ok(best_fit.expect("at least one cosupport level is evaluated").1)
}

#[cfg(test)]
mod tests {
    use super::super::tests::planted_instance;
    use super::*;
    use crate::numerics::rel_error;
    use crate::operators::{dif_ld, AnalysisOperator, OperatorKind};
    use crate::sensing::gaussian_matrix;

    #[test]
    fn synthesis_oracle_finds_the_minimal_planted_support() {
        let (a, y, alpha, support) = planted_instance(10, 16, 3, 0xB0B);
        let report = brute_force_l0_synthesis(&y, &a, 3, 1e-10).unwrap();
        assert_eq!(report.support, support);
        assert!(rel_error(&report.estimate, &alpha) <= 1e-10);
        assert!(report.converged);
        // Sizes 0..3 were all enumerated before the feasible level.
        assert!(report.iterations >= 1 + 16);
    }

    #[test]
    fn synthesis_oracle_prefers_smaller_supports() {
        // y is exactly one atom; a 1-sparse fit must win although k = 2.
        let a = gaussian_matrix(8, 12, true, 3).unwrap();
        let y = a.col(4);
        let report = brute_force_l0_synthesis(&y, &a, 2, 1e-10).unwrap();
        assert_eq!(report.support, vec![4]);
        assert!((report.estimate[4] - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn synthesis_oracle_handles_the_empty_budget() {
        let a = gaussian_matrix(5, 8, true, 4).unwrap();
        let y = a.col(0);
        let small = brute_force_l0_synthesis(&[0.0; 5], &a, 0, 1e-10).unwrap();
        assert!(small.converged);
        assert!(small.estimate.iter().all(|&v| v == 0.0));
        let infeasible = brute_force_l0_synthesis(&y, &a, 0, 1e-10).unwrap();
        assert!(!infeasible.converged);
        assert!(infeasible.estimate.iter().all(|&v| v == 0.0));
        assert!((infeasible.residual_norm - norm2(&y)).abs() <= 1e-12);
    }

    #[test]
    fn synthesis_oracle_flags_infeasible_instances_with_a_best_fit() {
        let (a, y, _, _) = planted_instance(10, 14, 4, 0xBAD);
        // Budget 1 cannot reach a 4-atom signal.
        let report = brute_force_l0_synthesis(&y, &a, 1, 1e-6).unwrap();
        assert!(!report.converged);
        assert_eq!(report.support.len(), 1);
        assert!(report.residual_norm > 1e-3);
    }

    #[test]
    fn synthesis_oracle_refuses_unbounded_enumerations() {
        let a = gaussian_matrix(10, 400, true, 5).unwrap();
        let err = brute_force_l0_synthesis(&[0.0; 10], &a, 34, 1e-10);
        assert!(matches!(err, Err(Error::CombinatorialCap(_))));
    }

    #[test]
    fn analysis_oracle_recovers_a_planted_cosparse_signal() {
        // Piecewise-constant signal: 1D gradient with 2 active rows.
        let omega = dif_ld(&[9]).unwrap();
        let mut x_true = vec![1.5; 9];
        for (i, v) in x_true.iter_mut().enumerate() {
            if i >= 3 && i < 6 {
                *v = -1.0;
            } else if i >= 6 {
                *v = 2.0;
            }
        }
        let m = gaussian_matrix(6, 9, false, 0xACE).unwrap();
        let y = m.matvec(&x_true).unwrap();
        let x = brute_force_l0_analysis(&y, &m, &omega, 6, 1e-9).unwrap();
        assert!(rel_error(&x, &x_true) <= 1e-8);
    }

    #[test]
    fn analysis_oracle_with_identity_matches_the_synthesis_oracle() {
        let (a, y, alpha, _) = planted_instance(6, 10, 2, 0xEE1);
        let omega = AnalysisOperator::from_matrix(DenseMatrix::identity(10), OperatorKind::Frame);
        let x = brute_force_l0_analysis(&y, &a, &omega, 8, 1e-9).unwrap();
        let report = brute_force_l0_synthesis(&y, &a, 2, 1e-9).unwrap();
        assert!(rel_error(&x, &report.estimate) <= 1e-8);
        assert!(rel_error(&x, &alpha) <= 1e-8);
    }

    #[test]
    fn analysis_oracle_with_zero_floor_falls_back_to_least_squares() {
        // An invertible square system whose solution has no zero gradients:
        // every nonempty cosupport forces a worse fit, so the empty one wins.
        let mut m = gaussian_matrix(7, 7, false, 0xF00).unwrap();
        m.add_scaled_identity(5.0);
        let omega = dif_ld(&[7]).unwrap();
        let x_true = vec![1.0, 3.0, 2.0, 5.0, 1.0, 4.0, 2.0];
        let y = m.matvec(&x_true).unwrap();
        let x = brute_force_l0_analysis(&y, &m, &omega, 0, 1e-9).unwrap();
        let direct = least_squares(&m, &y).unwrap().x;
        assert!(rel_error(&x, &direct) <= 1e-9);
        assert!(rel_error(&x, &x_true) <= 1e-9);
    }

    #[test]
    fn analysis_oracle_refuses_unbounded_enumerations() {
        let omega = dif_ld(&[40]).unwrap();
        let m = gaussian_matrix(5, 40, false, 9).unwrap();
        let err = brute_force_l0_analysis(&[0.0; 5], &m, &omega, 19, 1e-9);
        assert!(matches!(err, Err(Error::CombinatorialCap(_))));
    }
}
