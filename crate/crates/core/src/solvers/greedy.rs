//! Greedy synthesis solvers: orthogonal matching pursuit, compressive
//! sampling matching pursuit, and iterative hard thresholding.

use super::{RecoveryReport, Timer};
use crate::error::{Error, Result};
use crate::numerics::{least_squares, norm2, spectral_norm, vsub, DenseMatrix};

/// Indices of the k largest-magnitude entries, ascending. Ties go to the
/// lower index.
pub(crate) fn top_k_indices(v: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_unstable_by(|&a, &b| {
        v[b].abs()
            .partial_cmp(&v[a].abs())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx.truncate(k);
    idx.sort_unstable();
    idx
}

fn check_shapes(y: &[f64], a: &DenseMatrix, k: usize, k_cap: usize) -> Result<()> {
    if y.len() != a.rows {
        return Err(Error::DimensionMismatch(format!(
            "measurement length {} does not match {} matrix rows",
            y.len(),
            a.rows
        )));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("sparsity budget k must be >= 1".into()));
    }
    if k > k_cap {
        return Err(Error::InvalidArgument(format!(
            "sparsity budget {} exceeds the solvable limit {} for a {}x{} matrix",
            k, k_cap, a.rows, a.cols
        )));
    }
    Ok(())
}

/// Orthogonal matching pursuit: grow the support one best-correlated atom at
/// a time, re-fitting by least squares after each pick.
pub fn omp(y: &[f64], a: &DenseMatrix, k: usize, tol: f64) -> Result<RecoveryReport> {
    let timer = Timer::start();
    check_shapes(y, a, k, a.rows.min(a.cols))?;

    let col_norms: Vec<f64> = (0..a.cols)
        .map(|j| {
            let mut n = 0.0;
            for i in 0..a.rows {
                let v = a.get(i, j);
                n += v * v;
            }
            n.sqrt()
        })
        .collect();

    let mut support: Vec<usize> = Vec::with_capacity(k);
    let mut in_support = vec![false; a.cols];
    let mut coef: Vec<f64> = Vec::new();
    let mut residual = y.to_vec();
    let mut iterations = 0;
    let mut rank_failed = false;

    while support.len() < k {
        if norm2(&residual) <= tol {
            break;
        }
        let proxy = a.tr_matvec(&residual)?;
        let mut best_corr = 0.0;
        let mut best_j = usize::MAX;
        for j in 0..a.cols {
            if in_support[j] || col_norms[j] <= 1e-300 {
                continue;
            }
            let c = proxy[j].abs() / col_norms[j];
            if c > best_corr {
                best_corr = c;
                best_j = j;
            }
        }
        if best_j == usize::MAX || best_corr <= 0.0 {
            // The residual is orthogonal to every remaining atom.
            break;
        }
        support.push(best_j);
        in_support[best_j] = true;
        let sub = a.select_columns(&support)?;
        let ls = least_squares(&sub, y)?;
        if ls.rank_deficient {
            in_support[support.pop().expect("just pushed")] = false;
            rank_failed = true;
            break;
        }
        residual = vsub(y, &sub.matvec(&ls.x)?);
        coef = ls.x;
        iterations += 1;
    }

    let mut estimate = vec![0.0; a.cols];
    for (&j, &c) in support.iter().zip(&coef) {
        estimate[j] = c;
    }
    RecoveryReport::finish(estimate, y, a, iterations, !rank_failed, timer)
}

/// Compressive sampling matching pursuit: merge the current support with the
/// 2k strongest proxy entries, least-squares fit, prune back to k.
pub fn cosamp(
    y: &[f64],
    a: &DenseMatrix,
    k: usize,
    max_iters: usize,
    tol: f64,
) -> Result<RecoveryReport> {
    let timer = Timer::start();
    check_shapes(y, a, k, a.cols)?;

    let mut estimate = vec![0.0; a.cols];
    let mut support: Vec<usize> = Vec::new();
    let mut residual = y.to_vec();
    let mut prev_norm = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    let mut rank_failed = false;

    for it in 1..=max_iters.max(1) {
        iterations = it;
        let r_norm = norm2(&residual);
        if r_norm <= tol {
            converged = true;
            break;
        }
        // Support stalls show up as a frozen residual norm.
        if prev_norm.is_finite() && (prev_norm - r_norm).abs() <= tol * prev_norm.max(1e-300) {
            converged = true;
            break;
        }
        prev_norm = r_norm;

        let proxy = a.tr_matvec(&residual)?;
        let mut merged = top_k_indices(&proxy, 2 * k);
        merged.extend_from_slice(&support);
        merged.sort_unstable();
        merged.dedup();

        let sub = a.select_columns(&merged)?;
        let ls = least_squares(&sub, y)?;
        if ls.rank_deficient {
            rank_failed = true;
        }
        let keep = top_k_indices(&ls.x, k);
        support = keep.iter().map(|&i| merged[i]).collect();
        estimate.iter_mut().for_each(|v| *v = 0.0);
        for &i in &keep {
            estimate[merged[i]] = ls.x[i];
        }
        residual = vsub(y, &a.matvec(&estimate)?);
    }

    RecoveryReport::finish(estimate, y, a, iterations, converged && !rank_failed, timer)
}

/// Iterative hard thresholding: gradient step on ‖y − A·alpha‖² followed by
/// projection onto the k-sparse set. The default step is 1/σ_max(A)².
pub fn iht(
    y: &[f64],
    a: &DenseMatrix,
    k: usize,
    step: Option<f64>,
    max_iters: usize,
    tol: f64,
) -> Result<RecoveryReport> {
    let timer = Timer::start();
    check_shapes(y, a, k, a.cols)?;
    let step = match step {
        Some(s) => {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::InvalidArgument("step size must be finite and positive".into()));
            }
            s
        }
        None => {
            let smax = spectral_norm(a)?;
            if smax <= 0.0 {
                return Err(Error::InvalidArgument(
                    "cannot choose a step size for an all-zero matrix".into(),
                ));
            }
            1.0 / (smax * smax)
        }
    };

    let mut alpha = vec![0.0; a.cols];
    let mut residual = y.to_vec();
    let mut prev_norm = norm2(y);
    let mut doubling_streak = 0;
    let mut iterations = 0;
    let mut converged = false;

    for it in 1..=max_iters.max(1) {
        iterations = it;
        let grad = a.tr_matvec(&residual)?;
        let mut lifted = alpha.clone();
        for (l, g) in lifted.iter_mut().zip(&grad) {
            *l += step * g;
        }
        let keep = top_k_indices(&lifted, k);
        let mut next = vec![0.0; a.cols];
        for &j in &keep {
            next[j] = lifted[j];
        }
        residual = vsub(y, &a.matvec(&next)?);
        let r_norm = norm2(&residual);
        let move_norm = {
            let mut n = 0.0;
            for (p, q) in next.iter().zip(&alpha) {
                n += (p - q) * (p - q);
            }
            n.sqrt()
        };
        let scale = norm2(&next).max(1.0);
        alpha = next;

        if !r_norm.is_finite() {
            break;
        }
        if r_norm > 2.0 * prev_norm {
            doubling_streak += 1;
            if doubling_streak >= 10 {
                break;
            }
        } else {
            doubling_streak = 0;
        }
        prev_norm = r_norm;

        if r_norm <= tol || move_norm <= tol * scale {
            converged = true;
            break;
        }
    }

    RecoveryReport::finish(alpha, y, a, iterations, converged, timer)
}

#[cfg(test)]
mod tests {
    use super::super::tests::{gaussian_vec, planted_instance};
    use super::*;
    use crate::numerics::{rel_error, vscale};
    use crate::sensing::gaussian_matrix;

    #[test]
    fn top_k_breaks_ties_toward_lower_indices() {
        assert_eq!(top_k_indices(&[1.0, -2.0, 2.0, 0.5], 2), vec![1, 2]);
        assert_eq!(top_k_indices(&[3.0, 3.0, 3.0], 2), vec![0, 1]);
        assert_eq!(top_k_indices(&[1.0], 5), vec![0]);
    }

    #[test]
    fn omp_finds_a_single_scaled_atom_in_one_step() {
        let a = gaussian_matrix(10, 20, true, 5).unwrap();
        let y = vscale(&a.col(7), -3.0);
        let report = omp(&y, &a, 3, 1e-10).unwrap();
        assert_eq!(report.support, vec![7]);
        assert!((report.estimate[7] + 3.0).abs() <= 1e-10);
        assert_eq!(report.iterations, 1);
        assert!(report.converged);
        assert!(report.residual_norm <= 1e-10);
    }

    #[test]
    fn omp_recovers_a_planted_support_exactly() {
        let (a, y, alpha, support) = planted_instance(20, 40, 4, 0x0FF);
        let report = omp(&y, &a, 4, 1e-10).unwrap();
        assert_eq!(report.support, support);
        assert!(rel_error(&report.estimate, &alpha) <= 1e-10);
        assert!(report.converged);
    }

    #[test]
    fn omp_against_the_identity_keeps_the_dominant_entries() {
        let y = vec![0.1, 3.0, -0.2, -1.8, 0.05, 0.9];
        let a = DenseMatrix::identity(6);
        let report = omp(&y, &a, 3, 1e-10).unwrap();
        assert_eq!(report.support, vec![1, 3, 5]);
        for &j in &report.support {
            assert!((report.estimate[j] - y[j]).abs() <= 1e-12);
        }
    }

    #[test]
    fn omp_and_cosamp_match_the_exhaustive_oracle_on_one_instance() {
        use super::super::brute_force_l0_synthesis;
        let (a, y, _, _) = planted_instance(15, 30, 3, 0x0AC1E);
        let oracle = brute_force_l0_synthesis(&y, &a, 3, 1e-10).unwrap();
        let via_omp = omp(&y, &a, 3, 1e-10).unwrap();
        assert_eq!(via_omp.support, oracle.support);
        assert!(rel_error(&via_omp.estimate, &oracle.estimate) <= 1e-8);
        let via_cosamp = cosamp(&y, &a, 3, 200, 1e-10).unwrap();
        assert_eq!(via_cosamp.support, oracle.support);
    }

    #[test]
    fn omp_handles_zero_measurements() {
        let a = gaussian_matrix(6, 9, true, 6).unwrap();
        let report = omp(&[0.0; 6], &a, 2, 1e-10).unwrap();
        assert!(report.estimate.iter().all(|&v| v == 0.0));
        assert_eq!(report.iterations, 0);
        assert!(report.converged);
    }

    #[test]
    fn omp_stops_early_on_a_rank_deficient_pick() {
        // The middle column doubles the first, so once columns 0 and 2 are
        // taken the only remaining pick makes the submatrix singular.
        let c1 = gaussian_vec(5, 41);
        let c3 = gaussian_vec(5, 42);
        let mut a = DenseMatrix::zeros(5, 3);
        for i in 0..5 {
            a.set(i, 0, c1[i]);
            a.set(i, 1, 2.0 * c1[i]);
            a.set(i, 2, c3[i]);
        }
        let mut y = vec![0.0; 5];
        for i in 0..5 {
            y[i] = 3.0 * c1[i] + 0.5 * c3[i];
        }
        let report = omp(&y, &a, 3, 0.0).unwrap();
        assert!(!report.converged);
        assert_eq!(report.support, vec![0, 2]);
        assert!((report.estimate[0] - 3.0).abs() <= 1e-10);
        assert!((report.estimate[2] - 0.5).abs() <= 1e-10);
        assert_eq!(report.estimate[1], 0.0);
    }

    #[test]
    fn omp_rejects_oversized_budgets() {
        let a = gaussian_matrix(4, 10, true, 7).unwrap();
        assert!(omp(&[0.0; 4], &a, 5, 1e-10).is_err());
        assert!(omp(&[0.0; 4], &a, 0, 1e-10).is_err());
    }

    #[test]
    fn cosamp_recovers_a_planted_support_exactly() {
        let (a, y, alpha, support) = planted_instance(24, 48, 4, 0xC05);
        let report = cosamp(&y, &a, 4, 200, 1e-10).unwrap();
        assert_eq!(report.support, support);
        assert!(rel_error(&report.estimate, &alpha) <= 1e-9);
        assert!(report.converged);
    }

    #[test]
    fn cosamp_converges_immediately_on_zero_measurements() {
        let a = gaussian_matrix(8, 16, true, 8).unwrap();
        let report = cosamp(&[0.0; 8], &a, 3, 50, 1e-10).unwrap();
        assert!(report.estimate.iter().all(|&v| v == 0.0));
        assert_eq!(report.iterations, 1);
        assert!(report.converged);
    }

    #[test]
    fn iht_thresholds_in_one_step_against_the_identity() {
        let y = vec![0.3, -2.0, 0.1, 1.5, -0.2];
        let a = DenseMatrix::identity(5);
        let report = iht(&y, &a, 2, Some(1.0), 50, 1e-12).unwrap();
        assert_eq!(report.support, vec![1, 3]);
        assert!((report.estimate[1] + 2.0).abs() <= 1e-12);
        assert!((report.estimate[3] - 1.5).abs() <= 1e-12);
        assert!(report.converged);
        assert_eq!(report.iterations, 2);
    }

    #[test]
    fn iht_recovers_a_planted_support_with_the_automatic_step() {
        use crate::rng::{mix, rng_from_seed};
        use crate::sensing::gaussian_matrix_scaled;
        use rand::Rng;
        let a = gaussian_matrix_scaled(20, 50, mix(&[5, 1])).unwrap();
        let mut rng = rng_from_seed(mix(&[5, 2]));
        let mut support = rand::seq::index::sample(&mut rng, 50, 3).into_vec();
        support.sort_unstable();
        let mut alpha = vec![0.0; 50];
        for &j in &support {
            let mag: f64 = rng.gen_range(0.5..2.0);
            alpha[j] = if rng.gen::<bool>() { mag } else { -mag };
        }
        let y = a.matvec(&alpha).unwrap();
        let report = iht(&y, &a, 3, None, 5000, 1e-12).unwrap();
        assert_eq!(report.support, support);
        assert!(rel_error(&report.estimate, &alpha) <= 1e-6);
        assert!(report.converged);
    }

    #[test]
    fn iht_aborts_on_a_divergent_step() {
        let (a, y, _, _) = planted_instance(20, 40, 3, 0xD1E);
        let smax = spectral_norm(&a).unwrap();
        let report = iht(&y, &a, 3, Some(10.0 / (smax * smax)), 2000, 1e-12).unwrap();
        assert!(!report.converged);
        assert!(report.iterations < 200);
        assert!(report.estimate.iter().all(|v| v.is_finite()));
    }
}
