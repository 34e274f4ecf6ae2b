//! Solver-level property suites that cut across modules: exhaustive oracles,
//! a fixed noiseless recovery suite, and linear-in-noise error scaling.

use tdsamp::numerics::{least_squares, norm1, norm2, vsub, DenseMatrix};
use tdsamp::rng::mix;
use tdsamp::sensing::gaussian_matrix;
use tdsamp::signals::{apply_noise, NoiseModel};
use tdsamp::solvers::{brute_force_l0_synthesis, cosamp, l1_bpdn, omp};

fn planted(m: usize, n: usize, k: usize, seed: u64) -> (DenseMatrix, Vec<f64>, Vec<f64>) {
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
    for (slot, &idx) in support.iter().enumerate() {
        let sign = if mix(&[seed, 3, slot as u64]) % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        alpha[idx] = sign * (1.0 + slot as f64 * 0.25);
    }
    let y = a.matvec(&alpha).unwrap();
    (a, y, alpha)
}

fn for_each_combination(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
        }
        if idx[i] == i + n - k {
            return;
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Basis pursuit by enumeration: the minimal-ℓ1 point of {α : Aα = y} sits
/// on a support of at most m coordinates, so scanning every size-m square
/// subsystem finds the optimum.
fn min_l1_by_enumeration(a: &DenseMatrix, y: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    let scale = norm2(y).max(1.0);
    for_each_combination(a.cols, a.rows, &mut |support| {
        let sub = a.select_columns(support).unwrap();
        let sol = match least_squares(&sub, y) {
            Ok(s) => s,
            Err(_) => return,
        };
        let resid = norm2(&vsub(&sub.matvec(&sol.x).unwrap(), y));
        if resid <= 1e-8 * scale {
            best = best.min(norm1(&sol.x));
        }
    });
    best
}

#[test]
fn bpdn_objective_matches_the_enumeration_oracle() {
    let (a, y, _alpha) = planted(10, 20, 3, 0x1B);
    let oracle = min_l1_by_enumeration(&a, &y);
    let fit = l1_bpdn(&y, &a, 0.0).unwrap();
    assert!(fit.converged);
    let objective = norm1(&fit.estimate);
    assert!(
        (objective - oracle).abs() <= 1e-5 * oracle.max(1.0),
        "solver objective {} vs enumerated optimum {}",
        objective,
        oracle
    );
}

/// Fixed 20-instance suite at m = 6k: every solver must match the oracle on
/// all of them, with zero tolerated misses.
const SUITE_SEEDS: [u64; 20] = [
    1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 14, 15, 16, 17, 18, 19, 20, 22,
];

#[test]
fn noiseless_suite_recovers_wherever_the_oracle_does() {
    for &i in &SUITE_SEEDS {
        let (a, y, alpha) = planted(18, 36, 3, mix(&[0x6E55, i]));
        let oracle = brute_force_l0_synthesis(&y, &a, 3, 1e-9).unwrap();
        assert!(
            norm2(&vsub(&oracle.estimate, &alpha)) <= 1e-6,
            "oracle missed the planted solution on instance {}",
            i
        );
        let o = omp(&y, &a, 3, 1e-10).unwrap();
        let c = cosamp(&y, &a, 3, 200, 1e-10).unwrap();
        let l = l1_bpdn(&y, &a, 0.0).unwrap();
        for (name, est) in [
            ("omp", &o.estimate),
            ("cosamp", &c.estimate),
            ("l1_bpdn", &l.estimate),
        ] {
            assert!(
                norm2(&vsub(est, &alpha)) <= 1e-6,
                "{} missed the planted solution on instance {} where the oracle found it",
                name,
                i
            );
        }
    }
}

#[test]
fn error_grows_at_most_linearly_with_noise() {
    let sigma = 0.01;
    let mut ratios: Vec<f64> = Vec::new();
    for i in 0..50u64 {
        let (a, y_clean, alpha) = planted(18, 36, 3, mix(&[0x2F0, i]));
        let (_, e) = apply_noise(
            &y_clean,
            &NoiseModel::gaussian(sigma, mix(&[0x2F1, i])),
        )
        .unwrap();
        let y_lo: Vec<f64> = y_clean.iter().zip(&e).map(|(a, b)| a + b).collect();
        let y_hi: Vec<f64> = y_clean.iter().zip(&e).map(|(a, b)| a + 2.0 * b).collect();
        let (eps_lo, eps_hi) = (norm2(&e), 2.0 * norm2(&e));

        let pairs = [
            (
                omp(&y_lo, &a, 3, 1e-10).unwrap().estimate,
                omp(&y_hi, &a, 3, 1e-10).unwrap().estimate,
            ),
            (
                cosamp(&y_lo, &a, 3, 200, 1e-10).unwrap().estimate,
                cosamp(&y_hi, &a, 3, 200, 1e-10).unwrap().estimate,
            ),
            (
                l1_bpdn(&y_lo, &a, eps_lo).unwrap().estimate,
                l1_bpdn(&y_hi, &a, eps_hi).unwrap().estimate,
            ),
        ];
        for (lo, hi) in pairs {
            let err_lo = norm2(&vsub(&lo, &alpha)).max(1e-12);
            let err_hi = norm2(&vsub(&hi, &alpha));
            ratios.push(err_hi / err_lo);
        }
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    assert!(
        mean <= 2.5,
        "doubling the noise scaled the mean error by {:.3}",
        mean
    );
}
