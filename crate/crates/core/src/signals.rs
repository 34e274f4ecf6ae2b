//! Ground-truth signal generators for the two experiment families, plus
//! measurement noise models.

use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    self, default_rank_tol, norm2, read_vector_csv, svd, vscale, write_vector_csv,
};
use crate::operators::{dif_2d, AnalysisOperator};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalGenerator {
    CosparseFrame,
    PiecewiseImage,
}

#[derive(Debug, Clone)]
pub struct SignalInstance {
    pub x: Vec<f64>,
    /// Row indices of the generating operator where Ωx vanishes.
    pub cosupport: Vec<usize>,
    /// Target sparsity of Ωx: number of atoms minus the cosparsity.
    pub k: usize,
    pub generator: SignalGenerator,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    None,
    Gaussian,
    BoundedAdversarial,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    /// Per-entry standard deviation for gaussian noise.
    pub sigma: f64,
    /// ℓ2 budget for bounded adversarial noise.
    pub epsilon: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn none() -> Self {
        NoiseModel {
            kind: NoiseKind::None,
            sigma: 0.0,
            epsilon: 0.0,
            seed: 0,
        }
    }

    pub fn gaussian(sigma: f64, seed: u64) -> Self {
        NoiseModel {
            kind: NoiseKind::Gaussian,
            sigma,
            epsilon: 0.0,
            seed,
        }
    }

    pub fn bounded_adversarial(epsilon: f64, seed: u64) -> Self {
        NoiseModel {
            kind: NoiseKind::BoundedAdversarial,
            sigma: 0.0,
            epsilon,
            seed,
        }
    }

    pub fn is_noiseless(&self) -> bool {
        matches!(self.kind, NoiseKind::None)
            || (self.sigma == 0.0 && matches!(self.kind, NoiseKind::Gaussian))
            || (self.epsilon == 0.0 && matches!(self.kind, NoiseKind::BoundedAdversarial))
    }

    fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "noise sigma must be finite and >= 0, got {}",
                self.sigma
            )));
        }
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "noise epsilon must be finite and >= 0, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Draw a unit-norm signal with `Ω_{T^C} x = 0` for a uniformly random
/// cosupport `T^C` of the requested size: project a Gaussian vector onto
/// the orthogonal complement of the selected rows and normalize.
pub fn gen_cosparse(
    omega: &AnalysisOperator,
    cosparsity: usize,
    seed: u64,
) -> Result<SignalInstance> {
    let n = omega.num_atoms();
    let d = omega.signal_dim();
    if cosparsity > n {
        return Err(Error::InvalidArgument(format!(
            "cosparsity {} exceeds the {} atoms of the operator",
            cosparsity, n
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut cosupport: Vec<usize> = sample(&mut rng, n, cosparsity).into_vec();
    cosupport.sort_unstable();

    // Row-space basis of the selected rows; the projector onto their
    // orthogonal complement is I − V_r V_rᵀ.
    let row_basis = if cosparsity == 0 {
        None
    } else {
        let sub = omega.matrix.select_rows(&cosupport)?;
        let f = svd(&sub)?;
        let smax = f.s.first().copied().unwrap_or(0.0);
        let cutoff = default_rank_tol(sub.rows, sub.cols) * smax;
        let rank = f.s.iter().filter(|&&s| s > cutoff).count();
        if rank >= d {
            return Err(Error::InvalidArgument(
                "cosparsity too large for operator: selected rows span the whole space".into(),
            ));
        }
        Some((f.v, rank))
    };

    let mut x = None;
    for _ in 0..100 {
        let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let mut p = g;
        if let Some((v, rank)) = &row_basis {
            for col in 0..*rank {
                let mut c = 0.0;
                for i in 0..d {
                    c += v.get(i, col) * p[i];
                }
                for i in 0..d {
                    p[i] -= c * v.get(i, col);
                }
            }
        }
        let norm = norm2(&p);
        if norm >= 1e-8 {
            x = Some(vscale(&p, 1.0 / norm));
            break;
        }
    }
    let x = x.ok_or_else(|| {
        Error::GenerationFailed("projection collapsed for 100 consecutive Gaussian draws".into())
    })?;

    if cosparsity > 0 {
        let sub = omega.matrix.select_rows(&cosupport)?;
        let residual = numerics::norm_inf(&sub.matvec(&x)?);
        if residual > 1e-9 {
            return Err(Error::GenerationFailed(format!(
                "cosupport residual {:.3e} exceeds 1e-9",
                residual
            )));
        }
    }

    Ok(SignalInstance {
        x,
        cosupport,
        k: n - cosparsity,
        generator: SignalGenerator::CosparseFrame,
        seed,
    })
}

/// Piecewise-constant image: a constant background plus
/// `num_components − 1` regions carved by seeded 4-neighbor random walks,
/// each filled with its own constant from U(−1, 1). The build is rejected
/// and retried until the image has exactly `num_components` maximal
/// 4-connected constant regions, so the reported structure is exact.
/// `k` counts the nonzero entries of the 2-D finite-difference transform.
pub fn gen_piecewise_image(
    n_side: usize,
    num_components: usize,
    seed: u64,
) -> Result<SignalInstance> {
    if n_side < 2 {
        return Err(Error::InvalidArgument(format!(
            "image side must be >= 2, got {}",
            n_side
        )));
    }
    if num_components == 0 {
        return Err(Error::InvalidArgument("need at least one component".into()));
    }
    if num_components > n_side * n_side {
        return Err(Error::InvalidArgument(format!(
            "{} components cannot fit in a {}x{} image",
            num_components, n_side, n_side
        )));
    }

    let n = n_side;
    let cells = n * n;
    let mut rng = rng_from_seed(seed);

    'attempt: for _ in 0..1000 {
        // Values first: pairwise separated so region boundaries stay sharp.
        let mut values: Vec<f64> = Vec::with_capacity(num_components);
        for _ in 0..num_components {
            let mut tries = 0;
            loop {
                let v: f64 = rng.gen_range(-1.0..1.0);
                if values.iter().all(|&u| (u - v).abs() > 1e-3) {
                    values.push(v);
                    break;
                }
                tries += 1;
                if tries > 5000 {
                    continue 'attempt;
                }
            }
        }

        let mut labels = vec![0usize; cells];
        for c in 1..num_components {
            let unclaimed: Vec<usize> =
                (0..cells).filter(|&i| labels[i] == 0).collect();
            if unclaimed.is_empty() {
                continue 'attempt;
            }
            let mut pos = unclaimed[rng.gen_range(0..unclaimed.len())];
            labels[pos] = c;
            let steps = rng.gen_range(n..=3 * n);
            for _ in 0..steps {
                let (i, j) = (pos % n, pos / n);
                let mut cand = [0usize; 4];
                let mut count = 0;
                if i > 0 {
                    cand[count] = pos - 1;
                    count += 1;
                }
                if i + 1 < n {
                    cand[count] = pos + 1;
                    count += 1;
                }
                if j > 0 {
                    cand[count] = pos - n;
                    count += 1;
                }
                if j + 1 < n {
                    cand[count] = pos + n;
                    count += 1;
                }
                let mut open = [0usize; 4];
                let mut open_count = 0;
                for &c2 in &cand[..count] {
                    if labels[c2] == 0 || labels[c2] == labels[pos] {
                        open[open_count] = c2;
                        open_count += 1;
                    }
                }
                if open_count == 0 {
                    break;
                }
                pos = open[rng.gen_range(0..open_count)];
                labels[pos] = c;
            }
        }

        let x: Vec<f64> = labels.iter().map(|&l| values[l]).collect();
        if count_constant_regions(&x, n) != num_components {
            continue 'attempt;
        }

        let dif = dif_2d(n)?;
        let w = dif.apply(&x)?;
        let cosupport: Vec<usize> = (0..w.len()).filter(|&i| w[i].abs() <= 1e-9).collect();
        let k = w.len() - cosupport.len();
        return Ok(SignalInstance {
            x,
            cosupport,
            k,
            generator: SignalGenerator::PiecewiseImage,
            seed,
        });
    }
    Err(Error::GenerationFailed(format!(
        "no {}-component image realized in 1000 attempts (side {})",
        num_components, n_side
    )))
}

/// Maximal 4-connected regions of exactly-equal values in a column-stacked
/// n×n image.
pub fn count_constant_regions(x: &[f64], n_side: usize) -> usize {
    let n = n_side;
    let cells = n * n;
    debug_assert_eq!(x.len(), cells);
    let mut seen = vec![false; cells];
    let mut regions = 0;
    let mut stack = Vec::new();
    for start in 0..cells {
        if seen[start] {
            continue;
        }
        regions += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(p) = stack.pop() {
            let (i, j) = (p % n, p / n);
            let mut push = |q: usize| {
                if !seen[q] && x[q] == x[p] {
                    seen[q] = true;
                    stack.push(q);
                }
            };
            if i > 0 {
                push(p - 1);
            }
            if i + 1 < n {
                push(p + 1);
            }
            if j > 0 {
                push(p - n);
            }
            if j + 1 < n {
                push(p + n);
            }
        }
    }
    regions
}

/// Add noise to clean measurements; returns `(y, e)` with `y = y_clean + e`
/// so the oracle budget `‖e‖₂` stays available downstream.
pub fn apply_noise(y_clean: &[f64], model: &NoiseModel) -> Result<(Vec<f64>, Vec<f64>)> {
    model.validate()?;
    let m = y_clean.len();
    let e: Vec<f64> = match model.kind {
        NoiseKind::None => vec![0.0; m],
        NoiseKind::Gaussian => {
            let mut rng = rng_from_seed(model.seed);
            (0..m)
                .map(|_| model.sigma * rng.sample::<f64, _>(StandardNormal))
                .collect()
        }
        NoiseKind::BoundedAdversarial => {
            if m == 0 {
                vec![]
            } else {
                let mut rng = rng_from_seed(model.seed);
                loop {
                    let u: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
                    let norm = norm2(&u);
                    if norm > 1e-12 {
                        break vscale(&u, model.epsilon / norm);
                    }
                }
            }
        }
    };
    let y = numerics::vadd(y_clean, &e);
    Ok((y, e))
}

// ── serialization ────────────────────────────────────────────────────────

#[derive(Debug, Serialize, Deserialize)]
struct SignalSidecar {
    generator: SignalGenerator,
    seed: u64,
    k: usize,
    cosupport: Vec<usize>,
}

fn csv_path(base: &Path) -> PathBuf {
    PathBuf::from(format!("{}.csv", base.display()))
}

fn json_path(base: &Path) -> PathBuf {
    PathBuf::from(format!("{}.json", base.display()))
}

pub fn write_signal(sig: &SignalInstance, base: &Path) -> Result<()> {
    write_vector_csv(&sig.x, &csv_path(base))?;
    let sidecar = SignalSidecar {
        generator: sig.generator,
        seed: sig.seed,
        k: sig.k,
        cosupport: sig.cosupport.clone(),
    };
    let path = json_path(base);
    let text = serde_json::to_string_pretty(&sidecar).map_err(|e| Error::Json {
        path: path.display().to_string(),
        source: e,
    })?;
    std::fs::write(&path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_signal(base: &Path) -> Result<SignalInstance> {
    let x = read_vector_csv(&csv_path(base))?;
    let jpath = json_path(base);
    let text =
        std::fs::read_to_string(&jpath).map_err(|e| Error::io(jpath.display().to_string(), e))?;
    let sidecar: SignalSidecar = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: jpath.display().to_string(),
        source: e,
    })?;
    Ok(SignalInstance {
        x,
        cosupport: sidecar.cosupport,
        k: sidecar.k,
        generator: sidecar.generator,
        seed: sidecar.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::DenseMatrix;
    use crate::operators::{random_tight_frame, OperatorKind};

    #[test]
    fn cosparse_identity_operator_zeroes_selected_entries() {
        let eye = AnalysisOperator::from_matrix(DenseMatrix::identity(4), OperatorKind::Frame);
        let sig = gen_cosparse(&eye, 2, 9).unwrap();
        assert_eq!(sig.cosupport.len(), 2);
        assert_eq!(sig.k, 2);
        for &i in &sig.cosupport {
            assert!(sig.x[i].abs() <= 1e-12);
        }
        assert!((norm2(&sig.x) - 1.0).abs() <= 1e-10);
        let zeros = sig.x.iter().filter(|v| v.abs() <= 1e-9).count();
        assert_eq!(zeros, 2);
    }

    #[test]
    fn cosparse_frame_instance_matches_design_dimensions() {
        let omega = random_tight_frame(144, 120, 4).unwrap();
        let sig = gen_cosparse(&omega, 110, 4).unwrap();
        assert_eq!(sig.k, 34);
        assert!((norm2(&sig.x) - 1.0).abs() <= 1e-10);
        let w = omega.apply(&sig.x).unwrap();
        let nnz = w.iter().filter(|v| v.abs() > 1e-9).count();
        assert!(nnz <= 34, "‖Ωx‖₀ = {} > 34", nnz);
        // Intrinsic dimension: the 110 selected rows of a generic tight
        // frame are independent, leaving a 10-dimensional subspace.
        let sub = omega.matrix.select_rows(&sig.cosupport).unwrap();
        let f = svd(&sub).unwrap();
        let cutoff = default_rank_tol(sub.rows, sub.cols) * f.s[0];
        let rank = f.s.iter().filter(|&&s| s > cutoff).count();
        assert_eq!(sub.cols - rank, 10);
    }

    #[test]
    fn cosparse_is_deterministic_per_seed() {
        let omega = random_tight_frame(8, 6, 17).unwrap();
        let a = gen_cosparse(&omega, 4, 55).unwrap();
        let b = gen_cosparse(&omega, 4, 55).unwrap();
        assert_eq!(a.cosupport, b.cosupport);
        let bits_a: Vec<u64> = a.x.iter().map(|v| v.to_bits()).collect();
        let bits_b: Vec<u64> = b.x.iter().map(|v| v.to_bits()).collect();
        assert_eq!(bits_a, bits_b);
        let c = gen_cosparse(&omega, 4, 56).unwrap();
        let bits_c: Vec<u64> = c.x.iter().map(|v| v.to_bits()).collect();
        assert_ne!(bits_a, bits_c);
    }

    #[test]
    fn cosparse_rejects_full_rank_cosupport() {
        let eye = AnalysisOperator::from_matrix(DenseMatrix::identity(4), OperatorKind::Frame);
        let err = gen_cosparse(&eye, 4, 1).unwrap_err();
        assert!(err.to_string().contains("cosparsity too large"));
        assert!(gen_cosparse(&eye, 5, 1).is_err());
    }

    #[test]
    fn piecewise_image_has_exact_component_count() {
        let sig = gen_piecewise_image(14, 4, 2).unwrap();
        assert_eq!(sig.x.len(), 196);
        assert_eq!(count_constant_regions(&sig.x, 14), 4);
        assert!(sig.k < 364);
        // k recomputed independently from the transform.
        let dif = dif_2d(14).unwrap();
        let w = dif.apply(&sig.x).unwrap();
        let nnz = w.iter().filter(|v| v.abs() > 1e-9).count();
        assert_eq!(sig.k, nnz);
        assert_eq!(sig.cosupport.len(), 364 - nnz);
    }

    #[test]
    fn piecewise_single_component_is_constant() {
        let sig = gen_piecewise_image(6, 1, 77).unwrap();
        assert_eq!(sig.k, 0);
        assert!(sig.x.iter().all(|&v| v == sig.x[0]));
        assert_eq!(count_constant_regions(&sig.x, 6), 1);
    }

    #[test]
    fn piecewise_rejects_impossible_requests() {
        assert!(gen_piecewise_image(2, 5, 0).is_err());
        assert!(gen_piecewise_image(1, 1, 0).is_err());
        assert!(gen_piecewise_image(4, 0, 0).is_err());
    }

    #[test]
    fn piecewise_is_deterministic_per_seed() {
        let a = gen_piecewise_image(8, 3, 5).unwrap();
        let b = gen_piecewise_image(8, 3, 5).unwrap();
        let bits = |s: &SignalInstance| s.x.iter().map(|v| v.to_bits()).collect::<Vec<u64>>();
        assert_eq!(bits(&a), bits(&b));
        assert_eq!(a.cosupport, b.cosupport);
    }

    #[test]
    fn noise_none_is_exact_passthrough() {
        let y = vec![1.0, -2.0, 3.0];
        let (out, e) = apply_noise(&y, &NoiseModel::none()).unwrap();
        assert_eq!(out, y);
        assert!(e.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn adversarial_noise_has_exact_budget() {
        let y = vec![0.0; 40];
        let model = NoiseModel::bounded_adversarial(0.5, 8);
        let (_, e) = apply_noise(&y, &model).unwrap();
        assert!((norm2(&e) - 0.5).abs() <= 1e-12);
        let (_, e2) = apply_noise(&y, &model).unwrap();
        assert_eq!(e, e2);
    }

    #[test]
    fn gaussian_noise_norm_matches_chi_mean() {
        // E‖e‖₂ for 60 iid N(0, σ²) entries is ≈ σ·√60 (within a percent).
        let y = vec![0.0; 60];
        let sigma = 0.01;
        let mut acc = 0.0;
        for s in 0..1000u64 {
            let (_, e) = apply_noise(&y, &NoiseModel::gaussian(sigma, s)).unwrap();
            acc += norm2(&e);
        }
        let mean = acc / 1000.0;
        let expect = sigma * 60f64.sqrt();
        assert!(
            (mean - expect).abs() <= 0.05 * expect,
            "mean {} vs {}",
            mean,
            expect
        );
    }

    #[test]
    fn noise_rejects_bad_parameters() {
        assert!(apply_noise(&[1.0], &NoiseModel::gaussian(-0.1, 0)).is_err());
        assert!(apply_noise(&[1.0], &NoiseModel::bounded_adversarial(f64::NAN, 0)).is_err());
    }

    #[test]
    fn signal_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let base = dir.path().join("sig");
        let omega = random_tight_frame(10, 7, 3).unwrap();
        let sig = gen_cosparse(&omega, 6, 13).unwrap();
        write_signal(&sig, &base).unwrap();
        let back = read_signal(&base).unwrap();
        assert_eq!(back.k, sig.k);
        assert_eq!(back.cosupport, sig.cosupport);
        assert_eq!(back.generator, SignalGenerator::CosparseFrame);
        assert_eq!(back.seed, 13);
        let bits_a: Vec<u64> = sig.x.iter().map(|v| v.to_bits()).collect();
        let bits_b: Vec<u64> = back.x.iter().map(|v| v.to_bits()).collect();
        assert_eq!(bits_a, bits_b);
    }
}
