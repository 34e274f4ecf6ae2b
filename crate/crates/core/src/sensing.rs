//! Measurement ensembles: plain Gaussian sensing of the signal, composed
//! transform-domain sensing `M = AΩ`, and the stacked map `[AΩ; B]` that
//! adds a few direct measurements. Also RIP and coherence diagnostics.

use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial_capped, Combinations};
use crate::error::{Error, Result};
use crate::numerics::{self, read_matrix_csv, svd, write_matrix_csv, DenseMatrix};
use crate::operators::AnalysisOperator;
use crate::par::map_indexed;
use crate::rng::{mix, rng_from_seed};
use crate::signals::{apply_noise, NoiseModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    Plain,
    ComposedFrame,
    Stacked,
}

/// A sensing configuration with its effective map `M` materialized.
#[derive(Debug, Clone)]
pub struct MeasurementEnsemble {
    pub kind: EnsembleKind,
    /// Transform-domain block (or the whole map for `plain`).
    pub a: DenseMatrix,
    /// Direct-measurement block for `stacked`.
    pub b: Option<DenseMatrix>,
    pub omega: Option<AnalysisOperator>,
    /// Effective sensing map applied to the signal.
    pub m: DenseMatrix,
    pub seed: u64,
}

impl MeasurementEnsemble {
    pub fn num_measurements(&self) -> usize {
        self.m.rows
    }

    pub fn signal_dim(&self) -> usize {
        self.m.cols
    }

    /// Row where the direct-measurement block starts, for stacked maps.
    pub fn split_boundary(&self) -> Option<usize> {
        match self.kind {
            EnsembleKind::Stacked => Some(self.a.rows),
            _ => None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// i.i.d. N(0,1) matrix, optionally with every column rescaled to unit
/// ℓ2-norm.
pub fn gaussian_matrix(m: usize, n: usize, unit_columns: bool, seed: u64) -> Result<DenseMatrix> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "gaussian matrix dimensions must be positive, got {}x{}",
            m, n
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut g = DenseMatrix::from_fn(m, n, |_, _| rng.sample(StandardNormal));
    if unit_columns {
        for j in 0..n {
            let norm = numerics::norm2(&g.col(j));
            if norm > 0.0 {
                for i in 0..m {
                    g.set(i, j, g.get(i, j) / norm);
                }
            }
        }
    }
    Ok(g)
}

/// i.i.d. N(0, 1/m) matrix; the classical scaling under which Gaussian
/// matrices satisfy the RIP with high probability.
pub fn gaussian_matrix_scaled(m: usize, n: usize, seed: u64) -> Result<DenseMatrix> {
    let mut g = gaussian_matrix(m, n, false, seed)?;
    let s = 1.0 / (m as f64).sqrt();
    g.scale_in_place(s);
    Ok(g)
}

/// Sense the signal directly: `y = A x`.
pub fn plain_ensemble(a: DenseMatrix) -> MeasurementEnsemble {
    MeasurementEnsemble {
        m: a.clone(),
        kind: EnsembleKind::Plain,
        a,
        b: None,
        omega: None,
        seed: 0,
    }
}

/// Sense the transform coefficients of a frame: `y = A(Ωx)`, `M = AΩ`.
pub fn compose_frame_ensemble(
    a: DenseMatrix,
    omega: AnalysisOperator,
) -> Result<MeasurementEnsemble> {
    if a.cols != omega.num_atoms() {
        return Err(Error::DimensionMismatch(format!(
            "A has {} columns but the operator emits {} coefficients",
            a.cols,
            omega.num_atoms()
        )));
    }
    let m = a.matmul(&omega.matrix)?;
    Ok(MeasurementEnsemble {
        kind: EnsembleKind::ComposedFrame,
        a,
        b: None,
        omega: Some(omega),
        m,
        seed: 0,
    })
}

/// Transform-domain sensing stacked with direct measurements:
/// `y = [AΩ; B] x`, measured as the concatenation (y₁, y₂).
pub fn compose_stacked_ensemble(
    a: DenseMatrix,
    omega: AnalysisOperator,
    b: DenseMatrix,
) -> Result<MeasurementEnsemble> {
    if a.cols != omega.num_atoms() {
        return Err(Error::DimensionMismatch(format!(
            "A has {} columns but the operator emits {} coefficients",
            a.cols,
            omega.num_atoms()
        )));
    }
    if b.cols != omega.signal_dim() {
        return Err(Error::DimensionMismatch(format!(
            "B has {} columns but the signal dimension is {}",
            b.cols,
            omega.signal_dim()
        )));
    }
    let top = a.matmul(&omega.matrix)?;
    let m = DenseMatrix::vstack(&[&top, &b])?;
    Ok(MeasurementEnsemble {
        kind: EnsembleKind::Stacked,
        a,
        b: Some(b),
        omega: Some(omega),
        m,
        seed: 0,
    })
}

#[derive(Debug, Clone)]
pub struct Measurement {
    pub y: Vec<f64>,
    pub e: Vec<f64>,
    /// Index where y₂ starts for stacked ensembles.
    pub split: Option<usize>,
}

impl Measurement {
    pub fn y1(&self) -> &[f64] {
        match self.split {
            Some(s) => &self.y[..s],
            None => &self.y,
        }
    }

    pub fn y2(&self) -> &[f64] {
        match self.split {
            Some(s) => &self.y[s..],
            None => &[],
        }
    }

    pub fn e1(&self) -> &[f64] {
        match self.split {
            Some(s) => &self.e[..s],
            None => &self.e,
        }
    }

    pub fn e2(&self) -> &[f64] {
        match self.split {
            Some(s) => &self.e[s..],
            None => &[],
        }
    }
}

pub fn measure(
    ens: &MeasurementEnsemble,
    x: &[f64],
    noise: &NoiseModel,
) -> Result<Measurement> {
    let y_clean = ens.m.matvec(x)?;
    let (y, e) = apply_noise(&y_clean, noise)?;
    Ok(Measurement {
        y,
        e,
        split: ens.split_boundary(),
    })
}

/// Largest normalized inner product between distinct columns.
pub fn mutual_coherence(m: &DenseMatrix) -> Result<f64> {
    let cols: Vec<Vec<f64>> = (0..m.cols).map(|j| m.col(j)).collect();
    let norms: Vec<f64> = cols.iter().map(|c| numerics::norm2(c)).collect();
    for (j, &n) in norms.iter().enumerate() {
        if n == 0.0 {
            return Err(Error::InvalidArgument(format!(
                "column {} is zero; coherence undefined",
                j
            )));
        }
    }
    let mut best = 0.0f64;
    for i in 0..cols.len() {
        for j in (i + 1)..cols.len() {
            let c = numerics::dot(&cols[i], &cols[j]).abs() / (norms[i] * norms[j]);
            best = best.max(c);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RipEstimate {
    pub k: usize,
    /// Max observed |σ²(M_S) − 1|; a lower bound on the true δ_k.
    pub delta_hat: f64,
    pub supports_sampled: usize,
    pub seed: u64,
}

const RIP_EXHAUSTIVE_CAP: u128 = 100_000;

/// Monte-Carlo restricted-isometry probe: max |σ²(M_S) − 1| over sampled
/// size-k column supports. Switches to exhaustive enumeration when all
/// C(n, k) supports fit under the requested budget (and a hard cap).
pub fn rip_estimate(
    m: &DenseMatrix,
    k: usize,
    num_supports: usize,
    seed: u64,
) -> Result<RipEstimate> {
    if k == 0 || k > m.cols {
        return Err(Error::InvalidArgument(format!(
            "rip_estimate needs 1 <= k <= {}, got {}",
            m.cols, k
        )));
    }
    let total = binomial_capped(m.cols, k, RIP_EXHAUSTIVE_CAP);
    let exhaustive = total <= num_supports as u128 && total <= RIP_EXHAUSTIVE_CAP;

    let support_delta = |s: &[usize]| -> Result<f64> {
        let sub = m.select_columns(s)?;
        let f = svd(&sub)?;
        let smax = f.s.first().copied().unwrap_or(0.0);
        let smin = if sub.rows >= sub.cols {
            f.s.last().copied().unwrap_or(0.0)
        } else {
            0.0
        };
        Ok((smax * smax - 1.0).max(1.0 - smin * smin).max(0.0))
    };

    let (deltas, sampled): (Vec<Result<f64>>, usize) = if exhaustive {
        let supports: Vec<Vec<usize>> = Combinations::new(m.cols, k).collect();
        let n = supports.len();
        (
            map_indexed(n, |i| support_delta(&supports[i])),
            n,
        )
    } else {
        let n_cols = m.cols;
        (
            map_indexed(num_supports, |i| {
                let mut rng = rng_from_seed(mix(&[seed, i as u64]));
                let mut s: Vec<usize> = sample(&mut rng, n_cols, k).into_vec();
                s.sort_unstable();
                support_delta(&s)
            }),
            num_supports,
        )
    };

    let mut delta_hat = 0.0f64;
    for d in deltas {
        delta_hat = delta_hat.max(d?);
    }
    Ok(RipEstimate {
        k,
        delta_hat,
        supports_sampled: sampled,
        seed,
    })
}

// ── serialization ────────────────────────────────────────────────────────

#[derive(Debug, Serialize, Deserialize)]
struct EnsembleSidecar {
    kind: EnsembleKind,
    seed: u64,
    split: Option<usize>,
}

fn block_path(base: &Path, block: &str) -> PathBuf {
    PathBuf::from(format!("{}.{}.csv", base.display(), block))
}

/// Writes `{base}.a.csv`, `{base}.b.csv` (when present), `{base}.m.csv`
/// and `{base}.json`.
pub fn write_ensemble(ens: &MeasurementEnsemble, base: &Path) -> Result<()> {
    write_matrix_csv(&ens.a, &block_path(base, "a"))?;
    if let Some(b) = &ens.b {
        write_matrix_csv(b, &block_path(base, "b"))?;
    }
    write_matrix_csv(&ens.m, &block_path(base, "m"))?;
    let sidecar = EnsembleSidecar {
        kind: ens.kind,
        seed: ens.seed,
        split: ens.split_boundary(),
    };
    let path = PathBuf::from(format!("{}.json", base.display()));
    let text = serde_json::to_string_pretty(&sidecar).map_err(|e| Error::Json {
        path: path.display().to_string(),
        source: e,
    })?;
    std::fs::write(&path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Restores the blocks and the effective map; the analysis operator is not
/// part of the ensemble files and comes back as absent.
pub fn read_ensemble(base: &Path) -> Result<MeasurementEnsemble> {
    let jpath = PathBuf::from(format!("{}.json", base.display()));
    let text =
        std::fs::read_to_string(&jpath).map_err(|e| Error::io(jpath.display().to_string(), e))?;
    let sidecar: EnsembleSidecar = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: jpath.display().to_string(),
        source: e,
    })?;
    let a = read_matrix_csv(&block_path(base, "a"))?;
    let b = match sidecar.kind {
        EnsembleKind::Stacked => Some(read_matrix_csv(&block_path(base, "b"))?),
        _ => None,
    };
    let m = read_matrix_csv(&block_path(base, "m"))?;
    Ok(MeasurementEnsemble {
        kind: sidecar.kind,
        a,
        b,
        omega: None,
        m,
        seed: sidecar.seed,
    })
}
