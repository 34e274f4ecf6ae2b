//! Analysis operators: random tight frames, finite differences in 2 and L
//! dimensions, the bivariate Haar transform, and the partial-frame
//! admissibility check for operators that are not frames on their own.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    self, default_rank_tol, read_matrix_csv, spectral_norm, svd, write_matrix_csv, DenseMatrix,
};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Frame,
    Dif2d,
    DifLd,
    PartialFrame,
    Haar,
}

impl OperatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OperatorKind::Frame => "frame",
            OperatorKind::Dif2d => "dif2d",
            OperatorKind::DifLd => "dif_ld",
            OperatorKind::PartialFrame => "partial_frame",
            OperatorKind::Haar => "haar",
        }
    }
}

/// An analysis operator Ω ∈ R^{n×d} applied as `w = Ω x`. Rows are the
/// analysis atoms; a signal is cosparse when many entries of `Ω x` vanish.
#[derive(Debug, Clone)]
pub struct AnalysisOperator {
    pub matrix: DenseMatrix,
    pub kind: OperatorKind,
    /// σ_min when the operator is a frame; set by construction or
    /// [`frame_bounds`].
    pub lower_frame_bound: Option<f64>,
    pub upper_frame_bound: Option<f64>,
    /// Image dimensions for operators defined on column-stacked arrays.
    pub geometry: Option<Vec<usize>>,
    pub seed: Option<u64>,
}

impl AnalysisOperator {
    pub fn from_matrix(matrix: DenseMatrix, kind: OperatorKind) -> Self {
        AnalysisOperator {
            matrix,
            kind,
            lower_frame_bound: None,
            upper_frame_bound: None,
            geometry: None,
            seed: None,
        }
    }

    /// Number of analysis coefficients n.
    pub fn num_atoms(&self) -> usize {
        self.matrix.rows
    }

    /// Signal dimension d.
    pub fn signal_dim(&self) -> usize {
        self.matrix.cols
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.matrix.matvec(x)
    }

    pub fn pseudo_inverse(&self) -> Result<DenseMatrix> {
        numerics::pseudo_inverse_default(&self.matrix)
    }
}

/// Parseval tight frame: SVD of an iid Gaussian n×d matrix, keeping U·Vᵀ.
/// Columns are orthonormal, so ΩᵀΩ = I_d and both frame bounds are 1.
pub fn random_tight_frame(n: usize, d: usize, seed: u64) -> Result<AnalysisOperator> {
    if d == 0 || n == 0 {
        return Err(Error::InvalidArgument(
            "tight frame dimensions must be positive".into(),
        ));
    }
    if n < d {
        return Err(Error::InvalidArgument(format!(
            "a tight frame for R^{} needs at least {} rows, got {}",
            d, d, n
        )));
    }
    let mut rng = rng_from_seed(seed);
    let g = DenseMatrix::from_fn(n, d, |_, _| rng.sample(StandardNormal));
    let f = svd(&g)?;
    // u is n×d with orthonormal columns, v is d×d orthogonal.
    let omega = f.u.matmul(&f.v.transpose())?;
    Ok(AnalysisOperator {
        matrix: omega,
        kind: OperatorKind::Frame,
        lower_frame_bound: Some(1.0),
        upper_frame_bound: Some(1.0),
        geometry: None,
        seed: Some(seed),
    })
}

/// Anisotropic finite differences on column-stacked N×N images: all
/// vertical differences first (scanning columns), then all horizontal.
/// Every row holds exactly one +1 and one −1, so constants map to zero
/// exactly.
pub fn dif_2d(n_side: usize) -> Result<AnalysisOperator> {
    if n_side < 2 {
        return Err(Error::InvalidArgument(format!(
            "dif_2d needs image side >= 2, got {}",
            n_side
        )));
    }
    let n = n_side;
    let d = n * n;
    let rows = 2 * n * (n - 1);
    let mut m = DenseMatrix::zeros(rows, d);
    let mut r = 0;
    for j in 0..n {
        for i in 0..n - 1 {
            m.set(r, (i + 1) + j * n, 1.0);
            m.set(r, i + j * n, -1.0);
            r += 1;
        }
    }
    for j in 0..n - 1 {
        for i in 0..n {
            m.set(r, i + (j + 1) * n, 1.0);
            m.set(r, i + j * n, -1.0);
            r += 1;
        }
    }
    debug_assert_eq!(r, rows);
    Ok(AnalysisOperator {
        matrix: m,
        kind: OperatorKind::Dif2d,
        lower_frame_bound: None,
        upper_frame_bound: None,
        geometry: Some(vec![n, n]),
        seed: None,
    })
}

/// Finite differences along every axis of a column-stacked L-dimensional
/// array (axis 0 varies fastest). Reduces to [`dif_2d`] for dims = (N, N).
pub fn dif_ld(dims: &[usize]) -> Result<AnalysisOperator> {
    if dims.is_empty() {
        return Err(Error::InvalidArgument("dif_ld needs at least one axis".into()));
    }
    if let Some(bad) = dims.iter().find(|&&s| s < 2) {
        return Err(Error::InvalidArgument(format!(
            "dif_ld needs every axis length >= 2, got {}",
            bad
        )));
    }
    let total: usize = dims.iter().product();
    let rows: usize = dims.iter().map(|&s| (s - 1) * (total / s)).sum();
    let mut m = DenseMatrix::zeros(rows, total);
    let mut r = 0;
    let mut stride = 1usize;
    for &s in dims {
        for t in 0..total {
            let idx = (t / stride) % s;
            if idx + 1 < s {
                m.set(r, t + stride, 1.0);
                m.set(r, t, -1.0);
                r += 1;
            }
        }
        stride *= s;
    }
    debug_assert_eq!(r, rows);
    Ok(AnalysisOperator {
        matrix: m,
        kind: OperatorKind::DifLd,
        lower_frame_bound: None,
        upper_frame_bound: None,
        geometry: Some(dims.to_vec()),
        seed: None,
    })
}

/// Multi-level bivariate Haar transform on column-stacked N×N images,
/// orthonormal (each atom unit norm), N a power of two. Coefficients keep
/// the in-place pyramid layout with the DC atom at index 0.
pub fn bivariate_haar(n_side: usize) -> Result<AnalysisOperator> {
    if n_side < 2 || !n_side.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "bivariate_haar needs the image side to be a power of two >= 2, got {}",
            n_side
        )));
    }
    let n = n_side;
    let d = n * n;
    let mut h = DenseMatrix::zeros(d, d);
    let mut work = vec![0.0; d];
    for c in 0..d {
        work.iter_mut().for_each(|v| *v = 0.0);
        work[c] = 1.0;
        haar_forward_in_place(&mut work, n);
        for r in 0..d {
            h.set(r, c, work[r]);
        }
    }
    Ok(AnalysisOperator {
        matrix: h,
        kind: OperatorKind::Haar,
        lower_frame_bound: Some(1.0),
        upper_frame_bound: Some(1.0),
        geometry: Some(vec![n, n]),
        seed: None,
    })
}

/// One full orthonormal Haar pyramid on a column-stacked n×n image
/// (pixel (i,j) at index i + j·n), recursing on the low-pass block.
fn haar_forward_in_place(x: &mut [f64], n: usize) {
    debug_assert_eq!(x.len(), n * n);
    let at = |i: usize, j: usize| i + j * n;
    let mut s = n;
    let mut buf = vec![0.0; n * n];
    while s >= 2 {
        let h = s / 2;
        for bj in 0..h {
            for bi in 0..h {
                let a = x[at(2 * bi, 2 * bj)];
                let b = x[at(2 * bi + 1, 2 * bj)];
                let c = x[at(2 * bi, 2 * bj + 1)];
                let d = x[at(2 * bi + 1, 2 * bj + 1)];
                buf[at(bi, bj)] = (a + b + c + d) / 2.0;
                buf[at(bi + h, bj)] = (a - b + c - d) / 2.0;
                buf[at(bi, bj + h)] = (a + b - c - d) / 2.0;
                buf[at(bi + h, bj + h)] = (a - b - c + d) / 2.0;
            }
        }
        for j in 0..s {
            for i in 0..s {
                x[at(i, j)] = buf[at(i, j)];
            }
        }
        s = h;
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FrameBounds {
    pub lower: f64,
    pub upper: f64,
    pub is_frame: bool,
}

/// Extreme singular values of the operator: lower bound A = σ_min over the
/// signal space, upper bound B = σ_max. Rank deficiency (or fewer rows than
/// columns) reports A = 0 with the frame flag cleared. Bounds are recorded
/// on the operator.
pub fn frame_bounds(op: &mut AnalysisOperator) -> Result<FrameBounds> {
    let m = &op.matrix;
    let f = svd(m)?;
    let upper = f.s.first().copied().unwrap_or(0.0);
    let mut lower = if m.rows >= m.cols {
        f.s.last().copied().unwrap_or(0.0)
    } else {
        0.0
    };
    let is_frame = lower > default_rank_tol(m.rows, m.cols) * upper && lower > 0.0;
    if !is_frame {
        lower = 0.0;
    }
    op.lower_frame_bound = Some(lower);
    op.upper_frame_bound = Some(upper);
    Ok(FrameBounds {
        lower,
        upper,
        is_frame,
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PartialFrameCheck {
    /// σ_min(B·Ω̃†): how well the direct measurements see the completion.
    pub c11: f64,
    /// ‖B·(I − Ω̃†Ω̃)‖₂: leakage outside the completion's row space.
    pub c12: f64,
    /// Lower frame bound of the stacked [Ω; Ω̃].
    pub lower_bound_a: f64,
    pub admissible: bool,
}

/// Admissibility of a frame completion: Ω on its own need not be a frame,
/// but stacked with the completion rows Ω̃ it must be, and the direct
/// measurement matrix B must see Ω̃'s contribution strongly enough:
/// c12 / (c11 · A) < 1.
pub fn partial_frame_check(
    omega: &AnalysisOperator,
    omega_tilde: &DenseMatrix,
    b: &DenseMatrix,
) -> Result<PartialFrameCheck> {
    let d = omega.signal_dim();
    if omega_tilde.rows > 0 && omega_tilde.cols != d {
        return Err(Error::DimensionMismatch(format!(
            "completion has {} columns, operator acts on R^{}",
            omega_tilde.cols, d
        )));
    }
    if b.rows > 0 && b.cols != d {
        return Err(Error::DimensionMismatch(format!(
            "direct measurement matrix has {} columns, operator acts on R^{}",
            b.cols, d
        )));
    }

    let stacked = if omega_tilde.rows == 0 {
        omega.matrix.clone()
    } else {
        DenseMatrix::vstack(&[&omega.matrix, omega_tilde])?
    };
    let fs = svd(&stacked)?;
    let upper = fs.s.first().copied().unwrap_or(0.0);
    let mut a = if stacked.rows >= stacked.cols {
        fs.s.last().copied().unwrap_or(0.0)
    } else {
        0.0
    };
    if a <= default_rank_tol(stacked.rows, stacked.cols) * upper {
        a = 0.0;
    }

    if omega_tilde.rows == 0 {
        // Nothing was removed: the scheme needs no side information.
        return Ok(PartialFrameCheck {
            c11: 1.0,
            c12: 0.0,
            lower_bound_a: a,
            admissible: a > 0.0,
        });
    }

    let tilde_pinv = numerics::pseudo_inverse_default(omega_tilde)?;
    let b_pinv = b.matmul(&tilde_pinv)?;
    let fb = svd(&b_pinv)?;
    let mut c11 = if b_pinv.rows >= b_pinv.cols {
        fb.s.last().copied().unwrap_or(0.0)
    } else {
        0.0
    };
    let c11_max = fb.s.first().copied().unwrap_or(0.0);
    if c11 <= default_rank_tol(b_pinv.rows, b_pinv.cols) * c11_max {
        c11 = 0.0;
    }

    // B(I − Ω̃†Ω̃) = B − (BΩ̃†)Ω̃
    let mut leak = b_pinv.matmul(omega_tilde)?;
    for (l, bv) in leak.data.iter_mut().zip(&b.data) {
        *l = bv - *l;
    }
    let c12 = spectral_norm(&leak)?;

    let admissible = a > 0.0 && c11 > 0.0 && c12 < c11 * a;
    Ok(PartialFrameCheck {
        c11,
        c12,
        lower_bound_a: a,
        admissible,
    })
}

// ── serialization ────────────────────────────────────────────────────────

#[derive(Debug, Serialize, Deserialize)]
struct OperatorSidecar {
    kind: OperatorKind,
    geometry: Option<Vec<usize>>,
    seed: Option<u64>,
    frame_bounds: Option<[f64; 2]>,
}

pub fn operator_csv_path(base: &Path) -> PathBuf {
    PathBuf::from(format!("{}.csv", base.display()))
}

pub fn operator_json_path(base: &Path) -> PathBuf {
    PathBuf::from(format!("{}.json", base.display()))
}

/// Writes `{base}.csv` (matrix) and `{base}.json` (kind, geometry, seed,
/// frame bounds).
pub fn write_operator(op: &AnalysisOperator, base: &Path) -> Result<()> {
    write_matrix_csv(&op.matrix, &operator_csv_path(base))?;
    let sidecar = OperatorSidecar {
        kind: op.kind,
        geometry: op.geometry.clone(),
        seed: op.seed,
        frame_bounds: match (op.lower_frame_bound, op.upper_frame_bound) {
            (Some(l), Some(u)) => Some([l, u]),
            _ => None,
        },
    };
    let path = operator_json_path(base);
    let text = serde_json::to_string_pretty(&sidecar).map_err(|e| Error::Json {
        path: path.display().to_string(),
        source: e,
    })?;
    std::fs::write(&path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_operator(base: &Path) -> Result<AnalysisOperator> {
    let matrix = read_matrix_csv(&operator_csv_path(base))?;
    let jpath = operator_json_path(base);
    let text =
        std::fs::read_to_string(&jpath).map_err(|e| Error::io(jpath.display().to_string(), e))?;
    let sidecar: OperatorSidecar = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: jpath.display().to_string(),
        source: e,
    })?;
    Ok(AnalysisOperator {
        matrix,
        kind: sidecar.kind,
        lower_frame_bound: sidecar.frame_bounds.map(|b| b[0]),
        upper_frame_bound: sidecar.frame_bounds.map(|b| b[1]),
        geometry: sidecar.geometry,
        seed: sidecar.seed,
    })
}
