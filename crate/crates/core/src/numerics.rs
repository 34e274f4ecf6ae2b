//! Dense linear algebra on f64, self-contained and deterministic.
//!
//! Everything here is plain loops over row-major storage. The matrices in
//! this crate stay small (a few hundred rows), so clarity and bit-for-bit
//! reproducibility win over BLAS. No randomness, no threading.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Default relative rank tolerance: singular values below
/// `1e-10 * max(rows, cols) * sigma_max` are treated as zero.
pub fn default_rank_tol(rows: usize, cols: usize) -> f64 {
    1e-10 * rows.max(cols).max(1) as f64
}

// ── vectors ──────────────────────────────────────────────────────────────

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).sum()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn vadd(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn vsub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn vscale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// `y += s * x`
pub fn axpy(s: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

/// `‖a − b‖₂ / ‖b‖₂`, with a tiny floor on the denominator.
pub fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    norm2(&vsub(a, b)) / norm2(b).max(f64::MIN_POSITIVE)
}

// ── dense matrix ─────────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    /// Row-major: entry (i, j) lives at `data[i * cols + j]`.
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(Error::DimensionMismatch(format!(
                    "row {} has {} entries, expected {}",
                    i,
                    row.len(),
                    c
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(DenseMatrix { rows: r, cols: c, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let c = self.cols;
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let arow = self.row(i);
            let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &aik) in arow.iter().enumerate() {
                if aik == 0.0 {
                    continue;
                }
                let brow = rhs.row(k);
                for (o, &bkj) in orow.iter_mut().zip(brow) {
                    *o += aik * bkj;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · rhs` without materializing the transpose.
    pub fn tr_mul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply ({}x{})ᵀ by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.cols, rhs.cols);
        for i in 0..self.rows {
            let arow = self.row(i);
            let brow = rhs.row(i);
            for (j, &aij) in arow.iter().enumerate() {
                if aij == 0.0 {
                    continue;
                }
                let orow = &mut out.data[j * rhs.cols..(j + 1) * rhs.cols];
                for (o, &bik) in orow.iter_mut().zip(brow) {
                    *o += aij * bik;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix times vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `selfᵀ · x` without materializing the transpose.
    pub fn tr_matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "({}x{})ᵀ times vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                axpy(xi, self.row(i), &mut out);
            }
        }
        Ok(out)
    }

    pub fn select_rows(&self, idx: &[usize]) -> Result<DenseMatrix> {
        let mut out = DenseMatrix::zeros(idx.len(), self.cols);
        for (r, &i) in idx.iter().enumerate() {
            if i >= self.rows {
                return Err(Error::InvalidArgument(format!(
                    "row index {} out of bounds for {} rows",
                    i, self.rows
                )));
            }
            out.row_mut(r).copy_from_slice(self.row(i));
        }
        Ok(out)
    }

    pub fn select_columns(&self, idx: &[usize]) -> Result<DenseMatrix> {
        for &j in idx {
            if j >= self.cols {
                return Err(Error::InvalidArgument(format!(
                    "column index {} out of bounds for {} columns",
                    j, self.cols
                )));
            }
        }
        let mut out = DenseMatrix::zeros(self.rows, idx.len());
        for i in 0..self.rows {
            let src = self.row(i);
            let dst = out.row_mut(i);
            for (c, &j) in idx.iter().enumerate() {
                dst[c] = src[j];
            }
        }
        Ok(out)
    }

    pub fn vstack(blocks: &[&DenseMatrix]) -> Result<DenseMatrix> {
        let cols = blocks.first().map_or(0, |b| b.cols);
        for b in blocks {
            if b.cols != cols {
                return Err(Error::DimensionMismatch(format!(
                    "vstack blocks disagree on column count: {} vs {}",
                    cols, b.cols
                )));
            }
        }
        let rows = blocks.iter().map(|b| b.rows).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for b in blocks {
            data.extend_from_slice(&b.data);
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        norm_inf(&self.data)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn scale_in_place(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    /// `self += s * I` (square only).
    pub fn add_scaled_identity(&mut self, s: f64) {
        debug_assert_eq!(self.rows, self.cols);
        for i in 0..self.rows {
            self.data[i * self.cols + i] += s;
        }
    }
}

/// Order-insensitive content hash, for reproducibility checks.
pub fn matrix_fingerprint(m: &DenseMatrix) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    let mut step = |x: u64| {
        h ^= x;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    };
    step(m.rows as u64);
    step(m.cols as u64);
    for v in &m.data {
        step(v.to_bits());
    }
    h
}

// ── singular value decomposition ─────────────────────────────────────────

/// Thin SVD: `m = u · diag(s) · vᵀ` with `u` (rows × r), `v` (cols × r),
/// r = min(rows, cols), and `s` sorted non-increasing.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: DenseMatrix,
    pub s: Vec<f64>,
    pub v: DenseMatrix,
}

const SVD_MAX_SWEEPS: usize = 60;
const SVD_ORTH_EPS: f64 = 1e-15;

/// One-sided Jacobi on columns. Orthogonality of the implicit Gram matrix
/// is driven below `SVD_ORTH_EPS` relative; zero singular directions get a
/// deterministic orthonormal completion so `uᵀu = I` always holds.
pub fn svd(m: &DenseMatrix) -> Result<SvdFactors> {
    if !m.is_finite() {
        return Err(Error::InvalidArgument(
            "svd input contains NaN or infinity".into(),
        ));
    }
    if m.rows < m.cols {
        let f = svd(&m.transpose())?;
        return Ok(SvdFactors {
            u: f.v,
            s: f.s,
            v: f.u,
        });
    }
    let rows = m.rows;
    let n = m.cols;
    if n == 0 {
        return Ok(SvdFactors {
            u: DenseMatrix::zeros(rows, 0),
            s: vec![],
            v: DenseMatrix::zeros(0, 0),
        });
    }

    // Work in column-major: w[j] is the j-th column of the rotating copy.
    let mut w: Vec<Vec<f64>> = (0..n).map(|j| m.col(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    let mut converged = false;
    let mut worst = 0.0f64;
    for _sweep in 0..SVD_MAX_SWEEPS {
        let mut rotated = false;
        worst = 0.0;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let (app, aqq, apq);
                {
                    let (cp, cq) = (&w[p], &w[q]);
                    app = dot(cp, cp);
                    aqq = dot(cq, cq);
                    apq = dot(cp, cq);
                }
                let scale = (app * aqq).sqrt();
                if scale == 0.0 || apq.abs() <= SVD_ORTH_EPS * scale {
                    continue;
                }
                worst = worst.max(apq.abs() / scale);
                rotated = true;
                let tau = (aqq - app) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (wl, wr) = split_pair(&mut w, p, q);
                rotate_pair(wl, wr, c, s);
                let (vl, vr) = split_pair(&mut v, p, q);
                rotate_pair(vl, vr, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged && worst > 1e-10 {
        return Err(Error::SvdNoConvergence {
            sweeps: SVD_MAX_SWEEPS,
            off: worst,
        });
    }

    // Singular values and descending order (stable on ties).
    let mut sigma: Vec<f64> = w.iter().map(|c| norm2(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sigma[b].partial_cmp(&sigma[a]).unwrap().then(a.cmp(&b)));
    let sigma_max = order.first().map_or(0.0, |&j| sigma[j]);
    let degenerate_below = sigma_max * f64::EPSILON * rows.max(n) as f64 * 16.0;

    let mut u = DenseMatrix::zeros(rows, n);
    let mut vmat = DenseMatrix::zeros(n, n);
    let mut ucols: Vec<Vec<f64>> = Vec::with_capacity(n);
    for (slot, &j) in order.iter().enumerate() {
        let s_j = sigma[j];
        let ucol = if s_j > degenerate_below && s_j > 0.0 {
            w[j].iter().map(|x| x / s_j).collect::<Vec<f64>>()
        } else {
            sigma[j] = 0.0;
            orthonormal_completion(rows, &ucols)
        };
        for i in 0..rows {
            u.set(i, slot, ucol[i]);
        }
        for i in 0..n {
            vmat.set(i, slot, v[j][i]);
        }
        ucols.push(ucol);
    }
    let s: Vec<f64> = order.iter().map(|&j| sigma[j]).collect();
    Ok(SvdFactors { u, s, v: vmat })
}

fn split_pair<'a>(cols: &'a mut [Vec<f64>], p: usize, q: usize) -> (&'a mut [f64], &'a mut [f64]) {
    debug_assert!(p < q);
    let (a, b) = cols.split_at_mut(q);
    (&mut a[p], &mut b[0])
}

fn rotate_pair(cp: &mut [f64], cq: &mut [f64], c: f64, s: f64) {
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// First standard basis vector with a large component outside span(existing),
/// projected and normalized. Deterministic.
fn orthonormal_completion(dim: usize, existing: &[Vec<f64>]) -> Vec<f64> {
    for cand in 0..dim {
        let mut e = vec![0.0; dim];
        e[cand] = 1.0;
        for col in existing {
            let c = dot(col, &e);
            axpy(-c, col, &mut e);
        }
        let n = norm2(&e);
        if n > 0.5 {
            return vscale(&e, 1.0 / n);
        }
    }
    // Unreachable while existing.len() < dim; keep a defined fallback.
    let mut e = vec![0.0; dim];
    if dim > 0 {
        e[0] = 1.0;
    }
    e
}

/// Largest singular value; 0 for empty matrices.
pub fn spectral_norm(m: &DenseMatrix) -> Result<f64> {
    if m.rows == 0 || m.cols == 0 {
        return Ok(0.0);
    }
    Ok(svd(m)?.s[0])
}

/// Orthonormal basis of the null space {x : m·x = 0}, as columns of a
/// cols × (cols − rank) matrix. Rank counts singular values above
/// `rank_tol · sigma_max`.
pub fn null_space_basis(m: &DenseMatrix, rank_tol: f64) -> Result<DenseMatrix> {
    let d = m.cols;
    if m.rows == 0 || d == 0 {
        return Ok(DenseMatrix::identity(d));
    }
    let f = svd(m)?;
    let smax = f.s.first().copied().unwrap_or(0.0);
    let cutoff = rank_tol * smax;
    let rank = f.s.iter().filter(|&&s| s > cutoff && s > 0.0).count();
    let row_space: Vec<Vec<f64>> = (0..rank).map(|k| f.v.col(k)).collect();
    let mut cols = row_space;
    let mut basis = DenseMatrix::zeros(d, d - rank);
    for slot in 0..(d - rank) {
        let b = orthonormal_completion(d, &cols);
        for i in 0..d {
            basis.set(i, slot, b[i]);
        }
        cols.push(b);
    }
    Ok(basis)
}

// ── pseudo-inverse and least squares ─────────────────────────────────────

/// Moore-Penrose pseudo-inverse. Singular values at or below
/// `rank_tol * sigma_max` are treated as zero.
pub fn pseudo_inverse(m: &DenseMatrix, rank_tol: f64) -> Result<DenseMatrix> {
    let f = svd(m)?;
    let cutoff = rank_tol * f.s.first().copied().unwrap_or(0.0);
    let r = f.s.len();
    // pinv = v · diag(1/s) · uᵀ
    let mut out = DenseMatrix::zeros(m.cols, m.rows);
    for k in 0..r {
        let s = f.s[k];
        if s <= cutoff || s == 0.0 {
            continue;
        }
        let inv = 1.0 / s;
        for i in 0..m.cols {
            let vik = f.v.get(i, k) * inv;
            if vik == 0.0 {
                continue;
            }
            let orow = out.row_mut(i);
            for (j, o) in orow.iter_mut().enumerate() {
                *o += vik * f.u.get(j, k);
            }
        }
    }
    Ok(out)
}

/// Pseudo-inverse with the default rank tolerance.
pub fn pseudo_inverse_default(m: &DenseMatrix) -> Result<DenseMatrix> {
    pseudo_inverse(m, default_rank_tol(m.rows, m.cols))
}

#[derive(Debug, Clone)]
pub struct LsSolution {
    pub x: Vec<f64>,
    pub rank_deficient: bool,
}

/// Minimize `‖a·x − b‖₂` by Householder QR. On detected rank deficiency
/// (or an underdetermined system) falls back to the minimum-norm solution
/// through the pseudo-inverse and flags it.
pub fn least_squares(a: &DenseMatrix, b: &[f64]) -> Result<LsSolution> {
    if b.len() != a.rows {
        return Err(Error::DimensionMismatch(format!(
            "least_squares: {}x{} matrix with rhs of length {}",
            a.rows,
            a.cols,
            b.len()
        )));
    }
    let (m, n) = (a.rows, a.cols);
    if n == 0 {
        return Ok(LsSolution {
            x: vec![],
            rank_deficient: false,
        });
    }
    if m < n {
        let x = pseudo_inverse_default(a)?.matvec(b)?;
        return Ok(LsSolution {
            x,
            rank_deficient: true,
        });
    }

    let mut r = a.clone();
    let mut c = b.to_vec();
    for k in 0..n {
        // Householder reflector for column k, rows k..m.
        let mut alpha = 0.0;
        for i in k..m {
            alpha += r.get(i, k) * r.get(i, k);
        }
        alpha = alpha.sqrt();
        if alpha == 0.0 {
            continue;
        }
        if r.get(k, k) > 0.0 {
            alpha = -alpha;
        }
        let mut v = vec![0.0; m - k];
        for i in k..m {
            v[i - k] = r.get(i, k);
        }
        v[0] -= alpha;
        let vtv = dot(&v, &v);
        if vtv == 0.0 {
            continue;
        }
        for j in k..n {
            let mut proj = 0.0;
            for i in k..m {
                proj += v[i - k] * r.get(i, j);
            }
            let f = 2.0 * proj / vtv;
            for i in k..m {
                let val = r.get(i, j) - f * v[i - k];
                r.set(i, j, val);
            }
        }
        let mut proj = 0.0;
        for i in k..m {
            proj += v[i - k] * c[i];
        }
        let f = 2.0 * proj / vtv;
        for i in k..m {
            c[i] -= f * v[i - k];
        }
        r.set(k, k, alpha);
        for i in (k + 1)..m {
            r.set(i, k, 0.0);
        }
    }

    let diag_max = (0..n).fold(0.0f64, |acc, k| acc.max(r.get(k, k).abs()));
    let diag_min = (0..n).fold(f64::INFINITY, |acc, k| acc.min(r.get(k, k).abs()));
    if diag_max == 0.0 || diag_min <= default_rank_tol(m, n) * diag_max {
        let x = pseudo_inverse_default(a)?.matvec(b)?;
        return Ok(LsSolution {
            x,
            rank_deficient: true,
        });
    }

    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let mut acc = c[k];
        for j in (k + 1)..n {
            acc -= r.get(k, j) * x[j];
        }
        x[k] = acc / r.get(k, k);
    }
    Ok(LsSolution {
        x,
        rank_deficient: false,
    })
}

// ── Cholesky ─────────────────────────────────────────────────────────────

#[derive(Debug, Clone)]
pub struct Cholesky {
    l: DenseMatrix,
}

/// Factor a symmetric positive definite matrix as `l · lᵀ`.
pub fn cholesky(a: &DenseMatrix) -> Result<Cholesky> {
    if a.rows != a.cols {
        return Err(Error::DimensionMismatch(format!(
            "cholesky needs a square matrix, got {}x{}",
            a.rows, a.cols
        )));
    }
    let n = a.rows;
    let mut l = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut acc = a.get(i, j);
            for k in 0..j {
                acc -= l.get(i, k) * l.get(j, k);
            }
            if i == j {
                if !(acc > 0.0) || !acc.is_finite() {
                    return Err(Error::NotPositiveDefinite { index: i, pivot: acc });
                }
                l.set(i, j, acc.sqrt());
            } else {
                l.set(i, j, acc / l.get(j, j));
            }
        }
    }
    Ok(Cholesky { l })
}

impl Cholesky {
    pub fn dim(&self) -> usize {
        self.l.rows
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.l.rows {
            return Err(Error::DimensionMismatch(format!(
                "cholesky solve: dimension {} factor with rhs of length {}",
                self.l.rows,
                b.len()
            )));
        }
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        Ok(x)
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.l.rows;
        for i in 0..n {
            let mut acc = x[i];
            let row = self.l.row(i);
            for k in 0..i {
                acc -= row[k] * x[k];
            }
            x[i] = acc / row[i];
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for k in (i + 1)..n {
                acc -= self.l.get(k, i) * x[k];
            }
            x[i] = acc / self.l.get(i, i);
        }
    }
}

// ── CSV serialization ────────────────────────────────────────────────────
//
// First line `rows,cols`, then one comma-separated line per row. Values are
// written with 17 significant digits so parsing reproduces every f64 bit.

pub fn matrix_to_csv_string(m: &DenseMatrix) -> String {
    let mut out = String::with_capacity(m.data.len() * 24 + 16);
    let _ = writeln!(out, "{},{}", m.rows, m.cols);
    for i in 0..m.rows {
        let row = m.row(i);
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{:.16e}", v);
        }
        out.push('\n');
    }
    out
}

pub fn matrix_from_csv_str(s: &str, origin: &str) -> Result<DenseMatrix> {
    let mut lines = s.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(origin, 1, "empty file"))?;
    let mut parts = header.split(',');
    let rows: usize = parts
        .next()
        .and_then(|t| t.trim().parse().ok())
        .ok_or_else(|| Error::parse(origin, 1, "header must be `rows,cols`"))?;
    let cols: usize = parts
        .next()
        .and_then(|t| t.trim().parse().ok())
        .ok_or_else(|| Error::parse(origin, 1, "header must be `rows,cols`"))?;
    if parts.next().is_some() {
        return Err(Error::parse(origin, 1, "header must be exactly `rows,cols`"));
    }
    let mut data = Vec::with_capacity(rows * cols);
    let mut seen = 0usize;
    for (lineno, line) in lines.enumerate() {
        if seen == rows && line.trim().is_empty() {
            continue;
        }
        if seen >= rows {
            return Err(Error::parse(
                origin,
                lineno + 2,
                format!("expected {} data rows, found more", rows),
            ));
        }
        if cols == 0 {
            if !line.trim().is_empty() {
                return Err(Error::parse(origin, lineno + 2, "expected empty row"));
            }
            seen += 1;
            continue;
        }
        let mut count = 0usize;
        for tok in line.split(',') {
            let v: f64 = tok.trim().parse().map_err(|_| {
                Error::parse(origin, lineno + 2, format!("bad number {:?}", tok.trim()))
            })?;
            if !v.is_finite() {
                return Err(Error::parse(origin, lineno + 2, "non-finite value"));
            }
            data.push(v);
            count += 1;
        }
        if count != cols {
            return Err(Error::parse(
                origin,
                lineno + 2,
                format!("expected {} values per row, got {}", cols, count),
            ));
        }
        seen += 1;
    }
    if seen != rows {
        return Err(Error::parse(
            origin,
            seen + 2,
            format!("expected {} data rows, got {}", rows, seen),
        ));
    }
    DenseMatrix::from_row_major(rows, cols, data)
}

pub fn write_matrix_csv(m: &DenseMatrix, path: &Path) -> Result<()> {
    std::fs::write(path, matrix_to_csv_string(m))
        .map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_matrix_csv(path: &Path) -> Result<DenseMatrix> {
    let s = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    matrix_from_csv_str(&s, &path.display().to_string())
}

/// Vectors are stored as d×1 matrices.
pub fn write_vector_csv(v: &[f64], path: &Path) -> Result<()> {
    let m = DenseMatrix::from_row_major(v.len(), 1, v.to_vec()).expect("length matches");
    write_matrix_csv(&m, path)
}

pub fn read_vector_csv(path: &Path) -> Result<Vec<f64>> {
    let m = read_matrix_csv(path)?;
    if m.cols != 1 && m.rows != 1 {
        return Err(Error::InvalidArgument(format!(
            "{}: expected a vector, got {}x{}",
            path.display(),
            m.rows,
            m.cols
        )));
    }
    Ok(m.data)
}
