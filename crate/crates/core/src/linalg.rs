//! Dense row-major matrices and the numerical kernels built on them:
//! reduced SVD (one-sided Jacobi), spectral norm (power iteration with an
//! SVD fallback), nuclear norm, and Hadamard products.
//!
//! Everything here is pure and deterministic; values are immutable after
//! construction and safe to share across threads.

use thiserror::Error;

/// Relative threshold on off-diagonal Gram mass at which a Jacobi sweep
/// is considered converged.
pub const SVD_SWEEP_TOLERANCE: f64 = 1e-12;

/// Sweep cap for the Jacobi SVD, as a multiple of `min(rows, cols)`.
pub const SVD_SWEEP_CAP_FACTOR: usize = 100;

/// Relative tolerance on the squared-norm estimate in the power iteration.
pub const POWER_ITERATION_TOLERANCE: f64 = 1e-10;

/// Iteration cap for the power iteration before falling back to a full SVD.
pub const POWER_ITERATION_CAP: usize = 10_000;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {left_rows}x{left_cols} vs {right_rows}x{right_cols}")]
    ShapeMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("matrix dimensions must be positive, got {rows}x{cols}")]
    EmptyDimensions { rows: usize, cols: usize },
    #[error("entry buffer has length {len}, expected {rows}x{cols} = {expected}")]
    EntryCount {
        len: usize,
        rows: usize,
        cols: usize,
        expected: usize,
    },
    #[error("non-finite entry {value} at ({row}, {col})")]
    NonFinite { row: usize, col: usize, value: f64 },
    #[error("SVD of a {rows}x{cols} matrix did not converge within {sweeps} sweeps")]
    SvdNonConvergence {
        rows: usize,
        cols: usize,
        sweeps: usize,
    },
    #[error("CSV line {line}: {message}")]
    CsvFormat { line: usize, message: String },
}

/// Dense real matrix with row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from row-major entries, rejecting NaN and infinities.
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::EmptyDimensions { rows, cols });
        }
        if entries.len() != rows * cols {
            return Err(LinalgError::EntryCount {
                len: entries.len(),
                rows,
                cols,
                expected: rows * cols,
            });
        }
        if let Some(idx) = entries.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite {
                row: idx / cols,
                col: idx % cols,
                value: entries[idx],
            });
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.entries[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Self {
            rows,
            cols,
            entries,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.entries[row * self.cols + col] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    fn require_same_shape(&self, other: &Self) -> Result<(), LinalgError> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(LinalgError::ShapeMismatch {
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            })
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.entries[j * self.rows + i] = self.entries[i * self.cols + j];
            }
        }
        t
    }

    /// Plain `A * B` with an ikj loop for contiguous inner access.
    pub fn matmul(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::ShapeMismatch {
                left_rows: self.rows,
                left_cols: self.cols,
                right_rows: other.rows,
                right_cols: other.cols,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.entries[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a_ik = self.entries[i * self.cols + k];
                if a_ik == 0.0 {
                    continue;
                }
                let b_row = &other.entries[k * other.cols..(k + 1) * other.cols];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += a_ik * b;
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self, LinalgError> {
        self.require_same_shape(other)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            entries,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, LinalgError> {
        self.require_same_shape(other)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            entries,
        })
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn frobenius_inner(&self, other: &Self) -> Result<f64, LinalgError> {
        self.require_same_shape(other)?;
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a * b)
            .sum())
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Serializes as CSV: one row per line, no header, LF endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.rows {
            let row = self
                .row(i)
                .iter()
                .map(|v| format!("{v:?}"))
                .collect::<Vec<_>>()
                .join(",");
            out.push_str(&row);
            out.push('\n');
        }
        out
    }

    /// Parses the CSV form written by [`DenseMatrix::to_csv`]. Ragged rows
    /// and non-finite values are rejected.
    pub fn from_csv(text: &str) -> Result<Self, LinalgError> {
        let mut entries = Vec::new();
        let mut cols = None;
        let mut rows = 0;
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            match cols {
                None => cols = Some(fields.len()),
                Some(c) if c != fields.len() => {
                    return Err(LinalgError::CsvFormat {
                        line: lineno + 1,
                        message: format!("ragged row: expected {c} fields, found {}", fields.len()),
                    })
                }
                _ => {}
            }
            for field in fields {
                let value: f64 = field.trim().parse().map_err(|_| LinalgError::CsvFormat {
                    line: lineno + 1,
                    message: format!("cannot parse {field:?} as a number"),
                })?;
                entries.push(value);
            }
            rows += 1;
        }
        let cols = cols.ok_or(LinalgError::CsvFormat {
            line: 0,
            message: "empty matrix file".into(),
        })?;
        Self::new(rows, cols, entries)
    }
}

/// Reduced singular value decomposition `A = U diag(s) V^T` with
/// `k = min(rows, cols)` columns on each side.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: DenseMatrix,
    pub singulars: Vec<f64>,
    pub v: DenseMatrix,
}

impl SvdResult {
    /// Rebuilds `U diag(s) V^T`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let (m, n, k) = (self.u.rows(), self.v.rows(), self.singulars.len());
        let mut out = DenseMatrix::zeros(m, n);
        for c in 0..k {
            let s = self.singulars[c];
            if s == 0.0 {
                continue;
            }
            for i in 0..m {
                let us = self.u.get(i, c) * s;
                for j in 0..n {
                    let v = out.get(i, j) + us * self.v.get(j, c);
                    out.set(i, j, v);
                }
            }
        }
        out
    }
}

/// Full reduced SVD with the default sweep tolerance and cap.
pub fn svd(a: &DenseMatrix) -> Result<SvdResult, LinalgError> {
    svd_with(a, SVD_SWEEP_TOLERANCE, SVD_SWEEP_CAP_FACTOR)
}

/// Reduced SVD by one-sided Jacobi rotations.
///
/// Columns of the working copy are repeatedly rotated in pairs until every
/// pair satisfies `|a_i . a_j| <= tol * |a_i| * |a_j|`. Singular vectors for
/// zero singular values are filled in by Gram-Schmidt against the canonical
/// basis so that `U` always has orthonormal columns.
pub fn svd_with(
    a: &DenseMatrix,
    tol: f64,
    sweep_cap_factor: usize,
) -> Result<SvdResult, LinalgError> {
    if a.rows() < a.cols() {
        let t = svd_with(&a.transpose(), tol, sweep_cap_factor)?;
        return Ok(SvdResult {
            u: t.v,
            singulars: t.singulars,
            v: t.u,
        });
    }

    let m = a.rows();
    let n = a.cols();
    // Column-major working copies keep the rotated columns contiguous.
    let mut work: Vec<f64> = Vec::with_capacity(m * n);
    for j in 0..n {
        for i in 0..m {
            work.push(a.get(i, j));
        }
    }
    let mut v: Vec<f64> = vec![0.0; n * n];
    for j in 0..n {
        v[j * n + j] = 1.0;
    }
    jacobi_sweeps(&mut work, m, n, Some(&mut v), tol, sweep_cap_factor)?;

    // Extract singular values, sort descending, normalize U columns.
    // Values at cancellation-noise level are flushed to exact zero; their
    // directions are roundoff and would pollute the orthonormality of U.
    let mut order: Vec<(f64, usize)> = (0..n)
        .map(|j| {
            let col = &work[j * m..(j + 1) * m];
            (dot(col, col).sqrt(), j)
        })
        .collect();
    let noise_floor = m as f64
        * f64::EPSILON
        * order.iter().fold(0.0f64, |a, &(s, _)| a.max(s));
    for (s, _) in &mut order {
        if *s <= noise_floor {
            *s = 0.0;
        }
    }
    order.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));

    let mut singulars = Vec::with_capacity(n);
    let mut u = DenseMatrix::zeros(m, n);
    let mut v_sorted = DenseMatrix::zeros(n, n);
    let mut deferred = Vec::new();
    for (dst, &(sigma, src)) in order.iter().enumerate() {
        singulars.push(sigma);
        for r in 0..n {
            v_sorted.set(r, dst, v[src * n + r]);
        }
        if sigma > 0.0 {
            let col = &work[src * m..(src + 1) * m];
            for r in 0..m {
                u.set(r, dst, col[r] / sigma);
            }
        } else {
            deferred.push(dst);
        }
    }
    for dst in deferred {
        fill_orthonormal_column(&mut u, dst);
    }

    Ok(SvdResult {
        u,
        singulars,
        v: v_sorted,
    })
}

/// Cyclic one-sided Jacobi sweeps orthogonalizing the columns of `work`
/// (column-major, `m x n`), optionally accumulating the right rotations
/// into `v` (`n x n`, column-major).
fn jacobi_sweeps(
    work: &mut [f64],
    m: usize,
    n: usize,
    mut v: Option<&mut [f64]>,
    tol: f64,
    sweep_cap_factor: usize,
) -> Result<(), LinalgError> {
    let max_sweeps = sweep_cap_factor.max(1) * n.max(1);
    for _ in 0..max_sweeps {
        let mut rotated = false;
        let mut norms: Vec<f64> = (0..n)
            .map(|j| {
                let col = &work[j * m..(j + 1) * m];
                dot(col, col)
            })
            .collect();
        // Columns this far below the dominant one are cancellation noise:
        // their singular values are flushed to zero at extraction, and
        // rotating against them re-leaks roundoff at their own scale and
        // cycles forever, so pairs touching one are frozen.
        let negligible = {
            let scale = norms.iter().fold(0.0f64, |a, &b| a.max(b));
            (m as f64 * f64::EPSILON).powi(2) * scale
        };
        for i in 0..n.saturating_sub(1) {
            for j in (i + 1)..n {
                let (alpha, beta) = (norms[i], norms[j]);
                if alpha <= negligible || beta <= negligible {
                    continue;
                }
                let gamma: f64 = dot(&work[i * m..(i + 1) * m], &work[j * m..(j + 1) * m]);
                if gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(work, m, i, j, c, s);
                if let Some(v) = v.as_deref_mut() {
                    rotate_columns(v, n, i, j, c, s);
                }
                // Exact cancellation can drift this a hair negative.
                norms[i] = (alpha - t * gamma).max(0.0);
                norms[j] = beta + t * gamma;
            }
        }
        if !rotated {
            return Ok(());
        }
    }
    Err(LinalgError::SvdNonConvergence {
        rows: m,
        cols: n,
        sweeps: max_sweeps,
    })
}

/// The full singular spectrum without singular vectors; cheaper than
/// [`svd`] because the sweeps skip the rotation accumulation.
pub fn singular_values(a: &DenseMatrix) -> Result<Vec<f64>, LinalgError> {
    if a.rows() < a.cols() {
        return singular_values(&a.transpose());
    }
    let m = a.rows();
    let n = a.cols();
    let mut work: Vec<f64> = Vec::with_capacity(m * n);
    for j in 0..n {
        for i in 0..m {
            work.push(a.get(i, j));
        }
    }
    jacobi_sweeps(&mut work, m, n, None, SVD_SWEEP_TOLERANCE, SVD_SWEEP_CAP_FACTOR)?;
    let mut values: Vec<f64> = (0..n)
        .map(|j| {
            let col = &work[j * m..(j + 1) * m];
            dot(col, col).sqrt()
        })
        .collect();
    let noise_floor = m as f64 * f64::EPSILON * values.iter().fold(0.0f64, |a, &b| a.max(b));
    for s in &mut values {
        if *s <= noise_floor {
            *s = 0.0;
        }
    }
    values.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(values)
}

fn rotate_columns(data: &mut [f64], len: usize, i: usize, j: usize, c: f64, s: f64) {
    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
    let (head, tail) = data.split_at_mut(hi * len);
    let ci = &mut head[lo * len..(lo + 1) * len];
    let cj = &mut tail[..len];
    if lo == i {
        for (x, y) in ci.iter_mut().zip(cj.iter_mut()) {
            let (a, b) = (*x, *y);
            *x = c * a - s * b;
            *y = s * a + c * b;
        }
    } else {
        for (y, x) in ci.iter_mut().zip(cj.iter_mut()) {
            let (a, b) = (*x, *y);
            *x = c * a - s * b;
            *y = s * a + c * b;
        }
    }
}

/// Overwrites column `dst` of `u` with a unit vector orthogonal to every
/// other already-populated column, chosen from the canonical basis residuals.
fn fill_orthonormal_column(u: &mut DenseMatrix, dst: usize) {
    let m = u.rows();
    let k = u.cols();
    let residual = |u: &DenseMatrix, e: usize| -> Vec<f64> {
        let mut r = vec![0.0; m];
        r[e] = 1.0;
        for pass in 0..2 {
            let _ = pass;
            for c in 0..k {
                if c == dst {
                    continue;
                }
                let dot: f64 = (0..m).map(|i| r[i] * u.get(i, c)).sum();
                for i in 0..m {
                    r[i] -= dot * u.get(i, c);
                }
            }
        }
        r
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for e in 0..m {
        let r = residual(u, e);
        let norm2: f64 = r.iter().map(|x| x * x).sum();
        if best.as_ref().map_or(true, |(b, _)| norm2 > *b) {
            best = Some((norm2, r));
        }
    }
    let (norm2, r) = best.expect("matrix has at least one row");
    let norm = norm2.sqrt();
    for i in 0..m {
        u.set(i, dst, r[i] / norm);
    }
}

/// Largest singular value via power iteration on the Gram matrix of the
/// smaller side, falling back to a full SVD if the estimate stagnates.
pub fn spectral_norm(a: &DenseMatrix) -> Result<f64, LinalgError> {
    spectral_norm_with(a, POWER_ITERATION_TOLERANCE, POWER_ITERATION_CAP)
}

pub fn spectral_norm_with(a: &DenseMatrix, tol: f64, cap: usize) -> Result<f64, LinalgError> {
    if a.frobenius_norm() == 0.0 {
        return Ok(0.0);
    }
    let gram_side = a.rows().min(a.cols());
    // v has the length of the smaller side; apply A then A^T (or vice versa).
    let apply = |v: &[f64]| -> Vec<f64> {
        if a.cols() <= a.rows() {
            let mut av = vec![0.0; a.rows()];
            for i in 0..a.rows() {
                av[i] = dot(a.row(i), v);
            }
            let mut out = vec![0.0; a.cols()];
            for i in 0..a.rows() {
                let row = a.row(i);
                let f = av[i];
                for (o, x) in out.iter_mut().zip(row) {
                    *o += f * x;
                }
            }
            out
        } else {
            let mut atv = vec![0.0; a.cols()];
            for i in 0..a.rows() {
                let row = a.row(i);
                let f = v[i];
                for (o, x) in atv.iter_mut().zip(row) {
                    *o += f * x;
                }
            }
            let mut out = vec![0.0; a.rows()];
            for i in 0..a.rows() {
                out[i] = dot(a.row(i), &atv);
            }
            out
        }
    };

    // Deterministic pseudo-random start vector.
    let mut state = 0x9E37_79B9_7F4A_7C15u64;
    let mut v: Vec<f64> = (0..gram_side)
        .map(|_| {
            state = splitmix64(state);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect();
    normalize(&mut v);

    // Successive Rayleigh quotients converge geometrically; the plain
    // difference between them understates the remaining error when the top
    // of the spectrum is dense, so the limit is estimated by geometric
    // extrapolation of the difference sequence.
    let mut lambda_prev = 0.0f64;
    let mut diff_prev = f64::INFINITY;
    for _ in 0..cap {
        let mut bv = apply(&v);
        let lambda: f64 = dot(&v, &bv);
        let norm: f64 = dot(&bv, &bv).sqrt();
        if norm == 0.0 {
            return Ok(0.0);
        }
        for x in &mut bv {
            *x /= norm;
        }
        v = bv;
        let diff = (lambda - lambda_prev).abs();
        if lambda > 0.0 {
            let stalled = diff <= f64::EPSILON * lambda;
            let extrapolated = if diff_prev.is_finite() && diff < diff_prev && diff_prev > 0.0 {
                let rho = diff / diff_prev;
                diff * rho / (1.0 - rho)
            } else {
                f64::INFINITY
            };
            if stalled || extrapolated <= tol * lambda {
                return Ok(lambda.sqrt());
            }
        }
        diff_prev = diff;
        lambda_prev = lambda;
    }
    // Stagnation: defer to the full decomposition.
    let decomposition = svd(a)?;
    Ok(decomposition.singulars.first().copied().unwrap_or(0.0))
}

/// Sum of all singular values.
pub fn nuclear_norm(a: &DenseMatrix) -> Result<f64, LinalgError> {
    Ok(svd(a)?.singulars.iter().sum())
}

/// Entrywise product `C_ij = A_ij * B_ij`.
pub fn hadamard(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    a.require_same_shape(b)?;
    let entries = a
        .entries
        .iter()
        .zip(&b.entries)
        .map(|(x, y)| x * y)
        .collect();
    Ok(DenseMatrix {
        rows: a.rows,
        cols: a.cols,
        entries,
    })
}

/// Dot product with four independent accumulator lanes. The fixed
/// reassociation keeps results deterministic while letting the loop
/// pipeline; a naive `sum()` serializes on the add latency.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let (a4, a_tail) = a.split_at(a.len() - a.len() % 4);
    let (b4, b_tail) = b.split_at(a4.len());
    for (ca, cb) in a4.chunks_exact(4).zip(b4.chunks_exact(4)) {
        acc[0] += ca[0] * cb[0];
        acc[1] += ca[1] * cb[1];
        acc[2] += ca[2] * cb[2];
        acc[3] += ca[3] * cb[3];
    }
    let mut tail = 0.0;
    for (x, y) in a_tail.iter().zip(b_tail) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub(crate) fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn normalize(v: &mut [f64]) {
    let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v {
            *x /= norm;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    pub(crate) fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn svd_identity() {
        let result = svd(&DenseMatrix::identity(3)).unwrap();
        for s in &result.singulars {
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn svd_diagonal() {
        let a = DenseMatrix::new(2, 2, vec![3.0, 0.0, 0.0, 1.0]).unwrap();
        let result = svd(&a).unwrap();
        assert!((result.singulars[0] - 3.0).abs() < 1e-12);
        assert!((result.singulars[1] - 1.0).abs() < 1e-12);
        for i in 0..2 {
            for j in 0..2 {
                assert!((result.u.get(i, j).abs() - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
                assert!((result.v.get(i, j).abs() - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn svd_reconstructs_random_rectangular() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let a = random_matrix(8, 5, &mut rng);
        let result = svd(&a).unwrap();
        let err = result.reconstruct().sub(&a).unwrap().frobenius_norm();
        assert!(err / a.frobenius_norm() < 1e-9);
    }

    #[test]
    fn svd_handles_wide_and_rank_deficient() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let a = random_matrix(4, 9, &mut rng);
        let result = svd(&a).unwrap();
        assert_eq!(result.singulars.len(), 4);
        assert_eq!(result.u.rows(), 4);
        assert_eq!(result.v.rows(), 9);
        let err = result.reconstruct().sub(&a).unwrap().frobenius_norm();
        assert!(err / a.frobenius_norm() < 1e-9);

        // Zero matrix: all singular values zero, U still orthonormal.
        let z = DenseMatrix::zeros(4, 4);
        let zr = svd(&z).unwrap();
        assert!(zr.singulars.iter().all(|s| *s == 0.0));
        let gram = zr.u.transpose().matmul(&zr.u).unwrap();
        let dev = gram.sub(&DenseMatrix::identity(4)).unwrap().max_abs_entry();
        assert!(dev < 1e-12);
    }

    #[test]
    fn spectral_norm_cases() {
        assert_eq!(spectral_norm(&DenseMatrix::zeros(3, 4)).unwrap(), 0.0);
        let d = DenseMatrix::new(2, 2, vec![3.0, 0.0, 0.0, 1.0]).unwrap();
        assert!((spectral_norm(&d).unwrap() - 3.0).abs() < 1e-8);

        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let a = random_matrix(6, 6, &mut rng);
        let by_power = spectral_norm(&a).unwrap();
        let by_svd = svd(&a).unwrap().singulars[0];
        assert!((by_power - by_svd).abs() <= 1e-8 * by_svd);
    }

    #[test]
    fn nuclear_norm_cases() {
        assert!((nuclear_norm(&DenseMatrix::identity(5)).unwrap() - 5.0).abs() < 1e-10);

        // Rank one u v^T with unit factors.
        let u = [0.6, 0.8];
        let v = [1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt()];
        let a = DenseMatrix::from_fn(2, 2, |i, j| u[i] * v[j]);
        assert!((nuclear_norm(&a).unwrap() - 1.0).abs() < 1e-10);

        // [[1,1],[1,0]]: s1*s2 = 1 and s1^2+s2^2 = 3, so s1+s2 = sqrt(5).
        let b = DenseMatrix::new(2, 2, vec![1.0, 1.0, 1.0, 0.0]).unwrap();
        assert!((nuclear_norm(&b).unwrap() - 5f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn hadamard_cases() {
        let a = DenseMatrix::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let ones = DenseMatrix::from_fn(2, 2, |_, _| 1.0);
        assert_eq!(hadamard(&a, &ones).unwrap(), a);
        assert_eq!(
            hadamard(&a, &DenseMatrix::zeros(2, 2)).unwrap(),
            DenseMatrix::zeros(2, 2)
        );
        let mask = DenseMatrix::new(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let expected = DenseMatrix::new(2, 2, vec![0.0, 2.0, 3.0, 0.0]).unwrap();
        assert_eq!(hadamard(&a, &mask).unwrap(), expected);

        let tall = DenseMatrix::zeros(3, 2);
        assert!(matches!(
            hadamard(&a, &tall),
            Err(LinalgError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn svd_reports_non_convergence_with_dimensions() {
        // An unreachable tolerance forces the sweep cap to trigger.
        let mut rng = ChaCha20Rng::seed_from_u64(13);
        let a = random_matrix(8, 8, &mut rng);
        match svd_with(&a, 0.0, 1) {
            Err(LinalgError::SvdNonConvergence { rows: 8, cols: 8, .. }) => {}
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn constructors_reject_bad_input() {
        assert!(matches!(
            DenseMatrix::new(2, 2, vec![1.0, f64::NAN, 0.0, 0.0]),
            Err(LinalgError::NonFinite { row: 0, col: 1, .. })
        ));
        assert!(matches!(
            DenseMatrix::new(2, 2, vec![1.0]),
            Err(LinalgError::EntryCount { .. })
        ));
        assert!(matches!(
            DenseMatrix::new(0, 2, vec![]),
            Err(LinalgError::EmptyDimensions { .. })
        ));
    }

    #[test]
    fn csv_round_trip_and_ragged_rejection() {
        let a = DenseMatrix::new(2, 3, vec![1.0, -2.5, 3.25, 0.0, 1e-3, 7.0]).unwrap();
        let text = a.to_csv();
        let back = DenseMatrix::from_csv(&text).unwrap();
        assert_eq!(a, back);

        let ragged = "1.0,2.0\n3.0\n";
        assert!(matches!(
            DenseMatrix::from_csv(ragged),
            Err(LinalgError::CsvFormat { line: 2, .. })
        ));
    }
}
