//! Dense linear algebra on small row-major matrices.
//!
//! Everything here is sized for p up to a few hundred: LU inversion with
//! partial pivoting, a PCA basis from one-sided Jacobi SVD, power iteration
//! for the spectral norm and shifted inverse iteration for the smallest
//! eigenvalue of a symmetric part.

use std::fmt;
use std::ops::{Index, IndexMut};

use thiserror::Error;

/// Condition numbers above this are reported as singular.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is singular or too ill-conditioned (condition estimate {cond:e})")]
    SingularMatrix { cond: f64 },
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("iteration did not converge after {iterations} steps")]
    NonConvergence { iterations: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = Matrix::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from row slices; all rows must have equal length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(LinalgError::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix { rows: rows.len(), cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let brow = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "matvec shape mismatch");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `selfᵀ·v` without forming the transpose.
    pub fn tr_matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, v.len(), "tr_matvec shape mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "add shape mismatch");
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        self.add(&other.scale(-1.0))
    }

    /// Horizontal concatenation `[self, other]`.
    pub fn hcat(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.rows, other.rows, "hcat row mismatch");
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(other.row(i));
        }
        Matrix { rows: self.rows, cols, data }
    }

    /// Vertical concatenation `[self; other]`.
    pub fn vcat(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.cols, "vcat column mismatch");
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Matrix { rows: self.rows + other.rows, cols: self.cols, data }
    }

    pub fn select_rows(&self, range: std::ops::Range<usize>) -> Matrix {
        let data = self.data[range.start * self.cols..range.end * self.cols].to_vec();
        Matrix { rows: range.len(), cols: self.cols, data }
    }

    pub fn select_cols(&self, range: std::ops::Range<usize>) -> Matrix {
        Matrix::from_fn(self.rows, range.len(), |i, j| self[(i, range.start + j)])
    }

    /// Row sums of absolute values, `|self|·1`.
    pub fn abs_row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).iter().map(|v| v.abs()).sum()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Induced 1-norm (max column abs sum).
    pub fn norm1(&self) -> f64 {
        let mut sums = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (s, v) in sums.iter_mut().zip(self.row(i)) {
                *s += v.abs();
            }
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// LU factorization with partial pivoting, stored compactly.
struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    fn factor(m: &Matrix) -> Result<Lu, LinalgError> {
        let n = m.rows;
        let mut lu = m.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = m.max_abs();
        for k in 0..n {
            let (piv, pval) = (k..n)
                .map(|i| (i, lu[i * n + k].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pval == 0.0 || pval <= scale * 1e-300 || !pval.is_finite() {
                return Err(LinalgError::SingularMatrix { cond: f64::INFINITY });
            }
            if piv != k {
                for j in 0..n {
                    lu.swap(k * n + j, piv * n + j);
                }
                perm.swap(k, piv);
            }
            let d = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / d;
                lu[i * n + k] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        lu[i * n + j] -= f * lu[k * n + j];
                    }
                }
            }
        }
        Ok(Lu { n, lu, perm })
    }

    fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        b.copy_from_slice(&x);
    }
}

/// Inverse via LU with partial pivoting.
///
/// Fails with `SingularMatrix` when the 1-norm condition number of the
/// computed inverse exceeds [`MAX_CONDITION`].
pub fn invert(m: &Matrix) -> Result<Matrix, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare { rows: m.rows, cols: m.cols });
    }
    let n = m.rows;
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let lu = Lu::factor(m)?;
    let mut inv_t = Matrix::zeros(n, n);
    for j in 0..n {
        let col = inv_t.row_mut(j);
        col[j] = 1.0;
        lu.solve_in_place(col);
    }
    let inv = inv_t.transpose();
    let cond = m.norm1() * inv.norm1();
    if !cond.is_finite() || cond > MAX_CONDITION {
        return Err(LinalgError::SingularMatrix { cond });
    }
    Ok(inv)
}

/// Solves `m·x = b` for square `m`.
pub fn solve(m: &Matrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare { rows: m.rows, cols: m.cols });
    }
    let lu = Lu::factor(m)?;
    let mut x = b.to_vec();
    lu.solve_in_place(&mut x);
    Ok(x)
}

/// Flips `v` so its first entry of non-negligible magnitude is positive.
fn normalize_sign(v: &mut [f64]) {
    if let Some(&first) = v.iter().find(|x| x.abs() > 1e-10) {
        if first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// One-sided Jacobi on the rows of `a`. Returns the orthogonalized rows,
/// whose norms are the singular values, and the accumulated rotations, whose
/// rows are the matching left singular vectors.
fn jacobi_rows(a: &Matrix) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let p = a.rows;
    let mut cols: Vec<Vec<f64>> = (0..p).map(|i| a.row(i).to_vec()).collect();
    let mut v: Vec<Vec<f64>> = (0..p)
        .map(|i| {
            let mut e = vec![0.0; p];
            e[i] = 1.0;
            e
        })
        .collect();
    for _sweep in 0..80 {
        let mut rotated = false;
        for i in 0..p {
            for j in i + 1..p {
                let alpha = dot(&cols[i], &cols[i]);
                let beta = dot(&cols[j], &cols[j]);
                let gamma = dot(&cols[i], &cols[j]);
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, i, j, c, s);
                rotate(&mut v, i, j, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    (cols, v)
}

/// Orthonormal p×p basis of left singular vectors of `a`, by descending
/// singular value, completed by Gram–Schmidt on e₁, e₂, … when `a` is
/// rank deficient.
pub fn pca_basis(a: &Matrix) -> Matrix {
    let p = a.rows;
    let k = a.cols;
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(p);

    if k > 0 {
        let (cols, v) = jacobi_rows(a);
        let sigma: Vec<f64> = cols.iter().map(|c| norm2(c)).collect();
        let smax = sigma.iter().cloned().fold(0.0, f64::max);
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&x, &y| sigma[y].partial_cmp(&sigma[x]).unwrap_or(std::cmp::Ordering::Equal));
        for &i in &order {
            if smax > 0.0 && sigma[i] > 1e-10 * smax {
                let mut col = v[i].clone();
                let n = norm2(&col);
                col.iter_mut().for_each(|x| *x /= n);
                normalize_sign(&mut col);
                basis.push(col);
            }
        }
    }

    for e in 0..p {
        if basis.len() == p {
            break;
        }
        let mut cand = vec![0.0; p];
        cand[e] = 1.0;
        for _ in 0..2 {
            for b in &basis {
                let d = dot(&cand, b);
                cand.iter_mut().zip(b).for_each(|(c, bv)| *c -= d * bv);
            }
        }
        let n = norm2(&cand);
        if n > 1e-6 {
            cand.iter_mut().for_each(|x| *x /= n);
            normalize_sign(&mut cand);
            basis.push(cand);
        }
    }

    Matrix::from_fn(p, p, |i, j| basis[j][i])
}

fn rotate(cols: &mut [Vec<f64>], i: usize, j: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(j);
    for (x, y) in lo[i].iter_mut().zip(hi[0].iter_mut()) {
        let (xi, yj) = (*x, *y);
        *x = c * xi - s * yj;
        *y = s * xi + c * yj;
    }
}

/// Deterministic start vector with no special alignment to coordinate axes.
fn start_vector(n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|i| 1.0 + 0.37 * ((i as f64 + 1.0) * 1.618).sin()).collect();
    let nv = norm2(&v);
    v.into_iter().map(|x| x / nv).collect()
}

/// Largest singular value, from a one-sided Jacobi SVD.
pub fn spectral_norm(m: &Matrix) -> Result<f64, LinalgError> {
    if m.rows == 0 || m.cols == 0 || m.max_abs() == 0.0 {
        return Ok(0.0);
    }
    if !m.is_finite() {
        return Err(LinalgError::NonConvergence { iterations: 0 });
    }
    let (rows, _) = jacobi_rows(m);
    Ok(rows.iter().map(|r| norm2(r)).fold(0.0, f64::max))
}

/// Smallest eigenvalue of the symmetric part (m + mᵀ)/2, by inverse
/// iteration shifted below the Gershgorin lower bound.
pub fn min_sym_eig(m: &Matrix) -> Result<f64, LinalgError> {
    const MAX_ITER: usize = 100_000;
    if !m.is_square() {
        return Err(LinalgError::NotSquare { rows: m.rows, cols: m.cols });
    }
    let n = m.rows;
    if n == 0 {
        return Ok(0.0);
    }
    let sym = m.add(&m.transpose()).scale(0.5);
    let scale = sym.max_abs().max(1e-300);
    let gersh = (0..n)
        .map(|i| {
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| sym[(i, j)].abs()).sum();
            sym[(i, i)] - off
        })
        .fold(f64::INFINITY, f64::min);
    let mut shift = gersh - 1e-3 * scale;
    let mut lu = Lu::factor(&sym.sub(&Matrix::identity(n).scale(shift)))?;
    let mut v = start_vector(n);
    let mut prev = f64::INFINITY;
    let mut refined = false;
    for _ in 0..MAX_ITER {
        lu.solve_in_place(&mut v);
        let nv = norm2(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        let sv = sym.matvec(&v);
        let rq = dot(&v, &sv);
        let resid = norm2(&sv.iter().zip(&v).map(|(a, b)| a - rq * b).collect::<Vec<_>>());
        if (rq - prev).abs() <= 1e-8 * rq.abs().max(1.0) && resid <= 1e-6 * scale {
            return Ok(rq);
        }
        // Once the estimate is settled, move the shift closer for faster
        // convergence while staying strictly below the current estimate.
        if !refined && (rq - prev).abs() <= 1e-3 * rq.abs().max(1.0) {
            let candidate = rq - 1e-2 * (rq - shift).abs().max(1e-6 * scale);
            if let Ok(f) = Lu::factor(&sym.sub(&Matrix::identity(n).scale(candidate))) {
                shift = candidate;
                lu = f;
            }
            refined = true;
        }
        prev = rq;
    }
    Err(LinalgError::NonConvergence { iterations: MAX_ITER })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_dev_from_identity(m: &Matrix) -> f64 {
        m.sub(&Matrix::identity(m.rows())).max_abs()
    }

    #[test]
    fn invert_identity() {
        let inv = invert(&Matrix::identity(3)).unwrap();
        assert_eq!(inv, Matrix::identity(3));
    }

    #[test]
    fn invert_iteration_matrix_of_running_example() {
        let m = Matrix::from_rows(&[[0.5, -0.1], [0.1, 0.5]]).unwrap();
        let inv = invert(&m).unwrap();
        // det = 0.26, inverse = [[0.5, 0.1], [-0.1, 0.5]] / 0.26
        let expected = [[0.5 / 0.26, 0.1 / 0.26], [-0.1 / 0.26, 0.5 / 0.26]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((inv[(i, j)] - expected[i][j]).abs() < 1e-12);
            }
        }
        assert!(max_dev_from_identity(&m.matmul(&inv)) < 1e-12);
    }

    #[test]
    fn invert_rank_one_is_singular() {
        let m = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap();
        assert!(matches!(invert(&m), Err(LinalgError::SingularMatrix { .. })));
    }

    #[test]
    fn invert_rejects_nearly_singular() {
        let m = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0 + 1e-14]]).unwrap();
        assert!(invert(&m).is_err());
    }

    #[test]
    fn invert_non_square() {
        assert!(matches!(invert(&Matrix::zeros(2, 3)), Err(LinalgError::NotSquare { .. })));
    }

    #[test]
    fn solve_matches_inverse() {
        let m = Matrix::from_rows(&[[4.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 2.0]]).unwrap();
        let b = [1.0, 2.0, 3.0];
        let x = solve(&m, &b).unwrap();
        let r = m.matvec(&x);
        for (ri, bi) in r.iter().zip(b) {
            assert!((ri - bi).abs() < 1e-12);
        }
    }

    #[test]
    fn pca_axis_aligned() {
        let b = pca_basis(&Matrix::from_diag(&[3.0, 1.0]));
        assert!(max_dev_from_identity(&b) < 1e-14);
    }

    #[test]
    fn pca_orders_by_singular_value() {
        let b = pca_basis(&Matrix::from_diag(&[1.0, 3.0]));
        assert!((b[(1, 0)] - 1.0).abs() < 1e-14);
        assert!((b[(0, 1)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pca_completes_rank_deficient() {
        let a = Matrix::from_rows(&[[1.0], [0.0], [0.0]]).unwrap();
        let b = pca_basis(&a);
        assert!(max_dev_from_identity(&b) < 1e-14);
    }

    #[test]
    fn pca_empty_is_identity() {
        assert_eq!(pca_basis(&Matrix::zeros(4, 0)), Matrix::identity(4));
        assert_eq!(pca_basis(&Matrix::zeros(3, 2)), Matrix::identity(3));
    }

    #[test]
    fn pca_sign_rule() {
        let a = Matrix::from_rows(&[[-1.0, -1.0], [-1.0, -1.0]]).unwrap();
        let b = pca_basis(&a);
        let s = 1.0 / 2f64.sqrt();
        assert!((b[(0, 0)] - s).abs() < 1e-12 && (b[(1, 0)] - s).abs() < 1e-12);
        assert!(b[(0, 1)] > 0.0);
    }

    #[test]
    fn spectral_norm_trivial() {
        assert!((spectral_norm(&Matrix::identity(5)).unwrap() - 1.0).abs() < 1e-12);
        assert!((spectral_norm(&Matrix::from_diag(&[2.0, -3.0])).unwrap() - 3.0).abs() < 1e-9);
        assert_eq!(spectral_norm(&Matrix::zeros(2, 2)).unwrap(), 0.0);
    }

    #[test]
    fn spectral_norm_of_running_example_i_minus_w() {
        // I − W = [[5, 1], [−1, 5]] is 5·I plus a skew part; its singular
        // values are both √26.
        let m = Matrix::from_rows(&[[5.0, 1.0], [-1.0, 5.0]]).unwrap();
        assert!((spectral_norm(&m).unwrap() - 26f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn spectral_norm_rectangular() {
        // Singular values of [[3, 0], [4, 5]] are 3√5 and √5.
        let m = Matrix::from_rows(&[[3.0, 0.0], [4.0, 5.0]]).unwrap();
        assert!((spectral_norm(&m).unwrap() - 45f64.sqrt()).abs() < 1e-8);
        let r = Matrix::from_rows(&[[1.0, 2.0, 2.0]]).unwrap();
        assert!((spectral_norm(&r).unwrap() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn min_sym_eig_trivial() {
        assert!((min_sym_eig(&Matrix::identity(4)).unwrap() - 1.0).abs() < 1e-8);
        assert!((min_sym_eig(&Matrix::from_diag(&[5.0, -2.0])).unwrap() + 2.0).abs() < 1e-8);
    }

    #[test]
    fn min_sym_eig_ignores_skew_part() {
        let m = Matrix::from_rows(&[[5.0, 1.0], [-1.0, 5.0]]).unwrap();
        assert!((min_sym_eig(&m).unwrap() - 5.0).abs() < 1e-8);
        // Symmetric part of [[2, 3], [1, 2]] is [[2, 2], [2, 2]] with eigenvalues 0, 4.
        let m = Matrix::from_rows(&[[2.0, 3.0], [1.0, 2.0]]).unwrap();
        assert!(min_sym_eig(&m).unwrap().abs() < 1e-8);
    }

    #[test]
    fn hcat_vcat_select() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let b = Matrix::from_rows(&[[5.0], [6.0]]).unwrap();
        let h = a.hcat(&b);
        assert_eq!(h.row(1), &[3.0, 4.0, 6.0]);
        assert_eq!(h.select_cols(1..3).row(0), &[2.0, 5.0]);
        let v = a.vcat(&a);
        assert_eq!(v.rows(), 4);
        assert_eq!(v.select_rows(2..3).row(0), &[1.0, 2.0]);
    }

    #[test]
    fn from_rows_rejects_ragged() {
        let rows: Vec<Vec<f64>> = vec![vec![1.0, 2.0], vec![3.0]];
        assert!(Matrix::from_rows(&rows).is_err());
        assert!(Matrix::new(2, 2, vec![1.0; 3]).is_err());
    }
}
