//! Dense real matrix kernels used by every other module.
//!
//! Row-major storage, no external linear algebra dependencies. Problem sizes
//! in this crate are tiny (state dimension <= 3, lifted dimension <= 9,
//! trajectory horizon <= 50, Gram bases <= 10), so everything is dense and
//! factorizations favour accuracy and simplicity over speed:
//!
//! - symmetric eigenvalues via cyclic Jacobi rotations
//! - singular values via one-sided Jacobi orthogonalization
//! - pseudo-inverse and least squares built on the SVD

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MatError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix must be symmetric (max asymmetry {asym:.3e})")]
    NotSymmetric { asym: f64 },
    #[error("non-finite entry at ({row},{col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
}

/// Dense real matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, MatError> {
        assert_eq!(data.len(), rows * cols, "entry count must be rows*cols");
        for (idx, v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(MatError::NonFinite {
                    row: idx / cols.max(1),
                    col: idx % cols.max(1),
                });
            }
        }
        Ok(Mat { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Mat::new(r, c, data).expect("non-finite entry")
    }

    pub fn col_vec(v: &[f64]) -> Self {
        Mat::new(v.len(), 1, v.to_vec()).expect("non-finite entry")
    }

    /// Diagonal matrix from a slice.
    pub fn diag(d: &[f64]) -> Self {
        let mut m = Mat::zeros(d.len(), d.len());
        for (i, v) in d.iter().enumerate() {
            m.set(i, i, *v);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] = v;
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn set_column(&mut self, c: usize, v: &[f64]) {
        assert_eq!(v.len(), self.rows);
        for (r, x) in v.iter().enumerate() {
            self.set(r, c, *x);
        }
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(
            self.cols, other.rows,
            "matmul: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let mut s = 0.0;
            for j in 0..self.cols {
                s += self.get(i, j) * v[j];
            }
            out[i] = s;
        }
        out
    }

    pub fn add(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Mat {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Mat {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// Horizontal concatenation [self other].
    pub fn hstack(&self, other: &Mat) -> Mat {
        assert_eq!(self.rows, other.rows);
        let mut out = Mat::zeros(self.rows, self.cols + other.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(r, c, self.get(r, c));
            }
            for c in 0..other.cols {
                out.set(r, self.cols + c, other.get(r, c));
            }
        }
        out
    }

    /// Vertical concatenation [self; other].
    pub fn vstack(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.cols);
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Mat {
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn submatrix(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Mat {
        assert!(r0 + nr <= self.rows && c0 + nc <= self.cols);
        let mut out = Mat::zeros(nr, nc);
        for r in 0..nr {
            for c in 0..nc {
                out.set(r, c, self.get(r0 + r, c0 + c));
            }
        }
        out
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let scale = self.max_abs().max(1.0);
        for r in 0..self.rows {
            for c in (r + 1)..self.cols {
                if (self.get(r, c) - self.get(c, r)).abs() > rel_tol * scale {
                    return false;
                }
            }
        }
        true
    }

    /// Force exact symmetry by averaging with the transpose.
    pub fn symmetrize(&self) -> Mat {
        let mut out = self.clone();
        for r in 0..self.rows {
            for c in (r + 1)..self.cols {
                let v = 0.5 * (self.get(r, c) + self.get(c, r));
                out.set(r, c, v);
                out.set(c, r, v);
            }
        }
        out
    }
}

/// Eigendecomposition of a symmetric matrix: `S = V diag(w) V^T`.
#[derive(Debug, Clone)]
pub struct SymEigResult {
    /// Eigenvalues sorted ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthogonal matrix whose columns are the matching eigenvectors.
    pub eigenvectors: Mat,
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
pub fn sym_eig(s: &Mat) -> Result<SymEigResult, MatError> {
    if s.rows() != s.cols() {
        return Err(MatError::NotSquare {
            rows: s.rows(),
            cols: s.cols(),
        });
    }
    if !s.is_symmetric(1e-12) {
        let mut asym: f64 = 0.0;
        for r in 0..s.rows() {
            for c in 0..s.cols() {
                asym = asym.max((s.get(r, c) - s.get(c, r)).abs());
            }
        }
        return Err(MatError::NotSymmetric { asym });
    }
    let n = s.rows();
    let mut a = s.symmetrize();
    let mut v = Mat::identity(n);
    if n <= 1 {
        return Ok(SymEigResult {
            eigenvalues: if n == 1 { vec![a.get(0, 0)] } else { vec![] },
            eigenvectors: v,
        });
    }

    let scale = a.max_abs().max(1.0);
    for _sweep in 0..100 {
        let mut off: f64 = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a.get(p, q).abs());
            }
        }
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() <= 1e-18 * scale {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * c;
                // rotate rows/cols p,q of A
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - sn * akq);
                    a.set(k, q, sn * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - sn * aqk);
                    a.set(q, k, sn * apk + c * aqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - sn * vkq);
                    v.set(k, q, sn * vkp + c * vkq);
                }
            }
        }
    }

    // sort ascending, permuting eigenvector columns to match
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(i, i).partial_cmp(&a.get(j, j)).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a.get(i, i)).collect();
    let mut eigenvectors = Mat::zeros(n, n);
    for (newc, &oldc) in order.iter().enumerate() {
        for r in 0..n {
            eigenvectors.set(r, newc, v.get(r, oldc));
        }
    }
    Ok(SymEigResult {
        eigenvalues,
        eigenvectors,
    })
}

/// Thin SVD `A = U diag(s) V^T` with singular values sorted descending.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: Mat,
    pub singular_values: Vec<f64>,
    pub v: Mat,
}

/// One-sided Jacobi SVD. Works on the tall orientation internally.
pub fn svd(m: &Mat) -> SvdResult {
    if m.rows() < m.cols() {
        let t = svd(&m.transpose());
        return SvdResult {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        };
    }
    let rows = m.rows();
    let cols = m.cols();
    let mut a = m.clone();
    let mut v = Mat::identity(cols);
    let scale = a.max_abs().max(1e-300);

    for _sweep in 0..60 {
        let mut converged = true;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = 0.0;
                for k in 0..rows {
                    let xp = a.get(k, p);
                    let xq = a.get(k, q);
                    app += xp * xp;
                    aqq += xq * xq;
                    apq += xp * xq;
                }
                if apq.abs() <= 1e-30 * scale * scale
                    || apq.abs() <= 1e-16 * (app * aqq).sqrt().max(1e-300)
                {
                    continue;
                }
                converged = false;
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * c;
                for k in 0..rows {
                    let xp = a.get(k, p);
                    let xq = a.get(k, q);
                    a.set(k, p, c * xp - sn * xq);
                    a.set(k, q, sn * xp + c * xq);
                }
                for k in 0..cols {
                    let vp = v.get(k, p);
                    let vq = v.get(k, q);
                    v.set(k, p, c * vp - sn * vq);
                    v.set(k, q, sn * vp + c * vq);
                }
            }
        }
        if converged {
            break;
        }
    }

    // column norms are singular values; normalize U
    let mut sv: Vec<(f64, usize)> = (0..cols)
        .map(|c| {
            let s: f64 = (0..rows).map(|r| a.get(r, c).powi(2)).sum::<f64>().sqrt();
            (s, c)
        })
        .collect();
    sv.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());

    let mut u = Mat::zeros(rows, cols);
    let mut vs = Mat::zeros(cols, cols);
    let mut singular_values = Vec::with_capacity(cols);
    for (newc, (s, oldc)) in sv.iter().enumerate() {
        singular_values.push(*s);
        if *s > 0.0 {
            for r in 0..rows {
                u.set(r, newc, a.get(r, *oldc) / s);
            }
        }
        for r in 0..cols {
            vs.set(r, newc, v.get(r, *oldc));
        }
    }
    SvdResult {
        u,
        singular_values,
        v: vs,
    }
}

/// Default rank tolerance: `max(rows, cols) * sigma_max * 1e-12`.
pub fn default_rank_tol(m: &Mat, sigma_max: f64) -> f64 {
    (m.rows().max(m.cols()) as f64) * sigma_max * 1e-12
}

/// Numerical rank = number of singular values above the tolerance.
pub fn numerical_rank(m: &Mat, tol: Option<f64>) -> usize {
    if m.rows() == 0 || m.cols() == 0 {
        return 0;
    }
    let s = svd(m);
    let smax = s.singular_values.first().copied().unwrap_or(0.0);
    let tol = tol.unwrap_or_else(|| default_rank_tol(m, smax));
    s.singular_values.iter().filter(|&&v| v > tol).count()
}

/// Moore-Penrose pseudo-inverse via SVD truncation at the default rank tolerance.
pub fn pinv(m: &Mat) -> Mat {
    if m.rows() == 0 || m.cols() == 0 {
        return Mat::zeros(m.cols(), m.rows());
    }
    let s = svd(m);
    let smax = s.singular_values.first().copied().unwrap_or(0.0);
    let tol = default_rank_tol(m, smax);
    let k = s.singular_values.len();
    let mut sinv = Mat::zeros(k, k);
    for i in 0..k {
        if s.singular_values[i] > tol {
            sinv.set(i, i, 1.0 / s.singular_values[i]);
        }
    }
    s.v.matmul(&sinv).matmul(&s.u.transpose())
}

/// Minimum-norm least squares solve of `A X = B`, returning `(X, residual)`
/// with the residual in Frobenius norm.
pub fn solve_lstsq(a: &Mat, b: &Mat) -> (Mat, f64) {
    assert_eq!(
        a.rows(),
        b.rows(),
        "lstsq: A is {}x{}, B is {}x{}",
        a.rows(),
        a.cols(),
        b.rows(),
        b.cols()
    );
    let x = pinv(a).matmul(b);
    let residual = a.matmul(&x).sub(b).frob_norm();
    (x, residual)
}

/// Inverse of a symmetric positive-definite matrix via its eigendecomposition.
pub fn spd_inverse(s: &Mat) -> Result<Mat, MatError> {
    let eig = sym_eig(s)?;
    if eig.eigenvalues.iter().any(|&w| w <= 0.0) {
        return Err(MatError::NotPositiveDefinite);
    }
    let n = s.rows();
    let mut out = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += eig.eigenvectors.get(i, k) * eig.eigenvectors.get(j, k)
                    / eig.eigenvalues[k];
            }
            out.set(i, j, acc);
        }
    }
    Ok(out.symmetrize())
}

/// Project a symmetric matrix onto the PSD cone (clip negative eigenvalues).
pub fn psd_projection(s: &Mat) -> Mat {
    let eig = sym_eig(&s.symmetrize()).expect("psd_projection: symmetric input");
    let n = s.rows();
    let mut out = Mat::zeros(n, n);
    for k in 0..n {
        let w = eig.eigenvalues[k];
        if w <= 0.0 {
            continue;
        }
        for i in 0..n {
            for j in 0..n {
                let v = out.get(i, j)
                    + w * eig.eigenvectors.get(i, k) * eig.eigenvectors.get(j, k);
                out.set(i, j, v);
            }
        }
    }
    out.symmetrize()
}

/// k-th matrix power by repeated multiplication. `k >= 1`.
pub fn mat_power(a: &Mat, k: usize) -> Mat {
    assert_eq!(a.rows(), a.cols(), "mat_power: square matrix required");
    assert!(k >= 1, "mat_power: k must be positive");
    let mut out = a.clone();
    for _ in 1..k {
        out = out.matmul(a);
    }
    out
}

/// Spectral radius estimate of a (possibly non-symmetric) square matrix by
/// power iteration on A^T A composed steps; adequate for diagnostics.
pub fn spectral_radius(a: &Mat, iters: usize) -> f64 {
    let n = a.rows();
    assert_eq!(n, a.cols());
    if n == 0 {
        return 0.0;
    }
    // Gelfand's formula with repeated squaring: with C_0 = A and
    // C_{k+1} = (C_k / ||C_k||)^2,  rho = exp(sum_j log||C_j|| / 2^j)
    // in the limit. Unlike power iteration this converges for matrices
    // whose dominant eigenvalues form a complex pair.
    let squarings = iters.clamp(32, 64);
    let mut c = a.clone();
    let mut acc = 0.0;
    let mut weight = 1.0;
    for _ in 0..squarings {
        let norm = c.frob_norm();
        if norm < 1e-300 {
            return 0.0; // nilpotent to machine precision
        }
        acc += weight * norm.ln();
        weight *= 0.5;
        let scaled = c.scale(1.0 / norm);
        c = scaled.matmul(&scaled);
    }
    let norm = c.frob_norm();
    if norm >= 1e-300 {
        acc += weight * norm.ln();
    }
    acc.exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_mat(rows: usize, cols: usize, seed: u64) -> Mat {
        // simple LCG, deterministic across platforms
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let data: Vec<f64> = (0..rows * cols).map(|_| next()).collect();
        Mat::new(rows, cols, data).unwrap()
    }

    #[test]
    fn sym_eig_identity() {
        let r = sym_eig(&Mat::identity(3)).unwrap();
        for w in &r.eigenvalues {
            assert!((w - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sym_eig_diagonal() {
        let r = sym_eig(&Mat::diag(&[-1.0, 2.0])).unwrap();
        assert!((r.eigenvalues[0] + 1.0).abs() < 1e-12);
        assert!((r.eigenvalues[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sym_eig_reconstruction_random() {
        let raw = random_mat(5, 5, 7);
        let s = raw.add(&raw.transpose()).scale(0.5);
        let r = sym_eig(&s).unwrap();
        let recon = r
            .eigenvectors
            .matmul(&Mat::diag(&r.eigenvalues))
            .matmul(&r.eigenvectors.transpose());
        let err = recon.sub(&s).frob_norm();
        assert!(err <= 1e-10 * s.frob_norm().max(1.0), "residual {err}");
        let vtv = r.eigenvectors.transpose().matmul(&r.eigenvectors);
        assert!(vtv.sub(&Mat::identity(5)).frob_norm() <= 1e-10);
    }

    #[test]
    fn sym_eig_rejects_asymmetric() {
        let m = Mat::from_rows(&[&[1.0, 2.0], &[0.0, 1.0]]);
        assert!(sym_eig(&m).is_err());
        let m = Mat::from_rows(&[&[1.0, 2.0, 0.0], &[0.0, 1.0, 0.0]]);
        assert!(sym_eig(&m).is_err());
    }

    #[test]
    fn pinv_identity() {
        let p = pinv(&Mat::identity(2));
        assert!(p.sub(&Mat::identity(2)).frob_norm() < 1e-12);
    }

    #[test]
    fn pinv_orthonormal_rows_is_transpose() {
        let m = Mat::from_rows(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        let p = pinv(&m);
        assert!(p.sub(&m.transpose()).frob_norm() < 1e-12);
    }

    #[test]
    fn pinv_full_row_rank_right_inverse() {
        let m = random_mat(2, 6, 13);
        let p = pinv(&m);
        let mp = m.matmul(&p);
        assert!(mp.sub(&Mat::identity(2)).frob_norm() < 1e-10);
    }

    #[test]
    fn pinv_penrose_identities() {
        for seed in 0..5u64 {
            let m = random_mat(4, 3, 100 + seed);
            let p = pinv(&m);
            let scale = m.frob_norm().max(1.0);
            assert!(m.matmul(&p).matmul(&m).sub(&m).frob_norm() <= 1e-10 * scale);
            assert!(p.matmul(&m).matmul(&p).sub(&p).frob_norm() <= 1e-10 * scale);
            let mp = m.matmul(&p);
            assert!(mp.sub(&mp.transpose()).frob_norm() <= 1e-10 * scale);
            let pm = p.matmul(&m);
            assert!(pm.sub(&pm.transpose()).frob_norm() <= 1e-10 * scale);
        }
    }

    #[test]
    fn pinv_zero_matrix() {
        let p = pinv(&Mat::zeros(3, 2));
        assert_eq!((p.rows(), p.cols()), (2, 3));
        assert_eq!(p.frob_norm(), 0.0);
    }

    #[test]
    fn pinv_involution_on_full_rank() {
        for seed in 0..5u64 {
            let m = random_mat(5, 3, 40 + seed);
            let pp = pinv(&pinv(&m));
            assert!(pp.sub(&m).frob_norm() <= 1e-9 * m.frob_norm().max(1.0));
        }
    }

    #[test]
    fn rank_zero_and_identity() {
        assert_eq!(numerical_rank(&Mat::zeros(3, 5), None), 0);
        assert_eq!(numerical_rank(&Mat::identity(4), None), 4);
    }

    #[test]
    fn rank_outer_product_is_one() {
        let u = Mat::col_vec(&[1.0, -2.0, 0.5]);
        let v = Mat::col_vec(&[3.0, 1.0, -1.0, 2.0]);
        let m = u.matmul(&v.transpose());
        assert_eq!(numerical_rank(&m, None), 1);
    }

    #[test]
    fn rank_invariant_under_permutation() {
        let m = random_mat(4, 6, 21);
        let base = numerical_rank(&m, None);
        // swap two rows and two columns
        let mut p = m.clone();
        for c in 0..m.cols() {
            let a = p.get(0, c);
            p.set(0, c, p.get(2, c));
            p.set(2, c, a);
        }
        let mut q = p.clone();
        for r in 0..m.rows() {
            let a = q.get(r, 1);
            q.set(r, 1, q.get(r, 4));
            q.set(r, 4, a);
        }
        assert_eq!(numerical_rank(&q, None), base);
    }

    #[test]
    fn lstsq_identity() {
        let b = random_mat(3, 2, 5);
        let (x, res) = solve_lstsq(&Mat::identity(3), &b);
        assert!(x.sub(&b).frob_norm() < 1e-12);
        assert!(res < 1e-12);
    }

    #[test]
    fn lstsq_inconsistent_closed_form() {
        let a = Mat::from_rows(&[&[1.0], &[1.0]]);
        let b = Mat::from_rows(&[&[0.0], &[1.0]]);
        let (x, res) = solve_lstsq(&a, &b);
        assert!((x.get(0, 0) - 0.5).abs() < 1e-12);
        assert!((res - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn lstsq_normal_equations() {
        let a = random_mat(6, 3, 8);
        let b = random_mat(6, 2, 9);
        let (x, _) = solve_lstsq(&a, &b);
        let lhs = a.transpose().matmul(&a).matmul(&x);
        let rhs = a.transpose().matmul(&b);
        assert!(lhs.sub(&rhs).frob_norm() < 1e-10);
    }

    #[test]
    fn svd_reconstruction_up_to_dim_50() {
        for &(r, c, seed) in &[(10usize, 7usize, 3u64), (50, 20, 4), (12, 50, 5)] {
            let m = random_mat(r, c, seed);
            let s = svd(&m);
            let recon = s
                .u
                .matmul(&Mat::diag(&s.singular_values))
                .matmul(&s.v.transpose());
            assert!(recon.sub(&m).frob_norm() <= 1e-10 * m.frob_norm().max(1.0));
        }
    }

    #[test]
    fn spd_inverse_roundtrip() {
        let raw = random_mat(4, 4, 11);
        let s = raw.matmul(&raw.transpose()).add(&Mat::identity(4));
        let inv = spd_inverse(&s).unwrap();
        assert!(s.matmul(&inv).sub(&Mat::identity(4)).frob_norm() < 1e-9);
    }

    #[test]
    fn mat_power_cases() {
        let a = Mat::diag(&[0.5, 2.0]);
        let a3 = mat_power(&a, 3);
        assert!((a3.get(0, 0) - 0.125).abs() < 1e-15);
        assert!((a3.get(1, 1) - 8.0).abs() < 1e-15);
        assert!(mat_power(&Mat::identity(3), 7)
            .sub(&Mat::identity(3))
            .frob_norm()
            .abs()
            < 1e-15);
    }

    #[test]
    fn spectral_radius_diag() {
        let a = Mat::diag(&[0.3, -0.9]);
        let r = spectral_radius(&a, 200);
        assert!((r - 0.9).abs() < 1e-6);
    }
}
