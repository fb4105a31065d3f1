//! Thin wrappers over the dense solvers plus a banded log-determinant.

use faer::{Mat, MatRef, Side};
use num_complex::Complex64;

use crate::{Error, Result};

pub type CMat = Mat<Complex64>;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

fn is_real(m: MatRef<'_, Complex64>) -> bool {
    (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| m[(i, j)].im == 0.0))
}

fn real_part(m: MatRef<'_, Complex64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].re)
}

/// Eigenvalues of a Hermitian matrix, ascending. Only the lower triangle is read.
pub fn hermitian_eigenvalues(m: MatRef<'_, Complex64>) -> Result<Vec<f64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    if is_real(m) {
        real_part(m)
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Eigensolver(format!("{e:?}")))
    } else {
        m.self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Eigensolver(format!("{e:?}")))
    }
}

/// Eigenvalues (ascending) and orthonormal eigenvectors as columns.
pub fn hermitian_eigen(m: MatRef<'_, Complex64>) -> Result<(Vec<f64>, CMat)> {
    let n = m.nrows();
    if is_real(m) {
        let evd = real_part(m)
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
        let vals = evd.S().column_vector().iter().copied().collect();
        let u = evd.U();
        Ok((vals, Mat::from_fn(n, n, |i, j| Complex64::new(u[(i, j)], 0.0))))
    } else {
        let evd = m
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
        let vals = evd.S().column_vector().iter().map(|z| z.re).collect();
        Ok((vals, evd.U().to_owned()))
    }
}

/// Eigenvalues of a general square matrix.
pub fn eigenvalues(m: MatRef<'_, Complex64>) -> Result<Vec<Complex64>> {
    m.eigenvalues().map_err(|e| Error::Eigensolver(format!("{e:?}")))
}

/// Singular values, nonincreasing.
pub fn singular_values(m: MatRef<'_, Complex64>) -> Result<Vec<f64>> {
    m.singular_values().map_err(|e| Error::Eigensolver(format!("{e:?}")))
}

/// Inverse through an LU factorization with partial pivoting.
pub fn inverse(m: MatRef<'_, Complex64>) -> CMat {
    let n = m.nrows();
    let lu = m.partial_piv_lu();
    let mut x = Mat::<Complex64>::identity(n, n);
    faer::linalg::solvers::Solve::solve_in_place(&lu, x.as_mut());
    x
}

/// `‖M − M†‖_F / ‖M‖_F`, zero for the zero matrix.
pub fn hermiticity_defect(m: MatRef<'_, Complex64>) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            num += (m[(i, j)] - m[(j, i)].conj()).norm_sqr();
            den += m[(i, j)].norm_sqr();
        }
    }
    if den == 0.0 {
        0.0
    } else {
        (num / den).sqrt()
    }
}

/// A determinant stored as `phase · exp(log_abs)`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct LogDet {
    pub log_abs: f64,
    pub phase: Complex64,
}

impl LogDet {
    pub fn is_singular(&self) -> bool {
        self.log_abs == f64::NEG_INFINITY
    }

    /// The determinant itself; overflows to infinity for large matrices.
    pub fn value(&self) -> Complex64 {
        if self.is_singular() {
            ZERO
        } else {
            self.phase * self.log_abs.exp()
        }
    }
}

/// Log-determinant of an `n × n` matrix with lower/upper bandwidths `kl`, `ku`,
/// read through `entry`. Gaussian elimination with partial pivoting in band
/// storage, `O(n · kl · (kl + ku))`.
pub fn band_log_det(
    n: usize,
    kl: usize,
    ku: usize,
    entry: impl Fn(usize, usize) -> Complex64,
) -> LogDet {
    if n == 0 {
        return LogDet { log_abs: 0.0, phase: ONE };
    }
    let kl = kl.min(n - 1);
    let ku = ku.min(n - 1);
    let w = 2 * kl + ku + 1;
    let mut a = vec![ZERO; n * w];
    // (i, j) lives at i*w + (j + kl - i) for i - kl <= j <= i + ku + kl
    let idx = |i: usize, j: usize| i * w + j + kl - i;
    for i in 0..n {
        for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
            a[idx(i, j)] = entry(i, j);
        }
    }
    let mut log_abs = 0.0;
    let mut phase = ONE;
    for k in 0..n {
        let last_row = (k + kl).min(n - 1);
        let last_col = (k + ku + kl).min(n - 1);
        let mut p = k;
        let mut best = a[idx(k, k)].norm();
        for i in k + 1..=last_row {
            let v = a[idx(i, k)].norm();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best == 0.0 {
            return LogDet { log_abs: f64::NEG_INFINITY, phase: ZERO };
        }
        if p != k {
            for j in k..=last_col {
                a.swap(idx(k, j), idx(p, j));
            }
            phase = -phase;
        }
        let piv = a[idx(k, k)];
        log_abs += best.ln();
        phase *= piv / best;
        for i in k + 1..=last_row {
            let f = a[idx(i, k)] / piv;
            if f == ZERO {
                continue;
            }
            for j in k..=last_col {
                let u = a[idx(k, j)];
                a[idx(i, j)] -= f * u;
            }
        }
    }
    LogDet { log_abs, phase }
}

/// Dense log-determinant (band routine with full bandwidth).
pub fn log_det(m: MatRef<'_, Complex64>) -> LogDet {
    let n = m.nrows();
    band_log_det(n, n.saturating_sub(1), n.saturating_sub(1), |i, j| m[(i, j)])
}
