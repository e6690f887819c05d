//! Dense linear-algebra helpers on top of `nalgebra`.
//!
//! All rank decisions use the same numerical threshold: singular values
//! below `max(rows, cols) * f64::EPSILON * sigma_max` count as zero.

use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::math;

pub type Matrix = nalgebra::DMatrix<f64>;
pub type Vector = nalgebra::DVector<f64>;

/// Singular values at or below this are treated as zero.
pub fn rank_tolerance(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON * sigma_max
}

/// Minimum-norm least-squares solution with rank diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    pub solution: Vector,
    pub rank: usize,
    /// Ratio of largest to smallest retained singular value (1 for rank 0).
    pub condition_number: f64,
}

impl LeastSquares {
    pub fn rank_deficient(&self) -> bool {
        self.rank < self.solution.len()
    }
}

/// Minimum-norm solution of `a * x ~= b` through the pseudo-inverse.
///
/// `rows_for_tolerance` is the row count used in the rank threshold; it
/// differs from `a.nrows()` when `a` is a compressed version of a taller
/// design.
pub fn lstsq_min_norm_with(a: &Matrix, b: &Vector, rows_for_tolerance: usize) -> Result<LeastSquares> {
    check_dim("least-squares right-hand side", a.nrows(), b.len())?;
    let cols = a.ncols();
    if cols == 0 || a.nrows() == 0 {
        return Ok(LeastSquares {
            solution: Vector::zeros(cols),
            rank: 0,
            condition_number: 1.0,
        });
    }
    let svd = a.clone().svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::InvalidArgument("SVD failed".into())),
    };
    let sigma = &svd.singular_values;
    let smax = sigma.iter().cloned().fold(0.0_f64, f64::max);
    let tol = rank_tolerance(rows_for_tolerance.max(a.nrows()), cols, smax);
    let mut rank = 0;
    let mut smin = f64::INFINITY;
    let mut solution = Vector::zeros(cols);
    for (i, &s) in sigma.iter().enumerate() {
        if s > tol && s > 0.0 {
            rank += 1;
            smin = smin.min(s);
            let coef = u.column(i).dot(b) / s;
            solution.axpy(coef, &v_t.row(i).transpose(), 1.0);
        }
    }
    let condition_number = if rank == 0 { 1.0 } else { smax / smin };
    Ok(LeastSquares {
        solution,
        rank,
        condition_number,
    })
}

pub fn lstsq_min_norm(a: &Matrix, b: &Vector) -> Result<LeastSquares> {
    lstsq_min_norm_with(a, b, a.nrows())
}

/// Orthonormal basis of the column space of `a` (thin `U_r` of its SVD).
pub fn column_basis(a: &Matrix) -> Matrix {
    if a.ncols() == 0 || a.nrows() == 0 {
        return Matrix::zeros(a.nrows(), 0);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let sigma = &svd.singular_values;
    let smax = sigma.iter().cloned().fold(0.0_f64, f64::max);
    let tol = rank_tolerance(a.nrows(), a.ncols(), smax);
    let keep: Vec<usize> = (0..sigma.len())
        .filter(|&i| sigma[i] > tol && sigma[i] > 0.0)
        .collect();
    u.select_columns(keep.iter())
}

/// Projects every column of `v` onto the span of the orthonormal `basis`.
pub fn project_onto(basis: &Matrix, v: &Matrix) -> Matrix {
    if basis.ncols() == 0 {
        return Matrix::zeros(v.nrows(), v.ncols());
    }
    basis * (basis.transpose() * v)
}

pub fn project_vector_onto(basis: &Matrix, v: &Vector) -> Vector {
    if basis.ncols() == 0 {
        return Vector::zeros(v.len());
    }
    basis * (basis.transpose() * v)
}

pub fn column_means(a: &Matrix) -> Vector {
    let n = a.nrows().max(1) as f64;
    Vector::from_fn(a.ncols(), |j, _| a.column(j).sum() / n)
}

pub fn center_columns(a: &Matrix) -> (Matrix, Vector) {
    let means = column_means(a);
    let mut out = a.clone();
    for j in 0..a.ncols() {
        let mu = means[j];
        out.column_mut(j).add_scalar_mut(-mu);
    }
    (out, means)
}

pub fn center_vector(v: &Vector) -> (Vector, f64) {
    let mean = if v.is_empty() { 0.0 } else { v.mean() };
    (v.add_scalar(-mean), mean)
}

/// Empirical covariance with the `1/n` normalization.
pub fn covariance(a: &Matrix) -> Matrix {
    let (c, _) = center_columns(a);
    let n = a.nrows().max(1) as f64;
    c.transpose() * c / n
}

/// Symmetric positive semi-definite square root via eigendecomposition.
///
/// Eigenvalues below `1e-12` (relative to the largest) are clamped to zero.
pub fn psd_sqrt(s: &Matrix) -> Result<Matrix> {
    check_dim("square matrix", s.nrows(), s.ncols())?;
    let n = s.nrows();
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let scale = s.amax().max(f64::MIN_POSITIVE);
    let asym = (s - s.transpose()).amax();
    if asym > 1e-9 * scale {
        return Err(Error::InvalidArgument(alloc::format!(
            "matrix is not symmetric (max asymmetry {asym:e})"
        )));
    }
    let sym = (s + s.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    let lmin = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if lmin < -1e-10 * lmax.max(1.0) {
        return Err(Error::NotPsd {
            min_eigenvalue: lmin,
        });
    }
    let floor = 1e-12 * lmax.max(1.0);
    let roots = eig
        .eigenvalues
        .map(|l| if l <= floor { 0.0 } else { math::sqrt(l) });
    let v = &eig.eigenvectors;
    Ok(v * Matrix::from_diagonal(&roots) * v.transpose())
}

/// Makes the first entry of each column with magnitude above `1e-12` positive.
pub fn canonicalize_column_signs(a: &mut Matrix) {
    for j in 0..a.ncols() {
        let lead = a.column(j).iter().cloned().find(|v| math::abs(*v) > 1e-12);
        if let Some(v) = lead {
            if v < 0.0 {
                a.column_mut(j).neg_mut();
            }
        }
    }
}

/// Max-norm of a vector (0 for empty).
pub fn max_abs(v: &Vector) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(math::abs(*x)))
}
