//! Closed-form linear estimators: ERM (OLS), 2SLS and IVL regression.
//!
//! IVL regression minimizes `IV risk + alpha * ERM risk`. In the linear case
//! its minimizer is the OLS fit between the transformed pair
//!
//! ```text
//! x' = sqrt(alpha) x + (sqrt(1 + alpha) - sqrt(alpha)) P_z x
//! y' = sqrt(alpha) y + (sqrt(1 + alpha) - sqrt(alpha)) P_z y
//! ```
//!
//! where `P_z` projects onto the column space of the instruments. Every
//! rank-deficient solve returns the minimum-norm solution.

use alloc::vec::Vec;

use crate::error::{check_dim, invalid, Result};
use crate::linalg::{self, LeastSquares, Matrix, Vector};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Erm,
    Iv2sls,
    Ivl,
    Null,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Erm => "ERM",
            Method::Iv2sls => "IV2SLS",
            Method::Ivl => "IVL",
            Method::Null => "NULL",
        }
    }
}

/// Fit diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct FitMeta {
    pub n: usize,
    pub seed: Option<u64>,
    pub rank: usize,
    pub condition_number: f64,
    pub rank_deficient: bool,
}

impl FitMeta {
    fn from_solve(n: usize, ls: &LeastSquares) -> Self {
        FitMeta {
            n,
            seed: None,
            rank: ls.rank,
            condition_number: ls.condition_number,
            rank_deficient: ls.rank_deficient(),
        }
    }
}

/// Fitted coefficients `h` and intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearEstimate {
    pub h: Vector,
    pub intercept: f64,
    pub method: Method,
    pub alpha: Option<f64>,
    pub meta: FitMeta,
}

impl LinearEstimate {
    pub fn m(&self) -> usize {
        self.h.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Center `x`, `y` and `z` before fitting and report the intercept
    /// separately.
    pub center: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { center: true }
    }
}

struct Centered {
    x: Matrix,
    y: Vector,
    x_means: Vector,
    y_mean: f64,
}

fn prepare(x: &Matrix, y: &Vector, opts: &FitOptions) -> Result<Centered> {
    if x.nrows() == 0 {
        return Err(invalid("need at least one sample"));
    }
    check_dim("y length", x.nrows(), y.len())?;
    if opts.center {
        let (xc, x_means) = linalg::center_columns(x);
        let (yc, y_mean) = linalg::center_vector(y);
        Ok(Centered {
            x: xc,
            y: yc,
            x_means,
            y_mean,
        })
    } else {
        Ok(Centered {
            x: x.clone(),
            y: y.clone(),
            x_means: Vector::zeros(x.ncols()),
            y_mean: 0.0,
        })
    }
}

fn prepare_instruments(z: &Matrix, n: usize, opts: &FitOptions) -> Result<Matrix> {
    check_dim("z rows", n, z.nrows())?;
    Ok(if opts.center {
        linalg::center_columns(z).0
    } else {
        z.clone()
    })
}

fn finish(c: &Centered, ls: LeastSquares, method: Method, alpha: Option<f64>) -> LinearEstimate {
    let intercept = c.y_mean - c.x_means.dot(&ls.solution);
    LinearEstimate {
        meta: FitMeta::from_solve(c.x.nrows(), &ls),
        h: ls.solution,
        intercept,
        method,
        alpha,
    }
}

/// Ordinary least squares (minimum-norm for rank-deficient designs).
pub fn fit_ols(x: &Matrix, y: &Vector) -> Result<LinearEstimate> {
    fit_ols_with(x, y, &FitOptions::default())
}

pub fn fit_ols_with(x: &Matrix, y: &Vector, opts: &FitOptions) -> Result<LinearEstimate> {
    let c = prepare(x, y, opts)?;
    let ls = linalg::lstsq_min_norm(&c.x, &c.y)?;
    Ok(finish(&c, ls, Method::Erm, None))
}

/// Orthogonal projection of every column of `v` onto the column space of
/// `z`, i.e. the linear first-stage fitted values.
pub fn conditional_projection(z: &Matrix, v: &Matrix) -> Result<Matrix> {
    check_dim("projection rows", z.nrows(), v.nrows())?;
    let basis = linalg::column_basis(z);
    Ok(linalg::project_onto(&basis, v))
}

/// Two-stage least squares: OLS of `y` on the projection of `x` onto `z`.
pub fn fit_2sls(x: &Matrix, y: &Vector, z: &Matrix) -> Result<LinearEstimate> {
    fit_2sls_with(x, y, z, &FitOptions::default())
}

pub fn fit_2sls_with(x: &Matrix, y: &Vector, z: &Matrix, opts: &FitOptions) -> Result<LinearEstimate> {
    let c = prepare(x, y, opts)?;
    let zc = prepare_instruments(z, c.x.nrows(), opts)?;
    let basis = linalg::column_basis(&zc);
    let px = linalg::project_onto(&basis, &c.x);
    let ls = linalg::lstsq_min_norm(&px, &c.y)?;
    Ok(finish(&c, ls, Method::Iv2sls, None))
}

/// `(sqrt(alpha), sqrt(1 + alpha) - sqrt(alpha))`, the latter evaluated
/// without cancellation.
pub fn ivl_weights(alpha: f64) -> (f64, f64) {
    let a = math::sqrt(alpha);
    let root = math::sqrt(1.0 + alpha);
    (a, 1.0 / (root + a))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(invalid("alpha must be positive and finite"))
    }
}

/// IVL regression at one `alpha`.
pub fn fit_ivl(x: &Matrix, y: &Vector, z: &Matrix, alpha: f64) -> Result<LinearEstimate> {
    fit_ivl_with(x, y, z, alpha, &FitOptions::default())
}

pub fn fit_ivl_with(x: &Matrix, y: &Vector, z: &Matrix, alpha: f64, opts: &FitOptions) -> Result<LinearEstimate> {
    check_alpha(alpha)?;
    IvlProblem::new(x, y, z, opts)?.solve(alpha)
}

/// IVL regression prepared once for many values of `alpha`.
///
/// `x'` lies in the span of `[x, P_z x]`, so the OLS fit of `y'` on `x'` only
/// needs the coordinates of `x`, `P_z x`, `y` and `P_z y` in an orthonormal
/// basis of that span. Each [`IvlProblem::solve`] then costs an SVD of a
/// `2m x m` matrix instead of an `n x m` one.
#[derive(Debug, Clone)]
pub struct IvlProblem {
    n: usize,
    x_means: Vector,
    y_mean: f64,
    qx: Matrix,
    qpx: Matrix,
    qy: Vector,
    qpy: Vector,
}

impl IvlProblem {
    pub fn new(x: &Matrix, y: &Vector, z: &Matrix, opts: &FitOptions) -> Result<Self> {
        let c = prepare(x, y, opts)?;
        let zc = prepare_instruments(z, c.x.nrows(), opts)?;
        let zb = linalg::column_basis(&zc);
        let px = linalg::project_onto(&zb, &c.x);
        let py = linalg::project_vector_onto(&zb, &c.y);
        let m = c.x.ncols();
        let mut stacked = Matrix::zeros(c.x.nrows(), 2 * m);
        stacked.columns_mut(0, m).copy_from(&c.x);
        stacked.columns_mut(m, m).copy_from(&px);
        let q = linalg::column_basis(&stacked);
        let qt = q.transpose();
        Ok(IvlProblem {
            n: c.x.nrows(),
            qx: &qt * &c.x,
            qpx: &qt * px,
            qy: &qt * &c.y,
            qpy: &qt * py,
            x_means: c.x_means,
            y_mean: c.y_mean,
        })
    }

    pub fn m(&self) -> usize {
        self.x_means.len()
    }

    pub fn solve(&self, alpha: f64) -> Result<LinearEstimate> {
        check_alpha(alpha)?;
        let (a, b) = ivl_weights(alpha);
        let design = &self.qx * a + &self.qpx * b;
        let target = &self.qy * a + &self.qpy * b;
        let ls = linalg::lstsq_min_norm_with(&design, &target, self.n)?;
        let intercept = self.y_mean - self.x_means.dot(&ls.solution);
        Ok(LinearEstimate {
            meta: FitMeta::from_solve(self.n, &ls),
            h: ls.solution,
            intercept,
            method: Method::Ivl,
            alpha: Some(alpha),
        })
    }
}

/// Builds the transformed pair `(x', y')` explicitly.
pub fn ivl_transform(x: &Matrix, y: &Vector, z: &Matrix, alpha: f64) -> Result<(Matrix, Vector)> {
    check_alpha(alpha)?;
    check_dim("y length", x.nrows(), y.len())?;
    let basis = linalg::column_basis(&prepare_instruments(z, x.nrows(), &FitOptions { center: false })?);
    let (a, b) = ivl_weights(alpha);
    let xp = x * a + linalg::project_onto(&basis, x) * b;
    let yp = y * a + linalg::project_vector_onto(&basis, y) * b;
    Ok((xp, yp))
}

/// Zero coefficients with the mean outcome as intercept.
pub fn null_predictor(y: &Vector, m: usize) -> LinearEstimate {
    let intercept = if y.is_empty() { 0.0 } else { y.mean() };
    LinearEstimate {
        h: Vector::zeros(m),
        intercept,
        method: Method::Null,
        alpha: None,
        meta: FitMeta {
            n: y.len(),
            seed: None,
            rank: 0,
            condition_number: 1.0,
            rank_deficient: false,
        },
    }
}

pub fn predict(est: &LinearEstimate, x: &Matrix) -> Result<Vector> {
    check_dim("design columns", est.m(), x.ncols())?;
    Ok((x * &est.h).add_scalar(est.intercept))
}

/// Number of non-constant monomials of total degree `1..=degree` in `m`
/// variables: `C(m + degree, degree) - 1`.
pub fn poly_feature_count(m: usize, degree: usize) -> usize {
    let mut c: usize = 1;
    for i in 1..=degree {
        c = c * (m + i) / i;
    }
    c - 1
}

/// Monomials of the columns of `x` up to total degree `degree`, constant
/// excluded, in graded lexicographic order.
///
/// For `m = 2, degree = 2` the columns are `x1, x2, x1^2, x1 x2, x2^2`.
pub fn poly_features(x: &Matrix, degree: usize) -> Result<Matrix> {
    if !(1..=5).contains(&degree) {
        return Err(invalid("polynomial degree must be in 1..=5"));
    }
    let m = x.ncols();
    let exponents = monomial_index_sets(m, degree);
    let mut out = Matrix::zeros(x.nrows(), exponents.len());
    for (col, idx) in exponents.iter().enumerate() {
        for i in 0..x.nrows() {
            out[(i, col)] = idx.iter().map(|&j| x[(i, j)]).product();
        }
    }
    Ok(out)
}

/// Non-decreasing index tuples of length 1..=degree, grouped by length and
/// lexicographic within a length.
pub fn monomial_index_sets(m: usize, degree: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for d in 1..=degree {
        let mut current = Vec::with_capacity(d);
        push_combinations(m, d, 0, &mut current, &mut out);
    }
    out
}

fn push_combinations(m: usize, d: usize, start: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if current.len() == d {
        out.push(current.clone());
        return;
    }
    for j in start..m {
        current.push(j);
        push_combinations(m, d, j, current, out);
        current.pop();
    }
}

/// Empirical GMM-IV risk `r' Z Z^+ r / n` with `r = y - x h`.
///
/// Multiply by `n` to recover the unnormalized form. No centering is
/// applied.
pub fn gmm_iv_risk(h: &Vector, x: &Matrix, y: &Vector, z: &Matrix) -> Result<f64> {
    check_dim("coefficients", x.ncols(), h.len())?;
    check_dim("y length", x.nrows(), y.len())?;
    check_dim("z rows", x.nrows(), z.nrows())?;
    let r = y - x * h;
    let pr = linalg::project_vector_onto(&linalg::column_basis(z), &r);
    Ok(r.dot(&pr) / x.nrows().max(1) as f64)
}

/// `|y - P_z x h|^2` split into `|P_z y - P_z x h|^2 + |y - P_z y|^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IvRiskDecomposition {
    pub total: f64,
    pub lower_bound: f64,
    pub conditional_variance: f64,
}

pub fn iv_risk_decomposition(h: &Vector, x: &Matrix, y: &Vector, z: &Matrix) -> Result<IvRiskDecomposition> {
    check_dim("coefficients", x.ncols(), h.len())?;
    check_dim("y length", x.nrows(), y.len())?;
    check_dim("z rows", x.nrows(), z.nrows())?;
    let basis = linalg::column_basis(z);
    let pxh = linalg::project_vector_onto(&basis, &(x * h));
    let py = linalg::project_vector_onto(&basis, y);
    Ok(IvRiskDecomposition {
        total: (y - &pxh).norm_squared(),
        lower_bound: (&py - &pxh).norm_squared(),
        conditional_variance: (y - py).norm_squared(),
    })
}

/// Empirical IVL objective `|y - P_z x h|^2 + alpha |y - x h|^2` on the
/// given (already centered, if desired) arrays.
pub fn ivl_objective(h: &Vector, x: &Matrix, y: &Vector, z: &Matrix, alpha: f64) -> Result<f64> {
    let d = iv_risk_decomposition(h, x, y, z)?;
    Ok(d.total + alpha * (y - x * h).norm_squared())
}

/// Per-sample risks of a fitted estimate on one dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskReport {
    pub erm_risk: f64,
    pub iv_risk: Option<f64>,
    pub ivl_risk: Option<f64>,
    pub gmm_risk: Option<f64>,
}

/// ERM risk always; IV and GMM risks when instruments are given; IVL risk
/// when the estimate carries an `alpha`. Arrays are centered the same way
/// the estimators center them.
pub fn risk_report(est: &LinearEstimate, x: &Matrix, y: &Vector, z: Option<&Matrix>) -> Result<RiskReport> {
    let n = x.nrows().max(1) as f64;
    let resid = y - predict(est, x)?;
    let erm_risk = resid.norm_squared() / n;
    let (iv_risk, gmm_risk) = match z {
        Some(z) => {
            let c = prepare(x, y, &FitOptions::default())?;
            let zc = prepare_instruments(z, x.nrows(), &FitOptions::default())?;
            let d = iv_risk_decomposition(&est.h, &c.x, &c.y, &zc)?;
            let gmm = gmm_iv_risk(&est.h, &c.x, &c.y, &zc)?;
            (Some(d.total / n), Some(gmm))
        }
        None => (None, None),
    };
    let ivl_risk = match (iv_risk, est.alpha) {
        (Some(iv), Some(alpha)) => Some(iv + alpha * erm_risk),
        _ => None,
    };
    Ok(RiskReport {
        erm_risk,
        iv_risk,
        ivl_risk,
        gmm_risk,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use alloc::vec;

    fn random_design(n: usize, m: usize, seed: u64) -> Matrix {
        rng::standard_normal_matrix(&mut rng::seeded(seed), n, m)
    }

    #[test]
    fn ols_interpolates_exact_data() {
        let x = random_design(30, 4, 1);
        let h = Vector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let y = &x * &h;
        let est = fit_ols(&x, &y).unwrap();
        assert!((est.h - h).amax() < 1e-10);
        assert!(est.intercept.abs() < 1e-10);
        assert!(!est.meta.rank_deficient);
    }

    #[test]
    fn ols_of_zero_outcome_is_zero() {
        let x = random_design(10, 3, 2);
        let est = fit_ols(&x, &Vector::zeros(10)).unwrap();
        assert_eq!(est.h.amax(), 0.0);
    }

    #[test]
    fn ols_rank_deficiency_is_flagged() {
        let mut x = random_design(20, 3, 3);
        let col = x.column(0).into_owned();
        x.column_mut(2).copy_from(&col);
        let est = fit_ols(&x, &Vector::from_fn(20, |i, _| i as f64)).unwrap();
        assert!(est.meta.rank_deficient);
        assert_eq!(est.meta.rank, 2);
        // min-norm splits duplicated columns evenly
        assert!((est.h[0] - est.h[2]).abs() < 1e-10);
    }

    #[test]
    fn ols_recovers_intercept() {
        let x = random_design(25, 2, 4);
        let y = (&x * Vector::from_vec(vec![1.0, 2.0])).add_scalar(5.0);
        let est = fit_ols(&x, &y).unwrap();
        assert!((est.intercept - 5.0).abs() < 1e-10);
        let raw = fit_ols_with(&x, &y, &FitOptions { center: false }).unwrap();
        assert_eq!(raw.intercept, 0.0);
    }

    #[test]
    fn projection_properties() {
        let z = random_design(40, 3, 5);
        let w = Matrix::from_fn(3, 2, |i, j| (i + 2 * j) as f64 - 1.0);
        let v = &z * w;
        let pv = conditional_projection(&z, &v).unwrap();
        assert!((&pv - &v).amax() < 1e-10);
        let other = random_design(40, 2, 6);
        let once = conditional_projection(&z, &other).unwrap();
        let twice = conditional_projection(&z, &once).unwrap();
        assert!((once - twice).amax() < 1e-12);
    }

    #[test]
    fn projection_of_orthogonal_columns_vanishes() {
        let mut z = Matrix::zeros(4, 1);
        z[(0, 0)] = 1.0;
        z[(1, 0)] = 1.0;
        let mut v = Matrix::zeros(4, 1);
        v[(0, 0)] = 1.0;
        v[(1, 0)] = -1.0;
        v[(2, 0)] = 3.0;
        assert!(conditional_projection(&z, &v).unwrap().amax() < 1e-15);
    }

    #[test]
    fn two_stage_with_self_instrument_is_ols() {
        let x = random_design(50, 3, 7);
        let y = &x * Vector::from_vec(vec![1.0, 0.0, -1.0]) + rng::standard_normals(&mut rng::seeded(8), 50);
        let ols = fit_ols(&x, &y).unwrap();
        let tsls = fit_2sls(&x, &y, &x).unwrap();
        assert!((ols.h - tsls.h).amax() < 1e-10);
    }

    #[test]
    fn underdetermined_2sls_is_min_norm() {
        // one instrument, two treatments
        let z = random_design(60, 1, 9);
        let x = random_design(60, 2, 10) + &z * Matrix::from_row_slice(1, 2, &[1.0, 2.0]);
        let y = &x * Vector::from_vec(vec![1.0, 1.0]);
        let est = fit_2sls(&x, &y, &z).unwrap();
        assert!(est.meta.rank_deficient);
        let (xc, _) = linalg::center_columns(&x);
        let (zc, _) = linalg::center_columns(&z);
        let px = conditional_projection(&zc, &xc).unwrap();
        // h lies in the row space of P_z x
        let row_basis = linalg::column_basis(&px.transpose());
        let h_proj = linalg::project_vector_onto(&row_basis, &est.h);
        assert!((h_proj - &est.h).amax() < 1e-10);
    }

    #[test]
    fn ivl_rejects_non_positive_alpha() {
        let x = random_design(10, 2, 1);
        let y = Vector::zeros(10);
        assert!(fit_ivl(&x, &y, &x, 0.0).is_err());
        assert!(fit_ivl(&x, &y, &x, -1.0).is_err());
        assert!(fit_ivl(&x, &y, &x, f64::NAN).is_err());
    }

    #[test]
    fn ivl_weights_satisfy_identity() {
        for alpha in [1e-8, 0.3, 1.0, 7.0, 1e8] {
            let (a, b) = ivl_weights(alpha);
            // (a + b)^2 = 1 + alpha
            assert!(((a + b) * (a + b) - (1.0 + alpha)).abs() <= 1e-12 * (1.0 + alpha));
        }
    }

    #[test]
    fn compressed_ivl_matches_explicit_transform() {
        let n = 80;
        let z = random_design(n, 2, 11);
        let c = random_design(n, 1, 12);
        let x = &z * Matrix::from_row_slice(2, 3, &[1.0, 0.0, 0.5, 0.0, 1.0, -0.5])
            + &c * Matrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0])
            + random_design(n, 3, 13);
        let y = &x * Vector::from_vec(vec![1.0, -1.0, 2.0]) + c.column(0) * 2.0;
        for alpha in [1e-3, 0.5, 1.0, 30.0] {
            let fast = fit_ivl_with(&x, &y, &z, alpha, &FitOptions { center: false }).unwrap();
            let (xp, yp) = ivl_transform(&x, &y, &z, alpha).unwrap();
            let slow = fit_ols_with(&xp, &yp, &FitOptions { center: false }).unwrap();
            assert!((fast.h - slow.h).amax() < 1e-9, "alpha {alpha}");
        }
    }

    #[test]
    fn poly_feature_layout() {
        let x = Matrix::from_row_slice(1, 2, &[2.0, 3.0]);
        assert_eq!(poly_features(&x, 1).unwrap(), x);
        let p = poly_features(&x, 2).unwrap();
        assert_eq!(p, Matrix::from_row_slice(1, 5, &[2.0, 3.0, 4.0, 6.0, 9.0]));
    }

    #[test]
    fn poly_feature_counts() {
        assert_eq!(poly_feature_count(9, 2), 54);
        assert_eq!(poly_feature_count(2, 2), 5);
        for m in 1..5 {
            for d in 1..=5 {
                assert_eq!(monomial_index_sets(m, d).len(), poly_feature_count(m, d));
            }
        }
        let x = Matrix::zeros(3, 9);
        assert_eq!(poly_features(&x, 2).unwrap().ncols(), 54);
    }

    #[test]
    fn poly_degree_out_of_range() {
        let x = Matrix::zeros(3, 2);
        assert!(poly_features(&x, 0).is_err());
        assert!(poly_features(&x, 6).is_err());
    }

    #[test]
    fn null_predictor_properties() {
        let y = Vector::from_vec(vec![1.0, -1.0, 2.0, -2.0]);
        let est = null_predictor(&y, 3);
        assert_eq!(est.h, Vector::zeros(3));
        assert_eq!(est.intercept, 0.0);
        let c = null_predictor(&Vector::from_element(5, 4.5), 2);
        assert_eq!(c.intercept, 4.5);
        let pred = predict(&c, &random_design(7, 2, 1)).unwrap();
        assert!(pred.iter().all(|v| *v == 4.5));
    }

    #[test]
    fn predict_checks_dimensions() {
        let est = null_predictor(&Vector::zeros(3), 2);
        assert!(predict(&est, &Matrix::zeros(3, 3)).is_err());
        let zero = predict(&est, &Matrix::zeros(3, 2)).unwrap();
        assert_eq!(zero, Vector::zeros(3));
    }

    #[test]
    fn gmm_risk_edge_cases() {
        let x = random_design(12, 2, 3);
        let h = Vector::from_vec(vec![0.5, 0.5]);
        // residual orthogonal to z
        let mut z = Matrix::zeros(12, 1);
        z[(0, 0)] = 1.0;
        let mut y = &x * &h;
        y[1] += 3.0;
        assert!(gmm_iv_risk(&h, &x, &y, &z).unwrap().abs() < 1e-12);
        // full-rank square instrument block: projector is identity
        let zf = random_design(12, 12, 4);
        let r = &y - &x * &h;
        let mse = r.norm_squared() / 12.0;
        assert!((gmm_iv_risk(&h, &x, &y, &zf).unwrap() - mse).abs() < 1e-10);
    }

    #[test]
    fn risk_report_is_non_negative() {
        let x = random_design(30, 2, 1);
        let z = random_design(30, 2, 2);
        let y = rng::standard_normals(&mut rng::seeded(3), 30);
        let est = fit_ivl(&x, &y, &z, 0.5).unwrap();
        let r = risk_report(&est, &x, &y, Some(&z)).unwrap();
        assert!(r.erm_risk >= 0.0);
        assert!(r.iv_risk.unwrap() >= 0.0);
        assert!(r.gmm_risk.unwrap() >= 0.0);
        assert!(r.ivl_risk.unwrap() >= r.iv_risk.unwrap());
        let plain = risk_report(&est, &x, &y, None).unwrap();
        assert!(plain.iv_risk.is_none() && plain.ivl_risk.is_none());
    }
}
