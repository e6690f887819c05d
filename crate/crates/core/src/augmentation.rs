//! Additive, outcome-invariant data augmentation.
//!
//! An operator translates a treatment row `x` to `x + gamma * Gamma' g` with
//! `g ~ N(0, g_cov)`. When the columns of `Gamma'` lie in the null space of
//! `f'`, the outcome `f . x` is unchanged and the parameters `g` behave like
//! an instrument for the augmented treatments.

use alloc::vec::Vec;

use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::math;
use crate::rng;
use crate::sem::{Dataset, ZRole};

/// Relative tolerance for `|f' Gamma'| <= tol * |f| |Gamma'|`.
pub const INVARIANCE_TOL: f64 = 1e-10;

/// Additive augmentation operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DaOperator {
    /// Augmentation directions `Gamma'`, `m x k`.
    pub gamma_mat: Matrix,
    /// Strength `gamma >= 0`.
    pub strength: f64,
    /// Covariance of `G`; identity when `None`.
    pub g_cov: Option<Matrix>,
}

impl DaOperator {
    pub fn new(gamma_mat: Matrix, strength: f64) -> Result<Self> {
        if !(strength >= 0.0 && strength.is_finite()) {
            return Err(invalid("augmentation strength must be finite and non-negative"));
        }
        Ok(DaOperator {
            gamma_mat,
            strength,
            g_cov: None,
        })
    }

    pub fn with_strength(mut self, strength: f64) -> Self {
        self.strength = strength;
        self
    }

    pub fn with_g_cov(mut self, g_cov: Matrix) -> Self {
        self.g_cov = Some(g_cov);
        self
    }

    pub fn m(&self) -> usize {
        self.gamma_mat.nrows()
    }

    pub fn k(&self) -> usize {
        self.gamma_mat.ncols()
    }

    /// `|f' Gamma'| / (|f| |Gamma'|)`, zero when either side vanishes.
    pub fn invariance_deviation(&self, f: &Vector) -> f64 {
        if self.k() == 0 || f.len() != self.m() {
            return if f.len() == self.m() { 0.0 } else { f64::INFINITY };
        }
        let scale = f.norm() * self.gamma_mat.norm();
        if scale == 0.0 {
            return 0.0;
        }
        (f.transpose() * &self.gamma_mat).norm() / scale
    }

    pub fn is_outcome_invariant(&self, f: &Vector) -> bool {
        self.invariance_deviation(f) <= INVARIANCE_TOL
    }

    fn g_factor(&self) -> Result<Option<Matrix>> {
        match &self.g_cov {
            Some(cov) => {
                check_dim("g_cov rows", self.k(), cov.nrows())?;
                Ok(Some(linalg::psd_sqrt(cov)?))
            }
            None => Ok(None),
        }
    }

    /// Draws `rows` parameter vectors `g`, one independent stream per row.
    pub fn draw_parameters(&self, rows: usize, seed: u64) -> Result<Matrix> {
        let factor = self.g_factor()?;
        let k = self.k();
        let mut g = Matrix::zeros(rows, k);
        for i in 0..rows {
            let mut rng = rng::row_stream(seed, i);
            let mut draw = rng::standard_normals(&mut rng, k);
            if let Some(l) = &factor {
                draw = l * draw;
            }
            g.row_mut(i).copy_from(&draw.transpose());
        }
        Ok(g)
    }

    /// `x + gamma * Gamma' g` for every row, with explicit parameters.
    pub fn translate(&self, x: &Matrix, g: &Matrix) -> Result<Matrix> {
        check_dim("treatment columns", self.m(), x.ncols())?;
        check_dim("parameter rows", x.nrows(), g.nrows())?;
        check_dim("parameter columns", self.k(), g.ncols())?;
        if self.k() == 0 {
            return Ok(x.clone());
        }
        Ok(x + g * self.gamma_mat.transpose() * self.strength)
    }
}

/// Orthonormal basis of `Null(f')` from the SVD of `f`, `k = m - 1`.
///
/// Columns are the right singular vectors of the zero singular values,
/// with the first non-negligible entry of each made positive.
pub fn nullspace_basis(f: &Vector) -> Result<DaOperator> {
    let m = f.len();
    if m == 0 || f.iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroVector);
    }
    // Pad the 1 x m row to a square matrix so the SVD returns a full V.
    let mut padded = Matrix::zeros(m, m);
    padded.row_mut(0).copy_from(&f.transpose());
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let sigma = &svd.singular_values;
    let lead = (0..m)
        .max_by(|&a, &b| sigma[a].total_cmp(&sigma[b]))
        .expect("m > 0");
    let mut cols: Vec<usize> = (0..m).filter(|&i| i != lead).collect();
    cols.sort_unstable();
    let mut gamma = Matrix::zeros(m, m - 1);
    for (j, &i) in cols.iter().enumerate() {
        gamma.column_mut(j).copy_from(&v_t.row(i).transpose());
    }
    // strip the residual f-component left by rounding
    let unit = f / f.norm();
    for j in 0..gamma.ncols() {
        let proj = unit.dot(&gamma.column(j));
        gamma.column_mut(j).axpy(-proj, &unit, 1.0);
        let norm = gamma.column(j).norm();
        gamma.column_mut(j).scale_mut(1.0 / norm);
    }
    linalg::canonicalize_column_signs(&mut gamma);
    DaOperator::new(gamma, 1.0)
}

/// Keeps each column independently with probability `keep_prob`, redrawing
/// until at least one column survives.
pub fn subset_basis(da: &DaOperator, keep_prob: f64, seed: u64) -> Result<DaOperator> {
    if !(keep_prob > 0.0 && keep_prob <= 1.0) {
        return Err(invalid("keep_prob must lie in (0, 1]"));
    }
    let k = da.k();
    if k == 0 || keep_prob == 1.0 {
        return Ok(da.clone());
    }
    let mut rng = rng::seeded(seed);
    let kept = loop {
        let kept: Vec<usize> = (0..k).filter(|_| rng::bernoulli(&mut rng, keep_prob)).collect();
        if !kept.is_empty() {
            break kept;
        }
    };
    let g_cov = da
        .g_cov
        .as_ref()
        .map(|c| c.select_rows(kept.iter()).select_columns(kept.iter()));
    Ok(DaOperator {
        gamma_mat: da.gamma_mat.select_columns(kept.iter()),
        strength: da.strength,
        g_cov,
    })
}

/// Augments every row once; `y` is kept and the drawn `g` replaces the
/// `z` block.
pub fn apply(da: &DaOperator, data: &Dataset, seed: u64) -> Result<Dataset> {
    apply_with_copies(da, data, 1, seed)
}

/// Augments every row `copies` times (rows of copy `r` follow those of copy
/// `r - 1`).
pub fn apply_with_copies(da: &DaOperator, data: &Dataset, copies: usize, seed: u64) -> Result<Dataset> {
    data.validate()?;
    check_dim("treatment columns", da.m(), data.m())?;
    if copies == 0 {
        return Err(invalid("copies must be at least 1"));
    }
    let n = data.n_samples();
    let base = if copies == 1 {
        data.clone()
    } else {
        let rows: Vec<usize> = (0..copies).flat_map(|_| 0..n).collect();
        data.select_rows(&rows)
    };
    let g = da.draw_parameters(base.n_samples(), seed)?;
    let x = da.translate(&base.x, &g)?;
    let mut meta = base.meta.clone();
    meta.z_role = ZRole::DaParameter;
    meta.centered = false;
    Ok(Dataset {
        x,
        y: base.y,
        z: Some(g),
        c: base.c,
        meta,
    })
}

/// Gaussian-noise augmentation with noise covariance `scale * x_cov`.
///
/// Not outcome invariant in general; meant for the noisy-sensor setting
/// where no symmetry of `f` is known.
pub fn gaussian_noise_da(x_cov: &Matrix, scale: f64) -> Result<DaOperator> {
    if !(scale >= 0.0 && scale.is_finite()) {
        return Err(invalid("scale must be finite and non-negative"));
    }
    let root = linalg::psd_sqrt(&(x_cov * scale))?;
    DaOperator::new(root, 1.0)
}

/// Default noise scale for [`gaussian_noise_da`].
pub const DEFAULT_NOISE_SCALE: f64 = 0.1;

/// `max_i |f(x~_i) - f(x_i)|` over the rows of `probe`.
pub fn check_invariance<F>(f_fn: F, da: &DaOperator, probe: &Matrix, seed: u64) -> Result<f64>
where
    F: Fn(&Vector) -> f64,
{
    let g = da.draw_parameters(probe.nrows(), seed)?;
    let moved = da.translate(probe, &g)?;
    let mut worst = 0.0_f64;
    for i in 0..probe.nrows() {
        let before = f_fn(&probe.row(i).transpose());
        let after = f_fn(&moved.row(i).transpose());
        worst = worst.max(math::abs(after - before));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn axis_aligned_null_space() {
        let da = nullspace_basis(&Vector::from_vec(vec![1.0, 0.0])).unwrap();
        assert_eq!(da.k(), 1);
        assert!((da.gamma_mat[(0, 0)]).abs() < 1e-15);
        assert!((da.gamma_mat[(1, 0)].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_vector_rejected() {
        assert_eq!(nullspace_basis(&Vector::zeros(3)), Err(Error::ZeroVector));
    }

    #[test]
    fn null_space_is_orthonormal_and_invariant() {
        let mut rng = rng::seeded(4);
        for m in [2, 3, 7, 32] {
            let f = rng::standard_normals(&mut rng, m);
            let da = nullspace_basis(&f).unwrap();
            assert_eq!(da.k(), m - 1);
            assert!((f.transpose() * &da.gamma_mat).amax() < 1e-12);
            let gram = da.gamma_mat.transpose() * &da.gamma_mat;
            assert!((gram - Matrix::identity(m - 1, m - 1)).amax() < 1e-12);
        }
    }

    #[test]
    fn null_space_signs_are_canonical() {
        let f = Vector::from_vec(vec![0.3, -1.2, 0.8, 2.0]);
        let da = nullspace_basis(&f).unwrap();
        for j in 0..da.k() {
            let lead = da.gamma_mat.column(j).iter().cloned().find(|v| v.abs() > 1e-12).unwrap();
            assert!(lead > 0.0);
        }
        assert_eq!(da, nullspace_basis(&f).unwrap());
    }

    #[test]
    fn subset_with_full_probability_is_identity() {
        let da = nullspace_basis(&Vector::from_vec(vec![1.0, 2.0, 3.0])).unwrap();
        assert_eq!(subset_basis(&da, 1.0, 3).unwrap(), da);
    }

    #[test]
    fn subset_keeps_original_columns() {
        let f = rng::standard_normals(&mut rng::seeded(1), 32);
        let da = nullspace_basis(&f).unwrap();
        for seed in 0..20 {
            let sub = subset_basis(&da, 1.0 / 3.0, seed).unwrap();
            assert!(sub.k() >= 1);
            assert!(sub.is_outcome_invariant(&f));
            for j in 0..sub.k() {
                let found = (0..da.k()).any(|i| da.gamma_mat.column(i) == sub.gamma_mat.column(j));
                assert!(found);
            }
        }
    }

    #[test]
    fn subset_rejects_bad_probability() {
        let da = nullspace_basis(&Vector::from_vec(vec![1.0, 2.0])).unwrap();
        assert!(subset_basis(&da, 0.0, 1).is_err());
        assert!(subset_basis(&da, 1.5, 1).is_err());
    }

    #[test]
    fn zero_strength_leaves_x_alone() {
        let da = nullspace_basis(&Vector::from_vec(vec![1.0, 1.0])).unwrap().with_strength(0.0);
        let data = Dataset::new(Matrix::from_fn(20, 2, |i, j| (i * 2 + j) as f64), Vector::zeros(20)).unwrap();
        let out = apply(&da, &data, 3).unwrap();
        assert_eq!(out.x, data.x);
        assert_eq!(out.z.as_ref().unwrap().shape(), (20, 1));
        assert_eq!(out.meta.z_role, ZRole::DaParameter);
    }

    #[test]
    fn apply_preserves_outcome_and_rows() {
        let f = Vector::from_vec(vec![0.5, -1.0, 2.0]);
        let da = nullspace_basis(&f).unwrap().with_strength(3.0);
        let x = Matrix::from_fn(40, 3, |i, j| ((i + 1) * (j + 2)) as f64 * 0.1);
        let data = Dataset::new(x.clone(), Vector::from_fn(40, |i, _| i as f64)).unwrap();
        let out = apply(&da, &data, 9).unwrap();
        assert_eq!(out.y, data.y);
        assert_eq!(out.n_samples(), 40);
        let before = &x * &f;
        let after = &out.x * &f;
        for i in 0..40 {
            assert!((before[i] - after[i]).abs() <= 1e-10 * before[i].abs().max(1.0));
        }
    }

    #[test]
    fn copies_multiply_rows() {
        let da = nullspace_basis(&Vector::from_vec(vec![1.0, 0.0])).unwrap();
        let data = Dataset::new(Matrix::zeros(5, 2), Vector::zeros(5)).unwrap();
        let out = apply_with_copies(&da, &data, 3, 1).unwrap();
        assert_eq!(out.n_samples(), 15);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let da = nullspace_basis(&Vector::from_vec(vec![1.0, 0.0, 0.0])).unwrap();
        let data = Dataset::new(Matrix::zeros(5, 2), Vector::zeros(5)).unwrap();
        assert!(matches!(apply(&da, &data, 1), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn group_action_is_additive() {
        let da = nullspace_basis(&Vector::from_vec(vec![1.0, -2.0, 0.5])).unwrap().with_strength(0.7);
        let x = Matrix::from_fn(10, 3, |i, j| (i as f64) - (j as f64));
        let g1 = da.draw_parameters(10, 1).unwrap();
        let g2 = da.draw_parameters(10, 2).unwrap();
        let twice = da.translate(&da.translate(&x, &g1).unwrap(), &g2).unwrap();
        let once = da.translate(&x, &(&g1 + &g2)).unwrap();
        assert!((twice - once).amax() < 1e-12);
    }

    #[test]
    fn gaussian_noise_zero_scale_is_identity() {
        let da = gaussian_noise_da(&Matrix::identity(3, 3), 0.0).unwrap();
        let x = Matrix::from_fn(4, 3, |i, j| (i + j) as f64);
        let g = da.draw_parameters(4, 1).unwrap();
        assert_eq!(da.translate(&x, &g).unwrap(), x);
    }

    #[test]
    fn gaussian_noise_rejects_indefinite_covariance() {
        let cov = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(gaussian_noise_da(&cov, 0.1), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn gaussian_noise_of_rank_deficient_covariance_stays_in_range() {
        // covariance supported on (1, 1)
        let cov = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let da = gaussian_noise_da(&cov, 0.1).unwrap();
        let g = da.draw_parameters(200, 5).unwrap();
        let moved = da.translate(&Matrix::zeros(200, 2), &g).unwrap();
        let null_dir = Vector::from_vec(vec![1.0, -1.0]) / 2f64.sqrt();
        assert!((moved * null_dir).amax() < 1e-12);
    }

    #[test]
    fn invariance_check_detects_violation() {
        let f = Vector::from_vec(vec![3.0, 4.0]);
        let f_fn = |x: &Vector| x.dot(&f);
        let probe = Matrix::from_fn(50, 2, |i, j| (i as f64).sin() + j as f64);
        let valid = nullspace_basis(&f).unwrap();
        assert!(check_invariance(f_fn, &valid, &probe, 1).unwrap() < 1e-10);
        let invalid = DaOperator::new(Matrix::from_column_slice(2, 1, &[0.6, 0.8]), 1.0).unwrap();
        let dev = check_invariance(f_fn, &invalid, &probe, 1).unwrap();
        // |f| = 5 times the largest |g| among 50 normal draws
        let g = invalid.draw_parameters(50, 1).unwrap();
        assert!((dev - 5.0 * g.amax()).abs() < 1e-12);
        let off = invalid.clone().with_strength(0.0);
        assert_eq!(check_invariance(f_fn, &off, &probe, 1).unwrap(), 0.0);
    }
}
