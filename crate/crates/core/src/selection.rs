//! Choosing the IVL regularization parameter `alpha`.
//!
//! Three strategies are provided: random-split cross-validation, level-based
//! cross-validation on a discretization of the instrument, and confounder
//! correction, which matches the coefficient norm to a target. All of them
//! break ties toward the smaller `alpha`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{check_dim, invalid, Error, Result};
use crate::estimators::{predict, FitOptions, IvlProblem};
use crate::linalg::{Matrix, Vector};
use crate::math;
use crate::rng;

/// Sorted, strictly positive candidate values.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaGrid {
    values: Vec<f64>,
}

impl AlphaGrid {
    /// Sorts and de-duplicates `values`.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("alpha grid"));
        }
        if values.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(invalid("alpha grid values must be positive and finite"));
        }
        values.sort_by(f64::total_cmp);
        values.dedup();
        Ok(AlphaGrid { values })
    }

    /// `count` points evenly spaced in `log10` between `lo` and `hi`.
    pub fn log_uniform(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(invalid("log-uniform grid needs 0 < lo <= hi"));
        }
        if count == 0 {
            return Err(Error::Empty("alpha grid"));
        }
        if count == 1 {
            return Self::new(alloc::vec![lo]);
        }
        let (a, b) = (math::ln(lo), math::ln(hi));
        let step = (b - a) / (count - 1) as f64;
        let mut values: Vec<f64> = (0..count).map(|i| math::exp(a + step * i as f64)).collect();
        // pin the endpoints exactly
        values[0] = lo;
        values[count - 1] = hi;
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl Default for AlphaGrid {
    /// 32 log-uniform points on `[1e-4, 1]`.
    fn default() -> Self {
        AlphaGrid::log_uniform(1e-4, 1.0, 32).expect("valid default grid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    Cv,
    Lcv,
    Cc,
}

impl Strategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Cv => "cv",
            Strategy::Lcv => "lcv",
            Strategy::Cc => "cc",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub chosen_alpha: f64,
    /// One score per grid value, in grid order. Lower is better.
    pub scores: Vec<f64>,
    pub strategy: Strategy,
    pub seed: Option<u64>,
}

impl SelectionResult {
    pub fn chosen_index(&self, grid: &AlphaGrid) -> usize {
        grid.values().iter().position(|a| *a == self.chosen_alpha).unwrap_or(0)
    }

    pub fn chosen_score(&self, grid: &AlphaGrid) -> f64 {
        self.scores[self.chosen_index(grid)]
    }
}

/// Index of the smallest `alpha` whose score is within `tol` of the minimum.
fn argmin_small_alpha(scores: &[f64], tol: f64) -> usize {
    let best = scores.iter().cloned().fold(f64::INFINITY, f64::min);
    scores.iter().position(|s| *s <= best + tol).unwrap_or(0)
}

fn finish(grid: &AlphaGrid, scores: Vec<f64>, tol: f64, strategy: Strategy, seed: Option<u64>) -> Result<SelectionResult> {
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(invalid("non-finite selection score"));
    }
    let idx = argmin_small_alpha(&scores, tol);
    Ok(SelectionResult {
        chosen_alpha: grid.values()[idx],
        scores,
        strategy,
        seed,
    })
}

/// Relative tie tolerance for prediction-error scores.
pub const CV_TIE_TOL: f64 = 1e-9;
/// Relative tie tolerance for the norm-matching score.
pub const CC_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CvScheme {
    /// One random split with `frac` of the rows held out.
    Holdout { frac: f64 },
    KFold { folds: usize },
}

impl Default for CvScheme {
    fn default() -> Self {
        CvScheme::Holdout { frac: 0.2 }
    }
}

fn check_inputs(x: &Matrix, y: &Vector, z: &Matrix) -> Result<()> {
    check_dim("y length", x.nrows(), y.len())?;
    check_dim("instrument rows", x.nrows(), z.nrows())
}

/// Sum of squared holdout errors per grid value and the sum of `y^2` on the
/// holdout rows, for one train/test split.
fn split_errors(x: &Matrix, y: &Vector, z: &Matrix, grid: &AlphaGrid, train: &[usize], test: &[usize]) -> Result<(Vec<f64>, f64)> {
    let xt = x.select_rows(train.iter());
    let problem = IvlProblem::new(&xt, &y.select_rows(train.iter()), &z.select_rows(train.iter()), &FitOptions::default())?;
    let xh = x.select_rows(test.iter());
    let yh = y.select_rows(test.iter());
    let mut errors = Vec::with_capacity(grid.len());
    for &alpha in grid.values() {
        let est = problem.solve(alpha)?;
        errors.push((&yh - predict(&est, &xh)?).norm_squared());
    }
    Ok((errors, yh.norm_squared()))
}

fn split_rows(order: &[usize], held: &[bool]) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for &i in order {
        if held[i] {
            test.push(i);
        } else {
            train.push(i);
        }
    }
    (train, test)
}

/// Cross-validation with one random holdout split.
pub fn select_alpha_cv(x: &Matrix, y: &Vector, z: &Matrix, grid: &AlphaGrid, holdout_frac: f64, seed: u64) -> Result<SelectionResult> {
    select_alpha_cv_with(x, y, z, grid, CvScheme::Holdout { frac: holdout_frac }, seed)
}

/// Cross-validation scored by holdout mean squared prediction error.
///
/// The split depends only on `seed` and the number of rows, so every grid
/// value is scored on the same split.
pub fn select_alpha_cv_with(x: &Matrix, y: &Vector, z: &Matrix, grid: &AlphaGrid, scheme: CvScheme, seed: u64) -> Result<SelectionResult> {
    check_inputs(x, y, z)?;
    let n = x.nrows();
    if n < 10 {
        return Err(invalid("cross-validation needs at least 10 samples"));
    }
    let perm = rng::permutation(&mut rng::seeded(seed), n);
    let all: Vec<usize> = (0..n).collect();
    let (scores, scale) = match scheme {
        CvScheme::Holdout { frac } => {
            if !(frac > 0.0 && frac < 1.0) {
                return Err(invalid("holdout fraction must lie in (0, 1)"));
            }
            let held_count = math::round(frac * n as f64) as usize;
            if held_count == 0 || held_count >= n {
                return Err(Error::DegenerateSplit(alloc::format!(
                    "{held_count} of {n} rows held out"
                )));
            }
            let mut held = alloc::vec![false; n];
            for &i in &perm[..held_count] {
                held[i] = true;
            }
            let (train, test) = split_rows(&all, &held);
            let (errors, y2) = split_errors(x, y, z, grid, &train, &test)?;
            let k = test.len() as f64;
            (errors.into_iter().map(|e| e / k).collect::<Vec<_>>(), y2 / k)
        }
        CvScheme::KFold { folds } => {
            if folds < 2 || folds > n {
                return Err(Error::DegenerateSplit(alloc::format!("{folds} folds for {n} rows")));
            }
            let mut totals = alloc::vec![0.0; grid.len()];
            let mut y2 = 0.0;
            for fold in 0..folds {
                let mut held = alloc::vec![false; n];
                for (pos, &i) in perm.iter().enumerate() {
                    held[i] = pos % folds == fold;
                }
                let (train, test) = split_rows(&all, &held);
                let (errors, fold_y2) = split_errors(x, y, z, grid, &train, &test)?;
                for (t, e) in totals.iter_mut().zip(errors) {
                    *t += e;
                }
                y2 += fold_y2;
            }
            let k = n as f64;
            (totals.into_iter().map(|e| e / k).collect(), y2 / k)
        }
    };
    let best = scores.iter().cloned().fold(f64::INFINITY, f64::min);
    let tol = CV_TIE_TOL * best.max(scale);
    finish(grid, scores, tol, Strategy::Cv, Some(seed))
}

/// Per-column quantile bins of an instrument block and the joint level of
/// every row.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelCodes {
    /// Bin index of every entry, `n x k`, stored as floats so it can serve
    /// as an instrument matrix.
    pub codes: Matrix,
    /// Joint level index of every row, numbered in order of the sorted
    /// code tuples.
    pub levels: Vec<usize>,
    pub n_levels: usize,
}

/// Discretizes each column of `g` into `bins` uniform-quantile bins.
///
/// Cut points are the empirical quantiles `j / bins`, `j = 1..bins`, with
/// linear interpolation; a value goes into the bin above every cut point it
/// strictly exceeds.
pub fn discretize_levels(g: &Matrix, bins: usize) -> Result<LevelCodes> {
    if bins < 2 {
        return Err(invalid("need at least 2 bins"));
    }
    let (n, k) = g.shape();
    let mut codes = Matrix::zeros(n, k);
    for j in 0..k {
        let mut sorted: Vec<f64> = g.column(j).iter().cloned().collect();
        sorted.sort_by(f64::total_cmp);
        let cuts: Vec<f64> = (1..bins).map(|b| quantile(&sorted, b as f64 / bins as f64)).collect();
        for i in 0..n {
            let v = g[(i, j)];
            codes[(i, j)] = cuts.iter().filter(|c| v > **c).count() as f64;
        }
    }
    let mut index: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
    let keys: Vec<Vec<u32>> = (0..n)
        .map(|i| codes.row(i).iter().map(|c| *c as u32).collect())
        .collect();
    for key in &keys {
        index.entry(key.clone()).or_insert(0);
    }
    for (pos, slot) in index.values_mut().enumerate() {
        *slot = pos;
    }
    let levels = keys.iter().map(|key| index[key]).collect();
    Ok(LevelCodes {
        codes,
        levels,
        n_levels: index.len(),
    })
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let pos = p * (sorted.len() - 1) as f64;
    let lo = math::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let w = pos - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

/// Level-based cross-validation.
///
/// `g` is discretized with [`discretize_levels`]; `round(level_frac * L)`
/// of the `L` distinct levels (at least one, at most `L - 1`) are held out.
/// IVL is fit on the remaining rows with the bin codes as instruments and
/// scored by mean squared prediction error on the held-out rows.
pub fn select_alpha_lcv(
    x: &Matrix,
    y: &Vector,
    g: &Matrix,
    grid: &AlphaGrid,
    level_frac: f64,
    bins: usize,
    seed: u64,
) -> Result<SelectionResult> {
    check_inputs(x, y, g)?;
    if !(level_frac > 0.0 && level_frac < 1.0) {
        return Err(invalid("level fraction must lie in (0, 1)"));
    }
    let levels = discretize_levels(g, bins)?;
    let l = levels.n_levels;
    if l < 2 {
        return Err(Error::TooFewLevels(l));
    }
    let held_levels = (math::round(level_frac * l as f64) as usize).clamp(1, l - 1);
    let perm = rng::permutation(&mut rng::seeded(seed), l);
    let mut level_held = alloc::vec![false; l];
    for &lv in &perm[..held_levels] {
        level_held[lv] = true;
    }
    let held: Vec<bool> = levels.levels.iter().map(|lv| level_held[*lv]).collect();
    let all: Vec<usize> = (0..x.nrows()).collect();
    let (train, test) = split_rows(&all, &held);
    let (errors, y2) = split_errors(x, y, &levels.codes, grid, &train, &test)?;
    let k = test.len() as f64;
    let scores: Vec<f64> = errors.into_iter().map(|e| e / k).collect();
    let best = scores.iter().cloned().fold(f64::INFINITY, f64::min);
    let tol = CV_TIE_TOL * best.max(y2 / k);
    finish(grid, scores, tol, Strategy::Lcv, Some(seed))
}

/// Confounder correction: the `alpha` whose coefficient norm is closest to
/// `target_norm`.
pub fn select_alpha_cc(x: &Matrix, y: &Vector, z: &Matrix, grid: &AlphaGrid, target_norm: f64) -> Result<SelectionResult> {
    check_inputs(x, y, z)?;
    select_alpha_cc_prepared(&IvlProblem::new(x, y, z, &FitOptions::default())?, grid, target_norm)
}

/// [`select_alpha_cc`] on an already prepared problem.
pub fn select_alpha_cc_prepared(problem: &IvlProblem, grid: &AlphaGrid, target_norm: f64) -> Result<SelectionResult> {
    if !(target_norm >= 0.0 && target_norm.is_finite()) {
        return Err(invalid("target norm must be finite and non-negative"));
    }
    let scores = grid
        .values()
        .iter()
        .map(|&a| problem.solve(a).map(|est| math::abs(est.h.norm() - target_norm)))
        .collect::<Result<Vec<f64>>>()?;
    finish(grid, scores, CC_TIE_TOL * target_norm.max(1.0), Strategy::Cc, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::fit_ols;
    use alloc::vec;

    fn confounded_data(n: usize, seed: u64) -> (Matrix, Vector, Matrix) {
        let mut r = rng::seeded(seed);
        let z = rng::standard_normal_matrix(&mut r, n, 2);
        let c = rng::standard_normals(&mut r, n);
        let noise = rng::standard_normal_matrix(&mut r, n, 2);
        let mut x = &z + noise;
        for i in 0..n {
            x[(i, 0)] += c[i];
            x[(i, 1)] -= c[i];
        }
        let y = &x * Vector::from_vec(vec![1.0, 0.5]) + &c * 2.0 + rng::standard_normals(&mut r, n) * 0.5;
        (x, y, z)
    }

    #[test]
    fn grid_validation() {
        assert!(AlphaGrid::new(vec![]).is_err());
        assert!(AlphaGrid::new(vec![1.0, 0.0]).is_err());
        assert!(AlphaGrid::new(vec![1.0, f64::INFINITY]).is_err());
        let g = AlphaGrid::new(vec![3.0, 1.0, 2.0, 1.0]).unwrap();
        assert_eq!(g.values(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn default_grid() {
        let g = AlphaGrid::default();
        assert_eq!(g.len(), 32);
        assert_eq!(g.values()[0], 1e-4);
        assert_eq!(g.values()[31], 1.0);
        assert!(g.values().windows(2).all(|w| w[0] < w[1]));
        let ratios: Vec<f64> = g.values().windows(2).map(|w| w[1] / w[0]).collect();
        assert!(ratios.iter().all(|r| (r - ratios[0]).abs() < 1e-9));
    }

    #[test]
    fn singleton_grid_is_chosen() {
        let (x, y, z) = confounded_data(100, 1);
        let grid = AlphaGrid::new(vec![0.37]).unwrap();
        assert_eq!(select_alpha_cv(&x, &y, &z, &grid, 0.2, 5).unwrap().chosen_alpha, 0.37);
        assert_eq!(select_alpha_cc(&x, &y, &z, &grid, 1.0).unwrap().chosen_alpha, 0.37);
        assert_eq!(select_alpha_lcv(&x, &y, &z, &grid, 0.2, 2, 5).unwrap().chosen_alpha, 0.37);
    }

    #[test]
    fn noiseless_data_ties_toward_small_alpha() {
        let mut r = rng::seeded(3);
        let x = rng::standard_normal_matrix(&mut r, 60, 3);
        let z = rng::standard_normal_matrix(&mut r, 60, 3);
        let y = &x * Vector::from_vec(vec![1.0, 2.0, 3.0]);
        let grid = AlphaGrid::default();
        let sel = select_alpha_cv(&x, &y, &z, &grid, 0.2, 9).unwrap();
        assert_eq!(sel.chosen_alpha, grid.values()[0]);
    }

    #[test]
    fn cv_rejects_bad_inputs() {
        let (x, y, z) = confounded_data(9, 1);
        let grid = AlphaGrid::default();
        assert!(select_alpha_cv(&x, &y, &z, &grid, 0.2, 0).is_err());
        let (x, y, z) = confounded_data(20, 1);
        assert!(select_alpha_cv(&x, &y, &z, &grid, 0.0, 0).is_err());
        assert!(select_alpha_cv(&x, &y, &z, &grid, 1.0, 0).is_err());
        assert!(matches!(
            select_alpha_cv(&x, &y, &z, &grid, 0.01, 0),
            Err(Error::DegenerateSplit(_))
        ));
    }

    #[test]
    fn cv_choice_is_an_argmin() {
        let (x, y, z) = confounded_data(300, 4);
        let grid = AlphaGrid::log_uniform(1e-3, 1e3, 13).unwrap();
        for scheme in [CvScheme::Holdout { frac: 0.2 }, CvScheme::KFold { folds: 5 }] {
            let sel = select_alpha_cv_with(&x, &y, &z, &grid, scheme, 11).unwrap();
            let chosen = sel.chosen_score(&grid);
            let tol = 1e-9 * y.norm_squared();
            assert!(chosen <= sel.scores[0] + tol);
            assert!(chosen <= sel.scores[grid.len() - 1] + tol);
            let again = select_alpha_cv_with(&x, &y, &z, &grid, scheme, 11).unwrap();
            assert_eq!(sel, again);
        }
    }

    #[test]
    fn two_bins_one_dimension() {
        let g = Matrix::from_fn(10, 1, |i, _| i as f64);
        let codes = discretize_levels(&g, 2).unwrap();
        assert_eq!(codes.n_levels, 2);
        assert_eq!(codes.levels.iter().filter(|l| **l == 0).count(), 5);
        let (x, y, _) = confounded_data(10, 2);
        let grid = AlphaGrid::default();
        assert!(select_alpha_lcv(&x, &y, &g, &grid, 0.2, 2, 1).is_ok());
    }

    #[test]
    fn constant_instrument_has_one_level() {
        let (x, y, _) = confounded_data(30, 2);
        let g = Matrix::from_element(30, 2, 1.5);
        assert!(matches!(
            select_alpha_lcv(&x, &y, &g, &AlphaGrid::default(), 0.2, 2, 0),
            Err(Error::TooFewLevels(1))
        ));
    }

    #[test]
    fn cc_with_ols_norm_picks_largest_alpha() {
        let (x, y, z) = confounded_data(200, 5);
        let grid = AlphaGrid::log_uniform(1e-3, 1e8, 12).unwrap();
        let target = fit_ols(&x, &y).unwrap().h.norm();
        let sel = select_alpha_cc(&x, &y, &z, &grid, target).unwrap();
        assert_eq!(sel.chosen_alpha, 1e8);
    }

    #[test]
    fn cc_with_zero_target_picks_smallest_norm() {
        let (x, y, z) = confounded_data(200, 6);
        let grid = AlphaGrid::log_uniform(1e-3, 1e3, 9).unwrap();
        let sel = select_alpha_cc(&x, &y, &z, &grid, 0.0).unwrap();
        let norms: Vec<f64> = grid
            .values()
            .iter()
            .map(|a| crate::estimators::fit_ivl(&x, &y, &z, *a).unwrap().h.norm())
            .collect();
        let min = norms.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((norms[sel.chosen_index(&grid)] - min).abs() < 1e-12);
        assert!(select_alpha_cc(&x, &y, &z, &grid, -1.0).is_err());
    }
}
