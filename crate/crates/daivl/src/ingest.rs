//! Ground-truth extraction from tabular data.
//!
//! `y` is regressed on `[phi(X), C]` with `phi` a polynomial expansion; the
//! `phi(X)` block of the fit is taken as the causal coefficient vector and
//! the `C` block is dropped. Methods can then be scored against it on the
//! `(phi(X), y)` data alone.

use std::io::Read;
use std::path::Path;

use daivl_core::augmentation::{self, DaOperator};
use daivl_core::estimators::{self, LinearEstimate};
use daivl_core::evaluation::EvalConfig;
use daivl_core::experiment::{self, DaDirective, FitInput, MethodResult, MethodSpec, TrialSettings};
use daivl_core::linalg;
use daivl_core::rng::{self, derive_seed};
use daivl_core::sem::Dataset;
use daivl_core::evaluation::NormKind;
use daivl_core::{Matrix, Vector};

use crate::config::IngestSpec;
use crate::error::{CliError, CliResult};

const SPLIT_TAG: u64 = 11;
const DA_BUILD_TAG: u64 = 12;
const DA_DRAW_TAG: u64 = 13;
/// Share of rows held out for degree selection.
pub const HOLDOUT_FRAC: f64 = 0.2;
/// Relative MSE difference below which the lower degree wins.
pub const DEGREE_TIE_TOL: f64 = 1e-9;

/// Columns of an ingested table, by role.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub x: Matrix,
    pub y: Vector,
    pub c: Matrix,
}

/// Reads the role columns named in `spec` from a CSV with a header row.
pub fn read_table<R: Read>(r: R, spec: &IngestSpec) -> CliResult<Table> {
    spec.validate()?;
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers()?.clone();
    let find = |name: &str, role: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::validation(format!("ingest: column {name:?} for role `{role}` not found")))
    };
    let xs = spec.x.iter().map(|n| find(n, "x")).collect::<CliResult<Vec<_>>>()?;
    let cs = spec.c.iter().map(|n| find(n, "c")).collect::<CliResult<Vec<_>>>()?;
    let yc = find(&spec.y, "y")?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::validation(format!("ingest: {e}")))?;
        let get = |idx: usize| -> CliResult<f64> {
            let s = rec.get(idx).unwrap_or("");
            s.trim().parse::<f64>().map_err(|_| {
                CliError::validation(format!(
                    "ingest: row {}: column {:?} value {s:?} is not a number",
                    line + 1,
                    &header[idx]
                ))
            })
        };
        let mut row = Vec::with_capacity(xs.len() + cs.len() + 1);
        for &i in xs.iter().chain(&cs).chain(std::iter::once(&yc)) {
            row.push(get(i)?);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::validation("ingest: no data rows"));
    }
    let (n, mx, mc) = (rows.len(), xs.len(), cs.len());
    Ok(Table {
        x: Matrix::from_fn(n, mx, |i, j| rows[i][j]),
        c: Matrix::from_fn(n, mc, |i, j| rows[i][mx + j]),
        y: Vector::from_fn(n, |i, _| rows[i][mx + mc]),
    })
}

fn hstack(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

fn rows(m: &Matrix, idx: &[usize]) -> Matrix {
    m.select_rows(idx.iter())
}

/// Holdout MSE of the `[phi_d(X), C]` regression for each degree `1..=5`.
pub fn degree_scores(table: &Table, seed: u64) -> CliResult<Vec<(usize, f64)>> {
    let n = table.y.len();
    if n < 5 {
        return Err(CliError::validation("ingest: degree selection needs at least 5 rows"));
    }
    let held = ((HOLDOUT_FRAC * n as f64).round() as usize).clamp(1, n - 1);
    let perm = rng::permutation(&mut rng::seeded(derive_seed(seed, &[SPLIT_TAG])), n);
    let (test, train) = perm.split_at(held);
    let y_train = Vector::from_iterator(train.len(), train.iter().map(|&i| table.y[i]));
    let y_test = Vector::from_iterator(test.len(), test.iter().map(|&i| table.y[i]));
    (1..=5)
        .map(|d| {
            let design = hstack(&estimators::poly_features(&table.x, d)?, &table.c);
            let fit = estimators::fit_ols(&rows(&design, train), &y_train)?;
            let resid = estimators::predict(&fit, &rows(&design, test))? - &y_test;
            Ok((d, resid.norm_squared() / test.len() as f64))
        })
        .collect()
}

/// Smallest degree whose score is within the tie tolerance of the best.
pub fn pick_degree(scores: &[(usize, f64)]) -> usize {
    let best = scores.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    scores
        .iter()
        .find(|(_, s)| *s <= best + DEGREE_TIE_TOL * best.abs())
        .map_or(1, |(d, _)| *d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub degree: usize,
    /// `(phi(X), y)`; the confounder block is dropped.
    pub design: Dataset,
    /// `phi(X)` coefficients of the full regression.
    pub truth: Vector,
    pub c_coef: Vector,
    pub fit: LinearEstimate,
    /// Holdout MSE per degree; empty when the degree was fixed.
    pub degree_scores: Vec<(usize, f64)>,
}

/// Expands `X`, fits `y ~ [phi(X), C]` and splits the coefficients.
pub fn extract_truth(table: &Table, degree: Option<usize>, seed: u64) -> CliResult<Extraction> {
    if table.c.ncols() == 0 {
        return Err(CliError::validation("ingest: missing C block (role `c` lists no columns)"));
    }
    let (degree, scores) = match degree {
        Some(d) => (d, Vec::new()),
        None => {
            let scores = degree_scores(table, seed)?;
            (pick_degree(&scores), scores)
        }
    };
    let phi = estimators::poly_features(&table.x, degree).map_err(CliError::from_core_validation)?;
    let p = phi.ncols();
    let fit = estimators::fit_ols(&hstack(&phi, &table.c), &table.y)?;
    let truth = fit.h.rows(0, p).into_owned();
    let c_coef = fit.h.rows(p, table.c.ncols()).into_owned();
    let design = Dataset::new(phi, table.y.clone()).map_err(CliError::from_core_validation)?;
    Ok(Extraction {
        degree,
        design,
        truth,
        c_coef,
        fit,
        degree_scores: scores,
    })
}

/// Reads `spec.path` and extracts the ground truth.
pub fn ingest(spec: &IngestSpec, seed: u64) -> CliResult<(Table, Extraction)> {
    let file = open(&spec.path)?;
    let table = read_table(file, spec)?;
    let ex = extract_truth(&table, spec.degree, seed)?;
    Ok((table, ex))
}

fn open(path: &Path) -> CliResult<std::fs::File> {
    std::fs::File::open(path).map_err(|e| CliError::validation(format!("cannot open {}: {e}", path.display())))
}

/// Augmentation for ingested data, built from the extracted truth instead of
/// a model.
pub fn build_da(directive: &DaDirective, ex: &Extraction, gamma: f64, seed: u64) -> CliResult<DaOperator> {
    let da = match directive {
        DaDirective::Nullspace => augmentation::nullspace_basis(&ex.truth)?,
        DaDirective::Subset { keep_prob } => {
            augmentation::subset_basis(&augmentation::nullspace_basis(&ex.truth)?, *keep_prob, seed)?
        }
        DaDirective::Gaussian { scale } => augmentation::gaussian_noise_da(&linalg::covariance(&ex.design.x), *scale)?,
        DaDirective::Explicit(g) => DaOperator::new(g.clone(), 1.0).map_err(CliError::from_core_validation)?,
    };
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(CliError::validation("gamma must be finite and non-negative"));
    }
    Ok(da.with_strength(gamma))
}

/// Scores `methods` on the extracted design against the extracted truth.
pub fn evaluate(
    ex: &Extraction,
    directive: &DaDirective,
    gamma: f64,
    methods: &[MethodSpec],
    settings: &TrialSettings,
    seed: u64,
) -> CliResult<Vec<MethodResult>> {
    let da = build_da(directive, ex, gamma, derive_seed(seed, &[DA_BUILD_TAG]))?;
    let aug = augmentation::apply(&da, &ex.design, derive_seed(seed, &[DA_DRAW_TAG]))?;
    let eval = match settings.norm {
        NormKind::Euclidean => EvalConfig::euclidean(ex.truth.clone()),
        NormKind::WeightedByCovX => EvalConfig::weighted(ex.truth.clone(), linalg::covariance(&ex.design.x))?,
    };
    let input = FitInput {
        data: &ex.design,
        aug: &aug,
        eval: &eval,
        cc_target: ex.truth.norm(),
        alphas: &[],
        seed,
        methods,
    };
    Ok(experiment::fit_methods(&input, settings)?)
}
