//! Causal excess risk, its normalized form and trial aggregation.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormKind {
    /// `|h - f|^2`, the risk gap under an identity-covariance intervention.
    #[default]
    Euclidean,
    /// `(h - f)' Sigma_X (h - f)`.
    WeightedByCovX,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub norm: NormKind,
    pub ground_truth_f: Vector,
    pub sigma_x: Option<Matrix>,
}

impl EvalConfig {
    pub fn euclidean(f: Vector) -> Self {
        EvalConfig {
            norm: NormKind::Euclidean,
            ground_truth_f: f,
            sigma_x: None,
        }
    }

    /// Checks that `sigma_x` is a symmetric PSD `m x m` matrix.
    pub fn weighted(f: Vector, sigma_x: Matrix) -> Result<Self> {
        check_dim("sigma_x rows", f.len(), sigma_x.nrows())?;
        linalg::psd_sqrt(&sigma_x)?;
        Ok(EvalConfig {
            norm: NormKind::WeightedByCovX,
            ground_truth_f: f,
            sigma_x: Some(sigma_x),
        })
    }

    fn weight(&self) -> Result<Option<&Matrix>> {
        match self.norm {
            NormKind::Euclidean => Ok(None),
            NormKind::WeightedByCovX => self
                .sigma_x
                .as_ref()
                .map(Some)
                .ok_or_else(|| invalid("weighted norm needs sigma_x")),
        }
    }
}

/// Squared (possibly weighted) distance between `h` and the true effect.
pub fn cer(h: &Vector, cfg: &EvalConfig) -> Result<f64> {
    check_dim("coefficients", cfg.ground_truth_f.len(), h.len())?;
    let d = h - &cfg.ground_truth_f;
    match cfg.weight()? {
        None => Ok(d.norm_squared()),
        Some(w) => {
            check_dim("sigma_x", d.len(), w.nrows())?;
            check_dim("sigma_x", d.len(), w.ncols())?;
            Ok((d.transpose() * w * &d)[(0, 0)].max(0.0))
        }
    }
}

/// `CER(h) / (CER(h) + CER(h0))`; zero when both vanish.
pub fn ncer(h: &Vector, h0: &Vector, cfg: &EvalConfig) -> Result<f64> {
    let a = cer(h, cfg)?;
    let b = cer(h0, cfg)?;
    if a + b == 0.0 {
        return Ok(0.0);
    }
    Ok(a / (a + b))
}

/// nCER against the null predictor `h0 = 0` of a centered model.
pub fn ncer_vs_null(h: &Vector, cfg: &EvalConfig) -> Result<f64> {
    ncer(h, &Vector::zeros(h.len()), cfg)
}

/// Coordinates of one trial in a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCoords {
    pub kappa: f64,
    pub gamma: f64,
    pub alpha: Option<f64>,
    pub n: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores {
    pub cer: f64,
    pub ncer: f64,
}

/// One method evaluated in one trial. A failed trial keeps its coordinates
/// and carries the error message instead of scores.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub coords: SweepCoords,
    pub method: String,
    pub scores: Option<Scores>,
    pub error: Option<String>,
}

/// Trial coordinates without the seed, plus the method label.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupKey {
    pub kappa: f64,
    pub gamma: f64,
    pub alpha: Option<f64>,
    pub n: usize,
    pub method: String,
}

impl GroupKey {
    pub fn of(record: &TrialRecord) -> Self {
        GroupKey {
            kappa: record.coords.kappa,
            gamma: record.coords.gamma,
            alpha: record.coords.alpha,
            n: record.coords.n,
            method: record.method.clone(),
        }
    }
}

fn cmp_opt(a: Option<f64>, b: Option<f64>) -> Ordering {
    match (a, b) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Less,
        (Some(_), None) => Ordering::Greater,
        (Some(x), Some(y)) => x.total_cmp(&y),
    }
}

impl Eq for GroupKey {}

impl PartialOrd for GroupKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for GroupKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.kappa
            .total_cmp(&other.kappa)
            .then(self.gamma.total_cmp(&other.gamma))
            .then(cmp_opt(self.alpha, other.alpha))
            .then(self.n.cmp(&other.n))
            .then(self.method.cmp(&other.method))
    }
}

/// Normal-approximation 95% interval multiplier.
pub const Z_95: f64 = 1.96;

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub key: GroupKey,
    pub mean_ncer: f64,
    /// Sample standard deviation over `sqrt(n_trials)`; zero for one trial.
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_trials: usize,
    pub n_failed: usize,
}

/// Summaries sorted by [`GroupKey`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub groups: Vec<GroupSummary>,
}

impl SweepResult {
    pub fn find(&self, pred: impl Fn(&GroupKey) -> bool) -> Option<&GroupSummary> {
        self.groups.iter().find(|g| pred(&g.key))
    }

    pub fn for_method<'a>(&'a self, method: &'a str) -> impl Iterator<Item = &'a GroupSummary> + 'a {
        self.groups.iter().filter(move |g| g.key.method == method)
    }
}

/// Mean, standard error and interval of a non-empty sample.
pub fn summarize(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::Empty("values"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Ok((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok((mean, math::sqrt(var / n)))
}

/// Groups records by coordinates minus seed. Failed records are counted
/// but excluded from the statistics; groups without a successful trial are
/// dropped.
pub fn aggregate(records: &[TrialRecord]) -> Result<SweepResult> {
    if records.is_empty() {
        return Err(Error::Empty("trial records"));
    }
    let mut groups: BTreeMap<GroupKey, (Vec<f64>, usize)> = BTreeMap::new();
    for r in records {
        let entry = groups.entry(GroupKey::of(r)).or_default();
        match r.scores {
            Some(s) => entry.0.push(s.ncer),
            None => entry.1 += 1,
        }
    }
    let mut out = Vec::with_capacity(groups.len());
    for (key, (values, failed)) in groups {
        if values.is_empty() {
            continue;
        }
        let (mean, stderr) = summarize(&values)?;
        out.push(GroupSummary {
            key,
            mean_ncer: mean,
            stderr,
            ci_low: mean - Z_95 * stderr,
            ci_high: mean + Z_95 * stderr,
            n_trials: values.len(),
            n_failed: failed,
        });
    }
    Ok(SweepResult { groups: out })
}
