//! One simulation trial: draw a model, sample, augment, fit, score.
//!
//! Seeds for the model draw, the sample, the augmentation and the
//! selection split are derived from the trial seed, so a trial is a pure
//! function of its inputs.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::augmentation::{self, DaOperator};
use crate::error::{invalid, Error, Result};
use crate::estimators::{self, FitOptions, IvlProblem, LinearEstimate, RiskReport};
use crate::evaluation::{self, EvalConfig, NormKind, Scores};
use crate::linalg::Matrix;
use crate::rng;
use crate::selection::{self, AlphaGrid, CvScheme, SelectionResult};
use crate::sem::{self, Dataset, SemSpec};

/// How the feedback vector `tau` is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum TauMode {
    /// Acyclic model.
    #[default]
    Zero,
    /// Random direction rescaled so that `f . tau = gain`.
    Random { gain: f64 },
}

/// Random-model protocol: `f`, `eps` and `T` have standard normal entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Protocol {
    pub m: usize,
    /// Confounder dimension.
    pub q: usize,
    pub sigma: f64,
    pub tau: TauMode,
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol {
            m: 32,
            q: 32,
            sigma: 0.1,
            tau: TauMode::Zero,
        }
    }
}

impl Protocol {
    /// Draws `f`, `eps` and `T` (in that order, row-major) from `seed`.
    pub fn draw_spec(&self, kappa: f64, seed: u64) -> Result<SemSpec> {
        if self.m == 0 {
            return Err(invalid("m must be positive"));
        }
        let mut r = rng::seeded(seed);
        let f = rng::standard_normals(&mut r, self.m);
        let eps = rng::standard_normals(&mut r, self.q);
        let t = rng::standard_normal_matrix(&mut r, self.q, self.m);
        let mut spec = SemSpec::new(f, t.transpose(), eps)
            .with_sigma(self.sigma)
            .with_kappa(kappa);
        if let TauMode::Random { gain } = self.tau {
            let dir = rng::standard_normals(&mut r, self.m);
            let proj = spec.f.dot(&dir);
            if proj == 0.0 {
                return Err(invalid("degenerate feedback direction"));
            }
            spec = spec.with_tau(dir * (gain / proj));
        }
        Ok(spec)
    }
}

/// How the augmentation operator is built for a trial.
#[derive(Debug, Clone, PartialEq)]
pub enum DaDirective {
    /// Full orthonormal basis of `Null(f')`.
    Nullspace,
    /// Random subset of the null-space basis.
    Subset { keep_prob: f64 },
    /// Gaussian noise with covariance `scale * Cov(X)`.
    Gaussian { scale: f64 },
    /// Fixed directions `Gamma'` (`m x k`).
    Explicit(Matrix),
}

impl DaDirective {
    /// Operator with strength `gamma` for `spec`.
    pub fn build(&self, spec: &SemSpec, gamma: f64, seed: u64) -> Result<DaOperator> {
        let da = match self {
            DaDirective::Nullspace => augmentation::nullspace_basis(&spec.f)?,
            DaDirective::Subset { keep_prob } => {
                augmentation::subset_basis(&augmentation::nullspace_basis(&spec.f)?, *keep_prob, seed)?
            }
            DaDirective::Gaussian { scale } => {
                augmentation::gaussian_noise_da(&spec.population_moments()?.cov_x(), *scale)?
            }
            DaDirective::Explicit(g) => DaOperator::new(g.clone(), 1.0)?,
        };
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(invalid("augmentation strength must be finite and non-negative"));
        }
        Ok(da.with_strength(gamma))
    }
}

impl fmt::Display for DaDirective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DaDirective::Nullspace => write!(f, "nullspace"),
            DaDirective::Subset { keep_prob } => write!(f, "subset({keep_prob})"),
            DaDirective::Gaussian { scale } => write!(f, "gaussian({scale})"),
            DaDirective::Explicit(g) => write!(f, "explicit({}x{})", g.nrows(), g.ncols()),
        }
    }
}

fn parse_call<'a>(s: &'a str, name: &str) -> Option<&'a str> {
    s.strip_prefix(name)?.strip_prefix('(')?.strip_suffix(')').map(str::trim)
}

fn parse_number(s: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|_| invalid(format!("not a number: {s:?}")))
}

impl FromStr for DaDirective {
    type Err = Error;

    /// `nullspace`, `subset(p)` or `gaussian(scale)`; `gaussian` alone uses
    /// the default scale.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "nullspace" {
            return Ok(DaDirective::Nullspace);
        }
        if s == "gaussian" {
            return Ok(DaDirective::Gaussian {
                scale: augmentation::DEFAULT_NOISE_SCALE,
            });
        }
        if let Some(arg) = parse_call(s, "subset") {
            let keep_prob = parse_number(arg)?;
            if !(keep_prob > 0.0 && keep_prob <= 1.0) {
                return Err(invalid("subset probability must lie in (0, 1]"));
            }
            return Ok(DaDirective::Subset { keep_prob });
        }
        if let Some(arg) = parse_call(s, "gaussian") {
            let scale = parse_number(arg)?;
            if !(scale >= 0.0 && scale.is_finite()) {
                return Err(invalid("gaussian scale must be finite and non-negative"));
            }
            return Ok(DaDirective::Gaussian { scale });
        }
        Err(invalid(format!("unknown augmentation directive {s:?}")))
    }
}

/// Where the IVL `alpha` comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaChoice {
    /// The `alpha` coordinate of the trial (alpha sweeps).
    Sweep,
    Fixed(f64),
    Cv,
    Lcv,
    Cc,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MethodSpec {
    Erm,
    DaErm,
    DaIv,
    DaIvl(AlphaChoice),
}

impl MethodSpec {
    pub fn label(&self) -> String {
        match self {
            MethodSpec::Erm => "ERM".into(),
            MethodSpec::DaErm => "DA_ERM".into(),
            MethodSpec::DaIv => "DA_IV".into(),
            MethodSpec::DaIvl(AlphaChoice::Sweep) => "DA_IVL".into(),
            MethodSpec::DaIvl(AlphaChoice::Fixed(a)) => format!("DA_IVL({a})"),
            MethodSpec::DaIvl(AlphaChoice::Cv) => "DA_IVL(cv)".into(),
            MethodSpec::DaIvl(AlphaChoice::Lcv) => "DA_IVL(lcv)".into(),
            MethodSpec::DaIvl(AlphaChoice::Cc) => "DA_IVL(cc)".into(),
        }
    }

    pub fn uses_alpha(&self) -> bool {
        matches!(self, MethodSpec::DaIvl(_))
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for MethodSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "ERM" => return Ok(MethodSpec::Erm),
            "DA_ERM" => return Ok(MethodSpec::DaErm),
            "DA_IV" => return Ok(MethodSpec::DaIv),
            "DA_IVL" => return Ok(MethodSpec::DaIvl(AlphaChoice::Sweep)),
            _ => {}
        }
        let arg = parse_call(s, "DA_IVL").ok_or_else(|| invalid(format!("unknown method {s:?}")))?;
        let choice = match arg {
            "cv" => AlphaChoice::Cv,
            "lcv" => AlphaChoice::Lcv,
            "cc" => AlphaChoice::Cc,
            other => {
                let a = parse_number(other)?;
                if !(a > 0.0 && a.is_finite()) {
                    return Err(invalid("fixed alpha must be positive and finite"));
                }
                AlphaChoice::Fixed(a)
            }
        };
        Ok(MethodSpec::DaIvl(choice))
    }
}

/// Parameters of the `alpha` selection strategies.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionSettings {
    pub grid: AlphaGrid,
    pub cv: CvScheme,
    pub lcv_level_frac: f64,
    pub lcv_bins: usize,
}

impl Default for SelectionSettings {
    fn default() -> Self {
        SelectionSettings {
            grid: AlphaGrid::default(),
            cv: CvScheme::default(),
            lcv_level_frac: 0.2,
            lcv_bins: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrialSettings {
    pub selection: SelectionSettings,
    pub norm: NormKind,
    /// Also compute the per-method risk report.
    pub with_risks: bool,
}

/// Inputs of one trial besides the settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialInput<'a> {
    pub spec: &'a SemSpec,
    pub da: &'a DaDirective,
    pub gamma: f64,
    /// Values used by [`AlphaChoice::Sweep`] methods, one result each.
    pub alphas: &'a [f64],
    pub n: usize,
    pub seed: u64,
    pub methods: &'a [MethodSpec],
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodOutcome {
    pub method: MethodSpec,
    pub estimate: LinearEstimate,
    pub scores: Scores,
    pub selection: Option<SelectionResult>,
    pub risks: Option<RiskReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub da: DaOperator,
    /// One entry per method, or per `alpha` for sweep methods, in request
    /// order.
    pub results: Vec<MethodResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodResult {
    pub method: MethodSpec,
    /// The `alpha` coordinate for sweep methods.
    pub alpha: Option<f64>,
    pub outcome: Result<MethodOutcome>,
}

const SAMPLE_TAG: u64 = 1;
const DA_BUILD_TAG: u64 = 2;
const DA_DRAW_TAG: u64 = 3;
const SELECT_TAG: u64 = 4;

/// Samples `n` rows, augments them and fits every requested method.
///
/// Fitting failures are reported per method; sampling and augmentation
/// failures fail the whole trial.
pub fn run_trial(input: &TrialInput<'_>, settings: &TrialSettings) -> Result<TrialOutcome> {
    if input.methods.is_empty() {
        return Err(invalid("no methods requested"));
    }
    let report = sem::validate_spec(input.spec);
    if !report.passed() {
        let failed: Vec<String> = report
            .checks
            .iter()
            .filter(|c| !c.passed && c.name != "stability")
            .map(|c| c.detail.to_string())
            .collect();
        return Err(invalid(format!("invalid model: {}", failed.join("; "))));
    }
    let (data, _) = sem::sample(input.spec, input.n, rng::derive_seed(input.seed, &[SAMPLE_TAG]))?;
    let da = input
        .da
        .build(input.spec, input.gamma, rng::derive_seed(input.seed, &[DA_BUILD_TAG]))?;
    let aug = augmentation::apply(&da, &data, rng::derive_seed(input.seed, &[DA_DRAW_TAG]))?;
    let eval = eval_config(input.spec, settings.norm)?;
    let fit = FitInput {
        data: &data,
        aug: &aug,
        eval: &eval,
        cc_target: input.spec.f.norm(),
        alphas: input.alphas,
        seed: input.seed,
        methods: input.methods,
    };
    let results = fit_methods(&fit, settings)?;
    Ok(TrialOutcome { da, results })
}

/// Data of one trial, already sampled and augmented.
#[derive(Debug, Clone, Copy)]
pub struct FitInput<'a> {
    /// Observational sample (used by ERM).
    pub data: &'a Dataset,
    /// Augmented sample; its `z` block holds the drawn augmentation
    /// parameters.
    pub aug: &'a Dataset,
    pub eval: &'a EvalConfig,
    /// Coefficient norm targeted by confounder correction.
    pub cc_target: f64,
    pub alphas: &'a [f64],
    pub seed: u64,
    pub methods: &'a [MethodSpec],
}

/// Fits and scores every method on prepared data. Per-method failures are
/// reported in the results.
pub fn fit_methods(input: &FitInput<'_>, settings: &TrialSettings) -> Result<Vec<MethodResult>> {
    if input.methods.is_empty() {
        return Err(invalid("no methods requested"));
    }
    if input.aug.z.is_none() {
        return Err(invalid("augmented data carries no augmentation parameters"));
    }
    let mut ctx = Context {
        input,
        settings,
        ivl: None,
    };
    let mut results = Vec::new();
    for &method in input.methods {
        if method == MethodSpec::DaIvl(AlphaChoice::Sweep) {
            if input.alphas.is_empty() {
                results.push(MethodResult {
                    method,
                    alpha: None,
                    outcome: Err(invalid("DA_IVL without a fixed alpha needs alpha values")),
                });
            }
            for &a in input.alphas {
                results.push(MethodResult {
                    method,
                    alpha: Some(a),
                    outcome: ctx.fit(method, Some(a)),
                });
            }
        } else {
            results.push(MethodResult {
                method,
                alpha: None,
                outcome: ctx.fit(method, None),
            });
        }
    }
    Ok(results)
}

/// Evaluation settings for a simulated model: the true `f`, and for the
/// weighted norm the observational covariance of `X`.
pub fn eval_config(spec: &SemSpec, norm: NormKind) -> Result<EvalConfig> {
    match norm {
        NormKind::Euclidean => Ok(EvalConfig::euclidean(spec.f.clone())),
        NormKind::WeightedByCovX => EvalConfig::weighted(spec.f.clone(), spec.population_moments()?.cov_x()),
    }
}

struct Context<'a, 'b> {
    input: &'a FitInput<'b>,
    settings: &'a TrialSettings,
    ivl: Option<IvlProblem>,
}

impl Context<'_, '_> {
    fn g(&self) -> &Matrix {
        self.input.aug.z.as_ref().expect("augmented data carries g")
    }

    fn ivl_problem(&mut self) -> Result<&IvlProblem> {
        if self.ivl.is_none() {
            self.ivl = Some(IvlProblem::new(&self.input.aug.x, &self.input.aug.y, self.g(), &FitOptions::default())?);
        }
        Ok(self.ivl.as_ref().expect("just set"))
    }

    fn fit(&mut self, method: MethodSpec, sweep_alpha: Option<f64>) -> Result<MethodOutcome> {
        let mut selection = None;
        let mut instruments: Option<Matrix> = None;
        let estimate = match method {
            MethodSpec::Erm => estimators::fit_ols(&self.input.data.x, &self.input.data.y)?,
            MethodSpec::DaErm => estimators::fit_ols(&self.input.aug.x, &self.input.aug.y)?,
            MethodSpec::DaIv => estimators::fit_2sls(&self.input.aug.x, &self.input.aug.y, self.g())?,
            MethodSpec::DaIvl(choice) => {
                let settings = &self.settings.selection;
                let split_seed = rng::derive_seed(self.input.seed, &[SELECT_TAG]);
                let alpha = match choice {
                    AlphaChoice::Sweep => sweep_alpha.ok_or_else(|| invalid("missing alpha value"))?,
                    AlphaChoice::Fixed(a) => a,
                    AlphaChoice::Cv => {
                        let sel = selection::select_alpha_cv_with(
                            &self.input.aug.x,
                            &self.input.aug.y,
                            self.g(),
                            &settings.grid,
                            settings.cv,
                            split_seed,
                        )?;
                        let a = sel.chosen_alpha;
                        selection = Some(sel);
                        a
                    }
                    AlphaChoice::Lcv => {
                        let sel = selection::select_alpha_lcv(
                            &self.input.aug.x,
                            &self.input.aug.y,
                            self.g(),
                            &settings.grid,
                            settings.lcv_level_frac,
                            settings.lcv_bins,
                            split_seed,
                        )?;
                        let a = sel.chosen_alpha;
                        selection = Some(sel);
                        instruments = Some(selection::discretize_levels(self.g(), settings.lcv_bins)?.codes);
                        a
                    }
                    AlphaChoice::Cc => {
                        let target = self.input.cc_target;
                        let sel = selection::select_alpha_cc_prepared(self.ivl_problem()?, &settings.grid, target)?;
                        let a = sel.chosen_alpha;
                        selection = Some(sel);
                        a
                    }
                };
                match &instruments {
                    Some(codes) => estimators::fit_ivl(&self.input.aug.x, &self.input.aug.y, codes, alpha)?,
                    None => self.ivl_problem()?.solve(alpha)?,
                }
            }
        };
        let mut estimate = estimate;
        estimate.meta.seed = Some(self.input.seed);
        let cer = evaluation::cer(&estimate.h, self.input.eval)?;
        let ncer = evaluation::ncer_vs_null(&estimate.h, self.input.eval)?;
        let risks = if self.settings.with_risks {
            let (x, y, z) = match method {
                MethodSpec::Erm => (&self.input.data.x, &self.input.data.y, None),
                MethodSpec::DaErm => (&self.input.aug.x, &self.input.aug.y, Some(self.g())),
                _ => (&self.input.aug.x, &self.input.aug.y, Some(instruments.as_ref().unwrap_or(self.g()))),
            };
            Some(estimators::risk_report(&estimate, x, y, z)?)
        } else {
            None
        };
        Ok(MethodOutcome {
            method,
            estimate,
            scores: Scores { cer, ncer },
            selection,
            risks,
        })
    }
}
