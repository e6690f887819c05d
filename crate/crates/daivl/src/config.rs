//! TOML experiment configuration.
//!
//! Matrices are written as row-major nested lists. A config describes the
//! model either explicitly (`[sem]`) or as a random protocol redrawn per
//! trial (`[protocol]`).

use std::path::{Path, PathBuf};

use daivl_core::evaluation::NormKind;
use daivl_core::experiment::{AlphaChoice, DaDirective, MethodSpec, Protocol, SelectionSettings, TauMode, TrialSettings};
use daivl_core::selection::{AlphaGrid, CvScheme};
use daivl_core::sem::{self, SemSpec};
use daivl_core::{Matrix, Vector};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemConfig {
    pub f: Vec<f64>,
    /// `m x q` confounder loading on `X`.
    pub conf_x: Vec<Vec<f64>>,
    pub conf_y: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<Vec<f64>>,
    /// `m x k` instrument loading.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_mat: Option<Vec<Vec<f64>>>,
    #[serde(default = "one")]
    pub sigma: f64,
    #[serde(default = "one")]
    pub kappa: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_cov: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_cov: Option<Vec<Vec<f64>>>,
}

fn one() -> f64 {
    1.0
}

pub fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> CliResult<Matrix> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(CliError::validation(format!("{what}: rows have different lengths")));
    }
    Ok(Matrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().cloned().collect()).collect()
}

impl SemConfig {
    pub fn to_spec(&self) -> CliResult<SemSpec> {
        let m = self.f.len();
        let mut conf_x = matrix_from_rows(&self.conf_x, "conf_x")?;
        if self.conf_x.is_empty() {
            conf_x = Matrix::zeros(m, 0);
        }
        let mut spec = SemSpec::new(Vector::from_vec(self.f.clone()), conf_x, Vector::from_vec(self.conf_y.clone()))
            .with_sigma(self.sigma)
            .with_kappa(self.kappa);
        if let Some(tau) = &self.tau {
            spec = spec.with_tau(Vector::from_vec(tau.clone()));
        }
        if let Some(g) = &self.gamma_mat {
            let g = matrix_from_rows(g, "gamma_mat")?;
            spec = spec.with_instruments(if g.nrows() == 0 { Matrix::zeros(m, 0) } else { g });
        }
        spec.z_cov = self.z_cov.as_deref().map(|r| matrix_from_rows(r, "z_cov")).transpose()?;
        spec.c_cov = self.c_cov.as_deref().map(|r| matrix_from_rows(r, "c_cov")).transpose()?;
        spec.check_dimensions().map_err(CliError::from_core_validation)?;
        Ok(spec)
    }

    pub fn from_spec(spec: &SemSpec) -> Self {
        SemConfig {
            f: spec.f.iter().cloned().collect(),
            conf_x: matrix_to_rows(&spec.conf_x),
            conf_y: spec.conf_y.iter().cloned().collect(),
            tau: Some(spec.tau.iter().cloned().collect()),
            gamma_mat: (spec.k() > 0).then(|| matrix_to_rows(&spec.gamma_mat)),
            sigma: spec.sigma,
            kappa: spec.kappa,
            z_cov: spec.z_cov.as_ref().map(matrix_to_rows),
            c_cov: spec.c_cov.as_ref().map(matrix_to_rows),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_m")]
    pub q: usize,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Loop gain `f . tau`; acyclic when absent or zero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_gain: Option<f64>,
}

fn default_m() -> usize {
    32
}

fn default_sigma() -> f64 {
    0.1
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            m: 32,
            q: 32,
            sigma: 0.1,
            tau_gain: None,
        }
    }
}

impl ProtocolConfig {
    pub fn to_protocol(&self) -> Protocol {
        Protocol {
            m: self.m,
            q: self.q,
            sigma: self.sigma,
            tau: match self.tau_gain {
                Some(g) if g != 0.0 => TauMode::Random { gain: g },
                _ => TauMode::Zero,
            },
        }
    }
}

/// Augmentation: a directive string or explicit directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DaConfig {
    /// `nullspace`, `subset(p)` or `gaussian(scale)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directive: Option<String>,
    /// Explicit `m x k` directions; overrides `directive`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_mat: Option<Vec<Vec<f64>>>,
}

impl Default for DaConfig {
    fn default() -> Self {
        DaConfig {
            directive: Some("nullspace".into()),
            gamma_mat: None,
        }
    }
}

impl DaConfig {
    pub fn to_directive(&self) -> CliResult<DaDirective> {
        if let Some(g) = &self.gamma_mat {
            return Ok(DaDirective::Explicit(matrix_from_rows(g, "da.gamma_mat")?));
        }
        self.directive
            .as_deref()
            .unwrap_or("nullspace")
            .parse()
            .map_err(CliError::from_core_validation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Kappa,
    Alpha,
    Gamma,
}

impl Axis {
    pub fn as_str(&self) -> &'static str {
        match self {
            Axis::Kappa => "kappa",
            Axis::Alpha => "alpha",
            Axis::Gamma => "gamma",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: Axis,
    pub values: Vec<f64>,
}

/// Coordinates used when an axis is not swept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseCoords {
    #[serde(default = "one")]
    pub kappa: f64,
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

impl Default for BaseCoords {
    fn default() -> Self {
        BaseCoords {
            kappa: 1.0,
            gamma: 1.0,
            alpha: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionConfig {
    /// Explicit grid; overrides the log-uniform bounds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(default = "grid_lo")]
    pub grid_lo: f64,
    #[serde(default = "one")]
    pub grid_hi: f64,
    #[serde(default = "grid_count")]
    pub grid_count: usize,
    #[serde(default = "fifth")]
    pub holdout_frac: f64,
    /// K-fold CV instead of a single holdout split.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub folds: Option<usize>,
    #[serde(default = "fifth")]
    pub lcv_level_frac: f64,
    #[serde(default = "two")]
    pub lcv_bins: usize,
}

fn grid_lo() -> f64 {
    1e-4
}
fn grid_count() -> usize {
    32
}
fn fifth() -> f64 {
    0.2
}
fn two() -> usize {
    2
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            grid: None,
            grid_lo: 1e-4,
            grid_hi: 1.0,
            grid_count: 32,
            holdout_frac: 0.2,
            folds: None,
            lcv_level_frac: 0.2,
            lcv_bins: 2,
        }
    }
}

impl SelectionConfig {
    pub fn to_settings(&self) -> CliResult<SelectionSettings> {
        let grid = match &self.grid {
            Some(values) => AlphaGrid::new(values.clone()),
            None => AlphaGrid::log_uniform(self.grid_lo, self.grid_hi, self.grid_count),
        }
        .map_err(CliError::from_core_validation)?;
        let cv = match self.folds {
            Some(folds) => CvScheme::KFold { folds },
            None => CvScheme::Holdout {
                frac: self.holdout_frac,
            },
        };
        if !(self.holdout_frac > 0.0 && self.holdout_frac < 1.0) {
            return Err(CliError::validation("selection.holdout_frac must lie in (0, 1)"));
        }
        if !(self.lcv_level_frac > 0.0 && self.lcv_level_frac < 1.0) {
            return Err(CliError::validation("selection.lcv_level_frac must lie in (0, 1)"));
        }
        if self.lcv_bins < 2 {
            return Err(CliError::validation("selection.lcv_bins must be at least 2"));
        }
        Ok(SelectionSettings {
            grid,
            cv,
            lcv_level_frac: self.lcv_level_frac,
            lcv_bins: self.lcv_bins,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormConfig {
    #[default]
    Euclidean,
    Weighted,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    #[serde(default)]
    pub norm: NormConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
    #[serde(default = "yes")]
    pub plot: bool,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn yes() -> bool {
    true
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: default_out(),
            plot: true,
        }
    }
}

/// Column roles of an ingested CSV. Columns are named by header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestSpec {
    pub path: PathBuf,
    pub x: Vec<String>,
    pub y: String,
    #[serde(default)]
    pub c: Vec<String>,
    /// Polynomial degree in `1..=5`; selected by holdout error when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub da: Option<DaConfig>,
}

impl IngestSpec {
    pub fn validate(&self) -> CliResult<()> {
        if self.x.is_empty() {
            return Err(CliError::validation("ingest: the x role needs at least one column"));
        }
        if self.c.is_empty() {
            return Err(CliError::validation("ingest: missing C block (role `c` lists no columns)"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for name in self.x.iter().chain(&self.c).chain(std::iter::once(&self.y)) {
            if !seen.insert(name.as_str()) {
                return Err(CliError::validation(format!("ingest: column {name:?} has more than one role")));
            }
        }
        if let Some(d) = self.degree {
            if !(1..=5).contains(&d) {
                return Err(CliError::validation("ingest: degree must lie in 1..=5"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<String>,
    /// Keep the protocol's random coefficients fixed across trials.
    #[serde(default)]
    pub fixed_sem: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sem: Option<SemConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<ProtocolConfig>,
    #[serde(default)]
    pub da: DaConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub base: BaseCoords,
    #[serde(default)]
    pub selection: SelectionConfig,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ingest: Option<IngestSpec>,
}

fn default_n() -> usize {
    2048
}

fn default_methods() -> Vec<String> {
    vec!["ERM".into(), "DA_ERM".into(), "DA_IVL(cc)".into()]
}

fn default_trials() -> usize {
    25
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            master_seed: 0,
            n: default_n(),
            trials: default_trials(),
            methods: default_methods(),
            fixed_sem: false,
            workers: None,
            sem: None,
            protocol: Some(ProtocolConfig::default()),
            da: DaConfig::default(),
            sweep: None,
            base: BaseCoords::default(),
            selection: SelectionConfig::default(),
            eval: EvalSection::default(),
            output: OutputConfig::default(),
            ingest: None,
        }
    }
}

/// Where the model of each trial comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSource {
    Fixed(Box<SemSpec>),
    Random { protocol: Protocol, fixed: bool },
}

/// A validated configuration in core types.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub model: ModelSource,
    pub da: DaDirective,
    pub methods: Vec<MethodSpec>,
    pub settings: TrialSettings,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::validation(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn parse_methods(&self) -> CliResult<Vec<MethodSpec>> {
        if self.methods.is_empty() {
            return Err(CliError::validation("methods list is empty"));
        }
        self.methods
            .iter()
            .map(|m| m.parse::<MethodSpec>().map_err(CliError::from_core_validation))
            .collect()
    }

    /// Checks every section and converts it to core types.
    pub fn resolve(&self) -> CliResult<Resolved> {
        let methods = self.parse_methods()?;
        if self.trials == 0 {
            return Err(CliError::validation("trials must be at least 1"));
        }
        if self.n == 0 {
            return Err(CliError::validation("n must be at least 1"));
        }
        let model = match (&self.sem, &self.protocol) {
            (Some(_), Some(_)) => return Err(CliError::validation("give either [sem] or [protocol], not both")),
            (Some(s), None) => {
                let spec = s.to_spec()?;
                let report = sem::validate_spec(&spec);
                if !report.passed() {
                    let msgs: Vec<String> = report
                        .checks
                        .iter()
                        .filter(|c| !c.passed && c.name != "stability")
                        .map(|c| format!("{}: {}", c.name, c.detail))
                        .collect();
                    return Err(CliError::validation(format!("sem: {}", msgs.join("; "))));
                }
                ModelSource::Fixed(Box::new(spec))
            }
            (None, p) => {
                let p = p.clone().unwrap_or_default();
                if p.m == 0 {
                    return Err(CliError::validation("protocol.m must be positive"));
                }
                if !(p.sigma >= 0.0 && p.sigma.is_finite()) {
                    return Err(CliError::validation("protocol.sigma must be finite and non-negative"));
                }
                ModelSource::Random {
                    protocol: p.to_protocol(),
                    fixed: self.fixed_sem,
                }
            }
        };
        let da = self.da.to_directive()?;
        self.check_coords()?;
        let settings = self.resolve_settings()?;
        let sweeps_alpha = self.sweep.as_ref().is_some_and(|s| s.axis == Axis::Alpha);
        if methods.contains(&MethodSpec::DaIvl(AlphaChoice::Sweep)) && !sweeps_alpha && self.base.alpha.is_none() {
            return Err(CliError::validation(
                "method DA_IVL needs an alpha sweep or base.alpha; use DA_IVL(<alpha>) for a fixed value",
            ));
        }
        Ok(Resolved {
            model,
            da,
            methods,
            settings,
        })
    }

    /// Selection and evaluation settings alone.
    pub fn resolve_settings(&self) -> CliResult<TrialSettings> {
        Ok(TrialSettings {
            selection: self.selection.to_settings()?,
            norm: match self.eval.norm {
                NormConfig::Euclidean => NormKind::Euclidean,
                NormConfig::Weighted => NormKind::WeightedByCovX,
            },
            with_risks: false,
        })
    }

    fn check_coords(&self) -> CliResult<()> {
        let b = &self.base;
        check_value(Axis::Kappa, b.kappa)?;
        check_value(Axis::Gamma, b.gamma)?;
        if let Some(a) = b.alpha {
            check_value(Axis::Alpha, a)?;
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return Err(CliError::validation("sweep.values is empty"));
            }
            for v in &s.values {
                check_value(s.axis, *v)?;
            }
            let mut sorted = s.values.clone();
            sorted.sort_by(f64::total_cmp);
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(CliError::validation("sweep.values contains duplicates"));
            }
        }
        Ok(())
    }
}

/// Sweep value ranges: `kappa >= 0`, `alpha > 0`, `gamma >= 0`.
pub fn check_value(axis: Axis, v: f64) -> CliResult<()> {
    let ok = v.is_finite()
        && match axis {
            Axis::Alpha => v > 0.0,
            Axis::Kappa | Axis::Gamma => v >= 0.0,
        };
    if ok {
        Ok(())
    } else {
        Err(CliError::validation(format!("invalid {} value {v}", axis.as_str())))
    }
}
