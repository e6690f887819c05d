//! Sweep and single-trial orchestration.
//!
//! Trials run in parallel; every trial owns its derived RNG streams and
//! returns a buffer of rows. Rows are ordered by (coordinates, trial,
//! method) before anything is written, so output bytes do not depend on
//! the worker count.

use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use daivl_core::estimators::LinearEstimate;
use daivl_core::evaluation::{self, SweepCoords, SweepResult, TrialRecord};
use daivl_core::experiment::{self, MethodResult, TrialInput, TrialOutcome};
use daivl_core::rng::derive_seed;
use daivl_core::sem::SemSpec;
use rayon::prelude::*;

use crate::config::{Axis, ExperimentConfig, ModelSource, Resolved};
use crate::csvio::{self, SelectionRow};
use crate::error::{CliError, CliResult};
use crate::plot;

const MODEL_TAG: u64 = 5;

/// Environment variable consulted when no worker count is given.
pub const WORKERS_ENV: &str = "DAIVL_WORKERS";

/// Seed of one trial. `alpha` is not part of it: every `alpha` of an alpha
/// sweep is evaluated on the same data.
pub fn trial_seed(master: u64, kappa: f64, gamma: f64, n: usize, trial: usize) -> u64 {
    derive_seed(master, &[kappa.to_bits(), gamma.to_bits(), n as u64, trial as u64])
}

/// The model of one trial.
pub fn trial_model(model: &ModelSource, master: u64, kappa: f64, seed: u64) -> CliResult<SemSpec> {
    match model {
        ModelSource::Fixed(spec) => Ok(spec.clone().with_kappa(kappa)),
        ModelSource::Random { protocol, fixed } => {
            let s = if *fixed {
                derive_seed(master, &[MODEL_TAG])
            } else {
                derive_seed(seed, &[MODEL_TAG])
            };
            Ok(protocol.draw_spec(kappa, s)?)
        }
    }
}

/// One unit of parallel work.
#[derive(Debug, Clone, PartialEq)]
struct Job {
    kappa: f64,
    gamma: f64,
    /// Fixed alpha coordinate when alpha is not swept.
    alpha: Option<f64>,
    /// All alpha values of an alpha sweep.
    alphas: Vec<f64>,
    trial: usize,
    seed: u64,
}

fn plan(cfg: &ExperimentConfig) -> CliResult<Vec<Job>> {
    let base = &cfg.base;
    let job = |kappa: f64, gamma: f64, alpha: Option<f64>, alphas: Vec<f64>, trial: usize| Job {
        kappa,
        gamma,
        alpha,
        alphas,
        trial,
        seed: trial_seed(cfg.master_seed, kappa, gamma, cfg.n, trial),
    };
    let mut jobs = Vec::new();
    match &cfg.sweep {
        Some(s) if s.axis == Axis::Alpha => {
            let mut values = s.values.clone();
            values.sort_by(f64::total_cmp);
            for t in 0..cfg.trials {
                jobs.push(job(base.kappa, base.gamma, None, values.clone(), t));
            }
        }
        Some(s) => {
            let mut values = s.values.clone();
            values.sort_by(f64::total_cmp);
            for v in values {
                let (kappa, gamma) = match s.axis {
                    Axis::Kappa => (v, base.gamma),
                    _ => (base.kappa, v),
                };
                for t in 0..cfg.trials {
                    jobs.push(job(kappa, gamma, base.alpha, base.alpha.into_iter().collect(), t));
                }
            }
        }
        None => {
            for t in 0..cfg.trials {
                jobs.push(job(base.kappa, base.gamma, base.alpha, base.alpha.into_iter().collect(), t));
            }
        }
    }
    let mut seen = HashSet::with_capacity(jobs.len());
    if let Some(j) = jobs.iter().find(|j| !seen.insert(j.seed)) {
        return Err(CliError::runtime(format!(
            "trial seed collision at kappa={} gamma={} trial={}",
            j.kappa, j.gamma, j.trial
        )));
    }
    Ok(jobs)
}

/// Rows produced by one trial, tagged for ordering.
#[derive(Debug, Default)]
struct TrialRows {
    records: Vec<(usize, usize, TrialRecord)>,
    selections: Vec<SelectionRow>,
}

fn run_job(job: &Job, cfg: &ExperimentConfig, resolved: &Resolved) -> TrialRows {
    let mut rows = TrialRows::default();
    let coords = |alpha: Option<f64>| SweepCoords {
        kappa: job.kappa,
        gamma: job.gamma,
        alpha,
        n: cfg.n,
        seed: job.seed,
    };
    let outcome = trial_model(&resolved.model, cfg.master_seed, job.kappa, job.seed).and_then(|spec| {
        let input = TrialInput {
            spec: &spec,
            da: &resolved.da,
            gamma: job.gamma,
            alphas: &job.alphas,
            n: cfg.n,
            seed: job.seed,
            methods: &resolved.methods,
        };
        experiment::run_trial(&input, &resolved.settings).map_err(CliError::from)
    });
    let alpha_sweep = job.alpha.is_none() && !job.alphas.is_empty();
    match outcome {
        Ok(TrialOutcome { results, .. }) => {
            for r in &results {
                let idx = resolved.methods.iter().position(|m| *m == r.method).unwrap_or(0);
                // Alpha-free methods are repeated at every alpha of an alpha sweep.
                let alphas: Vec<Option<f64>> = match (r.alpha, alpha_sweep) {
                    (Some(a), _) => vec![Some(a)],
                    (None, true) => job.alphas.iter().map(|a| Some(*a)).collect(),
                    (None, false) => vec![job.alpha],
                };
                for a in alphas {
                    rows.records.push((job.trial, idx, record(coords(a), r)));
                }
                if let Ok(o) = &r.outcome {
                    if let Some(sel) = &o.selection {
                        rows.selections.push(SelectionRow {
                            kappa: job.kappa,
                            gamma: job.gamma,
                            n: cfg.n,
                            seed: job.seed,
                            method: r.method.label(),
                            strategy: sel.strategy.as_str().into(),
                            chosen_alpha: sel.chosen_alpha,
                            score: sel.chosen_score(&resolved.settings.selection.grid),
                        });
                    }
                }
            }
        }
        Err(e) => {
            let msg = e.to_string();
            for (idx, m) in resolved.methods.iter().enumerate() {
                let alphas: Vec<Option<f64>> = if alpha_sweep {
                    job.alphas.iter().map(|a| Some(*a)).collect()
                } else {
                    vec![job.alpha]
                };
                for a in alphas {
                    rows.records.push((
                        job.trial,
                        idx,
                        TrialRecord {
                            coords: coords(a),
                            method: m.label(),
                            scores: None,
                            error: Some(msg.clone()),
                        },
                    ));
                }
            }
        }
    }
    rows
}

fn record(coords: SweepCoords, r: &MethodResult) -> TrialRecord {
    match &r.outcome {
        Ok(o) => TrialRecord {
            coords,
            method: r.method.label(),
            scores: Some(o.scores),
            error: None,
        },
        Err(e) => TrialRecord {
            coords,
            method: r.method.label(),
            scores: None,
            error: Some(e.to_string()),
        },
    }
}

/// Everything a sweep produces, in output order.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub records: Vec<TrialRecord>,
    pub selections: Vec<SelectionRow>,
    pub aggregate: SweepResult,
}

impl SweepOutput {
    pub fn n_failed(&self) -> usize {
        self.records.iter().filter(|r| r.scores.is_none()).count()
    }
}

/// Worker count: explicit value, else the environment, else the config,
/// else one per core (0).
pub fn resolve_workers(flag: Option<usize>, cfg: &ExperimentConfig) -> CliResult<usize> {
    if let Some(w) = flag {
        return Ok(w);
    }
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        return v
            .trim()
            .parse()
            .map_err(|_| CliError::validation(format!("{WORKERS_ENV}={v:?} is not a worker count")));
    }
    Ok(cfg.workers.unwrap_or(0))
}

/// Runs every (sweep value, trial) pair. Failed trials become rows with an
/// error and never abort the sweep.
pub fn run_sweep(cfg: &ExperimentConfig, workers: usize) -> CliResult<SweepOutput> {
    let resolved = cfg.resolve()?;
    let jobs = plan(cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::runtime(format!("thread pool: {e}")))?;
    let buffers: Vec<TrialRows> = pool.install(|| jobs.par_iter().map(|j| run_job(j, cfg, &resolved)).collect());

    let mut tagged = Vec::new();
    let mut selections = Vec::new();
    for b in buffers {
        tagged.extend(b.records);
        selections.extend(b.selections);
    }
    tagged.sort_by(|(ta, ma, a), (tb, mb, b)| {
        let (ca, cb) = (&a.coords, &b.coords);
        ca.kappa
            .total_cmp(&cb.kappa)
            .then(ca.gamma.total_cmp(&cb.gamma))
            .then(cmp_alpha(ca.alpha, cb.alpha))
            .then(ta.cmp(tb))
            .then(ma.cmp(mb))
    });
    let records: Vec<TrialRecord> = tagged.into_iter().map(|(_, _, r)| r).collect();
    let aggregate = evaluation::aggregate(&records)?;
    Ok(SweepOutput {
        records,
        selections,
        aggregate,
    })
}

fn cmp_alpha(a: Option<f64>, b: Option<f64>) -> std::cmp::Ordering {
    match (a, b) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (a, b) => a.is_some().cmp(&b.is_some()),
    }
}

fn create(dir: &Path, name: &str) -> CliResult<BufWriter<File>> {
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", path.display())))
}

/// Paths written by [`write_sweep`].
#[derive(Debug, Clone, PartialEq)]
pub struct SweepFiles {
    pub results: PathBuf,
    pub aggregate: PathBuf,
    pub selection: PathBuf,
    pub errors: Option<PathBuf>,
    pub metadata: PathBuf,
    pub plot: Option<PathBuf>,
}

/// Writes `results.csv`, `aggregate.csv`, `selection.csv`, `metadata.toml`,
/// `errors.csv` when a trial failed, and `plot.svg` when enabled.
pub fn write_sweep(dir: &Path, cfg: &ExperimentConfig, out: &SweepOutput) -> CliResult<SweepFiles> {
    fs::create_dir_all(dir).map_err(|e| CliError::runtime(format!("cannot create {}: {e}", dir.display())))?;
    csvio::write_results(create(dir, "results.csv")?, &out.records)?;
    csvio::write_aggregate(create(dir, "aggregate.csv")?, &out.aggregate)?;
    csvio::write_selections(create(dir, "selection.csv")?, &out.selections)?;
    let errors = if out.n_failed() > 0 {
        csvio::write_errors(create(dir, "errors.csv")?, &out.records)?;
        Some(dir.join("errors.csv"))
    } else {
        None
    };
    let mut meta = create(dir, "metadata.toml")?;
    meta.write_all(metadata(cfg).as_bytes())?;
    meta.flush()?;
    let plot_path = match (&cfg.sweep, cfg.output.plot) {
        (Some(s), true) => {
            let svg = plot::render(&out.aggregate, s.axis)?;
            let path = dir.join("plot.svg");
            fs::write(&path, svg)?;
            Some(path)
        }
        _ => None,
    };
    Ok(SweepFiles {
        results: dir.join("results.csv"),
        aggregate: dir.join("aggregate.csv"),
        selection: dir.join("selection.csv"),
        errors,
        metadata: dir.join("metadata.toml"),
        plot: plot_path,
    })
}

/// Effective configuration plus how the statistics were computed.
pub fn metadata(cfg: &ExperimentConfig) -> String {
    let mut run = toml::Table::new();
    run.insert("ci".into(), "normal-approx-95".into());
    run.insert("z".into(), evaluation::Z_95.into());
    run.insert("stderr".into(), "sample standard deviation (n - 1) / sqrt(n)".into());
    run.insert("trial_seed".into(), "derived from master_seed, kappa, gamma, n and trial index".into());
    run.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    let mut doc = toml::Table::new();
    doc.insert("run".into(), toml::Value::Table(run));
    let config: toml::Table = toml::from_str(&cfg.to_toml()).expect("config is valid toml");
    doc.insert("config".into(), toml::Value::Table(config));
    toml::to_string(&doc).expect("metadata serializes")
}

/// One fitted method of a single run.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleMethod {
    pub label: String,
    pub record: TrialRecord,
    pub estimate: Option<LinearEstimate>,
    pub risks: Option<daivl_core::estimators::RiskReport>,
    pub selected_alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleReport {
    pub spec: SemSpec,
    pub methods: Vec<SingleMethod>,
}

/// One trial at the base coordinates (trial index 0) with risk reports.
pub fn run_single(cfg: &ExperimentConfig) -> CliResult<SingleReport> {
    let mut resolved = cfg.resolve()?;
    resolved.settings.with_risks = true;
    let base = &cfg.base;
    let seed = trial_seed(cfg.master_seed, base.kappa, base.gamma, cfg.n, 0);
    let spec = trial_model(&resolved.model, cfg.master_seed, base.kappa, seed)?;
    let alphas: Vec<f64> = base.alpha.into_iter().collect();
    let input = TrialInput {
        spec: &spec,
        da: &resolved.da,
        gamma: base.gamma,
        alphas: &alphas,
        n: cfg.n,
        seed,
        methods: &resolved.methods,
    };
    let outcome = experiment::run_trial(&input, &resolved.settings)?;
    let coords = SweepCoords {
        kappa: base.kappa,
        gamma: base.gamma,
        alpha: base.alpha,
        n: cfg.n,
        seed,
    };
    let methods = outcome
        .results
        .iter()
        .map(|r| {
            let ok = r.outcome.as_ref().ok();
            SingleMethod {
                label: r.method.label(),
                record: record(SweepCoords { alpha: r.alpha.or(coords.alpha), ..coords }, r),
                estimate: ok.map(|o| o.estimate.clone()),
                risks: ok.and_then(|o| o.risks),
                selected_alpha: ok.and_then(|o| o.selection.as_ref().map(|s| s.chosen_alpha)),
            }
        })
        .collect();
    Ok(SingleReport { spec, methods })
}

impl SingleReport {
    pub fn summary(&self) -> String {
        let mut s = format!(
            "model: m={} q={} kappa={} sigma={}\n",
            self.spec.m(),
            self.spec.q(),
            self.spec.kappa,
            self.spec.sigma
        );
        s.push_str(&format!(
            "{:<16} {:>12} {:>12} {:>12} {:>12} {:>12}\n",
            "method", "nCER", "CER", "alpha", "ERM risk", "IV risk"
        ));
        for m in &self.methods {
            match (&m.record.scores, &m.record.error) {
                (Some(sc), _) => {
                    let alpha = m.estimate.as_ref().and_then(|e| e.alpha).or(m.selected_alpha);
                    let risks = m.risks.as_ref();
                    s.push_str(&format!(
                        "{:<16} {:>12.6} {:>12.6e} {:>12} {:>12.6e} {:>12}\n",
                        m.label,
                        sc.ncer,
                        sc.cer,
                        alpha.map_or("-".into(), |a| format!("{a:.4e}")),
                        risks.map_or(f64::NAN, |r| r.erm_risk),
                        risks.and_then(|r| r.iv_risk).map_or("-".into(), |v| format!("{v:.6e}")),
                    ));
                }
                (None, err) => s.push_str(&format!("{:<16} failed: {}\n", m.label, err.as_deref().unwrap_or("?"))),
            }
        }
        s
    }

    pub fn records(&self) -> Vec<TrialRecord> {
        self.methods.iter().map(|m| m.record.clone()).collect()
    }

    pub fn estimates(&self) -> Vec<(String, LinearEstimate)> {
        self.methods
            .iter()
            .filter_map(|m| m.estimate.clone().map(|e| (m.label.clone(), e)))
            .collect()
    }
}
