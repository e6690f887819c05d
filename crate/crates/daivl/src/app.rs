//! Command-line interface.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use daivl_core::discrete;
use daivl_core::experiment::DaDirective;
use daivl_core::sem;

use crate::config::{Axis, ExperimentConfig, SweepConfig};
use crate::csvio;
use crate::error::{CliError, CliResult};
use crate::harness;
use crate::ingest;
use crate::plot;

#[derive(Debug, Parser)]
#[command(name = "daivl", version, about = "Data augmentation as IV-like regression: simulation sweeps and tools")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a configuration file and print the effective settings.
    Validate(Common),
    /// Run one trial at the base coordinates and report every method.
    Run(Common),
    /// Run a sweep and write result, aggregate and plot files.
    Sweep(SweepArgs),
    /// Extract a ground truth from a CSV and optionally score methods on it.
    Ingest(Common),
    /// Sample a dataset (X, y, Z, C) from the configured model.
    Generate(GenerateArgs),
    /// Colored-digit style discrete demo: observational vs ATE predictor.
    DemoDiscrete(DemoArgs),
    /// Render an aggregate CSV as SVG.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Samples per trial.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// Worker threads (0 = one per core). Falls back to DAIVL_WORKERS.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, value_enum)]
    pub axis: Option<Axis>,
    /// Comma-separated values, or `log:lo:hi:count` for log-spaced points.
    #[arg(long)]
    pub values: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Destination CSV (default: <out>/dataset.csv).
    #[arg(long)]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DemoArgs {
    #[arg(long, default_value_t = 0.1)]
    pub e_train: f64,
    #[arg(long, default_value_t = 0.9)]
    pub e_test: f64,
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct PlotArgs {
    /// Aggregate CSV.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub axis: Axis,
    /// Destination SVG.
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `--values`.
pub fn parse_values(s: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::validation(format!("cannot parse values {s:?}"));
    if let Some(rest) = s.strip_prefix("log:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
        let grid = daivl_core::selection::AlphaGrid::log_uniform(lo, hi, count).map_err(CliError::from_core_validation)?;
        return Ok(grid.values().to_vec());
    }
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect()
}

fn load(common: &Common) -> CliResult<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    if let Some(n) = common.n {
        cfg.n = n;
    }
    if let Some(out) = &common.out {
        cfg.output.dir = out.clone();
    }
    Ok(cfg)
}

/// Config file plus command-line overrides.
pub fn sweep_config(args: &SweepArgs) -> CliResult<ExperimentConfig> {
    let mut cfg = load(&args.common)?;
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    let values = args.values.as_deref().map(parse_values).transpose()?;
    match (args.axis, values, cfg.sweep.as_mut()) {
        (Some(axis), Some(values), _) => cfg.sweep = Some(SweepConfig { axis, values }),
        (None, Some(values), Some(s)) => s.values = values,
        (None, Some(_), None) => return Err(CliError::validation("--values needs --axis or a [sweep] section")),
        (Some(axis), None, Some(s)) if s.axis == axis => {}
        (Some(_), None, _) => return Err(CliError::validation("--axis needs --values")),
        (None, None, _) => {}
    }
    if cfg.sweep.is_none() {
        return Err(CliError::validation("no sweep: give [sweep] in the config or --axis and --values"));
    }
    Ok(cfg)
}

fn writer(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", path.display())))
}

pub fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Validate(c) => {
            let cfg = load(&c)?;
            let r = cfg.resolve()?;
            if let Some(spec) = &cfg.ingest {
                spec.validate()?;
            }
            let labels: Vec<String> = r.methods.iter().map(|m| m.label()).collect();
            println!("configuration is valid; methods: {}", labels.join(", "));
            print!("{}", cfg.to_toml());
        }
        Command::Run(c) => {
            let cfg = load(&c)?;
            let report = harness::run_single(&cfg)?;
            print!("{}", report.summary());
            let dir = &cfg.output.dir;
            csvio::write_results(writer(&dir.join("run.csv"))?, &report.records())?;
            csvio::write_estimates(writer(&dir.join("estimates.csv"))?, &report.estimates())?;
            fs::write(dir.join("metadata.toml"), harness::metadata(&cfg))?;
            println!("wrote {}", dir.display());
        }
        Command::Sweep(args) => {
            let cfg = sweep_config(&args)?;
            let workers = harness::resolve_workers(args.workers, &cfg)?;
            let out = harness::run_sweep(&cfg, workers)?;
            let files = harness::write_sweep(&cfg.output.dir, &cfg, &out)?;
            println!(
                "{} rows, {} failed; results in {}",
                out.records.len(),
                out.n_failed(),
                files.results.display()
            );
            if let Some(p) = files.plot {
                println!("plot: {}", p.display());
            }
        }
        Command::Ingest(c) => run_ingest(&load(&c)?)?,
        Command::Generate(args) => {
            let cfg = load(&args.common)?;
            let r = cfg.resolve()?;
            let seed = harness::trial_seed(cfg.master_seed, cfg.base.kappa, cfg.base.gamma, cfg.n, 0);
            let spec = harness::trial_model(&r.model, cfg.master_seed, cfg.base.kappa, seed)?;
            let (data, _) = sem::sample(&spec, cfg.n, seed)?;
            let path = args.file.unwrap_or_else(|| cfg.output.dir.join("dataset.csv"));
            csvio::write_dataset(writer(&path)?, &data)?;
            csvio::write_vector(writer(&path.with_extension("f.csv"))?, "f", &spec.f)?;
            println!("wrote {} rows to {}", data.n_samples(), path.display());
        }
        Command::DemoDiscrete(a) => {
            for (name, e) in [("e_train", a.e_train), ("e_test", a.e_test)] {
                if !(0.0..=1.0).contains(&e) {
                    return Err(CliError::validation(format!("{name} must lie in [0, 1]")));
                }
            }
            let rep = discrete::demo(a.e_train, a.e_test, a.n, a.seed).map_err(CliError::from_core_validation)?;
            println!("samples per environment: {}", rep.n);
            println!("e_train = {}, e_test = {}", rep.e_train, rep.e_test);
            println!("observational predictor accuracy: {:.4}", rep.observational_accuracy);
            println!("ATE predictor accuracy:           {:.4}", rep.ate_accuracy);
            println!("ATE label recovery:               {:.4}", rep.ate_label_recovery);
            println!("max fixed-point sweeps:           {}", rep.max_sweeps);
        }
        Command::Plot(a) => {
            let bytes = fs::read(&a.input)
                .map_err(|e| CliError::validation(format!("cannot read {}: {e}", a.input.display())))?;
            let svg = plot::render_csv(&bytes, a.axis)?;
            let mut w = writer(&a.out)?;
            w.write_all(svg.as_bytes())?;
            w.flush()?;
        }
    }
    Ok(())
}

fn run_ingest(cfg: &ExperimentConfig) -> CliResult<()> {
    let spec = cfg
        .ingest
        .as_ref()
        .ok_or_else(|| CliError::validation("config has no [ingest] section"))?;
    let (_, ex) = ingest::ingest(spec, cfg.master_seed)?;
    let dir = &cfg.output.dir;
    csvio::write_dataset(writer(&dir.join("design.csv"))?, &ex.design)?;
    csvio::write_vector(writer(&dir.join("truth.csv"))?, "f", &ex.truth)?;
    println!(
        "degree {} ({} features), {} rows",
        ex.degree,
        ex.truth.len(),
        ex.design.n_samples()
    );
    for (d, mse) in &ex.degree_scores {
        println!("  degree {d}: holdout MSE {mse:.6e}");
    }
    if cfg.methods.is_empty() {
        return Ok(());
    }
    let methods = cfg.parse_methods()?;
    let directive: DaDirective = match &spec.da {
        Some(da) => da.to_directive()?,
        None => cfg.da.to_directive()?,
    };
    let settings = cfg.resolve_settings()?;
    let results = ingest::evaluate(&ex, &directive, cfg.base.gamma, &methods, &settings, cfg.master_seed)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer(&dir.join("ingest_eval.csv"))?);
    w.write_record(["method", "alpha", "cer", "ncer", "error"])?;
    for r in &results {
        let (cer, ncer, alpha, err) = match &r.outcome {
            Ok(o) => (
                csvio::fmt_value(o.scores.cer),
                csvio::fmt_value(o.scores.ncer),
                o.estimate.alpha.map(csvio::fmt_coord).unwrap_or_default(),
                String::new(),
            ),
            Err(e) => (String::new(), String::new(), String::new(), e.to_string()),
        };
        println!("  {:<14} nCER {}", r.method.label(), if ncer.is_empty() { &err } else { &ncer });
        w.write_record([r.method.label(), alpha, cer, ncer, err])?;
    }
    w.flush()?;
    Ok(())
}

/// Parses arguments, runs, and maps the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
