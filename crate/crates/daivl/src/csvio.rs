//! CSV formats.
//!
//! Measured values are written with 17 significant digits and coordinates
//! with the shortest representation that parses back to the same `f64`, so
//! every file round-trips exactly.

use std::io::{Read, Write};

use daivl_core::estimators::LinearEstimate;
use daivl_core::evaluation::{GroupKey, GroupSummary, Scores, SweepCoords, SweepResult, TrialRecord};
use daivl_core::sem::{Dataset, ZRole};
use daivl_core::{Matrix, Vector};

use crate::error::{CliError, CliResult};

pub const RESULT_HEADER: [&str; 8] = ["kappa", "gamma", "alpha", "n", "seed", "method", "cer", "ncer"];
pub const AGGREGATE_HEADER: [&str; 10] = [
    "kappa", "gamma", "alpha", "n", "method", "mean_ncer", "stderr", "ci_low", "ci_high", "trials",
];
pub const SELECTION_HEADER: [&str; 8] = ["kappa", "gamma", "n", "seed", "method", "strategy", "chosen_alpha", "score"];
pub const ERROR_HEADER: [&str; 7] = ["kappa", "gamma", "alpha", "n", "seed", "method", "error"];

/// 17 significant digits.
pub fn fmt_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Shortest round-trip representation.
pub fn fmt_coord(v: f64) -> String {
    format!("{v}")
}

fn fmt_opt(v: Option<f64>, f: fn(f64) -> String) -> String {
    v.map(f).unwrap_or_default()
}

fn parse_f64(s: &str, what: &str) -> CliResult<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| CliError::validation(format!("{what}: cannot parse {s:?} as a number")))
}

fn parse_opt(s: &str, what: &str) -> CliResult<Option<f64>> {
    if s.trim().is_empty() {
        Ok(None)
    } else {
        parse_f64(s, what).map(Some)
    }
}

fn parse_int<T: std::str::FromStr>(s: &str, what: &str) -> CliResult<T> {
    s.trim()
        .parse::<T>()
        .map_err(|_| CliError::validation(format!("{what}: cannot parse {s:?} as an integer")))
}

fn check_header(found: &csv::StringRecord, expected: &[&str]) -> CliResult<()> {
    let found: Vec<&str> = found.iter().collect();
    if found != expected {
        return Err(CliError::validation(format!(
            "unexpected CSV header {found:?}, expected {expected:?}"
        )));
    }
    Ok(())
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

/// Header `x_0..x_{m-1},y[,z_..][,c_..]`.
pub fn write_dataset<W: Write>(w: W, data: &Dataset) -> CliResult<()> {
    let mut out = writer(w);
    let mut header: Vec<String> = (0..data.m()).map(|j| format!("x_{j}")).collect();
    header.push("y".into());
    if let Some(z) = &data.z {
        header.extend((0..z.ncols()).map(|j| format!("z_{j}")));
    }
    if let Some(c) = &data.c {
        header.extend((0..c.ncols()).map(|j| format!("c_{j}")));
    }
    out.write_record(&header)?;
    for i in 0..data.n_samples() {
        let mut row: Vec<String> = data.x.row(i).iter().map(|v| fmt_value(*v)).collect();
        row.push(fmt_value(data.y[i]));
        for block in [&data.z, &data.c].into_iter().flatten() {
            row.extend(block.row(i).iter().map(|v| fmt_value(*v)));
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_dataset<R: Read>(r: R) -> CliResult<Dataset> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers()?.clone();
    let mut xs = Vec::new();
    let mut zs = Vec::new();
    let mut cs = Vec::new();
    let mut y_col = None;
    for (idx, name) in header.iter().enumerate() {
        let indexed = |prefix: &str| name.strip_prefix(prefix).and_then(|s| s.parse::<usize>().ok());
        if name == "y" {
            y_col = Some(idx);
        } else if let Some(j) = indexed("x_") {
            xs.push((j, idx));
        } else if let Some(j) = indexed("z_") {
            zs.push((j, idx));
        } else if let Some(j) = indexed("c_") {
            cs.push((j, idx));
        } else {
            return Err(CliError::validation(format!("unknown dataset column {name:?}")));
        }
    }
    let y_col = y_col.ok_or_else(|| CliError::validation("dataset has no y column"))?;
    for (block, name) in [(&mut xs, "x"), (&mut zs, "z"), (&mut cs, "c")] {
        block.sort();
        if block.iter().enumerate().any(|(k, (j, _))| k != *j) {
            return Err(CliError::validation(format!("{name} columns are not numbered 0..")));
        }
    }
    if xs.is_empty() {
        return Err(CliError::validation("dataset has no x columns"));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let vals = rec
            .iter()
            .map(|s| parse_f64(s, "dataset"))
            .collect::<CliResult<Vec<f64>>>()?;
        rows.push(vals);
    }
    let n = rows.len();
    let block = |cols: &[(usize, usize)]| Matrix::from_fn(n, cols.len(), |i, j| rows[i][cols[j].1]);
    let mut data = Dataset::new(block(&xs), Vector::from_fn(n, |i, _| rows[i][y_col])).map_err(CliError::from_core_validation)?;
    if !zs.is_empty() {
        data = data.with_z(block(&zs), ZRole::Instrument).map_err(CliError::from_core_validation)?;
    }
    if !cs.is_empty() {
        data = data.with_c(block(&cs)).map_err(CliError::from_core_validation)?;
    }
    Ok(data)
}

/// Per-trial rows; failed trials leave `cer` and `ncer` empty.
pub fn write_results<W: Write>(w: W, records: &[TrialRecord]) -> CliResult<()> {
    let mut out = writer(w);
    out.write_record(RESULT_HEADER)?;
    for r in records {
        let c = &r.coords;
        out.write_record([
            fmt_coord(c.kappa),
            fmt_coord(c.gamma),
            fmt_opt(c.alpha, fmt_coord),
            c.n.to_string(),
            c.seed.to_string(),
            r.method.clone(),
            fmt_opt(r.scores.map(|s| s.cer), fmt_value),
            fmt_opt(r.scores.map(|s| s.ncer), fmt_value),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Inverse of [`write_results`]. Failed rows come back with an empty error
/// message; see [`attach_errors`].
pub fn read_results<R: Read>(r: R) -> CliResult<Vec<TrialRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    check_header(rdr.headers()?, &RESULT_HEADER)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let coords = SweepCoords {
            kappa: parse_f64(&rec[0], "kappa")?,
            gamma: parse_f64(&rec[1], "gamma")?,
            alpha: parse_opt(&rec[2], "alpha")?,
            n: parse_int(&rec[3], "n")?,
            seed: parse_int(&rec[4], "seed")?,
        };
        let scores = match (parse_opt(&rec[6], "cer")?, parse_opt(&rec[7], "ncer")?) {
            (Some(cer), Some(ncer)) => Some(Scores { cer, ncer }),
            (None, None) => None,
            _ => return Err(CliError::validation("cer and ncer must both be present or both empty")),
        };
        out.push(TrialRecord {
            coords,
            method: rec[5].to_string(),
            error: scores.is_none().then(String::new),
            scores,
        });
    }
    Ok(out)
}

/// Failed records only, with their messages.
pub fn write_errors<W: Write>(w: W, records: &[TrialRecord]) -> CliResult<()> {
    let mut out = writer(w);
    out.write_record(ERROR_HEADER)?;
    for r in records.iter().filter(|r| r.scores.is_none()) {
        let c = &r.coords;
        out.write_record([
            fmt_coord(c.kappa),
            fmt_coord(c.gamma),
            fmt_opt(c.alpha, fmt_coord),
            c.n.to_string(),
            c.seed.to_string(),
            r.method.clone(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Fills in error messages from an errors file, matching failed rows in
/// order.
pub fn attach_errors<R: Read>(records: &mut [TrialRecord], errors: R) -> CliResult<()> {
    let mut rdr = csv::Reader::from_reader(errors);
    check_header(rdr.headers()?, &ERROR_HEADER)?;
    let mut failed = records.iter_mut().filter(|r| r.scores.is_none());
    for rec in rdr.records() {
        let rec = rec?;
        let target = failed
            .next()
            .ok_or_else(|| CliError::validation("more error rows than failed records"))?;
        if target.method != rec[5] || target.coords.seed.to_string() != rec[4] {
            return Err(CliError::validation("error rows do not match failed records"));
        }
        target.error = Some(rec[6].to_string());
    }
    Ok(())
}

pub fn write_aggregate<W: Write>(w: W, result: &SweepResult) -> CliResult<()> {
    let mut out = writer(w);
    out.write_record(AGGREGATE_HEADER)?;
    for g in &result.groups {
        let k = &g.key;
        out.write_record([
            fmt_coord(k.kappa),
            fmt_coord(k.gamma),
            fmt_opt(k.alpha, fmt_coord),
            k.n.to_string(),
            k.method.clone(),
            fmt_value(g.mean_ncer),
            fmt_value(g.stderr),
            fmt_value(g.ci_low),
            fmt_value(g.ci_high),
            g.n_trials.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Inverse of [`write_aggregate`] (failure counts are not stored).
pub fn read_aggregate<R: Read>(r: R) -> CliResult<SweepResult> {
    let mut rdr = csv::Reader::from_reader(r);
    check_header(rdr.headers()?, &AGGREGATE_HEADER)?;
    let mut groups = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        groups.push(GroupSummary {
            key: GroupKey {
                kappa: parse_f64(&rec[0], "kappa")?,
                gamma: parse_f64(&rec[1], "gamma")?,
                alpha: parse_opt(&rec[2], "alpha")?,
                n: parse_int(&rec[3], "n")?,
                method: rec[4].to_string(),
            },
            mean_ncer: parse_f64(&rec[5], "mean_ncer")?,
            stderr: parse_f64(&rec[6], "stderr")?,
            ci_low: parse_f64(&rec[7], "ci_low")?,
            ci_high: parse_f64(&rec[8], "ci_high")?,
            n_trials: parse_int(&rec[9], "trials")?,
            n_failed: 0,
        });
    }
    Ok(SweepResult { groups })
}

/// One `alpha` selection made inside a trial.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionRow {
    pub kappa: f64,
    pub gamma: f64,
    pub n: usize,
    pub seed: u64,
    pub method: String,
    pub strategy: String,
    pub chosen_alpha: f64,
    pub score: f64,
}

pub fn write_selections<W: Write>(w: W, rows: &[SelectionRow]) -> CliResult<()> {
    let mut out = writer(w);
    out.write_record(SELECTION_HEADER)?;
    for s in rows {
        out.write_record([
            fmt_coord(s.kappa),
            fmt_coord(s.gamma),
            s.n.to_string(),
            s.seed.to_string(),
            s.method.clone(),
            s.strategy.clone(),
            fmt_coord(s.chosen_alpha),
            fmt_value(s.score),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_selections<R: Read>(r: R) -> CliResult<Vec<SelectionRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    check_header(rdr.headers()?, &SELECTION_HEADER)?;
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            Ok(SelectionRow {
                kappa: parse_f64(&rec[0], "kappa")?,
                gamma: parse_f64(&rec[1], "gamma")?,
                n: parse_int(&rec[2], "n")?,
                seed: parse_int(&rec[3], "seed")?,
                method: rec[4].to_string(),
                strategy: rec[5].to_string(),
                chosen_alpha: parse_f64(&rec[6], "chosen_alpha")?,
                score: parse_f64(&rec[7], "score")?,
            })
        })
        .collect()
}

/// Fitted estimates, one row each: method, alpha, intercept, diagnostics,
/// then the coefficients `h_0..h_{m-1}`.
pub fn write_estimates<W: Write>(w: W, estimates: &[(String, LinearEstimate)]) -> CliResult<()> {
    let mut out = writer(w);
    let m = estimates.first().map_or(0, |(_, e)| e.m());
    let mut header: Vec<String> = ["method", "alpha", "intercept", "rank", "condition_number", "rank_deficient", "n", "seed"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..m).map(|j| format!("h_{j}")));
    out.write_record(&header)?;
    for (label, e) in estimates {
        if e.m() != m {
            return Err(CliError::runtime("estimates have different dimensions"));
        }
        let mut row = vec![
            label.clone(),
            fmt_opt(e.alpha, fmt_coord),
            fmt_value(e.intercept),
            e.meta.rank.to_string(),
            fmt_value(e.meta.condition_number),
            e.meta.rank_deficient.to_string(),
            e.meta.n.to_string(),
            e.meta.seed.map(|s| s.to_string()).unwrap_or_default(),
        ];
        row.extend(e.h.iter().map(|v| fmt_value(*v)));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// A single named coefficient vector, one `index,value` row per entry.
pub fn write_vector<W: Write>(w: W, name: &str, v: &Vector) -> CliResult<()> {
    let mut out = writer(w);
    out.write_record(["index", name])?;
    for (i, x) in v.iter().enumerate() {
        out.write_record([i.to_string(), fmt_value(*x)])?;
    }
    out.flush()?;
    Ok(())
}
