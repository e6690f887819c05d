use std::fmt::Write as _;
use std::fs;
use std::process::Command;

use daivl::config::IngestSpec;
use daivl::ingest::{self, read_table, Table};
use daivl_core::evaluation::NormKind;
use daivl_core::experiment::{AlphaChoice, DaDirective, MethodSpec, TrialSettings};
use daivl_core::rng;
use daivl_core::{Matrix, Vector};

const F: [f64; 3] = [1.5, -0.7, 0.3];

/// Confounded stand-in: `X = C A + N`, `y = X f + C b + 0.5 N_y`.
fn synthetic(n: usize, seed: u64) -> String {
    let mut r = rng::seeded(seed);
    let mut out = String::from("x0,x1,x2,c0,c1,target\n");
    for _ in 0..n {
        let c = [rng::standard_normal(&mut r), rng::standard_normal(&mut r)];
        let x: Vec<f64> = (0..3)
            .map(|j| c[0] * (j as f64 - 1.0) + c[1] * 0.8 + rng::standard_normal(&mut r))
            .collect();
        let y = x.iter().zip(F).map(|(a, b)| a * b).sum::<f64>() + 2.0 * c[0] - c[1] + 0.5 * rng::standard_normal(&mut r);
        writeln!(out, "{},{},{},{},{},{}", x[0], x[1], x[2], c[0], c[1], y).unwrap();
    }
    out
}

fn spec(degree: Option<usize>) -> IngestSpec {
    IngestSpec {
        path: "data.csv".into(),
        x: vec!["x0".into(), "x1".into(), "x2".into()],
        y: "target".into(),
        c: vec!["c0".into(), "c1".into()],
        degree,
        da: None,
    }
}

/// Classical OLS standard errors of `y ~ 1 + [X, C]` via the normal
/// equations.
fn ols_with_se(table: &Table) -> (Vector, Vector) {
    let n = table.y.len();
    let p = 1 + table.x.ncols() + table.c.ncols();
    let d = Matrix::from_fn(n, p, |i, j| match j {
        0 => 1.0,
        j if j <= table.x.ncols() => table.x[(i, j - 1)],
        j => table.c[(i, j - 1 - table.x.ncols())],
    });
    let gram_inv = (d.transpose() * &d).try_inverse().expect("full rank");
    let beta = &gram_inv * d.transpose() * &table.y;
    let resid = &table.y - &d * &beta;
    let s2 = resid.norm_squared() / (n - p) as f64;
    let se = Vector::from_fn(p, |j, _| (s2 * gram_inv[(j, j)]).sqrt());
    (beta.rows(1, table.x.ncols()).into_owned(), se.rows(1, table.x.ncols()).into_owned())
}

#[test]
fn linear_truth_is_recovered_within_ols_error() {
    let text = synthetic(3000, 1);
    let table = read_table(text.as_bytes(), &spec(Some(1))).unwrap();
    let ex = ingest::extract_truth(&table, Some(1), 0).unwrap();
    let (beta, se) = ols_with_se(&table);
    assert_eq!(ex.truth.len(), 3);
    assert_eq!(ex.design.x.ncols(), 3);
    for j in 0..3 {
        assert!((ex.truth[j] - beta[j]).abs() < 1e-9, "{} vs {}", ex.truth[j], beta[j]);
        assert!((ex.truth[j] - F[j]).abs() <= 3.0 * se[j], "coef {j}: {} vs {} (se {})", ex.truth[j], F[j], se[j]);
    }
    assert_eq!(ex.c_coef.len(), 2);
    assert!((ex.c_coef[0] - 2.0).abs() < 0.1 && (ex.c_coef[1] + 1.0).abs() < 0.1, "{}", ex.c_coef);
}

#[test]
fn dropping_the_confounder_block_matters() {
    // Regressing on X alone is biased; the extracted truth is not.
    let text = synthetic(3000, 2);
    let table = read_table(text.as_bytes(), &spec(Some(1))).unwrap();
    let ex = ingest::extract_truth(&table, Some(1), 0).unwrap();
    let naive = daivl_core::estimators::fit_ols(&table.x, &table.y).unwrap().h;
    let f = Vector::from_column_slice(&F);
    assert!((&naive - &f).norm() > 5.0 * (&ex.truth - &f).norm());
}

#[test]
fn degree_two_with_nine_treatments_has_54_features() {
    let mut r = rng::seeded(3);
    let names: Vec<String> = (0..9).map(|j| format!("v{j}")).collect();
    let mut text = names.join(",") + ",w,y\n";
    for _ in 0..200 {
        let row: Vec<String> = (0..11).map(|_| rng::standard_normal(&mut r).to_string()).collect();
        text += &(row.join(",") + "\n");
    }
    let spec = IngestSpec {
        path: "unused".into(),
        x: names,
        y: "y".into(),
        c: vec!["w".into()],
        degree: Some(2),
        da: None,
    };
    let table = read_table(text.as_bytes(), &spec).unwrap();
    let ex = ingest::extract_truth(&table, Some(2), 0).unwrap();
    assert_eq!(ex.design.x.ncols(), 54);
    assert_eq!(ex.truth.len(), 54);
}

#[test]
fn missing_roles_are_named() {
    let mut no_c = spec(Some(1));
    no_c.c.clear();
    let err = read_table(synthetic(10, 4).as_bytes(), &no_c).unwrap_err().to_string();
    assert!(err.contains("C block") && err.contains("`c`"), "{err}");

    let mut missing = spec(Some(1));
    missing.c = vec!["c0".into(), "nope".into()];
    let err = read_table(synthetic(10, 4).as_bytes(), &missing).unwrap_err().to_string();
    assert!(err.contains("\"nope\"") && err.contains("`c`"), "{err}");

    let table = read_table(synthetic(10, 4).as_bytes(), &spec(Some(1))).unwrap();
    let stripped = Table {
        c: Matrix::zeros(table.y.len(), 0),
        ..table
    };
    assert!(ingest::extract_truth(&stripped, Some(1), 0).is_err());

    let bad = "x0,x1,x2,c0,c1,target\n1,2,3,4,five,6\n";
    let err = read_table(bad.as_bytes(), &spec(Some(1))).unwrap_err().to_string();
    assert!(err.contains("c1") && err.contains("five"), "{err}");
}

#[test]
fn methods_score_against_the_extracted_truth() {
    let text = synthetic(2048, 5);
    let table = read_table(text.as_bytes(), &spec(Some(1))).unwrap();
    let ex = ingest::extract_truth(&table, Some(1), 0).unwrap();
    let methods = [MethodSpec::Erm, MethodSpec::DaErm, MethodSpec::DaIvl(AlphaChoice::Cc)];
    let settings = TrialSettings {
        norm: NormKind::Euclidean,
        ..TrialSettings::default()
    };
    let results = ingest::evaluate(&ex, &DaDirective::Nullspace, 1.0, &methods, &settings, 9).unwrap();
    assert_eq!(results.len(), 3);
    let ncer: Vec<f64> = results
        .iter()
        .map(|r| r.outcome.as_ref().unwrap().scores.ncer)
        .collect();
    assert!(ncer.iter().all(|v| (0.0..=1.0).contains(v)));
    // Plain ERM on (phi(X), y) carries the confounding bias.
    assert!(ncer[0] > 0.05, "{ncer:?}");
    assert!(ncer[1] < ncer[0], "{ncer:?}");
}

#[test]
fn ingest_subcommand_writes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data.csv");
    fs::write(&data, synthetic(500, 6)).unwrap();
    let out = tmp.path().join("out");
    let config = format!(
        "methods = [\"ERM\", \"DA_ERM\"]\n[ingest]\npath = {:?}\nx = [\"x0\", \"x1\", \"x2\"]\ny = \"target\"\nc = [\"c0\", \"c1\"]\n",
        data.to_str().unwrap()
    );
    let cfg = tmp.path().join("ingest.toml");
    fs::write(&cfg, config).unwrap();
    let run = Command::new(env!("CARGO_BIN_EXE_daivl"))
        .args(["ingest", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(stdout.contains("degree 1"), "{stdout}");
    for f in ["design.csv", "truth.csv", "ingest_eval.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert_eq!(fs::read_to_string(out.join("ingest_eval.csv")).unwrap().lines().count(), 3);

    let no_c = tmp.path().join("no_c.toml");
    fs::write(
        &no_c,
        format!("[ingest]\npath = {:?}\nx = [\"x0\"]\ny = \"target\"\n", data.to_str().unwrap()),
    )
    .unwrap();
    let run = Command::new(env!("CARGO_BIN_EXE_daivl"))
        .args(["ingest", "--config", no_c.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(run.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&run.stderr).contains("C block"));
}
