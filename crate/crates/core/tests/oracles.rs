//! Monte-Carlo checks against closed-form population values.
//!
//! The expected values below are worked out by hand from the structural
//! equations (second moments of sums of independent standard normals), not
//! from the library's own moment routines.

use daivl_core::augmentation::{self, nullspace_basis, subset_basis};
use daivl_core::discrete::{self, ColoredDigit, LABEL_FLIP};
use daivl_core::estimators::{fit_2sls, fit_ivl, fit_ols, gmm_iv_risk};
use daivl_core::evaluation::{cer, ncer_vs_null, EvalConfig};
use daivl_core::rng;
use daivl_core::sem::{sample, sample_hard_do, SemSpec};
use daivl_core::{Matrix, Vector};

const N: usize = 100_000;

fn v(xs: &[f64]) -> Vector {
    Vector::from_vec(xs.to_vec())
}

/// X = C + N_X, Y = X + C + N_Y.
fn confounded_scalar() -> SemSpec {
    SemSpec::new(v(&[1.0]), Matrix::from_element(1, 1, 1.0), v(&[1.0]))
}

/// X = Z + C + N_X, Y = X + C + N_Y.
fn valid_iv_scalar() -> SemSpec {
    confounded_scalar().with_instruments(Matrix::from_element(1, 1, 1.0))
}

/// Population IVL solution for scalar moments:
/// argmin_h (E[ZY] - h E[ZX])^2 / E[Z^2] + alpha E[(Y - hX)^2].
fn ivl_population(alpha: f64, exx: f64, exy: f64, ezx: f64, ezy: f64, ezz: f64) -> f64 {
    (ezx * ezy / ezz + alpha * exy) / (ezx * ezx / ezz + alpha * exx)
}

fn var(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
}

#[test]
fn confounded_scalar_ols_is_three_halves() {
    // E[X^2] = Var(C) + Var(N_X) = 2, E[XY] = E[X^2] + E[XC] = 3.
    let oracle = 3.0 / 2.0;
    let (data, _) = sample(&confounded_scalar(), N, 11).unwrap();
    let h = fit_ols(&data.x, &data.y).unwrap().h[0];
    assert!((h - oracle).abs() < 0.02, "{h}");
    // nCER of the population OLS solution: 0.25 / (0.25 + 1).
    let eval = EvalConfig::euclidean(v(&[1.0]));
    let n = ncer_vs_null(&v(&[oracle]), &eval).unwrap();
    assert!((n - 0.2).abs() < 1e-12);
}

#[test]
fn valid_iv_scalar_2sls_and_ivl() {
    // E[X^2] = 3, E[XY] = E[X^2] + E[XC] = 4, E[ZX] = E[ZY] = E[Z^2] = 1.
    let (exx, exy, ezx, ezy, ezz) = (3.0, 4.0, 1.0, 1.0, 1.0);
    let (data, _) = sample(&valid_iv_scalar(), N, 12).unwrap();
    let z = data.z.as_ref().unwrap();
    let iv = fit_2sls(&data.x, &data.y, z).unwrap().h[0];
    assert!((iv - 1.0).abs() < 0.02, "{iv}");
    let ols = fit_ols(&data.x, &data.y).unwrap().h[0];
    assert!((ols - 4.0 / 3.0).abs() < 0.02, "{ols}");
    for alpha in [0.01, 1.0, 100.0] {
        let oracle = ivl_population(alpha, exx, exy, ezx, ezy, ezz);
        assert!((oracle - (4.0 * alpha + 1.0) / (3.0 * alpha + 1.0)).abs() < 1e-12);
        let h = fit_ivl(&data.x, &data.y, z, alpha).unwrap().h[0];
        assert!((h - oracle).abs() < 0.02, "alpha {alpha}: {h} vs {oracle}");
    }
    // The structural coefficient has zero population moment with Z.
    let risk = gmm_iv_risk(&v(&[1.0]), &data.x, &data.y, z).unwrap();
    assert!(risk < 0.01, "{risk}");
}

#[test]
fn two_dimensional_augmentation_example() {
    // X1 = N1, X2 = C + N2, Y = X1 + C + N_Y, augmentation X2 += G.
    // Cov(X) = diag(1, 2), Cov(X, Y) = (1, 1)  => h_ERM = (1, 1/2).
    // Augmented: Var(X2 + G) = 3, Cov(X2 + G, Y) = 1 => h_DA = (1, 1/3).
    let f = v(&[1.0, 0.0]);
    let spec = SemSpec::new(f.clone(), Matrix::from_row_slice(2, 1, &[0.0, 1.0]), v(&[1.0]));
    let (data, _) = sample(&spec, N, 13).unwrap();
    let erm = fit_ols(&data.x, &data.y).unwrap().h;
    assert!((&erm - v(&[1.0, 0.5])).amax() < 0.02, "{erm}");
    let da = nullspace_basis(&f).unwrap().with_strength(1.0);
    let aug = augmentation::apply(&da, &data, 14).unwrap();
    let h_da = fit_ols(&aug.x, &aug.y).unwrap().h;
    assert!((&h_da - v(&[1.0, 1.0 / 3.0])).amax() < 0.02, "{h_da}");
    // nCER: 0.25 / 1.25 and (1/9) / (1/9 + 1).
    let eval = EvalConfig::euclidean(f);
    assert!((ncer_vs_null(&v(&[1.0, 0.5]), &eval).unwrap() - 0.2).abs() < 1e-12);
    assert!((ncer_vs_null(&v(&[1.0, 1.0 / 3.0]), &eval).unwrap() - 0.1).abs() < 1e-12);
    // Var(x~_2) = Var(x_2) + 1.
    let before = var(data.x.column(1).iter().cloned());
    let after = var(aug.x.column(1).iter().cloned());
    assert!((after - before - 1.0).abs() < 0.05, "{before} {after}");
}

#[test]
fn pure_noise_covariance() {
    let sigma = 0.5;
    let spec = SemSpec::new(v(&[0.3, -0.2, 0.7]), Matrix::zeros(3, 1), v(&[0.0])).with_sigma(sigma);
    let (data, _) = sample(&spec, N, 15).unwrap();
    let cov = daivl_core::linalg::covariance(&data.x);
    let expected = Matrix::identity(3, 3) * (sigma * sigma);
    // Entry-wise standard error is about sigma^2 * sqrt(2 / n).
    assert!((cov - expected).amax() < 6.0 * sigma * sigma * (2.0 / N as f64).sqrt());
}

#[test]
fn hard_intervention_examples() {
    let mut r = rng::seeded(16);
    let x = rng::standard_normal_matrix(&mut r, N, 2);
    let conf_x = Matrix::from_row_slice(2, 1, &[1.0, -1.0]);

    // f = 0: y is independent of the intervened x.
    let null = SemSpec::new(v(&[0.0, 0.0]), conf_x.clone(), v(&[1.0]));
    let d = sample_hard_do(&null, &x, 17).unwrap();
    let ym = d.y.mean();
    for j in 0..2 {
        let xm = x.column(j).mean();
        let cov: f64 = (0..N).map(|i| (x[(i, j)] - xm) * (d.y[i] - ym)).sum::<f64>();
        let corr = cov / ((0..N).map(|i| (x[(i, j)] - xm).powi(2)).sum::<f64>() * (0..N).map(|i| (d.y[i] - ym).powi(2)).sum::<f64>()).sqrt();
        assert!(corr.abs() < 3.0 / (N as f64).sqrt(), "{corr}");
    }

    // x = 0: Var(y) = kappa^2 |eps|^2 + sigma^2.
    let (kappa, eps, sigma) = (0.7, [1.0, 2.0], 0.5);
    let spec = SemSpec::new(v(&[1.0, 1.0]), Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]), v(&eps))
        .with_kappa(kappa)
        .with_sigma(sigma);
    let d = sample_hard_do(&spec, &Matrix::zeros(N, 2), 18).unwrap();
    let expected = kappa * kappa * (eps[0] * eps[0] + eps[1] * eps[1]) + sigma * sigma;
    let got = var(d.y.iter().cloned());
    // Var of a sample variance of a Gaussian: 2 s^4 / (n - 1).
    assert!((got - expected).abs() < 3.0 * expected * (2.0 / N as f64).sqrt(), "{got} vs {expected}");

    // Interventional data are unconfounded: OLS recovers f.
    let f = v(&[0.8, -1.3]);
    let spec = SemSpec::new(f.clone(), conf_x, v(&[2.0]));
    let d = sample_hard_do(&spec, &x, 19).unwrap();
    let h = fit_ols(&d.x, &d.y).unwrap().h;
    // Residual sd is sqrt(4 + 1); coefficient se about sqrt(5 / n).
    assert!((h - f).amax() < 4.0 * (5.0 / N as f64).sqrt());
}

#[test]
fn euclidean_cer_is_the_interventional_risk_gap() {
    // Under do(X = X') with X' ~ N(0, I):
    // E(Y - h X')^2 - E(Y - f X')^2 = |h - f|^2.
    let f = v(&[1.0, -0.5, 0.25]);
    let spec = SemSpec::new(f.clone(), Matrix::from_row_slice(3, 1, &[1.0, 1.0, 0.0]), v(&[1.0]));
    let h = v(&[0.6, 0.1, 0.0]);
    let mut r = rng::seeded(20);
    let xp = rng::standard_normal_matrix(&mut r, N, 3);
    let d = sample_hard_do(&spec, &xp, 21).unwrap();
    let gaps: Vec<f64> = (0..N)
        .map(|i| {
            let x = xp.row(i).transpose();
            (d.y[i] - h.dot(&x)).powi(2) - (d.y[i] - f.dot(&x)).powi(2)
        })
        .collect();
    let mean = gaps.iter().sum::<f64>() / N as f64;
    let se = (var(gaps.iter().cloned()) / N as f64).sqrt();
    let closed = cer(&h, &EvalConfig::euclidean(f)).unwrap();
    assert!((mean - closed).abs() < 3.0 * se, "{mean} vs {closed} (se {se})");
}

#[test]
fn subset_sizes_match_keep_probability() {
    let mut r = rng::seeded(22);
    let f = rng::standard_normals(&mut r, 32);
    let full = nullspace_basis(&f).unwrap();
    assert_eq!(full.k(), 31);
    for (p, trials) in [(2.0 / 3.0, 400u64), (1.0 / 3.0, 400)] {
        let mut total = 0usize;
        for s in 0..trials {
            let sub = subset_basis(&full, p, s).unwrap();
            assert!(sub.is_outcome_invariant(&f));
            total += sub.k();
        }
        let mean = total as f64 / trials as f64;
        // Binomial(31, p), conditioned on k >= 1 (negligible here).
        let expected = 31.0 * p;
        let se = (31.0 * p * (1.0 - p) / trials as f64).sqrt();
        assert!((mean - expected).abs() < 4.0 * se, "p={p}: {mean} vs {expected}");
    }
}

#[test]
fn gaussian_noise_has_the_requested_covariance() {
    let da = augmentation::gaussian_noise_da(&Matrix::identity(3, 3), 0.1).unwrap();
    let g = da.draw_parameters(N, 23).unwrap();
    let noise = da.translate(&Matrix::zeros(N, 3), &g).unwrap();
    let cov = daivl_core::linalg::covariance(&noise);
    assert!((cov - Matrix::identity(3, 3) * 0.1).amax() < 6.0 * 0.1 * (2.0 / N as f64).sqrt());
}

#[test]
fn discrete_ate_is_half_label_plus_quarter() {
    let label = discrete::demo_label;
    for (base, color) in [(0b0001u32, false), (0b0011, true), (0b0111, false), (0b1111, true)] {
        let x = ColoredDigit { base, color };
        let xs = vec![x; N];
        let ys = discrete::discrete_hard_do(label, &xs, 24 + base as u64);
        let mean = ys.iter().filter(|y| **y).count() as f64 / N as f64;
        // P(Y = 1 | do(x)) = (1 - flip) f(x) + flip (1 - f(x)) = 0.5 f(x) + 0.25.
        let fx = label(x) as u8 as f64;
        let expected = (1.0 - 2.0 * LABEL_FLIP) * fx + LABEL_FLIP;
        assert!((expected - (0.5 * fx + 0.25)).abs() < 1e-12);
        let se = (expected * (1.0 - expected) / N as f64).sqrt();
        assert!((mean - expected).abs() < 3.0 * se, "{x:?}: {mean}");
        assert_eq!(mean.round() == 1.0, label(x));
    }
}

#[test]
fn discrete_sem_converges_for_every_sample() {
    let samples = discrete::discrete_xor_sem_sample(discrete::demo_label, discrete::demo_base, 0.3, N, 25).unwrap();
    assert!(samples.iter().all(|s| s.sweeps <= discrete::MAX_SWEEPS));
    let e0 = discrete::discrete_xor_sem_sample(discrete::demo_label, discrete::demo_base, 0.0, 1000, 26).unwrap();
    assert!(e0.iter().all(|s| s.x.color == s.y));
}

#[test]
fn discrete_demo_flipped_environment() {
    let rep = discrete::demo(0.1, 0.9, N, 27).unwrap();
    assert!((rep.ate_accuracy - 0.75).abs() < 0.01, "{rep:?}");
    assert!(rep.observational_accuracy < 0.5, "{rep:?}");
    assert_eq!(rep.ate_label_recovery, 1.0);
    let same = discrete::demo(0.3, 0.3, N, 28).unwrap();
    assert!(same.observational_accuracy >= same.ate_accuracy - 0.01, "{same:?}");
}
