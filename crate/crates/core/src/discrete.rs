//! Binary cyclic SEM with a colored treatment:
//!
//! ```text
//! X       = colour(C, base)
//! Y_tilde = label(X)
//! Y       = Y_tilde xor N_Y,   N_Y ~ Bernoulli(1/4)
//! C       = Y xor N_C,         N_C ~ Bernoulli(e)
//! ```
//!
//! A sample is the fixed point of simultaneous (Jacobi) updates of all four
//! assignments with the exogenous draws held fixed. When `label` ignores
//! the color this takes at most five sweeps.

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::math;
use crate::rng::{self, Rng};

/// Label noise rate.
pub const LABEL_FLIP: f64 = 0.25;
/// Sweeps allowed before a sample is declared non-convergent.
pub const MAX_SWEEPS: usize = 5;

/// An uncolored base pattern with a binary color channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ColoredDigit {
    pub base: u32,
    pub color: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiscreteSample {
    pub x: ColoredDigit,
    pub y: bool,
    /// Sweeps needed to detect the fixed point.
    pub sweeps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct State {
    x: ColoredDigit,
    y_tilde: bool,
    y: bool,
    c: bool,
}

fn check_prob(e: f64) -> Result<()> {
    if (0.0..=1.0).contains(&e) {
        Ok(())
    } else {
        Err(invalid("flip probability must lie in [0, 1]"))
    }
}

/// Solves one sample from its exogenous draws.
pub fn solve_fixed_point<L>(label_fn: &L, base: u32, n_y: bool, n_c: bool) -> core::result::Result<DiscreteSample, usize>
where
    L: Fn(ColoredDigit) -> bool,
{
    let mut s = State {
        x: ColoredDigit { base, color: false },
        y_tilde: false,
        y: false,
        c: false,
    };
    for sweep in 1..=MAX_SWEEPS {
        let next = State {
            x: ColoredDigit { base, color: s.c },
            y_tilde: label_fn(s.x),
            y: s.y_tilde ^ n_y,
            c: s.y ^ n_c,
        };
        if next == s {
            return Ok(DiscreteSample {
                x: s.x,
                y: s.y,
                sweeps: sweep,
            });
        }
        s = next;
    }
    Err(MAX_SWEEPS)
}

/// Draws `n` samples. Row `i` uses its own stream of `seed` and draws the
/// base, `N_Y` and `N_C` in that order.
pub fn discrete_xor_sem_sample<L, B>(label_fn: L, base_sampler: B, e: f64, n: usize, seed: u64) -> Result<Vec<DiscreteSample>>
where
    L: Fn(ColoredDigit) -> bool,
    B: Fn(&mut Rng) -> u32,
{
    check_prob(e)?;
    (0..n)
        .map(|i| {
            let mut r = rng::row_stream(seed, i);
            let base = base_sampler(&mut r);
            let n_y = rng::bernoulli(&mut r, LABEL_FLIP);
            let n_c = rng::bernoulli(&mut r, e);
            solve_fixed_point(&label_fn, base, n_y, n_c).map_err(Error::NoFixedPoint)
        })
        .collect()
}

/// Outcomes under `do(X = x)`: `label(x) xor N_Y`.
pub fn discrete_hard_do<L>(label_fn: L, xs: &[ColoredDigit], seed: u64) -> Vec<bool>
where
    L: Fn(ColoredDigit) -> bool,
{
    xs.iter()
        .enumerate()
        .map(|(i, x)| label_fn(*x) ^ rng::bernoulli(&mut rng::row_stream(seed, i), LABEL_FLIP))
        .collect()
}

/// Bits in the demo base pattern.
pub const DEMO_BASE_BITS: u32 = 8;

/// Demo label: parity of the low four bits of the base; ignores color.
pub fn demo_label(x: ColoredDigit) -> bool {
    (x.base & 0xF).count_ones() % 2 == 1
}

pub fn demo_base(r: &mut Rng) -> u32 {
    (rng::uniform(r) * (1u32 << DEMO_BASE_BITS) as f64) as u32 & ((1 << DEMO_BASE_BITS) - 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoReport {
    pub e_train: f64,
    pub e_test: f64,
    pub n: usize,
    /// Test accuracy of the majority-vote lookup fit on observational data.
    pub observational_accuracy: f64,
    /// Test accuracy of the rounded interventional mean per treatment value.
    pub ate_accuracy: f64,
    /// Fraction of treatment values whose rounded interventional mean equals
    /// the label function.
    pub ate_label_recovery: f64,
    pub max_sweeps: usize,
}

fn cell(x: ColoredDigit) -> usize {
    ((x.base as usize) << 1) | x.color as usize
}

const CELLS: usize = 2 << DEMO_BASE_BITS;

/// Trains two predictors on `n` samples and tests them on `n` samples from
/// the environment with color flip rate `e_test`.
///
/// The observational predictor is the per-`(base, color)` majority label.
/// The ATE predictor rounds the mean outcome per `(base, color)` under
/// `do(X)` with base and color drawn uniformly. Unseen cells fall back to
/// the overall majority of the respective training data.
pub fn demo(e_train: f64, e_test: f64, n: usize, seed: u64) -> Result<DemoReport> {
    check_prob(e_train)?;
    check_prob(e_test)?;
    if n == 0 {
        return Err(invalid("demo needs at least one sample"));
    }
    let train = discrete_xor_sem_sample(demo_label, demo_base, e_train, n, rng::derive_seed(seed, &[1]))?;
    let test = discrete_xor_sem_sample(demo_label, demo_base, e_test, n, rng::derive_seed(seed, &[2]))?;

    let obs_table = majority_table(train.iter().map(|s| (s.x, s.y)));

    let do_seed = rng::derive_seed(seed, &[3]);
    let do_x: Vec<ColoredDigit> = (0..n)
        .map(|i| {
            let mut r = rng::row_stream(do_seed, i);
            let base = demo_base(&mut r);
            ColoredDigit {
                base,
                color: rng::bernoulli(&mut r, 0.5),
            }
        })
        .collect();
    let do_y = discrete_hard_do(demo_label, &do_x, rng::derive_seed(seed, &[4]));
    let ate_table = majority_table(do_x.iter().cloned().zip(do_y.iter().cloned()));

    let accuracy = |table: &[bool]| test.iter().filter(|s| table[cell(s.x)] == s.y).count() as f64 / n as f64;
    let recovered = (0..CELLS)
        .filter(|&c| {
            let x = ColoredDigit {
                base: (c >> 1) as u32,
                color: c & 1 == 1,
            };
            ate_table[c] == demo_label(x)
        })
        .count();
    Ok(DemoReport {
        e_train,
        e_test,
        n,
        observational_accuracy: accuracy(&obs_table),
        ate_accuracy: accuracy(&ate_table),
        ate_label_recovery: recovered as f64 / CELLS as f64,
        max_sweeps: train.iter().chain(&test).map(|s| s.sweeps).max().unwrap_or(0),
    })
}

/// Rounded mean label per cell (a mean of exactly 1/2 rounds up).
fn majority_table(pairs: impl Iterator<Item = (ColoredDigit, bool)>) -> Vec<bool> {
    let mut ones = alloc::vec![0usize; CELLS];
    let mut total = alloc::vec![0usize; CELLS];
    let (mut all_ones, mut all) = (0usize, 0usize);
    for (x, y) in pairs {
        let c = cell(x);
        total[c] += 1;
        ones[c] += y as usize;
        all += 1;
        all_ones += y as usize;
    }
    let fallback = 2 * all_ones >= all;
    (0..CELLS)
        .map(|c| {
            if total[c] == 0 {
                fallback
            } else {
                math::round(ones[c] as f64 / total[c] as f64) >= 1.0
            }
        })
        .collect()
}
