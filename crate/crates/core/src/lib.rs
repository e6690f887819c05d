//! Causal effect estimation under hidden confounding with outcome-invariant
//! data augmentation.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the numerical
//! pieces: linear Gaussian (possibly cyclic) structural equation models and
//! their samplers, additive data-augmentation operators, closed-form
//! ERM / 2SLS / IVL estimators, regularization-parameter selection and the
//! causal excess risk metrics. File formats, the command line and the
//! parallel sweep runner live in the `daivl` crate.
//!
//! A typical pipeline:
//!
//! ```
//! use daivl_core::augmentation::{apply, nullspace_basis};
//! use daivl_core::estimators::{fit_ivl, fit_ols};
//! use daivl_core::evaluation::{ncer, EvalConfig};
//! use daivl_core::linalg::{Matrix, Vector};
//! use daivl_core::sem::{sample, SemSpec};
//!
//! let f = Vector::from_vec(vec![1.0, 0.0]);
//! let spec = SemSpec::new(
//!     f.clone(),
//!     Matrix::from_row_slice(2, 1, &[0.0, 1.0]),
//!     Vector::from_vec(vec![1.0]),
//! );
//! let (data, _) = sample(&spec, 2000, 7).unwrap();
//! let da = nullspace_basis(&f).unwrap().with_strength(1.0);
//! let augmented = apply(&da, &data, 8).unwrap();
//! let g = augmented.z.as_ref().unwrap();
//!
//! let erm = fit_ols(&data.x, &data.y).unwrap();
//! let ivl = fit_ivl(&augmented.x, &augmented.y, g, 0.1).unwrap();
//! let eval = EvalConfig::euclidean(f);
//! let h0 = Vector::zeros(2);
//! assert!(ncer(&ivl.h, &h0, &eval).unwrap() < ncer(&erm.h, &h0, &eval).unwrap());
//! ```
#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod augmentation;
pub mod discrete;
pub mod error;
pub mod estimators;
pub mod evaluation;
pub mod experiment;
pub mod linalg;
mod math;
pub mod rng;
pub mod selection;
pub mod sem;

pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
