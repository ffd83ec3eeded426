//! Structure-preserving solver for the two-dimensional Cahn–Hilliard equation
//! with the Flory–Huggins logarithmic potential and a concentration-dependent,
//! non-degenerate mobility, together with diagnostics and a sampling harness
//! for the inequalities that control its solutions.
//!
//! The pipeline is [`grid`] and [`spectral`] operators, the [`thermo`]
//! constitutive laws, [`elliptic`] solvers for the weighted dual norm, the
//! convex-splitting [`stepper`], ledger [`diagnostics`], [`steady`] states,
//! the [`lab`] of sampled bounds, and the [`checks`] behind the `chflow check`
//! command.

// `!(a > b)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod elliptic;
pub mod error;
pub mod grid;
pub mod init;
pub mod io;
pub mod lab;
pub(crate) mod linalg;
pub mod rng;
pub mod spectral;
pub mod steady;
pub mod stepper;
pub mod thermo;
pub use error::{Error, Result};
