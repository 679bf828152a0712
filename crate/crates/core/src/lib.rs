//! Profit-driven coalition formation among cellular network operators that can
//! share base stations and users.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: stations, user classes, operators and their closed-form cost formulas.
//! - [`traces`]: load traces, periodic spline profiles, peak discretization, synthetic profiles.
//! - [`solver`]: exact user-to-station allocation with station switch-off, plus
//!   a brute-force oracle, a constraint validator and an LP-format exporter.
//! - [`game`]: coalition values, Aumann-Drèze payoffs, hedonic shift formation and
//!   Nash-stability checks.
//! - [`harness`]: scenario configuration, weekly simulation, RP/ON/XL metrics and output files.

// `!(x > 0.0)` is the NaN-rejecting form of validation used throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

#[cfg(test)]
macro_rules! assert_close {
    ($a:expr, $b:expr, $tol:expr) => {{
        let (a, b): (f64, f64) = ($a, $b);
        assert!((a - b).abs() <= $tol, "{} != {} (tol {})", a, b, $tol);
    }};
}

pub mod error;
pub mod game;
pub mod harness;
pub mod model;
pub mod solver;
pub mod traces;

pub use error::{Error, Result};
