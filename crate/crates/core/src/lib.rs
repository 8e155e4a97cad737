//! Welfare analysis of discrete-choice interventions from choice
//! probabilities: the distribution of money-metric indirect utility, social
//! welfare functionals, binary-choice subsidy welfare, partial-identification
//! bounds, constrained spline-probit demand estimation and budget-constrained
//! subsidy targeting, together with a simulation oracle.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod binary;
pub mod bounds;
pub mod choice;
pub mod distributions;
pub mod error;
pub mod estimation;
pub mod fixtures;
pub mod numeric;
pub mod oracle;
pub mod quadrature;
pub mod spline;
pub mod targeting;
pub mod welfare;

pub use error::{Error, Result};

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
struct ReadmeDoctests;
