//! Simulation and power analysis for comparing category-based and
//! dimensional study designs under a linear latent-factor model.

// Negated comparisons double as NaN guards; reference constants keep all digits.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod analytic;
pub mod distrib;
pub mod error;
pub mod figures;
pub mod genmodel;
pub mod hyptest;
pub mod mcengine;
pub mod quadrature;
pub mod report;
pub mod scenarios;
pub mod strategy;
pub mod validate;

pub use error::{Error, Result};
