//! Penalized polynomial-spline regression.
//!
//! Builds truncated-power and B-spline design matrices over equidistant
//! interior knots, fits them by penalized least squares with ridge or
//! difference penalties, and derives smoothing-matrix diagnostics
//! (effective dimension, leave-one-out CV, GCV, AIC), confidence bands,
//! and a train/test model-selection harness.
//!
//! Start with [`basis::BasisSpec`] and [`fit::fit`], or see the examples
//! directory for end-to-end walkthroughs.

pub mod basis;
pub mod cli;
pub mod dataset;
pub mod fit;
pub mod inference;
pub mod penalty;
pub mod selection;
