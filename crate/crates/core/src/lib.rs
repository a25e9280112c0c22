//! Estimation toolkit for the transmission of US monetary-policy shocks to
//! emerging markets: Bayesian (panel) structural VARs with recursive
//! identification, firm-panel fixed-effects and local-projection regressions
//! with clustered errors, and a two-period entrepreneur model with a leverage
//! constraint.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bvar;
pub mod error;
pub mod firmreg;
pub mod format;
pub mod ingest;
pub mod irf;
pub mod linalg;
pub mod model;
pub mod plot;
pub mod registry;
pub mod simulate;

pub use error::{Error, Result};
pub use linalg::{Matrix, RngStream};
