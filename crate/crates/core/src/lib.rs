//! Deterministic toolkit for a two-platform Internet-auction market: exact
//! listing-fee schedules, a log-linear model of seller revenue and website
//! usage, OLS estimation of both elasticities from weekly panel data, and an
//! equilibrium solver with feedback-loop diagnostics and fee-policy
//! counterfactuals.

// validation guards are written `!(x > 0.0)` so NaN fails closed
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// index loops in the small-matrix code mirror the math
#![allow(clippy::needless_range_loop)]

pub mod canonical;
pub mod config;
pub mod equilibrium;
pub mod error;
pub mod fees;
pub mod model;
pub mod money;
pub mod ols;
pub mod panel;
pub mod platform;

pub use error::{Error, Result};
pub use platform::{PerPlatform, PlatformId, UsageMetric};
