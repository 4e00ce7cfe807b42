//! Sensitivity analysis for natural direct and indirect effects under
//! unmeasured mediator-outcome confounding.
//!
//! * [`prob`]: record tables and conditional probability models
//! * [`identification`]: observed natural effects within a stratum
//! * [`bounds`]: bounding factor, adjusted effects and Cornfield thresholds
//! * [`parametric`]: the collider-bias parameter under a log-linear mediator model
//! * [`oracle`]: exact verification against discrete structural models

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bounds;
pub mod error;
pub mod identification;
pub mod oracle;
pub mod parametric;
pub mod prob;

pub use error::{Error, Result};
