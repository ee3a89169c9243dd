//! Wind turbine power-curve modelling with physically meaningful explanations.
//!
//! The crate covers the full workflow: SCADA ingestion and synthetic data
//! ([`data`]), the IEC 61400-12-1 physics baseline ([`iec`]), trainable
//! regressors ([`models`]), exact Shapley attribution with domain-specific
//! reference points ([`attribution`]) and the experiment harnesses built on
//! top of them ([`analysis`]).

// `!(x > 0.0)` deliberately rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops mirror the coalition and layer arithmetic they implement.
#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod attribution;
pub mod data;
mod error;
pub mod iec;
pub mod models;
pub mod persist;
pub(crate) mod rng;
pub(crate) mod stats;

pub use error::{Error, Result};
pub use models::{Feature, FeatureSchema, Predictor};
