//! Horseshoe-family shrinkage regression with projection predictive
//! variable selection.
//!
//! The pipeline is: load a [`data::Dataset`], draw from the posterior with
//! [`sampler::fit`], rank predictors with [`search::forward_search`], and
//! score submodel sizes with [`evaluate::curve`] or
//! [`evaluate::cross_validate`].
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod data;
pub mod error;
pub mod evaluate;
pub mod linalg;
pub mod priors;
pub mod projection;
pub mod rng;
pub mod sampler;
pub mod search;
pub mod stats;
pub mod synthetic;

pub use data::{load_csv, Dataset};
pub use error::{Error, Result};
pub use priors::PriorSpec;
pub use projection::{project_drawset, Projector, Submodel};
pub use sampler::{fit, DrawSet, SamplerConfig};
pub use search::{forward_search, SearchPath};
