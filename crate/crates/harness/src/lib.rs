//! Configuration, initial data, experiments and file formats around
//! [`hotspot_core`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod initial;
pub mod io;

pub use config::{parse_config, InitialSpec, RunConfig};
pub use error::HarnessError;
