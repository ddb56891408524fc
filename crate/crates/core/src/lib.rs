//! Simulator and analysis toolkit for AS-level content blocking: given an
//! interdomain topology, address-to-origin mappings, and the endpoint sets
//! behind content items, it quantifies what a single network operator can
//! block by passively sitting on routed paths or by hijacking prefixes, and
//! how replication pushes that number back down.

pub mod attack;
pub mod cli;
pub mod datasets;
pub mod error;
pub mod manifest;
pub mod prefixdb;
pub mod report;
pub mod routing;
pub mod strategy;
pub mod synth;
pub mod topology;

pub use error::{Error, Result};
