//! Configuration files, CSV tables, measurement loaders, plot scripts and
//! run manifests.

pub mod config;
pub mod data;
pub mod manifest;
pub mod plot;
pub mod report;
pub mod table;
