//! Suite runner and report writer for the log-concave laboratory.

pub mod checks;
pub mod config;
pub mod emit;
pub mod error;
pub mod record;
pub mod suite;
pub mod svg;
