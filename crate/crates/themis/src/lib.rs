//! Files, CLI and HTTP service around `themis-core`.

pub mod cli;
pub mod exec;
pub mod io;
pub mod service;

pub use themis_core as core;
