//! Algorithmic core of the Themis deep-futures scenario engine.
//!
//! Everything here is a pure function of its inputs and runs without `std`;
//! file formats, the CLI and the HTTP service live in the `themis` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(feature = "std")]
extern crate std;

pub mod analysis;
pub mod bbn;
pub mod goal;
pub mod linalg;
pub mod lp;
pub mod math;
pub mod model;
pub mod rng;
pub mod scenario;
pub mod synth;
pub mod theory;
pub mod whatif;

pub use model::RegionModel;
pub use scenario::{run_pipeline, PipelineRun, RunConfig};
pub use whatif::{what_if, Edit};

/// Crate version, reported by the service health endpoint and run records.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
