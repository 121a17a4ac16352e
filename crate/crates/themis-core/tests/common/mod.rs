//! Independent oracles shared by the integration suites and the acceptance runner.
#![allow(dead_code)]

pub mod bbn;
pub mod gp;
pub mod mc;
pub mod pca;
