//! Scenario files, CSV output, spectral post-processing and the `slgfm`
//! command-line tool built on [`slgfm_core`].

pub mod analysis;
pub mod cli;
pub mod config;
pub mod csvio;
pub mod spectral;

pub use slgfm_core as core;
