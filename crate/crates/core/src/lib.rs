//! High-frequency stability analysis of single-loop grid-forming (SL-GFM)
//! converters with droop and droop-I reactive-power control.
//!
//! The crate is `no_std` (with `alloc`). It covers:
//!
//! - [`poly`]: real polynomials, rational functions, root finding and
//!   state-space to transfer-function extraction.
//! - [`plant`]: per-unit parameters, operating point and small-signal
//!   linearization of the LCL filter plus Thevenin grid.
//! - [`loops`]: open-loop models of the active- and reactive-power loops and
//!   active-damping augmentation.
//! - [`stability`]: Routh arrays with epsilon perturbation, Nyquist winding
//!   numbers, margins and closed-loop verdicts.
//! - [`sim`]: nonlinear average-model time-domain simulation in the grid dq
//!   frame.
//!
//! File formats, spectral post-processing and the command-line front end live
//! in the `slgfm` companion crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod loops;
pub mod plant;
pub mod poly;
pub mod sim;
pub mod stability;

pub use num_complex::Complex64;
