//! Real polynomial and rational-function algebra, complex root finding and
//! state-space to transfer-function extraction.

mod polynomial;
mod rational;
mod roots;
mod statespace;

use alloc::vec::Vec;

use num_complex::Complex64;

pub use polynomial::{poly_arith, PolyOp, Polynomial};
pub use rational::{match_roots, RationalFn, DEFAULT_TOL_MATCH};
pub use roots::{frequency_scale, root_residual, roots, sort_roots, DEFAULT_ROOT_TOL};
pub use statespace::{eigenvalues, siso_rational, ss_to_rational, StateSpaceModel, TransferMatrix};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PolyError {
    #[error("polynomial has no coefficients")]
    Empty,
    #[error("polynomial coefficient is not finite")]
    NonFinite,
    #[error("polynomial of degree zero has no roots")]
    DegreeZero,
    #[error("root iteration did not converge ({} roots, worst residual {:e})", roots.len(), worst(residuals))]
    NonConvergence {
        roots: Vec<Complex64>,
        residuals: Vec<f64>,
    },
    #[error("matrix dimensions are inconsistent")]
    DimensionMismatch,
    #[error("denominator is identically zero")]
    ZeroDenominator,
    #[error("division by the zero polynomial")]
    DivisionByZero,
    #[error("evaluation point {re}{im:+}j is a pole")]
    PoleHit { re: f64, im: f64 },
    #[error("no numerator/denominator root pair to cancel near {re}{im:+}j")]
    CancellationMismatch { re: f64, im: f64 },
}

fn worst(r: &[f64]) -> f64 {
    r.iter().fold(0.0, |m, &x| if x > m || x.is_nan() { x } else { m })
}
