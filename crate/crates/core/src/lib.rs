//! Experiments on overparameterized linear classification: Gaussian feature
//! ensembles, minimum-norm interpolation, hard-margin SVMs, and the
//! survival/contamination decomposition of their test error.

pub mod ensembles;
pub mod error;
pub mod fourier;
pub mod linalg;
pub mod metrics;
pub mod rng;
pub mod solvers;
pub mod theory;

pub use error::{Error, Result};

/// Sign with the `sign(0) = +1` convention used for labels everywhere.
#[inline]
pub fn sign_pm(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}
