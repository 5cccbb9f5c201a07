//! Physics-informed training of universal function approximators augmented
//! with automatic integration: integral transforms of unknown functions are
//! read out as two evaluations of a trained antiderivative surrogate, and
//! integro-differential equations are solved directly in surrogate form.

pub mod autodiff;
pub mod cli;
pub mod ufa;
pub mod oracles;
pub mod problems;
pub mod training;
pub mod transform;

/// Formats a float with 12 significant digits for CSV output.
pub fn fmt_sig(x: f64) -> String {
    format!("{x:.11e}")
}
