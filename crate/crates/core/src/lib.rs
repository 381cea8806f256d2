//! Numerical laboratory for the Gaussian correlation inequality and the
//! symmetric inverse Brascamp–Lieb inequality behind it.
//!
//! Modules:
//!
//! - [`linalg`]: symmetric matrices, Fischer's inequality, the `Σ^(s)`
//!   interpolation and principal-minor identities.
//! - [`gaussian`]: closed-form Gaussian Brascamp–Lieb ratios and their
//!   constrained infima.
//! - [`grid`]: even functions sampled on symmetric grids, log-concavity
//!   class tests, the self-convolution operator and its central-limit flow.
//! - [`bl`]: the Brascamp–Lieb functional on gridded functions and checks of
//!   the inverse, forward and doubling inequalities.
//! - [`gci`]: Gaussian probabilities of symmetric convex sets, correlation
//!   checks, monotone interpolation curves and the non-log-concave
//!   counterexample.
//! - [`mc`]: the counter-based Monte Carlo engine shared by [`gci`].
//!
//! Comparisons are often written `!(x > 0.0)` so that NaN is rejected.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision, clippy::needless_range_loop)]

pub mod bl;
pub mod error;
pub mod gaussian;
pub mod gci;
pub mod grid;
pub mod linalg;
pub mod mc;
pub mod numeric;
pub mod random;

pub use error::{Error, Result};
