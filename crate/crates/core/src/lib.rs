//! Numerical toolkit for algebras of holomorphic functions on model domains.
//!
//! The crate recovers holomorphic maps from algebra homomorphisms, classifies
//! algebra automorphisms of annuli, detects noncompact automorphism groups
//! through Lipschitz-norm blow-up, evaluates Bergman kernels with their metric
//! and curvature, and runs the boundary scaling method toward the Siegel model.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bergman;
pub mod cli;
pub mod domains;
pub mod error;
pub mod fmt;
pub mod func;
pub mod holo_algebra;
pub mod limits;
pub mod lipschitz;
pub mod point;
pub mod scaling;
pub mod series;

pub use error::{Error, Result};
pub use point::{c64, Mat2, Point, C64};
