//! Circle maps with gaps.
//!
//! Degree-one lifts built from threshold systems and from the canonical
//! square-root family, their rotation numbers and bifurcation sets, and the
//! return map of a piecewise-smooth torus flow passing from a Poincaré flow
//! to a Cherry flow.

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atlas;
pub mod canonical;
pub mod cherry;
pub mod error;
pub mod lift;
pub mod roots;
pub mod sts;
pub mod threshold;

pub use error::{Error, Result};
pub use lift::{Composition, GapDescriptor, Lift, PeriodicOrbit, RotationEstimate, SingularSide};
