//! Two-bubble approximate solutions of critical Lotka–Volterra systems
//! on bounded domains, with numerical checks of their asymptotics.
//!
//! The closed-form bubble algebra is generic over [`num_traits::Float`];
//! the quadrature, Green's function and reduction engines work in `f64`.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bubbles;
pub mod error;
pub mod estimate;
pub mod expansion;
pub mod greens;
pub mod quadrature;
pub mod reduced;
pub mod residual;
pub mod special;

pub use bubbles::{compute_constants, eval_bubble, eval_gradient, eval_laplacian, eval_psi, BubbleParams, StructuralConstants};
pub use error::{Error, Result};
pub use estimate::Estimate;
pub use greens::{Ball, Domain, WalkOnSpheres};
pub use reduced::{reduced_residual, reduced_solve, SystemConfig};
pub use residual::{error_field, error_scan, pohozaev_check};

/// Bubble parameters in double precision.
pub type Bubble = BubbleParams<f64>;
/// Bubble parameters in single precision.
pub type Bubble32 = BubbleParams<f32>;
