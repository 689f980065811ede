//! Quadrature: one-dimensional rules, deterministic axisymmetric ball
//! quadrature, importance-sampled Monte Carlo and exponent fits.

pub mod axisym;
pub mod fit;
pub mod mc;
pub mod rules;

pub use axisym::{AxisPoint, AxisymBall, PolarPoint, QuadValue};
pub use fit::{fit_exponent, FitReport, LogCorrection};
pub use mc::{lp_norm, mc_integrate, Bump, BumpKind, Frame, McIntegrator, NormSpec};
