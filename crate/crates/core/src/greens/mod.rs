//! Green's function of the Dirichlet Laplacian: closed forms on balls,
//! signed-distance domains and walk-on-spheres estimates elsewhere.

pub mod ball;
pub mod domain;
pub mod wos;

pub use ball::{h_ball, robin_ball, Ball};
pub use domain::Domain;
pub use wos::{robin, robin_grad, wos_h, WalkOnSpheres, WosOptions};
