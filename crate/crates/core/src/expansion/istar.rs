//! The Green operator `(i* f)(x) = ∫_Ω G(x, y) f(y) dy` on balls, by
//! importance-sampled Monte Carlo.

use crate::bubbles::b_n;
use crate::error::{check_point, Error, Result};
use crate::estimate::Estimate;
use crate::greens::ball::Ball;
use crate::greens::domain::{dist, Domain};
use crate::quadrature::mc::{Bump, BumpKind, McIntegrator};

/// Green's function of the ball, `B_N |x-y|^{2-N} - H(x, y)`.
pub fn green_ball(ball: &Ball<f64>, x: &[f64], y: &[f64]) -> Result<f64> {
    let n = ball.dim();
    let d = dist(x, y);
    if d == 0.0 {
        return Err(Error::Singularity("Green's function at x = y".into()));
    }
    Ok(b_n::<f64>(n) * d.powi(2 - n as i32) - ball.regular_part(x, y)?)
}

/// Importance hint for the source: a concentration point and its scale.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceHint {
    pub center: Vec<f64>,
    pub scale: f64,
}

/// `(i* f)(x)` on a ball domain.
///
/// Samples mix a uniform proposal, a radially uniform bump at `x` (which
/// cancels the `|x-y|^{2-N}` singularity) and Cauchy bumps at the hints.
pub fn istar_ball<F>(
    domain: &Domain,
    source: F,
    hints: &[SourceHint],
    x: &[f64],
    n: usize,
    seed: u64,
) -> Result<Estimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let ball = domain
        .as_ball()
        .ok_or_else(|| Error::UnsupportedDomain("the Green operator needs a ball".into()))?;
    check_point(ball.dim(), x, "x")?;
    if !domain.contains(x) {
        return Err(Error::Input("x must lie inside the ball".into()));
    }
    let mut mc = McIntegrator::new(domain)?.with_bump(Bump {
        center: x.to_vec(),
        scale: ball.radius,
        kind: BumpKind::RadialUniform,
    })?;
    for h in hints {
        mc = mc.with_bump(Bump { center: h.center.clone(), scale: h.scale, kind: BumpKind::Cauchy })?;
    }
    mc.integrate(
        |y| {
            let f = source(y);
            if f == 0.0 {
                return 0.0;
            }
            match green_ball(&ball, x, y) {
                Ok(g) => g * f,
                Err(_) => 0.0,
            }
        },
        n,
        seed,
    )
}
