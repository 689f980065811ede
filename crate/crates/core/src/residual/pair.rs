//! The two-component approximant with zero remainder and its error field.
//!
//! Fields live on `Ω_λ = Ω/λ`. With `y = λx ∈ Ω` and `s_i = λδ_i`,
//! `u(x) = μ_1^{-(N-2)/4} λ^{(N-2)/2} PU_{s_1,ξ_1}(y)`, so everything is
//! evaluated through projected bubbles on `Ω` and rescaled exactly.

use serde::{Deserialize, Serialize};

use crate::bubbles::{alpha, critical_p, BubbleParams};
use crate::error::{check_point, Error, Result};
use crate::expansion::projected::{ProjectedBubble, ProjectionMode};
use crate::greens::ball::Ball;
use crate::reduced::system::{check_component, SystemConfig};

/// `(u - h)^p - u^p` without cancellation when `h ≪ u`; the base is
/// clipped at zero.
pub fn pow_defect(u: f64, h: f64, p: f64) -> f64 {
    if u <= 0.0 {
        return (u - h).max(0.0).powf(p) - u.max(0.0).powf(p);
    }
    let r = h / u;
    if r >= 1.0 {
        return -u.powf(p);
    }
    u.powf(p) * (p * (-r).ln_1p()).exp_m1()
}

/// Common axis of the two centres and the ball centre, if there is one.
#[derive(Debug, Clone)]
struct Axis {
    /// Signed position of each centre along the axis.
    offset: [f64; 2],
    /// Orientation of each bubble's own axis relative to the common one.
    sign: [f64; 2],
}

/// The approximant `(u, v)` on a ball.
#[derive(Debug, Clone)]
pub struct FieldPair {
    pub config: SystemConfig,
    pub mode: ProjectionMode,
    ball: Ball<f64>,
    pb: [ProjectedBubble; 2],
    axis: Option<Axis>,
}

impl FieldPair {
    pub fn new(config: &SystemConfig, mode: ProjectionMode) -> Result<Self> {
        config.validate()?;
        let ball = config
            .domain
            .as_ball()
            .ok_or_else(|| Error::UnsupportedDomain("the approximant is assembled on balls".into()))?;
        let n = config.n;
        let make = |i: usize| -> Result<ProjectedBubble> {
            let b = BubbleParams::new(n, config.lambda * config.delta(i), config.xi(i).to_vec())?;
            ProjectedBubble::new(&ball, &b, mode)
        };
        let pb = [make(1)?, make(2)?];
        let axis = common_axis(&ball, &pb);
        Ok(FieldPair { config: config.clone(), mode, ball, pb, axis })
    }

    pub fn dim(&self) -> usize {
        self.config.n
    }

    pub fn ball(&self) -> &Ball<f64> {
        &self.ball
    }

    pub fn bubble(&self, component: usize) -> &ProjectedBubble {
        &self.pb[component - 1]
    }

    /// `μ_i^{-(N-2)/4}`.
    pub fn weight(&self, component: usize) -> f64 {
        self.config.mu(component).powf(-(self.config.n as f64 - 2.0) / 4.0)
    }

    /// Whether both centres lie on one line through the ball centre.
    pub fn collinear(&self) -> bool {
        self.axis.is_some()
    }

    /// Signed axial offsets of the centres (collinear configurations).
    pub fn axis_offsets(&self) -> Option<[f64; 2]> {
        self.axis.as_ref().map(|a| a.offset)
    }

    fn rescale(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_point(self.config.n, x, "x")?;
        let y: Vec<f64> = x.iter().map(|v| v * self.config.lambda).collect();
        if self.config.domain.sdf(&y) > 1e-12 {
            return Err(Error::Input("x lies outside the rescaled domain".into()));
        }
        Ok(y)
    }

    /// `w_i = μ_i^{-(N-2)/4} PU_{s_i,ξ_i}` on `Ω`.
    pub fn w(&self, component: usize, y: &[f64]) -> Result<f64> {
        Ok(self.weight(component) * self.pb[component - 1].pu(y)?)
    }

    pub fn grad_w(&self, component: usize, y: &[f64]) -> Result<Vec<f64>> {
        let k = self.weight(component);
        Ok(self.pb[component - 1].grad_pu(y)?.into_iter().map(|g| k * g).collect())
    }

    /// `(u, v)` at `x ∈ Ω_λ`.
    pub fn pair(&self, x: &[f64]) -> Result<(f64, f64)> {
        let y = self.rescale(x)?;
        let f = self.config.lambda.powf(alpha::<f64>(self.config.n));
        Ok((f * self.w(1, &y)?, f * self.w(2, &y)?))
    }

    /// Error-field addends at `x ∈ Ω_λ`.
    pub fn error_field(&self, component: usize, x: &[f64]) -> Result<ErrorTerms> {
        check_component(component)?;
        let y = self.rescale(x)?;
        let i = component - 1;
        let n = self.config.n;
        let (al, p) = (alpha::<f64>(n), critical_p::<f64>(n));
        let l = self.config.lambda;
        let u = self.pb[i].u(&y)?;
        let h = self.pb[i].h(&y)?;
        let pu = [self.pb[0].pu(&y)?, self.pb[1].pu(&y)?];
        let k = self.weight(component);
        Ok(ErrorTerms::new(
            k * l.powf(al * p) * pow_defect(u, h, p),
            self.config.eps * l * l * k * l.powf(al) * pu[i],
            self.config.beta * l.powf((6.0 - n as f64) / 2.0) * self.weight(1) * self.weight(2) * l.powf(2.0 * al) * pu[0] * pu[1],
        ))
    }

    // --- axisymmetric evaluators in the common (u, v) frame ---

    fn frame(&self, component: usize) -> Result<(usize, f64)> {
        let a = self
            .axis
            .as_ref()
            .ok_or_else(|| Error::UnsupportedDomain("centres are not collinear with the ball centre".into()))?;
        Ok((component - 1, a.sign[component - 1]))
    }

    /// `U_{s_i}` at axial coordinate `u` and axis distance `v` (physical frame).
    pub fn u_uv(&self, component: usize, u: f64, v: f64) -> Result<f64> {
        let (i, s) = self.frame(component)?;
        Ok(self.pb[i].u_uv(s * u, v))
    }

    /// `U_{s_i} - PU_{s_i}`.
    pub fn h_uv(&self, component: usize, u: f64, v: f64) -> Result<f64> {
        let (i, s) = self.frame(component)?;
        Ok(self.pb[i].h_uv(s * u, v))
    }

    pub fn pu_uv(&self, component: usize, u: f64, v: f64) -> Result<f64> {
        let (i, s) = self.frame(component)?;
        Ok(self.pb[i].pu_uv(s * u, v))
    }

    /// `P(∂_s U_{s_i})`.
    pub fn p_ds_uv(&self, component: usize, u: f64, v: f64) -> Result<f64> {
        let (i, s) = self.frame(component)?;
        Ok(self.pb[i].p_ds_uv(s * u, v))
    }
}

fn common_axis(ball: &Ball<f64>, pb: &[ProjectedBubble; 2]) -> Option<Axis> {
    let off = [pb[0].axis_offset(), pb[1].axis_offset()];
    let e: Vec<f64> = if off[0] > 0.0 {
        pb[0].axis().to_vec()
    } else if off[1] > 0.0 {
        pb[1].axis().to_vec()
    } else {
        let mut e = vec![0.0; ball.dim()];
        e[0] = 1.0;
        e
    };
    let mut offset = [0.0; 2];
    let mut sign = [1.0; 2];
    for i in 0..2 {
        if off[i] == 0.0 {
            continue;
        }
        let c: f64 = pb[i].axis().iter().zip(&e).map(|(a, b)| a * b).sum();
        if (c.abs() - 1.0).abs() > 1e-12 {
            return None;
        }
        sign[i] = c.signum();
        offset[i] = sign[i] * off[i];
    }
    Some(Axis { offset, sign })
}

/// The three addends of the error field and their sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorTerms {
    /// `μ_i^{-(N-2)/4}((P_λU)^p - U^p)`.
    pub defect: f64,
    /// `ε λ² μ_i^{-(N-2)/4} P_λU`.
    pub mass: f64,
    /// `β λ^{(6-N)/2} μ_1^{-(N-2)/4} μ_2^{-(N-2)/4} P_λU_1 P_λU_2`.
    pub coupling: f64,
    pub total: f64,
}

impl ErrorTerms {
    fn new(defect: f64, mass: f64, coupling: f64) -> Self {
        ErrorTerms { defect, mass, coupling, total: defect + mass + coupling }
    }
}

/// `(u, v)` at `x ∈ Ω_λ` for a ball configuration.
pub fn assemble_pair(config: &SystemConfig, mode: ProjectionMode, x: &[f64]) -> Result<(f64, f64)> {
    FieldPair::new(config, mode)?.pair(x)
}

/// Error-field addends of `component` at `x ∈ Ω_λ`.
pub fn error_field(config: &SystemConfig, mode: ProjectionMode, component: usize, x: &[f64]) -> Result<ErrorTerms> {
    FieldPair::new(config, mode)?.error_field(component, x)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::bubbles::c_n;
    use crate::greens::domain::Domain;
    use crate::reduced::balance::DEFAULT_MARGIN;
    use proptest::prelude::*;

    pub(crate) fn config(n: usize, lambda: f64) -> SystemConfig {
        let mut xi1 = vec![0.0; n];
        let mut xi2 = vec![0.0; n];
        xi1[0] = 0.3;
        xi2[0] = -0.4;
        SystemConfig {
            n,
            mu1: 1.5,
            mu2: 0.7,
            eps: 1e-3,
            beta: 0.0,
            lambda,
            delta1: 1.0,
            delta2: 0.8,
            xi1,
            xi2,
            eta: 0.1,
            domain: Domain::unit_ball(n),
            margin: DEFAULT_MARGIN,
        }
    }

    #[test]
    fn peak_value_matches_bubble_height() {
        for n in 4..=6 {
            let c = config(n, 1e-3);
            let fp = FieldPair::new(&c, ProjectionMode::Convolution).unwrap();
            let x: Vec<f64> = c.xi1.iter().map(|v| v / c.lambda).collect();
            let (u, _) = fp.pair(&x).unwrap();
            let peak = fp.weight(1) * c_n::<f64>(n) * c.delta1.powf(-(n as f64 - 2.0) / 2.0);
            // the correction is O(λ^{(N-2)/2})
            let tol = 10.0 * c.lambda.powf((n as f64 - 2.0) / 2.0) * peak;
            assert!((u - peak).abs() < tol && u < peak, "N={n}: {u} {peak}");
        }
    }

    #[test]
    fn swap_exchanges_components() {
        let c = config(5, 0.01);
        let a = FieldPair::new(&c, ProjectionMode::Convolution).unwrap();
        let b = FieldPair::new(&c.swapped(), ProjectionMode::Convolution).unwrap();
        let x = [10.0, 5.0, -3.0, 0.0, 2.0];
        let (u, v) = a.pair(&x).unwrap();
        let (u2, v2) = b.pair(&x).unwrap();
        assert_eq!((u, v), (v2, u2));
        assert_eq!(a.error_field(1, &x).unwrap(), b.error_field(2, &x).unwrap());
    }

    #[test]
    fn isolated_terms() {
        let mut c = config(5, 0.01);
        c.eps = 1e-12;
        let x = [25.0, 3.0, 0.0, 0.0, 0.0];
        let e = error_field(&c, ProjectionMode::Convolution, 1, &x).unwrap();
        assert_eq!(e.coupling, 0.0);
        assert!(e.mass.abs() < 1e-9 * e.defect.abs());
        assert_eq!(e.total, e.defect + e.mass + e.coupling);
    }

    #[test]
    fn far_defect_matches_expansion_oracle() {
        // away from the centre (PU)^p - U^p ≈ -p U^{p-1} A s^α H
        let n = 5;
        let mut c = config(n, 1e-3);
        c.eps = 1e-12;
        let fp = FieldPair::new(&c, ProjectionMode::Convolution).unwrap();
        let ex = FieldPair::new(&c, ProjectionMode::Expansion).unwrap();
        let y = [0.3, 0.4, 0.2, 0.0, 0.0];
        let x: Vec<f64> = y.iter().map(|v| v / c.lambda).collect();
        let a = fp.error_field(1, &x).unwrap().defect;
        let b = ex.error_field(1, &x).unwrap().defect;
        assert!(a < 0.0 && b < 0.0);
        assert!((a / b - 1.0).abs() < 0.05, "{a} {b}");
    }

    #[test]
    fn outside_points_rejected() {
        let c = config(4, 0.01);
        assert!(matches!(assemble_pair(&c, ProjectionMode::Convolution, &[101.0, 0.0, 0.0, 0.0]), Err(Error::Input(_))));
        let mut s = c.clone();
        s.domain = Domain::shell(4);
        s.xi1 = vec![1.5, 0.0, 0.0, 0.0];
        s.xi2 = vec![-1.5, 0.0, 0.0, 0.0];
        assert!(matches!(FieldPair::new(&s, ProjectionMode::Convolution), Err(Error::UnsupportedDomain(_))));
    }

    #[test]
    fn non_collinear_centres_have_no_common_axis() {
        let mut c = config(4, 0.01);
        c.xi2 = vec![0.0, 0.4, 0.0, 0.0];
        let fp = FieldPair::new(&c, ProjectionMode::Convolution).unwrap();
        assert!(!fp.collinear());
        assert!(fp.pu_uv(1, 0.0, 0.1).is_err());
        let fp = FieldPair::new(&config(4, 0.01), ProjectionMode::Convolution).unwrap();
        assert_eq!(fp.axis_offsets(), Some([0.3, -0.4]));
    }

    proptest! {
        #[test]
        fn pow_defect_matches_direct(u in 0.1f64..10.0, r in 1e-3f64..0.9, p in 1.2f64..3.0) {
            let h = r * u;
            let direct = (u - h).powf(p) - u.powf(p);
            prop_assert!((pow_defect(u, h, p) - direct).abs() <= 1e-12 * u.powf(p));
        }
    }
}
