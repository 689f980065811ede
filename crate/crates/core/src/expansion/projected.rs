//! Projected bubbles `PU = U - h` on a ball, where `h` is the harmonic
//! function with `h = U` on the boundary.
//!
//! Two modes:
//! * `Convolution`: the exact projection, with `h` the spectral harmonic
//!   extension of the boundary trace.
//! * `Expansion`: the leading-order model `h ≈ A s^α H(x, ξ)`.

use serde::{Deserialize, Serialize};

use crate::bubbles::{alpha, c_n, BubbleParams};
use crate::error::{check_point, Error, Result};
use crate::expansion::harmonic::ZonalHarmonic;
use crate::estimate::Estimate;
use crate::greens::ball::Ball;
use crate::greens::domain::Domain;
use crate::greens::wos::WalkOnSpheres;
use crate::special::sphere_area;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionMode {
    Convolution,
    Expansion,
}

impl std::str::FromStr for ProjectionMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "convolution" => Ok(ProjectionMode::Convolution),
            "expansion" => Ok(ProjectionMode::Expansion),
            _ => Err(Error::Input(format!("unknown projection mode {s:?}"))),
        }
    }
}

/// `A = ∫_{R^N} U_{1,0}^p = (N-2) C_N ω_{N-1}`.
pub fn bubble_mass(n: usize) -> f64 {
    (n as f64 - 2.0) * c_n::<f64>(n) * sphere_area::<f64>(n - 1)
}

#[derive(Debug, Clone)]
enum Correction {
    Spectral { h: ZonalHarmonic, h_ds: ZonalHarmonic, h_dc: ZonalHarmonic },
    Expansion,
}

/// A bubble `U_{s,ξ}` projected onto `H^1_0` of a ball.
#[derive(Debug, Clone)]
pub struct ProjectedBubble {
    n: usize,
    ball: Ball<f64>,
    bubble: BubbleParams<f64>,
    axis: Vec<f64>,
    perp: Vec<f64>,
    offset: f64,
    mode: ProjectionMode,
    mass: f64,
    correction: Correction,
}

fn unit_perp(a: &[f64]) -> Vec<f64> {
    // Pick the coordinate direction least aligned with a and orthogonalise.
    let k = a
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
        .map(|(k, _)| k)
        .unwrap_or(0);
    let mut b = vec![0.0; a.len()];
    b[k] = 1.0;
    let d = a[k];
    for (bi, ai) in b.iter_mut().zip(a) {
        *bi -= d * ai;
    }
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    b.iter().map(|v| v / nb).collect()
}

impl ProjectedBubble {
    /// `bubble.delta` is the physical scale `s`.
    pub fn new(ball: &Ball<f64>, bubble: &BubbleParams<f64>, mode: ProjectionMode) -> Result<Self> {
        let n = ball.dim();
        if bubble.n != n {
            return Err(Error::Input("bubble and ball dimensions differ".into()));
        }
        check_point(n, &bubble.xi, "xi")?;
        let local: Vec<f64> = bubble.xi.iter().zip(&ball.center).map(|(a, b)| a - b).collect();
        let offset = local.iter().map(|v| v * v).sum::<f64>().sqrt();
        if offset >= ball.radius {
            return Err(Error::Constraint("bubble centre must lie inside the ball".into()));
        }
        let axis = if offset > 0.0 {
            local.iter().map(|v| v / offset).collect()
        } else {
            let mut e = vec![0.0; n];
            e[0] = 1.0;
            e
        };
        let perp = unit_perp(&axis);
        let mut pb = ProjectedBubble {
            n,
            ball: ball.clone(),
            bubble: bubble.clone(),
            axis,
            perp,
            offset,
            mode,
            mass: bubble_mass(n),
            correction: Correction::Expansion,
        };
        if mode == ProjectionMode::Convolution {
            pb.correction = pb.spectral()?;
        }
        Ok(pb)
    }

    fn spectral(&self) -> Result<Correction> {
        let (n, r, c, s) = (self.n, self.ball.radius, self.offset, self.bubble.delta);
        let al = alpha::<f64>(n);
        let cn = c_n::<f64>(n);
        let decay = if c > 0.0 {
            let t = (r * r + c * c + s * s) / (2.0 * r * c);
            t + (t * t - 1.0).max(0.0).sqrt()
        } else {
            1e6
        };
        let d2 = |t: f64| r * r - 2.0 * r * c * t + c * c;
        let u = |t: f64| cn * (s / (s * s + d2(t))).powf(al);
        let h = ZonalHarmonic::fit(n, r, &self.axis, decay, u)?;
        let h_ds = ZonalHarmonic::fit(n, r, &self.axis, decay, |t| {
            let q = s * s + d2(t);
            al * u(t) * (d2(t) - s * s) / (s * q)
        })?;
        let h_dc = ZonalHarmonic::fit(n, r, &self.axis, decay, |t| {
            2.0 * al * u(t) * (r * t - c) / (s * s + d2(t))
        })?;
        Ok(Correction::Spectral { h, h_ds, h_dc })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> ProjectionMode {
        self.mode
    }

    pub fn bubble(&self) -> &BubbleParams<f64> {
        &self.bubble
    }

    pub fn ball(&self) -> &Ball<f64> {
        &self.ball
    }

    /// Signed position of the centre along the axis.
    pub fn axis_offset(&self) -> f64 {
        self.offset
    }

    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    /// Global point with axial coordinate `u` and axis distance `v`.
    pub fn point_uv(&self, u: f64, v: f64) -> Vec<f64> {
        (0..self.n).map(|k| self.ball.center[k] + u * self.axis[k] + v * self.perp[k]).collect()
    }

    fn local(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.ball.center).map(|(a, b)| a - b).collect()
    }

    fn q_uv(&self, u: f64, v: f64) -> f64 {
        let s = self.bubble.delta;
        s * s + (u - self.offset).powi(2) + v * v
    }

    // --- axisymmetric evaluators (ball-centred (u, v) along the axis) ---

    pub fn u_uv(&self, u: f64, v: f64) -> f64 {
        c_n::<f64>(self.n) * (self.bubble.delta / self.q_uv(u, v)).powf(alpha::<f64>(self.n))
    }

    /// `∂_s U`.
    pub fn ds_u_uv(&self, u: f64, v: f64) -> f64 {
        let s = self.bubble.delta;
        let q = self.q_uv(u, v);
        alpha::<f64>(self.n) * self.u_uv(u, v) * (q - 2.0 * s * s) / (s * q)
    }

    /// Derivative of `U` as the centre moves along the axis.
    pub fn dc_u_uv(&self, u: f64, v: f64) -> f64 {
        2.0 * alpha::<f64>(self.n) * self.u_uv(u, v) * (u - self.offset) / self.q_uv(u, v)
    }

    fn expansion_h(&self, x: &[f64]) -> f64 {
        let s = self.bubble.delta;
        self.mass
            * s.powf(alpha::<f64>(self.n))
            * self.ball.regular_part(x, &self.bubble.xi).unwrap_or(f64::NAN)
    }

    /// `U - PU`.
    pub fn h_uv(&self, u: f64, v: f64) -> f64 {
        match &self.correction {
            Correction::Spectral { h, .. } => h.value_uv(u, v),
            Correction::Expansion => self.expansion_h(&self.point_uv(u, v)),
        }
    }

    pub fn pu_uv(&self, u: f64, v: f64) -> f64 {
        self.u_uv(u, v) - self.h_uv(u, v)
    }

    /// `U` at distance `r` from the centre.
    pub fn u_r(&self, r: f64) -> f64 {
        let s = self.bubble.delta;
        c_n::<f64>(self.n) * (s / (s * s + r * r)).powf(alpha::<f64>(self.n))
    }

    /// `∂_s U` at distance `r` from the centre.
    pub fn ds_u_r(&self, r: f64) -> f64 {
        let s = self.bubble.delta;
        let q = s * s + r * r;
        alpha::<f64>(self.n) * self.u_r(r) * (r * r - s * s) / (s * q)
    }

    /// `P(∂_s U)`.
    pub fn p_ds_uv(&self, u: f64, v: f64) -> f64 {
        self.ds_u_uv(u, v) - self.h_ds_uv(u, v)
    }

    /// `∂_s U - P(∂_s U)`.
    pub fn h_ds_uv(&self, u: f64, v: f64) -> f64 {
        match &self.correction {
            Correction::Spectral { h_ds, .. } => h_ds.value_uv(u, v),
            Correction::Expansion => {
                alpha::<f64>(self.n) / self.bubble.delta * self.expansion_h(&self.point_uv(u, v))
            }
        }
    }

    /// `P(∂_c U)`, with `∂_c` the derivative along the axis.
    pub fn p_dc_uv(&self, u: f64, v: f64) -> f64 {
        let corr = match &self.correction {
            Correction::Spectral { h_dc, .. } => h_dc.value_uv(u, v),
            Correction::Expansion => self.expansion_dxi(&self.point_uv(u, v), &self.axis),
        };
        self.dc_u_uv(u, v) - corr
    }

    fn expansion_dxi(&self, x: &[f64], e: &[f64]) -> f64 {
        let s = self.bubble.delta;
        // ∂_ξ H(x, ξ) = (∇_1 H)(ξ, x) by symmetry
        let g = self.ball.regular_part_grad_x(&self.bubble.xi, x).unwrap_or_else(|_| vec![f64::NAN; self.n]);
        self.mass * s.powf(alpha::<f64>(self.n)) * g.iter().zip(e).map(|(a, b)| a * b).sum::<f64>()
    }

    // --- general evaluators (global coordinates) ---

    fn check(&self, x: &[f64]) -> Result<()> {
        check_point(self.n, x, "x")
    }

    pub fn u(&self, x: &[f64]) -> Result<f64> {
        self.bubble.value(x)
    }

    /// `U - PU`.
    pub fn h(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        Ok(match &self.correction {
            Correction::Spectral { h, .. } => h.value(&self.local(x)),
            Correction::Expansion => self.expansion_h(x),
        })
    }

    pub fn pu(&self, x: &[f64]) -> Result<f64> {
        Ok(self.u(x)? - self.h(x)?)
    }

    pub fn grad_pu(&self, x: &[f64]) -> Result<Vec<f64>> {
        let gu = self.bubble.gradient(x)?;
        let gh = match &self.correction {
            Correction::Spectral { h, .. } => h.gradient(&self.local(x)),
            Correction::Expansion => {
                let f = self.mass * self.bubble.delta.powf(alpha::<f64>(self.n));
                self.ball
                    .regular_part_grad_x(x, &self.bubble.xi)?
                    .into_iter()
                    .map(|v| f * v)
                    .collect()
            }
        };
        Ok(gu.iter().zip(&gh).map(|(a, b)| a - b).collect())
    }

    /// `P(∂_s U)(x)`.
    pub fn p_ds(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        let ds = self.bubble.psi(0, x)?;
        let corr = match &self.correction {
            Correction::Spectral { h_ds, .. } => h_ds.value(&self.local(x)),
            Correction::Expansion => alpha::<f64>(self.n) / self.bubble.delta * self.expansion_h(x),
        };
        Ok(ds - corr)
    }

    /// `P(∂_{ξ_j} U)(x)` for `1 ≤ j ≤ N`.
    pub fn p_dxi(&self, j: usize, x: &[f64]) -> Result<f64> {
        if j == 0 || j > self.n {
            return Err(Error::Input(format!("centre derivative index {j} out of range")));
        }
        self.check(x)?;
        let d = self.bubble.psi(j, x)?;
        let mut e = vec![0.0; self.n];
        e[j - 1] = 1.0;
        let corr = match &self.correction {
            Correction::Spectral { h_dc, h, .. } => {
                let xl = self.local(x);
                if self.offset == 0.0 {
                    // Radial configuration: the axial expansion rotated onto e_j.
                    let rotated = ZonalHarmonicView { base: h_dc, axis: &e };
                    rotated.value(&xl)
                } else {
                    let ea: f64 = e.iter().zip(&self.axis).map(|(a, b)| a * b).sum();
                    let eperp: Vec<f64> = e.iter().zip(&self.axis).map(|(a, b)| a - ea * b).collect();
                    let np = eperp.iter().map(|v| v * v).sum::<f64>().sqrt();
                    let mut v = ea * h_dc.value(&xl);
                    if np > 1e-300 {
                        let unit: Vec<f64> = eperp.iter().map(|v| v / np).collect();
                        v += np * h.rotation_derivative(&xl, &unit) / self.offset;
                    }
                    v
                }
            }
            Correction::Expansion => self.expansion_dxi(x, &e),
        };
        Ok(d - corr)
    }

    /// `P ψ^j` with `ψ^0 = ∂_s U` (physical scale) and `ψ^j = ∂_{ξ_j} U`.
    pub fn p_psi(&self, j: usize, x: &[f64]) -> Result<f64> {
        if j == 0 {
            self.p_ds(x)
        } else {
            self.p_dxi(j, x)
        }
    }
}

/// `P_λ U_{δ,ξ/λ}` pulled back to `Ω`, i.e. `PU_{λδ,ξ}(x)` with `x ∈ Ω`.
///
/// Ball domains are handled exactly (convolution) or by the two-term
/// formula with the closed-form `H` (expansion). Other domains support the
/// expansion mode only, with `H` from walk-on-spheres using `n` walks.
pub fn projected_bubble(
    mode: ProjectionMode,
    lambda: f64,
    params: &BubbleParams<f64>,
    domain: &Domain,
    x: &[f64],
    n: usize,
    seed: u64,
) -> Result<Estimate> {
    if !(lambda > 0.0) {
        return Err(Error::Input("lambda must be positive".into()));
    }
    let scaled = BubbleParams::new(params.n, lambda * params.delta, params.xi.clone())?;
    check_point(params.n, x, "x")?;
    if domain.sdf(x) > 1e-12 {
        return Err(Error::Input("x must lie in the closed domain".into()));
    }
    if let Some(ball) = domain.as_ball() {
        let pb = ProjectedBubble::new(&ball, &scaled, mode)?;
        return Ok(Estimate::exact(pb.pu(x)?));
    }
    if mode == ProjectionMode::Convolution {
        return Err(Error::UnsupportedDomain("convolution mode needs a ball".into()));
    }
    let al = alpha::<f64>(params.n);
    let k = bubble_mass(params.n) * scaled.delta.powf(al);
    let h = WalkOnSpheres::new(domain)?.regular_part(x, &scaled.xi, n, seed)?;
    let u = scaled.value(x)?;
    Ok(Estimate { value: u - k * h.value, stderr: k * h.stderr, ..h })
}

/// Evaluate a zonal expansion about a different axis.
struct ZonalHarmonicView<'a> {
    base: &'a ZonalHarmonic,
    axis: &'a [f64],
}

impl ZonalHarmonicView<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        let u: f64 = x.iter().zip(self.axis).map(|(a, b)| a * b).sum();
        let r2: f64 = x.iter().map(|v| v * v).sum();
        self.base.value_uv(u, (r2 - u * u).max(0.0).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn setup(n: usize, s: f64, c: f64, mode: ProjectionMode) -> ProjectedBubble {
        let ball = Ball::centered(n, 1.0).unwrap();
        let mut xi = vec![0.0; n];
        xi[0] = c;
        let b = BubbleParams::new(n, s, xi).unwrap();
        ProjectedBubble::new(&ball, &b, mode).unwrap()
    }

    #[test]
    fn vanishes_on_the_boundary() {
        let pb = setup(5, 0.05, 0.4, ProjectionMode::Convolution);
        for th in [0.0, 0.3, 1.2, 2.5, std::f64::consts::PI] {
            let x = [th.cos(), th.sin() * 0.6, th.sin() * 0.8, 0.0, 0.0];
            let u = pb.u(&x).unwrap();
            assert!(pb.pu(&x).unwrap().abs() < 1e-12 * u.max(1.0), "theta={th}");
            assert!(pb.p_ds(&x).unwrap().abs() < 1e-10);
            for j in 1..=5 {
                assert!(pb.p_dxi(j, &x).unwrap().abs() < 1e-9, "j={j}");
            }
        }
    }

    #[test]
    fn correction_is_harmonic() {
        let pb = setup(4, 0.1, 0.3, ProjectionMode::Convolution);
        let x = [0.2, -0.1, 0.3, 0.1];
        let h = 1e-3;
        let h0 = pb.h(&x).unwrap();
        let mut lap = 0.0;
        for k in 0..4 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            lap += pb.h(&xp).unwrap() + pb.h(&xm).unwrap() - 2.0 * h0;
        }
        assert!((lap / (h * h)).abs() < 1e-5 * h0.abs());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let (n, s, c) = (4, 0.2, 0.3);
        let pb = setup(n, s, c, ProjectionMode::Convolution);
        let x = [0.1, 0.25, -0.2, 0.05];
        let eps = 1e-5;
        let fd_s = (setup(n, s + eps, c, ProjectionMode::Convolution).pu(&x).unwrap()
            - setup(n, s - eps, c, ProjectionMode::Convolution).pu(&x).unwrap())
            / (2.0 * eps);
        assert!((pb.p_ds(&x).unwrap() - fd_s).abs() < 1e-6 * fd_s.abs().max(1.0));
        let ball = Ball::centered(n, 1.0).unwrap();
        for j in 1..=n {
            let mut xp = vec![c, 0.0, 0.0, 0.0];
            let mut xm = xp.clone();
            xp[j - 1] += eps;
            xm[j - 1] -= eps;
            let pp = ProjectedBubble::new(&ball, &BubbleParams::new(n, s, xp).unwrap(), ProjectionMode::Convolution).unwrap();
            let pm = ProjectedBubble::new(&ball, &BubbleParams::new(n, s, xm).unwrap(), ProjectionMode::Convolution).unwrap();
            let fd = (pp.pu(&x).unwrap() - pm.pu(&x).unwrap()) / (2.0 * eps);
            let v = pb.p_dxi(j, &x).unwrap();
            assert!((v - fd).abs() < 1e-6 * fd.abs().max(1.0), "j={j}: {v} {fd}");
        }
        let g = pb.grad_pu(&x).unwrap();
        for k in 0..n {
            let mut xp = x;
            let mut xm = x;
            xp[k] += eps;
            xm[k] -= eps;
            let fd = (pb.pu(&xp).unwrap() - pb.pu(&xm).unwrap()) / (2.0 * eps);
            assert!((g[k] - fd).abs() < 1e-6 * fd.abs().max(1.0));
        }
    }

    #[test]
    fn centred_bubble_has_constant_correction() {
        let pb = setup(6, 0.3, 0.0, ProjectionMode::Convolution);
        let cn = c_n::<f64>(6);
        let expect = cn * (0.3f64 / (0.09 + 1.0)).powi(2);
        assert!((pb.h(&[0.2, 0.1, 0.0, 0.0, 0.3, 0.0]).unwrap() - expect).abs() < 1e-13);
        // P ∂_{ξ_j} U at the centre configuration vanishes on the boundary too
        let x = [0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
        assert!(pb.p_dxi(3, &x).unwrap().abs() < 1e-10);
    }

    #[test]
    fn uv_and_global_evaluators_agree() {
        let pb = setup(5, 0.07, -0.35, ProjectionMode::Convolution);
        let x = pb.point_uv(0.2, 0.3);
        assert!((pb.pu(&x).unwrap() - pb.pu_uv(0.2, 0.3)).abs() < 1e-12);
        assert!((pb.p_ds(&x).unwrap() - pb.p_ds_uv(0.2, 0.3)).abs() < 1e-10);
        // axis points towards the centre, which sits at -0.35 e_1
        let along = pb.axis()[0];
        assert!((pb.p_dxi(1, &x).unwrap() - along * pb.p_dc_uv(0.2, 0.3)).abs() < 1e-9);
        let pe = setup(5, 0.07, -0.35, ProjectionMode::Expansion);
        assert!((pe.pu(&x).unwrap() - pe.pu_uv(0.2, 0.3)).abs() < 1e-12);
        assert!((pe.p_dxi(1, &x).unwrap() - along * pe.p_dc_uv(0.2, 0.3)).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn projection_lies_between_zero_and_bubble(
            s in 0.01f64..0.5, c in -0.6f64..0.6, u in -0.95f64..0.95, v in 0.0f64..0.3,
        ) {
            prop_assume!(u * u + v * v < 0.98);
            let pb = setup(4, s, c, ProjectionMode::Convolution);
            let pu = pb.pu_uv(u, v);
            prop_assert!(pu > 0.0);
            prop_assert!(pu <= pb.u_uv(u, v));
        }
    }
}
