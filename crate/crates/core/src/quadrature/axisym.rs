//! Deterministic quadrature on a ball for integrands that are symmetric
//! about an axis through the centre.
//!
//! Points are written as `x = u a + v b` (ball centre at the origin, `a`
//! the axis, `v ≥ 0` the distance from the axis), and the integrand is a
//! function of `(u, v)`. Each concentration point `c_k a` with scale `s_k`
//! gets its own polar patch with geometric radial panels; the patches are
//! glued with a smooth partition of unity, so steep bubble profiles are
//! resolved at every scale.

use crate::error::{Error, Result};
use crate::quadrature::rules::GaussLegendre;
use crate::special::sphere_area;

/// A concentration point on the axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisPoint {
    pub offset: f64,
    pub scale: f64,
}

#[derive(Debug, Clone)]
pub struct AxisymBall {
    n: usize,
    radius: f64,
    points: Vec<AxisPoint>,
    low: Resolution,
    high: Resolution,
}

#[derive(Debug, Clone)]
struct Resolution {
    radial: GaussLegendre,
    angular: GaussLegendre,
}

impl Resolution {
    fn new(radial: usize, angular: usize) -> Self {
        Resolution { radial: GaussLegendre::new(radial), angular: GaussLegendre::new(angular) }
    }
}

/// A quadrature node: ball-centred `(u, v)` and the distance `r` from the
/// centre of the patch that produced it. `r` stays exact at scales far
/// below the rounding of `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarPoint {
    pub patch: usize,
    pub u: f64,
    pub v: f64,
    pub r: f64,
}

/// Value with the difference between two resolutions as error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadValue {
    pub value: f64,
    pub error: f64,
}

impl AxisymBall {
    pub fn new(n: usize, radius: f64, points: Vec<AxisPoint>) -> Result<Self> {
        if n < 3 {
            return Err(Error::Input("axisymmetric quadrature needs N >= 3".into()));
        }
        if points.is_empty() {
            return Err(Error::Input("need at least one concentration point".into()));
        }
        for p in &points {
            if !(p.scale > 0.0) || p.offset.abs() >= radius {
                return Err(Error::Input("concentration points must lie inside the ball".into()));
            }
        }
        Ok(AxisymBall {
            n,
            radius,
            points,
            low: Resolution::new(12, 20),
            high: Resolution::new(20, 32),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Partition-of-unity weight of patch `k` at `(u, v)`.
    fn weight(&self, k: usize, u: f64, v: f64) -> f64 {
        if self.points.len() == 1 {
            return 1.0;
        }
        let e = (2 * self.n + 4) as i32;
        // Work with d_k^e / d_m^e to avoid overflow.
        let dk2 = (u - self.points[k].offset).powi(2) + v * v;
        let mut denom = 0.0;
        for (m, p) in self.points.iter().enumerate() {
            if m == k {
                denom += 1.0;
                continue;
            }
            let dm2 = (u - p.offset).powi(2) + v * v;
            if dm2 == 0.0 {
                return 0.0;
            }
            denom += (dk2 / dm2).powi(e / 2);
        }
        1.0 / denom
    }

    fn breakpoints(&self, k: usize) -> Vec<f64> {
        let p = self.points[k];
        let rmax = self.radius + p.offset.abs();
        let mut b = vec![0.0];
        let mut r = p.scale / 16.0;
        while r < rmax {
            b.push(r);
            r *= 2.0;
        }
        for (m, q) in self.points.iter().enumerate() {
            if m != k {
                let d = (q.offset - p.offset).abs();
                for f in [0.5, 0.75, 1.0, 1.25, 1.5] {
                    b.push(f * d);
                }
            }
        }
        b.push(rmax);
        b.retain(|&x| x <= rmax);
        b.sort_by(f64::total_cmp);
        b.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(b.abs()));
        b
    }

    fn integrate_with<F: Fn(&PolarPoint) -> f64>(&self, res: &Resolution, f: &F) -> f64 {
        let n = self.n;
        let omega = sphere_area::<f64>(n - 2);
        let r2 = self.radius * self.radius;
        let mut total = 0.0;
        for k in 0..self.points.len() {
            let c = self.points[k].offset;
            let bp = self.breakpoints(k);
            let mut patch = 0.0;
            for (t0, t1) in [(0.0, std::f64::consts::FRAC_PI_2), (std::f64::consts::FRAC_PI_2, std::f64::consts::PI)] {
                for (theta, wt) in res.angular.mapped(t0, t1) {
                    let (st, ct) = theta.sin_cos();
                    let rmax = -c * ct + (r2 - c * c * st * st).sqrt();
                    let ang = wt * st.powi(n as i32 - 2);
                    let mut line = 0.0;
                    for w in bp.windows(2) {
                        let (a, b) = (w[0], w[1].min(rmax));
                        if a >= b {
                            break;
                        }
                        for (r, wr) in res.radial.mapped(a, b) {
                            let u = c + r * ct;
                            let v = r * st;
                            let val = f(&PolarPoint { patch: k, u, v, r });
                            if val != 0.0 {
                                line += wr * r.powi(n as i32 - 1) * self.weight(k, u, v) * val;
                            }
                        }
                    }
                    patch += ang * line;
                }
            }
            total += omega * patch;
        }
        total
    }

    /// `∫_B f` with an error estimate from two resolutions.
    pub fn integrate<F: Fn(f64, f64) -> f64>(&self, f: F) -> QuadValue {
        self.integrate_polar(|p| f(p.u, p.v))
    }

    /// As [`integrate`](Self::integrate), with the patch-relative radius.
    pub fn integrate_polar<F: Fn(&PolarPoint) -> f64>(&self, f: F) -> QuadValue {
        let hi = self.integrate_with(&self.high, &f);
        let lo = self.integrate_with(&self.low, &f);
        QuadValue { value: hi, error: (hi - lo).abs() }
    }

    /// `‖f‖_{L^q(B)}` with propagated error estimate.
    pub fn lp_norm<F: Fn(f64, f64) -> f64>(&self, f: F, q: f64) -> QuadValue {
        let i = self.integrate(|u, v| f(u, v).abs().powf(q));
        let value = i.value.max(0.0).powf(1.0 / q);
        let error = if i.value > 0.0 { value / q * i.error / i.value } else { i.error.powf(1.0 / q) };
        QuadValue { value, error }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bubbles::{c_n, critical_p, BubbleParams};

    #[test]
    fn ball_volume() {
        for n in 3..=7 {
            let q = AxisymBall::new(n, 1.3, vec![AxisPoint { offset: 0.4, scale: 0.1 }]).unwrap();
            let vol = sphere_area::<f64>(n - 1) / n as f64 * 1.3f64.powi(n as i32);
            let v = q.integrate(|_, _| 1.0);
            assert!((v.value / vol - 1.0).abs() < 1e-12, "N={n}");
        }
    }

    #[test]
    fn second_moment_two_patches() {
        // ∫_B u² = ω_{N-1} R^{N+2} / (N (N+2))
        let n = 5;
        let q = AxisymBall::new(
            n,
            1.0,
            vec![AxisPoint { offset: -0.3, scale: 0.01 }, AxisPoint { offset: 0.5, scale: 0.002 }],
        )
        .unwrap();
        let exact = sphere_area::<f64>(n - 1) / (n * (n + 2)) as f64;
        let v = q.integrate(|u, _| u * u);
        assert!((v.value / exact - 1.0).abs() < 1e-10, "{v:?} {exact}");
    }

    #[test]
    fn concentrated_bubble_mass() {
        // ∫_B U^p for a tiny bubble is the whole-space mass minus a small tail.
        let n = 4;
        let s = 1e-4;
        let b = BubbleParams::new(n, s, vec![0.2, 0.0, 0.0, 0.0]).unwrap();
        let p = critical_p::<f64>(n);
        let q = AxisymBall::new(n, 1.0, vec![AxisPoint { offset: 0.2, scale: s }]).unwrap();
        let v = q.integrate(|u, v| b.value(&[u, v, 0.0, 0.0]).unwrap().powf(p));
        // ∫ U_s^p = s^α A
        let a = s * (n as f64 - 2.0) * c_n::<f64>(n) * sphere_area::<f64>(n - 1);
        assert!((v.value / a - 1.0).abs() < 1e-6, "{}", v.value / a);
        assert!(v.error < 1e-8 * a);
    }

    #[test]
    fn scale_below_rounding_of_offset() {
        // the patch radius resolves a profile the axial coordinate cannot
        let n = 4;
        let s = 1e-20;
        let p = critical_p::<f64>(n);
        let q = AxisymBall::new(n, 1.0, vec![AxisPoint { offset: 0.3, scale: s }]).unwrap();
        let v = q.integrate_polar(|pt| (c_n::<f64>(n) * s / (s * s + pt.r * pt.r)).powf(p));
        let a = s * (n as f64 - 2.0) * c_n::<f64>(n) * sphere_area::<f64>(n - 1);
        assert!((v.value / a - 1.0).abs() < 1e-8, "{}", v.value / a);
    }

    #[test]
    fn partition_of_unity_sums_to_one() {
        let q = AxisymBall::new(
            4,
            1.0,
            vec![AxisPoint { offset: -0.3, scale: 0.1 }, AxisPoint { offset: 0.4, scale: 0.1 }],
        )
        .unwrap();
        for (u, v) in [(0.0, 0.1), (0.39, 0.0), (-0.9, 0.2), (0.05, 0.5)] {
            let s = q.weight(0, u, v) + q.weight(1, u, v);
            assert!((s - 1.0).abs() < 1e-14);
        }
    }
}
