//! Harmonic extension of zonal boundary data on a ball.
//!
//! Data `g(z)` on `∂B(0,R)` depending only on `t = z·a/R` expands as
//! `g = Σ c_l C_l^ν(t)` with Gegenbauer polynomials, `ν = (N-2)/2`, and the
//! harmonic extension is `h(x) = Σ c_l (|x|/R)^l C_l^ν(x̂·a)`.
//!
//! For bubble data the coefficients decay geometrically, so the
//! extension is accurate to rounding.

use crate::error::{Error, Result};
use crate::quadrature::rules::GaussLegendre;

const MAX_DEGREE: usize = 1500;

/// `C_0^ν(t), ..., C_L^ν(t)` by the three-term recurrence.
pub fn gegenbauer_all(nu: f64, t: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() == 1 {
        return;
    }
    out[1] = 2.0 * nu * t;
    for l in 2..out.len() {
        let lf = l as f64;
        out[l] = (2.0 * t * (lf + nu - 1.0) * out[l - 1] - (lf + 2.0 * nu - 2.0) * out[l - 2]) / lf;
    }
}

#[derive(Debug, Clone)]
pub struct ZonalHarmonic {
    nu: f64,
    radius: f64,
    axis: Vec<f64>,
    coeffs: Vec<f64>,
}

impl ZonalHarmonic {
    /// Fit `g(t)`, `t ∈ [-1, 1]`, where the data at `z = R(t a + √(1-t²) b)` is `g(t)`.
    ///
    /// `decay` is the expected geometric decay rate of the coefficients
    /// (`|c_l| ~ decay^{-l}`); it sets the degree and node count.
    pub fn fit<G: Fn(f64) -> f64>(n: usize, radius: f64, axis: &[f64], decay: f64, g: G) -> Result<Self> {
        if n < 3 || axis.len() != n {
            return Err(Error::Input("zonal harmonic needs N >= 3 and an N-dimensional axis".into()));
        }
        let nu = (n as f64 - 2.0) / 2.0;
        let rho = decay.max(1.0 + 1e-3);
        let degree = ((40.0 / rho.ln()).ceil() as usize + 8).min(MAX_DEGREE);
        let nodes = (degree + degree / 2 + 64).min(2 * MAX_DEGREE);
        let gl = GaussLegendre::new(nodes);
        let mut proj = vec![0.0; degree + 1];
        let mut norm = vec![0.0; degree + 1];
        let mut c = vec![0.0; degree + 1];
        for (theta, w) in gl.mapped(0.0, std::f64::consts::PI) {
            let t = theta.cos();
            let wt = w * theta.sin().powi(n as i32 - 2);
            let gv = g(t);
            gegenbauer_all(nu, t, &mut c);
            for l in 0..=degree {
                proj[l] += wt * gv * c[l];
                norm[l] += wt * c[l] * c[l];
            }
        }
        let mut coeffs: Vec<f64> = proj.iter().zip(&norm).map(|(p, q)| p / q).collect();
        // Trim the trailing coefficients that are at rounding level.
        let scale: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(l, v)| v.abs() * gegenbauer_at_one(nu, l))
            .fold(0.0, f64::max);
        while coeffs.len() > 1 {
            let l = coeffs.len() - 1;
            if coeffs[l].abs() * gegenbauer_at_one(nu, l) < 1e-12 * scale {
                coeffs.pop();
            } else {
                break;
            }
        }
        let an = axis.iter().map(|v| v * v).sum::<f64>().sqrt();
        if an == 0.0 {
            return Err(Error::Input("axis must be non-zero".into()));
        }
        Ok(ZonalHarmonic { nu, radius, axis: axis.iter().map(|v| v / an).collect(), coeffs })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// `h` at axial coordinate `u` and axis distance `v` (ball-centred frame).
    pub fn value_uv(&self, u: f64, v: f64) -> f64 {
        let r = (u * u + v * v).sqrt();
        if r == 0.0 {
            return self.coeffs[0];
        }
        let t = (u / r).clamp(-1.0, 1.0);
        let rho = r / self.radius;
        // Forward recurrence fused with the powers of rho.
        let nu = self.nu;
        let (mut c0, mut c1) = (1.0, 2.0 * nu * t);
        let mut p = 1.0;
        let mut s = self.coeffs[0];
        for (l, &a) in self.coeffs.iter().enumerate().skip(1) {
            p *= rho;
            let cl = if l == 1 {
                c1
            } else {
                let lf = l as f64;
                let c2 = (2.0 * t * (lf + nu - 1.0) * c1 - (lf + 2.0 * nu - 2.0) * c0) / lf;
                c0 = c1;
                c1 = c2;
                c2
            };
            s += a * p * cl;
        }
        s
    }

    fn split(&self, x: &[f64]) -> (f64, f64) {
        let u: f64 = x.iter().zip(&self.axis).map(|(a, b)| a * b).sum();
        let r2: f64 = x.iter().map(|v| v * v).sum();
        (u, (r2 - u * u).max(0.0).sqrt())
    }

    /// `h(x)` for `x` in ball-centred coordinates.
    pub fn value(&self, x: &[f64]) -> f64 {
        let (u, v) = self.split(x);
        self.value_uv(u, v)
    }

    /// `∇h(x)` in ball-centred coordinates.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r == 0.0 {
            let c1 = self.coeffs.get(1).copied().unwrap_or(0.0);
            return self.axis.iter().map(|a| c1 * 2.0 * self.nu * a / self.radius).collect();
        }
        let xh: Vec<f64> = x.iter().map(|v| v / r).collect();
        let t = xh.iter().zip(&self.axis).map(|(a, b)| a * b).sum::<f64>().clamp(-1.0, 1.0);
        let deg = self.degree();
        let mut c = vec![0.0; deg + 1];
        let mut d = vec![0.0; deg + 1];
        gegenbauer_all(self.nu, t, &mut c);
        gegenbauer_all(self.nu + 1.0, t, &mut d);
        // ∇(r^l C_l(t)) = r^{l-1} [l C_l x̂ + C_l'(t) (a - t x̂)], C_l' = 2ν C_{l-1}^{ν+1}
        let rho = r / self.radius;
        let (mut radial, mut tangential) = (0.0, 0.0);
        let mut p = 1.0 / self.radius;
        for l in 1..=deg {
            let a = self.coeffs[l];
            radial += a * p * l as f64 * c[l];
            tangential += a * p * 2.0 * self.nu * d[l - 1];
            p *= rho;
        }
        (0..n).map(|k| radial * xh[k] + tangential * (self.axis[k] - t * xh[k])).collect()
    }

    /// `Σ c_l (r/R)^l C_l'(x̂·a) (x̂·e)`, the derivative of `h` when the axis
    /// is rotated towards the unit vector `e ⊥ a` (per unit angle).
    pub fn rotation_derivative(&self, x: &[f64], e: &[f64]) -> f64 {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r == 0.0 {
            return 0.0;
        }
        let t = (x.iter().zip(&self.axis).map(|(a, b)| a * b).sum::<f64>() / r).clamp(-1.0, 1.0);
        let xe = x.iter().zip(e).map(|(a, b)| a * b).sum::<f64>() / r;
        let deg = self.degree();
        let mut d = vec![0.0; deg.max(1)];
        gegenbauer_all(self.nu + 1.0, t, &mut d);
        let rho = r / self.radius;
        let mut p = rho;
        let mut s = 0.0;
        for l in 1..=deg {
            s += self.coeffs[l] * p * 2.0 * self.nu * d[l - 1];
            p *= rho;
        }
        s * xe
    }
}

/// `C_l^ν(1) = (2ν)_l / l!`.
fn gegenbauer_at_one(nu: f64, l: usize) -> f64 {
    let mut v = 1.0;
    for k in 0..l {
        v *= (2.0 * nu + k as f64) / (k as f64 + 1.0);
    }
    v
}
