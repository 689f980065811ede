//! Aubin–Talenti bubbles, their kernel directions and the structural
//! constants of the bubble expansion.
//!
//! `U_{δ,ξ}(x) = C_N δ^α / (δ² + |x-ξ|²)^α` with `α = (N-2)/2` solves
//! `-ΔU = U^p`, `p = (N+2)/(N-2)`, on all of `R^N`.
//!
//! The closed-form evaluators are generic over [`num_traits::Float`];
//! the integrated constants are computed in `f64`.

use num_traits::{Float, FloatConst};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::quadrature::rules::adaptive_gk;
use crate::special::sphere_area;

fn cast<T: Float>(x: f64) -> T {
    T::from(x).expect("f64 is representable")
}

/// `α = (N-2)/2`.
pub fn alpha<T: Float>(n: usize) -> T {
    cast::<T>((n as f64 - 2.0) / 2.0)
}

/// Critical exponent `p = (N+2)/(N-2)`.
pub fn critical_p<T: Float>(n: usize) -> T {
    cast::<T>((n as f64 + 2.0) / (n as f64 - 2.0))
}

/// Normalising constant `C_N = (N(N-2))^{(N-2)/4}`.
///
/// It is the unique positive `c` with `c^{p-1} = N(N-2)`, which is what
/// makes the profile `c (1+r²)^{-α}` an exact solution.
pub fn c_n<T: Float>(n: usize) -> T {
    let nf = n as f64;
    cast::<T>(nf * (nf - 2.0)).powf(cast::<T>((nf - 2.0) / 4.0))
}

/// Green's-function normalisation `B_N = 1/((N-2) ω_{N-1})`.
pub fn b_n<T: Float + FloatConst>(n: usize) -> T {
    T::one() / (cast::<T>(n as f64 - 2.0) * sphere_area::<T>(n - 1))
}

/// A bubble: dimension, concentration parameter and centre.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BubbleParams<T = f64> {
    #[serde(rename = "N")]
    pub n: usize,
    pub delta: T,
    pub xi: Vec<T>,
}

impl<T: Float> BubbleParams<T> {
    pub fn new(n: usize, delta: T, xi: Vec<T>) -> Result<Self> {
        check_dim(n)?;
        if !(delta > T::zero()) || !delta.is_finite() {
            return Err(Error::Input("delta must be positive and finite".into()));
        }
        if xi.len() != n {
            return Err(Error::Input(format!("xi has {} coordinates, expected {n}", xi.len())));
        }
        if xi.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("xi has non-finite coordinates".into()));
        }
        Ok(BubbleParams { n, delta, xi })
    }

    fn validate(&self) -> Result<()> {
        check_dim(self.n)?;
        if !(self.delta > T::zero()) || !self.delta.is_finite() {
            return Err(Error::Input("delta must be positive and finite".into()));
        }
        if self.xi.len() != self.n {
            return Err(Error::Input("xi dimension mismatch".into()));
        }
        Ok(())
    }

    fn check_x(&self, x: &[T]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::Input(format!("x has {} coordinates, expected {}", x.len(), self.n)));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("x has non-finite coordinates".into()));
        }
        Ok(())
    }

    fn dist2(&self, x: &[T]) -> T {
        x.iter().zip(&self.xi).fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b))
    }

    /// `U_{δ,ξ}(x)`.
    pub fn value(&self, x: &[T]) -> Result<T> {
        self.validate()?;
        self.check_x(x)?;
        let a = alpha::<T>(self.n);
        let q = self.delta * self.delta + self.dist2(x);
        Ok(c_n::<T>(self.n) * (self.delta / q).powf(a))
    }

    /// `∇U_{δ,ξ}(x) = -2α U (x-ξ)/(δ²+|x-ξ|²)`.
    pub fn gradient(&self, x: &[T]) -> Result<Vec<T>> {
        let u = self.value(x)?;
        let a = alpha::<T>(self.n);
        let q = self.delta * self.delta + self.dist2(x);
        let two = cast::<T>(2.0);
        Ok(x.iter()
            .zip(&self.xi)
            .map(|(&xi, &ci)| -two * a * u * (xi - ci) / q)
            .collect())
    }

    /// `ΔU` from the closed form `-N(N-2) C_N δ^{(N+2)/2} (δ²+|x-ξ|²)^{-(N+2)/2}`.
    pub fn laplacian(&self, x: &[T]) -> Result<T> {
        self.validate()?;
        self.check_x(x)?;
        let nf = self.n as f64;
        let q = self.delta * self.delta + self.dist2(x);
        let e = cast::<T>((nf + 2.0) / 2.0);
        Ok(-cast::<T>(nf * (nf - 2.0)) * c_n::<T>(self.n) * (self.delta / q).powf(e))
    }

    /// Kernel direction `ψ^0 = ∂_δ U` for `j = 0`, `ψ^j = ∂_{ξ_j} U` for `1 ≤ j ≤ N`.
    pub fn psi(&self, j: usize, x: &[T]) -> Result<T> {
        if j > self.n {
            return Err(Error::Input(format!("psi index {j} exceeds N={}", self.n)));
        }
        let u = self.value(x)?;
        let a = alpha::<T>(self.n);
        let d2 = self.dist2(x);
        let q = self.delta * self.delta + d2;
        if j == 0 {
            Ok(a * u * (d2 - self.delta * self.delta) / (self.delta * q))
        } else {
            let two = cast::<T>(2.0);
            Ok(two * a * u * (x[j - 1] - self.xi[j - 1]) / q)
        }
    }
}

/// `U_{δ,ξ}(x)`.
pub fn eval_bubble<T: Float>(params: &BubbleParams<T>, x: &[T]) -> Result<T> {
    params.value(x)
}

/// `∇U_{δ,ξ}(x)`.
pub fn eval_gradient<T: Float>(params: &BubbleParams<T>, x: &[T]) -> Result<Vec<T>> {
    params.gradient(x)
}

/// `ΔU_{δ,ξ}(x)`.
pub fn eval_laplacian<T: Float>(params: &BubbleParams<T>, x: &[T]) -> Result<T> {
    params.laplacian(x)
}

/// `ψ^j_{δ,ξ}(x)`.
pub fn eval_psi<T: Float>(params: &BubbleParams<T>, j: usize, x: &[T]) -> Result<T> {
    params.psi(j, x)
}

/// Integrated constants of the standard bubble `U_{1,0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralConstants {
    #[serde(rename = "N")]
    pub n: usize,
    pub c_n: f64,
    pub b_n: f64,
    /// `ω_{N-1}`, area of the unit sphere in `R^N`.
    pub omega: f64,
    /// `A = ∫ U^p`.
    pub a: f64,
    /// `B = ∫ U²`, finite only for `N ≥ 5`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    /// For `N = 4`: coefficient of `ln R` in `∫_{B_R} U²`, i.e. `C_4² ω_3`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_log_coefficient: Option<f64>,
    /// `∫ p U^{p-1} (ψ^0)²`.
    pub sigma00: f64,
    /// `∫ p U^{p-1} (ψ^j)²` for `j = 1..N`, each integrated separately.
    pub sigma_jj: Vec<f64>,
    /// `(max - min)/mean` over `sigma_jj`; zero up to quadrature error.
    pub sigma_jj_spread: f64,
}

const CONSTANT_REL_TOL: f64 = 1e-10;

/// Integrate a radial density `f(r) r^{N-1} ω` over `[0, ∞)` via `r = tan θ`.
fn radial_integral<F: Fn(f64) -> f64>(n: usize, f: F) -> Result<f64> {
    let omega = sphere_area::<f64>(n - 1);
    let g = |t: f64| {
        if t >= std::f64::consts::FRAC_PI_2 {
            return 0.0;
        }
        let r = t.tan();
        let c = t.cos();
        let v = f(r) * r.powi(n as i32 - 1) / (c * c);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let (v, _) = adaptive_gk(g, 0.0, std::f64::consts::FRAC_PI_2, CONSTANT_REL_TOL)?;
    Ok(omega * v)
}

/// Compute the structural constants for dimension `N` by quadrature of the
/// bubble evaluators.
pub fn compute_constants(n: usize) -> Result<StructuralConstants> {
    check_dim(n)?;
    if n < 4 {
        return Err(Error::Input("structural constants are defined for N >= 4".into()));
    }
    let unit = BubbleParams::new(n, 1.0, vec![0.0; n])?;
    let p = critical_p::<f64>(n);
    let point = |r: f64, k: usize, sign: f64| {
        let mut x = vec![0.0; n];
        x[k] = sign * r;
        x
    };
    let u_at = |r: f64| unit.value(&point(r, 0, 1.0)).unwrap_or(f64::NAN);

    let a = radial_integral(n, |r| u_at(r).powf(p))?;
    let (b, b_log_coefficient) = if n >= 5 {
        (Some(radial_integral(n, |r| u_at(r).powi(2))?), None)
    } else {
        let c = c_n::<f64>(n);
        (None, Some(c * c * sphere_area::<f64>(n - 1)))
    };

    let weight = |r: f64| p * u_at(r).powf(p - 1.0);
    let sigma00 = radial_integral(n, |r| {
        let s = unit.psi(0, &point(r, 0, 1.0)).unwrap_or(f64::NAN);
        weight(r) * s * s
    })?;

    // The 2N points ±r e_k form a spherical 3-design, exact for the
    // quadratic angular dependence of (ψ^j)².
    let mut sigma_jj = Vec::with_capacity(n);
    for j in 1..=n {
        let s = radial_integral(n, |r| {
            let mut avg = 0.0;
            for k in 0..n {
                for sign in [1.0, -1.0] {
                    let v = unit.psi(j, &point(r, k, sign)).unwrap_or(f64::NAN);
                    avg += v * v;
                }
            }
            weight(r) * avg / (2 * n) as f64
        })?;
        sigma_jj.push(s);
    }
    let mean = sigma_jj.iter().sum::<f64>() / n as f64;
    let max = sigma_jj.iter().cloned().fold(f64::MIN, f64::max);
    let min = sigma_jj.iter().cloned().fold(f64::MAX, f64::min);

    Ok(StructuralConstants {
        n,
        c_n: c_n::<f64>(n),
        b_n: b_n::<f64>(n),
        omega: sphere_area::<f64>(n - 1),
        a,
        b,
        b_log_coefficient,
        sigma00,
        sigma_jj,
        sigma_jj_spread: (max - min) / mean,
    })
}
