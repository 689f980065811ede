//! Closed forms for the ball `B(c, R)`.
//!
//! With `G(x,y) = B_N |x-y|^{2-N} - H(x,y)`,
//! `H(x,y) = B_N (R² - 2x·y + |x|²|y|²/R²)^{-(N-2)/2}` in coordinates centred
//! at `c`, and the Robin function is
//! `Φ(x) = H(x,x) = B_N R^{N-2} (R² - |x|²)^{2-N}`.

use num_traits::{Float, FloatConst};
use serde::{Deserialize, Serialize};

use crate::bubbles::b_n;
use crate::error::{check_dim, Error, Result};

fn cast<T: Float>(x: f64) -> T {
    T::from(x).expect("f64 is representable")
}

/// A ball `B(center, radius)` in `R^N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball<T = f64> {
    pub center: Vec<T>,
    pub radius: T,
}

impl<T: Float + FloatConst> Ball<T> {
    pub fn new(center: Vec<T>, radius: T) -> Result<Self> {
        check_dim(center.len())?;
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(Error::Input("ball radius must be positive".into()));
        }
        Ok(Ball { center, radius })
    }

    pub fn centered(n: usize, radius: T) -> Result<Self> {
        Self::new(vec![T::zero(); n], radius)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    fn local(&self, x: &[T], what: &str) -> Result<Vec<T>> {
        self.local_in(x, what, false)
    }

    /// Centre-relative coordinates; `closed` admits boundary points.
    fn local_in(&self, x: &[T], what: &str, closed: bool) -> Result<Vec<T>> {
        if x.len() != self.dim() {
            return Err(Error::Input(format!("{what} has {} coordinates, expected {}", x.len(), self.dim())));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input(format!("{what} has non-finite coordinates")));
        }
        let z: Vec<T> = x.iter().zip(&self.center).map(|(&a, &c)| a - c).collect();
        let r2 = dot(&z, &z);
        let r2max = self.radius * self.radius;
        if r2 > r2max || (!closed && r2 == r2max) {
            return Err(Error::Singularity(format!("{what} is not in the open ball")));
        }
        Ok(z)
    }

    fn alpha(&self) -> T {
        cast::<T>((self.dim() as f64 - 2.0) / 2.0)
    }

    fn q(&self, x: &[T], y: &[T]) -> T {
        let r2 = self.radius * self.radius;
        r2 - cast::<T>(2.0) * dot(x, y) + dot(x, x) * dot(y, y) / r2
    }

    /// Regular part `H(x, y)`; `x` may lie on the boundary.
    pub fn regular_part(&self, x: &[T], y: &[T]) -> Result<T> {
        let x = self.local_in(x, "x", true)?;
        let y = self.local(y, "y")?;
        Ok(b_n::<T>(self.dim()) * self.q(&x, &y).powf(-self.alpha()))
    }

    /// `∇_x H(x, y)`.
    pub fn regular_part_grad_x(&self, x: &[T], y: &[T]) -> Result<Vec<T>> {
        let x = self.local(x, "x")?;
        let y = self.local(y, "y")?;
        let a = self.alpha();
        let q = self.q(&x, &y);
        let r2 = self.radius * self.radius;
        let yy = dot(&y, &y);
        let f = -a * b_n::<T>(self.dim()) * q.powf(-a - T::one());
        let two = cast::<T>(2.0);
        Ok(x.iter().zip(&y).map(|(&xi, &yi)| f * (two * xi * yy / r2 - two * yi)).collect())
    }

    /// Robin function `Φ(x) = H(x, x)`.
    pub fn robin(&self, x: &[T]) -> Result<T> {
        let x = self.local(x, "x")?;
        let n = self.dim();
        let r2 = self.radius * self.radius;
        let d = r2 - dot(&x, &x);
        Ok(b_n::<T>(n) * self.radius.powi(n as i32 - 2) * d.powi(2 - n as i32))
    }

    /// `∇Φ(x) = 2(N-2) B_N R^{N-2} (R²-|x|²)^{1-N} x`.
    pub fn robin_grad(&self, x: &[T]) -> Result<Vec<T>> {
        let x = self.local(x, "x")?;
        let n = self.dim();
        let r2 = self.radius * self.radius;
        let d = r2 - dot(&x, &x);
        let f = cast::<T>(2.0 * (n as f64 - 2.0))
            * b_n::<T>(n)
            * self.radius.powi(n as i32 - 2)
            * d.powi(1 - n as i32);
        Ok(x.iter().map(|&v| f * v).collect())
    }

    /// Hessian of `Φ`.
    pub fn robin_hessian(&self, x: &[T]) -> Result<Vec<Vec<T>>> {
        let x = self.local(x, "x")?;
        let n = self.dim();
        let r2 = self.radius * self.radius;
        let d = r2 - dot(&x, &x);
        let k = cast::<T>(2.0 * (n as f64 - 2.0)) * b_n::<T>(n) * self.radius.powi(n as i32 - 2);
        let lead = k * d.powi(1 - n as i32);
        let cross = k * cast::<T>(2.0 * (n as f64 - 1.0)) * d.powi(-(n as i32));
        Ok((0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let diag = if i == j { lead } else { T::zero() };
                        diag + cross * x[i] * x[j]
                    })
                    .collect()
            })
            .collect())
    }
}

fn dot<T: Float>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

/// `H(x, y)` for the ball of radius `R` centred at the origin.
pub fn h_ball<T: Float + FloatConst>(x: &[T], y: &[T], radius: T) -> Result<T> {
    Ball::centered(x.len(), radius)?.regular_part(x, y)
}

/// `Φ(x)` for the ball of radius `R` centred at the origin.
pub fn robin_ball<T: Float + FloatConst>(x: &[T], radius: T) -> Result<T> {
    Ball::centered(x.len(), radius)?.robin(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn laplacian_x(b: &Ball<f64>, x: &[f64], y: &[f64], h: f64) -> f64 {
        let f0 = b.regular_part(x, y).unwrap();
        let mut s = 0.0;
        for k in 0..x.len() {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[k] += h;
            xm[k] -= h;
            s += b.regular_part(&xp, y).unwrap() + b.regular_part(&xm, y).unwrap() - 2.0 * f0;
        }
        s / (h * h)
    }

    #[test]
    fn value_at_centre_is_b_n() {
        let v = h_ball(&[0.0; 4], &[0.0; 4], 1.0).unwrap();
        assert!((v - 1.0 / (4.0 * std::f64::consts::PI.powi(2))).abs() < 1e-15);
        assert!((v - 0.025_330_295_910_584_444).abs() < 1e-12);
    }

    #[test]
    fn robin_off_centre_n4() {
        let x = [0.5, 0.0, 0.0, 0.0];
        let v = robin_ball(&x, 1.0).unwrap();
        // B_4 / (1 - 1/4)^2
        let exact = 1.0 / (4.0 * std::f64::consts::PI.powi(2)) / 0.5625;
        assert!((v - exact).abs() < 1e-15);
        assert!((v - 0.045_031_637).abs() < 1e-8);
        assert!((h_ball(&x, &x, 1.0).unwrap() - v).abs() < 1e-15);
    }

    #[test]
    fn boundary_values_match_singular_part() {
        // On the boundary H(x, y) = B_N |x - y|^{2-N}.
        let b = Ball::centered(5, 2.0).unwrap();
        let y = [0.3, -0.4, 0.1, 0.0, 0.2];
        let mut z = [0.0; 5];
        z[2] = 2.0 * (1.0 - 1e-12);
        let dz: f64 = z.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let singular = b_n::<f64>(5) * dz.powi(-3);
        let h = b.regular_part(&z, &y).unwrap();
        assert!((h / singular - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let b = Ball::new(vec![0.1, 0.0, 0.0, -0.2], 1.5).unwrap();
        let x = [0.4, 0.2, -0.3, 0.1];
        let y = [-0.2, 0.5, 0.0, 0.3];
        let g = b.regular_part_grad_x(&x, &y).unwrap();
        let gr = b.robin_grad(&x).unwrap();
        let hess = b.robin_hessian(&x).unwrap();
        let h = 1e-6;
        for k in 0..4 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let fd = (b.regular_part(&xp, &y).unwrap() - b.regular_part(&xm, &y).unwrap()) / (2.0 * h);
            assert!((g[k] - fd).abs() < 1e-7);
            let fd = (b.robin(&xp).unwrap() - b.robin(&xm).unwrap()) / (2.0 * h);
            assert!((gr[k] - fd).abs() < 1e-7);
            let gp = b.robin_grad(&xp).unwrap();
            let gm = b.robin_grad(&xm).unwrap();
            for i in 0..4 {
                assert!((hess[i][k] - (gp[i] - gm[i]) / (2.0 * h)).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn rejects_points_outside() {
        assert!(matches!(robin_ball(&[1.0, 0.0, 0.0, 0.0], 1.0), Err(Error::Singularity(_))));
        assert!(h_ball(&[0.0; 4], &[0.0; 3], 1.0).is_err());
        assert!(Ball::centered(4, -1.0).is_err());
    }

    proptest! {
        #[test]
        fn regular_part_is_symmetric_and_harmonic(
            n in 3usize..8,
            a in -0.6f64..0.6, b in -0.6f64..0.6, c in -0.6f64..0.6,
        ) {
            let ball = Ball::centered(n, 1.0).unwrap();
            let mut x = vec![0.0; n];
            let mut y = vec![0.0; n];
            x[0] = a; x[1] = b;
            y[0] = c; y[n - 1] = 0.5 * a;
            let hxy = ball.regular_part(&x, &y).unwrap();
            let hyx = ball.regular_part(&y, &x).unwrap();
            prop_assert!((hxy - hyx).abs() < 1e-13 * hxy);
            let lap = laplacian_x(&ball, &x, &y, 1e-3);
            prop_assert!(lap.abs() < 1e-4 * hxy);
        }

        #[test]
        fn robin_is_radially_increasing(n in 3usize..8, r in 0.0f64..0.9) {
            let ball = Ball::centered(n, 1.0).unwrap();
            let mut x = vec![0.0; n];
            x[0] = r;
            let mut x2 = x.clone();
            x2[0] = r + 0.05;
            prop_assert!(ball.robin(&x2).unwrap() > ball.robin(&x).unwrap());
        }
    }
}
