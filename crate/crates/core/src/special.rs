//! Gamma and Beta at half-integer arguments, sphere measures.

use num_traits::{Float, FloatConst};

fn cast<T: Float>(x: f64) -> T {
    T::from(x).expect("f64 is representable")
}

/// `Γ(k/2)` for a positive integer `k`, by the recursion from `Γ(1) = 1`
/// and `Γ(1/2) = √π`.
pub fn gamma_half<T: Float + FloatConst>(k: usize) -> T {
    assert!(k > 0, "gamma_half: k must be positive");
    let (mut g, mut x) = if k.is_multiple_of(2) {
        (T::one(), T::one())
    } else {
        (T::PI().sqrt(), cast::<T>(0.5))
    };
    let target = cast::<T>(k as f64 / 2.0);
    while x < target {
        g = g * x;
        x = x + T::one();
    }
    g
}

/// `B(a/2, b/2)` for positive integers `a`, `b`.
pub fn beta_half<T: Float + FloatConst>(a: usize, b: usize) -> T {
    gamma_half::<T>(a) * gamma_half::<T>(b) / gamma_half::<T>(a + b)
}

/// Surface measure of the unit sphere `S^{m}` in `R^{m+1}`: `2π^{(m+1)/2}/Γ((m+1)/2)`.
pub fn sphere_area<T: Float + FloatConst>(m: usize) -> T {
    let d = m + 1;
    cast::<T>(2.0) * T::PI().powf(cast::<T>(d as f64 / 2.0)) / gamma_half::<T>(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gamma_values() {
        assert!((gamma_half::<f64>(1) - PI.sqrt()).abs() < 1e-15);
        assert_eq!(gamma_half::<f64>(2), 1.0);
        assert_eq!(gamma_half::<f64>(8), 6.0);
        assert!((gamma_half::<f64>(5) - 0.75 * PI.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area::<f64>(1) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area::<f64>(2) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area::<f64>(3) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((sphere_area::<f32>(3) - 2.0 * std::f32::consts::PI.powi(2)).abs() < 1e-4);
    }

    #[test]
    fn beta_symmetry_and_value() {
        // B(1, 1) = 1, B(1/2, 1/2) = π
        assert!((beta_half::<f64>(2, 2) - 1.0).abs() < 1e-15);
        assert!((beta_half::<f64>(1, 1) - PI).abs() < 1e-14);
        assert_eq!(beta_half::<f64>(3, 7), beta_half::<f64>(7, 3));
    }
}
