//! Elementary power inequalities used to bound the nonlinear terms, with
//! their constants estimated on random samples.

use rand::Rng;

use crate::error::{Error, Result};
use crate::estimate::sample_rng;

/// `|(a+b)^p - T_p(a, b)| / b^p`, with `T_p` the Taylor part kept for `p`:
/// none for `p ≤ 1`, first order for `1 < p ≤ 2`, second order for `p > 2`.
///
/// The ratio is bounded for `p ≤ 3` only; above that the cubic Taylor term
/// dominates `b^p` as `b → 0`.
pub fn power_remainder_ratio(a: f64, b: f64, p: f64) -> f64 {
    // Homogeneous of degree zero: work with t = b/a.
    let t = b / a;
    let kept = if p > 2.0 { 3 } else if p > 1.0 { 2 } else { 1 };
    let rem = if t < 0.1 {
        // binomial series from the first dropped term
        let mut coef = 1.0;
        for k in 0..kept {
            coef *= (p - k as f64) / (k as f64 + 1.0);
        }
        let mut sum = 0.0;
        let mut term = coef * t.powi(kept);
        for k in kept..kept + 40 {
            sum += term;
            term *= (p - k as f64) / (k as f64 + 1.0) * t;
        }
        sum
    } else {
        let mut r = (1.0 + t).powf(p) - 1.0;
        if p > 1.0 {
            r -= p * t;
        }
        if p > 2.0 {
            r -= 0.5 * p * (p - 1.0) * t * t;
        }
        r
    };
    rem.abs() / t.powf(p)
}

/// `|(1+x)^{2*-1} - 1 - (2*-1) x| / x²`, with `|1+x|` for `x < -1`.
pub fn quadratic_remainder_ratio(x: f64, n: usize) -> f64 {
    let p = (n as f64 + 2.0) / (n as f64 - 2.0);
    if x == 0.0 {
        return 0.5 * p * (p - 1.0);
    }
    ((1.0 + x).abs().powf(p) - 1.0 - p * x).abs() / (x * x)
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (lo.ln() + (hi.ln() - lo.ln()) * rng.gen::<f64>()).exp()
}

/// Largest sampled ratio over `a, b` log-uniform in `[1e-6, 1e6]`.
pub fn power_remainder_constant(p: f64, samples: usize, seed: u64) -> Result<f64> {
    if !(p > 0.0 && p <= 3.0) {
        return Err(Error::Input("the power remainder is bounded for 0 < p <= 3".into()));
    }
    let mut rng = sample_rng(seed, 0);
    let mut c = 0.0f64;
    for _ in 0..samples {
        let a = log_uniform(&mut rng, 1e-6, 1e6);
        let b = log_uniform(&mut rng, 1e-6, 1e6);
        c = c.max(power_remainder_ratio(a, b, p));
    }
    Ok(c)
}

/// Largest sampled ratio over `|x|` log-uniform in `[1e-6, 1e6]` with random
/// sign; requires `N > 6` so that `2* - 1 < 2`.
pub fn quadratic_remainder_constant(n: usize, samples: usize, seed: u64) -> Result<f64> {
    if n <= 6 {
        return Err(Error::Input("the quadratic remainder is bounded for N > 6 only".into()));
    }
    let mut rng = sample_rng(seed, 0);
    let mut c = 0.0f64;
    for _ in 0..samples {
        let x = log_uniform(&mut rng, 1e-6, 1e6) * if rng.gen::<bool>() { 1.0 } else { -1.0 };
        c = c.max(quadratic_remainder_ratio(x, n));
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn power_constants_finite_on_1e5_samples() {
        for p in [0.5, 1.0, 4.0 / 3.0, 5.0 / 3.0, 2.0, 7.0 / 3.0, 3.0] {
            let c = power_remainder_constant(p, 100_000, 1).unwrap();
            assert!(c.is_finite() && c < 10.0, "p={p} C={c}");
        }
        assert!(power_remainder_constant(4.0, 10, 1).is_err());
    }

    #[test]
    fn subadditive_branch_has_unit_constant() {
        // (a+b)^p ≤ a^p + b^p for p ≤ 1
        let c = power_remainder_constant(0.7, 100_000, 2).unwrap();
        assert!(c <= 1.0 + 1e-12);
    }

    #[test]
    fn quadratic_constants_finite_on_1e5_samples() {
        for n in 7..=10 {
            let c = quadratic_remainder_constant(n, 100_000, 3).unwrap();
            let p = (n as f64 + 2.0) / (n as f64 - 2.0);
            assert!(c.is_finite() && c >= 0.5 * p * (p - 1.0) - 1e-6 && c < 2.0, "N={n} C={c}");
        }
        assert!(quadratic_remainder_constant(6, 10, 0).is_err());
    }

    #[test]
    fn quadratic_ratio_unbounded_at_n6_scale() {
        // p = 2 would be borderline; N = 5 (p = 7/3) grows like x^{1/3}.
        assert!(quadratic_remainder_ratio(1e12, 5) > 1e3);
    }

    proptest! {
        #[test]
        fn power_remainder_bounded(a in 1e-4f64..1e4, b in 1e-4f64..1e4, p in 1.05f64..3.0) {
            prop_assert!(power_remainder_ratio(a, b, p) < 10.0);
        }

        #[test]
        fn quadratic_remainder_bounded(x in -1e4f64..1e4, n in 7usize..12) {
            prop_assert!(quadratic_remainder_ratio(x, n) <= 1.0);
        }
    }
}
