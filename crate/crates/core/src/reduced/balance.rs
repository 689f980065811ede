//! Smallness of the coupling and the balance laws fixing `λ(ε)` and `δ_i`.

use serde::{Deserialize, Serialize};

use crate::bubbles::compute_constants;
use crate::error::{check_dim, Error, Result};
use crate::expansion::lemmas::{measure, LemmaId, LemmaParams};
use crate::expansion::projected::bubble_mass;

/// Default margin standing in for every `o(·)` smallness condition.
pub const DEFAULT_MARGIN: f64 = 0.1;

/// Scale below which `|β|` must stay: `λ|ln λ|`, `λ`, `λ/|ln λ|`, `λ^{N-5}`.
pub fn beta_threshold(n: usize, lambda: f64) -> Result<f64> {
    check_dim(n)?;
    if n < 4 {
        return Err(Error::Input("the coupling threshold is defined for N >= 4".into()));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Input("lambda must lie in (0, 1)".into()));
    }
    let l = -lambda.ln();
    Ok(match n {
        4 => lambda * l,
        5 => lambda,
        6 => lambda / l,
        _ => lambda.powi(n as i32 - 5),
    })
}

/// `|β| ≤ margin · beta_threshold(N, λ)`.
pub fn beta_admissible(n: usize, lambda: f64, beta: f64, margin: f64) -> Result<bool> {
    Ok(beta.abs() <= margin * beta_threshold(n, lambda)?)
}

/// Leading constants of the reduced equations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedConstants {
    #[serde(rename = "N")]
    pub n: usize,
    /// `A = ∫ U^p`.
    pub a: f64,
    /// `B = ∫ U²` (N ≥ 5).
    pub b: Option<f64>,
    /// Fitted coefficient of `|ln λ|` in `∫ P_λU P_λψ^0 / δ` (N = 4).
    pub b_hat: Option<f64>,
}

impl ReducedConstants {
    pub fn new(n: usize) -> Result<Self> {
        check_dim(n)?;
        if n < 4 {
            return Err(Error::Input("the reduced system is defined for N >= 4".into()));
        }
        let a = bubble_mass(n);
        if n == 4 {
            Ok(ReducedConstants { n, a, b: None, b_hat: Some(fit_log_coefficient()?.0) })
        } else {
            Ok(ReducedConstants { n, a, b: compute_constants(n)?.b, b_hat: None })
        }
    }
}

/// Fit `∫_{Ω_λ} P_λU P_λψ^0 / δ ≈ B̂ |ln λ| + c` for `N = 4` on the unit
/// ball over `λ ∈ [1e-6, 1e-2]`. Returns `(B̂, c)`.
pub fn fit_log_coefficient() -> Result<(f64, f64)> {
    let params = LemmaParams { xi_offset: Some(0.0), ..LemmaParams::default() };
    let lambdas: Vec<f64> = (0..9).map(|k| 1e-2 * 10f64.powf(-0.5 * k as f64)).collect();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &l in &lambdas {
        let v = measure(LemmaId::PlMain0, 4, l, &params)?;
        xs.push(-l.ln());
        ys.push(v.value / params.delta);
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Outcome of one convention for the second component at `N = 4`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConventionOutcome {
    pub delta2: f64,
    /// Relative residual of component 2's balance.
    pub residual2: f64,
}

/// The two readings of the `N = 4` leading coefficient: without a `δ`
/// factor (`A_i = μ_i^{-1/2} A²`) and with one (`a_i = μ_i^{-1/2} A² δ_i`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct N4Conventions {
    pub without_delta: ConventionOutcome,
    pub with_delta: ConventionOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Balance {
    pub lambda: f64,
    pub delta: [f64; 2],
    /// Exponential rates with `λ = e^{-d/ε}` (N = 4).
    pub d: Option<[f64; 2]>,
    /// Relative residuals of both balance equations.
    pub residuals: [f64; 2],
    /// N = 6: the polynomial law ignores the `|ln λ|` factor of the error.
    pub log_corrected: bool,
    pub conventions: Option<N4Conventions>,
}

/// Leading `j = 0` coefficients `(a_i, b_i)` without the common `μ` factor:
/// `a_i Φ λ^{N-2} - b_i ε λ²` for `N ≥ 5`.
pub fn leading_coefficients(n: usize, delta: f64, k: &ReducedConstants) -> Result<(f64, f64)> {
    let nf = n as f64;
    let b = k.b.ok_or_else(|| Error::Input("B is only finite for N >= 5".into()))?;
    Ok(((nf - 2.0) / 2.0 * k.a * k.a * delta.powf(nf - 3.0), delta * b))
}

/// Relative residual of the `j = 0` balance for one component.
pub fn balance_residual(n: usize, eps: f64, lambda: f64, delta: f64, phi: f64, k: &ReducedConstants) -> Result<f64> {
    if n == 4 {
        let b_hat = k.b_hat.ok_or_else(|| Error::Input("N = 4 needs the fitted B̂".into()))?;
        let lhs = k.a * k.a * phi;
        let rhs = delta * b_hat * eps * (-lambda.ln());
        return Ok((lhs - rhs) / rhs);
    }
    let (a, b) = leading_coefficients(n, delta, k)?;
    let lhs = a * phi * lambda.powi(n as i32 - 2);
    let rhs = b * eps * lambda * lambda;
    Ok((lhs - rhs) / rhs)
}

/// Solve the balance laws for `λ` and `δ_1, δ_2`.
///
/// `N ≥ 5`: `λ = ε^{1/(N-4)}` and `δ_i^{N-4} = 2B/((N-2)A²Φ(ξ_i))`.
/// `N = 4`: `δ_1 = 1`, `λ = e^{-d/ε}` with `d = A²Φ(ξ_1)/B̂`, and `δ_2`
/// from component 2's balance at that `λ`.
pub fn lambda_and_delta(n: usize, eps: f64, phi: [f64; 2], k: &ReducedConstants, eta: f64) -> Result<Balance> {
    check_dim(n)?;
    if n != k.n {
        return Err(Error::Input("constants belong to a different dimension".into()));
    }
    if !(eps > 0.0 && eps <= 0.1) {
        return Err(Error::Input("eps must lie in (0, 0.1]".into()));
    }
    if phi.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
        return Err(Error::Input("Robin values must be positive".into()));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Input("eta must lie in (0, 1)".into()));
    }
    let check_delta = |d: f64| -> Result<()> {
        if d > eta && d < 1.0 / eta {
            Ok(())
        } else {
            Err(Error::Constraint(format!("delta = {d:.4} is outside ({eta}, {})", 1.0 / eta)))
        }
    };
    let nf = n as f64;
    let a2 = k.a * k.a;
    if n == 4 {
        let b_hat = k.b_hat.ok_or_else(|| Error::Input("N = 4 needs the fitted B̂".into()))?;
        let d1 = a2 * phi[0] / b_hat;
        let lambda = (-d1 / eps).exp();
        let delta2 = phi[1] / phi[0];
        check_delta(delta2)?;
        let r1 = balance_residual(4, eps, lambda, 1.0, phi[0], k)?;
        let r2 = balance_residual(4, eps, lambda, delta2, phi[1], k)?;
        // With a δ factor in the leading coefficient δ_2 cancels out.
        let with = (a2 * phi[1] - b_hat * eps * (-lambda.ln())) / (b_hat * eps * (-lambda.ln()));
        return Ok(Balance {
            lambda,
            delta: [1.0, delta2],
            d: Some([d1, a2 * phi[1] / (delta2 * b_hat)]),
            residuals: [r1, r2],
            log_corrected: false,
            conventions: Some(N4Conventions {
                without_delta: ConventionOutcome { delta2, residual2: r2 },
                with_delta: ConventionOutcome { delta2: 1.0, residual2: with },
            }),
        });
    }
    let b = k.b.ok_or_else(|| Error::Numeric("B missing".into()))?;
    let lambda = eps.powf(1.0 / (nf - 4.0));
    let mut delta = [0.0; 2];
    for i in 0..2 {
        delta[i] = (2.0 * b / ((nf - 2.0) * a2 * phi[i])).powf(1.0 / (nf - 4.0));
        check_delta(delta[i])?;
    }
    let residuals = [
        balance_residual(n, eps, lambda, delta[0], phi[0], k)?,
        balance_residual(n, eps, lambda, delta[1], phi[1], k)?,
    ];
    Ok(Balance { lambda, delta, d: None, residuals, log_corrected: n == 6, conventions: None })
}
