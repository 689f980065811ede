//! Configurations of the two-bubble ansatz and the leading terms of the
//! reduced equations.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, check_point, Error, Result};
use crate::greens::domain::{dist, Domain};
use crate::reduced::balance::{
    beta_admissible, beta_threshold, lambda_and_delta, Balance, ReducedConstants, DEFAULT_MARGIN,
};
use crate::reduced::critical::{find_critical_points, CriticalPoint, DescentOptions, RobinSource, Signature};

fn default_margin() -> f64 {
    DEFAULT_MARGIN
}

/// Parameters of the two-component approximant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    #[serde(rename = "N")]
    pub n: usize,
    pub mu1: f64,
    pub mu2: f64,
    pub eps: f64,
    pub beta: f64,
    pub lambda: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub xi1: Vec<f64>,
    pub xi2: Vec<f64>,
    pub eta: f64,
    pub domain: Domain,
    #[serde(default = "default_margin")]
    pub margin: f64,
}

impl SystemConfig {
    /// Check membership in the admissible set and the coupling threshold.
    pub fn validate(&self) -> Result<()> {
        check_dim(self.n)?;
        if self.n < 4 {
            return Err(Error::Input("the system is posed for N >= 4".into()));
        }
        let dn = self.domain.dim()?;
        if dn != self.n {
            return Err(Error::Input(format!("domain has dimension {dn}, expected {}", self.n)));
        }
        check_point(self.n, &self.xi1, "xi1")?;
        check_point(self.n, &self.xi2, "xi2")?;
        for (name, v) in [("mu1", self.mu1), ("mu2", self.mu2), ("eps", self.eps), ("margin", self.margin)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Input(format!("{name} must be positive")));
            }
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::Input("lambda must lie in (0, 1)".into()));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::Input("eta must lie in (0, 1)".into()));
        }
        if !self.beta.is_finite() {
            return Err(Error::Input("beta must be finite".into()));
        }
        let eta = self.eta;
        if dist(&self.xi1, &self.xi2) < 2.0 * eta {
            return Err(Error::Constraint(format!("|xi1 - xi2| < 2 eta = {}", 2.0 * eta)));
        }
        for (name, xi) in [("xi1", &self.xi1), ("xi2", &self.xi2)] {
            if !self.domain.contains(xi) || self.domain.boundary_distance(xi) < 2.0 * eta {
                return Err(Error::Constraint(format!("{name} is closer than 2 eta to the boundary")));
            }
        }
        for (name, d) in [("delta1", self.delta1), ("delta2", self.delta2)] {
            if !(d > eta && d < 1.0 / eta) {
                return Err(Error::Constraint(format!("{name} = {d} is outside ({eta}, {})", 1.0 / eta)));
            }
        }
        if !beta_admissible(self.n, self.lambda, self.beta, self.margin)? {
            return Err(Error::Constraint(format!(
                "|beta| = {} exceeds {} x threshold {:.4e}",
                self.beta.abs(),
                self.margin,
                beta_threshold(self.n, self.lambda)?
            )));
        }
        Ok(())
    }

    pub fn mu(&self, component: usize) -> f64 {
        if component == 1 { self.mu1 } else { self.mu2 }
    }

    pub fn delta(&self, component: usize) -> f64 {
        if component == 1 { self.delta1 } else { self.delta2 }
    }

    pub fn xi(&self, component: usize) -> &[f64] {
        if component == 1 { &self.xi1 } else { &self.xi2 }
    }

    /// Relabel the components.
    pub fn swapped(&self) -> Self {
        let mut c = self.clone();
        std::mem::swap(&mut c.mu1, &mut c.mu2);
        std::mem::swap(&mut c.delta1, &mut c.delta2);
        std::mem::swap(&mut c.xi1, &mut c.xi2);
        c
    }
}

pub(crate) fn check_component(component: usize) -> Result<()> {
    if component == 1 || component == 2 {
        Ok(())
    } else {
        Err(Error::Input(format!("component must be 1 or 2, got {component}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub name: String,
    pub value: f64,
}

/// Leading value of one reduced equation and its named addends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedResidual {
    pub component: usize,
    pub j: usize,
    pub leading: f64,
    pub terms: Vec<Term>,
    /// N = 4, j = 0: the leading value if the Robin coefficient carries a
    /// `δ_i` factor.
    pub leading_with_delta: Option<f64>,
}

/// Leading expression of the `(component, j)` reduced equation.
///
/// `j = 0`: `a_i Φ(ξ_i) λ^{N-2} - b_i ε λ²` for `N ≥ 5` and
/// `A_i Φ(ξ_i) λ² - B_i ε λ² |ln λ|` for `N = 4`.
/// `j ≥ 1`: `t_i λ^{N-1} ∂_j Φ(ξ_i)` for `N ≥ 5` and `-l_i λ² ∂_j Φ(ξ_i)`
/// for `N = 4`.
pub fn reduced_residual<S: RobinSource + ?Sized>(
    config: &SystemConfig,
    component: usize,
    j: usize,
    robin: &S,
    k: &ReducedConstants,
) -> Result<ReducedResidual> {
    config.validate()?;
    check_component(component)?;
    let n = config.n;
    if j > n {
        return Err(Error::Input(format!("j must lie in 0..={n}")));
    }
    if k.n != n {
        return Err(Error::Input("constants belong to a different dimension".into()));
    }
    let nf = n as f64;
    let (mu, delta, xi) = (config.mu(component), config.delta(component), config.xi(component));
    let lambda = config.lambda;
    let a2 = k.a * k.a;
    let mut terms = Vec::new();
    let mut with_delta = None;
    if j == 0 {
        let phi = robin.robin(xi)?.value;
        if n == 4 {
            let b_hat = k.b_hat.ok_or_else(|| Error::Input("N = 4 needs the fitted B̂".into()))?;
            let m = mu.powf(-0.5);
            let l2 = lambda * lambda;
            let mass = -m * delta * b_hat * config.eps * l2 * (-lambda.ln());
            terms.push(Term { name: "robin".into(), value: m * a2 * phi * l2 });
            terms.push(Term { name: "mass".into(), value: mass });
            with_delta = Some(m * a2 * delta * phi * l2 + mass);
        } else {
            let b = k.b.ok_or_else(|| Error::Numeric("B missing".into()))?;
            let m = mu.powf(-(nf - 2.0) / 4.0);
            let a = 0.5 * (nf - 2.0) * m * a2 * delta.powf(nf - 3.0);
            terms.push(Term { name: "robin".into(), value: a * phi * lambda.powf(nf - 2.0) });
            terms.push(Term { name: "mass".into(), value: -m * delta * b * config.eps * lambda * lambda });
        }
    } else {
        let g = robin.robin_grad(xi)?[j - 1].value;
        if n == 4 {
            // l_i = μ_i^{-1} C̃²/2 with C̃ = A δ_i
            let l = 0.5 * a2 * delta * delta / mu;
            terms.push(Term { name: "robin_gradient".into(), value: -l * lambda * lambda * g });
        } else {
            let t = mu.powf(-(nf - 2.0) / 4.0) * a2 * delta.powf(nf - 2.0);
            terms.push(Term { name: "robin_gradient".into(), value: t * lambda.powf(nf - 1.0) * g });
        }
    }
    let leading = terms.iter().map(|t| t.value).sum();
    Ok(ReducedResidual { component, j, leading, terms, leading_with_delta: with_delta })
}

/// Stability data of one concentration point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointStability {
    pub x: Vec<f64>,
    pub robin: f64,
    pub signature: Signature,
    pub eigenvalues: Vec<f64>,
    pub nondegenerate: bool,
}

impl From<&CriticalPoint> for PointStability {
    fn from(c: &CriticalPoint) -> Self {
        PointStability {
            x: c.x.clone(),
            robin: c.robin,
            signature: c.signature,
            eigenvalues: c.eigenvalues.clone(),
            nondegenerate: c.nondegenerate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedSolution {
    pub config: SystemConfig,
    pub stability: [PointStability; 2],
    pub balance_residuals: [f64; 2],
    /// Exponential rates with `λ = e^{-d/ε}` (N = 4).
    pub d: Option<[f64; 2]>,
    pub balance: Balance,
    pub tolerance: f64,
}

/// Inputs of [`reduced_solve`] besides the domain and Robin source.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub eps: f64,
    pub beta: f64,
    pub mu: [f64; 2],
    pub eta: f64,
    pub multistart: usize,
    pub seed: u64,
    /// Use these points instead of searching.
    pub xi: Option<[Vec<f64>; 2]>,
    pub margin: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            eps: 1e-3,
            beta: 0.0,
            mu: [1.0, 1.0],
            eta: 0.1,
            multistart: 8,
            seed: 0,
            xi: None,
            margin: DEFAULT_MARGIN,
        }
    }
}

/// Tolerance declared for the balance residuals.
pub const BALANCE_TOLERANCE: f64 = 1e-10;

/// Pick two separated concentration points, balance `λ` and `δ_i`, and
/// check the result lies in the admissible set.
pub fn reduced_solve<S: RobinSource + ?Sized>(
    src: &S,
    n: usize,
    k: &ReducedConstants,
    opts: &SolveOptions,
) -> Result<ReducedSolution> {
    let domain = src.domain().clone();
    if domain.dim()? != n {
        return Err(Error::Input("domain dimension does not match N".into()));
    }
    let points: Vec<CriticalPoint> = match &opts.xi {
        Some([a, b]) => {
            let mut v = Vec::new();
            for x in [a, b] {
                check_point(n, x, "xi")?;
                let (h, noise) = src.robin_hessian(x)?;
                let (ev, sig, nd) = crate::reduced::critical::classify(&h, noise);
                let g = src.robin_grad(x)?;
                v.push(CriticalPoint {
                    x: x.clone(),
                    robin: src.robin(x)?.value,
                    grad: g.iter().map(|e| e.value).collect(),
                    grad_stderr: g.iter().map(|e| e.stderr).collect(),
                    hessian: h,
                    eigenvalues: ev,
                    signature: sig,
                    nondegenerate: nd,
                    converged: true,
                    iterations: 0,
                });
            }
            v
        }
        None => {
            let mut found = find_critical_points(src, opts.multistart, opts.seed, &DescentOptions::default())?;
            found.retain(|c| c.converged && domain.boundary_distance(&c.x) >= 2.0 * opts.eta);
            found.sort_by(|a, b| a.robin.total_cmp(&b.robin));
            let first = found
                .first()
                .cloned()
                .ok_or_else(|| Error::Constraint("no converged critical point".into()))?;
            let second = found
                .iter()
                .find(|c| dist(&c.x, &first.x) >= 2.0 * opts.eta)
                .cloned()
                .ok_or_else(|| Error::Constraint("fewer than two separated critical points".into()))?;
            vec![first, second]
        }
    };
    let phi = [points[0].robin, points[1].robin];
    let balance = lambda_and_delta(n, opts.eps, phi, k, opts.eta)?;
    let config = SystemConfig {
        n,
        mu1: opts.mu[0],
        mu2: opts.mu[1],
        eps: opts.eps,
        beta: opts.beta,
        lambda: balance.lambda,
        delta1: balance.delta[0],
        delta2: balance.delta[1],
        xi1: points[0].x.clone(),
        xi2: points[1].x.clone(),
        eta: opts.eta,
        domain,
        margin: opts.margin,
    };
    config.validate()?;
    Ok(ReducedSolution {
        stability: [(&points[0]).into(), (&points[1]).into()],
        balance_residuals: balance.residuals,
        d: balance.d,
        config,
        balance,
        tolerance: BALANCE_TOLERANCE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduced::critical::ExactBall;

    fn ball_config(n: usize, lambda: f64) -> SystemConfig {
        let mut xi1 = vec![0.0; n];
        let mut xi2 = vec![0.0; n];
        xi1[0] = 0.3;
        xi2[0] = -0.4;
        SystemConfig {
            n,
            mu1: 1.0,
            mu2: 2.0,
            eps: 1e-3,
            beta: 0.0,
            lambda,
            delta1: 1.0,
            delta2: 0.8,
            xi1,
            xi2,
            eta: 0.02,
            domain: Domain::unit_ball(n),
            margin: DEFAULT_MARGIN,
        }
    }

    #[test]
    fn centre_gradient_term_vanishes() {
        for n in 5..=7 {
            let mut c = ball_config(n, 0.01);
            c.xi1 = vec![0.0; n];
            let src = ExactBall::new(&c.domain).unwrap();
            let k = ReducedConstants::new(n).unwrap();
            let r = reduced_residual(&c, 1, 1, &src, &k).unwrap();
            assert!(r.leading.abs() < 1e-14);
        }
    }

    #[test]
    fn balanced_config_has_zero_residual() {
        let n = 5;
        let k = ReducedConstants::new(n).unwrap();
        let mut c = ball_config(n, 0.01);
        let src = ExactBall::new(&c.domain).unwrap();
        let phi = [src.robin(&c.xi1).unwrap().value, src.robin(&c.xi2).unwrap().value];
        let b = lambda_and_delta(n, c.eps, phi, &k, c.eta).unwrap();
        c.lambda = b.lambda;
        c.delta1 = b.delta[0];
        c.delta2 = b.delta[1];
        for comp in 1..=2 {
            let r = reduced_residual(&c, comp, 0, &src, &k).unwrap();
            let scale = r.terms[0].value.abs();
            assert!(r.leading.abs() <= 1e-12 * scale, "{r:?}");
        }
    }

    #[test]
    fn halving_lambda_scales_terms_monomially() {
        let n = 5;
        let k = ReducedConstants::new(n).unwrap();
        let c = ball_config(n, 0.02);
        let mut h = c.clone();
        h.lambda = 0.01;
        let src = ExactBall::new(&c.domain).unwrap();
        let r = reduced_residual(&c, 1, 0, &src, &k).unwrap();
        let s = reduced_residual(&h, 1, 0, &src, &k).unwrap();
        assert!((s.terms[0].value / r.terms[0].value - 0.125).abs() < 1e-14);
        assert!((s.terms[1].value / r.terms[1].value - 0.25).abs() < 1e-14);
    }

    #[test]
    fn j0_residual_brackets_the_balance() {
        for n in 5..=7 {
            let k = ReducedConstants::new(n).unwrap();
            let mut c = ball_config(n, 0.01);
            let src = ExactBall::new(&c.domain).unwrap();
            let phi = [src.robin(&c.xi1).unwrap().value, src.robin(&c.xi2).unwrap().value];
            c.eps = 1e-4;
            let b = lambda_and_delta(n, c.eps, phi, &k, 0.05).unwrap();
            c.delta1 = b.delta[0];
            c.delta2 = b.delta[1];
            c.eta = 0.05;
            c.lambda = 0.7 * b.lambda;
            let lo = reduced_residual(&c, 1, 0, &src, &k).unwrap().leading;
            c.lambda = 1.4 * b.lambda;
            let hi = reduced_residual(&c, 1, 0, &src, &k).unwrap().leading;
            assert!(lo < 0.0 && hi > 0.0, "N={n}: {lo} {hi}");
        }
    }

    #[test]
    fn inadmissible_beta_refused() {
        let n = 5;
        let k = ReducedConstants::new(n).unwrap();
        let mut c = ball_config(n, 0.01);
        let src = ExactBall::new(&c.domain).unwrap();
        c.beta = 0.5 * DEFAULT_MARGIN * 0.01;
        assert!(reduced_residual(&c, 1, 0, &src, &k).is_ok());
        c.beta = -c.beta;
        assert!(reduced_residual(&c, 1, 0, &src, &k).is_ok());
        c.beta = 2.0 * DEFAULT_MARGIN * 0.01;
        let e = reduced_residual(&c, 1, 0, &src, &k).unwrap_err();
        assert!(matches!(e, Error::Constraint(m) if m.contains("threshold")));
    }

    #[test]
    fn separation_enforced() {
        let mut c = ball_config(5, 0.01);
        c.xi2 = c.xi1.clone();
        c.xi2[0] += 0.03;
        assert!(matches!(c.validate(), Err(Error::Constraint(_))));
        let mut c = ball_config(5, 0.01);
        c.xi1[0] = 0.97;
        assert!(matches!(c.validate(), Err(Error::Constraint(_))));
    }

    #[test]
    fn swap_is_an_involution() {
        let c = ball_config(6, 0.01);
        assert_eq!(c.swapped().swapped(), c);
        assert_eq!(c.swapped().xi(1), c.xi(2));
    }

    #[test]
    fn solve_at_given_points() {
        let n = 5;
        let d = Domain::unit_ball(n);
        let src = ExactBall::new(&d).unwrap();
        let k = ReducedConstants::new(n).unwrap();
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        a[0] = 0.3;
        b[1] = -0.3;
        let opts = SolveOptions { xi: Some([a, b]), eps: 1e-3, eta: 0.02, ..SolveOptions::default() };
        let s = reduced_solve(&src, n, &k, &opts).unwrap();
        assert!(s.balance_residuals.iter().all(|r| r.abs() < BALANCE_TOLERANCE));
        assert!((s.config.lambda - 1e-3).abs() < 1e-15);
        // a single centre point cannot host two separated bubbles
        let single = SolveOptions { multistart: 3, eta: 0.02, ..SolveOptions::default() };
        assert!(matches!(reduced_solve(&src, n, &k, &single), Err(Error::Constraint(_))));
    }
}
