//! Local Pohozaev identities for `N = 4`.
//!
//! With `w_i = μ_i^{-1/2} PU_{λδ_i,ξ_i}` on `Ω`, pairing the equation of
//! component `i` with `∂_j w_i` on `B(ξ_i, ρ)` gives the surface form
//! `∫_{∂B} -∂_ν w ∂_j w + ½|∇w|² ν_j - (μ/4) w⁴ ν_j - (ε/2) w² ν_j`
//! plus the volume coupling `-β ∫_B w_1 w_2 ∂_j w_i`.

use serde::{Deserialize, Serialize};

use crate::bubbles::{alpha, critical_p};
use crate::error::{Error, Result};
use crate::expansion::projected::{bubble_mass, ProjectionMode};
use crate::greens::domain::dist;
use crate::quadrature::axisym::{AxisPoint, AxisymBall};
use crate::quadrature::rules::GaussLegendre;
use crate::reduced::balance::ReducedConstants;
use crate::reduced::critical::{ExactBall, RobinSource};
use crate::reduced::system::{check_component, reduced_residual, SystemConfig};
use crate::residual::pair::{pow_defect, FieldPair};

/// Angular nodes of the `S³` rule: Gauss–Legendre in the two polar
/// angles, trapezoid in the azimuth.
pub const SPHERE_NODES: (usize, usize, usize) = (48, 24, 48);

/// Default radius as a multiple of `η`.
pub const RHO_FACTOR: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PohozaevReport {
    pub component: usize,
    pub j: usize,
    pub rho: f64,
    pub lambda: f64,
    /// Left side: surface terms plus the coupling volume term.
    pub surface_value: f64,
    pub gradient_part: f64,
    pub eps_part: f64,
    pub beta_part: f64,
    /// `-l_i λ² ∂_j Φ(ξ_i)` with `l_i = μ_i^{-1} (A δ_i)²/2`.
    pub rhs: f64,
    pub ratio: f64,
}

/// Points and weights of a product rule on the unit sphere `S³`.
fn sphere_rule() -> Vec<([f64; 4], f64)> {
    let (nc, nt, np) = SPHERE_NODES;
    let gc = GaussLegendre::new(nc);
    let gt = GaussLegendre::new(nt);
    let pi = std::f64::consts::PI;
    let mut out = Vec::with_capacity(nc * nt * np);
    for (chi, wc) in gc.mapped(0.0, pi) {
        let (sc, cc) = chi.sin_cos();
        for (th, wt) in gt.mapped(0.0, pi) {
            let (st, ct) = th.sin_cos();
            for k in 0..np {
                let ph = 2.0 * pi * k as f64 / np as f64;
                let (sp, cp) = ph.sin_cos();
                let w = wc * wt * (2.0 * pi / np as f64) * sc * sc * st;
                out.push(([cc, sc * ct, sc * st * cp, sc * st * sp], w));
            }
        }
    }
    out
}

fn check_n4(config: &SystemConfig) -> Result<()> {
    if config.n != 4 {
        return Err(Error::Input("the Pohozaev closure is for N = 4".into()));
    }
    Ok(())
}

/// Evaluate the `j`-th local Pohozaev identity of `component` on
/// `B(ξ_i, ρ)`; `rho` defaults to `1.5 η`.
pub fn pohozaev_check(
    config: &SystemConfig,
    mode: ProjectionMode,
    component: usize,
    j: usize,
    rho: Option<f64>,
) -> Result<PohozaevReport> {
    check_n4(config)?;
    check_component(component)?;
    if !(1..=4).contains(&j) {
        return Err(Error::Input("j must lie in 1..=4".into()));
    }
    let fp = FieldPair::new(config, mode)?;
    let eta = config.eta;
    let rho = rho.unwrap_or(RHO_FACTOR * eta);
    if !(rho > eta && rho < 2.0 * eta) {
        return Err(Error::Input(format!("rho = {rho} must lie in ({eta}, {})", 2.0 * eta)));
    }
    let xi = config.xi(component).to_vec();
    if config.domain.boundary_distance(&xi) <= rho {
        return Err(Error::Input("B(xi, rho) is not inside the domain".into()));
    }
    let mu = config.mu(component);
    let jj = j - 1;
    let mut grad_part = 0.0;
    let mut eps_part = 0.0;
    let r3 = rho.powi(3);
    for (nu, w) in sphere_rule() {
        let x: Vec<f64> = (0..4).map(|k| xi[k] + rho * nu[k]).collect();
        let wv = fp.w(component, &x)?;
        let g = fp.grad_w(component, &x)?;
        let dn: f64 = g.iter().zip(&nu).map(|(a, b)| a * b).sum();
        let g2: f64 = g.iter().map(|a| a * a).sum();
        let f = -dn * g[jj] + 0.5 * g2 * nu[jj] - 0.25 * mu * wv.powi(4) * nu[jj];
        grad_part += w * r3 * f;
        eps_part += w * r3 * (-0.5 * config.eps * wv * wv * nu[jj]);
    }
    let beta_part = if config.beta == 0.0 {
        0.0
    } else {
        coupling_volume(&fp, component, j, rho)?
    };
    let surface_value = grad_part + eps_part + beta_part;
    let src = ExactBall::new(&config.domain)?;
    let dphi = src.robin_grad(&xi)?[jj].value;
    let c_tilde = bubble_mass(4) * config.delta(component);
    let rhs = -0.5 * c_tilde * c_tilde / mu * config.lambda * config.lambda * dphi;
    Ok(PohozaevReport {
        component,
        j,
        rho,
        lambda: config.lambda,
        surface_value,
        gradient_part: grad_part,
        eps_part,
        beta_part,
        rhs,
        ratio: surface_value / rhs,
    })
}

/// `-β ∫_{B(ξ_i,ρ)} w_1 w_2 ∂_j w_i`, by symmetry about the common axis.
fn coupling_volume(fp: &FieldPair, component: usize, j: usize, rho: f64) -> Result<f64> {
    let c = &fp.config;
    let off = fp
        .axis_offsets()
        .ok_or_else(|| Error::UnsupportedDomain("the coupling term needs collinear centres".into()))?;
    let xi = c.xi(component).to_vec();
    let center = &fp.ball().center;
    // axis through the ball centre and both bubble centres
    let other = c.xi(3 - component);
    let d = if dist(&xi, center) > 0.0 { dist(&xi, center) } else { dist(other, center) };
    let mut e: Vec<f64> = if dist(&xi, center) > 0.0 {
        xi.iter().zip(center).map(|(a, b)| (a - b) / d).collect()
    } else if d > 0.0 {
        other.iter().zip(center).map(|(a, b)| (a - b) / d).collect()
    } else {
        vec![1.0, 0.0, 0.0, 0.0]
    };
    if off[component - 1] < 0.0 {
        e.iter_mut().for_each(|v| *v = -*v);
    }
    // any unit vector orthogonal to e
    let k = (0..4).min_by(|a, b| e[*a].abs().total_cmp(&e[*b].abs())).unwrap_or(0);
    let mut perp = [0.0; 4];
    perp[k] = 1.0;
    let dot = e[k];
    perp.iter_mut().zip(&e).for_each(|(p, q)| *p -= dot * q);
    let np = perp.iter().map(|v| v * v).sum::<f64>().sqrt();
    perp.iter_mut().for_each(|v| *v /= np);

    let quad = AxisymBall::new(4, rho, vec![AxisPoint { offset: 0.0, scale: c.lambda * c.delta(component) }])?;
    let val = quad.integrate(|u, v| {
        let x: Vec<f64> = (0..4).map(|m| xi[m] + u * e[m] + v * perp[m]).collect();
        let (Ok(w1), Ok(w2), Ok(g)) = (fp.w(1, &x), fp.w(2, &x), fp.grad_w(component, &x)) else {
            return f64::NAN;
        };
        let ge: f64 = g.iter().zip(&e).map(|(a, b)| a * b).sum();
        w1 * w2 * ge
    });
    Ok(-c.beta * e[j - 1] * val.value)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PohozaevJ0 {
    pub component: usize,
    pub lambda: f64,
    pub eps: f64,
    /// `∫ (-Δu - ελ²u - μu^p - βλ^{(6-N)/2}uv) P_λψ^0` over `Ω_λ`.
    pub value: f64,
    pub error: f64,
    pub defect_part: f64,
    pub mass_part: f64,
    pub coupling_part: f64,
    /// `A_i Φ λ² - B_i ε λ² |ln λ|` with the fitted `B̂`.
    pub leading: f64,
    /// Same with a `δ_i` factor on the Robin coefficient.
    pub leading_with_delta: f64,
}

/// The `j = 0` pairing for `N = 4`, by deterministic quadrature on the ball.
pub fn pohozaev_j0(
    config: &SystemConfig,
    mode: ProjectionMode,
    component: usize,
    k: &ReducedConstants,
) -> Result<PohozaevJ0> {
    check_n4(config)?;
    check_component(component)?;
    let fp = FieldPair::new(config, mode)?;
    let n = 4;
    let nf = n as f64;
    let (al, p) = (alpha::<f64>(n), critical_p::<f64>(n));
    let l = config.lambda;
    let pb = fp.bubble(component);
    let own = AxisymBall::new(n, fp.ball().radius, vec![AxisPoint { offset: pb.axis_offset(), scale: pb.bubble().delta }])?;
    let ki = fp.weight(component);
    // The bubble profile is evaluated from the patch radius: at λ far below
    // machine epsilon the axial coordinate cannot resolve it.
    let t1 = own.integrate_polar(|q| {
        let u = pb.u_r(q.r);
        -pow_defect(u, pb.h_uv(q.u, q.v), p) * (pb.ds_u_r(q.r) - pb.h_ds_uv(q.u, q.v))
    });
    let t2 = own.integrate_polar(|q| {
        (pb.u_r(q.r) - pb.h_uv(q.u, q.v)) * (pb.ds_u_r(q.r) - pb.h_ds_uv(q.u, q.v))
    });
    let f1 = ki * l.powf(al * p + al + 1.0 - nf);
    let f2 = config.eps * l * l * ki * l.powf(2.0 * al + 1.0 - nf);
    let (t3, e3) = if config.beta == 0.0 {
        (0.0, 0.0)
    } else {
        let off = fp
            .axis_offsets()
            .ok_or_else(|| Error::UnsupportedDomain("the coupling term needs collinear centres".into()))?;
        let c = config;
        let quad = AxisymBall::new(
            n,
            fp.ball().radius,
            vec![
                AxisPoint { offset: off[0], scale: l * c.delta1 },
                AxisPoint { offset: off[1], scale: l * c.delta2 },
            ],
        )?;
        let o = 3 - component;
        let ev = |r: Result<f64>| r.unwrap_or(f64::NAN);
        let q = quad.integrate(|u, v| {
            ev(fp.pu_uv(component, u, v)) * ev(fp.pu_uv(o, u, v)) * ev(fp.p_ds_uv(component, u, v))
        });
        let f3 = c.beta * l.powf((6.0 - nf) / 2.0) * ki * fp.weight(o) * l.powf(3.0 * al + 1.0 - nf);
        (f3 * q.value, (f3 * q.error).abs())
    };
    let defect_part = f1 * t1.value;
    let mass_part = f2 * t2.value;
    let value = defect_part - mass_part - t3;
    let error = (f1 * t1.error).abs() + (f2 * t2.error).abs() + e3;
    let src = ExactBall::new(&config.domain)?;
    let lead = reduced_residual(config, component, 0, &src, k)?;
    Ok(PohozaevJ0 {
        component,
        lambda: l,
        eps: config.eps,
        value,
        error,
        defect_part,
        mass_part,
        coupling_part: t3,
        leading: lead.leading,
        leading_with_delta: lead.leading_with_delta.unwrap_or(lead.leading),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::residual::pair::tests::config;

    #[test]
    fn sphere_rule_integrates_polynomials() {
        let rule = sphere_rule();
        let area: f64 = rule.iter().map(|r| r.1).sum();
        let pi = std::f64::consts::PI;
        assert!((area - 2.0 * pi * pi).abs() < 1e-10, "{area}");
        // ∫ x_1² = area / 4
        let m: f64 = rule.iter().map(|(x, w)| w * x[1] * x[1]).sum();
        assert!((m - 0.5 * pi * pi).abs() < 1e-10);
    }

    #[test]
    fn centred_bubble_has_no_gradient_law() {
        let mut c = config(4, 1e-3);
        c.xi1 = vec![0.0; 4];
        c.xi2 = vec![-0.5, 0.0, 0.0, 0.0];
        for j in 1..=4 {
            let r = pohozaev_check(&c, ProjectionMode::Convolution, 1, j, None).unwrap();
            assert!(r.rhs.abs() < 1e-20);
            assert!(r.surface_value.abs() < 1e-10 * c.lambda * c.lambda, "{r:?}");
        }
    }

    #[test]
    fn off_centre_ratio_near_one() {
        let c = config(4, 1e-3);
        let r = pohozaev_check(&c, ProjectionMode::Convolution, 1, 1, None).unwrap();
        assert!((0.7..=1.3).contains(&r.ratio), "{r:?}");
        let s = pohozaev_check(&c, ProjectionMode::Convolution, 1, 1, Some(1.2 * c.eta)).unwrap();
        assert!((s.surface_value / r.surface_value - 1.0).abs() < 0.1);
        // transverse directions vanish by symmetry
        let t = pohozaev_check(&c, ProjectionMode::Convolution, 1, 2, None).unwrap();
        assert!(t.surface_value.abs() < 1e-6 * r.surface_value.abs());
    }

    #[test]
    fn rho_outside_range_rejected() {
        let c = config(4, 1e-3);
        assert!(matches!(pohozaev_check(&c, ProjectionMode::Convolution, 1, 1, Some(0.5 * c.eta)), Err(Error::Input(_))));
        let c5 = config(5, 1e-3);
        assert!(pohozaev_check(&c5, ProjectionMode::Convolution, 1, 1, None).is_err());
    }

    fn j0(lambda: f64, eps: f64, beta: f64) -> PohozaevJ0 {
        let mut c = config(4, lambda);
        c.eps = eps;
        c.beta = beta;
        let k = ReducedConstants::new(4).unwrap();
        pohozaev_j0(&c, ProjectionMode::Convolution, 1, &k).unwrap()
    }

    #[test]
    fn j0_defect_is_robin_term() {
        let k = ReducedConstants::new(4).unwrap();
        let c = config(4, 1e-4);
        let phi = ExactBall::new(&c.domain).unwrap().robin(&c.xi1).unwrap().value;
        let a1 = k.a * k.a / c.mu1.sqrt();
        let r = j0(1e-4, 0.05, 0.0);
        assert!((r.defect_part / (1e-8 * a1 * phi) - 1.0).abs() < 0.01, "{r:?}");
    }

    #[test]
    fn j0_remainder_is_eps_lambda_squared() {
        // value - leading = O(ε λ²) with a λ-independent constant
        let q = |l: f64| {
            let r = j0(l, 0.05, 0.0);
            (r.value - r.leading) / (0.05 * l * l)
        };
        let (a, b) = (q(1e-3), q(1e-6));
        assert!((a / b - 1.0).abs() < 0.05, "{a} {b}");
    }

    #[test]
    fn j0_brackets_in_eps() {
        assert!(j0(1e-6, 0.05, 0.0).value > 0.0);
        assert!(j0(1e-6, 0.5, 0.0).value < 0.0);
    }

    #[test]
    fn j0_coupling_is_linear_in_beta() {
        let a = j0(1e-3, 0.05, 0.0);
        let b = j0(1e-3, 0.05, 2e-4);
        let c = j0(1e-3, 0.05, 4e-4);
        assert!(b.coupling_part != 0.0);
        assert!((c.coupling_part / b.coupling_part - 2.0).abs() < 1e-9);
        assert!((a.value - b.value - b.coupling_part).abs() < 1e-12 * a.value.abs());
    }
}
