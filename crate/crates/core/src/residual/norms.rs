//! Dual norms of the error field, term by term, and their orders in `λ`.
//!
//! Norms on `Ω_λ` are computed on `Ω`: if `f(x) = λ^k g(λx)` then
//! `‖f‖_{L^q(Ω_λ)} = λ^{k - N/q} ‖g‖_{L^q(Ω)}`. Integrals use the
//! deterministic axisymmetric rule, which needs both centres on one line
//! through the ball centre.

use serde::{Deserialize, Serialize};

use crate::bubbles::{alpha, critical_p};
use crate::error::{Error, Result};
use crate::expansion::lemmas::{INCONCLUSIVE_FRACTION, SLOPE_TOL, SLOPE_TOL_LOG};
use crate::expansion::projected::ProjectionMode;
use crate::quadrature::axisym::{AxisPoint, AxisymBall, QuadValue};
use crate::quadrature::fit::{fit_exponent, FitReport, LogCorrection};
use crate::quadrature::mc::NormSpec;
use crate::reduced::balance::{beta_threshold, ReducedConstants};
use crate::reduced::critical::ExactBall;
use crate::reduced::system::{check_component, reduced_residual, SystemConfig};
use crate::residual::pair::{pow_defect, FieldPair};

/// A named term with its value per unit coefficient (`ε` or `|β|`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermValue {
    pub name: String,
    pub value: f64,
    pub error: f64,
    /// Value with the `ε` or `|β|` prefactor removed.
    pub unit_value: f64,
    pub predicted_order: f64,
    pub log_correction: LogCorrection,
}

/// Norms in one exponent `q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormBlock {
    pub q: f64,
    /// Norm of the full error field.
    pub total: f64,
    pub total_error: f64,
    /// Norms of the three addends as they enter the field.
    pub defect: f64,
    pub mass: f64,
    pub coupling: f64,
    /// The bounding terms, `U` in place of `P_λU` and without `μ` weights.
    pub terms: Vec<TermValue>,
}

impl NormBlock {
    pub fn term(&self, name: &str) -> Option<&TermValue> {
        self.terms.iter().find(|t| t.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    #[serde(rename = "N")]
    pub n: usize,
    pub component: usize,
    pub lambda: f64,
    pub eps: f64,
    pub beta: f64,
    /// `q = 2N/(N+2)`: terms G1 to G3.
    pub dual: NormBlock,
    /// `q = N/3` for `N ≥ 7`: terms G4 to G6.
    pub aux: Option<NormBlock>,
}

impl ErrorReport {
    pub fn term(&self, name: &str) -> Option<&TermValue> {
        self.dual.term(name).or_else(|| self.aux.as_ref().and_then(|a| a.term(name)))
    }
}

/// Predicted order in `λ` of a term per unit coefficient.
pub fn predicted_order(name: &str, n: usize) -> Result<(f64, LogCorrection)> {
    let nf = n as f64;
    let log = if n == 6 { LogCorrection::Ln } else { LogCorrection::None };
    let big = (nf + 2.0) / 2.0;
    let r = match (name, n) {
        ("G1", 4) | ("G3", 4) => (2.0, log),
        ("G1", 5) | ("G3", 5) => (3.0, log),
        ("G1", 6) | ("G3", 6) => (4.0, log),
        ("G1", _) | ("G3", _) => (big, log),
        ("G2", 4) => (1.0, log),
        ("G2", 5) => (1.5, log),
        ("G2", _) => (2.0, log),
        ("G4", n) if n >= 7 => (nf - 2.0, log),
        ("G5", n) if n >= 7 => (2.0, log),
        ("G6", n) if n >= 7 => (big, log),
        _ => return Err(Error::Input(format!("no term {name} for N={n}"))),
    };
    Ok(r)
}

fn quadrature(fp: &FieldPair) -> Result<AxisymBall> {
    let off = fp
        .axis_offsets()
        .ok_or_else(|| Error::UnsupportedDomain("centres must be collinear with the ball centre".into()))?;
    let c = &fp.config;
    AxisymBall::new(
        c.n,
        fp.ball().radius,
        vec![
            AxisPoint { offset: off[0], scale: c.lambda * c.delta1 },
            AxisPoint { offset: off[1], scale: c.lambda * c.delta2 },
        ],
    )
}

fn scaled(q: QuadValue, k: f64) -> (f64, f64) {
    (q.value * k, q.error * k)
}

fn block(fp: &FieldPair, quad: &AxisymBall, component: usize, q: f64, names: [&str; 3]) -> Result<NormBlock> {
    let c = &fp.config;
    let n = c.n;
    let nf = n as f64;
    let (al, p) = (alpha::<f64>(n), critical_p::<f64>(n));
    let l = c.lambda;
    let (i, o) = (component, 3 - component);
    let nq = nf / q;
    let ev = |f: &dyn Fn(usize, f64, f64) -> Result<f64>, k: usize, u: f64, v: f64| f(k, u, v).unwrap_or(f64::NAN);
    let uu = |k: usize, u: f64, v: f64| fp.u_uv(k, u, v);
    let pu = |k: usize, u: f64, v: f64| fp.pu_uv(k, u, v);
    let hh = |k: usize, u: f64, v: f64| fp.h_uv(k, u, v);
    let defect = |u: f64, v: f64| pow_defect(ev(&uu, i, u, v), ev(&hh, i, u, v), p);

    let cross_pow = (6.0 - nf) / 2.0;
    let f_defect = l.powf(al * p - nq);
    let f_mass = l * l * l.powf(al - nq);
    let f_cross = l.powf(cross_pow) * l.powf(2.0 * al - nq);
    let (ki, ko) = (fp.weight(i), fp.weight(o));

    let g1 = scaled(quad.lp_norm(defect, q), f_defect);
    let g2 = scaled(quad.lp_norm(|u, v| ev(&uu, i, u, v), q), f_mass);
    let g3 = scaled(quad.lp_norm(|u, v| ev(&uu, i, u, v) * ev(&uu, o, u, v), q), f_cross);
    let mass = c.eps * ki * f_mass * quad.lp_norm(|u, v| ev(&pu, i, u, v), q).value;
    let coupling = c.beta.abs() * ki * ko * f_cross * quad.lp_norm(|u, v| ev(&pu, i, u, v) * ev(&pu, o, u, v), q).value;
    let total = quad.lp_norm(
        |u, v| {
            let a = ki * l.powf(al * p) * defect(u, v);
            let b = c.eps * l.powf(2.0 + al) * ki * ev(&pu, i, u, v);
            let d = c.beta * l.powf(cross_pow + 2.0 * al) * ki * ko * ev(&pu, i, u, v) * ev(&pu, o, u, v);
            a + b + d
        },
        q,
    );
    let (total, total_error) = scaled(total, l.powf(-nq));
    let mk = |name: &str, (v, e): (f64, f64), coef: f64| -> Result<TermValue> {
        let (order, log) = predicted_order(name, n)?;
        Ok(TermValue { name: name.into(), value: coef * v, error: coef * e, unit_value: v, predicted_order: order, log_correction: log })
    };
    Ok(NormBlock {
        q,
        total,
        total_error,
        defect: ki * g1.0,
        mass,
        coupling,
        terms: vec![mk(names[0], g1, 1.0)?, mk(names[1], g2, c.eps)?, mk(names[2], g3, c.beta.abs())?],
    })
}

/// Norms of the error field of `component` for one configuration.
pub fn error_norms(config: &SystemConfig, mode: ProjectionMode, component: usize) -> Result<ErrorReport> {
    check_component(component)?;
    let fp = FieldPair::new(config, mode)?;
    let quad = quadrature(&fp)?;
    let n = config.n;
    let dual = block(&fp, &quad, component, NormSpec::dual(n), ["G1", "G2", "G3"])?;
    let aux = if n >= 7 {
        Some(block(&fp, &quad, component, NormSpec::aux_dual(n), ["G4", "G5", "G6"])?)
    } else {
        None
    };
    Ok(ErrorReport { n, component, lambda: config.lambda, eps: config.eps, beta: config.beta, dual, aux })
}

/// Fitted slope of one term against its predicted order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermFit {
    pub name: String,
    pub component: usize,
    pub predicted_order: f64,
    pub fit: FitReport,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorScan {
    #[serde(rename = "N")]
    pub n: usize,
    pub grid: Vec<f64>,
    pub reports: Vec<ErrorReport>,
    pub fits: Vec<TermFit>,
    pub pass: bool,
}

/// How the coupling follows `λ` along a scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaRule {
    /// Keep the configured `β`.
    Fixed,
    /// `β = fraction · margin · beta_threshold(N, λ)`.
    Threshold(f64),
}

/// Evaluate both components on a `λ` grid and fit every term.
pub fn error_scan(config: &SystemConfig, mode: ProjectionMode, grid: &[f64], rule: BetaRule) -> Result<ErrorScan> {
    if grid.len() < 3 {
        return Err(Error::Input("a scan needs at least three lambda values".into()));
    }
    let mut reports = Vec::new();
    for &l in grid {
        let mut c = config.clone();
        c.lambda = l;
        if let BetaRule::Threshold(f) = rule {
            c.beta = f * c.margin * beta_threshold(c.n, l)?;
        }
        for comp in 1..=2 {
            reports.push(error_norms(&c, mode, comp)?);
        }
    }
    let names: Vec<String> = reports[0]
        .dual
        .terms
        .iter()
        .chain(reports[0].aux.iter().flat_map(|a| a.terms.iter()))
        .map(|t| t.name.clone())
        .collect();
    let mut fits = Vec::new();
    for comp in 1..=2 {
        for name in &names {
            let rows: Vec<&TermValue> =
                reports.iter().filter(|r| r.component == comp).map(|r| r.term(name).expect("same terms")).collect();
            let vmin = rows.iter().map(|t| t.unit_value.abs()).fold(f64::INFINITY, f64::min);
            let emax = rows.iter().map(|t| t.error / t.value.abs().max(1e-300) * t.unit_value.abs()).fold(0.0, f64::max);
            if !(vmin > 0.0) || emax > INCONCLUSIVE_FRACTION * vmin {
                return Err(Error::Inconclusive(format!(
                    "{name} (component {comp}): quadrature error {emax:.2e} against smallest value {vmin:.2e}"
                )));
            }
            let pts: Vec<(f64, f64)> = grid.iter().zip(&rows).map(|(l, t)| (*l, t.unit_value)).collect();
            let fit = fit_exponent(&pts, rows[0].log_correction)?;
            let tol = if rows[0].log_correction == LogCorrection::Ln { SLOPE_TOL_LOG } else { SLOPE_TOL };
            let pass = (fit.slope - rows[0].predicted_order).abs() <= tol;
            fits.push(TermFit { name: name.clone(), component: comp, predicted_order: rows[0].predicted_order, fit, pass });
        }
    }
    let pass = fits.iter().all(|f| f.pass);
    Ok(ErrorScan { n: config.n, grid: grid.to_vec(), reports, fits, pass })
}

/// Size of the coupling contributions against the leading ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingReport {
    #[serde(rename = "N")]
    pub n: usize,
    pub lambda: f64,
    pub beta: f64,
    pub threshold: f64,
    /// Error-norm coupling term and the larger of the other two.
    pub g3: f64,
    pub g_dominant: f64,
    pub g_ratio: f64,
    /// Coupling part of the `j = 0` reduced equation and its leading term.
    pub e3: f64,
    pub e_dominant: f64,
    pub e_ratio: f64,
}

/// Compare the coupling terms of component 1 with the dominant terms.
///
/// `E3 = β λ μ_1^{-(N-2)/4} μ_2^{-(N-2)/4} ∫_Ω PU_{s_1} PU_{s_2} P∂_sU_{s_1}`
/// is set against the larger leading `j = 0` term.
pub fn coupling_dominance(config: &SystemConfig, mode: ProjectionMode, k: &ReducedConstants) -> Result<CouplingReport> {
    let report = error_norms(config, mode, 1)?;
    let fp = FieldPair::new(config, mode)?;
    let quad = quadrature(&fp)?;
    let g = |name: &str| report.term(name).map(|t| t.value).unwrap_or(0.0);
    let g_dominant = g("G1").max(g("G2"));
    let g3 = g("G3");
    let ev = |r: Result<f64>| r.unwrap_or(f64::NAN);
    let integral = quad.integrate(|u, v| ev(fp.pu_uv(1, u, v)) * ev(fp.pu_uv(2, u, v)) * ev(fp.p_ds_uv(1, u, v)));
    let e3 = config.beta * config.lambda * fp.weight(1) * fp.weight(2) * integral.value;
    let src = ExactBall::new(&config.domain)?;
    let lead = reduced_residual(config, 1, 0, &src, k)?;
    let e_dominant = lead.terms.iter().map(|t| t.value.abs()).fold(0.0, f64::max);
    Ok(CouplingReport {
        n: config.n,
        lambda: config.lambda,
        beta: config.beta,
        threshold: beta_threshold(config.n, config.lambda)?,
        g3,
        g_dominant,
        g_ratio: g3 / g_dominant,
        e3,
        e_dominant,
        e_ratio: e3.abs() / e_dominant,
    })
}
