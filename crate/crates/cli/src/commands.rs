use std::path::Path;
use std::time::Instant;

use segbubble::expansion::{default_grid, verify_lemma, LemmaId, LemmaParams, ProjectionMode};
use segbubble::greens::{Domain, WalkOnSpheres};
use segbubble::reduced::{
    find_critical_points, reduced_solve, DescentOptions, ExactBall, ReducedConstants, RobinSource, SolveOptions,
    SystemConfig, WosRobin,
};
use segbubble::residual::{error_scan, pohozaev_check, BetaRule};
use serde::Serialize;

use crate::report::{domain_digest, fit_svg, Outputs, RunManifest};
use crate::{Cli, Command, Failure, Mode};

const ROBIN_WALKS: usize = 100_000;
const SEARCH_WALKS: usize = 2_000;

pub fn run(cli: &Cli) -> Result<String, Failure> {
    let start = Instant::now();
    let c = &cli.common;
    let default_n = if matches!(cli.command, Command::Pohozaev { .. }) { 4 } else { 5 };
    let domain = load_domain(c.domain.as_deref(), c.n_dim.unwrap_or(default_n))?;
    let n = domain.dim()?;
    if let Some(k) = c.n_dim {
        if k != n {
            return Err(Failure::Input(format!("--N {k} does not match the domain dimension {n}")));
        }
    }
    let mut out = Outputs::default();
    let summary = match &cli.command {
        Command::Constants => {
            let k = segbubble::compute_constants(n)?;
            out.json("constants.json", &k)?;
            format!("constants N={n}: A={:.10} C_N={:.10}", k.a, k.c_n)
        }
        Command::Robin { x } => {
            let wos = WalkOnSpheres::new(&domain)?;
            let e = wos.robin(x, c.n.unwrap_or(ROBIN_WALKS), c.seed)?;
            #[derive(Serialize)]
            struct RobinOut<'a> {
                x: &'a [f64],
                robin: segbubble::Estimate,
                exact: Option<f64>,
            }
            let exact = domain.as_ball().map(|b| b.robin(x)).transpose()?;
            out.json("robin.json", &RobinOut { x, robin: e, exact })?;
            format!("robin: {:.8} ± {:.2e}", e.value, e.stderr)
        }
        Command::Critpoints { multistart } => {
            let src = robin_source(&domain, c)?;
            let pts = find_critical_points(src.as_ref(), *multistart, c.seed, &DescentOptions::default())?;
            out.json("critpoints.json", &pts)?;
            let nd = pts.iter().filter(|p| p.nondegenerate).count();
            format!("critpoints: {} found, {nd} nondegenerate", pts.len())
        }
        Command::ReducedSolve { multistart, mu, eta, xi1, xi2 } => {
            let [m1, m2] = mu[..] else {
                return Err(Failure::Input("--mu takes two values".into()));
            };
            let src = robin_source(&domain, c)?;
            let k = ReducedConstants::new(n)?;
            let opts = SolveOptions {
                eps: c.eps.unwrap_or(1e-3),
                beta: c.beta.unwrap_or(0.0),
                mu: [m1, m2],
                eta: *eta,
                multistart: *multistart,
                seed: c.seed,
                xi: xi1.clone().zip(xi2.clone()).map(|(a, b)| [a, b]),
                ..SolveOptions::default()
            };
            let sol = reduced_solve(src.as_ref(), n, &k, &opts)?;
            out.json("reduced.json", &sol)?;
            format!(
                "reduced-solve: lambda={:.6e} delta=({:.6}, {:.6})",
                sol.config.lambda, sol.config.delta1, sol.config.delta2
            )
        }
        Command::Verify { lemma, j } => {
            let ids: Vec<LemmaId> = if lemma == "all" { LemmaId::ALL.to_vec() } else { vec![lemma.parse()?] };
            let grid = c.lambda_grid.clone().unwrap_or_else(|| default_grid(n));
            let params = LemmaParams { j: *j, ..LemmaParams::default() };
            let mut reports = Vec::new();
            for id in ids {
                let r = verify_lemma(id, n, &grid, &params)?;
                if c.plot {
                    if let Some(svg) = fit_svg(&format!("{id} N={n}"), &r.measured) {
                        out.raw(&format!("verify-{id}.svg"), svg.into_bytes());
                    }
                }
                reports.push(r);
            }
            out.json("verify.json", &reports)?;
            let pass = reports.iter().filter(|r| r.pass).count();
            format!("verify N={n}: {pass}/{} pass", reports.len())
        }
        Command::ResidualScan { config, mode, beta_fraction } => {
            let cfg = match config {
                Some(p) => load_config(p)?,
                None => default_config(&domain, 0.01, c)?,
            };
            let grid = c.lambda_grid.clone().unwrap_or_else(|| default_grid(cfg.n));
            let rule = beta_fraction.map_or(BetaRule::Fixed, BetaRule::Threshold);
            let scan = error_scan(&cfg, projection(*mode), &grid, rule)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            let csv_err = |e: csv::Error| Failure::Numeric(e.to_string());
            w.write_record(["N", "component", "lambda", "eps", "beta", "term", "norm", "stderr"]).map_err(csv_err)?;
            for r in &scan.reports {
                let blocks = std::iter::once(&r.dual).chain(r.aux.as_ref());
                for (b, tag) in blocks.zip(["", "_aux"]) {
                    let mut rows = vec![(format!("total{tag}"), b.total, b.total_error)];
                    rows.extend(b.terms.iter().map(|t| (t.name.clone(), t.value, t.error)));
                    for (name, v, e) in rows {
                        w.write_record([
                            r.n.to_string(),
                            r.component.to_string(),
                            r.lambda.to_string(),
                            r.eps.to_string(),
                            r.beta.to_string(),
                            name,
                            v.to_string(),
                            e.to_string(),
                        ])
                        .map_err(csv_err)?;
                    }
                }
            }
            let bytes = w.into_inner().map_err(|e| Failure::Numeric(e.to_string()))?;
            out.raw("residual.csv", bytes);
            out.json("residual.json", &scan)?;
            if c.plot {
                for f in &scan.fits {
                    if let Some(svg) = fit_svg(&format!("{} component {}", f.name, f.component), &f.fit) {
                        out.raw(&format!("residual-{}-{}.svg", f.name, f.component), svg.into_bytes());
                    }
                }
            }
            let pass = scan.fits.iter().filter(|f| f.pass).count();
            format!("residual-scan N={}: {pass}/{} term fits pass", scan.n, scan.fits.len())
        }
        Command::Pohozaev { config, mode, lambda, component, j, rho } => {
            let cfg = match config {
                Some(p) => load_config(p)?,
                None => default_config(&domain, *lambda, c)?,
            };
            let r = pohozaev_check(&cfg, projection(*mode), *component, *j, *rho)?;
            out.json("pohozaev.json", &r)?;
            format!("pohozaev: surface={:.6e} rhs={:.6e} ratio={:.4}", r.surface_value, r.rhs, r.ratio)
        }
    };
    let manifest = RunManifest {
        command: cli.command.name(),
        parameters: cli,
        domain_digest: domain_digest(&domain),
        seed: c.seed,
        tool_version: env!("CARGO_PKG_VERSION"),
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    out.json("manifest.json", &manifest)?;
    out.write_all(&c.out)?;
    Ok(summary)
}

fn load_domain(path: Option<&Path>, n: usize) -> Result<Domain, Failure> {
    match path {
        Some(p) => {
            let s = std::fs::read_to_string(p).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?;
            Ok(Domain::from_json(&s)?)
        }
        None if n >= 3 => Ok(Domain::unit_ball(n)),
        None => Err(Failure::Input(format!("dimension N={n} must be at least 3"))),
    }
}

fn load_config(path: &Path) -> Result<SystemConfig, Failure> {
    let s = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let cfg: SystemConfig = serde_json::from_str(&s).map_err(|e| Failure::Input(format!("config JSON: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Two collinear bubbles on a ball: `ξ₁ = 0.3 e₁`, `ξ₂ = -0.4 e₁` in units
/// of the radius.
fn default_config(domain: &Domain, lambda: f64, c: &crate::Common) -> Result<SystemConfig, Failure> {
    let ball = domain
        .as_ball()
        .ok_or_else(|| Failure::Input("the default configuration needs a ball; pass --config".into()))?;
    let n = ball.dim();
    let at = |t: f64| {
        let mut x = ball.center.to_vec();
        x[0] += t * ball.radius;
        x
    };
    let cfg = SystemConfig {
        n,
        mu1: 1.0,
        mu2: 1.0,
        eps: c.eps.unwrap_or(1e-3),
        beta: c.beta.unwrap_or(0.0),
        lambda,
        delta1: 1.0,
        delta2: 1.0,
        xi1: at(0.3),
        xi2: at(-0.4),
        eta: 0.1 * ball.radius,
        domain: domain.clone(),
        margin: segbubble::reduced::DEFAULT_MARGIN,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn robin_source(domain: &Domain, c: &crate::Common) -> Result<Box<dyn RobinSource>, Failure> {
    if domain.as_ball().is_some() {
        Ok(Box::new(ExactBall::new(domain)?))
    } else {
        Ok(Box::new(WosRobin::new(domain, c.n.unwrap_or(SEARCH_WALKS), c.seed)?))
    }
}

fn projection(m: Mode) -> ProjectionMode {
    match m {
        Mode::Convolution => ProjectionMode::Convolution,
        Mode::Expansion => ProjectionMode::Expansion,
    }
}
