//! Critical points of the Robin function by multistart descent.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{sample_rng, Estimate};
use crate::greens::ball::Ball;
use crate::greens::domain::{dist, Domain};
use crate::greens::wos::WalkOnSpheres;

/// Where Robin values and derivatives come from.
pub trait RobinSource: Sync {
    fn domain(&self) -> &Domain;
    fn robin(&self, x: &[f64]) -> Result<Estimate>;
    fn robin_grad(&self, x: &[f64]) -> Result<Vec<Estimate>>;
    /// Hessian and an entrywise standard error.
    fn robin_hessian(&self, x: &[f64]) -> Result<(Vec<Vec<f64>>, f64)>;
    /// Finite-difference step, zero for exact sources.
    fn step(&self) -> f64;
}

/// Closed-form Robin function of a ball.
#[derive(Debug, Clone)]
pub struct ExactBall {
    domain: Domain,
    ball: Ball<f64>,
}

impl ExactBall {
    pub fn new(domain: &Domain) -> Result<Self> {
        let ball = domain
            .as_ball()
            .ok_or_else(|| Error::UnsupportedDomain("closed-form Robin needs a ball".into()))?;
        Ok(ExactBall { domain: domain.clone(), ball })
    }
}

impl RobinSource for ExactBall {
    fn domain(&self) -> &Domain {
        &self.domain
    }

    fn robin(&self, x: &[f64]) -> Result<Estimate> {
        Ok(Estimate::exact(self.ball.robin(x)?))
    }

    fn robin_grad(&self, x: &[f64]) -> Result<Vec<Estimate>> {
        Ok(self.ball.robin_grad(x)?.into_iter().map(Estimate::exact).collect())
    }

    fn robin_hessian(&self, x: &[f64]) -> Result<(Vec<Vec<f64>>, f64)> {
        Ok((self.ball.robin_hessian(x)?, 0.0))
    }

    fn step(&self) -> f64 {
        0.0
    }
}

/// Walk-on-spheres Robin with common random numbers across evaluations.
#[derive(Debug, Clone)]
pub struct WosRobin {
    wos: WalkOnSpheres,
    pub walks: usize,
    pub seed: u64,
    pub h: f64,
}

impl WosRobin {
    pub fn new(domain: &Domain, walks: usize, seed: u64) -> Result<Self> {
        let h = 0.01 * domain.diameter();
        Ok(WosRobin { wos: WalkOnSpheres::new(domain)?, walks, seed, h })
    }

    pub fn jobs(mut self, jobs: usize) -> Self {
        self.wos = self.wos.jobs(jobs);
        self
    }
}

impl RobinSource for WosRobin {
    fn domain(&self) -> &Domain {
        self.wos.domain()
    }

    fn robin(&self, x: &[f64]) -> Result<Estimate> {
        self.wos.robin(x, self.walks, self.seed)
    }

    fn robin_grad(&self, x: &[f64]) -> Result<Vec<Estimate>> {
        self.wos.robin_grad(x, self.h, self.walks, self.seed)
    }

    fn robin_hessian(&self, x: &[f64]) -> Result<(Vec<Vec<f64>>, f64)> {
        let n = x.len();
        let d = self.wos.domain().boundary_distance(x);
        let hh = (5.0 * self.h).min(0.5 * (d - 2.5 * self.h));
        if !(hh > 0.0) {
            return Err(Error::Input("too close to the boundary for a Hessian".into()));
        }
        let mut hess = vec![vec![0.0; n]; n];
        let mut se = 0.0f64;
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        for l in 0..n {
            xp[l] = x[l] + hh;
            xm[l] = x[l] - hh;
            let gp = self.robin_grad(&xp)?;
            let gm = self.robin_grad(&xm)?;
            for k in 0..n {
                hess[k][l] = (gp[k].value - gm[k].value) / (2.0 * hh);
                se = se.max((gp[k].stderr.powi(2) + gm[k].stderr.powi(2)).sqrt() / (2.0 * hh));
            }
            xp[l] = x[l];
            xm[l] = x[l];
        }
        for k in 0..n {
            for l in 0..k {
                let m = 0.5 * (hess[k][l] + hess[l][k]);
                hess[k][l] = m;
                hess[l][k] = m;
            }
        }
        Ok((hess, se))
    }

    fn step(&self) -> f64 {
        self.h
    }
}

/// Counts of positive, negative and indistinguishable-from-zero eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub x: Vec<f64>,
    pub robin: f64,
    pub grad: Vec<f64>,
    pub grad_stderr: Vec<f64>,
    pub hessian: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub signature: Signature,
    pub nondegenerate: bool,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct DescentOptions {
    pub max_iter: usize,
    /// Starting points keep this fraction of the inradius from the boundary.
    pub start_margin: f64,
}

impl Default for DescentOptions {
    fn default() -> Self {
        DescentOptions { max_iter: 80, start_margin: 0.3 }
    }
}

/// Classify a symmetric matrix; eigenvalues within `3·noise` (plus a tiny
/// relative floor) of zero count as zero.
pub fn classify(hessian: &[Vec<f64>], noise: f64) -> (Vec<f64>, Signature, bool) {
    let n = hessian.len();
    let m = DMatrix::from_fn(n, n, |i, j| hessian[i][j]);
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    let scale = ev.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let tol = 3.0 * noise * (n as f64).sqrt() + 1e-6 * scale;
    let mut sig = Signature { positive: 0, negative: 0, zero: 0 };
    for &v in &ev {
        if v.abs() <= tol {
            sig.zero += 1;
        } else if v > 0.0 {
            sig.positive += 1;
        } else {
            sig.negative += 1;
        }
    }
    (ev, sig, sig.zero == 0)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn random_start(domain: &Domain, margin: f64, seed: u64, k: usize) -> Result<Vec<f64>> {
    let (lo, hi) = domain.bounding_box();
    let mut rng = sample_rng(seed ^ 0x5eed_5eed, k as u64);
    let mut draw = || -> Vec<f64> { lo.iter().zip(&hi).map(|(a, b)| a + (b - a) * rng.gen::<f64>()).collect() };
    // the gap is relative to the largest boundary distance seen in a pilot
    let mut inner = 0.0f64;
    let mut pilot = Vec::new();
    for _ in 0..100_000 {
        let x = draw();
        let d = domain.boundary_distance(&x);
        if d > 0.0 {
            inner = inner.max(d);
            pilot.push((x, d));
            if pilot.len() == 512 {
                break;
            }
        }
    }
    let gap = margin * inner;
    if let Some((x, _)) = pilot.into_iter().find(|(_, d)| *d >= gap && gap > 0.0) {
        return Ok(x);
    }
    Err(Error::Numeric("could not sample a starting point".into()))
}

/// Descend from `x0`; returns the best iterate and whether the gradient
/// fell below three standard errors.
fn descend<S: RobinSource + ?Sized>(src: &S, x0: Vec<f64>, opts: &DescentOptions) -> Result<(Vec<f64>, f64, bool, usize)> {
    let domain = src.domain();
    let n = x0.len();
    let mut x = x0;
    let mut best = (x.clone(), src.robin(&x)?.value);
    let b = crate::bubbles::b_n::<f64>(n);
    let floor = 3.0 * src.step();
    for it in 0..opts.max_iter {
        let d = domain.boundary_distance(&x);
        let g = src.robin_grad(&x)?;
        let gv: Vec<f64> = g.iter().map(|e| e.value).collect();
        let gn = norm(&gv);
        let se = g.iter().map(|e| e.stderr * e.stderr).sum::<f64>().sqrt();
        if gn <= 3.0 * se || gn < 1e-12 {
            return Ok((best.0, best.1, true, it));
        }
        // Newton-like step for a boundary-dominated Robin function.
        let gamma = d.powi(n as i32) / ((n as f64 - 2.0) * (n as f64 - 1.0) * b);
        let len = (gamma * gn).min(0.25 * d);
        let trial: Vec<f64> = x.iter().zip(&gv).map(|(a, gk)| a - len * gk / gn).collect();
        if domain.boundary_distance(&trial) <= floor.max(1e-9) {
            return Ok((best.0, best.1, false, it));
        }
        x = trial;
        let phi = src.robin(&x)?.value;
        if phi < best.1 {
            best = (x.clone(), phi);
        }
    }
    Ok((best.0, best.1, false, opts.max_iter))
}

/// Multistart descent to the local minima of the Robin function.
///
/// Starts are drawn uniformly inside the domain; duplicates within
/// `10·h` (or `0.05·diam` for exact sources) are merged, keeping the lower
/// Robin value. Results are sorted by coordinates.
pub fn find_critical_points<S: RobinSource + ?Sized>(
    src: &S,
    multistart: usize,
    seed: u64,
    opts: &DescentOptions,
) -> Result<Vec<CriticalPoint>> {
    if multistart == 0 {
        return Err(Error::Input("multistart must be at least 1".into()));
    }
    let domain = src.domain();
    domain.validate()?;
    let merge_radius = if src.step() > 0.0 { 10.0 * src.step() } else { 0.05 * domain.diameter() };
    let mut found: Vec<CriticalPoint> = Vec::new();
    for k in 0..multistart {
        let x0 = random_start(domain, opts.start_margin, seed, k)?;
        let (x, phi, converged, iterations) = descend(src, x0, opts)?;
        if let Some(prev) = found.iter_mut().find(|c| dist(&c.x, &x) < merge_radius) {
            if converged && (!prev.converged || phi < prev.robin) {
                prev.x = x;
                prev.robin = phi;
                prev.converged = true;
                prev.iterations = iterations;
            }
            continue;
        }
        found.push(CriticalPoint {
            x,
            robin: phi,
            grad: Vec::new(),
            grad_stderr: Vec::new(),
            hessian: Vec::new(),
            eigenvalues: Vec::new(),
            signature: Signature { positive: 0, negative: 0, zero: 0 },
            nondegenerate: false,
            converged,
            iterations,
        });
    }
    for c in &mut found {
        let g = src.robin_grad(&c.x)?;
        c.grad = g.iter().map(|e| e.value).collect();
        c.grad_stderr = g.iter().map(|e| e.stderr).collect();
        let (h, noise) = src.robin_hessian(&c.x)?;
        let (ev, sig, nd) = classify(&h, noise);
        c.hessian = h;
        c.eigenvalues = ev;
        c.signature = sig;
        c.nondegenerate = nd;
    }
    found.sort_by(|a, b| {
        a.x.iter().zip(&b.x).map(|(u, v)| u.total_cmp(v)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_ball_converges_to_centre() {
        let d = Domain::unit_ball(4);
        let src = ExactBall::new(&d).unwrap();
        let pts = find_critical_points(&src, 4, 1, &DescentOptions::default()).unwrap();
        assert_eq!(pts.len(), 1);
        let c = &pts[0];
        assert!(norm(&c.x) < 1e-6, "{:?}", c.x);
        assert_eq!(c.signature.positive, 4);
        assert!(c.nondegenerate && c.converged);
    }

    #[test]
    fn classify_flags_zero_eigenvalue() {
        let (_, sig, nd) = classify(&[vec![1.0, 0.0], vec![0.0, 1e-9]], 1e-4);
        assert_eq!(sig.zero, 1);
        assert!(!nd);
        let (_, sig, _) = classify(&[vec![1.0, 0.0], vec![0.0, -2.0]], 0.0);
        assert_eq!((sig.positive, sig.negative), (1, 1));
    }

    #[test]
    fn wos_ball_centre() {
        let d = Domain::unit_ball(4);
        let src = WosRobin::new(&d, 4000, 3).unwrap();
        let pts = find_critical_points(&src, 2, 5, &DescentOptions::default()).unwrap();
        let best = pts.iter().filter(|c| c.converged).min_by(|a, b| a.robin.total_cmp(&b.robin)).unwrap();
        assert!(norm(&best.x) < 5e-2, "{:?}", best.x);
    }

    #[test]
    fn zero_starts_rejected() {
        let d = Domain::unit_ball(3);
        let src = ExactBall::new(&d).unwrap();
        assert!(find_critical_points(&src, 0, 0, &DescentOptions::default()).is_err());
    }
}
