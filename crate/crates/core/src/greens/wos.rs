//! Walk-on-spheres estimates of the regular part of Green's function and of
//! the Robin function on SDF domains.
//!
//! `H(x, ·)` is harmonic with boundary data `B_N |x - z|^{2-N}`, so
//! `H(x, y) = E[B_N |x - Z_y|^{2-N}]` where `Z_y` is the exit point of
//! Brownian motion started at `y`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bubbles::b_n;
use crate::error::{check_point, Error, Result};
use crate::estimate::{chunked_reduce, default_jobs, sample_rng, Estimate, Moments};
use crate::greens::domain::{dist, Domain};

/// Estimates with a larger discarded fraction are flagged.
pub const DISCARD_FLAG_FRACTION: f64 = 1e-4;

#[derive(Debug, Clone, Copy)]
pub struct WosOptions {
    /// Absorbing shell width as a fraction of the domain diameter.
    pub shell_factor: f64,
    pub max_steps: usize,
    pub jobs: usize,
}

impl Default for WosOptions {
    fn default() -> Self {
        WosOptions { shell_factor: 1e-6, max_steps: 10_000, jobs: default_jobs() }
    }
}

/// Walk-on-spheres solver bound to a domain.
#[derive(Debug, Clone)]
pub struct WalkOnSpheres {
    domain: Domain,
    n: usize,
    shell: f64,
    opts: WosOptions,
}

impl WalkOnSpheres {
    pub fn new(domain: &Domain) -> Result<Self> {
        Self::with_options(domain, WosOptions::default())
    }

    pub fn with_options(domain: &Domain, opts: WosOptions) -> Result<Self> {
        domain.validate()?;
        let n = domain.dim()?;
        if opts.max_steps == 0 || !(opts.shell_factor > 0.0) {
            return Err(Error::Input("walk-on-spheres options must be positive".into()));
        }
        Ok(WalkOnSpheres { domain: domain.clone(), n, shell: opts.shell_factor * domain.diameter(), opts })
    }

    pub fn jobs(mut self, jobs: usize) -> Self {
        self.opts.jobs = jobs.max(1);
        self
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    fn check_interior(&self, x: &[f64], what: &str) -> Result<()> {
        check_point(self.n, x, what)?;
        if !self.domain.contains(x) {
            return Err(Error::Singularity(format!("{what} is not inside the domain")));
        }
        Ok(())
    }

    /// One walk from `start`; `None` if the step cap is hit.
    fn walk(&self, start: &[f64], rng: &mut ChaCha8Rng, dir: &mut [f64]) -> Option<Vec<f64>> {
        let mut x = start.to_vec();
        for _ in 0..self.opts.max_steps {
            let d = self.domain.boundary_distance(&x);
            if d < self.shell {
                return Some(match &self.domain {
                    Domain::Ball { center, radius } => {
                        let r = dist(&x, center);
                        center.iter().zip(&x).map(|(c, v)| c + radius * (v - c) / r).collect()
                    }
                    _ => self.domain.project_to_boundary(&x),
                });
            }
            let mut norm = 0.0;
            for v in dir.iter_mut() {
                *v = rng.sample(StandardNormal);
                norm += *v * *v;
            }
            let s = d / norm.sqrt();
            for (xi, v) in x.iter_mut().zip(dir.iter()) {
                *xi += s * v;
            }
        }
        None
    }

    fn kernel(&self, x: &[f64], z: &[f64]) -> f64 {
        b_n::<f64>(self.n) * dist(x, z).powi(2 - self.n as i32)
    }

    /// Estimate `H(x, y)` with `n` walks started at `y`.
    pub fn regular_part(&self, x: &[f64], y: &[f64], n: usize, seed: u64) -> Result<Estimate> {
        self.check_interior(x, "x")?;
        self.check_interior(y, "y")?;
        if n < 2 {
            return Err(Error::Input("need at least two walks".into()));
        }
        let m = chunked_reduce(
            n,
            self.opts.jobs,
            |range| {
                let mut m = Moments::default();
                let mut dir = vec![0.0; self.n];
                for i in range {
                    let mut rng = sample_rng(seed, i as u64);
                    match self.walk(y, &mut rng, &mut dir) {
                        Some(z) => m.push(self.kernel(x, &z)),
                        None => m.discard(),
                    }
                }
                m
            },
            |a, b| a.merge(&b),
        )?;
        finish(m, seed)
    }

    /// Estimate `Φ(x) = H(x, x)`.
    pub fn robin(&self, x: &[f64], n: usize, seed: u64) -> Result<Estimate> {
        self.regular_part(x, x, n, seed)
    }

    /// Central-difference gradient of `Φ` with common random numbers: walk
    /// `i` from `x + h e_k` and from `x - h e_k` consume the same stream.
    pub fn robin_grad(&self, x: &[f64], h: f64, n: usize, seed: u64) -> Result<Vec<Estimate>> {
        self.check_interior(x, "x")?;
        if !(h > 0.0) || self.domain.boundary_distance(x) <= 2.0 * h {
            return Err(Error::Input("finite-difference step must be positive and smaller than the boundary distance".into()));
        }
        if n < 2 {
            return Err(Error::Input("need at least two walks".into()));
        }
        let dim = self.n;
        let parts = chunked_reduce(
            n,
            self.opts.jobs,
            |range| {
                let mut ms = vec![Moments::default(); dim];
                let mut dir = vec![0.0; dim];
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                for i in range {
                    let base = sample_rng(seed, i as u64);
                    for k in 0..dim {
                        xp[k] = x[k] + h;
                        xm[k] = x[k] - h;
                        let zp = self.walk(&xp, &mut base.clone(), &mut dir);
                        let zm = self.walk(&xm, &mut base.clone(), &mut dir);
                        match (zp, zm) {
                            (Some(zp), Some(zm)) => {
                                ms[k].push((self.kernel(&xp, &zp) - self.kernel(&xm, &zm)) / (2.0 * h))
                            }
                            _ => ms[k].discard(),
                        }
                        xp[k] = x[k];
                        xm[k] = x[k];
                    }
                }
                ms
            },
            |acc: &mut Vec<Moments>, b| {
                if acc.is_empty() {
                    *acc = b;
                } else {
                    for (a, m) in acc.iter_mut().zip(&b) {
                        a.merge(m);
                    }
                }
            },
        )?;
        parts.into_iter().map(|m| finish(m, seed)).collect()
    }
}

fn finish(m: Moments, seed: u64) -> Result<Estimate> {
    if m.count < 2 {
        return Err(Error::Numeric("all walks hit the step cap".into()));
    }
    let e = m.into_estimate(seed);
    if e.discarded_fraction() >= DISCARD_FLAG_FRACTION {
        log::warn!("walk-on-spheres discarded fraction {:.2e}", e.discarded_fraction());
    }
    Ok(e)
}

/// `H(x, y)` on `domain` by walk-on-spheres.
pub fn wos_h(domain: &Domain, x: &[f64], y: &[f64], n: usize, seed: u64) -> Result<Estimate> {
    WalkOnSpheres::new(domain)?.regular_part(x, y, n, seed)
}

/// `Φ(x)` on `domain` by walk-on-spheres.
pub fn robin(domain: &Domain, x: &[f64], n: usize, seed: u64) -> Result<Estimate> {
    WalkOnSpheres::new(domain)?.robin(x, n, seed)
}

/// `∇Φ(x)` on `domain` by common-random-number central differences.
pub fn robin_grad(domain: &Domain, x: &[f64], h: f64, n: usize, seed: u64) -> Result<Vec<Estimate>> {
    WalkOnSpheres::new(domain)?.robin_grad(x, h, n, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greens::ball::Ball;

    #[test]
    fn matches_ball_closed_form() {
        let d = Domain::unit_ball(4);
        let ball = Ball::centered(4, 1.0).unwrap();
        let x = [0.3, 0.1, 0.0, -0.2];
        let y = [-0.1, 0.2, 0.3, 0.0];
        let e = wos_h(&d, &x, &y, 4000, 11).unwrap();
        let exact = ball.regular_part(&x, &y).unwrap();
        assert!(e.within(exact, 4.0), "{e:?} vs {exact}");
        assert_eq!(e.discarded, 0);
    }

    #[test]
    fn deterministic_across_jobs() {
        let d = Domain::unit_ball(4);
        let x = [0.2, 0.0, 0.0, 0.0];
        let a = WalkOnSpheres::new(&d).unwrap().jobs(1).robin(&x, 1500, 3).unwrap();
        let b = WalkOnSpheres::new(&d).unwrap().jobs(3).robin(&x, 1500, 3).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn crn_gradient_matches_ball() {
        let d = Domain::unit_ball(4);
        let ball = Ball::centered(4, 1.0).unwrap();
        let x = [0.4, 0.0, 0.1, 0.0];
        let g = robin_grad(&d, &x, 0.02, 3000, 5).unwrap();
        let exact = ball.robin_grad(&x).unwrap();
        for k in 0..4 {
            assert!((g[k].value - exact[k]).abs() <= 4.0 * g[k].stderr + 2e-3 * exact[0].abs(), "k={k}");
        }
    }

    #[test]
    fn rejects_exterior_points() {
        let d = Domain::shell(4);
        assert!(matches!(robin(&d, &[0.5, 0.0, 0.0, 0.0], 10, 0), Err(Error::Singularity(_))));
        assert!(robin(&d, &[1.5, 0.0, 0.0], 10, 0).is_err());
    }

    #[test]
    fn step_cap_counts_discards() {
        let d = Domain::unit_ball(4);
        let opts = WosOptions { max_steps: 1, jobs: 1, ..Default::default() };
        let s = WalkOnSpheres::with_options(&d, opts).unwrap();
        assert!(s.robin(&[0.0; 4], 100, 1).is_err());
    }
}
