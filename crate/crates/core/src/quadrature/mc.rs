//! Importance-sampled Monte Carlo over SDF domains.
//!
//! The proposal is a mixture of a uniform density on the bounding box and
//! radial Cauchy bumps `p(r) ∝ s/(s²+r²)` around concentration points, so
//! integrands peaked at scale `s` have bounded weights.

use rand::Rng;
use serde::{Deserialize, Serialize};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::estimate::{chunked_reduce, default_jobs, sample_rng, Estimate, Moments};
use crate::greens::domain::{dist, Domain};
use crate::special::sphere_area;

/// Where a norm is taken: on `Ω` itself or on the dilated `Ω_λ = Ω/λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "frame", rename_all = "lowercase")]
pub enum Frame {
    Physical,
    Rescaled { lambda: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub p_norm: f64,
    #[serde(flatten)]
    pub frame: Frame,
}

impl NormSpec {
    pub fn physical(p_norm: f64) -> Self {
        NormSpec { p_norm, frame: Frame::Physical }
    }

    pub fn rescaled(p_norm: f64, lambda: f64) -> Self {
        NormSpec { p_norm, frame: Frame::Rescaled { lambda } }
    }

    /// The dual exponent `2N/(N+2)`.
    pub fn dual(n: usize) -> f64 {
        2.0 * n as f64 / (n as f64 + 2.0)
    }

    /// The critical exponent `2N/(N-2)`.
    pub fn critical(n: usize) -> f64 {
        2.0 * n as f64 / (n as f64 - 2.0)
    }

    /// The auxiliary exponent `s`: `N` when `N ≥ 7`, `2*` otherwise.
    pub fn aux_s(n: usize) -> f64 {
        if n >= 7 {
            n as f64
        } else {
            Self::critical(n)
        }
    }

    /// `Ns/(N+2s)`, the dual of `s` in the `X` norm.
    pub fn aux_dual(n: usize) -> f64 {
        let s = Self::aux_s(n);
        n as f64 * s / (n as f64 + 2.0 * s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_norm >= 1.0 && self.p_norm.is_finite()) {
            return Err(Error::Input("norm exponent must be at least 1".into()));
        }
        if let Frame::Rescaled { lambda } = self.frame {
            if !(lambda > 0.0 && lambda.is_finite()) {
                return Err(Error::Input("rescaled frame needs lambda > 0".into()));
            }
        }
        Ok(())
    }
}

/// Radial density around `center` with scale `scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bump {
    pub center: Vec<f64>,
    pub scale: f64,
    pub kind: BumpKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BumpKind {
    /// `p(r) ∝ s/(s²+r²)` on `[0, r_max]`.
    Cauchy,
    /// `p(r)` uniform on `[0, r_max]`; cancels an `r^{2-N}` singularity.
    RadialUniform,
}

#[derive(Debug, Clone)]
pub struct McIntegrator {
    domain: Domain,
    n: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    volume: f64,
    rmax: f64,
    bumps: Vec<Bump>,
    uniform_weight: f64,
    jobs: usize,
}

impl McIntegrator {
    pub fn new(domain: &Domain) -> Result<Self> {
        domain.validate()?;
        let n = domain.dim()?;
        let (lo, hi) = domain.bounding_box();
        let volume = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
        Ok(McIntegrator {
            domain: domain.clone(),
            n,
            rmax: domain.diameter(),
            lo,
            hi,
            volume,
            bumps: Vec::new(),
            uniform_weight: 1.0,
            jobs: default_jobs(),
        })
    }

    /// Add a bump; the uniform component keeps weight `uniform_weight`.
    pub fn with_bump(mut self, bump: Bump) -> Result<Self> {
        if bump.center.len() != self.n || !(bump.scale > 0.0) {
            return Err(Error::Input("bump needs matching dimension and positive scale".into()));
        }
        self.bumps.push(bump);
        if self.uniform_weight == 1.0 {
            self.uniform_weight = 0.5;
        }
        Ok(self)
    }

    pub fn uniform_weight(mut self, w: f64) -> Self {
        self.uniform_weight = w.clamp(0.0, 1.0);
        self
    }

    pub fn jobs(mut self, jobs: usize) -> Self {
        self.jobs = jobs.max(1);
        self
    }

    fn bump_density(&self, b: &Bump, x: &[f64]) -> f64 {
        let r = dist(x, &b.center);
        if r == 0.0 || r > self.rmax {
            return if r == 0.0 { f64::INFINITY } else { 0.0 };
        }
        let radial = match b.kind {
            BumpKind::Cauchy => b.scale / ((b.scale * b.scale + r * r) * (self.rmax / b.scale).atan()),
            BumpKind::RadialUniform => 1.0 / self.rmax,
        };
        radial / (sphere_area::<f64>(self.n - 1) * r.powi(self.n as i32 - 1))
    }

    fn density(&self, x: &[f64]) -> f64 {
        let inside_box = x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| v >= a && v <= b);
        let mut q = if inside_box { self.uniform_weight / self.volume } else { 0.0 };
        if !self.bumps.is_empty() {
            let w = (1.0 - self.uniform_weight) / self.bumps.len() as f64;
            for b in &self.bumps {
                q += w * self.bump_density(b, x);
            }
        }
        q
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let pick: f64 = rng.gen();
        if self.bumps.is_empty() || pick < self.uniform_weight {
            return self.lo.iter().zip(&self.hi).map(|(a, b)| a + (b - a) * rng.gen::<f64>()).collect();
        }
        let k = (((pick - self.uniform_weight) / (1.0 - self.uniform_weight)) * self.bumps.len() as f64)
            as usize;
        let b = &self.bumps[k.min(self.bumps.len() - 1)];
        let u: f64 = rng.gen();
        let r = match b.kind {
            BumpKind::Cauchy => b.scale * (u * (self.rmax / b.scale).atan()).tan(),
            BumpKind::RadialUniform => u * self.rmax,
        };
        let mut dir: Vec<f64> = (0..self.n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (d, c) in dir.iter_mut().zip(&b.center) {
            *d = c + r * *d / norm;
        }
        dir
    }

    /// `∫_Ω f` with `n` samples.
    pub fn integrate<F>(&self, f: F, n: usize, seed: u64) -> Result<Estimate>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        if n < 2 {
            return Err(Error::Input("need at least two samples".into()));
        }
        let m = chunked_reduce(
            n,
            self.jobs,
            |range| {
                let mut m = Moments::default();
                for i in range {
                    let mut rng = sample_rng(seed, i as u64);
                    let x = self.draw(&mut rng);
                    let v = if self.domain.contains(&x) {
                        let q = self.density(&x);
                        if q.is_finite() && q > 0.0 {
                            f(&x) / q
                        } else {
                            0.0
                        }
                    } else {
                        0.0
                    };
                    m.push(v);
                }
                m
            },
            |a, b| a.merge(&b),
        )?;
        let e = m.into_estimate(seed);
        if !e.value.is_finite() {
            return Err(Error::Numeric("Monte Carlo estimate is not finite".into()));
        }
        Ok(e)
    }

    /// `‖f‖_{L^q(Ω)}`, standard error by the delta method.
    pub fn lp_norm<F>(&self, f: F, q: f64, n: usize, seed: u64) -> Result<Estimate>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        if !(q > 0.0) {
            return Err(Error::Input("norm exponent must be positive".into()));
        }
        let i = self.integrate(|x| f(x).abs().powf(q), n, seed)?;
        let value = i.value.max(0.0).powf(1.0 / q);
        let stderr = if i.value > 0.0 { value / q * i.stderr / i.value } else { f64::INFINITY };
        Ok(Estimate { value, stderr, ..i })
    }
}

impl McIntegrator {
    /// Norm per `spec`. In the rescaled frame `f` is a function on `Ω_λ`
    /// and the integral is pulled back to `Ω`.
    pub fn norm<F>(&self, f: F, spec: &NormSpec, n: usize, seed: u64) -> Result<Estimate>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        spec.validate()?;
        match spec.frame {
            Frame::Physical => self.lp_norm(f, spec.p_norm, n, seed),
            Frame::Rescaled { lambda } => {
                let dim = self.n;
                let e = self.lp_norm(
                    |x| {
                        let y: Vec<f64> = x.iter().map(|v| v / lambda).collect();
                        f(&y)
                    },
                    spec.p_norm,
                    n,
                    seed,
                )?;
                let k = lambda.powf(-(dim as f64) / spec.p_norm);
                Ok(Estimate { value: e.value * k, stderr: e.stderr * k, ..e })
            }
        }
    }
}

/// `∫_Ω f` by uniform sampling of the bounding box.
pub fn mc_integrate<F>(f: F, domain: &Domain, n: usize, seed: u64) -> Result<Estimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    McIntegrator::new(domain)?.integrate(f, n, seed)
}

/// `‖f‖_{L^q(Ω)}` by uniform sampling of the bounding box.
pub fn lp_norm<F>(f: F, q: f64, domain: &Domain, n: usize, seed: u64) -> Result<Estimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    McIntegrator::new(domain)?.lp_norm(f, q, n, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bubbles::{c_n, critical_p, BubbleParams};

    #[test]
    fn volume_of_shell() {
        let d = Domain::shell(4);
        let e = mc_integrate(|_| 1.0, &d, 40_000, 2).unwrap();
        let exact = sphere_area::<f64>(3) / 4.0 * (16.0 - 1.0);
        assert!(e.within(exact, 4.0), "{e:?} {exact}");
    }

    #[test]
    fn cauchy_bump_captures_concentrated_mass() {
        let n = 4;
        let s = 1e-3;
        let d = Domain::unit_ball(n);
        let b = BubbleParams::new(n, s, vec![0.0; n]).unwrap();
        let p = critical_p::<f64>(n);
        let mc = McIntegrator::new(&d)
            .unwrap()
            .with_bump(Bump { center: vec![0.0; n], scale: s, kind: BumpKind::Cauchy })
            .unwrap();
        let e = mc.integrate(|x| b.value(x).unwrap().powf(p), 20_000, 9).unwrap();
        let a = s * (n as f64 - 2.0) * c_n::<f64>(n) * sphere_area::<f64>(n - 1);
        assert!(e.within(a, 4.0), "{e:?} {a}");
        assert!(e.stderr < 0.05 * a);
    }

    #[test]
    fn lp_norm_of_constant() {
        let d = Domain::unit_ball(3);
        let e = lp_norm(|_| 2.0, 2.0, &d, 20_000, 4).unwrap();
        let exact = 2.0 * (4.0 / 3.0 * std::f64::consts::PI).sqrt();
        assert!(e.within(exact, 4.0));
    }

    #[test]
    fn unit_ball_volume_n4() {
        let d = Domain::unit_ball(4);
        let e = mc_integrate(|_| 1.0, &d, 40_000, 11).unwrap();
        let exact = std::f64::consts::PI.powi(2) / 2.0;
        assert!(e.within(exact, 4.0), "{e:?}");
    }

    #[test]
    fn odd_integrand_vanishes() {
        let d = Domain::unit_ball(5);
        let e = mc_integrate(|x| x[0] * x[1].powi(2), &d, 20_000, 5).unwrap();
        assert!(e.within(0.0, 4.0), "{e:?}");
    }

    #[test]
    fn mean_over_seeds_is_unbiased() {
        let d = Domain::unit_ball(3);
        let exact = 4.0 * std::f64::consts::PI / 5.0;
        let runs: Vec<f64> =
            (0..200).map(|s| mc_integrate(|x| x[0] * x[0] * 3.0, &d, 200, s).unwrap().value).collect();
        let mean = runs.iter().sum::<f64>() / 200.0;
        let var = runs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 199.0;
        assert!((mean - exact).abs() < 4.0 * (var / 200.0).sqrt(), "{mean} {exact}");
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(16))]
        #[test]
        fn lp_triangle_inequality(a in -2.0f64..2.0, b in -2.0f64..2.0, q in 1.0f64..4.0) {
            // same seed: the inequality holds sample by sample for the weighted sums
            let d = Domain::unit_ball(3);
            let f = |x: &[f64]| a * x[0] + 1.0;
            let g = |x: &[f64]| b * x[1] * x[2];
            let nf = lp_norm(f, q, &d, 500, 1).unwrap().value;
            let ng = lp_norm(g, q, &d, 500, 1).unwrap().value;
            let nfg = lp_norm(|x| f(x) + g(x), q, &d, 500, 1).unwrap().value;
            proptest::prop_assert!(nfg <= nf + ng + 1e-12);
        }
    }

    #[test]
    fn rescaled_norm_of_bubble_scales_like_lambda() {
        // ‖U_{λ,0}‖_{L²(B)} ∝ λ in N=5; on Ω_λ, ‖U_{1,0}‖_{L²(B/λ)} → ‖U‖_{L²(ℝ⁵)}
        let n = 5;
        let d = Domain::unit_ball(n);
        let mc = |s: f64| {
            McIntegrator::new(&d)
                .unwrap()
                .with_bump(Bump { center: vec![0.0; n], scale: s, kind: BumpKind::Cauchy })
                .unwrap()
        };
        let lam = [0.04, 0.02, 0.01];
        let pts: Vec<(f64, f64)> = lam
            .iter()
            .map(|&l| {
                let b = BubbleParams::new(n, l, vec![0.0; n]).unwrap();
                (l, mc(l).norm(|x| b.value(x).unwrap(), &NormSpec::physical(2.0), 20_000, 3).unwrap().value)
            })
            .collect();
        let f = crate::quadrature::fit::fit_exponent(&pts, crate::quadrature::fit::LogCorrection::None).unwrap();
        assert!((f.slope - 1.0).abs() < 0.1, "{f:?}");
        let b1 = BubbleParams::new(n, 1.0, vec![0.0; n]).unwrap();
        let r = mc(0.01).norm(|y| b1.value(y).unwrap(), &NormSpec::rescaled(2.0, 0.01), 20_000, 3).unwrap();
        assert!((r.value / pts[2].1 - 0.01f64.powf(-1.0)).abs() < 1e-9 * r.value / pts[2].1);
    }

    #[test]
    fn zero_field_has_zero_norm() {
        let d = Domain::unit_ball(4);
        let e = McIntegrator::new(&d).unwrap().norm(|_| 0.0, &NormSpec::physical(2.0), 100, 1).unwrap();
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn jobs_do_not_change_bits() {
        let d = Domain::unit_ball(4);
        let f = |x: &[f64]| x[0] * x[0];
        let a = McIntegrator::new(&d).unwrap().jobs(1).integrate(f, 3000, 1).unwrap();
        let b = McIntegrator::new(&d).unwrap().jobs(2).integrate(f, 3000, 1).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }
}
