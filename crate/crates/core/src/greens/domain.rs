//! Domains described by signed distance functions.
//!
//! The JSON form is a tagged tree, for example
//! `{"kind":"difference","parts":[{"kind":"ball","center":[0,0,0,0],"radius":2},
//! {"kind":"ball","center":[0,0,0,0],"radius":1}]}`.
//!
//! Unions and differences use `min`/`max` combinations, which give a
//! distance bound rather than the exact distance; walk-on-spheres only
//! needs the bound.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::greens::ball::Ball;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Domain {
    Ball { center: Vec<f64>, radius: f64 },
    /// Points within `radius` of the segment `[a, b]`.
    Capsule { a: Vec<f64>, b: Vec<f64>, radius: f64 },
    Union { parts: Vec<Domain> },
    /// First part minus all the others.
    Difference { parts: Vec<Domain> },
}

impl Domain {
    pub fn ball(center: Vec<f64>, radius: f64) -> Self {
        Domain::Ball { center, radius }
    }

    /// Unit ball in `R^N`.
    pub fn unit_ball(n: usize) -> Self {
        Domain::Ball { center: vec![0.0; n], radius: 1.0 }
    }

    /// Spherical shell `{1 < |x| < 2}`.
    pub fn shell(n: usize) -> Self {
        Domain::Difference {
            parts: vec![Domain::ball(vec![0.0; n], 2.0), Domain::ball(vec![0.0; n], 1.0)],
        }
    }

    /// Two unit balls at `±1.5 e_1` joined by a thin capsule.
    pub fn dumbbell(n: usize, neck: f64) -> Self {
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        a[0] = -1.5;
        b[0] = 1.5;
        Domain::Union {
            parts: vec![
                Domain::ball(a.clone(), 1.0),
                Domain::ball(b.clone(), 1.0),
                Domain::Capsule { a, b, radius: neck },
            ],
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let d: Domain =
            serde_json::from_str(s).map_err(|e| Error::Input(format!("domain JSON: {e}")))?;
        d.validate()?;
        Ok(d)
    }

    /// Dimension, checked to be consistent across the tree.
    pub fn dim(&self) -> Result<usize> {
        match self {
            Domain::Ball { center, .. } => Ok(center.len()),
            Domain::Capsule { a, b, .. } => {
                if a.len() != b.len() {
                    return Err(Error::Input("capsule endpoints differ in dimension".into()));
                }
                Ok(a.len())
            }
            Domain::Union { parts } | Domain::Difference { parts } => {
                let first = parts
                    .first()
                    .ok_or_else(|| Error::Input("composite domain with no parts".into()))?
                    .dim()?;
                for p in &parts[1..] {
                    if p.dim()? != first {
                        return Err(Error::Input("domain parts differ in dimension".into()));
                    }
                }
                Ok(first)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_dim(self.dim()?)?;
        self.validate_parts()
    }

    fn validate_parts(&self) -> Result<()> {
        match self {
            Domain::Ball { center, radius } => {
                if !(*radius > 0.0) || !radius.is_finite() || center.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Input("ball needs finite centre and positive radius".into()));
                }
            }
            Domain::Capsule { a, b, radius } => {
                if !(*radius > 0.0) || a.iter().chain(b).any(|v| !v.is_finite()) {
                    return Err(Error::Input("capsule needs finite endpoints and positive radius".into()));
                }
            }
            Domain::Union { parts } | Domain::Difference { parts } => {
                for p in parts {
                    p.validate_parts()?;
                }
            }
        }
        Ok(())
    }

    /// Signed distance bound: negative inside.
    pub fn sdf(&self, x: &[f64]) -> f64 {
        match self {
            Domain::Ball { center, radius } => dist(x, center) - radius,
            Domain::Capsule { a, b, radius } => {
                let ab: Vec<f64> = b.iter().zip(a).map(|(p, q)| p - q).collect();
                let ax: Vec<f64> = x.iter().zip(a).map(|(p, q)| p - q).collect();
                let l2: f64 = ab.iter().map(|v| v * v).sum();
                let t = if l2 > 0.0 {
                    (ax.iter().zip(&ab).map(|(p, q)| p * q).sum::<f64>() / l2).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                let d2: f64 = ax.iter().zip(&ab).map(|(p, q)| (p - t * q).powi(2)).sum();
                d2.sqrt() - radius
            }
            Domain::Union { parts } => parts.iter().map(|p| p.sdf(x)).fold(f64::INFINITY, f64::min),
            Domain::Difference { parts } => {
                let mut d = parts[0].sdf(x);
                for p in &parts[1..] {
                    d = d.max(-p.sdf(x));
                }
                d
            }
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.sdf(x) < 0.0
    }

    /// Distance from an interior point to the boundary (lower bound for composites).
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        -self.sdf(x)
    }

    /// Axis-aligned bounding box `(lo, hi)`.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Domain::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
            Domain::Capsule { a, b, radius } => (
                a.iter().zip(b).map(|(p, q)| p.min(*q) - radius).collect(),
                a.iter().zip(b).map(|(p, q)| p.max(*q) + radius).collect(),
            ),
            Domain::Union { parts } => {
                let mut it = parts.iter().map(|p| p.bounding_box());
                let (mut lo, mut hi) = it.next().expect("validated non-empty");
                for (l, h) in it {
                    for k in 0..lo.len() {
                        lo[k] = lo[k].min(l[k]);
                        hi[k] = hi[k].max(h[k]);
                    }
                }
                (lo, hi)
            }
            Domain::Difference { parts } => parts[0].bounding_box(),
        }
    }

    /// Diameter of the bounding box.
    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        dist(&lo, &hi)
    }

    /// The closed-form ball, if this domain is a single ball.
    pub fn as_ball(&self) -> Option<Ball<f64>> {
        match self {
            Domain::Ball { center, radius } => Some(Ball { center: center.clone(), radius: *radius }),
            _ => None,
        }
    }

    /// Nearest boundary point along the numerical SDF gradient.
    pub fn project_to_boundary(&self, x: &[f64]) -> Vec<f64> {
        let d = self.sdf(x);
        let h = 1e-7 * self.diameter().max(1e-300);
        let mut g = vec![0.0; x.len()];
        let mut xp = x.to_vec();
        for k in 0..x.len() {
            xp[k] = x[k] + h;
            let fp = self.sdf(&xp);
            xp[k] = x[k] - h;
            let fm = self.sdf(&xp);
            xp[k] = x[k];
            g[k] = (fp - fm) / (2.0 * h);
        }
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return x.to_vec();
        }
        x.iter().zip(&g).map(|(xi, gi)| xi - d * gi / norm).collect()
    }
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}
