//! Report files, run manifests and convergence plots.

use std::fmt::Write as _;
use std::path::Path;

use segbubble::quadrature::{FitReport, LogCorrection};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::Failure;

/// Files produced by a command, written only once the command succeeded.
#[derive(Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), Failure> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| Failure::Numeric(e.to_string()))?;
        s.push('\n');
        self.files.push((name.to_string(), s.into_bytes()));
        Ok(())
    }

    pub fn raw(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn write_all(self, dir: &Path) -> Result<(), Failure> {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))?;
        for (name, bytes) in self.files {
            let p = dir.join(name);
            std::fs::write(&p, bytes).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?;
        }
        Ok(())
    }
}

#[derive(Serialize)]
pub struct RunManifest<'a, P: Serialize> {
    pub command: &'a str,
    pub parameters: &'a P,
    pub domain_digest: String,
    pub seed: u64,
    pub tool_version: &'static str,
    pub wall_time_s: f64,
}

/// SHA-256 of the canonical JSON form of the domain.
pub fn domain_digest(domain: &segbubble::Domain) -> String {
    let canon = serde_json::to_string(domain).unwrap_or_default();
    format!("{:x}", Sha256::digest(canon.as_bytes()))
}

/// Log–log plot of a fitted series with its fitted line.
pub fn fit_svg(title: &str, fit: &FitReport) -> Option<String> {
    let pts: Vec<(f64, f64)> = fit
        .lambdas
        .iter()
        .zip(&fit.values)
        .filter(|(l, v)| **l > 0.0 && v.abs() > 0.0 && v.is_finite())
        .map(|(l, v)| (l.ln(), v.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let model = |x: f64| {
        let log = match fit.log_correction {
            LogCorrection::None => 0.0,
            LogCorrection::Ln => (-x).ln(),
        };
        fit.amplitude.abs().ln() + fit.slope * x + log
    };
    let (x0, x1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.0), a.1.max(p.0)));
    let ys: Vec<f64> = pts.iter().map(|p| p.1).chain([model(x0), model(x1)]).collect();
    let (y0, y1) = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, &y| (a.0.min(y), a.1.max(y)));
    let (w, h, m) = (480.0, 360.0, 48.0);
    let sx = |x: f64| m + (x - x0) / (x1 - x0).max(1e-12) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / (y1 - y0).max(1e-12) * (h - 2.0 * m);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<rect x="{m}" y="{m}" width="{}" height="{}" fill="none" stroke="black"/>"#, w - 2.0 * m, h - 2.0 * m);
    let _ = writeln!(s, r#"<text x="{m}" y="20">{} (slope {:.3})</text>"#, xml_escape(title), fit.slope);
    let _ = writeln!(s, r#"<text x="{}" y="{}">ln λ</text>"#, w / 2.0, h - 12.0);
    let n = 32;
    let line: Vec<String> = (0..=n)
        .map(|i| {
            let x = x0 + (x1 - x0) * i as f64 / n as f64;
            format!("{:.2},{:.2}", sx(x), sy(model(x)))
        })
        .collect();
    let _ = writeln!(s, r#"<polyline fill="none" stroke="steelblue" points="{}"/>"#, line.join(" "));
    for (x, y) in pts {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="crimson"/>"#, sx(x), sy(y));
    }
    s.push_str("</svg>\n");
    Some(s)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
