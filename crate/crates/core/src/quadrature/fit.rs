//! Log–log exponent fits and their CSV form.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Optional logarithmic factor divided out before fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LogCorrection {
    #[default]
    None,
    /// Model `v ≈ a λ^k |ln λ|`.
    Ln,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Fitted exponent `k`.
    pub slope: f64,
    pub slope_stderr: f64,
    /// Fitted prefactor `a`; negative when the caller fitted `-v`.
    pub amplitude: f64,
    /// `r²` of the model actually fitted.
    pub r2: f64,
    pub log_correction: LogCorrection,
    /// `r²` of the uncorrected fit, present when a correction was requested.
    pub r2_uncorrected: Option<f64>,
    pub lambdas: Vec<f64>,
    pub values: Vec<f64>,
    /// Residuals of `ln v` against the fitted line, per point.
    pub residuals: Vec<f64>,
}

impl FitReport {
    /// Mark the series as the absolute value of a negative quantity.
    pub fn negated(mut self) -> Self {
        self.amplitude = -self.amplitude;
        self
    }
}

struct Line {
    slope: f64,
    intercept: f64,
    r2: f64,
    slope_stderr: f64,
}

fn linear_fit(x: &[f64], y: &[f64]) -> Line {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let slope_stderr = if x.len() > 2 { (sse / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    Line { slope, intercept, r2, slope_stderr }
}

/// Least-squares fit of `ln v = ln a + k ln λ (+ ln|ln λ|)`.
///
/// The logarithmic coefficient is fixed to one rather than fitted; with a
/// correction requested the uncorrected `r²` is reported alongside.
pub fn fit_exponent(points: &[(f64, f64)], log_correction: LogCorrection) -> Result<FitReport> {
    if points.len() < 3 {
        return Err(Error::Input("need at least three points to fit an exponent".into()));
    }
    if points.iter().any(|&(l, _)| !(l > 0.0 && l < 1.0)) {
        return Err(Error::Input("lambda values must lie in (0, 1)".into()));
    }
    if points.windows(2).any(|w| w[1].0 >= w[0].0) {
        return Err(Error::Input("lambda values must be strictly decreasing".into()));
    }
    if points.iter().any(|&(_, v)| !(v > 0.0 && v.is_finite())) {
        return Err(Error::Input("values must be positive and finite".into()));
    }
    let x: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let plain = linear_fit(&x, &y);
    let (used, yy, r2_uncorrected) = match log_correction {
        LogCorrection::None => (plain, y, None),
        LogCorrection::Ln => {
            let ylog: Vec<f64> = y.iter().zip(&x).map(|(v, l)| v - (-l).ln()).collect();
            (linear_fit(&x, &ylog), ylog, Some(plain.r2))
        }
    };
    let residuals = x.iter().zip(&yy).map(|(a, b)| b - used.intercept - used.slope * a).collect();
    Ok(FitReport {
        slope: used.slope,
        slope_stderr: used.slope_stderr,
        amplitude: used.intercept.exp(),
        r2: used.r2.clamp(0.0, 1.0),
        log_correction,
        r2_uncorrected,
        lambdas: points.iter().map(|p| p.0).collect(),
        values: points.iter().map(|p| p.1).collect(),
        residuals,
    })
}

/// One row of a convergence table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub lambda: f64,
    pub value: f64,
    pub stderr: f64,
}

pub fn write_series_csv<W: Write>(w: W, rows: &[SeriesRow]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r).map_err(|e| Error::Numeric(format!("csv: {e}")))?;
    }
    wr.flush().map_err(|e| Error::Numeric(format!("csv: {e}")))?;
    Ok(())
}

pub fn read_series_csv<R: Read>(r: R) -> Result<Vec<SeriesRow>> {
    let mut rd = csv::Reader::from_reader(r);
    rd.deserialize()
        .map(|row| row.map_err(|e| Error::Input(format!("csv: {e}"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series(l: &[f64], f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        l.iter().map(|&x| (x, f(x))).collect()
    }

    #[test]
    fn exact_power_law() {
        let f = fit_exponent(&[(0.1, 1e-2), (0.01, 1e-4), (0.001, 1e-6)], LogCorrection::None).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        assert!(f.residuals.iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn recovers_planted_slopes() {
        let l = [0.08, 0.04, 0.02, 0.01];
        for n in 4..=8 {
            for k in [1.0, 2.0, n as f64 - 2.0, (n as f64 + 2.0) / 2.0] {
                let f = fit_exponent(&series(&l, |x| 3.0 * x.powf(k)), LogCorrection::None).unwrap();
                assert!((f.slope - k).abs() < 1e-10);
                assert!((f.amplitude - 3.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn constant_sequence_has_zero_slope() {
        let f = fit_exponent(&series(&[0.5, 0.2, 0.1, 0.05], |_| 7.0), LogCorrection::None).unwrap();
        assert!(f.slope.abs() < 1e-12);
    }

    #[test]
    fn log_correction_removes_log_factor() {
        let l = [0.08, 0.04, 0.02, 0.01];
        let pts = series(&l, |x| x.powi(4) * (-x.ln()));
        let plain = fit_exponent(&pts, LogCorrection::None).unwrap();
        let logged = fit_exponent(&pts, LogCorrection::Ln).unwrap();
        assert!((logged.slope - 4.0).abs() < 0.02);
        assert!(plain.slope < 3.8);
        assert!(logged.r2 > logged.r2_uncorrected.unwrap());
        assert_eq!(plain.r2_uncorrected, None);
    }

    #[test]
    fn rejects_bad_series() {
        let none = LogCorrection::None;
        assert!(fit_exponent(&[(0.1, 1.0), (0.05, 1.0)], none).is_err());
        assert!(fit_exponent(&[(0.1, 1.0), (2.0, 1.0), (0.01, 1.0)], none).is_err());
        assert!(fit_exponent(&[(0.01, 1.0), (0.1, 1.0), (0.05, 1.0)], none).is_err());
        let e = fit_exponent(&[(0.1, 1.0), (0.05, 0.0), (0.01, 1.0)], none).unwrap_err();
        assert!(e.is_input_error());
        assert!(fit_exponent(&[(0.1, 1.0), (0.05, -1.0), (0.01, 1.0)], none).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let rows = vec![
            SeriesRow { lambda: 0.1, value: 2.0, stderr: 0.0 },
            SeriesRow { lambda: 0.05, value: 0.5, stderr: 1e-3 },
        ];
        let mut buf = Vec::new();
        write_series_csv(&mut buf, &rows).unwrap();
        assert_eq!(read_series_csv(&buf[..]).unwrap(), rows);
    }

    proptest! {
        #[test]
        fn slope_is_scale_invariant(k in -3.0f64..5.0, a in 1e-3f64..1e3) {
            let pts: Vec<(f64, f64)> = [0.1, 0.05, 0.025].iter().map(|&x: &f64| (x, a * x.powf(k))).collect();
            let f = fit_exponent(&pts, LogCorrection::None).unwrap();
            prop_assert!((f.slope - k).abs() < 1e-9);
        }
    }
}
