use serde::{Deserialize, Serialize};

use crate::error::{Result, SqgError};
use crate::stats::fit_line;

pub const MIN_AUDIT_SAMPLES: usize = 10;

/// `N(0) / (1 - c N(0) t)`, infinite past the horizon.
pub fn riccati_envelope(n0: f64, c: f64, t: f64) -> f64 {
    let d = 1.0 - c * n0 * t;
    if d > 0.0 {
        n0 / d
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeViolation {
    pub t: f64,
    pub value: f64,
    pub envelope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthAudit {
    pub n0: f64,
    /// Smallest `c >= 0` whose Riccati envelope contains the whole series.
    pub c: f64,
    /// Least-squares `c` from the linear law `1/N(t) = 1/N(0) - c t`.
    pub c_least_squares: f64,
    /// `1 / (c N(0))`; infinite when `c = 0`.
    pub horizon: f64,
    /// Samples above the least-squares envelope (discretisation noise shows
    /// up here; it is reported, not fatal).
    pub violations: Vec<EnvelopeViolation>,
    /// Whether the series stays within the envelope of `c`.
    pub within_envelope: bool,
}

/// Fits the a-priori growth law `N(t) <= N(0) / (1 - c N(0) t)` to a
/// recorded norm series `(t, N)`, with `t` increasing from 0.
pub fn norm_growth_audit(series: &[(f64, f64)]) -> Result<GrowthAudit> {
    if series.len() < MIN_AUDIT_SAMPLES {
        return Err(SqgError::TooFewSamples {
            got: series.len(),
            need: MIN_AUDIT_SAMPLES,
        });
    }
    if series.iter().any(|(t, n)| !t.is_finite() || !(n.is_finite() && *n > 0.0)) {
        return Err(SqgError::NonFinite { what: "norm series" });
    }
    let (t0, n0) = series[0];
    let inv0 = 1.0 / n0;
    let rel = |t: f64| t - t0;
    let mut c: f64 = 0.0;
    for &(t, n) in &series[1..] {
        let dt = rel(t);
        if dt > 0.0 {
            c = c.max((inv0 - 1.0 / n) / dt);
        }
    }
    let ts: Vec<f64> = series.iter().map(|&(t, _)| rel(t)).collect();
    let inv: Vec<f64> = series.iter().map(|&(_, n)| 1.0 / n).collect();
    let c_least_squares = fit_line(&ts, &inv).map_or(0.0, |f| (-f.slope).max(0.0));
    let tol = 1e-9;
    let violations = series
        .iter()
        .filter_map(|&(t, n)| {
            let envelope = riccati_envelope(n0, c_least_squares, rel(t));
            (n > envelope * (1.0 + tol)).then_some(EnvelopeViolation {
                t,
                value: n,
                envelope,
            })
        })
        .collect();
    let within_envelope = series
        .iter()
        .all(|&(t, n)| n <= riccati_envelope(n0, c, rel(t)) * (1.0 + tol));
    Ok(GrowthAudit {
        n0,
        c,
        c_least_squares,
        horizon: if c > 0.0 { 1.0 / (c * n0) } else { f64::INFINITY },
        violations,
        within_envelope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_series_has_infinite_horizon() {
        let s: Vec<_> = (0..12).map(|k| (k as f64 * 0.1, 3.0)).collect();
        let a = norm_growth_audit(&s).unwrap();
        assert_eq!(a.c, 0.0);
        assert!(a.horizon.is_infinite());
        assert!(a.within_envelope && a.violations.is_empty());
    }

    #[test]
    fn exact_riccati_solution_recovers_c() {
        let s: Vec<_> = (0..20)
            .map(|k| {
                let t = k as f64 * 0.04;
                (t, 1.0 / (1.0 - t))
            })
            .collect();
        let a = norm_growth_audit(&s).unwrap();
        assert!((a.c - 1.0).abs() <= 0.05, "{a:?}");
        assert!((a.c_least_squares - 1.0).abs() <= 0.05, "{a:?}");
        assert!((a.horizon - 1.0).abs() <= 0.05);
        assert!(a.within_envelope);
    }

    #[test]
    fn short_series_rejected() {
        assert_eq!(
            norm_growth_audit(&[(0.0, 1.0); 9]).unwrap_err(),
            SqgError::TooFewSamples { got: 9, need: 10 }
        );
    }
}
