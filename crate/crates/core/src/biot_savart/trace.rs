use serde::{Deserialize, Serialize};

use crate::error::{Result, SqgError};
use crate::field::{derivative, MultiIndex, ScalarField};
use crate::geometry::Point;
use crate::par::{self, Exec};

/// Samples of `d2^2 theta(x1, 0)` at `x1_min + k h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTrace {
    pub x1_min: f64,
    pub h: f64,
    pub samples: Vec<f64>,
}

impl BoundaryTrace {
    pub fn new(x1_min: f64, h: f64, samples: Vec<f64>) -> Result<Self> {
        if !(h > 0.0) {
            return Err(SqgError::InvalidGrid(format!("trace spacing {h} must be positive")));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(SqgError::NonFinite { what: "boundary trace" });
        }
        Ok(Self { x1_min, h, samples })
    }

    /// Samples `g` on `n` nodes covering `[a, b]` including both ends.
    pub fn from_fn<F: Fn(f64) -> f64>(a: f64, b: f64, n: usize, g: F) -> Result<Self> {
        if n < 2 || !(b > a) {
            return Err(SqgError::InvalidGrid("trace needs n >= 2 nodes on a > b".into()));
        }
        let h = (b - a) / (n - 1) as f64;
        Self::new(a, h, (0..n).map(|k| g(a + k as f64 * h)).collect())
    }

    /// One-sided second difference on the boundary row. Because the boundary
    /// row vanishes this is `(-5 f1 + 4 f2 - f3) / h^2`.
    pub fn from_field(theta: &ScalarField) -> Result<Self> {
        let d = derivative(theta.field(), MultiIndex::new(0, 2))?;
        Self::new(theta.grid.x1_min, theta.grid.h, d.row(0).to_vec())
    }

    pub fn x1(&self, k: usize) -> f64 {
        self.x1_min + k as f64 * self.h
    }

    /// `x1`-derivative by central differences (one-sided at the ends).
    pub fn derivative(&self) -> Vec<f64> {
        let n = self.samples.len();
        let s = &self.samples;
        (0..n)
            .map(|k| {
                if n < 2 {
                    0.0
                } else if k == 0 {
                    (s[1] - s[0]) / self.h
                } else if k == n - 1 {
                    (s[n - 1] - s[n - 2]) / self.h
                } else {
                    (s[k + 1] - s[k - 1]) / (2.0 * self.h)
                }
            })
            .collect()
    }

    /// `(||g||_p^p + ||g'||_p^p)^(1/p)` on the line.
    pub fn w1p_norm(&self, p: f64) -> f64 {
        let d = self.derivative();
        let s: f64 = self
            .samples
            .iter()
            .chain(d.iter())
            .map(|v| v.abs().powf(p))
            .sum();
        (s * self.h).powf(1.0 / p)
    }
}

/// `H_eps[theta](x) = int x2 / ((x1 - y1)^2 + x2^2 + eps^2)^{3/2} g(y1) dy1`
/// by the trapezoid rule on the trace samples.
pub fn h_operator(trace: &BoundaryTrace, targets: &[Point], epsilon: f64) -> Result<Vec<f64>> {
    h_operator_with(trace, targets, epsilon, Exec::default())
}

pub fn h_operator_with(
    trace: &BoundaryTrace,
    targets: &[Point],
    epsilon: f64,
    exec: Exec,
) -> Result<Vec<f64>> {
    if let Some((index, p)) = targets.iter().enumerate().find(|(_, p)| !(p.x2 > 0.0)) {
        return Err(SqgError::TargetNotInterior { index, x2: p.x2 });
    }
    let n = trace.samples.len();
    let nonzero: Vec<usize> = (0..n).filter(|&k| trace.samples[k] != 0.0).collect();
    let e2 = epsilon * epsilon;
    Ok(par::map_indices(exec, targets.len(), |t| {
        let x = targets[t];
        let c = x.x2 * x.x2 + e2;
        let mut acc = 0.0;
        for &k in &nonzero {
            let s = x.x1 - trace.x1(k);
            let r2 = s * s + c;
            let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
            acc += w * trace.samples[k] / (r2 * r2.sqrt());
        }
        acc * x.x2 * trace.h
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_trace_and_boundary_targets() {
        let t = BoundaryTrace::from_fn(-1.0, 1.0, 101, |_| 0.0).unwrap();
        let v = h_operator(&t, &[Point::new(0.0, 0.5), Point::new(3.0, 2.0)], 0.0).unwrap();
        assert_eq!(v, vec![0.0, 0.0]);
        assert_eq!(
            h_operator(&t, &[Point::new(0.0, 1.0), Point::new(0.0, 0.0)], 0.0),
            Err(SqgError::TargetNotInterior { index: 1, x2: 0.0 })
        );
    }

    #[test]
    fn closed_forms() {
        // int_{-a}^{a} x2 / (s^2 + x2^2)^{3/2} ds = 2a / (x2 sqrt(a^2 + x2^2))
        let t = BoundaryTrace::from_fn(-1.0, 1.0, 4001, |_| 1.0).unwrap();
        let v = h_operator(&t, &[Point::new(0.0, 1.0)], 0.0).unwrap()[0];
        assert!((v - 2f64.sqrt()).abs() / 2f64.sqrt() < 1e-5, "{v}");
        let wide = BoundaryTrace::from_fn(-1000.0, 1000.0, 400_001, |_| 1.0).unwrap();
        let v = h_operator(&wide, &[Point::new(0.0, 1.0)], 0.0).unwrap()[0];
        let exact = 2000.0 / (1000.0f64 * 1000.0 + 1.0).sqrt();
        assert!((v - exact).abs() < 1e-8);
        assert!((v - 2.0).abs() < 1e-5);
    }

    #[test]
    fn trace_of_x2_squared_is_two() {
        let g = crate::field::Grid::half_plane(1.0 / 32.0, 1.0, 0.25).unwrap();
        let f = crate::profiles::Profile::X2Squared { support: 1.0 }.sample(g).unwrap();
        let t = BoundaryTrace::from_field(&f).unwrap();
        assert!((t.samples[g.nx / 2] - 2.0).abs() < 1e-10);
    }
}
