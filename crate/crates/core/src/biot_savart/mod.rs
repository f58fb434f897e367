//! Velocity from the reflected, mollified Biot–Savart law.
//!
//! The half-plane kernel `K(x - y) - K(x - ybar)` applied to `theta` equals the
//! full-plane kernel applied to the odd extension of `theta`, which is how
//! every summation path below is organised. With
//! `K_eps(d) = (d2, -d1) / (|d|^2 + eps^2)^{3/2}` the discrete velocity is
//! `u(x) = sum_y K_eps(x - y) thetabar(y) h^2` over the mirrored grid.

mod direct;
mod fft;
mod singular;
mod trace;

pub use singular::{
    geometric_probes, h2p_ratio, log_identity_check, singular_decomposition,
    third_derivative_residual, LogIdentity, Ratio, SingularFit, MIN_PROBES,
};
pub use trace::{h_operator, h_operator_with, BoundaryTrace};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SqgError};
use crate::field::{derivative, Grid, GridField, MultiIndex, ScalarField};
use crate::geometry::Point;
use crate::par::Exec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    #[default]
    Trapezoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PvMode {
    /// Regularised kernel, `eps > 0`.
    Mollified,
    /// Singular kernel with the self-cell removed, `eps = 0`.
    Punctured,
}

/// Summation strategy. Both evaluate the same discrete sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Summation {
    /// Row-major direct summation against a precomputed kernel table.
    #[default]
    Direct,
    /// Zero-padded FFT convolution.
    Fft,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub epsilon: f64,
    pub quadrature: Quadrature,
    pub pv_mode: PvMode,
    pub summation: Summation,
}

impl KernelParams {
    pub fn mollified(epsilon: f64) -> Self {
        Self {
            epsilon,
            quadrature: Quadrature::Trapezoid,
            pv_mode: PvMode::Mollified,
            summation: Summation::Direct,
        }
    }

    pub fn punctured() -> Self {
        Self {
            epsilon: 0.0,
            pv_mode: PvMode::Punctured,
            ..Self::mollified(0.0)
        }
    }

    pub fn with_summation(self, summation: Summation) -> Self {
        Self { summation, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        match self.pv_mode {
            PvMode::Mollified if !(self.epsilon > 0.0 && self.epsilon.is_finite()) => Err(
                SqgError::InvalidKernel(format!("mollified kernel needs eps > 0, got {}", self.epsilon)),
            ),
            PvMode::Punctured if self.epsilon != 0.0 => Err(SqgError::InvalidKernel(format!(
                "punctured kernel needs eps = 0, got {}",
                self.epsilon
            ))),
            _ => Ok(()),
        }
    }

    /// `K_eps(d)` (no quadrature weight).
    #[inline]
    pub fn kernel(&self, d: Point) -> Point {
        let r2 = d.x1 * d.x1 + d.x2 * d.x2 + self.epsilon * self.epsilon;
        if r2 == 0.0 {
            return Point::default();
        }
        let w = 1.0 / (r2 * r2.sqrt());
        Point::new(d.x2 * w, -d.x1 * w)
    }
}

/// Gridded velocity on the grid of its source field.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    pub grid: Grid,
    pub u1: GridField,
    pub u2: GridField,
    pub params: KernelParams,
    /// `max |u2|` on the boundary row before it was set to zero.
    pub slip_residual: f64,
    /// Set when `eps < h/8`: the quadrature under-resolves the mollifier core.
    pub under_resolved: bool,
}

impl VelocityField {
    pub fn zeros(grid: Grid, params: KernelParams) -> Self {
        Self {
            grid,
            u1: GridField::zeros(grid),
            u2: GridField::zeros(grid),
            params,
            slip_residual: 0.0,
            under_resolved: false,
        }
    }

    pub fn max_speed(&self) -> f64 {
        self.u1
            .values
            .iter()
            .zip(&self.u2.values)
            .fold(0.0f64, |m, (a, b)| m.max(a.hypot(*b)))
    }

    /// `max |u2|` on the boundary row (zero after construction).
    pub fn boundary_u2_max(&self) -> f64 {
        self.u2.row(0).iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Second-order central divergence. The boundary row uses the odd
    /// reflection of `u2`; the outer frame of nodes is left at zero.
    pub fn divergence(&self) -> GridField {
        let g = self.grid;
        let mut out = GridField::zeros(g);
        let inv = 0.5 / g.h;
        for j in 0..g.ny - 1 {
            for i in 1..g.nx - 1 {
                let d1 = (self.u1.at(i + 1, j) - self.u1.at(i - 1, j)) * inv;
                let below = if j == 0 {
                    -self.u2.at(i, 1)
                } else {
                    self.u2.at(i, j - 1)
                };
                let d2 = (self.u2.at(i, j + 1) - below) * inv;
                out.values[g.idx(i, j)] = d1 + d2;
            }
        }
        out
    }

    /// Partial derivatives `[d1 u1, d2 u1, d1 u2, d2 u2]`.
    pub fn gradient(&self) -> Result<[GridField; 4]> {
        let d1 = MultiIndex::new(1, 0);
        let d2 = MultiIndex::new(0, 1);
        Ok([
            derivative(&self.u1, d1)?,
            derivative(&self.u1, d2)?,
            derivative(&self.u2, d1)?,
            derivative(&self.u2, d2)?,
        ])
    }

    /// `max_x |grad u(x)|_F`.
    pub fn grad_max(&self) -> Result<f64> {
        let g = self.gradient()?;
        let mut m: f64 = 0.0;
        for k in 0..self.grid.len() {
            let f = g.iter().map(|d| d.values[k] * d.values[k]).sum::<f64>().sqrt();
            m = m.max(f);
        }
        Ok(m)
    }
}

/// A velocity operator bound to one grid and one kernel, caching the kernel
/// table (direct) or its transform (FFT).
pub struct BiotSavart {
    grid: Grid,
    params: KernelParams,
    engine: Engine,
}

enum Engine {
    Direct(direct::KernelTable),
    Fft(fft::FftConvolver),
}

impl BiotSavart {
    pub fn new(grid: Grid, params: KernelParams) -> Result<Self> {
        params.validate()?;
        if !grid.is_half_plane() {
            return Err(SqgError::InvalidGrid("velocity needs a half-plane grid".into()));
        }
        let engine = match params.summation {
            Summation::Direct => Engine::Direct(direct::KernelTable::new(grid, &params)),
            Summation::Fft => Engine::Fft(fft::FftConvolver::new(grid, &params)),
        };
        Ok(Self {
            grid,
            params,
            engine,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn params(&self) -> KernelParams {
        self.params
    }

    pub fn apply(&self, theta: &ScalarField, exec: Exec) -> Result<VelocityField> {
        if theta.grid != self.grid {
            return Err(SqgError::InvalidGrid(
                "field grid differs from the operator grid".into(),
            ));
        }
        let source = OddSource::new(theta);
        let (u1, mut u2) = match &self.engine {
            Engine::Direct(t) => t.apply(&source, exec),
            Engine::Fft(c) => c.apply(&source, exec),
        };
        let nx = self.grid.nx;
        let slip_residual = u2[..nx].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for v in &mut u2[..nx] {
            *v = 0.0;
        }
        let u1 = GridField::new(self.grid, u1)?;
        let u2 = GridField::new(self.grid, u2)?;
        if !(u1.all_finite() && u2.all_finite()) {
            return Err(SqgError::NonFinite { what: "velocity" });
        }
        Ok(VelocityField {
            grid: self.grid,
            u1,
            u2,
            params: self.params,
            slip_residual,
            under_resolved: self.params.pv_mode == PvMode::Mollified
                && self.params.epsilon < self.grid.h / 8.0,
        })
    }
}

/// Velocity of `theta` on its own grid.
pub fn velocity(theta: &ScalarField, params: KernelParams) -> Result<VelocityField> {
    velocity_with(theta, params, Exec::default())
}

pub fn velocity_with(theta: &ScalarField, params: KernelParams, exec: Exec) -> Result<VelocityField> {
    BiotSavart::new(theta.grid, params)?.apply(theta, exec)
}

/// Direct evaluation of the discrete sum at arbitrary points.
pub fn velocity_at_points(
    theta: &ScalarField,
    params: KernelParams,
    points: &[Point],
    exec: Exec,
) -> Result<Vec<Point>> {
    params.validate()?;
    let source = OddSource::new(theta);
    let g = theta.grid;
    let w = g.h * g.h;
    Ok(crate::par::map_indices(exec, points.len(), |n| {
        let x = points[n];
        let mut acc = [0.0f64; 2];
        for row in &source.rows {
            let y2 = row.x2;
            for (k, &v) in row.values.iter().enumerate() {
                let y = Point::new(g.x1(row.k0 + k), y2);
                let kern = params.kernel(x - y);
                acc[0] += kern.x1 * v;
                acc[1] += kern.x2 * v;
            }
        }
        Point::new(acc[0] * w, acc[1] * w)
    }))
}

/// Nonzero rows of the odd extension, each trimmed to its nonzero range.
pub(crate) struct OddSource {
    pub rows: Vec<SourceRow>,
}

pub(crate) struct SourceRow {
    /// Mirrored-grid row index `l + ny - 1`, `l` in `-(ny-1)..=ny-1`.
    pub s: usize,
    pub x2: f64,
    pub k0: usize,
    pub values: Vec<f64>,
}

impl OddSource {
    pub fn new(theta: &ScalarField) -> Self {
        let g = theta.grid;
        let mut rows = Vec::new();
        let ny = g.ny as isize;
        for l in -(ny - 1)..ny {
            if l == 0 {
                continue;
            }
            let (j, sign) = if l < 0 { ((-l) as usize, -1.0) } else { (l as usize, 1.0) };
            let row = theta.row(j);
            let Some(first) = row.iter().position(|v| *v != 0.0) else {
                continue;
            };
            let last = row.iter().rposition(|v| *v != 0.0).unwrap();
            rows.push(SourceRow {
                s: (l + ny - 1) as usize,
                x2: l as f64 * g.h,
                k0: first,
                values: row[first..=last].iter().map(|v| sign * v).collect(),
            });
        }
        Self { rows }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::Profile;

    fn small() -> (Grid, ScalarField) {
        let g = Grid::half_plane(1.0 / 32.0, 0.5, 0.25).unwrap();
        let f = Profile::GaussianXy {
            a: 1.0,
            b: 0.3,
            support: 0.5,
        }
        .sample(g)
        .unwrap();
        (g, f)
    }

    #[test]
    fn params_are_validated() {
        assert!(KernelParams::mollified(0.0).validate().is_err());
        assert!(KernelParams::punctured().validate().is_ok());
        let mut p = KernelParams::punctured();
        p.epsilon = 0.1;
        assert!(p.validate().is_err());
    }

    #[test]
    fn zero_theta_gives_zero_velocity() {
        let g = Grid::half_plane(1.0 / 16.0, 0.5, 0.25).unwrap();
        let f = ScalarField::zeros(g, 0.5).unwrap();
        let u = velocity(&f, KernelParams::mollified(0.125)).unwrap();
        assert_eq!(u.max_speed(), 0.0);
        assert_eq!(u.slip_residual, 0.0);
    }

    #[test]
    fn direct_fft_and_pointwise_paths_agree() {
        let (g, f) = small();
        let p = KernelParams::mollified(2.0 * g.h);
        let a = velocity(&f, p).unwrap();
        let b = velocity(&f, p.with_summation(Summation::Fft)).unwrap();
        let scale = a.max_speed();
        assert!(scale > 0.0);
        for k in 0..g.len() {
            assert!((a.u1.values[k] - b.u1.values[k]).abs() < 1e-12 * scale);
            assert!((a.u2.values[k] - b.u2.values[k]).abs() < 1e-12 * scale);
        }
        let pts: Vec<Point> = [(3, 1), (20, 7), (31, 12)]
            .iter()
            .map(|&(i, j)| g.point(i, j))
            .collect();
        let c = velocity_at_points(&f, p, &pts, Exec::Sequential).unwrap();
        for (n, &(i, j)) in [(3, 1), (20, 7), (31, 12)].iter().enumerate() {
            assert!((c[n].x1 - a.u1.at(i, j)).abs() < 1e-13 * scale);
            assert!((c[n].x2 - a.u2.at(i, j)).abs() < 1e-13 * scale);
        }
    }

    #[test]
    fn sequential_and_parallel_agree_bitwise() {
        let (g, f) = small();
        for s in [Summation::Direct, Summation::Fft] {
            let p = KernelParams::mollified(2.0 * g.h).with_summation(s);
            let a = velocity_with(&f, p, Exec::Sequential).unwrap();
            let b = velocity_with(&f, p, Exec::Parallel).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn reflection_symmetry() {
        let (g, f) = small();
        let p = KernelParams::mollified(2.0 * g.h);
        let pts = [Point::new(0.1, 0.2), Point::new(-0.3, 0.05)];
        let mirrored: Vec<Point> = pts.iter().map(|q| q.reflect()).collect();
        let a = velocity_at_points(&f, p, &pts, Exec::Sequential).unwrap();
        let b = velocity_at_points(&f, p, &mirrored, Exec::Sequential).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((u.x1 - v.x1).abs() < 1e-14);
            assert!((u.x2 + v.x2).abs() < 1e-14);
        }
    }

    #[test]
    fn under_resolution_is_flagged() {
        let (g, f) = small();
        let u = velocity(&f, KernelParams::mollified(g.h / 10.0)).unwrap();
        assert!(u.under_resolved);
        let u = velocity(&f, KernelParams::mollified(g.h)).unwrap();
        assert!(!u.under_resolved);
    }
}
