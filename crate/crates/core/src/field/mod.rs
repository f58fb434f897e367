//! Gridded scalar fields on the closed upper half-plane.
//!
//! Samples are stored row-major: index `j * nx + i` holds the value at
//! `(x1_min + i h, x2_min + j h)`. Half-plane fields have `x2_min = 0`, so row
//! `j = 0` lies on the boundary.

mod hardy;
mod interp;
mod norm;
mod snapshot;
mod stencil;

pub use hardy::hardy_quotient;
pub use interp::{EdgeRule, Interpolator, LowerRule};
pub use norm::{
    holder_norm, holder_seminorm, lp_norm_masked, norm, wkp_norm, NormKind, NormReport,
    NormRequest,
};
pub(crate) use norm::pair_sup;
pub use snapshot::{parse_snapshot, read_snapshot, snapshot_to_string, write_snapshot};
pub use stencil::{derivative, derivative_with, LowerClosure, MultiIndex};

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SqgError};
use crate::geometry::Point;

/// Minimum number of cells between the support ball and the grid edge.
pub const MIN_MARGIN_CELLS: f64 = 4.0;

/// Uniform Cartesian grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub x1_min: f64,
    pub x2_min: f64,
}

impl Grid {
    /// Half-plane grid centred on `x1 = 0`, covering `B(0; L)` plus `margin`.
    pub fn half_plane(h: f64, support_radius: f64, margin: f64) -> Result<Grid> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(SqgError::InvalidGrid(format!("spacing h = {h} must be positive")));
        }
        if !(support_radius > 0.0) {
            return Err(SqgError::InvalidGrid(format!(
                "support radius {support_radius} must be positive"
            )));
        }
        if margin < MIN_MARGIN_CELLS * h * (1.0 - 1e-12) {
            return Err(SqgError::InvalidGrid(format!(
                "margin {margin} is below {MIN_MARGIN_CELLS} cells of width {h}"
            )));
        }
        let half = ((support_radius + margin) / h - 1e-9).ceil() as usize;
        Ok(Grid {
            nx: 2 * half + 1,
            ny: half + 1,
            h,
            x1_min: -(half as f64) * h,
            x2_min: 0.0,
        })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn x1(&self, i: usize) -> f64 {
        self.x1_min + i as f64 * self.h
    }

    #[inline]
    pub fn x2(&self, j: usize) -> f64 {
        self.x2_min + j as f64 * self.h
    }

    #[inline]
    pub fn point(&self, i: usize, j: usize) -> Point {
        Point::new(self.x1(i), self.x2(j))
    }

    pub fn x1_max(&self) -> f64 {
        self.x1(self.nx - 1)
    }

    pub fn x2_max(&self) -> f64 {
        self.x2(self.ny - 1)
    }

    pub fn contains(&self, p: Point) -> bool {
        let tol = 1e-9 * self.h;
        p.x1 >= self.x1_min - tol
            && p.x1 <= self.x1_max() + tol
            && p.x2 >= self.x2_min - tol
            && p.x2 <= self.x2_max() + tol
    }

    /// Radius of the largest origin-centred half-disc inside the grid.
    pub fn half_width(&self) -> f64 {
        (-self.x1_min).min(self.x1_max()).min(self.x2_max())
    }

    /// Same extent at half the spacing.
    pub fn refined(&self) -> Grid {
        Grid {
            nx: 2 * self.nx - 1,
            ny: 2 * self.ny - 1,
            h: 0.5 * self.h,
            x1_min: self.x1_min,
            x2_min: self.x2_min,
        }
    }

    /// Grid of the reflected domain: rows `-(ny-1) ..= ny-1`.
    pub fn mirrored(&self) -> Grid {
        Grid {
            nx: self.nx,
            ny: 2 * self.ny - 1,
            h: self.h,
            x1_min: self.x1_min,
            x2_min: -self.x2_max(),
        }
    }

    pub fn is_half_plane(&self) -> bool {
        self.x2_min == 0.0
    }
}

/// Raw samples on a grid with no structural invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(SqgError::InvalidGrid(format!(
                "{} samples for a {}x{} grid",
                values.len(),
                grid.nx,
                grid.ny
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn<F: Fn(Point) -> f64>(grid: Grid, f: F) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                values.push(f(grid.point(i, j)));
            }
        }
        Self { grid, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    pub fn row(&self, j: usize) -> &[f64] {
        let nx = self.grid.nx;
        &self.values[j * nx..(j + 1) * nx]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn zip_map<F: Fn(f64, f64) -> f64>(&self, other: &GridField, f: F) -> GridField {
        assert_eq!(self.grid, other.grid);
        GridField {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> GridField {
        GridField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Reflection of a half-plane field to the mirrored grid.
    ///
    /// Odd parity requires a vanishing boundary row; see
    /// [`GridField::reflect_piecewise`] for fields with a jump at the seam.
    pub fn reflect(&self, parity: Parity) -> Result<GridField> {
        if parity == Parity::Odd {
            let worst = self.row(0).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if worst > 0.0 {
                return Err(SqgError::BoundaryViolation {
                    max_violation: worst,
                });
            }
        }
        Ok(self.reflect_piecewise(parity))
    }

    /// Reflection that keeps the upper one-sided limit on the seam row.
    pub fn reflect_piecewise(&self, parity: Parity) -> GridField {
        assert!(self.grid.is_half_plane(), "reflection needs a half-plane grid");
        let grid = self.grid.mirrored();
        let nx = grid.nx;
        let ny = self.grid.ny;
        let sign = parity.sign();
        let mut values = Vec::with_capacity(grid.len());
        for r in 0..grid.ny {
            if r < ny - 1 {
                let src = self.row(ny - 1 - r);
                values.extend(src.iter().map(|&v| sign * v));
            } else {
                values.extend_from_slice(self.row(r + 1 - ny));
            }
        }
        debug_assert_eq!(values.len(), nx * grid.ny);
        GridField { grid, values }
    }
}

/// Reflection parity in the `x2` variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Odd,
    Even,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Odd => -1.0,
            Parity::Even => 1.0,
        }
    }

    /// Parity of `d^a` applied to a function of this parity.
    pub fn after_derivative(self, index: MultiIndex) -> Parity {
        if index.a2 % 2 == 0 {
            self
        } else {
            self.flip()
        }
    }

    pub fn flip(self) -> Parity {
        match self {
            Parity::Odd => Parity::Even,
            Parity::Even => Parity::Odd,
        }
    }
}

/// A compactly supported scalar on the half-plane obeying the Dirichlet
/// condition on the boundary row.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    data: GridField,
    support_radius: f64,
}

impl Deref for ScalarField {
    type Target = GridField;
    fn deref(&self) -> &GridField {
        &self.data
    }
}

impl ScalarField {
    /// Validates samples against the boundary, support and margin invariants.
    pub fn new(grid: Grid, values: Vec<f64>, support_radius: f64) -> Result<Self> {
        let data = GridField::new(grid, values)?;
        check_grid_for_support(&grid, support_radius)?;
        if !data.all_finite() {
            return Err(SqgError::NonFinite { what: "scalar field" });
        }
        let worst_boundary = data.row(0).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if worst_boundary > 0.0 {
            return Err(SqgError::BoundaryViolation {
                max_violation: worst_boundary,
            });
        }
        let mut worst_outside: f64 = 0.0;
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                if grid.point(i, j).norm() > support_radius {
                    worst_outside = worst_outside.max(data.at(i, j).abs());
                }
            }
        }
        if worst_outside > 0.0 {
            return Err(SqgError::SupportViolation {
                radius: support_radius,
                max_outside: worst_outside,
            });
        }
        Ok(Self {
            data,
            support_radius,
        })
    }

    /// Samples `f`, clamping the boundary row and everything outside the
    /// support ball to zero.
    pub fn from_fn<F: Fn(Point) -> f64>(grid: Grid, support_radius: f64, f: F) -> Result<Self> {
        check_grid_for_support(&grid, support_radius)?;
        let mut data = GridField::from_fn(grid, |p| {
            if p.x2 <= 0.0 || p.norm() > support_radius {
                0.0
            } else {
                f(p)
            }
        });
        clamp_boundary(&mut data.values, grid.nx);
        if !data.all_finite() {
            return Err(SqgError::NonFinite { what: "scalar field" });
        }
        Ok(Self {
            data,
            support_radius,
        })
    }

    pub fn zeros(grid: Grid, support_radius: f64) -> Result<Self> {
        Self::from_fn(grid, support_radius, |_| 0.0)
    }

    /// Rebuilds from raw samples, enforcing the invariants by clamping.
    pub(crate) fn clamped(grid: Grid, mut values: Vec<f64>, support_radius: f64) -> Self {
        clamp_boundary(&mut values, grid.nx);
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                if grid.point(i, j).norm() > support_radius {
                    values[grid.idx(i, j)] = 0.0;
                }
            }
        }
        Self {
            data: GridField { grid, values },
            support_radius,
        }
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn field(&self) -> &GridField {
        &self.data
    }

    pub fn into_field(self) -> GridField {
        self.data
    }

    /// Largest `|theta|` on the boundary row (zero by construction).
    pub fn boundary_max(&self) -> f64 {
        self.data.row(0).iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Cell-wise translation by `(di, dj)`; `dj >= 0` keeps the boundary row
    /// at zero. Values shifted off the grid are dropped.
    pub fn translated(&self, di: isize, dj: usize, support_radius: f64) -> Result<Self> {
        let g = self.data.grid;
        let mut values = vec![0.0; g.len()];
        for j in 0..g.ny {
            for i in 0..g.nx {
                let ti = i as isize + di;
                let tj = j + dj;
                if ti >= 0 && (ti as usize) < g.nx && tj < g.ny {
                    values[g.idx(ti as usize, tj)] = self.data.at(i, j);
                }
            }
        }
        Self::new(g, values, support_radius)
    }
}

fn clamp_boundary(values: &mut [f64], nx: usize) {
    for v in &mut values[..nx] {
        *v = 0.0;
    }
}

fn check_grid_for_support(grid: &Grid, support_radius: f64) -> Result<()> {
    if !(grid.h > 0.0) {
        return Err(SqgError::InvalidGrid("spacing must be positive".into()));
    }
    if !grid.is_half_plane() {
        return Err(SqgError::InvalidGrid("scalar fields live on x2 >= 0".into()));
    }
    let need = support_radius + MIN_MARGIN_CELLS * grid.h * (1.0 - 1e-9);
    if grid.half_width() < need {
        return Err(SqgError::InvalidGrid(format!(
            "grid half-width {} does not contain B(0; {support_radius}) with a {MIN_MARGIN_CELLS}h margin",
            grid.half_width()
        )));
    }
    Ok(())
}

/// Odd or even reflection of a half-plane field across `x2 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedField {
    pub parity: Parity,
    pub base: ScalarField,
    pub data: GridField,
}

impl ExtendedField {
    /// Value at mirrored-grid row `r`, where `r = ny - 1` is the seam.
    pub fn at_signed(&self, i: usize, j: isize) -> f64 {
        let ny = self.base.grid.ny as isize;
        self.data.at(i, (j + ny - 1) as usize)
    }
}

/// Extends `f` to the full plane with the requested parity.
pub fn extend(f: &ScalarField, parity: Parity) -> Result<ExtendedField> {
    let data = f.data.reflect(parity)?;
    Ok(ExtendedField {
        parity,
        base: f.clone(),
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::half_plane(1.0 / 32.0, 1.0, 0.25).unwrap()
    }

    #[test]
    fn half_plane_layout() {
        let g = grid();
        assert_eq!(g.nx, 81);
        assert_eq!(g.ny, 41);
        assert_eq!(g.x1(40), 0.0);
        assert!((g.x2_max() - 1.25).abs() < 1e-14);
        assert!(Grid::half_plane(0.1, 1.0, 0.2).is_err());
    }

    #[test]
    fn invariants_are_enforced() {
        let g = grid();
        let mut v = vec![0.0; g.len()];
        v[g.idx(40, 0)] = 1e-3;
        match ScalarField::new(g, v, 1.0) {
            Err(SqgError::BoundaryViolation { max_violation }) => assert_eq!(max_violation, 1e-3),
            other => panic!("{other:?}"),
        }
        let mut v = vec![0.0; g.len()];
        v[g.idx(80, 20)] = 1.0;
        assert!(matches!(
            ScalarField::new(g, v, 1.0),
            Err(SqgError::SupportViolation { .. })
        ));
        assert!(ScalarField::zeros(g, 1.3).is_err());
    }

    #[test]
    fn odd_extension_of_square() {
        let g = grid();
        let f = ScalarField::from_fn(g, 1.0, |p| p.x2 * p.x2).unwrap();
        let e = extend(&f, Parity::Odd).unwrap();
        for j in 1..12 {
            let a = j as f64 * g.h;
            assert_eq!(e.at_signed(40, -(j as isize)), -a * a);
            assert_eq!(e.at_signed(40, j as isize), a * a);
        }
    }

    #[test]
    fn odd_reflection_rejects_nonzero_boundary() {
        let g = grid();
        let f = GridField::from_fn(g, |p| 1.0 + p.x1 * 0.0);
        match f.reflect(Parity::Odd) {
            Err(SqgError::BoundaryViolation { max_violation }) => assert_eq!(max_violation, 1.0),
            other => panic!("{other:?}"),
        }
        assert!(f.reflect(Parity::Even).is_ok());
    }
}
