//! Bicubic (tensor 4-point Lagrange) interpolation of gridded samples.

use super::GridField;
use crate::geometry::Point;

/// Treatment of rows below the bottom edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LowerRule {
    /// Ghost rows `f(x1, -x2) = -f(x1, x2)`.
    Odd,
    /// Ghost rows `f(x1, -x2) = f(x1, x2)`.
    Even,
    /// No ghosts: the stencil is shifted to stay on the grid.
    Shift,
}

/// Treatment of the remaining three edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeRule {
    /// Samples outside the grid are zero (compactly supported data).
    Zero,
    /// The stencil is shifted to stay on the grid.
    Shift,
}

#[derive(Debug, Clone, Copy)]
pub struct Interpolator<'a> {
    field: &'a GridField,
    lower: LowerRule,
    edge: EdgeRule,
}

/// Fractional grid index, snapped to the node when within roundoff so that
/// nodes are reproduced exactly.
#[inline]
fn frac_index(x: f64, origin: f64, h: f64) -> f64 {
    let s = (x - origin) / h;
    let r = s.round();
    if (s - r).abs() < 1e-9 {
        r
    } else {
        s
    }
}

/// Weights of the 4-point Lagrange rule on nodes `start..start+4`, evaluated
/// at fractional index `s`.
#[inline]
fn lagrange4(s: f64, start: isize) -> [f64; 4] {
    let d = [
        s - start as f64,
        s - (start + 1) as f64,
        s - (start + 2) as f64,
        s - (start + 3) as f64,
    ];
    [
        -d[1] * d[2] * d[3] / 6.0,
        d[0] * d[2] * d[3] / 2.0,
        -d[0] * d[1] * d[3] / 2.0,
        d[0] * d[1] * d[2] / 6.0,
    ]
}

impl<'a> Interpolator<'a> {
    pub fn new(field: &'a GridField, lower: LowerRule, edge: EdgeRule) -> Self {
        Self { field, lower, edge }
    }

    #[inline]
    fn sample(&self, i: isize, j: isize) -> f64 {
        let g = &self.field.grid;
        let (j, sign) = if j < 0 {
            match self.lower {
                LowerRule::Odd => (-j, -1.0),
                LowerRule::Even => (-j, 1.0),
                LowerRule::Shift => unreachable!("shifted stencils never leave the grid"),
            }
        } else {
            (j, 1.0)
        };
        if i < 0 || i >= g.nx as isize || j >= g.ny as isize {
            return 0.0;
        }
        sign * self.field.values[j as usize * g.nx + i as usize]
    }

    #[inline]
    fn start_x1(&self, s: f64) -> isize {
        let start = s.floor() as isize - 1;
        match self.edge {
            EdgeRule::Zero => start,
            EdgeRule::Shift => start.clamp(0, self.field.grid.nx as isize - 4),
        }
    }

    #[inline]
    fn start_x2(&self, s: f64) -> isize {
        let mut start = s.floor() as isize - 1;
        if self.edge == EdgeRule::Shift {
            start = start.min(self.field.grid.ny as isize - 4);
        }
        if self.lower == LowerRule::Shift {
            start = start.max(0);
        }
        start
    }

    /// Value at an arbitrary point.
    pub fn eval(&self, p: Point) -> f64 {
        let g = &self.field.grid;
        let s1 = frac_index(p.x1, g.x1_min, g.h);
        let s2 = frac_index(p.x2, g.x2_min, g.h);
        let i0 = self.start_x1(s1);
        let j0 = self.start_x2(s2);
        let w1 = lagrange4(s1, i0);
        let w2 = lagrange4(s2, j0);
        let mut acc = 0.0;
        for (b, wb) in w2.iter().enumerate() {
            let j = j0 + b as isize;
            let mut row = 0.0;
            for (a, wa) in w1.iter().enumerate() {
                row += wa * self.sample(i0 + a as isize, j);
            }
            acc += wb * row;
        }
        acc
    }

    /// Value on grid column `i` at height `x2` (1-D interpolation).
    pub fn eval_on_column(&self, i: usize, x2: f64) -> f64 {
        let g = &self.field.grid;
        let s2 = frac_index(x2, g.x2_min, g.h);
        let j0 = self.start_x2(s2);
        lagrange4(s2, j0)
            .iter()
            .enumerate()
            .map(|(b, w)| w * self.sample(i as isize, j0 + b as isize))
            .sum()
    }
}
