//! Finite-difference derivatives on uniform grids.
//!
//! Fourth-order central stencils away from the edges, second-order
//! one-sided stencils on the rows/columns too close to an edge for the
//! central stencil to fit.

use serde::{Deserialize, Serialize};

use super::{GridField, Parity};
use crate::error::{Result, SqgError};
use crate::par::{self, Exec};

/// Derivative multi-index `(a1, a2)`, i.e. `d1^a1 d2^a2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MultiIndex {
    pub a1: u8,
    pub a2: u8,
}

impl MultiIndex {
    pub const fn new(a1: u8, a2: u8) -> Self {
        Self { a1, a2 }
    }

    pub fn order(self) -> u8 {
        self.a1 + self.a2
    }

    /// All indices with `a1 + a2 == order`, ordered by increasing `a2`.
    pub fn all_of_order(order: u8) -> Vec<MultiIndex> {
        (0..=order).map(|a2| MultiIndex::new(order - a2, a2)).collect()
    }

    /// All indices with `a1 + a2 <= order`.
    pub fn all_up_to(order: u8) -> Vec<MultiIndex> {
        (0..=order).flat_map(MultiIndex::all_of_order).collect()
    }
}

/// How the `x2` derivative is closed at the bottom row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LowerClosure {
    /// Second-order one-sided stencils.
    #[default]
    OneSided,
    /// Central stencils fed by mirrored ghost rows of the given parity.
    Reflect(Parity),
}

const MAX_ORDER: u8 = 3;

// (first offset, coefficients) pairs; the derivative is sum c_m f_{k+m} / h^order.
const CENTRAL: [(isize, &[f64]); 3] = [
    (-2, &[1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0]),
    (
        -2,
        &[-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0],
    ),
    (
        -3,
        &[
            1.0 / 8.0,
            -8.0 / 8.0,
            13.0 / 8.0,
            0.0,
            -13.0 / 8.0,
            8.0 / 8.0,
            -1.0 / 8.0,
        ],
    ),
];

const HALF_WIDTH: [usize; 3] = [2, 2, 3];

// Edge stencils for node k = 0, 1, 2 from the lower edge.
const EDGE_1: [(isize, &[f64]); 2] = [(0, &[-1.5, 2.0, -0.5]), (-1, &[-0.5, 0.0, 0.5])];
const EDGE_2: [(isize, &[f64]); 2] = [(0, &[2.0, -5.0, 4.0, -1.0]), (-1, &[1.0, -2.0, 1.0])];
const EDGE_3: [(isize, &[f64]); 3] = [
    (0, &[-2.5, 9.0, -12.0, 7.0, -1.5]),
    (-1, &[-1.5, 5.0, -6.0, 3.0, -0.5]),
    (-2, &[-0.5, 1.0, 0.0, -1.0, 0.5]),
];

fn edge(order: usize, k: usize) -> (isize, &'static [f64]) {
    match order {
        1 => EDGE_1[k],
        2 => EDGE_2[k],
        _ => EDGE_3[k],
    }
}

#[inline]
fn apply(line: &[f64], k: usize, start: isize, coef: &[f64]) -> f64 {
    let base = k as isize + start;
    coef.iter()
        .enumerate()
        .map(|(m, c)| c * line[(base + m as isize) as usize])
        .sum()
}

/// Upper-edge mirror of a lower-edge stencil.
#[inline]
fn apply_mirrored(line: &[f64], k: usize, start: isize, coef: &[f64], order: usize) -> f64 {
    let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
    let base = k as isize - start;
    sign * coef
        .iter()
        .enumerate()
        .map(|(m, c)| c * line[(base - m as isize) as usize])
        .sum::<f64>()
}

/// Differentiates one line of samples, writing into `out`.
fn diff_line(line: &[f64], out: &mut [f64], order: usize, h: f64, lower: LowerClosure) {
    let n = line.len();
    let w = HALF_WIDTH[order - 1];
    let scale = h.powi(-(order as i32));
    let (cstart, ccoef) = CENTRAL[order - 1];
    match lower {
        LowerClosure::OneSided => {
            for (k, o) in out.iter_mut().enumerate().take(w) {
                let (s, c) = edge(order, k);
                *o = apply(line, k, s, c) * scale;
            }
        }
        LowerClosure::Reflect(parity) => {
            let sign = parity.sign();
            let mut padded = Vec::with_capacity(2 * w + w);
            for m in (1..=w).rev() {
                padded.push(sign * line[m]);
            }
            padded.extend_from_slice(&line[..2 * w]);
            for (k, o) in out.iter_mut().enumerate().take(w) {
                *o = apply(&padded, k + w, cstart, ccoef) * scale;
            }
        }
    }
    for k in w..n - w {
        out[k] = apply(line, k, cstart, ccoef) * scale;
    }
    for m in 0..w {
        let (s, c) = edge(order, m);
        out[n - 1 - m] = apply_mirrored(line, n - 1 - m, s, c, order) * scale;
    }
}

fn min_points(order: usize) -> usize {
    2 * HALF_WIDTH[order - 1] + 1
}

fn check_index(index: MultiIndex) -> Result<()> {
    if index.order() > MAX_ORDER {
        return Err(SqgError::DerivativeOrder {
            order: index.order() as usize,
        });
    }
    Ok(())
}

/// Applies `d1^order` along every row.
fn diff_rows(f: &GridField, order: usize) -> Result<GridField> {
    let g = f.grid;
    if order == 0 {
        return Ok(f.clone());
    }
    if g.nx < min_points(order) {
        return Err(SqgError::InvalidGrid(format!(
            "{} columns are too few for a derivative of order {order}",
            g.nx
        )));
    }
    let mut values = vec![0.0; g.len()];
    par::for_each_chunk_mut(Exec::default(), &mut values, g.nx, |j, out| {
        diff_line(f.row(j), out, order, g.h, LowerClosure::OneSided);
    });
    Ok(GridField { grid: g, values })
}

/// Applies `d2^order` along every column.
fn diff_cols(f: &GridField, order: usize, lower: LowerClosure) -> Result<GridField> {
    let g = f.grid;
    if order == 0 {
        return Ok(f.clone());
    }
    if g.ny < min_points(order) {
        return Err(SqgError::InvalidGrid(format!(
            "{} rows are too few for a derivative of order {order}",
            g.ny
        )));
    }
    let columns = par::map_indices(Exec::default(), g.nx, |i| {
        let line: Vec<f64> = (0..g.ny).map(|j| f.at(i, j)).collect();
        let mut out = vec![0.0; g.ny];
        diff_line(&line, &mut out, order, g.h, lower);
        out
    });
    let mut values = vec![0.0; g.len()];
    for (i, col) in columns.iter().enumerate() {
        for (j, v) in col.iter().enumerate() {
            values[g.idx(i, j)] = *v;
        }
    }
    Ok(GridField { grid: g, values })
}

/// `d1^a1 d2^a2 f` with one-sided stencils at every edge.
pub fn derivative(f: &GridField, index: MultiIndex) -> Result<GridField> {
    derivative_with(f, index, LowerClosure::OneSided)
}

/// Like [`derivative`], choosing the closure used at the bottom row.
///
/// Row derivatives are taken first, so the parity passed to a reflecting
/// closure is the parity of `d1^a1 f` (which equals that of `f`).
pub fn derivative_with(f: &GridField, index: MultiIndex, lower: LowerClosure) -> Result<GridField> {
    check_index(index)?;
    let along_rows = diff_rows(f, index.a1 as usize)?;
    diff_cols(&along_rows, index.a2 as usize, lower)
}
