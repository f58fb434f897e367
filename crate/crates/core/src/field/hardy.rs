use super::{
    derivative, derivative_with, EdgeRule, GridField, Interpolator, LowerClosure, LowerRule,
    MultiIndex, Parity, ScalarField,
};
use crate::error::Result;
use crate::quadrature::gauss_legendre_8;

/// Rows below this many cells use the vertical-segment representation.
const DIRECT_FROM_ROW: usize = 4;

/// `d1 f / x2`, evaluated without dividing by small heights.
///
/// Near the boundary the quotient is written as `int_0^1 d12 f(x1, x2 s) ds`
/// (valid because `f` vanishes on the boundary) and integrated with an
/// 8-point Gauss rule along the column; the boundary row holds `d12 f`.
pub fn hardy_quotient(f: &ScalarField) -> Result<GridField> {
    let g = f.grid;
    let d1 = derivative(f.field(), MultiIndex::new(1, 0))?;
    // d1 f is odd in x2, so d12 f is even and closes with odd ghosts.
    let d12 = derivative_with(&d1, MultiIndex::new(0, 1), LowerClosure::Reflect(Parity::Odd))?;
    let column = Interpolator::new(&d12, LowerRule::Even, EdgeRule::Shift);
    let mut values = d1.values.clone();
    for j in 0..g.ny {
        let x2 = g.x2(j);
        for i in 0..g.nx {
            let k = g.idx(i, j);
            values[k] = if j >= DIRECT_FROM_ROW {
                d1.values[k] / x2
            } else if j == 0 {
                d12.values[k]
            } else {
                gauss_legendre_8(|s| column.eval_on_column(i, x2 * s), 0.0, 1.0)
            };
        }
    }
    Ok(GridField { grid: g, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;

    #[test]
    fn bilinear_datum_gives_its_coefficient() {
        let g = Grid::half_plane(1.0 / 64.0, 0.5, 0.1).unwrap();
        let a = 1.7;
        let f = ScalarField::from_fn(g, 0.5, |p| a * p.x1 * p.x2).unwrap();
        let q = hardy_quotient(&f).unwrap();
        let i0 = g.nx / 2;
        for j in 0..8 {
            assert!((q.at(i0, j) - a).abs() < 1e-9, "row {j}: {}", q.at(i0, j));
        }
    }
}
