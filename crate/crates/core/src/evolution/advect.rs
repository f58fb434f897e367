use super::flow::{rk4, VelocitySampler};
use crate::error::{Result, SqgError};
use crate::field::{EdgeRule, Interpolator, LowerRule, ScalarField, MIN_MARGIN_CELLS};
use crate::geometry::Point;
use crate::par::{self, Exec};

/// Result of one semi-Lagrangian transport step.
#[derive(Debug, Clone, PartialEq)]
pub struct Advected {
    pub theta: ScalarField,
    /// Characteristic feet that landed below `x2 = 0` and were clamped.
    pub clamped_feet: usize,
}

/// Feet this far below the boundary are attributed to roundoff and are not
/// counted (they are still clamped).
const FOOT_TOLERANCE_CELLS: f64 = 1e-9;

/// `theta(t + dt, x) = theta(t, X(x))` where `X` is the backward RK4 foot of
/// the characteristic through `x` in the frozen velocity.
///
/// The support radius grows by `max_speed * dt`; nodes outside the grown
/// ball and on the boundary row are set to zero.
pub fn advect_field(
    theta: &ScalarField,
    sampler: &dyn VelocitySampler,
    max_speed: f64,
    dt: f64,
    exec: Exec,
) -> Result<Advected> {
    if !(dt >= 0.0 && dt.is_finite()) {
        return Err(SqgError::InvalidTimeStep(format!("dt = {dt} must be finite and >= 0")));
    }
    let g = theta.grid;
    let support = theta.support_radius() + max_speed * dt;
    let half_width = g.half_width();
    if support + MIN_MARGIN_CELLS * g.h > half_width {
        return Err(SqgError::SupportEscaped {
            support,
            half_width,
        });
    }
    let interp = Interpolator::new(theta.field(), LowerRule::Shift, EdgeRule::Zero);
    let tol = FOOT_TOLERANCE_CELLS * g.h;
    let rows = par::map_indices(exec, g.ny, |j| {
        let mut row = vec![0.0; g.nx];
        let mut clamped = 0usize;
        if j == 0 {
            return (row, clamped);
        }
        for (i, v) in row.iter_mut().enumerate() {
            let x = g.point(i, j);
            if x.norm() > support {
                continue;
            }
            let mut foot = rk4(sampler, x, -dt, false);
            if foot.x2 < 0.0 {
                if foot.x2 < -tol {
                    clamped += 1;
                }
                foot = Point::new(foot.x1, 0.0);
            }
            *v = interp.eval(foot);
        }
        (row, clamped)
    });
    let mut values = Vec::with_capacity(g.len());
    let mut clamped_feet = 0;
    for (row, c) in rows {
        values.extend(row);
        clamped_feet += c;
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(SqgError::NonFinite { what: "advected field" });
    }
    Ok(Advected {
        theta: ScalarField::clamped(g, values, support),
        clamped_feet,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;
    use crate::profiles::Profile;

    #[test]
    fn zero_velocity_is_the_identity() {
        let g = Grid::half_plane(1.0 / 32.0, 0.5, 0.25).unwrap();
        let f = Profile::GaussianXy {
            a: 1.0,
            b: 0.5,
            support: 0.5,
        }
        .sample(g)
        .unwrap();
        let out = advect_field(&f, &|_| Point::default(), 0.0, 0.1, Exec::Sequential).unwrap();
        assert_eq!(out.theta, f);
        assert_eq!(out.clamped_feet, 0);
    }

    #[test]
    fn uniform_shift_matches_translated_datum() {
        let mut errs = Vec::new();
        for n in [32.0, 64.0] {
            let h = 1.0 / n;
            let g = Grid::half_plane(h, 0.5, 0.5).unwrap();
            let p = Profile::GaussianX2 { support: 0.5 };
            let f = p.sample(g).unwrap();
            let dt = 0.5 * h;
            let steps = (0.25 / dt).round() as usize;
            let mut cur = f;
            for _ in 0..steps {
                cur = advect_field(&cur, &|_| Point::new(1.0, 0.0), 1.0, dt, Exec::Sequential)
                    .unwrap()
                    .theta;
            }
            let t = steps as f64 * dt;
            let mut err: f64 = 0.0;
            for j in 0..g.ny {
                for i in 0..g.nx {
                    let x = g.point(i, j);
                    err = err.max((cur.at(i, j) - p.eval(Point::new(x.x1 - t, x.x2))).abs());
                }
            }
            errs.push(err / t);
        }
        // Third order per unit time or better.
        assert!(errs[1] < errs[0] / 6.0, "{errs:?}");
    }

    #[test]
    fn support_escape_is_detected() {
        let g = Grid::half_plane(1.0 / 16.0, 0.5, 0.25).unwrap();
        let f = ScalarField::zeros(g, 0.5).unwrap();
        let err = advect_field(&f, &|_| Point::new(1.0, 0.0), 1.0, 0.5, Exec::Sequential);
        assert!(matches!(err, Err(SqgError::SupportEscaped { .. })));
    }
}
