//! The logarithmic boundary singularity of the velocity and its measurable
//! consequences.

use serde::{Deserialize, Serialize};

use super::trace::h_operator_with;
use super::{velocity_at_points, BiotSavart, BoundaryTrace, KernelParams};
use crate::error::{Result, SqgError};
use crate::field::{
    derivative, lp_norm_masked, EdgeRule, GridField, Interpolator, LowerRule, MultiIndex,
    ScalarField,
};
use crate::geometry::Point;
use crate::par::Exec;
use crate::quadrature::adaptive_gauss_kronrod;
use crate::stats::fit_line;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogIdentity {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

/// `int_{|x1-y1| <= 4L} dy1 / sqrt((x1-y1)^2 + x2^2) + 2 log x2` against
/// `2 log(4L + sqrt(16L^2 + x2^2))`.
pub fn log_identity_check(l: f64, _x1: f64, x2: f64) -> LogIdentity {
    // In the variable s = y1 - x1 the integrand no longer depends on x1.
    let f = |s: f64| 1.0 / (s * s + x2 * x2).sqrt();
    let tol = 1e-14;
    let left = adaptive_gauss_kronrod(f, -4.0 * l, 0.0, tol).value;
    let right = adaptive_gauss_kronrod(f, 0.0, 4.0 * l, tol).value;
    let lhs = left + right + 2.0 * x2.ln();
    let rhs = 2.0 * (4.0 * l + (16.0 * l * l + x2 * x2).sqrt()).ln();
    LogIdentity {
        lhs,
        rhs,
        gap: (lhs - rhs).abs(),
    }
}

/// A ratio of two norm estimates; degenerate when the denominator vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ratio {
    pub value: f64,
    pub numerator: f64,
    pub denominator: f64,
    pub degenerate: bool,
}

impl Ratio {
    pub fn new(numerator: f64, denominator: f64) -> Self {
        let degenerate = !(denominator > f64::MIN_POSITIVE) || !denominator.is_finite();
        Self {
            value: if degenerate {
                f64::NAN
            } else {
                numerator / denominator
            },
            numerator,
            denominator,
            degenerate,
        }
    }

    /// `|a/b - 1|` for two non-degenerate ratios.
    pub fn relative_change(&self, finer: &Ratio) -> f64 {
        (finer.value / self.value - 1.0).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularFit {
    pub x2: Vec<f64>,
    pub d22u1: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `4 d2^2 theta(x1, 0)`, the predicted slope.
    pub expected_slope: f64,
    /// `max |d2^2 u1 - 4 d2^2 theta log x2|` over the probes.
    pub remainder_bound: f64,
}

pub const MIN_PROBES: usize = 6;

/// Regresses `d2^2 u1` against `log x2` along a vertical probe segment.
///
/// `d2^2 u1` is the fourth-order second difference, with spacing `h`, of the
/// pointwise velocity sum, so it differences exactly what the grid
/// velocity would hold on a grid through the probe.
pub fn singular_decomposition(
    theta: &ScalarField,
    params: KernelParams,
    probes: &[Point],
    exec: Exec,
) -> Result<SingularFit> {
    if probes.len() < MIN_PROBES {
        return Err(SqgError::TooFewProbes {
            got: probes.len(),
            need: MIN_PROBES,
        });
    }
    let x1 = probes[0].x1;
    let h = theta.grid.h;
    if probes.iter().any(|p| p.x1 != x1) {
        return Err(SqgError::InvalidProbes("probes must share one x1".into()));
    }
    if let Some(p) = probes.iter().find(|p| !(p.x2 >= 2.0 * h)) {
        return Err(SqgError::InvalidProbes(format!(
            "probe height {} is below the stencil reach 2h",
            p.x2
        )));
    }
    let mut pts = Vec::with_capacity(5 * probes.len());
    for p in probes {
        for o in -2..=2 {
            pts.push(Point::new(x1, p.x2 + o as f64 * h));
        }
    }
    let u = velocity_at_points(theta, params, &pts, exec)?;
    let d22u1: Vec<f64> = u
        .chunks(5)
        .map(|c| {
            (-c[0].x1 + 16.0 * c[1].x1 - 30.0 * c[2].x1 + 16.0 * c[3].x1 - c[4].x1) / (12.0 * h * h)
        })
        .collect();
    let d22 = derivative(theta.field(), MultiIndex::new(0, 2))?;
    let interp = Interpolator::new(&d22, LowerRule::Shift, EdgeRule::Shift);
    let x2: Vec<f64> = probes.iter().map(|p| p.x2).collect();
    let logs: Vec<f64> = x2.iter().map(|v| v.ln()).collect();
    let fit = fit_line(&logs, &d22u1)
        .ok_or_else(|| SqgError::InvalidProbes("probe heights must differ".into()))?;
    let remainder_bound = probes
        .iter()
        .zip(&d22u1)
        .map(|(p, v)| (v - 4.0 * interp.eval(*p) * p.x2.ln()).abs())
        .fold(0.0f64, f64::max);
    Ok(SingularFit {
        x2,
        d22u1,
        slope: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        expected_slope: 4.0 * interp.eval(Point::new(x1, 0.0)),
        remainder_bound,
    })
}

/// Geometric probe heights `x2_min * q^k` spanning `[x2_min, x2_max]`.
pub fn geometric_probes(x1: f64, x2_min: f64, x2_max: f64, count: usize) -> Vec<Point> {
    let ratio = if count > 1 {
        (x2_max / x2_min).powf(1.0 / (count - 1) as f64)
    } else {
        1.0
    };
    (0..count)
        .map(|k| Point::new(x1, x2_min * ratio.powi(k as i32)))
        .collect()
}

const AWAY_ROWS: usize = 4;

/// Nodes at height `>= 4h`.
fn away_targets(g: &crate::field::Grid) -> Vec<Point> {
    let mut pts = Vec::with_capacity(g.nx * (g.ny - AWAY_ROWS));
    for j in AWAY_ROWS..g.ny {
        for i in 0..g.nx {
            pts.push(g.point(i, j));
        }
    }
    pts
}

/// `||d2^3 u1 - 2 H[theta]||_p / ||d2^3 theta||_p` on `x2 >= 4h`, with the
/// mollified `H` matching the kernel.
pub fn third_derivative_residual(
    theta: &ScalarField,
    params: KernelParams,
    p: f64,
    exec: Exec,
) -> Result<Ratio> {
    let g = theta.grid;
    let u = BiotSavart::new(g, params)?.apply(theta, exec)?;
    let d3u = derivative(&u.u1, MultiIndex::new(0, 3))?;
    let d3t = derivative(theta.field(), MultiIndex::new(0, 3))?;
    let trace = BoundaryTrace::from_field(theta)?;
    let hv = h_operator_with(&trace, &away_targets(&g), params.epsilon, exec)?;
    let mut diff = GridField::zeros(g);
    for j in AWAY_ROWS..g.ny {
        for i in 0..g.nx {
            let k = g.idx(i, j);
            diff.values[k] = d3u.values[k] - 2.0 * hv[(j - AWAY_ROWS) * g.nx + i];
        }
    }
    let mask = |_: usize, j: usize| j >= AWAY_ROWS;
    Ok(Ratio::new(
        lp_norm_masked(&diff, p, mask),
        lp_norm_masked(&d3t, p, mask),
    ))
}

/// `||x2 H[theta]||_{L^{2p}} / ||d2^2 theta(., 0)||_{W^{1,p}}`.
pub fn h2p_ratio(theta: &ScalarField, epsilon: f64, p: f64, exec: Exec) -> Result<Ratio> {
    let g = theta.grid;
    let trace = BoundaryTrace::from_field(theta)?;
    let targets: Vec<Point> = (1..g.ny)
        .flat_map(|j| (0..g.nx).map(move |i| g.point(i, j)))
        .collect();
    let hv = h_operator_with(&trace, &targets, epsilon, exec)?;
    let mut weighted = GridField::zeros(g);
    for (n, t) in targets.iter().enumerate() {
        weighted.values[g.nx + n] = t.x2 * hv[n];
    }
    Ok(Ratio::new(
        lp_norm_masked(&weighted, 2.0 * p, |_, _| true),
        trace.w1p_norm(p),
    ))
}
