//! Velocity estimates rendered as norm ratios and checked for stability
//! under grid refinement.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::biot_savart::{BiotSavart, KernelParams, Ratio, Summation};
use crate::error::Result;
use crate::field::{
    derivative, holder_norm, lp_norm_masked, pair_sup, wkp_norm, Grid, GridField, MultiIndex,
    ScalarField,
};
use crate::par::Exec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateConfig {
    pub beta: f64,
    pub p: f64,
    pub pair_samples: usize,
    pub seed: u64,
    pub epsilon_over_h: f64,
    pub summation: Summation,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self {
            beta: 0.5,
            p: 2.0,
            pair_samples: 10_000,
            seed: 42,
            epsilon_over_h: 2.0,
            summation: Summation::Fft,
        }
    }
}

/// Allowed relative change of each ratio under `h -> h/2`.
pub const REFINEMENT_TOLERANCE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateSet {
    pub h: f64,
    pub ratios: BTreeMap<String, Ratio>,
}

fn all(_: usize, _: usize) -> bool {
    true
}

/// `(sum_k ||f_k||_p^p)^{1/p}`, or the max for `p = inf`.
fn vector_norm(fields: &[GridField], p: f64) -> f64 {
    let parts = fields.iter().map(|f| lp_norm_masked(f, p, all));
    if p.is_infinite() {
        parts.fold(0.0, f64::max)
    } else {
        parts.map(|v| v.powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

fn derivs(f: &GridField, idx: &[MultiIndex]) -> Result<Vec<GridField>> {
    idx.iter().map(|&a| derivative(f, a)).collect()
}

/// Pointwise `|v|` of a vector field given by components.
fn magnitude(fields: &[GridField]) -> GridField {
    let mut out = GridField::zeros(fields[0].grid);
    for (k, v) in out.values.iter_mut().enumerate() {
        *v = fields.iter().map(|f| f.values[k] * f.values[k]).sum::<f64>().sqrt();
    }
    out
}

/// Every velocity estimate of the half-plane theory, as a ratio of a
/// velocity norm to the controlling norm of `theta`, on one grid.
pub fn velocity_estimates(theta: &ScalarField, cfg: &EstimateConfig, exec: Exec) -> Result<EstimateSet> {
    let g = theta.grid;
    let (beta, p, n, seed) = (cfg.beta, cfg.p, cfg.pair_samples, cfg.seed);
    let params = KernelParams::mollified(cfg.epsilon_over_h * g.h).with_summation(cfg.summation);
    let u = BiotSavart::new(g, params)?.apply(theta, exec)?;
    let t = theta.field();
    let mi = MultiIndex::new;

    let theta_c2 = holder_norm(t, 2, beta, n, seed)?;
    let theta_c1 = holder_norm(t, 1, beta, n, seed)?;
    let theta_w3 = wkp_norm(t, 3, p)?;

    let d1u1 = derivative(&u.u1, mi(1, 0))?;
    let d2u1 = derivative(&u.u1, mi(0, 1))?;
    let first = [mi(1, 0), mi(0, 1)];
    let second = [mi(2, 0), mi(1, 1), mi(0, 2)];
    let third_d1 = [mi(3, 0), mi(2, 1), mi(1, 2)];
    let mut grad = derivs(&u.u1, &first)?;
    grad.extend(derivs(&u.u2, &first)?);
    let grad_inf = magnitude(&grad).max_abs();
    let mut hess = derivs(&u.u1, &second)?;
    hess.extend(derivs(&u.u2, &second)?);
    let mut third = derivs(&u.u1, &third_d1)?;
    third.extend(derivs(&u.u2, &third_d1)?);

    let mut ratios = BTreeMap::new();
    ratios.insert(
        "holder_u2_d1u1".to_string(),
        Ratio::new(
            holder_norm(&u.u2, 2, beta, n, seed)? + holder_norm(&d1u1, 1, beta, n, seed)?,
            theta_c2,
        ),
    );
    ratios.insert(
        "holder_d2u1".to_string(),
        Ratio::new(holder_norm(&d2u1, 0, beta, n, seed)?, theta_c2),
    );
    ratios.insert("lipschitz".to_string(), Ratio::new(grad_inf, theta_c1));
    ratios.insert(
        "sobolev".to_string(),
        Ratio::new(
            grad_inf + vector_norm(&hess, 2.0 * p) + vector_norm(&third, p),
            theta_w3,
        ),
    );

    // Log-Lipschitz modulus of grad d1 u against Lip(grad d1 theta).
    let grad_d1u = {
        let mut v = derivs(&u.u1, &[mi(2, 0), mi(1, 1)])?;
        v.extend(derivs(&u.u2, &[mi(2, 0), mi(1, 1)])?);
        v
    };
    let lip_d1 = derivs(t, &third_d1)?
        .iter()
        .map(|f| f.max_abs())
        .fold(0.0, f64::max);
    let modulus = pair_sup(&g, n, seed, |a, b, d| {
        let diff = grad_d1u
            .iter()
            .map(|f| (f.values[a] - f.values[b]).powi(2))
            .sum::<f64>()
            .sqrt();
        diff / (d * (10.0 + 1.0 / d).ln())
    });
    ratios.insert("log_lipschitz".to_string(), Ratio::new(modulus, lip_d1));

    // Log remainder and its compensated Hölder modulus near the boundary.
    let d22u1 = derivative(&u.u1, mi(0, 2))?;
    let d22t = derivative(t, mi(0, 2))?;
    let mut rem = GridField::zeros(g);
    for j in 1..g.ny {
        let lx2 = g.x2(j).ln();
        for i in 0..g.nx {
            let k = g.idx(i, j);
            rem.values[k] = d22u1.values[k] - 4.0 * d22t.values[k] * lx2;
        }
    }
    ratios.insert(
        "log_remainder".to_string(),
        Ratio::new(lp_norm_masked(&rem, f64::INFINITY, |_, j| j >= 1), theta_c2),
    );
    let strip_rows = ((0.25 * theta.support_radius() / g.h).floor() as usize).clamp(2, g.ny - 1);
    let strip = Grid {
        ny: strip_rows,
        x2_min: g.h,
        ..g
    };
    let off = g.nx;
    let compensated = pair_sup(&strip, n, seed, |a, b, d| {
        let (ka, kb) = (a + off, b + off);
        let base = rem.values[ka] - rem.values[kb];
        let jump = 4.0 * (d22t.values[ka] - d22t.values[kb]);
        let arg = |x2: f64| (2.0 * d + (4.0 * d * d + x2 * x2).sqrt()).ln();
        let xa = g.x2(ka / g.nx);
        let xb = g.x2(kb / g.nx);
        let worse = (base + jump * arg(xa)).abs().max((base + jump * arg(xb)).abs());
        worse / d.powf(beta)
    });
    ratios.insert("log_compensated".to_string(), Ratio::new(compensated, theta_c2));
    Ok(EstimateSet { h: g.h, ratios })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocitySuiteReport {
    pub coarse: EstimateSet,
    pub fine: EstimateSet,
    /// `|fine / coarse - 1|` for ratios finite at both resolutions.
    pub changes: BTreeMap<String, f64>,
    /// Ratios degenerate at either resolution.
    pub degenerate: Vec<String>,
    pub stable: bool,
}

/// [`velocity_estimates`] at `grid` and at its refinement.
pub fn velocity_estimate_suite<F>(sample: F, grid: Grid, cfg: &EstimateConfig, exec: Exec) -> Result<VelocitySuiteReport>
where
    F: Fn(Grid) -> Result<ScalarField>,
{
    let coarse = velocity_estimates(&sample(grid)?, cfg, exec)?;
    let fine = velocity_estimates(&sample(grid.refined())?, cfg, exec)?;
    let mut changes = BTreeMap::new();
    let mut degenerate = Vec::new();
    for (name, c) in &coarse.ratios {
        let f = &fine.ratios[name];
        if c.degenerate || f.degenerate {
            degenerate.push(name.clone());
        } else {
            changes.insert(name.clone(), c.relative_change(f));
        }
    }
    let stable = changes.values().all(|&v| v <= REFINEMENT_TOLERANCE);
    Ok(VelocitySuiteReport {
        coarse,
        fine,
        changes,
        degenerate,
        stable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_datum_is_degenerate_everywhere() {
        let g = Grid::half_plane(1.0 / 16.0, 0.5, 0.25).unwrap();
        let cfg = EstimateConfig {
            pair_samples: 1000,
            ..Default::default()
        };
        let r = velocity_estimate_suite(|g| ScalarField::zeros(g, 0.5), g, &cfg, Exec::default()).unwrap();
        assert_eq!(r.degenerate.len(), r.coarse.ratios.len());
        assert!(r.changes.is_empty());
    }
}
