//! Norm inflation at the boundary for the datum `A x1x2 + B x2^2`.
//!
//! Two tracers start at `x = (x1, x2)` and `y = (x1, 0)`; the quotient
//! `Q = (d2^2 theta(Phi(x)) - d2^2 theta(Phi(y))) / x2` grows like
//! `t log(1/x2)` when `A B != 0`, so `theta` leaves `W^{3,inf}` instantly.

use serde::{Deserialize, Serialize};

use crate::biot_savart::KernelParams;
use crate::error::{Result, SqgError};
use crate::evolution::{FlowMap, Simulation, TimeStepConfig};
use crate::field::{derivative, EdgeRule, Grid, GridField, Interpolator, LowerRule, MultiIndex, ScalarField};
use crate::geometry::Point;
use crate::par::Exec;
use crate::profiles::Profile;
use crate::stats::fit_line;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IllposednessConfig {
    pub a: f64,
    pub b: f64,
    /// Radius of the ball on which the datum is exactly `A x1x2 + B x2^2`.
    pub r0: f64,
    pub x2_probes: Vec<f64>,
    pub x1_probe: f64,
    pub t_star: f64,
    /// Grid spacing and margin beyond the support.
    pub h: f64,
    pub margin: f64,
}

pub const MIN_SLOPE_PROBES: usize = 3;

impl IllposednessConfig {
    /// Probes `x2 = 2^-k` for `k` in `k_min..=k_max`, with `x1` equal to the
    /// smallest probe.
    pub fn dyadic(a: f64, b: f64, r0: f64, k_min: i32, k_max: i32, t_star: f64, h: f64) -> Self {
        let x2_probes: Vec<f64> = (k_min..=k_max).map(|k| 2f64.powi(-k)).collect();
        let x1_probe = x2_probes.iter().copied().fold(f64::INFINITY, f64::min);
        Self {
            a,
            b,
            r0,
            x2_probes,
            x1_probe,
            t_star,
            h,
            margin: 0.125 * r0,
        }
    }

    /// Probes geometric in `[x2_min, x2_max]`.
    pub fn geometric(
        a: f64,
        b: f64,
        r0: f64,
        x2_min: f64,
        x2_max: f64,
        count: usize,
        t_star: f64,
        h: f64,
    ) -> Self {
        let ratio = if count > 1 {
            (x2_max / x2_min).powf(1.0 / (count - 1) as f64)
        } else {
            1.0
        };
        Self {
            a,
            b,
            r0,
            x2_probes: (0..count).map(|k| x2_min * ratio.powi(k as i32)).collect(),
            x1_probe: x2_min,
            t_star,
            h,
            margin: 0.125 * r0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SqgError::InvalidExperiment(m));
        if !(self.r0 > 0.0 && self.r0 < 0.5) {
            return bad(format!("r0 = {} must lie in (0, 1/2)", self.r0));
        }
        if ![self.a, self.b].iter().all(|v| v.is_finite()) {
            return bad("coefficients must be finite".into());
        }
        if self.x2_probes.len() < MIN_SLOPE_PROBES {
            return bad(format!("need at least {MIN_SLOPE_PROBES} probes"));
        }
        if self.x1_probe.abs() > self.r0 / 10.0 {
            return bad(format!("|x1| = {} exceeds r0/10", self.x1_probe.abs()));
        }
        for &x2 in &self.x2_probes {
            if !(x2 > 0.0) || self.x1_probe.abs() > x2 {
                return bad(format!("probe x2 = {x2} must be positive and at least |x1|"));
            }
            if Point::new(self.x1_probe, x2).norm() > 0.5 * self.r0 {
                return bad(format!("probe x2 = {x2} leaves the model region B(0; r0/2)"));
            }
        }
        if !(self.t_star >= 0.0 && self.t_star.is_finite()) {
            return bad(format!("t_star = {} must be finite and >= 0", self.t_star));
        }
        if !(self.h > 0.0 && self.margin > 0.0) {
            return bad("h and margin must be positive".into());
        }
        Ok(())
    }

    pub fn datum(&self) -> Profile {
        Profile::Model {
            a: self.a,
            b: self.b,
            r0: self.r0,
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::half_plane(self.h, self.datum().support_radius(), self.margin)
    }

    /// Tracer `2k` starts at `(x1, x2_k)`, tracer `2k + 1` at `(x1, 0)`.
    pub fn tracers(&self) -> Vec<Point> {
        self.x2_probes
            .iter()
            .flat_map(|&x2| [Point::new(self.x1_probe, x2), Point::new(self.x1_probe, 0.0)])
            .collect()
    }

    /// Whether the trajectory bounds apply (they presuppose `A, B > 0`).
    pub fn bounds_apply(&self) -> bool {
        self.a > 0.0 && self.b > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// `1/2 <= Phi2(x) / x2 <= 3/2`.
    HeightRatio,
    /// `|Phi(x) - Phi(y)| <= 2 x2`.
    PairDistance,
    /// `|d1 theta(Phi(x)) - A x2| <= A x2 / 2`.
    FirstDerivative,
    /// `d2^2 theta(Phi(x)) >= B`.
    NormalCurvature,
    /// `d12 theta(Phi(x)) >= A / 2`.
    MixedDerivative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub probe: usize,
    pub x2: f64,
    pub t: f64,
    pub quantity: BoundKind,
    pub value: f64,
    /// The violated limit (for two-sided bounds, the nearer one).
    pub bound: f64,
}

/// Derivative fields sampled at tracer positions.
struct Probe {
    d1: GridField,
    d22: GridField,
    d12: GridField,
}

impl Probe {
    fn new(theta: &ScalarField) -> Result<Self> {
        let f = theta.field();
        Ok(Self {
            d1: derivative(f, MultiIndex::new(1, 0))?,
            d22: derivative(f, MultiIndex::new(0, 2))?,
            d12: derivative(f, MultiIndex::new(1, 1))?,
        })
    }
}

fn interp(f: &GridField) -> Interpolator<'_> {
    Interpolator::new(f, LowerRule::Shift, EdgeRule::Shift)
}

/// Evaluates every bound of the illposedness argument for every probe at the
/// time of `map`.
pub fn trajectory_bounds_check(
    map: &FlowMap,
    theta: &ScalarField,
    cfg: &IllposednessConfig,
) -> Result<Vec<Violation>> {
    let p = Probe::new(theta)?;
    Ok(check_with(map, &p, cfg))
}

fn check_with(map: &FlowMap, p: &Probe, cfg: &IllposednessConfig) -> Vec<Violation> {
    let (d1, d22, d12) = (interp(&p.d1), interp(&p.d22), interp(&p.d12));
    let (a, b) = (cfg.a, cfg.b);
    let mut out = Vec::new();
    for (k, &x2) in cfg.x2_probes.iter().enumerate() {
        let px = map.tracers[2 * k].position;
        let py = map.tracers[2 * k + 1].position;
        let mut flag = |quantity, value: f64, lo: f64, hi: f64| {
            if !(value >= lo && value <= hi) {
                out.push(Violation {
                    probe: k,
                    x2,
                    t: map.t,
                    quantity,
                    value,
                    bound: if value < lo { lo } else { hi },
                });
            }
        };
        flag(BoundKind::HeightRatio, px.x2 / x2, 0.5, 1.5);
        flag(BoundKind::PairDistance, px.distance(py), f64::NEG_INFINITY, 2.0 * x2);
        flag(
            BoundKind::FirstDerivative,
            d1.eval(px),
            a * x2 - 0.5 * a.abs() * x2,
            a * x2 + 0.5 * a.abs() * x2,
        );
        flag(BoundKind::NormalCurvature, d22.eval(px), b, f64::INFINITY);
        flag(BoundKind::MixedDerivative, d12.eval(px), 0.5 * a, f64::INFINITY);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeSample {
    pub x2: f64,
    pub log_inv_x2: f64,
    pub q: f64,
    /// Some trajectory bound failed for this probe at or before `t`.
    pub flagged: bool,
}

/// `(t_max, x2_min, x2_max)` on which every bound held at every step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifiedBox {
    pub t_max: f64,
    pub x2_min: f64,
    pub x2_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeReport {
    pub t: f64,
    pub a: f64,
    pub b: f64,
    pub samples: Vec<ProbeSample>,
    /// Slope of `Q` against `log(1/x2)`.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Largest absolute residual of the fit.
    pub residual: f64,
    /// False when `A, B > 0` does not hold and the bounds were not evaluated.
    pub bounds_checked: bool,
    pub violations: Vec<Violation>,
    pub certified: Option<CertifiedBox>,
    pub steps: usize,
    /// Characteristic feet clamped at the boundary over the run.
    pub clamped_feet: usize,
}

/// Runs the experiment once and reports at each of `t_stars` (increasing).
pub fn illposedness_series(
    cfg: &IllposednessConfig,
    t_stars: &[f64],
    sim: TimeStepConfig,
    kernel: KernelParams,
    exec: Exec,
) -> Result<Vec<SlopeReport>> {
    illposedness_series_on(cfg, cfg.grid()?, t_stars, sim, kernel, exec)
}

/// [`illposedness_series`] on a caller-supplied grid of spacing `cfg.h`,
/// e.g. one shifted by whole cells.
pub fn illposedness_series_on(
    cfg: &IllposednessConfig,
    grid: Grid,
    t_stars: &[f64],
    sim: TimeStepConfig,
    kernel: KernelParams,
    exec: Exec,
) -> Result<Vec<SlopeReport>> {
    cfg.validate()?;
    if grid.h != cfg.h {
        return Err(SqgError::InvalidExperiment(format!(
            "grid spacing {} differs from the configured {}",
            grid.h, cfg.h
        )));
    }
    if t_stars.is_empty() || t_stars.windows(2).any(|w| !(w[0] < w[1])) || !(t_stars[0] >= 0.0) {
        return Err(SqgError::InvalidExperiment(
            "measurement times must be increasing and >= 0".into(),
        ));
    }
    let theta = cfg.datum().sample(grid)?;
    let last = *t_stars.last().unwrap();
    let config = TimeStepConfig {
        t_end: last,
        ..sim
    };
    let mut run = Simulation::new(theta, kernel, config, Vec::new(), &cfg.tracers(), exec)?;
    let mut violations: Vec<Violation> = Vec::new();
    let observe = |sim: &Simulation, violations: &mut Vec<Violation>| -> Result<Probe> {
        let p = Probe::new(&sim.state.theta)?;
        if cfg.bounds_apply() {
            violations.extend(check_with(&sim.flow, &p, cfg));
        }
        Ok(p)
    };
    let mut reports = Vec::with_capacity(t_stars.len());
    let mut probe = observe(&run, &mut violations)?;
    for &t in t_stars {
        let mut step_err = None;
        while run.state.t < t {
            if let Err(e) = run.step(t) {
                step_err = Some(e);
                break;
            }
            probe = observe(&run, &mut violations)?;
        }
        if let Some(e) = step_err {
            return Err(e);
        }
        reports.push(slope_report(cfg, &run, &probe, &violations)?);
    }
    Ok(reports)
}

/// Runs to `cfg.t_star` and reports there.
pub fn illposedness_experiment(
    cfg: &IllposednessConfig,
    sim: TimeStepConfig,
    kernel: KernelParams,
    exec: Exec,
) -> Result<SlopeReport> {
    Ok(illposedness_series(cfg, &[cfg.t_star], sim, kernel, exec)?.remove(0))
}

fn slope_report(
    cfg: &IllposednessConfig,
    run: &Simulation,
    p: &Probe,
    violations: &[Violation],
) -> Result<SlopeReport> {
    let first_violation = violations.iter().map(|v| v.t).reduce(f64::min);
    let d22 = interp(&p.d22);
    let t = run.state.t;
    let samples: Vec<ProbeSample> = cfg
        .x2_probes
        .iter()
        .enumerate()
        .map(|(k, &x2)| {
            let px = run.flow.tracers[2 * k].position;
            let py = run.flow.tracers[2 * k + 1].position;
            ProbeSample {
                x2,
                log_inv_x2: -x2.ln(),
                q: (d22.eval(px) - d22.eval(py)) / x2,
                flagged: violations.iter().any(|v| v.probe == k && v.t <= t),
            }
        })
        .collect();
    let xs: Vec<f64> = samples.iter().map(|s| s.log_inv_x2).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.q).collect();
    if ys.iter().any(|v| !v.is_finite()) {
        return Err(SqgError::NonFinite { what: "difference quotient" });
    }
    let fit = fit_line(&xs, &ys)
        .ok_or_else(|| SqgError::InvalidExperiment("probe heights must differ".into()))?;
    let upto: Vec<Violation> = violations.iter().filter(|v| v.t <= t).copied().collect();
    let certified = if cfg.bounds_apply() {
        let t_max = match first_violation {
            Some(tv) if tv <= t => run
                .records
                .iter()
                .map(|r| r.t)
                .filter(|&s| s < tv)
                .fold(0.0, f64::max),
            _ => t,
        };
        let lo = cfg.x2_probes.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = cfg.x2_probes.iter().copied().fold(0.0, f64::max);
        Some(CertifiedBox {
            t_max,
            x2_min: lo,
            x2_max: hi,
        })
    } else {
        None
    };
    Ok(SlopeReport {
        t,
        a: cfg.a,
        b: cfg.b,
        samples,
        slope: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        residual: fit.max_residual,
        bounds_checked: cfg.bounds_apply(),
        violations: upto,
        certified,
        steps: run.records.len(),
        clamped_feet: run.records.iter().map(|r| r.clamped_feet).sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::biot_savart::Summation;

    fn small(a: f64) -> IllposednessConfig {
        IllposednessConfig::dyadic(a, 1.0, 0.4, 3, 5, 0.0, 1.0 / 256.0)
    }

    #[test]
    fn quotient_vanishes_at_time_zero() {
        let cfg = small(1.0);
        let k = KernelParams::mollified(2.0 * cfg.h).with_summation(Summation::Fft);
        let r = illposedness_experiment(&cfg, TimeStepConfig::default(), k, Exec::default()).unwrap();
        for s in &r.samples {
            assert!(s.q.abs() <= 1e-9, "{s:?}");
        }
        assert!(r.violations.is_empty());
        assert_eq!(r.certified.unwrap().t_max, 0.0);
    }

    #[test]
    fn config_validation() {
        let mut c = small(1.0);
        c.r0 = 0.6;
        assert!(c.validate().is_err());
        let mut c = small(1.0);
        c.x1_probe = 0.2;
        assert!(c.validate().is_err());
        assert!(small(1.0).validate().is_ok());
    }
}
