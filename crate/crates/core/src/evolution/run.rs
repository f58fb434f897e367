use serde::{Deserialize, Serialize};

use super::advect::advect_field;
use super::flow::{step_flow, FlowMap, GridSampler};
use crate::biot_savart::{BiotSavart, KernelParams, VelocityField};
use crate::error::{Result, SqgError};
use crate::field::{NormReport, NormRequest, ScalarField};
use crate::geometry::Point;
use crate::par::Exec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    #[default]
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    #[default]
    Cubic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeStepConfig {
    pub cfl: f64,
    pub t_end: f64,
    pub integrator: Integrator,
    pub interp: Interpolation,
    /// Steps between snapshots; 0 keeps only the initial and final states.
    pub snapshot_every: usize,
}

impl Default for TimeStepConfig {
    fn default() -> Self {
        Self {
            cfl: 0.5,
            t_end: 0.0,
            integrator: Integrator::Rk4,
            interp: Interpolation::Cubic,
            snapshot_every: 0,
        }
    }
}

impl TimeStepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(SqgError::InvalidTimeStep(format!(
                "cfl = {} must lie in (0, 1]",
                self.cfl
            )));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(SqgError::InvalidTimeStep(format!(
                "t_end = {} must be finite and >= 0",
                self.t_end
            )));
        }
        Ok(())
    }
}

/// Floor for the speed in the CFL rule.
const TINY_SPEED: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationState {
    pub theta: ScalarField,
    pub t: f64,
    pub dt: f64,
    pub params: KernelParams,
    pub history: Vec<NormReport>,
}

/// Per-step bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Time at the end of the step.
    pub t: f64,
    pub dt: f64,
    pub max_speed: f64,
    /// `max |grad u|` of the frozen velocity used in this step.
    pub grad_max: f64,
    /// `int_0^t ||grad u||_inf` up to the end of the step.
    pub grad_integral: f64,
    pub clamped_feet: usize,
    pub slip_residual: f64,
}

/// Time marching: velocity synthesis, CFL step, transport of `theta` and of
/// the tracers in the same frozen velocity, norm recording.
pub struct Simulation {
    op: BiotSavart,
    config: TimeStepConfig,
    norms: Vec<NormRequest>,
    exec: Exec,
    pub state: SimulationState,
    pub flow: FlowMap,
    pub records: Vec<StepRecord>,
    grad_integral: f64,
}

impl Simulation {
    pub fn new(
        initial: ScalarField,
        params: KernelParams,
        config: TimeStepConfig,
        norms: Vec<NormRequest>,
        tracers: &[Point],
        exec: Exec,
    ) -> Result<Self> {
        config.validate()?;
        for r in &norms {
            r.validate()?;
        }
        let op = BiotSavart::new(initial.grid, params)?;
        let mut history = Vec::new();
        if !norms.is_empty() {
            history.push(NormReport::measure(0.0, initial.field(), &norms)?);
        }
        Ok(Self {
            op,
            config,
            norms,
            exec,
            state: SimulationState {
                theta: initial,
                t: 0.0,
                dt: 0.0,
                params,
                history,
            },
            flow: FlowMap::new(tracers),
            records: Vec::new(),
            grad_integral: 0.0,
        })
    }

    pub fn config(&self) -> &TimeStepConfig {
        &self.config
    }

    pub fn velocity(&self) -> Result<VelocityField> {
        self.op.apply(&self.state.theta, self.exec)
    }

    /// One step, shortened so as not to pass `t_stop`. On error the state is
    /// left untouched.
    pub fn step(&mut self, t_stop: f64) -> Result<()> {
        let theta = &self.state.theta;
        let g = theta.grid;
        let u = self.op.apply(theta, self.exec)?;
        let max_speed = u.max_speed();
        let dt = (self.config.cfl * g.h / max_speed.max(TINY_SPEED)).min(t_stop - self.state.t);
        if !(dt > 0.0) {
            return Err(SqgError::InvalidTimeStep(format!("no time left before {t_stop}")));
        }
        let grad_max = u.grad_max()?;
        let sampler = GridSampler::new(&u);
        let flow = step_flow(&self.flow, &sampler, dt, &g, self.exec)?;
        let edge = edge_speed(&u, theta.support_radius());
        let out = advect_field(theta, &sampler, edge, dt, self.exec)?;
        let t = if t_stop - (self.state.t + dt) <= 1e-12 * t_stop.abs() {
            t_stop
        } else {
            self.state.t + dt
        };
        let report = if self.norms.is_empty() {
            None
        } else {
            Some(NormReport::measure(t, out.theta.field(), &self.norms)?)
        };
        self.grad_integral += grad_max * dt;
        self.state.theta = out.theta;
        self.state.t = t;
        self.state.dt = dt;
        self.state.history.extend(report);
        self.flow = FlowMap { t, ..flow };
        self.records.push(StepRecord {
            t,
            dt,
            max_speed,
            grad_max,
            grad_integral: self.grad_integral,
            clamped_feet: out.clamped_feet,
            slip_residual: u.slip_residual,
        });
        Ok(())
    }

    /// Steps until `t_stop`, calling `on_step` after every step.
    pub fn advance_to<F>(&mut self, t_stop: f64, mut on_step: F) -> Result<()>
    where
        F: FnMut(&Simulation) -> Result<()>,
    {
        while self.state.t < t_stop {
            self.step(t_stop)?;
            on_step(self)?;
        }
        Ok(())
    }

    /// Runs to `t_end`, keeping snapshots; a numerical failure halts the run
    /// and is reported alongside the last good state.
    pub fn run(mut self) -> RunOutput {
        let every = self.config.snapshot_every;
        let t_end = self.config.t_end;
        let mut snapshots = vec![(0.0, self.state.theta.clone())];
        let mut steps = 0usize;
        let outcome = self.advance_to(t_end, |sim| {
            steps += 1;
            if every > 0 && steps % every == 0 {
                snapshots.push((sim.state.t, sim.state.theta.clone()));
            }
            Ok(())
        });
        if snapshots.last().map(|s| s.0) != Some(self.state.t) {
            snapshots.push((self.state.t, self.state.theta.clone()));
        }
        RunOutput {
            snapshots,
            records: self.records,
            flow: self.flow,
            halt: outcome.err(),
            state: self.state,
        }
    }
}

/// `max |u|` over nodes within four cells of the support circle: the speed
/// at which the support can spread during one CFL-limited step.
fn edge_speed(u: &VelocityField, support: f64) -> f64 {
    let g = u.grid;
    let band = 4.0 * g.h;
    let mut m: f64 = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let r = g.point(i, j).norm();
            if (r - support).abs() <= band {
                let k = g.idx(i, j);
                m = m.max(u.u1.values[k].hypot(u.u2.values[k]));
            }
        }
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    /// `(t, theta)` pairs including the initial and last good states.
    pub snapshots: Vec<(f64, ScalarField)>,
    pub records: Vec<StepRecord>,
    pub flow: FlowMap,
    pub halt: Option<SqgError>,
    pub state: SimulationState,
}

impl RunOutput {
    pub fn history(&self) -> &[NormReport] {
        &self.state.history
    }
}

/// Convenience wrapper around [`Simulation::run`].
pub fn run(
    config: TimeStepConfig,
    initial: ScalarField,
    params: KernelParams,
    norms: Vec<NormRequest>,
    tracers: &[Point],
    exec: Exec,
) -> Result<RunOutput> {
    Ok(Simulation::new(initial, params, config, norms, tracers, exec)?.run())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::biot_savart::Summation;
    use crate::field::Grid;
    use crate::profiles::Profile;

    fn setup(t_end: f64) -> (ScalarField, KernelParams, TimeStepConfig) {
        let h = 1.0 / 16.0;
        let g = Grid::half_plane(h, 0.5, 0.5).unwrap();
        let f = Profile::GaussianXy {
            a: 1.0,
            b: 0.0,
            support: 0.5,
        }
        .sample(g)
        .unwrap();
        let params = KernelParams::mollified(2.0 * h).with_summation(Summation::Fft);
        let cfg = TimeStepConfig {
            t_end,
            snapshot_every: 2,
            ..Default::default()
        };
        (f, params, cfg)
    }

    #[test]
    fn zero_end_time_returns_initial_state() {
        let (f, p, c) = setup(0.0);
        let out = run(c, f.clone(), p, vec![NormRequest::lp(2.0)], &[], Exec::Sequential).unwrap();
        assert!(out.halt.is_none());
        assert_eq!(out.snapshots, vec![(0.0, f.clone())]);
        assert_eq!(out.state.theta, f);
        assert_eq!(out.history().len(), 1);
        assert!(out.records.is_empty());
    }

    #[test]
    fn runs_are_deterministic_and_hit_t_end() {
        let (f, p, c) = setup(0.3);
        let norms = vec![NormRequest::lp(2.0), NormRequest::wkp(3, 2.0)];
        let a = run(c, f.clone(), p, norms.clone(), &[Point::new(0.1, 0.1)], Exec::Sequential).unwrap();
        let b = run(c, f, p, norms, &[Point::new(0.1, 0.1)], Exec::Parallel).unwrap();
        assert!(a.halt.is_none(), "{:?}", a.halt);
        assert_eq!(a.state.t, 0.3);
        assert_eq!(a.history(), b.history());
        assert_eq!(a.flow, b.flow);
        assert_eq!(a.state.theta.boundary_max(), 0.0);
    }

    #[test]
    fn invalid_cfl_rejected() {
        let (f, p, mut c) = setup(0.1);
        c.cfl = 1.5;
        assert!(matches!(
            run(c, f, p, vec![], &[], Exec::Sequential),
            Err(SqgError::InvalidTimeStep(_))
        ));
    }

    #[test]
    fn escape_halts_with_last_good_state() {
        let (f, p, c) = setup(50.0);
        let sim = Simulation::new(f, p, c, vec![], &[Point::new(0.5, 0.05)], Exec::Sequential).unwrap();
        let out = sim.run();
        assert!(out.halt.is_some(), "run to t=50 should leave the grid");
        assert!(out.state.t < 50.0);
        assert_eq!(out.snapshots.last().unwrap().0, out.state.t);
    }
}
