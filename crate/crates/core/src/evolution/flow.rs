use serde::{Deserialize, Serialize};

use crate::biot_savart::VelocityField;
use crate::error::{Result, SqgError};
use crate::field::{EdgeRule, Grid, Interpolator, LowerRule};
use crate::geometry::Point;
use crate::par::{self, Exec};

/// Velocity available at arbitrary points of the closed half-plane.
pub trait VelocitySampler: Sync {
    fn sample(&self, p: Point) -> Point;
}

impl<F: Fn(Point) -> Point + Sync> VelocitySampler for F {
    fn sample(&self, p: Point) -> Point {
        self(p)
    }
}

/// Bicubic interpolation of a gridded velocity.
pub struct GridSampler<'a> {
    u1: Interpolator<'a>,
    u2: Interpolator<'a>,
}

impl<'a> GridSampler<'a> {
    pub fn new(u: &'a VelocityField) -> Self {
        Self {
            u1: Interpolator::new(&u.u1, LowerRule::Shift, EdgeRule::Shift),
            u2: Interpolator::new(&u.u2, LowerRule::Shift, EdgeRule::Shift),
        }
    }
}

impl VelocitySampler for GridSampler<'_> {
    fn sample(&self, p: Point) -> Point {
        Point::new(self.u1.eval(p), self.u2.eval(p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TracerLabel {
    Interior,
    /// Starts on, and stays on, the boundary `x2 = 0`.
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tracer {
    pub label: TracerLabel,
    pub initial: Point,
    pub position: Point,
}

/// Positions `Phi(t, x)` of a set of tracers.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FlowMap {
    pub tracers: Vec<Tracer>,
    pub t: f64,
}

impl FlowMap {
    pub fn new(points: &[Point]) -> Self {
        Self {
            tracers: points
                .iter()
                .map(|&p| Tracer {
                    label: if p.x2 == 0.0 {
                        TracerLabel::Boundary
                    } else {
                        TracerLabel::Interior
                    },
                    initial: p,
                    position: p,
                })
                .collect(),
            t: 0.0,
        }
    }

    pub fn positions(&self) -> Vec<Point> {
        self.tracers.iter().map(|t| t.position).collect()
    }

    pub fn push(&mut self, p: Point) -> usize {
        self.tracers.extend(FlowMap::new(&[p]).tracers);
        self.tracers.len() - 1
    }

    /// `|Phi(x) - Phi(y)| / |x - y|` for tracer pairs.
    pub fn stretch(&self, a: usize, b: usize) -> f64 {
        let (ta, tb) = (&self.tracers[a], &self.tracers[b]);
        ta.position.distance(tb.position) / ta.initial.distance(tb.initial)
    }
}

/// Classical RK4 step of `dPhi/dt = u(Phi)`. Boundary tracers have the
/// normal component forced to zero at every stage.
pub fn rk4(sampler: &dyn VelocitySampler, p: Point, dt: f64, on_boundary: bool) -> Point {
    let f = |q: Point| {
        let mut v = sampler.sample(q);
        if on_boundary {
            v.x2 = 0.0;
        }
        v
    };
    let k1 = f(p);
    let k2 = f(p + k1 * (0.5 * dt));
    let k3 = f(p + k2 * (0.5 * dt));
    let k4 = f(p + k3 * dt);
    let mut next = p + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    if on_boundary {
        next.x2 = 0.0;
    }
    next
}

/// Advances every tracer by `dt`; a tracer leaving `bounds` halts the step.
pub fn step_flow(
    map: &FlowMap,
    sampler: &dyn VelocitySampler,
    dt: f64,
    bounds: &Grid,
    exec: Exec,
) -> Result<FlowMap> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SqgError::InvalidTimeStep(format!("dt = {dt} must be positive")));
    }
    let moved = par::map_indices(exec, map.tracers.len(), |k| {
        let tr = map.tracers[k];
        let position = rk4(sampler, tr.position, dt, tr.label == TracerLabel::Boundary);
        Tracer { position, ..tr }
    });
    if let Some((index, tr)) = moved
        .iter()
        .enumerate()
        .find(|(_, tr)| !bounds.contains(tr.position) || !tr.position.x1.is_finite())
    {
        return Err(SqgError::TracerEscaped {
            index,
            position: tr.position,
        });
    }
    Ok(FlowMap {
        tracers: moved,
        t: map.t + dt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bounds() -> Grid {
        Grid::half_plane(0.05, 3.0, 0.5).unwrap()
    }

    #[test]
    fn zero_and_uniform_samplers() {
        let m = FlowMap::new(&[Point::new(0.1, 0.2), Point::new(-0.5, 0.0)]);
        let still = step_flow(&m, &|_| Point::default(), 0.1, &bounds(), Exec::Sequential).unwrap();
        assert_eq!(still.positions(), m.positions());
        let shifted = step_flow(&m, &|_| Point::new(1.0, 0.0), 0.1, &bounds(), Exec::Sequential).unwrap();
        for (a, b) in shifted.positions().iter().zip(m.positions()) {
            assert!((a.x1 - b.x1 - 0.1).abs() < 1e-15);
            assert_eq!(a.x2, b.x2);
        }
    }

    #[test]
    fn rigid_rotation_returns_after_one_period() {
        let c = Point::new(0.0, 2.0);
        let rot = move |p: Point| {
            let d = p - c;
            Point::new(-d.x2, d.x1)
        };
        let period = std::f64::consts::TAU;
        let steps = 1000;
        let mut m = FlowMap::new(&[Point::new(1.0, 2.0)]);
        for _ in 0..steps {
            m = step_flow(&m, &rot, period / steps as f64, &bounds(), Exec::Sequential).unwrap();
        }
        assert!(m.tracers[0].position.distance(Point::new(1.0, 2.0)) <= 1e-6);
    }

    #[test]
    fn boundary_tracers_stay_on_the_boundary() {
        let m = FlowMap::new(&[Point::new(0.3, 0.0)]);
        let up = |p: Point| Point::new(p.x2 + 0.2, 1.0);
        let n = step_flow(&m, &up, 0.2, &bounds(), Exec::Sequential).unwrap();
        assert_eq!(n.tracers[0].position.x2, 0.0);
    }

    #[test]
    fn escape_is_reported() {
        let m = FlowMap::new(&[Point::new(3.4, 0.1)]);
        let err = step_flow(&m, &|_| Point::new(1.0, 0.0), 0.5, &bounds(), Exec::Sequential);
        assert!(matches!(err, Err(SqgError::TracerEscaped { index: 0, .. })));
    }
}
