//! Initial data and test profiles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SqgError};
use crate::field::{Grid, ScalarField};
use crate::geometry::Point;

/// Radial cutoff equal to 1 on `r <= inner` and 0 on `r >= outer`, joined by
/// the quintic smoothstep (C^2 at both seams).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuinticCutoff {
    pub inner: f64,
    pub outer: f64,
}

impl QuinticCutoff {
    pub fn eval(&self, r: f64) -> f64 {
        if r <= self.inner {
            1.0
        } else if r >= self.outer {
            0.0
        } else {
            let t = (r - self.inner) / (self.outer - self.inner);
            1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
        }
    }
}

/// Radial C-infinity cutoff built from `exp(-1/t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothCutoff {
    pub inner: f64,
    pub outer: f64,
}

impl SmoothCutoff {
    pub fn eval(&self, r: f64) -> f64 {
        if r <= self.inner {
            return 1.0;
        }
        if r >= self.outer {
            return 0.0;
        }
        let t = (r - self.inner) / (self.outer - self.inner);
        let a = (-1.0 / (1.0 - t)).exp();
        let b = (-1.0 / t).exp();
        a / (a + b)
    }
}

/// Named initial data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    /// `(A x1 x2 + B x2^2)` on `B(0; r0/2)`, quintic cutoff to zero at `r0`.
    Model { a: f64, b: f64, r0: f64 },
    /// `(A x1 x2 + B x2^2) / s^2 * exp(-|x|^2 / s^2)` with `s = L/4`, smoothly
    /// cut off on `[0.6 L, L]`.
    GaussianXy { a: f64, b: f64, support: f64 },
    /// `x2 * exp(-|x|^2 / s^2)`, `s = L/4`, same cutoff.
    GaussianX2 { support: f64 },
    /// `x2^2` with a smooth cutoff on `[L/2, L]`.
    X2Squared { support: f64 },
    /// `x2^3` with a smooth cutoff on `[L/2, L]`.
    X2Cubed { support: f64 },
    /// `x2^2 * exp(-|x|^2 / s^2)`, `s = L/4`, cut off on `[0.6 L, L]`.
    GaussianX2Squared { support: f64 },
}

impl Profile {
    pub fn support_radius(&self) -> f64 {
        match *self {
            Profile::Model { r0, .. } => r0,
            Profile::GaussianXy { support, .. }
            | Profile::GaussianX2 { support }
            | Profile::X2Squared { support }
            | Profile::X2Cubed { support }
            | Profile::GaussianX2Squared { support } => support,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.support_radius();
        if !(l > 0.0 && l.is_finite()) {
            return Err(SqgError::InvalidExperiment(format!(
                "support radius {l} must be positive"
            )));
        }
        if let Profile::Model { a, b, .. } | Profile::GaussianXy { a, b, .. } = *self {
            if !(a.is_finite() && b.is_finite()) {
                return Err(SqgError::InvalidExperiment("non-finite coefficient".into()));
            }
        }
        Ok(())
    }

    pub fn eval(&self, p: Point) -> f64 {
        let r = p.norm();
        let gauss = |support: f64| {
            let s = 0.25 * support;
            let cut = SmoothCutoff {
                inner: 0.6 * support,
                outer: support,
            };
            (-(r * r) / (s * s)).exp() * cut.eval(r) / (s * s)
        };
        match *self {
            Profile::Model { a, b, r0 } => {
                let cut = QuinticCutoff {
                    inner: 0.5 * r0,
                    outer: r0,
                };
                (a * p.x1 * p.x2 + b * p.x2 * p.x2) * cut.eval(r)
            }
            Profile::GaussianXy { a, b, support } => {
                (a * p.x1 * p.x2 + b * p.x2 * p.x2) * gauss(support)
            }
            Profile::GaussianX2 { support } => {
                let s = 0.25 * support;
                p.x2 * gauss(support) * s * s
            }
            Profile::GaussianX2Squared { support } => {
                let s = 0.25 * support;
                p.x2 * p.x2 * gauss(support) * s * s
            }
            Profile::X2Squared { support } => {
                let cut = SmoothCutoff {
                    inner: 0.5 * support,
                    outer: support,
                };
                p.x2 * p.x2 * cut.eval(r)
            }
            Profile::X2Cubed { support } => {
                let cut = SmoothCutoff {
                    inner: 0.5 * support,
                    outer: support,
                };
                p.x2 * p.x2 * p.x2 * cut.eval(r)
            }
        }
    }

    pub fn sample(&self, grid: Grid) -> Result<ScalarField> {
        self.validate()?;
        ScalarField::from_fn(grid, self.support_radius(), |p| self.eval(p))
    }
}

/// Seeded smooth test field vanishing on the boundary:
/// `x2 * sum_m c_m cos(k_m . x + phi_m) * exp(-|x|^2/s^2)` cut off on `[0.6 L, L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomSmooth {
    modes: Vec<(f64, Point, f64)>,
    support: f64,
}

impl RandomSmooth {
    pub fn new(seed: u64, support: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let modes = (0..4)
            .map(|_| {
                let c = rng.gen_range(-1.0..1.0);
                let k = Point::new(rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0));
                let phi = rng.gen_range(0.0..std::f64::consts::TAU);
                (c, k, phi)
            })
            .collect();
        Self { modes, support }
    }

    pub fn eval(&self, p: Point) -> f64 {
        let r = p.norm();
        let s = 0.3 * self.support;
        let cut = SmoothCutoff {
            inner: 0.6 * self.support,
            outer: self.support,
        };
        let wave: f64 = self
            .modes
            .iter()
            .map(|(c, k, phi)| c * (k.x1 * p.x1 + k.x2 * p.x2 + phi).cos())
            .sum();
        p.x2 * wave * (-(r * r) / (s * s)).exp() * cut.eval(r) / s
    }

    pub fn sample(&self, grid: Grid) -> Result<ScalarField> {
        ScalarField::from_fn(grid, self.support, |p| self.eval(p))
    }
}
