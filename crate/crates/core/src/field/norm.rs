//! Discrete Lebesgue, Sobolev and Hölder norm estimators.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{derivative, Grid, GridField, MultiIndex};
use crate::error::{Result, SqgError};
use crate::par::{self, Exec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormKind {
    Lp,
    Wkp,
    HolderSeminorm,
}

/// What to measure. `p = f64::INFINITY` selects the sup norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormRequest {
    pub kind: NormKind,
    pub p: f64,
    pub k: u8,
    pub beta: f64,
    pub pair_samples: usize,
    pub seed: u64,
}

pub const MIN_PAIR_SAMPLES: usize = 1000;

impl NormRequest {
    pub fn lp(p: f64) -> Self {
        Self {
            kind: NormKind::Lp,
            p,
            k: 0,
            beta: 0.5,
            pair_samples: MIN_PAIR_SAMPLES,
            seed: 42,
        }
    }

    pub fn wkp(k: u8, p: f64) -> Self {
        Self {
            kind: NormKind::Wkp,
            k,
            ..Self::lp(p)
        }
    }

    pub fn holder(k: u8, beta: f64, pair_samples: usize, seed: u64) -> Self {
        Self {
            kind: NormKind::HolderSeminorm,
            p: f64::INFINITY,
            k,
            beta,
            pair_samples,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SqgError::InvalidNormRequest(m));
        if self.k > 3 {
            return bad(format!("derivative order {} exceeds 3", self.k));
        }
        match self.kind {
            // p = 1 is admitted so that L1 conservation can be tracked.
            NormKind::Lp | NormKind::Wkp => {
                if !(self.p >= 1.0) {
                    return bad(format!("exponent p = {} must be at least 1", self.p));
                }
            }
            NormKind::HolderSeminorm => {
                if !(self.beta > 0.0 && self.beta < 1.0) {
                    return bad(format!("Hölder exponent {} must lie in (0, 1)", self.beta));
                }
                if self.pair_samples < MIN_PAIR_SAMPLES {
                    return bad(format!(
                        "{} pair samples; at least {MIN_PAIR_SAMPLES} are required",
                        self.pair_samples
                    ));
                }
            }
        }
        Ok(())
    }

    /// Stable key used in [`NormReport::entries`].
    pub fn descriptor(&self) -> String {
        let p = if self.p.is_infinite() {
            "inf".to_string()
        } else {
            format!("{}", self.p)
        };
        match self.kind {
            NormKind::Lp => format!("L{p}"),
            NormKind::Wkp => format!("W{},{p}", self.k),
            NormKind::HolderSeminorm => format!("C{},{}", self.k, self.beta),
        }
    }
}

#[inline]
fn trapezoid_weight(i: usize, n: usize) -> f64 {
    if i == 0 || i + 1 == n {
        0.5
    } else {
        1.0
    }
}

/// `sum w |f|^p` over the nodes accepted by `mask`, with composite
/// trapezoid weights.
fn power_sum<M: Fn(usize, usize) -> bool + Sync>(f: &GridField, p: f64, mask: &M) -> f64 {
    let g = f.grid;
    let rows = par::map_indices(Exec::default(), g.ny, |j| {
        let wy = trapezoid_weight(j, g.ny);
        let mut acc = 0.0;
        for i in 0..g.nx {
            if mask(i, j) {
                acc += trapezoid_weight(i, g.nx) * f.at(i, j).abs().powf(p);
            }
        }
        wy * acc
    });
    rows.iter().sum::<f64>() * g.h * g.h
}

fn max_abs_masked<M: Fn(usize, usize) -> bool>(f: &GridField, mask: &M) -> f64 {
    let g = f.grid;
    let mut m: f64 = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            if mask(i, j) {
                m = m.max(f.at(i, j).abs());
            }
        }
    }
    m
}

fn ensure_finite(f: &GridField) -> Result<()> {
    if f.all_finite() {
        Ok(())
    } else {
        Err(SqgError::NonFinite { what: "norm input" })
    }
}

/// `L^p` norm restricted to the nodes where `mask(i, j)` holds.
pub fn lp_norm_masked<M: Fn(usize, usize) -> bool + Sync>(f: &GridField, p: f64, mask: M) -> f64 {
    if p.is_infinite() {
        max_abs_masked(f, &mask)
    } else {
        power_sum(f, p, &mask).powf(1.0 / p)
    }
}

fn lp(f: &GridField, p: f64) -> f64 {
    lp_norm_masked(f, p, |_, _| true)
}

/// `(sum_{|a| <= k} ||d^a f||_p^p)^(1/p)`; the sup of the maxima for `p = inf`.
pub fn wkp_norm(f: &GridField, k: u8, p: f64) -> Result<f64> {
    ensure_finite(f)?;
    let mut total = 0.0f64;
    for a in MultiIndex::all_up_to(k) {
        let d = derivative(f, a)?;
        if p.is_infinite() {
            total = total.max(d.max_abs());
        } else {
            total += power_sum(&d, p, &|_, _| true);
        }
    }
    Ok(if p.is_infinite() {
        total
    } else {
        total.powf(1.0 / p)
    })
}

/// Node pairs probed by the seminorm estimator, excluding the
/// nearest-neighbour sweep (which is always performed).
fn sampled_pairs(nx: usize, ny: usize, samples: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = nx * ny;
    let mut pairs = Vec::with_capacity(samples);
    let max_cells: f64 = 16.0;
    for s in 0..samples {
        let a = rng.gen_range(0..n);
        if s % 2 == 0 {
            let b = rng.gen_range(0..n);
            if a != b {
                pairs.push((a, b));
            }
        } else {
            // Short-range pair at a log-uniform distance of 1..16 cells.
            let r = max_cells.powf(rng.gen::<f64>());
            let phi = rng.gen::<f64>() * std::f64::consts::TAU;
            let (i, j) = ((a % nx) as f64, (a / nx) as f64);
            let bi = (i + r * phi.cos()).round();
            let bj = (j + r * phi.sin()).round();
            if bi >= 0.0 && bj >= 0.0 && (bi as usize) < nx && (bj as usize) < ny {
                let b = bj as usize * nx + bi as usize;
                if a != b {
                    pairs.push((a, b));
                }
            }
        }
    }
    pairs
}

fn pair_quotient(fields: &[GridField], a: usize, b: usize, dist: f64, beta: f64) -> f64 {
    let denom = dist.powf(beta);
    fields
        .iter()
        .map(|d| (d.values[a] - d.values[b]).abs())
        .fold(0.0f64, f64::max)
        / denom
}

/// Discrete `C^{k,beta}` seminorm estimate over the top-order derivatives.
pub fn holder_seminorm(f: &GridField, k: u8, beta: f64, pair_samples: usize, seed: u64) -> Result<f64> {
    NormRequest::holder(k, beta, pair_samples, seed).validate()?;
    ensure_finite(f)?;
    let fields = MultiIndex::all_of_order(k)
        .into_iter()
        .map(|a| derivative(f, a))
        .collect::<Result<Vec<_>>>()?;
    Ok(pair_sup(&f.grid, pair_samples, seed, |a, b, dist| {
        pair_quotient(&fields, a, b, dist, beta)
    }))
}

/// `max q(a, b, |x_a - x_b|)` over seeded random node pairs plus every
/// horizontal, vertical and diagonal neighbour pair.
pub(crate) fn pair_sup<Q>(g: &Grid, pair_samples: usize, seed: u64, q: Q) -> f64
where
    Q: Fn(usize, usize, f64) -> f64 + Sync,
{
    let h = g.h;
    let mut best: f64 = 0.0;
    for (a, b) in sampled_pairs(g.nx, g.ny, pair_samples, seed) {
        let (ai, aj) = ((a % g.nx) as f64, (a / g.nx) as f64);
        let (bi, bj) = ((b % g.nx) as f64, (b / g.nx) as f64);
        best = best.max(q(a, b, h * (ai - bi).hypot(aj - bj)));
    }
    let diag = h * std::f64::consts::SQRT_2;
    let row_best = par::map_indices(Exec::default(), g.ny, |j| {
        let mut m: f64 = 0.0;
        for i in 0..g.nx {
            let a = g.idx(i, j);
            if i + 1 < g.nx {
                m = m.max(q(a, a + 1, h));
            }
            if j + 1 < g.ny {
                m = m.max(q(a, a + g.nx, h));
                if i + 1 < g.nx {
                    m = m.max(q(a, a + g.nx + 1, diag));
                }
                if i > 0 {
                    m = m.max(q(a, a + g.nx - 1, diag));
                }
            }
        }
        m
    });
    row_best.into_iter().fold(best, f64::max)
}

/// `sum_{|a| <= k} sup |d^a f| + [d^k f]_beta`.
pub fn holder_norm(f: &GridField, k: u8, beta: f64, pair_samples: usize, seed: u64) -> Result<f64> {
    let semi = holder_seminorm(f, k, beta, pair_samples, seed)?;
    let mut total = semi;
    for a in MultiIndex::all_up_to(k) {
        total += derivative(f, a)?.max_abs();
    }
    Ok(total)
}

/// Evaluates a validated request.
pub fn norm(f: &GridField, req: &NormRequest) -> Result<f64> {
    req.validate()?;
    ensure_finite(f)?;
    match req.kind {
        NormKind::Lp => Ok(lp(f, req.p)),
        NormKind::Wkp => wkp_norm(f, req.k, req.p),
        NormKind::HolderSeminorm => {
            holder_seminorm(f, req.k, req.beta, req.pair_samples, req.seed)
        }
    }
}

/// Time-stamped bundle of norm estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub t: f64,
    pub entries: BTreeMap<String, f64>,
    /// `max |d^a theta|` over all third-order indices.
    pub sup_w3inf_proxy: f64,
}

impl NormReport {
    pub fn measure(t: f64, f: &GridField, requests: &[NormRequest]) -> Result<NormReport> {
        let mut entries = BTreeMap::new();
        for r in requests {
            let v = norm(f, r)?;
            if !v.is_finite() {
                return Err(SqgError::NonFinite { what: "norm estimate" });
            }
            entries.insert(r.descriptor(), v);
        }
        let mut sup_w3inf_proxy: f64 = 0.0;
        for a in MultiIndex::all_of_order(3) {
            sup_w3inf_proxy = sup_w3inf_proxy.max(derivative(f, a)?.max_abs());
        }
        Ok(NormReport {
            t,
            entries,
            sup_w3inf_proxy,
        })
    }

    pub fn get(&self, req: &NormRequest) -> Option<f64> {
        self.entries.get(&req.descriptor()).copied()
    }
}
