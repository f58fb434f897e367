use super::{KernelParams, OddSource};
use crate::field::Grid;
use crate::geometry::Point;
use crate::par::{self, Exec};

/// `K_eps(m h, n h) h^2` for every offset a target/source pair can realise.
///
/// Row `n + ny - 1` holds the `x2` offset `n` in `-(ny-1)..=2(ny-1)`; entry
/// `q` of a row holds the `x1` offset `m = (nx - 1) - q`, so that the sum
/// over increasing source columns reads the row contiguously.
pub(crate) struct KernelTable {
    nx: usize,
    ny: usize,
    t1: Vec<f64>,
    t2: Vec<f64>,
}

impl KernelTable {
    pub fn new(grid: Grid, params: &KernelParams) -> Self {
        let (nx, ny) = (grid.nx, grid.ny);
        let width = 2 * nx - 1;
        let rows = 3 * ny - 2;
        let w = grid.h * grid.h;
        let mut t1 = vec![0.0; width * rows];
        let mut t2 = vec![0.0; width * rows];
        for r in 0..rows {
            let n = r as f64 - (ny - 1) as f64;
            for q in 0..width {
                let m = (nx - 1) as f64 - q as f64;
                let k = params.kernel(Point::new(m * grid.h, n * grid.h));
                t1[r * width + q] = k.x1 * w;
                t2[r * width + q] = k.x2 * w;
            }
        }
        Self { nx, ny, t1, t2 }
    }

    pub fn apply(&self, source: &OddSource, exec: Exec) -> (Vec<f64>, Vec<f64>) {
        let (nx, ny) = (self.nx, self.ny);
        let width = 2 * nx - 1;
        let rows = par::map_indices(exec, ny, |j| {
            let mut u1 = vec![0.0; nx];
            let mut u2 = vec![0.0; nx];
            for row in &source.rows {
                let r = j + 2 * (ny - 1) - row.s;
                let a = &self.t1[r * width..(r + 1) * width];
                let b = &self.t2[r * width..(r + 1) * width];
                let len = row.values.len();
                for i in 0..nx {
                    let q = row.k0 + nx - 1 - i;
                    let (d1, d2) = dot2(&a[q..q + len], &b[q..q + len], &row.values);
                    u1[i] += d1;
                    u2[i] += d2;
                }
            }
            (u1, u2)
        });
        let mut u1 = Vec::with_capacity(nx * ny);
        let mut u2 = Vec::with_capacity(nx * ny);
        for (a, b) in rows {
            u1.extend(a);
            u2.extend(b);
        }
        (u1, u2)
    }
}

/// Two dot products against the same vector, four lanes each.
#[inline]
fn dot2(a: &[f64], b: &[f64], v: &[f64]) -> (f64, f64) {
    let n = v.len();
    let mut sa = [0.0f64; 4];
    let mut sb = [0.0f64; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        let o = 4 * c;
        for l in 0..4 {
            sa[l] += a[o + l] * v[o + l];
            sb[l] += b[o + l] * v[o + l];
        }
    }
    for k in 4 * chunks..n {
        sa[0] += a[k] * v[k];
        sb[0] += b[k] * v[k];
    }
    ((sa[0] + sa[1]) + (sa[2] + sa[3]), (sb[0] + sb[1]) + (sb[2] + sb[3]))
}
