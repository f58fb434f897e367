//! The direct sum evaluated as a zero-padded circular convolution.
//!
//! The two kernel components are packed as `K1 + i K2`; since the source is
//! real, one inverse transform yields `u1 + i u2`.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{KernelParams, OddSource};
use crate::field::Grid;
use crate::geometry::Point;
use crate::par::{self, Exec};

/// Smallest `n' >= n` whose only prime factors are 2, 3 and 5.
pub(crate) fn smooth_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

pub(crate) struct FftConvolver {
    nx: usize,
    ny: usize,
    p1: usize,
    p2: usize,
    fwd1: Arc<dyn Fft<f64>>,
    inv1: Arc<dyn Fft<f64>>,
    fwd2: Arc<dyn Fft<f64>>,
    inv2: Arc<dyn Fft<f64>>,
    /// Kernel transform, stored transposed (`p1` rows of length `p2`).
    kernel_hat: Vec<Complex64>,
}

fn rows_fft(exec: Exec, fft: &Arc<dyn Fft<f64>>, data: &mut [Complex64], len: usize, rows: usize) {
    let scratch_len = fft.get_inplace_scratch_len();
    par::for_each_chunk_mut(exec, &mut data[..len * rows], len, |_, row| {
        let mut scratch = vec![Complex64::default(); scratch_len];
        fft.process_with_scratch(row, &mut scratch);
    });
}

/// `rows x cols` row-major into `cols x rows` row-major.
fn transpose(exec: Exec, src: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut dst = vec![Complex64::default(); src.len()];
    const B: usize = 32;
    par::for_each_chunk_mut(exec, &mut dst, B * rows, |bc, block| {
        let c0 = bc * B;
        let nc = block.len() / rows;
        for r0 in (0..rows).step_by(B) {
            for c in c0..c0 + nc {
                for r in r0..(r0 + B).min(rows) {
                    block[(c - c0) * rows + r] = src[r * cols + c];
                }
            }
        }
    });
    dst
}

impl FftConvolver {
    pub fn new(grid: Grid, params: &KernelParams) -> Self {
        let (nx, ny) = (grid.nx, grid.ny);
        let p1 = smooth_size(2 * nx - 1);
        let p2 = smooth_size(3 * ny - 2);
        let mut planner = FftPlanner::new();
        let fwd1 = planner.plan_fft_forward(p1);
        let inv1 = planner.plan_fft_inverse(p1);
        let fwd2 = planner.plan_fft_forward(p2);
        let inv2 = planner.plan_fft_inverse(p2);
        let w = grid.h * grid.h;
        // Offsets: x1 in -(nx-1)..=nx-1; x2 (target row minus mirrored source
        // row) in -(2ny-2)..=ny-1, realising the physical offset q2 + ny - 1.
        let mut k = vec![Complex64::default(); p1 * p2];
        let (nxi, nyi) = (nx as isize, ny as isize);
        for q2 in -(2 * nyi - 2)..nyi {
            let r = q2.rem_euclid(p2 as isize) as usize;
            let n = (q2 + nyi - 1) as f64;
            for q1 in -(nxi - 1)..nxi {
                let c = q1.rem_euclid(p1 as isize) as usize;
                let v = params.kernel(Point::new(q1 as f64 * grid.h, n * grid.h));
                k[r * p1 + c] = Complex64::new(v.x1 * w, v.x2 * w);
            }
        }
        let exec = Exec::default();
        rows_fft(exec, &fwd1, &mut k, p1, p2);
        let mut kt = transpose(exec, &k, p2, p1);
        rows_fft(exec, &fwd2, &mut kt, p2, p1);
        Self {
            nx,
            ny,
            p1,
            p2,
            fwd1,
            inv1,
            fwd2,
            inv2,
            kernel_hat: kt,
        }
    }

    pub fn apply(&self, source: &OddSource, exec: Exec) -> (Vec<f64>, Vec<f64>) {
        let (p1, p2) = (self.p1, self.p2);
        let mut data = vec![Complex64::default(); p1 * p2];
        for row in &source.rows {
            let base = row.s * p1 + row.k0;
            for (k, v) in row.values.iter().enumerate() {
                data[base + k].re = *v;
            }
        }
        // Only the 2ny - 1 mirrored rows can be nonzero.
        rows_fft(exec, &self.fwd1, &mut data, p1, 2 * self.ny - 1);
        let mut t = transpose(exec, &data, p2, p1);
        drop(data);
        rows_fft(exec, &self.fwd2, &mut t, p2, p1);
        let kh = &self.kernel_hat;
        par::for_each_chunk_mut(exec, &mut t, p2, |r, row| {
            let k = &kh[r * p2..(r + 1) * p2];
            for (a, b) in row.iter_mut().zip(k) {
                *a *= *b;
            }
        });
        rows_fft(exec, &self.inv2, &mut t, p2, p1);
        let mut data = transpose(exec, &t, p1, p2);
        drop(t);
        rows_fft(exec, &self.inv1, &mut data, p1, self.ny);
        let scale = 1.0 / (p1 * p2) as f64;
        let n = self.nx * self.ny;
        let mut u1 = Vec::with_capacity(n);
        let mut u2 = Vec::with_capacity(n);
        for j in 0..self.ny {
            for c in &data[j * p1..j * p1 + self.nx] {
                u1.push(c.re * scale);
                u2.push(c.im * scale);
            }
        }
        (u1, u2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_sizes() {
        assert_eq!(smooth_size(1), 1);
        assert_eq!(smooth_size(7), 8);
        assert_eq!(smooth_size(641), 648);
        assert_eq!(smooth_size(3073), 3125);
    }
}
