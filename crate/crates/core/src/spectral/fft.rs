//! Row-column 2D FFT on row-major buffers.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::sync::Arc;

fn plan(n: usize, dir: FftDirection) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft(n, dir)
}

/// Unnormalized 2D transform of an `ny x nx` row-major buffer (`data[iy * nx + ix]`).
pub fn fft2(data: &mut [Complex64], nx: usize, ny: usize, dir: FftDirection) {
    assert_eq!(data.len(), nx * ny);
    let row = plan(nx, dir);
    data.par_chunks_mut(nx).for_each(|r| row.process(r));
    let col = plan(ny, dir);
    let mut t = transpose(data, nx, ny);
    t.par_chunks_mut(ny).for_each(|c| col.process(c));
    let back = transpose(&t, ny, nx);
    data.copy_from_slice(&back);
}

/// Unnormalized 1D transforms of every row of an `nrows x ncols` buffer.
pub fn fft_rows(data: &mut [Complex64], ncols: usize, dir: FftDirection) {
    let row = plan(ncols, dir);
    data.par_chunks_mut(ncols).for_each(|r| row.process(r));
}

/// Unnormalized 1D transforms of every column of an `nrows x ncols` buffer.
pub fn fft_cols(data: &mut [Complex64], ncols: usize, nrows: usize, dir: FftDirection) {
    let col = plan(nrows, dir);
    let mut t = transpose(data, ncols, nrows);
    t.par_chunks_mut(nrows).for_each(|c| col.process(c));
    let back = transpose(&t, nrows, ncols);
    data.copy_from_slice(&back);
}

fn transpose(data: &[Complex64], ncols: usize, nrows: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    out.par_chunks_mut(nrows).enumerate().for_each(|(c, dst)| {
        for (r, d) in dst.iter_mut().enumerate() {
            *d = data[r * ncols + c];
        }
    });
    out
}

/// Signed frequency index of FFT bin `k` out of `n`: `[-n/2, n/2)`.
#[inline]
pub fn signed_bin(k: usize, n: usize) -> i64 {
    if k < n / 2 || (k == n / 2 && n % 2 == 1) {
        k as i64
    } else {
        k as i64 - n as i64
    }
}
