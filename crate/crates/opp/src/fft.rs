use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

/// Unnormalized 2D FFT in place over a row-major `width x height` buffer.
pub(crate) fn fft2(data: &mut [Complex64], width: usize, height: usize, direction: FftDirection) {
    debug_assert_eq!(data.len(), width * height);
    let mut planner = FftPlanner::new();
    let rows = planner.plan_fft(width, direction);
    let cols = planner.plan_fft(height, direction);

    let band = rows_per_band(height);
    data.par_chunks_mut(width * band)
        .for_each(|chunk| rows.process(chunk));

    let mut t = transpose(data, width, height);
    let band = rows_per_band(width);
    t.par_chunks_mut(height * band)
        .for_each(|chunk| cols.process(chunk));
    for (x, col) in t.chunks_exact(height).enumerate() {
        for (y, &v) in col.iter().enumerate() {
            data[y * width + x] = v;
        }
    }
}

fn rows_per_band(rows: usize) -> usize {
    rows.div_ceil(rayon::current_num_threads() * 4).max(1)
}

fn transpose(data: &[Complex64], width: usize, height: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    for (y, row) in data.chunks_exact(width).enumerate() {
        for (x, &v) in row.iter().enumerate() {
            out[x * height + y] = v;
        }
    }
    out
}
