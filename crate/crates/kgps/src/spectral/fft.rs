//! Separable n-dimensional FFT over a flat row-major buffer.
//!
//! Conventions: `forward` maps grid samples to mode amplitudes `a_m` in the
//! expansion `u(x) = sum_m a_m exp(i xi_m . x)` (so a constant field becomes
//! a single amplitude at the zero mode), `inverse` is its exact inverse.
//! Plans are cached per axis; line batches run in parallel.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

pub struct NdFft {
    dims: Vec<usize>,
    /// Suffix products: stride of axis `a` in the row-major layout.
    strides: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    n_total: usize,
}

impl NdFft {
    pub fn new(dims: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        let forward = dims
            .iter()
            .map(|&n| planner.plan_fft_forward(n))
            .collect::<Vec<_>>();
        let inverse = dims
            .iter()
            .map(|&n| planner.plan_fft_inverse(n))
            .collect::<Vec<_>>();
        let mut strides = vec![1usize; dims.len()];
        for a in (0..dims.len().saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * dims[a + 1];
        }
        let n_total = dims.iter().product();
        NdFft {
            dims: dims.to_vec(),
            strides,
            forward,
            inverse,
            n_total,
        }
    }

    pub fn len(&self) -> usize {
        self.n_total
    }

    pub fn is_empty(&self) -> bool {
        self.n_total == 0
    }

    /// Grid samples -> mode amplitudes.
    pub fn forward(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.n_total, "fft buffer length mismatch");
        for axis in 0..self.dims.len() {
            self.transform_axis(data, axis, true);
        }
        let scale = 1.0 / self.n_total as f64;
        data.par_iter_mut().for_each(|z| *z *= scale);
    }

    /// Mode amplitudes -> grid samples.
    pub fn inverse(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.n_total, "fft buffer length mismatch");
        for axis in 0..self.dims.len() {
            self.transform_axis(data, axis, false);
        }
    }

    fn transform_axis(&self, data: &mut [Complex64], axis: usize, fwd: bool) {
        let n = self.dims[axis];
        if n == 1 {
            return;
        }
        let plan = if fwd {
            &self.forward[axis]
        } else {
            &self.inverse[axis]
        };
        let stride = self.strides[axis];
        if stride == 1 {
            // Contiguous lines along the last axis.
            data.par_chunks_exact_mut(n).for_each_init(
                || vec![Complex64::default(); plan.get_inplace_scratch_len()],
                |scratch, line| plan.process_with_scratch(line, scratch),
            );
        } else {
            // Each outer block holds `stride` interleaved lines.
            let block = n * stride;
            data.par_chunks_exact_mut(block).for_each_init(
                || {
                    (
                        vec![Complex64::default(); n],
                        vec![Complex64::default(); plan.get_inplace_scratch_len()],
                    )
                },
                |(line, scratch), chunk| {
                    for inner in 0..stride {
                        for j in 0..n {
                            line[j] = chunk[inner + j * stride];
                        }
                        plan.process_with_scratch(line, scratch);
                        for j in 0..n {
                            chunk[inner + j * stride] = line[j];
                        }
                    }
                },
            );
        }
    }
}

/// Centered integer frequency for FFT bin `i` of an axis of size `n`:
/// `0..n/2-1` then `-n/2..-1`.
pub fn freq_index(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}
