//! Initial data generators and the finite-speed validity horizon.
//!
//! Signals of the Klein-Gordon equation travel at speed at most 1, so on a
//! periodic box the run faithfully represents the Euclidean problem only
//! until wrap-around: data supported in a ball of radius `R` centered in
//! the box is trusted up to `t = (min box length - 2R)/2`.

use num_complex::Complex64;

use crate::error::{KgError, Result};
use crate::spectral::{FieldState, Grid};

/// Generated data plus the support radius feeding the horizon guard.
pub struct GeneratedData {
    pub state: FieldState,
    /// Effective support radius in the box variables.
    pub support_radius: f64,
}

/// Largest trusted time for data of the given support radius.
pub fn horizon_time(box_lengths: &[f64], support_radius: f64) -> f64 {
    let min_l = box_lengths.iter().cloned().fold(f64::INFINITY, f64::min);
    0.5 * (min_l - 2.0 * support_radius)
}

fn centered_radius_sq(grid: &Grid, x_idx: usize) -> f64 {
    let spec = grid.spec();
    let mut rem = x_idx;
    let mut r_sq = 0.0;
    for axis in (0..spec.d).rev() {
        let i = rem % spec.nx[axis];
        rem /= spec.nx[axis];
        let h = spec.box_lengths[axis] / spec.nx[axis] as f64;
        let dx = i as f64 * h - 0.5 * spec.box_lengths[axis];
        r_sq += dx * dx;
    }
    r_sq
}

fn y_modulation(grid: &Grid, y_idx: usize) -> f64 {
    let spec = grid.spec();
    // First torus coordinate only.
    let stride: usize = spec.ny[1..].iter().product();
    let i = y_idx / stride.max(1);
    let y = i as f64 * spec.torus_lengths[0] / spec.ny[0] as f64;
    1.0 + 0.3 * (2.0 * std::f64::consts::PI * y / spec.torus_lengths[0]).cos()
}

/// Gaussian data `A exp(-|x|^2 / R^2) (1 + 0.3 cos(2 pi y_1 / l_1))`,
/// `v = 0`, centered in the box. Not compactly supported; the reported
/// support radius is where the tail drops below 1e-14 of the peak.
pub fn gaussian(grid: &Grid, amplitude: f64, radius: f64) -> Result<GeneratedData> {
    if !(radius > 0.0) {
        return Err(KgError::Config(format!("data_radius = {radius} must be positive")));
    }
    let mut state = FieldState::zeros(grid, 0.0);
    let ny_total = grid.ny_total();
    for x_idx in 0..grid.nx_total() {
        let r_sq = centered_radius_sq(grid, x_idx);
        let profile = amplitude * (-r_sq / (radius * radius)).exp();
        for iy in 0..ny_total {
            state.u[x_idx * ny_total + iy] =
                Complex64::new(profile * y_modulation(grid, iy), 0.0);
        }
    }
    let support_radius = radius * (14.0 * std::f64::consts::LN_10).sqrt();
    Ok(GeneratedData {
        state,
        support_radius,
    })
}

/// Compactly supported smooth bump
/// `A exp(1 - 1/(1 - (|x|/R)^2))` for `|x| < R`, zero outside, constant in
/// the torus directions, `v = 0`. The exact support radius `R` feeds the
/// horizon guard.
pub fn bump(grid: &Grid, amplitude: f64, radius: f64) -> Result<GeneratedData> {
    if !(radius > 0.0) {
        return Err(KgError::Config(format!("data_radius = {radius} must be positive")));
    }
    let mut state = FieldState::zeros(grid, 0.0);
    let ny_total = grid.ny_total();
    for x_idx in 0..grid.nx_total() {
        let rho_sq = centered_radius_sq(grid, x_idx) / (radius * radius);
        let profile = if rho_sq < 1.0 {
            amplitude * (1.0 - 1.0 / (1.0 - rho_sq)).exp()
        } else {
            0.0
        };
        if profile != 0.0 {
            for iy in 0..ny_total {
                state.u[x_idx * ny_total + iy] = Complex64::new(profile, 0.0);
            }
        }
    }
    Ok(GeneratedData {
        state,
        support_radius: radius,
    })
}
