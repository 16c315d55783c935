//! Norms and the scattering measurement pipeline: mixed space-time
//! Strichartz norms, modal energy norms, anisotropic Sobolev weights in the
//! torus directions, the Cauchy sequence of undone-flow states `V(t)`, and
//! the extrapolated scattering pair.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{KgError, Result};
use crate::evolve::{trapezoid_lq, Trajectory};
use crate::propagator::inverse_wave;
use crate::spectral::dyadic::lr_x_l2_y_norm;
use crate::spectral::fft::NdFft;
use crate::spectral::{eigenvalues_torus, forward_transform, FieldState, Grid, ModalState};

/// Joint `L^rho` norm over the whole grid (`rho = inf` takes the sup).
pub fn lp_norm(grid: &Grid, data: &[Complex64], rho: f64) -> f64 {
    if rho.is_infinite() {
        return data.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max).sqrt();
    }
    let half = rho / 2.0;
    let sum: f64 = if half.fract() == 0.0 && (1.0..=8.0).contains(&half) {
        let e = half as i32;
        data.iter().map(|z| z.norm_sqr().powi(e)).sum()
    } else {
        data.iter().map(|z| z.norm_sqr().powf(half)).sum()
    };
    (sum * grid.cell_volume()).powf(1.0 / rho)
}

/// Spatial norm selector for space-time norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpatialMode {
    /// Joint `L^rho` over both factors.
    LrhoXY,
    /// `L^rho` in the box variables, `L^2` on the torus.
    LrhoXL2Y,
    /// Energy pairing `(||u||_{H^1}^2 + ||v||_{L^2}^2)^{1/2}`.
    EnergyH1xL2,
    /// `L^rho_x L^2_y` of `(1 - Lap_y)^{gamma/2} u`.
    HGammaYWeighted,
}

/// A mixed space-time norm specification.
#[derive(Debug, Clone, Copy)]
pub struct NormSpec {
    /// Time exponent `q >= 1`, or `f64::INFINITY` for the sup in time.
    pub time_exponent: f64,
    pub mode: SpatialMode,
    pub rho: f64,
    /// Extra torus regularity; only used by the weighted mode.
    pub gamma: f64,
}

/// Lebesgue norm of one scalar component in the requested spatial mode.
pub fn lebesgue_norm(grid: &Grid, data: &[Complex64], rho: f64, mode: SpatialMode) -> f64 {
    match mode {
        SpatialMode::LrhoXY => lp_norm(grid, data, rho),
        SpatialMode::LrhoXL2Y => lr_x_l2_y_norm(grid, data, rho),
        _ => panic!("lebesgue_norm expects a Lebesgue mode"),
    }
}

/// Spatial norm of a snapshot per `NormSpec`.
pub fn snapshot_spatial_norm(grid: &Grid, state: &FieldState, spec: &NormSpec) -> f64 {
    match spec.mode {
        SpatialMode::LrhoXY => lp_norm(grid, &state.u, spec.rho),
        SpatialMode::LrhoXL2Y => lr_x_l2_y_norm(grid, &state.u, spec.rho),
        SpatialMode::EnergyH1xL2 => energy_norm(grid, state),
        SpatialMode::HGammaYWeighted => {
            let weighted = sobolev_y_apply_scalar(grid, &state.u, spec.gamma);
            lr_x_l2_y_norm(grid, &weighted, spec.rho)
        }
    }
}

/// Space-time norm of a trajectory: composite trapezoid of the q-th power
/// of the spatial norm, or the max over snapshots for `q = inf`.
pub fn strichartz_norm(grid: &Grid, traj: &Trajectory, spec: &NormSpec) -> f64 {
    let values: Vec<f64> = traj
        .snapshots
        .iter()
        .map(|s| snapshot_spatial_norm(grid, s, spec))
        .collect();
    if spec.time_exponent.is_infinite() {
        values.into_iter().fold(0.0, f64::max)
    } else {
        trapezoid_lq(&traj.times(), &values, spec.time_exponent)
    }
}

/// Modal energy norm `(||u||_{H^1_{x,y}}^2 + ||v||_{L^2}^2)^{1/2}`
/// computed as `sqrt(Vol * sum (m^2 + lambda + |xi|^2)|u_hat|^2 + |v_hat|^2)`
/// with the default mass `m^2 = 1`.
pub fn energy_norm(grid: &Grid, state: &FieldState) -> f64 {
    let modal = forward_transform(grid, state).expect("shape checked by caller");
    energy_norm_modal(grid, &modal, 1.0)
}

pub fn energy_norm_modal(grid: &Grid, modal: &ModalState, m_sq: f64) -> f64 {
    let ny_total = grid.ny_total();
    let xi_sq = grid.xi_sq_x();
    let lambda = grid.lambda_y();
    let acc: f64 = modal
        .u_hat
        .par_chunks_exact(ny_total)
        .zip(modal.v_hat.par_chunks_exact(ny_total))
        .enumerate()
        .map(|(x_idx, (urow, vrow))| {
            let base = m_sq + xi_sq[x_idx];
            let mut local = 0.0;
            for iy in 0..ny_total {
                local += (base + lambda[iy]) * urow[iy].norm_sqr() + vrow[iy].norm_sqr();
            }
            local
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    (acc * grid.volume()).sqrt()
}

/// The conserved Hamiltonian
/// `E = 1/2 (||v||^2 + ||grad u||^2 + ||u||^2) - sign/(p+1) ||u||_{L^{p+1}}^{p+1}`.
pub fn conserved_energy(grid: &Grid, state: &FieldState, p: f64, sign: f64) -> f64 {
    let modal = forward_transform(grid, state).expect("shape checked by caller");
    let ny_total = grid.ny_total();
    let xi_sq = grid.xi_sq_x();
    let lambda = grid.lambda_y();
    let mut quad = 0.0;
    for (x_idx, (urow, vrow)) in modal
        .u_hat
        .chunks_exact(ny_total)
        .zip(modal.v_hat.chunks_exact(ny_total))
        .enumerate()
    {
        let base = 1.0 + xi_sq[x_idx];
        for iy in 0..ny_total {
            quad += (base + lambda[iy]) * urow[iy].norm_sqr() + vrow[iy].norm_sqr();
        }
    }
    let potential = lp_norm(grid, &state.u, p + 1.0).powf(p + 1.0);
    0.5 * quad * grid.volume() - sign / (p + 1.0) * potential
}

/// Applies `(1 - Lap_y)^{gamma/2}` to one scalar component (modal
/// multiplier `(1 + lambda_n)^{gamma/2}` on the torus frequencies).
pub fn sobolev_y_apply_scalar(grid: &Grid, data: &[Complex64], gamma: f64) -> Vec<Complex64> {
    if gamma == 0.0 {
        return data.to_vec();
    }
    let mut modal = data.to_vec();
    grid.fft().forward(&mut modal);
    let ny_total = grid.ny_total();
    let weights: Vec<f64> = grid
        .lambda_y()
        .iter()
        .map(|&l| (1.0 + l).powf(gamma / 2.0))
        .collect();
    modal.par_chunks_exact_mut(ny_total).for_each(|chunk| {
        for (iy, z) in chunk.iter_mut().enumerate() {
            *z *= weights[iy];
        }
    });
    grid.fft().inverse(&mut modal);
    modal
}

/// Applies the torus Sobolev weight to both components of a state.
pub fn sobolev_y_apply(grid: &Grid, state: &FieldState, gamma: f64) -> FieldState {
    FieldState {
        time: state.time,
        u: sobolev_y_apply_scalar(grid, &state.u, gamma),
        v: sobolev_y_apply_scalar(grid, &state.v, gamma),
    }
}

/// Fraction of the modal energy sitting in the top-third frequency shell
/// (any axis index at or above 2/3 of its Nyquist index). Monitors
/// aliasing from the non-polynomial nonlinearity.
pub fn spectral_tail_fraction(grid: &Grid, modal: &ModalState, m_sq: f64) -> f64 {
    let flags_axis = |dims: &[usize]| -> Vec<Vec<bool>> {
        dims.iter()
            .map(|&n| {
                (0..n)
                    .map(|i| {
                        let m = crate::spectral::fft::freq_index(i, n).unsigned_abs() as usize;
                        3 * m >= n // |m| >= (2/3)(n/2)
                    })
                    .collect()
            })
            .collect()
    };
    let spec = grid.spec();
    let x_flags = flags_axis(&spec.nx);
    let y_flags = flags_axis(&spec.ny);
    let ny_total = grid.ny_total();
    let in_tail_x: Vec<bool> = (0..grid.nx_total())
        .map(|flat| {
            let mut rem = flat;
            let mut tail = false;
            for axis in (0..spec.d).rev() {
                let i = rem % spec.nx[axis];
                rem /= spec.nx[axis];
                tail |= x_flags[axis][i];
            }
            tail
        })
        .collect();
    let in_tail_y: Vec<bool> = (0..ny_total)
        .map(|flat| {
            let mut rem = flat;
            let mut tail = false;
            for axis in (0..spec.k).rev() {
                let i = rem % spec.ny[axis];
                rem /= spec.ny[axis];
                tail |= y_flags[axis][i];
            }
            tail
        })
        .collect();
    let (mut tail, mut total) = (0.0, 0.0);
    for x_idx in 0..grid.nx_total() {
        let base = m_sq + grid.xi_sq_x()[x_idx];
        for iy in 0..ny_total {
            let flat = x_idx * ny_total + iy;
            let e = (base + grid.lambda_y()[iy]) * modal.u_hat[flat].norm_sqr()
                + modal.v_hat[flat].norm_sqr();
            total += e;
            if in_tail_x[x_idx] || in_tail_y[iy] {
                tail += e;
            }
        }
    }
    if total > 0.0 {
        tail / total
    } else {
        0.0
    }
}

/// Configuration of the scattering measurement.
#[derive(Debug, Clone)]
pub struct ScatterConfig {
    /// Nonlinearity exponent of the run (sets the Strichartz pair
    /// `L^p_t L^{2p}`).
    pub p: f64,
    /// Sign of the nonlinearity (used by the energy series).
    pub sign: f64,
    /// Extra torus regularity: when set, `(1 - Lap_y)^{gamma/2}` is
    /// pre-applied to every snapshot and the mixed spatial norm
    /// `L^{2p}_x L^2_y` replaces the joint one.
    pub gamma_weight: Option<f64>,
    /// Spacing of the coarse `V(t)` increment windows.
    pub window_dt: f64,
}

impl ScatterConfig {
    pub fn new(p: f64, sign: f64) -> Self {
        ScatterConfig {
            p,
            sign,
            gamma_weight: None,
            window_dt: 1.0,
        }
    }

    fn spatial_norm_spec(&self) -> NormSpec {
        match self.gamma_weight {
            None => NormSpec {
                time_exponent: self.p,
                mode: SpatialMode::LrhoXY,
                rho: 2.0 * self.p,
                gamma: 0.0,
            },
            Some(_) => NormSpec {
                time_exponent: self.p,
                mode: SpatialMode::LrhoXL2Y,
                rho: 2.0 * self.p,
                gamma: 0.0,
            },
        }
    }
}

/// Time series extracted from one run: cumulative and tail Strichartz
/// norms, `V(t)` Cauchy increments, energies, and the scattering state.
#[derive(Debug)]
pub struct ScatteringReport {
    pub times: Vec<f64>,
    /// `||u||_{L^p([0, t_i], .)}`, nondecreasing.
    pub strichartz_partials: Vec<f64>,
    /// `||u||_{L^p([t_i, T], .)}`, nonincreasing.
    pub tail_norms: Vec<f64>,
    /// `||V(t_{i+1}) - V(t_i)||_{H^1 x L^2}` per successive snapshot pair.
    pub v_increments: Vec<f64>,
    /// Window boundary times (multiples of `window_dt`).
    pub window_times: Vec<f64>,
    /// `||V(w_{j+1}) - V(w_j)||` over the coarse windows.
    pub window_increments: Vec<f64>,
    /// `V(T) = (f+, g+)`: the extrapolated scattering pair.
    pub scatter_state: FieldState,
    /// Conserved energy per snapshot.
    pub energy_series: Vec<f64>,
    /// Energy norm per snapshot.
    pub energy_norm_series: Vec<f64>,
    /// Empirical factor in `||V(t)-V(tau)|| <= factor * ||u||^p_{L^p([tau,t])}`,
    /// maximized over successive windows.
    pub cauchy_factor: f64,
}

/// Runs the scattering pipeline over a trajectory.
///
/// When `gamma_weight` is set the whole pipeline (norms, `V(t)`, the
/// scattering state) runs on the weighted snapshots, so the reported
/// energy-space quantities are the anisotropic `H^{1,gamma} x H^{0,gamma}`
/// ones of the original run.
pub fn scattering_profile(
    grid: &Grid,
    traj: &Trajectory,
    config: &ScatterConfig,
) -> Result<ScatteringReport> {
    if traj.is_empty() {
        return Err(KgError::Domain("empty trajectory".into()));
    }
    let weighted: Vec<FieldState> = match config.gamma_weight {
        None => traj.snapshots.clone(),
        Some(g) => traj
            .snapshots
            .iter()
            .map(|s| sobolev_y_apply(grid, s, g))
            .collect(),
    };
    let times: Vec<f64> = weighted.iter().map(|s| s.time).collect();
    let spec = config.spatial_norm_spec();
    let spatial: Vec<f64> = weighted
        .iter()
        .map(|s| snapshot_spatial_norm(grid, s, &spec))
        .collect();

    // Prefix/suffix trapezoid accumulations of the p-th power.
    let q = config.p;
    let n = times.len();
    let mut seg = vec![0.0; n.saturating_sub(1)];
    for i in 1..n {
        seg[i - 1] = 0.5 * (times[i] - times[i - 1]) * (spatial[i - 1].powf(q) + spatial[i].powf(q));
    }
    let mut strichartz_partials = Vec::with_capacity(n);
    let mut acc = 0.0;
    strichartz_partials.push(0.0);
    for s in &seg {
        acc += s;
        strichartz_partials.push(acc.powf(1.0 / q));
    }
    let total = acc;
    let mut tail_norms = Vec::with_capacity(n);
    let mut prefix = 0.0;
    tail_norms.push(total.max(0.0).powf(1.0 / q));
    for s in &seg {
        prefix += s;
        tail_norms.push((total - prefix).max(0.0).powf(1.0 / q));
    }

    // V(t) series and increments.
    let window_stride = {
        let dt_snap = if n > 1 { times[1] - times[0] } else { 1.0 };
        (config.window_dt / dt_snap).round().max(1.0) as usize
    };
    let mut v_increments = Vec::with_capacity(n.saturating_sub(1));
    let mut window_times = Vec::new();
    let mut window_increments = Vec::new();
    let mut cauchy_factor: f64 = 0.0;
    let mut v_prev: Option<FieldState> = None;
    let mut v_window: Option<FieldState> = None;
    let mut scatter_state = None;
    for (i, s) in weighted.iter().enumerate() {
        let v_t = inverse_wave(grid, s, s.time - times[0])?;
        if let Some(prev) = &v_prev {
            let inc = pair_diff_energy_norm(grid, &v_t, prev);
            // Empirical factor against the window's Strichartz mass.
            let mass = seg[i - 1].max(1e-300);
            cauchy_factor = cauchy_factor.max(inc / mass);
            v_increments.push(inc);
        }
        if i % window_stride == 0 || i == n - 1 {
            if let Some(wprev) = &v_window {
                window_increments.push(pair_diff_energy_norm(grid, &v_t, wprev));
            }
            window_times.push(s.time);
            v_window = Some(v_t.clone());
        }
        if i == n - 1 {
            scatter_state = Some(FieldState {
                time: times[0],
                u: v_t.u.clone(),
                v: v_t.v.clone(),
            });
        }
        v_prev = Some(v_t);
    }

    let energy_series: Vec<f64> = weighted
        .iter()
        .map(|s| conserved_energy(grid, s, config.p, config.sign))
        .collect();
    let energy_norm_series: Vec<f64> = weighted.iter().map(|s| energy_norm(grid, s)).collect();

    Ok(ScatteringReport {
        times,
        strichartz_partials,
        tail_norms,
        v_increments,
        window_times,
        window_increments,
        scatter_state: scatter_state.expect("nonempty trajectory"),
        energy_series,
        energy_norm_series,
        cauchy_factor,
    })
}

fn pair_diff_energy_norm(grid: &Grid, a: &FieldState, b: &FieldState) -> f64 {
    let diff = FieldState {
        time: a.time,
        u: a.u.iter().zip(&b.u).map(|(x, y)| x - y).collect(),
        v: a.v.iter().zip(&b.v).map(|(x, y)| x - y).collect(),
    };
    energy_norm(grid, &diff)
}

/// Checks the energy estimate with constant 1 in the modal energy norm:
/// `||(u,v)(t_i)|| <= ||(u,v)(0)|| + int_0^{t_i} ||F(s)||_{L^2} ds + slack`
/// with `F = sign |u|^{p-1} u` read off the snapshots and trapezoid
/// quadrature. Returns the worst violation `lhs - rhs` (nonpositive when
/// the estimate holds) and the slack-free margin at the final time.
pub fn energy_estimate_check(grid: &Grid, traj: &Trajectory, p: f64, sign: f64) -> (f64, f64) {
    let times = traj.times();
    let source_norms: Vec<f64> = traj
        .snapshots
        .iter()
        .map(|s| {
            let f = crate::evolve::nonlinearity(&s.u, p, sign);
            grid.l2_norm(&f)
        })
        .collect();
    let e0 = energy_norm(grid, &traj.snapshots[0]);
    let mut worst = f64::MIN;
    let mut margin_final = 0.0;
    let mut integral = 0.0;
    for i in 0..traj.len() {
        if i > 0 {
            integral +=
                0.5 * (times[i] - times[i - 1]) * (source_norms[i - 1] + source_norms[i]);
        }
        let lhs = energy_norm(grid, &traj.snapshots[i]);
        let rhs = e0 + integral;
        worst = worst.max(lhs - rhs);
        if i == traj.len() - 1 {
            margin_final = rhs - lhs;
        }
    }
    (worst, margin_final)
}

/// Result of the torus algebra-property measurement.
#[derive(Debug)]
pub struct AlgebraReport {
    pub gamma: f64,
    pub trials: usize,
    pub max_ratio: f64,
    pub mean_ratio: f64,
}

/// Measures `||fg||_{H^gamma} / (||f||_{H^gamma} ||g||_{H^gamma})` over
/// random band-limited pairs on the torus `T^k`. Requires `gamma > k/2`
/// (the algebra-property hypothesis). Coefficients are drawn per lattice
/// mode from the seed, independently of the grid resolution, so reports
/// at different resolutions see the same underlying functions.
pub fn algebra_check(
    torus_lengths: &[f64],
    ny: &[usize],
    gamma: f64,
    trials: usize,
    band: usize,
    seed: u64,
) -> Result<AlgebraReport> {
    let k = torus_lengths.len();
    if k == 0 || k != ny.len() {
        return Err(KgError::Domain("torus_lengths/ny mismatch".into()));
    }
    if !(gamma > k as f64 / 2.0) {
        return Err(KgError::Exponent(format!(
            "algebra property requires gamma > k/2 (gamma = {gamma}, k = {k})"
        )));
    }
    for &n in ny {
        if n < 4 * band.max(1) {
            return Err(KgError::Domain(format!(
                "resolution {n} too small for band {band} (products must stay unaliased)"
            )));
        }
    }
    let fft = NdFft::new(ny);
    let lambda = eigenvalues_torus(torus_lengths, ny)?;
    let volume: f64 = torus_lengths.iter().product();
    let n_total: usize = ny.iter().product();

    // Band lattice in a fixed order shared by all resolutions.
    let mut band_modes: Vec<Vec<i64>> = vec![vec![]];
    for _ in 0..k {
        let mut next = Vec::new();
        for m in band_modes {
            for b in -(band as i64)..=(band as i64) {
                let mut m2 = m.clone();
                m2.push(b);
                next.push(m2);
            }
        }
        band_modes = next;
    }
    let flat_of = |mode: &[i64]| -> usize {
        let mut flat = 0;
        for (axis, &m) in mode.iter().enumerate() {
            let n = ny[axis];
            let i = if m >= 0 { m as usize } else { (m + n as i64) as usize };
            flat = flat * n + i;
        }
        flat
    };

    let h_gamma = |hat: &[Complex64]| -> f64 {
        let acc: f64 = hat
            .iter()
            .zip(&lambda)
            .map(|(z, &l)| (1.0 + l).powf(gamma) * z.norm_sqr())
            .sum();
        (acc * volume).sqrt()
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_ratio: f64 = 0.0;
    let mut sum_ratio = 0.0;
    for _ in 0..trials {
        let mut f_hat = vec![Complex64::default(); n_total];
        let mut g_hat = vec![Complex64::default(); n_total];
        for mode in &band_modes {
            let draw = |rng: &mut ChaCha8Rng| {
                Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
            };
            let (zf, zg) = (draw(&mut rng), draw(&mut rng));
            let flat = flat_of(mode);
            f_hat[flat] = zf;
            g_hat[flat] = zg;
        }
        let nf = h_gamma(&f_hat);
        let ng = h_gamma(&g_hat);
        let mut f = f_hat.clone();
        let mut g = g_hat.clone();
        fft.inverse(&mut f);
        fft.inverse(&mut g);
        let mut prod: Vec<Complex64> = f.iter().zip(&g).map(|(a, b)| a * b).collect();
        fft.forward(&mut prod);
        let ratio = h_gamma(&prod) / (nf * ng).max(1e-300);
        max_ratio = max_ratio.max(ratio);
        sum_ratio += ratio;
    }
    Ok(AlgebraReport {
        gamma,
        trials,
        max_ratio,
        mean_ratio: sum_ratio / trials.max(1) as f64,
    })
}
