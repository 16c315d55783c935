//! Exact linear Klein-Gordon flows.
//!
//! In mode variables the linear part decouples: each joint mode
//! `(xi, n)` evolves under the 2x2 rotation `e^{tH}` with frequency
//! `omega = sqrt(m^2 + lambda_n + |xi|^2)`,
//!
//! ```text
//! u(t) =  cos(wt) u0 + sin(wt)/w v0
//! v(t) = -w sin(wt) u0 + cos(wt) v0
//! ```
//!
//! which is unitary for the energy pairing `w^2 |u|^2 + |v|^2`. With the
//! default mass `m^2 = 1` every omega is at least 1, so `sin(wt)/w` is
//! evaluated as written; for user-supplied masses it stays well
//! conditioned because `omega >= m > 0` (the massless wave case is out
//! of scope).

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{KgError, Result};
use crate::spectral::{forward_transform, inverse_transform, DomainSpec, FieldState, Grid, ModalState};

/// Frequency of one joint mode: `omega = sqrt(m^2 + lambda + |xi|^2)`.
/// With the default unit mass `omega >= 1` for every mode.
pub fn mode_frequency(lambda: f64, xi_sq: f64, m_sq: f64) -> f64 {
    debug_assert!(m_sq + lambda + xi_sq > 0.0);
    (m_sq + lambda + xi_sq).sqrt()
}

/// Exact flow of one joint mode for time `t`.
pub fn mode_flow(
    u0: Complex64,
    v0: Complex64,
    lambda: f64,
    xi_sq: f64,
    t: f64,
    m_sq: f64,
) -> (Complex64, Complex64) {
    let omega = mode_frequency(lambda, xi_sq, m_sq);
    let (s, c) = (omega * t).sin_cos();
    (c * u0 + (s / omega) * v0, -(omega * s) * u0 + c * v0)
}

/// Applies `e^{tH}` to mode amplitudes in place.
pub fn rotate_modal(grid: &Grid, modal: &mut ModalState, t: f64, m_sq: f64) {
    let ny_total = grid.ny_total();
    let xi_sq = grid.xi_sq_x();
    let lambda = grid.lambda_y();
    modal
        .u_hat
        .par_chunks_exact_mut(ny_total)
        .zip(modal.v_hat.par_chunks_exact_mut(ny_total))
        .enumerate()
        .for_each(|(x_idx, (urow, vrow))| {
            let base = m_sq + xi_sq[x_idx];
            for iy in 0..ny_total {
                let omega = (base + lambda[iy]).sqrt();
                let (s, c) = (omega * t).sin_cos();
                let u0 = urow[iy];
                let v0 = vrow[iy];
                urow[iy] = c * u0 + (s / omega) * v0;
                vrow[iy] = -(omega * s) * u0 + c * v0;
            }
        });
    modal.time += t;
}

/// Per-mode rotation coefficients for one fixed time step, reused across
/// many steps of a run.
pub struct StepRotation {
    pub dt: f64,
    pub m_sq: f64,
    cos_wt: Vec<f64>,
    sinc_wt: Vec<f64>,
    wsin_wt: Vec<f64>,
}

impl StepRotation {
    pub fn new(grid: &Grid, dt: f64, m_sq: f64) -> Self {
        let ny_total = grid.ny_total();
        let n = grid.len();
        let mut cos_wt = vec![0.0; n];
        let mut sinc_wt = vec![0.0; n];
        let mut wsin_wt = vec![0.0; n];
        let xi_sq = grid.xi_sq_x();
        let lambda = grid.lambda_y();
        for x_idx in 0..grid.nx_total() {
            let base = m_sq + xi_sq[x_idx];
            for iy in 0..ny_total {
                let omega = (base + lambda[iy]).sqrt();
                let (s, c) = (omega * dt).sin_cos();
                let flat = x_idx * ny_total + iy;
                cos_wt[flat] = c;
                sinc_wt[flat] = s / omega;
                wsin_wt[flat] = omega * s;
            }
        }
        StepRotation {
            dt,
            m_sq,
            cos_wt,
            sinc_wt,
            wsin_wt,
        }
    }

    /// One step of `e^{dt H}` on raw amplitude buffers.
    pub fn apply(&self, u_hat: &mut [Complex64], v_hat: &mut [Complex64]) {
        u_hat
            .par_iter_mut()
            .zip(v_hat.par_iter_mut())
            .enumerate()
            .for_each(|(i, (u, v))| {
                let u0 = *u;
                let v0 = *v;
                *u = self.cos_wt[i] * u0 + self.sinc_wt[i] * v0;
                *v = -self.wsin_wt[i] * u0 + self.cos_wt[i] * v0;
            });
    }
}

/// `S(t)` on the energy space vector `(u, v)` with mass `m^2`.
pub fn linear_flow_mass(grid: &Grid, state: &FieldState, t: f64, m_sq: f64) -> Result<FieldState> {
    let mut modal = forward_transform(grid, state)?;
    rotate_modal(grid, &mut modal, t, m_sq);
    inverse_transform(grid, &modal)
}

/// `S(t)` with the unit mass of the main equation.
pub fn linear_flow(grid: &Grid, state: &FieldState, t: f64) -> Result<FieldState> {
    linear_flow_mass(grid, state, t, 1.0)
}

/// `V(t) = e^{-tH}(u, v)`: undoes the free flow, exposing the scattering
/// state of a trajectory snapshot.
pub fn inverse_wave(grid: &Grid, state: &FieldState, t: f64) -> Result<FieldState> {
    linear_flow(grid, state, -t)
}

/// A rescaled solution: same mode amplitudes on a shrunk box.
#[derive(Debug, Clone)]
pub struct Rescaled {
    /// Domain with `box_lengths / sqrt(lambda)`; torus factor untouched.
    pub spec: DomainSpec,
    pub states: Vec<FieldState>,
}

/// Rescales `u(t,x) -> u_lambda(t,x) = u(sqrt(l) t, sqrt(l) x)` on the
/// box factor. A mass-1 solution becomes a mass-`l` solution with data
/// `f_l(x) = f(sqrt(l) x)`, `g_l(x) = sqrt(l) g(sqrt(l) x)`.
///
/// The rescaled solution lives on the box with sides `L_i / sqrt(l)`:
/// grid point `i` of the new box maps to grid point `i` of the old one,
/// so sample values transfer exactly (u unchanged, v scaled by `sqrt(l)`)
/// and every mode index stays on the lattice for any `l > 0`; mode `m`
/// carries the frequency `sqrt(l) xi_m` of the new lattice. Snapshot
/// times shrink to `t / sqrt(l)`.
///
/// The field must be constant in the torus directions (the scaling
/// argument lives on the Euclidean factor alone).
pub fn rescale_solution(grid: &Grid, states: &[FieldState], lambda: f64) -> Result<Rescaled> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(KgError::Domain(format!("rescaling mass {lambda} must be positive")));
    }
    let sqrt_l = lambda.sqrt();
    for state in states {
        state.check_shape(grid)?;
        let modal = forward_transform(grid, state)?;
        let ny_total = grid.ny_total();
        let scale = modal
            .u_hat
            .iter()
            .chain(&modal.v_hat)
            .map(|z| z.norm())
            .fold(0.0, f64::max)
            .max(1e-300);
        for x_idx in 0..grid.nx_total() {
            for iy in 1..ny_total {
                let z = modal.u_hat[x_idx * ny_total + iy].norm()
                    + modal.v_hat[x_idx * ny_total + iy].norm();
                if z > 1e-10 * scale {
                    return Err(KgError::Domain(
                        "rescale_solution requires a field constant in the torus directions"
                            .into(),
                    ));
                }
            }
        }
    }
    let mut spec = grid.spec().clone();
    for l in &mut spec.box_lengths {
        *l /= sqrt_l;
    }
    let states = states
        .iter()
        .map(|s| FieldState {
            time: s.time / sqrt_l,
            u: s.u.clone(),
            v: s.v.iter().map(|z| z * sqrt_l).collect(),
        })
        .collect();
    Ok(Rescaled { spec, states })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{make_grid, DomainSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn test_grid() -> Grid {
        make_grid(DomainSpec {
            d: 2,
            k: 1,
            box_lengths: vec![12.0, 10.0],
            torus_lengths: vec![2.0 * std::f64::consts::PI],
            nx: vec![16, 8],
            ny: vec![4],
        })
        .unwrap()
    }

    fn random_state(grid: &Grid, seed: u64) -> FieldState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = FieldState::zeros(grid, 0.0);
        for z in f.u.iter_mut().chain(f.v.iter_mut()) {
            *z = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        }
        f
    }

    fn energy_norm(grid: &Grid, state: &FieldState, m_sq: f64) -> f64 {
        let modal = forward_transform(grid, state).unwrap();
        let ny_total = grid.ny_total();
        let mut acc = 0.0;
        for x_idx in 0..grid.nx_total() {
            for iy in 0..ny_total {
                let w2 = m_sq + grid.xi_sq_x()[x_idx] + grid.lambda_y()[iy];
                let flat = x_idx * ny_total + iy;
                acc += w2 * modal.u_hat[flat].norm_sqr() + modal.v_hat[flat].norm_sqr();
            }
        }
        (acc * grid.volume()).sqrt()
    }

    fn rel_state_diff(a: &FieldState, b: &FieldState) -> f64 {
        let num: f64 = a
            .u
            .iter()
            .zip(&b.u)
            .chain(a.v.iter().zip(&b.v))
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let den: f64 = b
            .u
            .iter()
            .chain(&b.v)
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt();
        num / den.max(1e-300)
    }

    #[test]
    fn unit_oscillator() {
        for t in [0.0, 0.3, 2.0, -1.7] {
            let (u, v) = mode_flow(Complex64::new(1.0, 0.0), Complex64::default(), 0.0, 0.0, t, 1.0);
            assert!((u.re - t.cos()).abs() < 1e-14);
            assert!((v.re + t.sin()).abs() < 1e-14);
            assert!(u.im.abs() < 1e-14 && v.im.abs() < 1e-14);
        }
    }

    #[test]
    fn unit_mass_frequencies_are_at_least_one() {
        let grid = test_grid();
        for x_idx in 0..grid.nx_total() {
            for iy in 0..grid.ny_total() {
                let w = mode_frequency(grid.lambda_y()[iy], grid.xi_sq_x()[x_idx], 1.0);
                assert!(w >= 1.0);
            }
        }
        assert_eq!(mode_frequency(0.0, 0.0, 1.0), 1.0);
    }

    #[test]
    fn identity_at_time_zero() {
        let u0 = Complex64::new(0.4, -1.1);
        let v0 = Complex64::new(-0.2, 0.9);
        let (u, v) = mode_flow(u0, v0, 3.0, 7.0, 0.0, 1.0);
        assert_eq!(u, u0);
        assert_eq!(v, v0);
    }

    /// Brute-force oracle: RK4 on u'' = -(m^2 + lambda + xi^2) u.
    pub(crate) fn rk4_mode(
        u0: Complex64,
        v0: Complex64,
        omega_sq: f64,
        t: f64,
        dt: f64,
    ) -> (Complex64, Complex64) {
        let steps = (t.abs() / dt).round() as usize;
        let h = t / steps.max(1) as f64;
        let mut u = u0;
        let mut v = v0;
        let acc = |u: Complex64| -omega_sq * u;
        for _ in 0..steps.max(1) {
            let (k1u, k1v) = (v, acc(u));
            let (k2u, k2v) = (v + 0.5 * h * k1v, acc(u + 0.5 * h * k1u));
            let (k3u, k3v) = (v + 0.5 * h * k2v, acc(u + 0.5 * h * k2u));
            let (k4u, k4v) = (v + h * k3v, acc(u + h * k3u));
            u += (h / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
            v += (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        }
        (u, v)
    }

    #[test]
    fn mode_flow_matches_rk4() {
        let u0 = Complex64::new(1.0, 2.0);
        let v0 = Complex64::new(0.3, 0.0);
        let (lambda, xi_sq, t) = (5.0, 2.0, 0.7);
        let (u, v) = mode_flow(u0, v0, lambda, xi_sq, t, 1.0);
        let (ur, vr) = rk4_mode(u0, v0, 1.0 + lambda + xi_sq, t, 1e-5);
        assert!((u - ur).norm() < 1e-8);
        assert!((v - vr).norm() < 1e-8);
    }

    #[test]
    fn linear_flow_identity_and_confinement() {
        let grid = test_grid();
        let state = random_state(&grid, 2);
        let flowed = linear_flow(&grid, &state, 0.0).unwrap();
        assert!(rel_state_diff(&flowed, &state) < 1e-12);

        // A single joint mode stays confined to its bin.
        let mut modal = ModalState::zeros(&grid, 0.0);
        let flat = (3 * 8 + 2) * 4 + 1;
        modal.u_hat[flat] = Complex64::new(0.6, 0.1);
        modal.v_hat[flat] = Complex64::new(-0.3, 0.2);
        let state = inverse_transform(&grid, &modal).unwrap();
        let out = forward_transform(&grid, &linear_flow(&grid, &state, 1.3).unwrap()).unwrap();
        for (i, (zu, zv)) in out.u_hat.iter().zip(&out.v_hat).enumerate() {
            if i != flat {
                assert!(zu.norm() < 1e-13 && zv.norm() < 1e-13);
            }
        }
        // ... and its phase matches the scalar mode flow.
        let x_idx = flat / 4;
        let w_sq = 1.0 + grid.xi_sq_x()[x_idx] + grid.lambda_y()[flat % 4];
        let (eu, ev) = mode_flow(
            modal.u_hat[flat],
            modal.v_hat[flat],
            w_sq - 1.0,
            0.0,
            1.3,
            1.0,
        );
        assert!((out.u_hat[flat] - eu).norm() < 1e-12);
        assert!((out.v_hat[flat] - ev).norm() < 1e-12);
    }

    #[test]
    fn group_law_isometry_and_inverse() {
        let grid = test_grid();
        let state = random_state(&grid, 3);
        let e0 = energy_norm(&grid, &state, 1.0);

        let a = linear_flow(&grid, &state, 0.9).unwrap();
        let ab = linear_flow(&grid, &a, 1.4).unwrap();
        let direct = linear_flow(&grid, &state, 2.3).unwrap();
        assert!(rel_state_diff(&ab, &direct) < 1e-11);

        let e1 = energy_norm(&grid, &ab, 1.0);
        assert!((e1 - e0).abs() / e0 < 1e-11);

        let back = inverse_wave(&grid, &ab, 2.3).unwrap();
        assert!(rel_state_diff(&back, &state) < 1e-11);
    }

    #[test]
    fn v_is_constant_on_free_solutions() {
        let grid = test_grid();
        let state = random_state(&grid, 4);
        for t in [0.5, 1.0, 3.7] {
            let evolved = linear_flow(&grid, &state, t).unwrap();
            let v_t = inverse_wave(&grid, &evolved, t).unwrap();
            assert!(rel_state_diff(&v_t, &state) < 1e-10);
        }
    }

    #[test]
    fn commutes_with_y_multipliers() {
        // (1 - Lap_y)^{g/2} before or after the flow gives identical results.
        let grid = test_grid();
        let state = random_state(&grid, 5);
        let gamma = 1.1;
        let weight = |modal: &mut ModalState| {
            let ny_total = grid.ny_total();
            for chunk in modal
                .u_hat
                .chunks_exact_mut(ny_total)
                .chain(modal.v_hat.chunks_exact_mut(ny_total))
            {
                for (iy, z) in chunk.iter_mut().enumerate() {
                    *z *= (1.0 + grid.lambda_y()[iy]).powf(gamma / 2.0);
                }
            }
        };
        let mut before = forward_transform(&grid, &state).unwrap();
        weight(&mut before);
        let before = linear_flow(&grid, &inverse_transform(&grid, &before).unwrap(), 0.8).unwrap();

        let flowed = linear_flow(&grid, &state, 0.8).unwrap();
        let mut after = forward_transform(&grid, &flowed).unwrap();
        weight(&mut after);
        let after = inverse_transform(&grid, &after).unwrap();
        assert!(rel_state_diff(&before, &after) < 1e-12);
    }

    #[test]
    fn step_rotation_matches_rotate_modal() {
        let grid = test_grid();
        let state = random_state(&grid, 6);
        let mut a = forward_transform(&grid, &state).unwrap();
        let mut b = a.clone();
        rotate_modal(&grid, &mut a, 0.05, 1.0);
        let rot = StepRotation::new(&grid, 0.05, 1.0);
        rot.apply(&mut b.u_hat, &mut b.v_hat);
        for (x, y) in a.u_hat.iter().zip(&b.u_hat).chain(a.v_hat.iter().zip(&b.v_hat)) {
            assert!((x - y).norm() < 1e-15);
        }
    }

    fn y_constant_mode_state(grid: &Grid, mx: usize, amp: Complex64) -> FieldState {
        let mut modal = ModalState::zeros(grid, 0.0);
        let ny_total = grid.ny_total();
        modal.u_hat[mx * ny_total] = amp;
        modal.v_hat[mx * ny_total] = 0.5 * amp;
        inverse_transform(grid, &modal).unwrap()
    }

    #[test]
    fn rescale_identity_and_frequency_map() {
        let grid = make_grid(DomainSpec {
            d: 1,
            k: 1,
            box_lengths: vec![2.0 * std::f64::consts::PI],
            torus_lengths: vec![1.0],
            nx: vec![16],
            ny: vec![4],
        })
        .unwrap();
        let state = y_constant_mode_state(&grid, 3, Complex64::new(0.8, -0.1));

        let same = rescale_solution(&grid, std::slice::from_ref(&state), 1.0).unwrap();
        assert_eq!(same.spec, *grid.spec());
        assert!(rel_state_diff(&same.states[0], &state) < 1e-13);

        // lambda = 4 halves the box, so mode 3 now carries frequency
        // 2 * xi_3 of the original lattice.
        let scaled = rescale_solution(&grid, std::slice::from_ref(&state), 4.0).unwrap();
        assert!((scaled.spec.box_lengths[0] - std::f64::consts::PI).abs() < 1e-14);
        let new_grid = make_grid(scaled.spec.clone()).unwrap();
        assert!((new_grid.xi()[0][3] - 2.0 * grid.xi()[0][3]).abs() < 1e-12);
        // v picks up the sqrt(lambda) factor, u transfers unchanged.
        let modal = forward_transform(&new_grid, &scaled.states[0]).unwrap();
        assert!((modal.u_hat[3 * 4] - Complex64::new(0.8, -0.1)).norm() < 1e-12);
        assert!((modal.v_hat[3 * 4] - 2.0 * 0.5 * Complex64::new(0.8, -0.1)).norm() < 1e-12);

        assert!(rescale_solution(&grid, std::slice::from_ref(&state), 0.0).is_err());
        assert!(rescale_solution(&grid, std::slice::from_ref(&state), -2.0).is_err());
    }

    #[test]
    fn rescale_rejects_y_dependent_fields() {
        let grid = test_grid();
        let state = random_state(&grid, 8);
        assert!(rescale_solution(&grid, std::slice::from_ref(&state), 2.0).is_err());
    }

    #[test]
    fn rescale_norm_bookkeeping() {
        // ||f_l||_2 = l^{-d/4} ||f||_2, ||f_l||_{H1dot} = l^{1/2 - d/4} ||f||,
        // ||g_l||_2 = l^{1/2 - d/4} ||g||_2 for d = 1.
        let grid = make_grid(DomainSpec {
            d: 1,
            k: 1,
            box_lengths: vec![8.0],
            torus_lengths: vec![1.0],
            nx: vec![32],
            ny: vec![4],
        })
        .unwrap();
        let mut state = y_constant_mode_state(&grid, 2, Complex64::new(0.7, 0.3));
        let extra = y_constant_mode_state(&grid, 5, Complex64::new(-0.2, 0.4));
        for (a, b) in state.u.iter_mut().zip(&extra.u) {
            *a += b;
        }
        for (a, b) in state.v.iter_mut().zip(&extra.v) {
            *a += b;
        }

        let lambda = 4.0f64;
        let scaled = rescale_solution(&grid, std::slice::from_ref(&state), lambda).unwrap();
        let new_grid = make_grid(scaled.spec.clone()).unwrap();

        let l2 = |g: &Grid, data: &[Complex64]| g.l2_norm(data);
        let h1dot = |g: &Grid, data: &[Complex64]| {
            let mut modal = data.to_vec();
            g.fft().forward(&mut modal);
            let ny_total = g.ny_total();
            let mut acc = 0.0;
            for (x_idx, chunk) in modal.chunks_exact(ny_total).enumerate() {
                acc += g.xi_sq_x()[x_idx] * chunk.iter().map(|z| z.norm_sqr()).sum::<f64>();
            }
            (acc * g.volume()).sqrt()
        };

        let d = 1.0f64;
        let tol = 1e-10;
        let r = l2(&new_grid, &scaled.states[0].u) / l2(&grid, &state.u);
        assert!((r - lambda.powf(-d / 4.0)).abs() < tol);
        let r = h1dot(&new_grid, &scaled.states[0].u) / h1dot(&grid, &state.u);
        assert!((r - lambda.powf(0.5 - d / 4.0)).abs() < tol);
        let r = l2(&new_grid, &scaled.states[0].v) / l2(&grid, &state.v);
        assert!((r - lambda.powf(0.5 - d / 4.0)).abs() < tol);
    }
}
