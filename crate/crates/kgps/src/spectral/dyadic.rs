//! Dyadic Littlewood-Paley projectors in the box frequencies and the
//! associated Besov norms.
//!
//! The cutoff profile is fixed once and for all so tests are deterministic:
//! `chi0(xi) = psi(|xi|)` with `psi = 1` on `[0,1]`, `psi = 0` on `[2,inf)`
//! and the smooth monotone interpolant `exp(1 - 1/(1 - (rho-1)^2))` on
//! `(1,2)`. `phi_j(xi) = chi0(2^-j xi) - chi0(2^-j+1 xi)` for `j > 0`, so
//! the partial sums telescope to `chi0(2^-J xi)`, which is exactly 1 on the
//! whole lattice once `2^-J |xi|_max <= 1`.

use num_complex::Complex64;

use super::Grid;
use crate::error::Result;

/// Radial cutoff profile: 1 on [0,1], 0 on [2,inf), smooth in between.
pub fn chi0(rho: f64) -> f64 {
    if rho <= 1.0 {
        1.0
    } else if rho >= 2.0 {
        0.0
    } else {
        let t = rho - 1.0;
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

/// Dyadic annulus profile for `j > 0`.
pub fn phi_j(j: u32, rho: f64) -> f64 {
    let scale = (2.0f64).powi(-(j as i32));
    chi0(scale * rho) - chi0(2.0 * scale * rho)
}

/// Multiplier of block `j` (block 0 is the low-frequency cutoff).
pub fn block_multiplier(j: u32, rho: f64) -> f64 {
    if j == 0 {
        chi0(rho)
    } else {
        phi_j(j, rho)
    }
}

/// Highest block index needed to cover the x-lattice: the partial partition
/// `P_0 + sum_{j<=j_max} P_j` is exactly the identity on the grid.
pub fn j_max(grid: &Grid) -> u32 {
    let ximax = grid.xi_norm_max();
    if ximax <= 1.0 {
        return 0;
    }
    let mut j = ximax.log2().ceil() as u32;
    while (2.0f64).powi(-(j as i32)) * ximax > 1.0 {
        j += 1;
    }
    j
}

/// One dyadic block of a scalar field.
#[derive(Debug, Clone)]
pub struct DyadicBlock {
    pub j: u32,
    pub data: Vec<Complex64>,
}

fn apply_block_multiplier(grid: &Grid, modal: &mut [Complex64], j: u32) {
    let ny_total = grid.ny_total();
    let norms = grid.xi_norm_x();
    for (x_idx, chunk) in modal.chunks_exact_mut(ny_total).enumerate() {
        let m = block_multiplier(j, norms[x_idx]);
        if m == 1.0 {
            continue;
        }
        for z in chunk {
            *z *= m;
        }
    }
}

/// Projects a scalar field onto dyadic block `j`; the multiplier acts on
/// the box frequencies only.
pub fn littlewood_paley_project(grid: &Grid, data: &[Complex64], j: u32) -> Result<DyadicBlock> {
    let mut modal = data.to_vec();
    grid.fft().forward(&mut modal);
    apply_block_multiplier(grid, &mut modal, j);
    grid.fft().inverse(&mut modal);
    Ok(DyadicBlock { j, data: modal })
}

/// Mixed spatial norm `L^r` in the box variables with the torus variables
/// held in `L^2`. `r` may be `f64::INFINITY`.
pub fn lr_x_l2_y_norm(grid: &Grid, data: &[Complex64], r: f64) -> f64 {
    let ny_total = grid.ny_total();
    let cell_y: f64 = grid
        .spec()
        .torus_lengths
        .iter()
        .zip(&grid.spec().ny)
        .map(|(&l, &n)| l / n as f64)
        .collect::<Vec<_>>()
        .iter()
        .product();
    let cell_x = grid.cell_volume() / cell_y;
    let per_x: Vec<f64> = data
        .chunks_exact(ny_total)
        .map(|chunk| {
            let s: f64 = chunk.iter().map(|z| z.norm_sqr()).sum();
            (s * cell_y).sqrt()
        })
        .collect();
    if r.is_infinite() {
        per_x.into_iter().fold(0.0, f64::max)
    } else {
        let s: f64 = per_x.iter().map(|g| g.powf(r)).sum();
        (s * cell_x).powf(1.0 / r)
    }
}

/// Besov norm `||P_0 f||_{L^r_x L^2_y} +
/// (sum_{j>0} 2^{2sj} ||P_j f||^2_{L^r_x L^2_y})^{1/2}` over the blocks
/// resolved by the lattice.
pub fn besov_norm(grid: &Grid, data: &[Complex64], s: f64, r: f64) -> Result<f64> {
    let jmax = j_max(grid);
    let mut modal = data.to_vec();
    grid.fft().forward(&mut modal);
    let mut low = 0.0;
    let mut high_sq = 0.0;
    for j in 0..=jmax {
        let mut block = modal.clone();
        apply_block_multiplier(grid, &mut block, j);
        grid.fft().inverse(&mut block);
        let nrm = lr_x_l2_y_norm(grid, &block, r);
        if j == 0 {
            low = nrm;
        } else {
            let w = (2.0f64).powf(2.0 * s * j as f64);
            high_sq += w * nrm * nrm;
        }
    }
    Ok(low + high_sq.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::tests::{random_field, small_spec};
    use crate::spectral::{make_grid, DomainSpec, FieldState};

    fn rel_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        let num: f64 = a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let den: f64 = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        num / den.max(1e-300)
    }

    fn one_d_grid(n: usize, l: f64) -> crate::spectral::Grid {
        make_grid(DomainSpec {
            d: 1,
            k: 1,
            box_lengths: vec![l],
            torus_lengths: vec![2.0 * std::f64::consts::PI],
            nx: vec![n],
            ny: vec![4],
        })
        .unwrap()
    }

    #[test]
    fn cutoff_profile_shape() {
        assert_eq!(chi0(0.0), 1.0);
        assert_eq!(chi0(1.0), 1.0);
        assert_eq!(chi0(2.0), 0.0);
        assert_eq!(chi0(5.0), 0.0);
        let mut prev = 1.0;
        for i in 1..100 {
            let v = chi0(1.0 + i as f64 / 100.0);
            assert!(v <= prev && (0.0..=1.0).contains(&v));
            prev = v;
        }
    }

    #[test]
    fn partition_telescopes_to_identity() {
        let grid = make_grid(small_spec()).unwrap();
        let field = random_field(&grid, 5);
        let mut sum = vec![Complex64::default(); grid.len()];
        for j in 0..=j_max(&grid) {
            let block = littlewood_paley_project(&grid, &field.u, j).unwrap();
            for (s, b) in sum.iter_mut().zip(&block.data) {
                *s += b;
            }
        }
        assert!(rel_diff(&sum, &field.u) < 1e-12);
    }

    #[test]
    fn low_frequency_fields_live_in_block_zero() {
        // Spectrum inside |xi| <= 1/2: P_0 is the identity, all P_j vanish.
        let grid = one_d_grid(64, 4.0 * std::f64::consts::PI);
        let mut field = FieldState::zeros(&grid, 0.0);
        let xs = grid.x_coords(0);
        for (i, &x) in xs.iter().enumerate() {
            let val = Complex64::new((0.5 * x).cos(), (0.5 * x).sin());
            for jy in 0..4 {
                field.u[i * 4 + jy] = val;
            }
        }
        let p0 = littlewood_paley_project(&grid, &field.u, 0).unwrap();
        assert!(rel_diff(&p0.data, &field.u) < 1e-12);
        for j in 1..=j_max(&grid) {
            let pj = littlewood_paley_project(&grid, &field.u, j).unwrap();
            let mass: f64 = pj.data.iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(mass < 1e-13, "block {j} not empty");
        }
    }

    #[test]
    fn single_frequency_matches_pointwise_cutoff() {
        // |xi| = 3 splits across blocks exactly as phi_j(3) dictates.
        let grid = one_d_grid(32, 2.0 * std::f64::consts::PI);
        let mut field = FieldState::zeros(&grid, 0.0);
        let xs = grid.x_coords(0);
        for (i, &x) in xs.iter().enumerate() {
            let val = Complex64::from_polar(1.0, 3.0 * x);
            for jy in 0..4 {
                field.u[i * 4 + jy] = val;
            }
        }
        for j in 0..=j_max(&grid) {
            let pj = littlewood_paley_project(&grid, &field.u, j).unwrap();
            let expected = block_multiplier(j, 3.0);
            // The block equals the field scaled by the multiplier value.
            let scaled: Vec<Complex64> = field.u.iter().map(|z| z * expected).collect();
            let diff: f64 = pj
                .data
                .iter()
                .zip(&scaled)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(diff < 1e-12, "block {j}");
        }
    }

    #[test]
    fn besov_single_block_scaling() {
        // A plane wave with |xi| = 2^j lies entirely in block j, so the
        // norm is exactly 2^{sj} times its spatial norm.
        let grid = one_d_grid(32, 2.0 * std::f64::consts::PI);
        let mut field = FieldState::zeros(&grid, 0.0);
        let xs = grid.x_coords(0);
        let amp = 0.8;
        for (i, &x) in xs.iter().enumerate() {
            let val = Complex64::from_polar(amp, 4.0 * x);
            for jy in 0..4 {
                field.u[i * 4 + jy] = val;
            }
        }
        let s = 0.7;
        let r = 4.0;
        let spatial = lr_x_l2_y_norm(&grid, &field.u, r);
        let norm = besov_norm(&grid, &field.u, s, r).unwrap();
        let expected = (2.0f64).powf(2.0 * s) * spatial; // j = 2
        assert!((norm - expected).abs() / expected < 1e-12);
    }

    #[test]
    fn besov_l2_comparison() {
        // With s=0, r=2 the Besov norm is equivalent to L^2; the factor is
        // guaranteed in [1/sqrt(2), sqrt(2)] because at most two adjacent
        // multipliers overlap at any frequency.
        let grid = make_grid(small_spec()).unwrap();
        let field = random_field(&grid, 17);
        let besov = besov_norm(&grid, &field.u, 0.0, 2.0).unwrap();
        let l2 = grid.l2_norm(&field.u);
        let ratio = besov / l2;
        assert!(
            (std::f64::consts::FRAC_1_SQRT_2..=std::f64::consts::SQRT_2).contains(&ratio),
            "ratio {ratio}"
        );
    }

    #[test]
    fn besov_h1_equivalence_across_resolutions() {
        // s=1, r=2 against the direct Sobolev oracle
        // sqrt(sum (1+|xi|^2) |a|^2 * Vol); the equivalence constant is
        // recorded empirically and must stay within [1/4, 4].
        for n in [64usize, 512] {
            let grid = one_d_grid(n, 16.0);
            let field = random_field(&grid, 23);
            // Band-limit to half the lattice to keep both grids comparable.
            let mut modal = field.u.clone();
            grid.fft().forward(&mut modal);
            let ny_total = grid.ny_total();
            for (x_idx, chunk) in modal.chunks_exact_mut(ny_total).enumerate() {
                if grid.xi_norm_x()[x_idx] > 12.0 {
                    chunk.iter_mut().for_each(|z| *z = Complex64::default());
                }
            }
            let mut h1_sq = 0.0;
            for (x_idx, chunk) in modal.chunks_exact(ny_total).enumerate() {
                let w = 1.0 + grid.xi_sq_x()[x_idx];
                h1_sq += w * chunk.iter().map(|z| z.norm_sqr()).sum::<f64>();
            }
            let h1 = (h1_sq * grid.volume()).sqrt();
            let mut data = modal.clone();
            grid.fft().inverse(&mut data);
            let besov = besov_norm(&grid, &data, 1.0, 2.0).unwrap();
            let ratio = besov / h1;
            assert!((0.25..=4.0).contains(&ratio), "n={n}: ratio {ratio}");
        }
    }
}
