//! Grids on the periodic box times torus, Fourier transforms between field
//! samples and mode amplitudes, torus eigenvalues, and the dyadic
//! Littlewood-Paley machinery.

pub mod dyadic;
pub mod fft;
pub mod io;

use num_complex::Complex64;

use crate::error::{KgError, Result};
use fft::{freq_index, NdFft};

pub use dyadic::{besov_norm, littlewood_paley_project, DyadicBlock};

/// Geometry of the computational domain: a periodic box of `d` sides
/// standing in for `R^d` and a flat torus of `k` sides.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub d: usize,
    pub k: usize,
    /// Box side lengths (periodic surrogate for `R^d`), length `d`.
    pub box_lengths: Vec<f64>,
    /// Torus circumferences, length `k`.
    pub torus_lengths: Vec<f64>,
    /// Grid sizes per box axis; even, at least 4.
    pub nx: Vec<usize>,
    /// Grid sizes per torus axis; even, at least 4.
    pub ny: Vec<usize>,
}

impl DomainSpec {
    pub fn validate(&self) -> Result<()> {
        if !(1..=5).contains(&self.d) {
            return Err(KgError::Domain(format!("d = {} outside [1,5]", self.d)));
        }
        if self.k < 1 {
            return Err(KgError::Domain("k must be >= 1".into()));
        }
        if self.box_lengths.len() != self.d || self.nx.len() != self.d {
            return Err(KgError::Domain("box_lengths/nx must have length d".into()));
        }
        if self.torus_lengths.len() != self.k || self.ny.len() != self.k {
            return Err(KgError::Domain("torus_lengths/ny must have length k".into()));
        }
        for &l in self.box_lengths.iter().chain(&self.torus_lengths) {
            if !(l.is_finite() && l > 0.0) {
                return Err(KgError::Domain(format!("nonpositive domain length {l}")));
            }
        }
        for &n in self.nx.iter().chain(&self.ny) {
            if n < 4 {
                return Err(KgError::Domain(format!("grid size {n} below minimum 4")));
            }
            if n % 2 != 0 {
                return Err(KgError::Domain(format!(
                    "odd grid size {n}: centered frequency lattice ill-defined"
                )));
            }
        }
        Ok(())
    }

    /// Total number of grid points.
    pub fn total_points(&self) -> usize {
        self.nx.iter().chain(&self.ny).product()
    }
}

/// Torus eigenvalues `lambda_n = sum_i (2 pi n_i / l_i)^2` over the centered
/// integer lattice, flattened row-major in FFT bin order.
pub fn eigenvalues_torus(torus_lengths: &[f64], ny: &[usize]) -> Result<Vec<f64>> {
    if torus_lengths.len() != ny.len() {
        return Err(KgError::Domain("torus_lengths/ny length mismatch".into()));
    }
    for &l in torus_lengths {
        if !(l.is_finite() && l > 0.0) {
            return Err(KgError::Domain(format!("nonpositive torus length {l}")));
        }
    }
    let freqs: Vec<Vec<f64>> = torus_lengths
        .iter()
        .zip(ny)
        .map(|(&l, &n)| {
            (0..n)
                .map(|i| 2.0 * std::f64::consts::PI * freq_index(i, n) as f64 / l)
                .collect()
        })
        .collect();
    let total: usize = ny.iter().product();
    let mut out = vec![0.0; total.max(1)];
    for (flat, lam) in out.iter_mut().enumerate() {
        let mut rem = flat;
        let mut acc = 0.0;
        for axis in (0..ny.len()).rev() {
            let i = rem % ny[axis];
            rem /= ny[axis];
            acc += freqs[axis][i] * freqs[axis][i];
        }
        *lam = acc;
    }
    Ok(out)
}

/// Precomputed lattice data and transform plans for one domain.
pub struct Grid {
    spec: DomainSpec,
    dims: Vec<usize>,
    n_total: usize,
    nx_total: usize,
    ny_total: usize,
    /// Frequencies per box axis, FFT bin order.
    xi: Vec<Vec<f64>>,
    /// Frequencies per torus axis, FFT bin order.
    eta: Vec<Vec<f64>>,
    /// `|xi|^2` per flattened x-index.
    xi_sq_x: Vec<f64>,
    /// `|xi|` per flattened x-index.
    xi_norm_x: Vec<f64>,
    /// Torus eigenvalue per flattened y-index.
    lambda_y: Vec<f64>,
    cell_volume: f64,
    volume: f64,
    volume_y: f64,
    fft: NdFft,
}

impl Grid {
    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.n_total
    }

    pub fn is_empty(&self) -> bool {
        self.n_total == 0
    }

    pub fn nx_total(&self) -> usize {
        self.nx_total
    }

    pub fn ny_total(&self) -> usize {
        self.ny_total
    }

    pub fn xi(&self) -> &[Vec<f64>] {
        &self.xi
    }

    pub fn eta(&self) -> &[Vec<f64>] {
        &self.eta
    }

    pub fn xi_sq_x(&self) -> &[f64] {
        &self.xi_sq_x
    }

    pub fn xi_norm_x(&self) -> &[f64] {
        &self.xi_norm_x
    }

    pub fn lambda_y(&self) -> &[f64] {
        &self.lambda_y
    }

    /// Volume of one grid cell, `prod(L_i/n_i) * prod(l_j/m_j)`.
    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    /// Total volume of the domain.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Volume of the torus factor.
    pub fn volume_y(&self) -> f64 {
        self.volume_y
    }

    pub fn fft(&self) -> &NdFft {
        &self.fft
    }

    /// Physical coordinates along box axis `a`: `x_i = i L/n`.
    pub fn x_coords(&self, a: usize) -> Vec<f64> {
        let n = self.spec.nx[a];
        let h = self.spec.box_lengths[a] / n as f64;
        (0..n).map(|i| i as f64 * h).collect()
    }

    /// Physical coordinates along torus axis `a`.
    pub fn y_coords(&self, a: usize) -> Vec<f64> {
        let n = self.spec.ny[a];
        let h = self.spec.torus_lengths[a] / n as f64;
        (0..n).map(|i| i as f64 * h).collect()
    }

    /// Largest `|xi|` representable on the x-lattice.
    pub fn xi_norm_max(&self) -> f64 {
        self.xi_norm_x.iter().cloned().fold(0.0, f64::max)
    }

    /// Discrete `L^2` norm of one scalar component with the grid measure.
    pub fn l2_norm(&self, data: &[Complex64]) -> f64 {
        (self.sum_sq(data) * self.cell_volume).sqrt()
    }

    /// Fixed-order sum of `|z|^2` (deterministic across thread counts).
    pub fn sum_sq(&self, data: &[Complex64]) -> f64 {
        data.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Builds the frequency lattices and transform plans for a validated spec.
pub fn make_grid(spec: DomainSpec) -> Result<Grid> {
    spec.validate()?;
    let two_pi = 2.0 * std::f64::consts::PI;
    let xi: Vec<Vec<f64>> = spec
        .box_lengths
        .iter()
        .zip(&spec.nx)
        .map(|(&l, &n)| {
            (0..n)
                .map(|i| two_pi * freq_index(i, n) as f64 / l)
                .collect()
        })
        .collect();
    let eta: Vec<Vec<f64>> = spec
        .torus_lengths
        .iter()
        .zip(&spec.ny)
        .map(|(&l, &n)| {
            (0..n)
                .map(|i| two_pi * freq_index(i, n) as f64 / l)
                .collect()
        })
        .collect();

    let nx_total: usize = spec.nx.iter().product();
    let ny_total: usize = spec.ny.iter().product();
    let mut xi_sq_x = vec![0.0; nx_total];
    for (flat, out) in xi_sq_x.iter_mut().enumerate() {
        let mut rem = flat;
        let mut acc = 0.0;
        for axis in (0..spec.d).rev() {
            let i = rem % spec.nx[axis];
            rem /= spec.nx[axis];
            acc += xi[axis][i] * xi[axis][i];
        }
        *out = acc;
    }
    let xi_norm_x = xi_sq_x.iter().map(|&s| s.sqrt()).collect();
    let lambda_y = eigenvalues_torus(&spec.torus_lengths, &spec.ny)?;

    let volume: f64 = spec
        .box_lengths
        .iter()
        .chain(&spec.torus_lengths)
        .product();
    let volume_y: f64 = spec.torus_lengths.iter().product();
    let dims: Vec<usize> = spec.nx.iter().chain(&spec.ny).cloned().collect();
    let n_total = nx_total * ny_total;
    let cell_volume = volume / n_total as f64;
    let fft = NdFft::new(&dims);

    Ok(Grid {
        spec,
        dims,
        n_total,
        nx_total,
        ny_total,
        xi,
        eta,
        xi_sq_x,
        xi_norm_x,
        lambda_y,
        cell_volume,
        volume,
        volume_y,
        fft,
    })
}

/// The pair `(u, v = du/dt)` sampled on the physical grid at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub time: f64,
    pub u: Vec<Complex64>,
    pub v: Vec<Complex64>,
}

impl FieldState {
    pub fn zeros(grid: &Grid, time: f64) -> Self {
        FieldState {
            time,
            u: vec![Complex64::default(); grid.len()],
            v: vec![Complex64::default(); grid.len()],
        }
    }

    pub fn check_shape(&self, grid: &Grid) -> Result<()> {
        if self.u.len() != grid.len() || self.v.len() != grid.len() {
            return Err(KgError::Domain(format!(
                "field shape {}x{} does not match grid size {}",
                self.u.len(),
                self.v.len(),
                grid.len()
            )));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.u
            .iter()
            .chain(&self.v)
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn max_abs_u(&self) -> f64 {
        self.u.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Mode amplitudes of `(u, v)` indexed by the joint frequency lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalState {
    pub time: f64,
    pub u_hat: Vec<Complex64>,
    pub v_hat: Vec<Complex64>,
}

impl ModalState {
    pub fn zeros(grid: &Grid, time: f64) -> Self {
        ModalState {
            time,
            u_hat: vec![Complex64::default(); grid.len()],
            v_hat: vec![Complex64::default(); grid.len()],
        }
    }

    /// Plancherel-weighted l2 norm of the `u` amplitudes; equals the grid
    /// `L^2` norm of the field to rounding.
    pub fn l2_norm_u(&self, grid: &Grid) -> f64 {
        (grid.volume() * grid.sum_sq(&self.u_hat)).sqrt()
    }
}

/// Exact discrete Fourier pair: field samples -> mode amplitudes.
pub fn forward_transform(grid: &Grid, field: &FieldState) -> Result<ModalState> {
    field.check_shape(grid)?;
    let mut modal = ModalState {
        time: field.time,
        u_hat: field.u.clone(),
        v_hat: field.v.clone(),
    };
    grid.fft.forward(&mut modal.u_hat);
    grid.fft.forward(&mut modal.v_hat);
    Ok(modal)
}

/// Mode amplitudes -> field samples.
pub fn inverse_transform(grid: &Grid, modal: &ModalState) -> Result<FieldState> {
    if modal.u_hat.len() != grid.len() || modal.v_hat.len() != grid.len() {
        return Err(KgError::Domain("modal shape does not match grid".into()));
    }
    let mut field = FieldState {
        time: modal.time,
        u: modal.u_hat.clone(),
        v: modal.v_hat.clone(),
    };
    grid.fft.inverse(&mut field.u);
    grid.fft.inverse(&mut field.v);
    Ok(field)
}
