//! Spectral simulator for the nonlinear Klein-Gordon equation
//! `u_tt - Lap(u) + u = +/- |u|^{p-1} u` posed on a periodic box
//! (surrogate for `R^d`) times a flat torus `T^k`, together with an
//! exact rational calculus for the admissible-exponent bookkeeping
//! that governs when small-data scattering applies.
//!
//! Modules mirror the pipeline:
//!
//! * [`exponents`] - exact rational exponent arithmetic, admissibility,
//!   embedding predicates and the restriction table.
//! * [`spectral`] - grids, Fourier transforms, torus eigenvalues and
//!   Littlewood-Paley blocks with Besov norms.
//! * [`propagator`] - the exact linear Klein-Gordon group per joint mode,
//!   `e^{tH}` on the energy space, and mass rescaling.
//! * [`evolve`] - Strang splitting and the Picard/Duhamel fixed-point solver.
//! * [`diagnostics`] - Strichartz/energy/anisotropic norms and the
//!   scattering measurement pipeline.
//! * [`cli`] - configuration parsing, experiment orchestration and report
//!   emission (driven by the `kgps` binary).

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod evolve;
pub mod exponents;
pub mod initial_data;
pub mod propagator;
pub mod spectral;

pub use error::{KgError, Result};
