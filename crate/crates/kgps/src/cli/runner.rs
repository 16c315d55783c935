//! Experiment orchestration: data generation, horizon guard, the simulate
//! and picard pipelines, and report emission.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use super::config::{DataKind, RunConfig};
use super::manifest::{grid_hash, PicardJson, RunManifest, VerdictJson};
use crate::diagnostics::{scattering_profile, ScatterConfig, ScatteringReport};
use crate::error::{KgError, Result};
use crate::evolve::{evolve, picard_solve, EvolveConfig, RunStatus, Trajectory};
use crate::exponents::theorem_applicability;
use crate::initial_data::{bump, gaussian, horizon_time};
use crate::spectral::io::{read_snapshot, write_snapshot};
use crate::spectral::{make_grid, FieldState, Grid};

pub enum RunMode {
    Simulate,
    Picard,
}

/// Generated initial data plus its effective support radius.
fn initial_data(grid: &Grid, config: &RunConfig) -> Result<(FieldState, f64)> {
    match config.data_kind {
        DataKind::Gaussian => {
            let g = gaussian(grid, config.data_amplitude, config.data_radius)?;
            Ok((g.state, g.support_radius))
        }
        DataKind::Bump => {
            let g = bump(grid, config.data_amplitude, config.data_radius)?;
            Ok((g.state, g.support_radius))
        }
        DataKind::File => {
            let path = config
                .data_file
                .as_ref()
                .ok_or_else(|| KgError::Config("data_kind = file requires data_file".into()))?;
            let (spec, state) = read_snapshot(path)?;
            if spec != *grid.spec() {
                return Err(KgError::Config(format!(
                    "data file {} does not match the configured domain",
                    path.display()
                )));
            }
            let radius = measured_support_radius(grid, &state);
            Ok((state, radius))
        }
    }
}

fn measured_support_radius(grid: &Grid, state: &FieldState) -> f64 {
    let spec = grid.spec();
    let ny_total = grid.ny_total();
    let peak = state.max_abs_u().max(1e-300);
    let mut radius: f64 = 0.0;
    for x_idx in 0..grid.nx_total() {
        let row_max = state.u[x_idx * ny_total..(x_idx + 1) * ny_total]
            .iter()
            .chain(&state.v[x_idx * ny_total..(x_idx + 1) * ny_total])
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if row_max > 1e-14 * peak {
            let mut rem = x_idx;
            let mut r_sq = 0.0;
            for axis in (0..spec.d).rev() {
                let i = rem % spec.nx[axis];
                rem /= spec.nx[axis];
                let h = spec.box_lengths[axis] / spec.nx[axis] as f64;
                let dx = i as f64 * h - 0.5 * spec.box_lengths[axis];
                r_sq += dx * dx;
            }
            radius = radius.max(r_sq.sqrt());
        }
    }
    radius
}

fn theorem_warnings(config: &RunConfig) -> Result<(VerdictJson, VerdictJson, Vec<String>)> {
    let verdicts = theorem_applicability(config.d as u32, config.k as u32, config.p_rat, None)?;
    let mut warnings = Vec::new();
    if !verdicts.thm1.applicable {
        warnings.push(format!(
            "outside the energy-scattering theorem: failed {}",
            verdicts
                .thm1
                .failed_conditions
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join("; ")
        ));
    }
    if !verdicts.thm2.applicable {
        warnings.push(format!(
            "outside the anisotropic theorem: failed {}",
            verdicts
                .thm2
                .failed_conditions
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join("; ")
        ));
    }
    if verdicts.thm1.route == crate::exponents::Route::MorreyFiniteVolume {
        warnings.push(
            "p below p_sob: compact-factor Lebesgue control takes the Morrey/finite-volume route"
                .into(),
        );
    }
    Ok(((&verdicts.thm1).into(), (&verdicts.thm2).into(), warnings))
}

/// Runs the configured experiment, writing snapshots, reports and exactly
/// one manifest to the output directory. Statuses (BLOWUP, NONCONTRACTIVE,
/// HORIZON_REFUSED) are reported in the manifest, not as errors.
pub fn run_experiment(config: &RunConfig, mode: RunMode) -> Result<RunManifest> {
    let start = Instant::now();
    let dir = config.output_dir.clone();
    std::fs::create_dir_all(&dir)?;
    let grid = make_grid(config.domain_spec())?;
    let (data, support_radius) = initial_data(&grid, config)?;
    let (thm1, thm2, mut warnings) = theorem_warnings(config)?;
    let horizon = horizon_time(&config.box_lengths, support_radius);

    let mut manifest = RunManifest {
        config: config.echo(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
        grid_hash: grid_hash(&grid),
        wall_time_secs: 0.0,
        status: RunStatus::Ok.to_string(),
        horizon_time: horizon,
        thm1,
        thm2,
        warnings: Vec::new(),
        snapshot_times: Vec::new(),
        snapshot_files: Vec::new(),
        energy_drift: None,
        aliasing_tail_fraction: None,
        picard: None,
    };

    if config.t_final > horizon && !config.unsafe_horizon {
        warnings.push(format!(
            "T = {} exceeds the finite-speed horizon {horizon:.6} for support radius {support_radius:.6}",
            config.t_final
        ));
        manifest.status = RunStatus::HorizonRefused.to_string();
        manifest.warnings = warnings;
        manifest.wall_time_secs = start.elapsed().as_secs_f64();
        manifest.write(&dir)?;
        return Ok(manifest);
    }

    let evolve_config = EvolveConfig::new(
        config.p,
        config.sign,
        config.dt,
        config.t_final,
        config.snapshot_stride,
    );

    let trajectory = match mode {
        RunMode::Simulate => {
            let out = evolve(&grid, &data, &evolve_config)?;
            manifest.status = out.status.to_string();
            manifest.energy_drift = Some(out.energy_drift);
            manifest.aliasing_tail_fraction = Some(out.aliasing_tail_fraction);
            out.trajectory
        }
        RunMode::Picard => {
            // The Picard quadrature runs on the snapshot grid directly.
            let mut cfg = evolve_config.clone();
            cfg.dt = evolve_config.snapshot_dt();
            cfg.snapshot_stride = 1;
            cfg.validate()?;
            let out = picard_solve(&grid, &data, &cfg, config.tol, config.max_iter)?;
            manifest.status = out.status.to_string();
            manifest.picard = Some(PicardJson {
                iterations: out.iterations,
                diffs: out.diffs,
                ratios: out.ratios,
                residual: out.residual,
                tol: config.tol,
            });
            out.trajectory
        }
    };

    for (i, snap) in trajectory.snapshots.iter().enumerate() {
        let name = format!("snap_{i:05}.kgps");
        write_snapshot(&dir.join(&name), grid.spec(), snap)?;
        manifest.snapshot_times.push(snap.time);
        manifest.snapshot_files.push(name);
    }

    let scatter = scattering_profile(&grid, &trajectory, &ScatterConfig::new(config.p, config.sign))?;
    write_report(&dir, &scatter, manifest.picard.as_ref())?;

    manifest.warnings = warnings;
    manifest.wall_time_secs = start.elapsed().as_secs_f64();
    manifest.write(&dir)?;
    Ok(manifest)
}

/// Reloads a run directory (manifest + snapshots) as a trajectory.
pub fn load_run(dir: &Path) -> Result<(RunConfig, Grid, Trajectory)> {
    let manifest_text = std::fs::read_to_string(dir.join("manifest.json"))
        .map_err(|e| KgError::Config(format!("cannot read manifest in {}: {e}", dir.display())))?;
    let manifest: serde_json::Value = serde_json::from_str(&manifest_text)
        .map_err(|e| KgError::Format(format!("bad manifest: {e}")))?;
    let config_map: BTreeMap<String, String> = manifest["config"]
        .as_object()
        .ok_or_else(|| KgError::Format("manifest missing config echo".into()))?
        .iter()
        .map(|(k, v)| (k.clone(), v.as_str().unwrap_or_default().to_string()))
        .collect();
    let config = super::config::build_config(&config_map)?;
    let grid = make_grid(config.domain_spec())?;
    let times: Vec<f64> = manifest["snapshot_times"]
        .as_array()
        .ok_or_else(|| KgError::Format("manifest missing snapshot_times".into()))?
        .iter()
        .map(|v| v.as_f64().unwrap_or(f64::NAN))
        .collect();
    let files = manifest["snapshot_files"]
        .as_array()
        .ok_or_else(|| KgError::Format("manifest missing snapshot_files".into()))?;
    let mut snapshots = Vec::with_capacity(files.len());
    for (t, f) in times.iter().zip(files) {
        let name = f
            .as_str()
            .ok_or_else(|| KgError::Format("bad snapshot file entry".into()))?;
        let (spec, mut state) = read_snapshot(&dir.join(name))?;
        if spec != *grid.spec() {
            return Err(KgError::Format(format!("snapshot {name} does not match the run grid")));
        }
        state.time = *t;
        snapshots.push(state);
    }
    Ok((config, grid, Trajectory { snapshots }))
}

/// Recomputes the scattering report of a stored run and writes
/// `report.csv` / `report.json` into `out_dir` (the run directory when
/// not given).
pub fn scatter_report(
    dir: &Path,
    gamma_weight: Option<f64>,
    out_dir: Option<&Path>,
) -> Result<ScatteringReport> {
    let (config, grid, trajectory) = load_run(dir)?;
    let mut sc = ScatterConfig::new(config.p, config.sign);
    sc.gamma_weight = gamma_weight;
    let report = scattering_profile(&grid, &trajectory, &sc)?;
    let target = out_dir.unwrap_or(dir);
    std::fs::create_dir_all(target)?;
    write_report(target, &report, None)?;
    Ok(report)
}

fn fmt(x: f64) -> String {
    format!("{x:.12e}")
}

fn write_report(dir: &Path, report: &ScatteringReport, picard: Option<&PicardJson>) -> Result<()> {
    let mut csv = String::from("t,energy,energy_norm,strichartz_partial,tail_norm,v_increment\n");
    for i in 0..report.times.len() {
        let incr = if i == 0 { 0.0 } else { report.v_increments[i - 1] };
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt(report.times[i]),
            fmt(report.energy_series[i]),
            fmt(report.energy_norm_series[i]),
            fmt(report.strichartz_partials[i]),
            fmt(report.tail_norms[i]),
            fmt(incr),
        ));
    }
    std::fs::write(dir.join("report.csv"), csv)?;

    let t_last = *report.times.last().unwrap_or(&0.0);
    // Tail decay factors at doubling window starts 2 -> 4 -> 8 when the
    // horizon covers them.
    let tail_at = |t: f64| -> Option<f64> {
        report
            .times
            .iter()
            .position(|&x| (x - t).abs() < 1e-9)
            .map(|i| report.tail_norms[i])
    };
    let mut tail_factors = Vec::new();
    for (a, b) in [(2.0, 4.0), (4.0, 8.0)] {
        if b < t_last {
            if let (Some(ta), Some(tb)) = (tail_at(a), tail_at(b)) {
                tail_factors.push(ta / tb.max(1e-300));
            }
        }
    }
    let windows_monotone_5pct = report
        .window_increments
        .windows(2)
        .all(|w| w[1] <= 1.05 * w[0]);
    let json = serde_json::json!({
        "scatter_state_energy_norm": report.energy_norm_series.last(),
        "final_time": t_last,
        "total_strichartz": report.strichartz_partials.last(),
        "cauchy_factor": report.cauchy_factor,
        "tail_halving_factors": tail_factors,
        "window_times": report.window_times,
        "window_increments": report.window_increments,
        "windows_monotone_5pct": windows_monotone_5pct,
        "picard": picard.map(|p| serde_json::json!({
            "iterations": p.iterations,
            "ratios": p.ratios,
            "residual": p.residual,
            "tol": p.tol,
        })),
    });
    std::fs::write(
        dir.join("report.json"),
        serde_json::to_string_pretty(&json).map_err(|e| KgError::Format(e.to_string()))?,
    )?;
    Ok(())
}
