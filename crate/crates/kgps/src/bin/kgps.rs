//! Command-line driver: exponent calculus queries, simulation runs,
//! fixed-point solves and scattering reports.
//!
//! Exit codes: 0 success (including reported BLOWUP / NONCONTRACTIVE
//! statuses), 1 validation or I/O failure, 2 horizon refusal, 3 internal
//! numeric failure.

use clap::{Args, Parser, Subcommand};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use kgps::cli::{parse_config, parse_rational, run_experiment, scatter_report, RunMode};
use kgps::error::KgError;
use kgps::exponents::{self, table};

#[derive(Parser)]
#[command(name = "kgps", version, about = "Spectral Klein-Gordon simulator on R^d x T^k")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exponent profile and theorem verdicts for one (d, k, p), or the
    /// full restriction table.
    Exponents(ExponentsArgs),
    /// Emit the full restriction table as CSV.
    Table,
    /// Evolve initial data by Strang splitting and write snapshots.
    Simulate(RunArgs),
    /// Solve the Duhamel fixed point by Picard iteration.
    Picard(RunArgs),
    /// Recompute the scattering report of a stored run directory.
    ScatterReport(ScatterArgs),
}

#[derive(Args)]
struct ExponentsArgs {
    #[arg(long)]
    d: Option<u32>,
    #[arg(long)]
    k: Option<u32>,
    /// Nonlinearity exponent as an exact rational (`7/3`, `3`, `2.5`).
    #[arg(long)]
    p: Option<String>,
    /// Extra torus regularity for the anisotropic theorem.
    #[arg(long)]
    gamma: Option<String>,
    /// Emit the full restriction table instead.
    #[arg(long)]
    table: bool,
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's `output_dir`).
    #[arg(long)]
    output: Option<PathBuf>,

    // Every config key is mirrored as a flag overriding the file.
    #[arg(long)]
    d: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    sign: Option<String>,
    #[arg(long)]
    box_lengths: Option<String>,
    #[arg(long)]
    torus_lengths: Option<String>,
    #[arg(long)]
    nx: Option<String>,
    #[arg(long)]
    ny: Option<String>,
    #[arg(long)]
    dt: Option<String>,
    #[arg(long = "T")]
    t_final: Option<String>,
    #[arg(long)]
    snapshot_stride: Option<String>,
    #[arg(long)]
    data_kind: Option<String>,
    #[arg(long)]
    data_amplitude: Option<String>,
    #[arg(long)]
    data_radius: Option<String>,
    #[arg(long)]
    data_file: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    max_iter: Option<String>,
    #[arg(long)]
    unsafe_horizon: Option<String>,
}

impl RunArgs {
    fn overrides(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |key: &str, v: &Option<String>| {
            if let Some(v) = v {
                m.insert(key.to_string(), v.clone());
            }
        };
        put("d", &self.d);
        put("k", &self.k);
        put("p", &self.p);
        put("sign", &self.sign);
        put("box_lengths", &self.box_lengths);
        put("torus_lengths", &self.torus_lengths);
        put("nx", &self.nx);
        put("ny", &self.ny);
        put("dt", &self.dt);
        put("T", &self.t_final);
        put("snapshot_stride", &self.snapshot_stride);
        put("data_kind", &self.data_kind);
        put("data_amplitude", &self.data_amplitude);
        put("data_radius", &self.data_radius);
        put("data_file", &self.data_file);
        put("seed", &self.seed);
        put("tol", &self.tol);
        put("max_iter", &self.max_iter);
        put("unsafe_horizon", &self.unsafe_horizon);
        if let Some(out) = &self.output {
            m.insert("output_dir".into(), out.display().to_string());
        }
        m
    }
}

#[derive(Args)]
struct ScatterArgs {
    /// Run directory holding manifest.json and snapshots.
    #[arg(long)]
    run: PathBuf,
    /// Pre-apply the torus weight (1 - Lap_y)^{gamma/2} and use the mixed
    /// spatial norm.
    #[arg(long)]
    gamma: Option<f64>,
    /// Where to write report.csv / report.json (default: the run dir).
    #[arg(long)]
    output: Option<PathBuf>,
}

fn exponents_json(args: &ExponentsArgs) -> Result<String, KgError> {
    let missing = |what: &str| KgError::Config(format!("exponents: --{what} required (or use --table)"));
    let d = args.d.ok_or_else(|| missing("d"))?;
    let k = args.k.ok_or_else(|| missing("k"))?;
    let p = parse_rational(args.p.as_deref().ok_or_else(|| missing("p"))?)?;
    let gamma = args.gamma.as_deref().map(parse_rational).transpose()?;
    let crit = exponents::critical_exponents(d, k)?;
    let verdicts = exponents::theorem_applicability(d, k, p, gamma)?;
    let profile = exponents::derived_profile(d, k, p).ok();
    let verdict_json = |v: &exponents::Verdict| {
        serde_json::json!({
            "applicable": v.applicable,
            "route": v.route.to_string(),
            "failed_conditions": v.failed_conditions.iter().map(|c| c.to_string()).collect::<Vec<_>>(),
        })
    };
    let json = serde_json::json!({
        "d": d,
        "k": k,
        "p": p.to_string(),
        "p0": crit.p0.to_string(),
        "pc": crit.pc.to_string(),
        "p_sob": crit.p_sob.to_string(),
        "profile": profile.map(|pr| serde_json::json!({
            "q": pr.q.to_string(),
            "r": pr.r.to_string(),
            "s": pr.s.to_string(),
            "gamma": pr.gamma.to_string(),
            "rho": pr.rho.to_string(),
            "r_star": pr.r_star.to_string(),
        })),
        "gamma_extra": gamma.map(|g| g.to_string()),
        "thm1": verdict_json(&verdicts.thm1),
        "thm2": verdict_json(&verdicts.thm2),
    });
    serde_json::to_string_pretty(&json).map_err(|e| KgError::Format(e.to_string()))
}

fn run() -> Result<u8, KgError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Exponents(args) => {
            if args.table {
                print!("{}", table::table_csv()?);
            } else {
                println!("{}", exponents_json(&args)?);
            }
            Ok(0)
        }
        Command::Table => {
            print!("{}", table::table_csv()?);
            Ok(0)
        }
        Command::Simulate(args) => {
            let config = parse_config(&args.config, &args.overrides())?;
            let manifest = run_experiment(&config, RunMode::Simulate)?;
            eprintln!(
                "status {} ({} snapshots, {:.1}s) -> {}",
                manifest.status,
                manifest.snapshot_files.len(),
                manifest.wall_time_secs,
                config.output_dir.display()
            );
            Ok(if manifest.status == "HORIZON_REFUSED" { 2 } else { 0 })
        }
        Command::Picard(args) => {
            let config = parse_config(&args.config, &args.overrides())?;
            let manifest = run_experiment(&config, RunMode::Picard)?;
            eprintln!(
                "status {} ({} iterations, {:.1}s) -> {}",
                manifest.status,
                manifest.picard.as_ref().map(|p| p.iterations).unwrap_or(0),
                manifest.wall_time_secs,
                config.output_dir.display()
            );
            Ok(if manifest.status == "HORIZON_REFUSED" { 2 } else { 0 })
        }
        Command::ScatterReport(args) => {
            let report = scatter_report(&args.run, args.gamma, args.output.as_deref())?;
            eprintln!(
                "report over {} snapshots -> {}",
                report.times.len(),
                args.run.display()
            );
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                KgError::HorizonRefused(_) => 2,
                KgError::Numeric(_) => 3,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}
