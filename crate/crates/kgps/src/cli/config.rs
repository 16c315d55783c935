//! Run configuration: a flat `key = value` file, every key overridable
//! from the command line.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{KgError, Result};
use crate::exponents::Rat;
use crate::spectral::DomainSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataKind {
    Gaussian,
    Bump,
    File,
}

impl std::fmt::Display for DataKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DataKind::Gaussian => write!(f, "gaussian"),
            DataKind::Bump => write!(f, "bump"),
            DataKind::File => write!(f, "file"),
        }
    }
}

/// A fully validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub d: usize,
    pub k: usize,
    /// Exact rational nonlinearity exponent (the exponent calculus is
    /// exact; irrational p is rejected at the parser).
    pub p_rat: Rat,
    pub p: f64,
    pub sign: f64,
    pub box_lengths: Vec<f64>,
    pub torus_lengths: Vec<f64>,
    pub nx: Vec<usize>,
    pub ny: Vec<usize>,
    pub dt: f64,
    pub t_final: f64,
    pub snapshot_stride: usize,
    pub data_kind: DataKind,
    pub data_amplitude: f64,
    pub data_radius: f64,
    pub data_file: Option<PathBuf>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub tol: f64,
    pub max_iter: usize,
    pub unsafe_horizon: bool,
}

impl RunConfig {
    pub fn domain_spec(&self) -> DomainSpec {
        DomainSpec {
            d: self.d,
            k: self.k,
            box_lengths: self.box_lengths.clone(),
            torus_lengths: self.torus_lengths.clone(),
            nx: self.nx.clone(),
            ny: self.ny.clone(),
        }
    }

    /// Ordered echo of every key, as written back into the manifest.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let join_f = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        let join_u = |v: &[usize]| {
            v.iter()
                .map(|x| format!("{x}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut m = BTreeMap::new();
        m.insert("d".into(), self.d.to_string());
        m.insert("k".into(), self.k.to_string());
        m.insert("p".into(), self.p_rat.to_string());
        m.insert("sign".into(), if self.sign > 0.0 { "+1".into() } else { "-1".into() });
        m.insert("box_lengths".into(), join_f(&self.box_lengths));
        m.insert("torus_lengths".into(), join_f(&self.torus_lengths));
        m.insert("nx".into(), join_u(&self.nx));
        m.insert("ny".into(), join_u(&self.ny));
        m.insert("dt".into(), self.dt.to_string());
        m.insert("T".into(), self.t_final.to_string());
        m.insert("snapshot_stride".into(), self.snapshot_stride.to_string());
        m.insert("data_kind".into(), self.data_kind.to_string());
        m.insert("data_amplitude".into(), self.data_amplitude.to_string());
        m.insert("data_radius".into(), self.data_radius.to_string());
        if let Some(f) = &self.data_file {
            m.insert("data_file".into(), f.display().to_string());
        }
        m.insert("seed".into(), self.seed.to_string());
        m.insert("output_dir".into(), self.output_dir.display().to_string());
        m.insert("tol".into(), self.tol.to_string());
        m.insert("max_iter".into(), self.max_iter.to_string());
        m.insert("unsafe_horizon".into(), self.unsafe_horizon.to_string());
        m
    }
}

pub const KNOWN_KEYS: &[&str] = &[
    "d",
    "k",
    "p",
    "sign",
    "box_lengths",
    "torus_lengths",
    "nx",
    "ny",
    "dt",
    "T",
    "snapshot_stride",
    "data_kind",
    "data_amplitude",
    "data_radius",
    "data_file",
    "seed",
    "output_dir",
    "tol",
    "max_iter",
    "unsafe_horizon",
];

/// Parses `key = value` lines (blank lines and `#` comments allowed) into
/// a raw key-value map, rejecting unknown keys.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            KgError::Config(format!("line {}: expected `key = value`, got `{raw}`", lineno + 1))
        })?;
        let key = key.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(KgError::Config(format!("unknown key `{key}`")));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

/// Parses an exact rational from `n/d`, an integer, or a finite decimal.
pub fn parse_rational(text: &str) -> Result<Rat> {
    let s = text.trim();
    let bad = || KgError::Config(format!("`{s}` is not an exact rational (use n/d or a finite decimal)"));
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| bad())?;
        let d: i64 = d.trim().parse().map_err(|_| bad())?;
        if d <= 0 {
            return Err(bad());
        }
        return Ok(Rat::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let sign = if int.trim_start().starts_with('-') { -1 } else { 1 };
        let int_part: i64 = if int.is_empty() || int == "-" {
            0
        } else {
            int.trim().parse().map_err(|_| bad())?
        };
        if frac.len() > 12 || frac.chars().any(|c| !c.is_ascii_digit()) {
            return Err(bad());
        }
        let digits: i64 = if frac.is_empty() {
            0
        } else {
            frac.parse().map_err(|_| bad())?
        };
        let den = 10i64.pow(frac.len() as u32);
        return Ok(Rat::from_integer(int_part) + Rat::new(sign * digits, den));
    }
    let n: i64 = s.parse().map_err(|_| bad())?;
    Ok(Rat::from_integer(n))
}

fn rat_to_f64(p: Rat) -> f64 {
    *p.numer() as f64 / *p.denom() as f64
}

fn req<'a>(map: &'a BTreeMap<String, String>, key: &str) -> Result<&'a str> {
    map.get(key)
        .map(|s| s.as_str())
        .ok_or_else(|| KgError::Config(format!("missing required key `{key}`")))
}

fn parse_f64(key: &str, s: &str) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| KgError::Config(format!("key `{key}`: `{s}` is not a number")))?;
    if !v.is_finite() {
        return Err(KgError::Config(format!("key `{key}`: must be finite")));
    }
    Ok(v)
}

fn parse_usize(key: &str, s: &str) -> Result<usize> {
    s.parse()
        .map_err(|_| KgError::Config(format!("key `{key}`: `{s}` is not a nonnegative integer")))
}

fn parse_f64_list(key: &str, s: &str, expect: usize) -> Result<Vec<f64>> {
    let v: Result<Vec<f64>> = s.split(',').map(|x| parse_f64(key, x.trim())).collect();
    let v = v?;
    if v.len() != expect {
        return Err(KgError::Config(format!(
            "key `{key}`: expected {expect} comma-separated values, got {}",
            v.len()
        )));
    }
    Ok(v)
}

fn parse_usize_list(key: &str, s: &str, expect: usize) -> Result<Vec<usize>> {
    let v: Result<Vec<usize>> = s.split(',').map(|x| parse_usize(key, x.trim())).collect();
    let v = v?;
    if v.len() != expect {
        return Err(KgError::Config(format!(
            "key `{key}`: expected {expect} comma-separated values, got {}",
            v.len()
        )));
    }
    Ok(v)
}

/// Builds a validated config from raw key-values (file contents merged
/// with command-line overrides).
pub fn build_config(map: &BTreeMap<String, String>) -> Result<RunConfig> {
    let d = parse_usize("d", req(map, "d")?)?;
    let k = parse_usize("k", req(map, "k")?)?;
    let p_rat = parse_rational(req(map, "p")?)?;
    let p = rat_to_f64(p_rat);
    let sign = match req(map, "sign")?.trim() {
        "+1" | "1" | "focusing" => 1.0,
        "-1" | "defocusing" => -1.0,
        other => {
            return Err(KgError::Config(format!(
                "key `sign`: `{other}` must be +1 or -1"
            )))
        }
    };
    let box_lengths = parse_f64_list("box_lengths", req(map, "box_lengths")?, d)?;
    let torus_lengths = parse_f64_list("torus_lengths", req(map, "torus_lengths")?, k)?;
    let nx = parse_usize_list("nx", req(map, "nx")?, d)?;
    let ny = parse_usize_list("ny", req(map, "ny")?, k)?;
    let dt = parse_f64("dt", req(map, "dt")?)?;
    let t_final = parse_f64("T", req(map, "T")?)?;
    let snapshot_stride = match map.get("snapshot_stride") {
        Some(s) => parse_usize("snapshot_stride", s)?,
        None => 1,
    };
    let data_kind = match map.get("data_kind").map(|s| s.as_str()).unwrap_or("gaussian") {
        "gaussian" => DataKind::Gaussian,
        "bump" => DataKind::Bump,
        "file" => DataKind::File,
        other => {
            return Err(KgError::Config(format!(
                "key `data_kind`: `{other}` must be gaussian, bump or file"
            )))
        }
    };
    let data_amplitude = match map.get("data_amplitude") {
        Some(s) => parse_f64("data_amplitude", s)?,
        None if data_kind == DataKind::File => 0.0,
        None => return Err(KgError::Config("missing required key `data_amplitude`".into())),
    };
    let data_radius = match map.get("data_radius") {
        Some(s) => parse_f64("data_radius", s)?,
        None if data_kind == DataKind::File => 1.0,
        None => return Err(KgError::Config("missing required key `data_radius`".into())),
    };
    let data_file = map.get("data_file").map(PathBuf::from);
    if data_kind == DataKind::File && data_file.is_none() {
        return Err(KgError::Config("data_kind = file requires `data_file`".into()));
    }
    let seed = match map.get("seed") {
        Some(s) => s
            .parse()
            .map_err(|_| KgError::Config(format!("key `seed`: `{s}` is not an integer")))?,
        None => 0,
    };
    let output_dir = PathBuf::from(map.get("output_dir").map(|s| s.as_str()).unwrap_or("out"));
    let tol = match map.get("tol") {
        Some(s) => parse_f64("tol", s)?,
        None => 1e-10,
    };
    let max_iter = match map.get("max_iter") {
        Some(s) => parse_usize("max_iter", s)?,
        None => 25,
    };
    let unsafe_horizon = match map.get("unsafe_horizon").map(|s| s.as_str()) {
        Some("true") | Some("1") | Some("yes") => true,
        Some("false") | Some("0") | Some("no") | None => false,
        Some(other) => {
            return Err(KgError::Config(format!(
                "key `unsafe_horizon`: `{other}` must be true or false"
            )))
        }
    };

    let config = RunConfig {
        d,
        k,
        p_rat,
        p,
        sign,
        box_lengths,
        torus_lengths,
        nx,
        ny,
        dt,
        t_final,
        snapshot_stride,
        data_kind,
        data_amplitude,
        data_radius,
        data_file,
        seed,
        output_dir,
        tol,
        max_iter,
        unsafe_horizon,
    };
    config.domain_spec().validate()?;
    if !(config.p >= 2.0) {
        return Err(KgError::Config(format!("p = {} must be >= 2", config.p)));
    }
    Ok(config)
}

/// Loads a config file and applies command-line overrides on top.
pub fn parse_config(path: &Path, overrides: &BTreeMap<String, String>) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| KgError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut map = parse_key_values(&text)?;
    for (key, value) in overrides {
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(KgError::Config(format!("unknown key `{key}`")));
        }
        map.insert(key.clone(), value.clone());
    }
    build_config(&map)
}
