//! Flat TOML run configuration.
//!
//! Every key is optional; unknown keys are rejected. See the README for the
//! schema.

use clap::ValueEnum;
use serde::Serialize;

use crate::circle::{FibreFamily, GOLDEN_MEAN};
use crate::error::{Error, Result};
use crate::output::fmt_g;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Rotnum,
    Rotint,
    Tsearch,
    Minset,
    Sdsm,
    EntropyCert,
    SepCount,
    BowenCheck,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Rotnum => "rotnum",
            Command::Rotint => "rotint",
            Command::Tsearch => "tsearch",
            Command::Minset => "minset",
            Command::Sdsm => "sdsm",
            Command::EntropyCert => "entropy-cert",
            Command::SepCount => "sep-count",
            Command::BowenCheck => "bowen-check",
            Command::Sweep => "sweep",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        <Self as ValueEnum>::from_str(s, false).ok()
    }

    /// Commands with scalar outputs that can fill a sweep row.
    pub fn sweepable(self) -> bool {
        matches!(self, Command::Rotnum | Command::Rotint | Command::Tsearch)
    }
}

pub const MAX_SWEEP_CELLS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepAxis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl SweepAxis {
    pub fn value(&self, i: usize) -> f64 {
        if self.steps == 1 {
            self.min
        } else {
            self.min + (self.max - self.min) * i as f64 / (self.steps - 1) as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    /// In the order tau, alpha, beta.
    pub axes: Vec<SweepAxis>,
    pub command: Command,
}

impl SweepSpec {
    pub fn cells(&self) -> usize {
        self.axes.iter().map(|a| a.steps).product()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub kind: String,
    pub tau: f64,
    pub alpha: f64,
    pub beta: f64,
    pub omega: f64,
    pub m: usize,
    pub n: usize,
    pub ensemble: usize,
    pub burn_in: usize,
    pub cloud: usize,
    pub depth: usize,
    pub tol: f64,
    pub spread_tol: f64,
    pub seed: u64,
    #[serde(skip)]
    pub seed_given: bool,
    pub t: Option<f64>,
    pub rho: Option<f64>,
    pub rho1: Option<f64>,
    pub rho2: Option<f64>,
    pub theta0: f64,
    pub eps: f64,
    pub horizon: usize,
    pub horizons: Vec<usize>,
    pub sample: usize,
    pub scope: String,
    pub source: String,
    pub k: usize,
    pub raster: usize,
    pub gamma_grid: usize,
    pub bins: usize,
    pub uniform_n: usize,
    pub uniform_samples: usize,
    pub n_max: usize,
    pub sweep: Option<SweepSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            kind: "arnold".into(),
            tau: 0.0,
            alpha: 0.0,
            beta: 0.0,
            omega: GOLDEN_MEAN,
            m: 1 << 14,
            n: 100_000,
            ensemble: 50,
            burn_in: 10_000,
            cloud: 100_000,
            depth: 40,
            tol: 1e-4,
            spread_tol: 1e-3,
            seed: 0,
            seed_given: false,
            t: None,
            rho: None,
            rho1: None,
            rho2: None,
            theta0: 0.0,
            eps: 0.05,
            horizon: 10,
            horizons: vec![10, 20, 40, 80],
            sample: 2000,
            scope: "whole".into(),
            source: "fibre".into(),
            k: 4,
            raster: 1024,
            gamma_grid: 4096,
            bins: 512,
            uniform_n: 10_000,
            uniform_samples: 1000,
            n_max: 5,
            sweep: None,
        }
    }
}

fn err(key: &str, msg: impl Into<String>) -> Error {
    Error::Config {
        key: key.into(),
        msg: msg.into(),
    }
}

fn real(key: &str, v: &toml::Value) -> Result<f64> {
    let x = match v {
        toml::Value::Float(f) => *f,
        toml::Value::Integer(i) => *i as f64,
        _ => return Err(err(key, format!("expected a number, got {v}"))),
    };
    if !x.is_finite() {
        return Err(err(key, "must be finite"));
    }
    Ok(x)
}

fn count(key: &str, v: &toml::Value) -> Result<usize> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        _ => Err(err(key, format!("expected a non-negative integer, got {v}"))),
    }
}

fn text(key: &str, v: &toml::Value) -> Result<String> {
    v.as_str()
        .map(str::to_string)
        .ok_or_else(|| err(key, format!("expected a string, got {v}")))
}

fn in_range<T: PartialOrd + std::fmt::Display>(key: &str, x: T, lo: T, hi: T) -> Result<T> {
    if x < lo || x > hi {
        return Err(err(key, format!("{x} outside [{lo}, {hi}]")));
    }
    Ok(x)
}

/// True when `x` equals `p / q` for some `q <= max_q` to double precision.
pub fn is_small_rational(x: f64, max_q: u64) -> bool {
    // convergents of the continued fraction of x
    let (mut p0, mut q0, mut p1, mut q1) = (0f64, 1f64, 1f64, 0f64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        let (p2, q2) = (a * p1 + p0, a * q1 + q0);
        if q2 > max_q as f64 {
            return false;
        }
        if (x - p2 / q2).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
            return true;
        }
        let frac = r - a;
        if frac == 0.0 {
            return true;
        }
        r = 1.0 / frac;
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
    }
    false
}

fn check_omega(omega: f64) -> Result<f64> {
    if !(omega > 0.0 && omega < 1.0) {
        return Err(err("omega", format!("{omega} outside (0, 1)")));
    }
    if is_small_rational(omega, 1_000_000) {
        return Err(err("omega", format!("{omega} is rational with denominator <= 10^6")));
    }
    Ok(omega)
}

fn sweep_axis(name: &str, key: &str, v: &toml::Value) -> Result<SweepAxis> {
    let arr = v
        .as_array()
        .filter(|a| a.len() == 3)
        .ok_or_else(|| err(key, "expected [min, max, steps]"))?;
    let min = real(key, &arr[0])?;
    let max = real(key, &arr[1])?;
    let steps = count(key, &arr[2])?;
    if steps == 0 || max < min {
        return Err(err(key, "needs min <= max and steps >= 1"));
    }
    Ok(SweepAxis {
        name: name.into(),
        min,
        max,
        steps,
    })
}

/// Parses and validates a configuration document, filling defaults.
pub fn parse_config(doc: &str) -> Result<RunConfig> {
    let table: toml::Table = toml::from_str(doc).map_err(|e| err("<document>", e.message().to_string()))?;
    let mut c = RunConfig::default();
    let mut axes = Vec::new();
    let mut sweep_command = None;
    for (key, v) in &table {
        let k = key.as_str();
        match k {
            "kind" => {
                c.kind = text(k, v)?;
                if c.kind != "arnold" {
                    return Err(err(k, format!("unknown family kind `{}`", c.kind)));
                }
            }
            "tau" => c.tau = real(k, v)?,
            "alpha" => c.alpha = real(k, v)?,
            "beta" => c.beta = real(k, v)?,
            "omega" => c.omega = check_omega(real(k, v)?)?,
            "m" => c.m = in_range(k, count(k, v)?, 64, 1 << 22)?,
            "n" => c.n = in_range(k, count(k, v)?, 1000, 100_000_000)?,
            "ensemble" => c.ensemble = in_range(k, count(k, v)?, 1, 10_000)?,
            "burn_in" => c.burn_in = in_range(k, count(k, v)?, 0, 10_000_000)?,
            "cloud" => c.cloud = in_range(k, count(k, v)?, 2, 10_000_000)?,
            "depth" => c.depth = in_range(k, count(k, v)?, 0, 60)?,
            "tol" => c.tol = in_range(k, real(k, v)?, f64::MIN_POSITIVE, 1.0)?,
            "spread_tol" => c.spread_tol = in_range(k, real(k, v)?, 0.0, 1.0)?,
            "seed" => {
                c.seed = match v {
                    toml::Value::Integer(i) if *i >= 0 => *i as u64,
                    _ => return Err(err(k, format!("expected a non-negative integer, got {v}"))),
                };
                c.seed_given = true;
            }
            "t" => c.t = Some(in_range(k, real(k, v)?, 0.0, 1.0)?),
            "rho" => c.rho = Some(real(k, v)?),
            "rho1" => c.rho1 = Some(real(k, v)?),
            "rho2" => c.rho2 = Some(real(k, v)?),
            "theta0" => c.theta0 = in_range(k, real(k, v)?, 0.0, 1.0)?,
            "eps" => c.eps = in_range(k, real(k, v)?, f64::MIN_POSITIVE, 1.0)?,
            "horizon" => c.horizon = in_range(k, count(k, v)?, 0, 1000)?,
            "horizons" => {
                let arr = v.as_array().ok_or_else(|| err(k, "expected an array of integers"))?;
                let hs = arr.iter().map(|h| count(k, h)).collect::<Result<Vec<_>>>()?;
                if hs.len() < 4 || hs.windows(2).any(|w| w[1] <= w[0]) || hs.last() > Some(&1000) {
                    return Err(err(k, "needs at least four increasing horizons up to 1000"));
                }
                c.horizons = hs;
            }
            "sample" => c.sample = in_range(k, count(k, v)?, 1, 1_000_000)?,
            "scope" => {
                c.scope = text(k, v)?;
                if !matches!(c.scope.as_str(), "whole" | "fibre" | "cover") {
                    return Err(err(k, "expected whole, fibre or cover"));
                }
            }
            "source" => {
                c.source = text(k, v)?;
                if !matches!(c.source.as_str(), "fibre" | "cloud") {
                    return Err(err(k, "expected fibre or cloud"));
                }
            }
            "k" => c.k = in_range(k, count(k, v)?, 1, 64)?,
            "raster" => c.raster = in_range(k, count(k, v)?, 16, 4096)?,
            "gamma_grid" => {
                c.gamma_grid = in_range(k, count(k, v)?, 8, 1 << 20)?;
                if c.gamma_grid % 4 != 0 {
                    return Err(err(k, "must be a multiple of 4"));
                }
            }
            "bins" => c.bins = in_range(k, count(k, v)?, 1, 100_000)?,
            "uniform_n" => c.uniform_n = in_range(k, count(k, v)?, 1, 10_000_000)?,
            "uniform_samples" => c.uniform_samples = in_range(k, count(k, v)?, 1, 1_000_000)?,
            "n_max" => c.n_max = in_range(k, count(k, v)?, 0, 8)?,
            "sweep_command" => {
                let s = text(k, v)?;
                let cmd = Command::parse(&s).filter(|c| c.sweepable());
                sweep_command = Some(cmd.ok_or_else(|| err(k, format!("`{s}` cannot be swept; use rotnum, rotint or tsearch")))?);
            }
            "sweep_tau" | "sweep_alpha" | "sweep_beta" => axes.push(sweep_axis(&k[6..], k, v)?),
            _ => return Err(err(k, "unknown key")),
        }
    }
    if !axes.is_empty() || sweep_command.is_some() {
        if axes.is_empty() || axes.len() > 2 {
            return Err(err("sweep", "needs one or two of sweep_tau, sweep_alpha, sweep_beta"));
        }
        let rank = |a: &SweepAxis| ["tau", "alpha", "beta"].iter().position(|n| *n == a.name);
        axes.sort_by_key(rank);
        let spec = SweepSpec {
            axes,
            command: sweep_command.ok_or_else(|| err("sweep_command", "missing"))?,
        };
        if spec.cells() > MAX_SWEEP_CELLS {
            return Err(err("sweep", format!("{} cells above {MAX_SWEEP_CELLS}", spec.cells())));
        }
        c.sweep = Some(spec);
    }
    Ok(c)
}

impl RunConfig {
    pub fn family(&self) -> Result<FibreFamily> {
        FibreFamily::arnold(self.tau, self.alpha, self.beta, self.omega)
    }

    /// `key = value` lines for CSV header comments, in a fixed order.
    pub fn echo(&self) -> Vec<String> {
        let opt = |x: Option<f64>| x.map_or("none".to_string(), fmt_g);
        let mut lines = vec![
            format!("kind = {}", self.kind),
            format!("tau = {}", fmt_g(self.tau)),
            format!("alpha = {}", fmt_g(self.alpha)),
            format!("beta = {}", fmt_g(self.beta)),
            format!("omega = {}", fmt_g(self.omega)),
            format!("m = {}", self.m),
            format!("n = {}", self.n),
            format!("ensemble = {}", self.ensemble),
            format!("burn_in = {}", self.burn_in),
            format!("cloud = {}", self.cloud),
            format!("depth = {}", self.depth),
            format!("tol = {}", fmt_g(self.tol)),
            format!("seed = {}", self.seed),
            format!("t = {}", opt(self.t)),
            format!("rho = {}", opt(self.rho)),
        ];
        if let Some(s) = &self.sweep {
            lines.push(format!("sweep_command = {}", s.command.name()));
            for a in &s.axes {
                lines.push(format!("sweep_{} = [{}, {}, {}]", a.name, fmt_g(a.min), fmt_g(a.max), a.steps));
            }
        }
        lines
    }
}
