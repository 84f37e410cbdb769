//! Command dispatch, sweeps and exit statuses.

use std::f64::consts::PI;
use std::path::PathBuf;

use clap::Parser;
use rayon::prelude::*;
use serde_json::json;

use crate::config::{parse_config, Command, RunConfig, SweepSpec};
use crate::entropy::{
    cloud_separation_counts, cover_lift, entropy_certificate, monotone_entropy_check, separation_counts,
    CertificateOptions, Dynamics, GrowthSource,
};
use crate::error::{Error, Result};
use crate::minimal_set::{
    deepest_survivor, gamma_crossing_certificate, omega_limit_cloud, sdsm_diagnostics, theta_bin_occupancy,
    uniform_rotation_check, MinimalSetCloud, SdsmReport,
};
use crate::output::{fmt_g, to_json, CsvDoc};
use crate::plateau::{forced_map, ForcedMonotoneMap};
use crate::rotation::{
    find_t_for_rho, rotation_interval, rotation_number_family, rotation_number_monotone, RotationInterval,
    TSearchResult,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PROPERTY: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_USAGE: i32 = 4;
/// Interval length demanded when `|alpha| >= 5 pi / 2`.
pub const LENGTH_BOUND_TOL: f64 = 1e-3;

#[derive(Debug, Parser)]
#[command(name = "rotorbit", version, about = "Rotation intervals and minimal sets of forced circle maps")]
pub struct Cli {
    pub command: Command,
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Artifact bytes and the exit status they earned.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub bytes: Vec<u8>,
    pub status: i32,
}

impl Outcome {
    fn new(bytes: Vec<u8>, ok: bool) -> Self {
        Self {
            bytes,
            status: if ok { EXIT_OK } else { EXIT_PROPERTY },
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::PropertyViolation(_) | Error::CertificateFailure(_) | Error::InconsistentCertificate(_) => EXIT_PROPERTY,
        Error::NumericDegeneracy(_) | Error::DepthInsufficient { .. } | Error::ContinuationFailure { .. } => {
            EXIT_DEGENERATE
        }
        Error::InvalidArgument(_)
        | Error::NotMonotone { .. }
        | Error::OutOfRange { .. }
        | Error::Config { .. }
        | Error::Io(_) => EXIT_USAGE,
    }
}

/// Short label for sweep status columns.
fn error_label(e: &Error) -> &'static str {
    match e {
        Error::InvalidArgument(_) => "invalid-argument",
        Error::NotMonotone { .. } => "not-monotone",
        Error::OutOfRange { .. } => "out-of-range",
        Error::NumericDegeneracy(_) => "numeric-degeneracy",
        Error::DepthInsufficient { .. } => "depth-insufficient",
        Error::ContinuationFailure { .. } => "continuation-failure",
        Error::PropertyViolation(_) => "property-violation",
        Error::CertificateFailure(_) => "certificate-failure",
        Error::InconsistentCertificate(_) => "inconsistent-certificate",
        Error::Config { .. } => "config",
        Error::Io(_) => "io",
    }
}

fn required(key: &str, v: Option<f64>) -> Result<f64> {
    v.ok_or_else(|| Error::Config {
        key: key.into(),
        msg: "required for this command".into(),
    })
}

fn strong_forcing(cfg: &RunConfig) -> bool {
    cfg.alpha.abs() >= 2.5 * PI - 1e-12
}

fn interval_checks(cfg: &RunConfig, ri: &RotationInterval) -> bool {
    let spread = ri.lo_est.spread.max(ri.hi_est.spread);
    if strong_forcing(cfg) {
        ri.length() >= 1.0 - LENGTH_BOUND_TOL
    } else if cfg.alpha.abs() <= 1.0 {
        // monotone fibres: the interval collapses to a point
        ri.length() <= 2.0 * spread + cfg.spread_tol
    } else {
        true
    }
}

fn rotnum_values(cfg: &RunConfig) -> Result<(serde_json::Value, bool, Vec<f64>)> {
    let family = cfg.family()?;
    let est = match cfg.t {
        Some(t) => rotation_number_monotone(&forced_map(&family, t, cfg.m)?, cfg.n, cfg.ensemble, cfg.seed)?,
        None => rotation_number_family(&family, cfg.n, cfg.ensemble, cfg.seed)?,
    };
    let ok = est.spread <= cfg.spread_tol;
    let scalars = vec![est.value, est.spread, est.richardson_gap];
    let report = json!({ "command": "rotnum", "t": cfg.t, "estimate": est, "spread_ok": ok });
    Ok((report, ok, scalars))
}

fn rotint_values(cfg: &RunConfig) -> Result<(serde_json::Value, bool, Vec<f64>)> {
    let ri = rotation_interval(&cfg.family()?, cfg.n, cfg.ensemble, cfg.seed, cfg.m)?;
    let ok = interval_checks(cfg, &ri);
    let spread = ri.lo_est.spread.max(ri.hi_est.spread);
    let scalars = vec![ri.lo, ri.hi, ri.length(), spread];
    let report = json!({
        "command": "rotint",
        "lo": ri.lo,
        "hi": ri.hi,
        "length": ri.length(),
        "lo_estimate": ri.lo_est,
        "hi_estimate": ri.hi_est,
        "checks_ok": ok,
    });
    Ok((report, ok, scalars))
}

fn tsearch(cfg: &RunConfig, rho: f64) -> Result<TSearchResult> {
    find_t_for_rho(&cfg.family()?, rho, cfg.tol, cfg.n, cfg.ensemble, cfg.seed, cfg.m)
}

fn tsearch_values(cfg: &RunConfig) -> Result<(serde_json::Value, bool, Vec<f64>)> {
    let r = tsearch(cfg, required("rho", cfg.rho)?)?;
    let scalars = vec![r.t, r.achieved_rho, r.converged as u8 as f64];
    let ok = r.converged;
    Ok((json!({ "command": "tsearch", "result": r }), ok, scalars))
}

struct CloudRun {
    interval: RotationInterval,
    search: TSearchResult,
    map: ForcedMonotoneMap,
    depth: usize,
    cloud: MinimalSetCloud,
}

/// Cloud of `M_rho` for the configured `rho`, or the interval midpoint.
fn build_cloud(cfg: &RunConfig) -> Result<CloudRun> {
    let family = cfg.family()?;
    let interval = rotation_interval(&family, cfg.n, cfg.ensemble, cfg.seed, cfg.m)?;
    let rho = cfg.rho.unwrap_or(0.5 * (interval.lo + interval.hi));
    let search = tsearch(cfg, rho)?;
    let map = forced_map(&family, search.t, cfg.m)?;
    let survivor = deepest_survivor(&map, cfg.theta0, cfg.depth)?;
    let cloud = omega_limit_cloud(&map, &survivor, cfg.burn_in, cfg.cloud, search.achieved_rho)?;
    Ok(CloudRun {
        interval,
        search,
        map,
        depth: survivor.depth,
        cloud,
    })
}

fn minset(cfg: &RunConfig) -> Result<Outcome> {
    let run = build_cloud(cfg)?;
    let uni = uniform_rotation_check(&run.cloud, &run.map, cfg.uniform_n, cfg.uniform_samples)?;
    let occupied = theta_bin_occupancy(&run.cloud.points, cfg.bins);
    let mut doc = CsvDoc::new(&["theta", "x"]);
    doc.comment("rotorbit minset");
    for line in cfg.echo() {
        doc.comment(line);
    }
    let c = &run.cloud;
    doc.comment(format!("interval = [{}, {}]", fmt_g(run.interval.lo), fmt_g(run.interval.hi)));
    doc.comment(format!("target_rho = {}", fmt_g(run.search.target_rho)));
    doc.comment(format!("t = {}", fmt_g(run.search.t)));
    doc.comment(format!("achieved_rho = {}", fmt_g(run.search.achieved_rho)));
    doc.comment(format!("survivor_depth = {}", run.depth));
    doc.comment(format!("max_coincidence_gap = {}", fmt_g(c.max_coincidence_gap)));
    doc.comment(format!("max_step_gap = {}", fmt_g(c.max_step_gap)));
    doc.comment(format!("theta_bins_occupied = {occupied}/{}", cfg.bins));
    doc.comment(format!("uniform_rotation_dev = {}", fmt_g(uni.max_dev_forced)));
    for p in &c.points {
        doc.num_row(&[p.theta, p.x]);
    }
    Ok(Outcome::new(doc.to_bytes()?, uni.ok && occupied == cfg.bins))
}

fn sdsm(cfg: &RunConfig) -> Result<Outcome> {
    let run = build_cloud(cfg)?;
    let crossing = gamma_crossing_certificate(&run.map, cfg.gamma_grid)?;
    let diag = sdsm_diagnostics(&run.cloud.points, cfg.raster, cfg.raster)?;
    let report = SdsmReport::new(&crossing, &diag);
    Ok(Outcome::new(to_json(&report)?, report.crossing_ok))
}

fn entropy_cert(cfg: &RunConfig) -> Result<Outcome> {
    let opts = CertificateOptions {
        n: cfg.n,
        ensemble: cfg.ensemble,
        seed: cfg.seed,
        m: cfg.m,
        burn_in: cfg.burn_in,
        cloud_len: cfg.cloud,
        depth: cfg.depth,
        bins: cfg.bins,
        n_max: cfg.n_max,
    };
    let cert = entropy_certificate(
        &cfg.family()?,
        required("rho1", cfg.rho1)?,
        required("rho2", cfg.rho2)?,
        cfg.tol,
        &opts,
    )?;
    Ok(Outcome::new(to_json(&cert)?, cert.analytic_ok && cert.itinerary_ok))
}

fn sep_count(cfg: &RunConfig) -> Result<Outcome> {
    let family = cfg.family()?;
    let count = match cfg.scope.as_str() {
        "cover" => {
            let lift = cover_lift(&family, cfg.k)?;
            separation_counts(Dynamics::Cover(&lift), None, cfg.horizon, cfg.eps, cfg.sample, cfg.seed)?
        }
        "fibre" => separation_counts(Dynamics::Family(&family), Some(cfg.theta0), cfg.horizon, cfg.eps, cfg.sample, cfg.seed)?,
        _ => separation_counts(Dynamics::Family(&family), None, cfg.horizon, cfg.eps, cfg.sample, cfg.seed)?,
    };
    Ok(Outcome::new(to_json(&count)?, true))
}

fn bowen_check(cfg: &RunConfig) -> Result<Outcome> {
    let report = if cfg.source == "cloud" {
        let run = build_cloud(cfg)?;
        let r = monotone_entropy_check(GrowthSource::Cloud(&run.cloud), cfg.eps, &cfg.horizons, cfg.sample, cfg.seed)?;
        let top = cloud_separation_counts(&run.cloud, *cfg.horizons.last().unwrap(), cfg.eps, cfg.sample)?;
        json!({ "command": "bowen-check", "source": "cloud", "growth": r, "top": top })
    } else {
        let map = forced_map(&cfg.family()?, cfg.t.unwrap_or(0.0), cfg.m)?;
        let r = monotone_entropy_check(
            GrowthSource::Fibre {
                map: &map,
                theta: cfg.theta0,
            },
            cfg.eps,
            &cfg.horizons,
            cfg.sample,
            cfg.seed,
        )?;
        json!({ "command": "bowen-check", "source": "fibre", "growth": r })
    };
    // report only
    Ok(Outcome::new(to_json(&report)?, true))
}

fn scalar_columns(cmd: Command) -> &'static [&'static str] {
    match cmd {
        Command::Rotnum => &["value", "spread", "richardson_gap"],
        Command::Rotint => &["lo", "hi", "length", "spread"],
        _ => &["t", "achieved_rho", "converged"],
    }
}

fn scalar_values(cfg: &RunConfig, cmd: Command) -> Result<(serde_json::Value, bool, Vec<f64>)> {
    match cmd {
        Command::Rotnum => rotnum_values(cfg),
        Command::Rotint => rotint_values(cfg),
        Command::Tsearch => tsearch_values(cfg),
        other => Err(Error::InvalidArgument(format!("{} has no scalar form", other.name()))),
    }
}

/// One row per cell, first axis outermost. A failing cell fills the status
/// columns and leaves its scalars empty.
pub fn run_sweep(cfg: &RunConfig, spec: &SweepSpec) -> Result<Outcome> {
    let cells: Vec<Vec<usize>> = match spec.axes.as_slice() {
        [a] => (0..a.steps).map(|i| vec![i]).collect(),
        [a, b] => (0..a.steps).flat_map(|i| (0..b.steps).map(move |j| vec![i, j])).collect(),
        _ => return Err(Error::InvalidArgument("sweep needs one or two axes".into())),
    };
    let rows: Vec<Vec<String>> = cells
        .par_iter()
        .map(|idx| {
            let mut c = cfg.clone();
            c.sweep = None;
            let mut row = Vec::new();
            for (axis, &i) in spec.axes.iter().zip(idx) {
                let v = axis.value(i);
                match axis.name.as_str() {
                    "tau" => c.tau = v,
                    "alpha" => c.alpha = v,
                    _ => c.beta = v,
                }
            }
            row.extend([c.tau, c.alpha, c.beta].map(fmt_g));
            match scalar_values(&c, spec.command) {
                Ok((_, ok, vals)) => {
                    row.push(if ok { "ok" } else { "property-violation" }.into());
                    row.push((if ok { EXIT_OK } else { EXIT_PROPERTY }).to_string());
                    row.extend(vals.iter().map(|v| fmt_g(*v)));
                }
                Err(e) => {
                    row.push(error_label(&e).into());
                    row.push(exit_code(&e).to_string());
                    row.extend(scalar_columns(spec.command).iter().map(|_| String::new()));
                }
            }
            row
        })
        .collect();
    let mut header = vec!["tau", "alpha", "beta", "status", "exit"];
    header.extend(scalar_columns(spec.command));
    let mut doc = CsvDoc::new(&header);
    doc.comment(format!("rotorbit sweep {}", spec.command.name()));
    for line in cfg.echo() {
        doc.comment(line);
    }
    for r in rows {
        doc.row(r);
    }
    Ok(Outcome::new(doc.to_bytes()?, true))
}

/// Runs `cmd` and returns its artifact.
pub fn run_command(cfg: &RunConfig, cmd: Command) -> Result<Outcome> {
    if !cfg.seed_given {
        return Err(Error::Config {
            key: "seed".into(),
            msg: format!("{} is stochastic; set `seed` or pass --seed", cmd.name()),
        });
    }
    match cmd {
        Command::Rotnum | Command::Rotint | Command::Tsearch => {
            let (report, ok, _) = scalar_values(cfg, cmd)?;
            Ok(Outcome::new(to_json(&report)?, ok))
        }
        Command::Minset => minset(cfg),
        Command::Sdsm => sdsm(cfg),
        Command::EntropyCert => entropy_cert(cfg),
        Command::SepCount => sep_count(cfg),
        Command::BowenCheck => bowen_check(cfg),
        Command::Sweep => {
            let spec = cfg.sweep.clone().ok_or_else(|| Error::Config {
                key: "sweep_command".into(),
                msg: "sweep needs sweep_command and at least one sweep axis".into(),
            })?;
            run_sweep(cfg, &spec)
        }
    }
}

fn execute(cli: &Cli) -> Result<i32> {
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| Error::Io(format!("{}: {e}", cli.config.display())))?;
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
        cfg.seed_given = true;
    }
    let outcome = run_command(&cfg, cli.command)?;
    match &cli.out {
        Some(path) => std::fs::write(path, &outcome.bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&outcome.bytes)?;
        }
    }
    if outcome.status != EXIT_OK {
        eprintln!("rotorbit: a property check failed; see the artifact");
    }
    Ok(outcome.status)
}

/// Entry point shared by the binary and tests.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("rotorbit: {e}");
            exit_code(&e)
        }
    }
}
