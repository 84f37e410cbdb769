//! Fibred rotation numbers of monotone forced maps, the rotation interval
//! `[rho(F-), rho(F+)]`, the search for `t` with `rho(F_t) = rho` and the
//! length bound for strongly forced Arnold maps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use crate::circle::{frac, FibreFamily};
use crate::error::{invalid, Error, Result};
use crate::plateau::{forced_map, ForcedMonotoneMap};

/// `1 / p` and `1 / p^2` for the plastic number `p`.
const R2_A1: f64 = 0.754_877_666_246_692_8;
const R2_A2: f64 = 0.569_840_290_998_053_3;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RotationEstimate {
    pub value: f64,
    pub n: usize,
    pub ensemble: usize,
    pub spread: f64,
    pub richardson_gap: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RotationInterval {
    pub lo: f64,
    pub hi: f64,
    pub lo_est: RotationEstimate,
    pub hi_est: RotationEstimate,
}

impl RotationInterval {
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct TSearchResult {
    pub t: f64,
    pub achieved_rho: f64,
    pub target_rho: f64,
    pub iterations: usize,
    /// False when the bracket was exhausted with the gap above tolerance.
    pub converged: bool,
    pub bracket: (f64, f64),
    pub estimate: RotationEstimate,
}

/// Nearest lattice points `x+ in Z + 1/4` below and `x- in Z + 3/4` above `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticeNeighbors {
    pub x_plus: f64,
    pub x_minus: f64,
}

impl LatticeNeighbors {
    pub fn new(x: f64) -> Self {
        Self {
            x_plus: (x - 0.25).floor() + 0.25,
            x_minus: (x - 0.75).ceil() + 0.75,
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct LengthBoundReport {
    pub samples: usize,
    /// Largest error in `F(x+) - F(x-) = x+ - x- + alpha/pi`.
    pub identity_max_err: f64,
    /// Smallest `F+(x) - F-(x) - 1` seen.
    pub min_margin: f64,
}

/// Orbit of length `n` of the skew map `(theta, x) -> (theta + omega, step(theta, x))`,
/// returning the lift displacement `x_n - x_0`.
///
/// The fibre coordinate is kept in `[0, 1)` with the winding counted
/// separately, so the result does not lose precision as the lift grows.
pub fn orbit_displacement(step: impl Fn(f64, f64) -> f64, omega: f64, theta: f64, x: f64, n: usize) -> f64 {
    orbit_displacements(step, omega, theta, x, &[n])[0]
}

/// As [`orbit_displacement`] at several increasing horizons of one orbit.
pub fn orbit_displacements(step: impl Fn(f64, f64) -> f64, omega: f64, theta: f64, x: f64, horizons: &[usize]) -> Vec<f64> {
    let x0 = frac(x);
    let mut wind = x.floor();
    let (mut th, mut u) = (frac(theta), x0);
    let mut out = Vec::with_capacity(horizons.len());
    let mut done = 0;
    for &h in horizons {
        while done < h {
            let y = step(th, u);
            let k = y.floor();
            wind += k;
            u = y - k;
            th = frac(th + omega);
            done += 1;
        }
        out.push(wind + u - x);
    }
    out
}

/// `K` ensemble starts from the R2 low-discrepancy sequence, jittered by a
/// seeded generator.
pub fn ensemble_starts(k: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let j = 0.5 / k.max(1) as f64;
    (0..k)
        .map(|i| {
            let i = i as f64;
            let th = frac(0.5 + R2_A1 * i + rng.gen_range(-j..j));
            let x = frac(0.5 + R2_A2 * i + rng.gen_range(-j..j));
            (th, x)
        })
        .collect()
}

fn estimate_with(step: impl Fn(f64, f64) -> f64 + Sync, omega: f64, n: usize, k: usize, seed: u64) -> Result<RotationEstimate> {
    if n < 1000 {
        return Err(invalid(format!("orbit length n = {n} must be at least 1000")));
    }
    if k == 0 {
        return Err(invalid("ensemble size must be at least 1"));
    }
    let starts = ensemble_starts(k, seed);
    let rates: Vec<(f64, f64)> = starts
        .par_iter()
        .map(|&(th, x)| {
            let d = orbit_displacements(&step, omega, th, x, &[n, 2 * n]);
            (d[0] / n as f64, d[1] / (2 * n) as f64)
        })
        .collect();
    if rates.iter().any(|r| !r.0.is_finite() || !r.1.is_finite()) {
        return Err(Error::NumericDegeneracy("non-finite orbit".into()));
    }
    let mean_n = rates.iter().map(|r| r.0).sum::<f64>() / k as f64;
    let mean_2n = rates.iter().map(|r| r.1).sum::<f64>() / k as f64;
    let min = rates.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let max = rates.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(RotationEstimate {
        value: mean_2n.clamp(min, max),
        n,
        ensemble: k,
        spread: max - min,
        richardson_gap: (mean_2n - mean_n).abs(),
        min,
        max,
    })
}

/// Ensemble estimate of `rho(F_t)` from orbits of length `n` and `2n`.
pub fn rotation_number_monotone(map: &ForcedMonotoneMap, n: usize, k: usize, seed: u64) -> Result<RotationEstimate> {
    map.check_fibre(0.0)?;
    estimate_with(|th, x| map.eval(th, x), map.family.omega, n, k, seed)
}

/// Rotation estimate of the raw family, which must be fibre-wise monotone.
pub fn rotation_number_family(family: &FibreFamily, n: usize, k: usize, seed: u64) -> Result<RotationEstimate> {
    crate::circle::check_monotone(&|x| family.eval(0.0, x), 4096, 1e-9)?;
    estimate_with(|th, x| family.eval(th, x), family.omega, n, k, seed)
}

/// `[rho(F-), rho(F+)]` from the homotopy endpoints.
pub fn rotation_interval(family: &FibreFamily, n: usize, k: usize, seed: u64, m: usize) -> Result<RotationInterval> {
    let lo_est = rotation_number_monotone(&forced_map(family, 0.0, m)?, n, k, seed)?;
    let hi_est = rotation_number_monotone(&forced_map(family, 1.0, m)?, n, k, seed)?;
    Ok(RotationInterval {
        lo: lo_est.value,
        hi: hi_est.value,
        lo_est,
        hi_est,
    })
}

/// Estimate of `rho(F_t)`.
pub fn rho_at(family: &FibreFamily, t: f64, n: usize, k: usize, seed: u64, m: usize) -> Result<RotationEstimate> {
    rotation_number_monotone(&forced_map(family, t, m)?, n, k, seed)
}

/// Bisection on `t` for `rho(F_t) = target`, using monotonicity in `t`.
pub fn find_t_for_rho(
    family: &FibreFamily,
    target: f64,
    tol: f64,
    n: usize,
    k: usize,
    seed: u64,
    m: usize,
) -> Result<TSearchResult> {
    if !(tol > 0.0) || !target.is_finite() {
        return Err(invalid("t-search needs a finite target and positive tolerance"));
    }
    let lo_est = rho_at(family, 0.0, n, k, seed, m)?;
    let done = |t: f64, est: RotationEstimate, it: usize, ok: bool, br: (f64, f64)| TSearchResult {
        t,
        achieved_rho: est.value,
        target_rho: target,
        iterations: it,
        converged: ok,
        bracket: br,
        estimate: est,
    };
    if (lo_est.value - target).abs() <= tol {
        return Ok(done(0.0, lo_est, 0, true, (0.0, 0.0)));
    }
    let hi_est = rho_at(family, 1.0, n, k, seed, m)?;
    if target < lo_est.value - tol || target > hi_est.value + tol {
        return Err(Error::OutOfRange {
            target,
            lo: lo_est.value,
            hi: hi_est.value,
        });
    }
    if (hi_est.value - target).abs() <= tol {
        return Ok(done(1.0, hi_est, 0, true, (1.0, 1.0)));
    }
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut it = 0;
    while b - a >= 1e-6 {
        let mid = 0.5 * (a + b);
        let est = rho_at(family, mid, n, k, seed, m)?;
        it += 1;
        if (est.value - target).abs() <= tol {
            return Ok(done(mid, est, it, true, (a, b)));
        }
        if est.value < target {
            a = mid;
        } else {
            b = mid;
        }
    }
    let mid = 0.5 * (a + b);
    let est = rho_at(family, mid, n, k, seed, m)?;
    let ok = (est.value - target).abs() <= tol;
    Ok(done(mid, est, it + 1, ok, (a, b)))
}

/// Checks the lattice identity and `F+ >= F- + 1` for `|alpha| >= 5 pi / 2`.
pub fn verify_length_bound(family: &FibreFamily, samples: usize, seed: u64, m: usize) -> Result<LengthBoundReport> {
    let Some((_, alpha, _)) = family.arnold_params() else {
        return Err(invalid("length bound applies to the Arnold family only"));
    };
    if alpha.abs() < 2.5 * PI - 1e-12 {
        return Err(invalid(format!("|alpha| = {} below 5 pi / 2", alpha.abs())));
    }
    let minus = forced_map(family, 0.0, m)?;
    let plus = forced_map(family, 1.0, m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<(f64, f64)> = (0..samples).map(|_| (rng.gen::<f64>(), rng.gen_range(-2.0..2.0))).collect();
    let id_err = pts
        .iter()
        .take(1000.min(samples))
        .map(|&(th, x)| {
            let l = LatticeNeighbors::new(x);
            let lhs = family.eval(th, l.x_plus) - family.eval(th, l.x_minus);
            (lhs - (l.x_plus - l.x_minus + alpha / PI)).abs()
        })
        .fold(0.0, f64::max);
    let margin = pts
        .par_iter()
        .map(|&(th, x)| plus.eval(th, x) - minus.eval(th, x) - 1.0)
        .reduce(|| f64::INFINITY, f64::min);
    let report = LengthBoundReport {
        samples,
        identity_max_err: id_err,
        min_margin: margin,
    };
    if id_err > 1e-9 || margin < -1e-6 {
        return Err(Error::PropertyViolation(format!(
            "length bound: identity error {id_err:e}, margin {margin:e}"
        )));
    }
    Ok(report)
}
