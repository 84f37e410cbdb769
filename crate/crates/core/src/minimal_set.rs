//! Minimal sets `M_rho`: plateau-avoiding survivor sets, orbit clouds,
//! uniform-rotation checks, strangely-dispersed diagnostics and the
//! `Gamma`-crossing certificate.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::circle::{
    circle_dist, frac, monotone_inverse, FibreFamily, FibrePoint, IntervalSetMod1,
};
use crate::circle::preimage::monotone_preimage_fine;
use crate::error::{invalid, Error, Result};
use crate::plateau::ForcedMonotoneMap;
use crate::rotation::orbit_displacement;

pub const MAX_SURVIVOR_DEPTH: usize = 60;
/// Largest `|F - F_t|` tolerated along a recorded orbit.
pub const COINCIDENCE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SurvivorSet {
    pub depth: usize,
    pub theta0: f64,
    pub set: IntervalSetMod1,
}

/// Points of the fibre over `theta0` whose first `depth` iterates under
/// `F_t` avoid plateau interiors.
///
/// Built backwards: `W_depth = U_depth`, `W_k = U_k u F_{t,theta_k}^{-1}(W_{k+1})`,
/// survivors are the complement of `W_0`.
pub fn survivor_search(map: &ForcedMonotoneMap, theta0: f64, depth: usize) -> Result<SurvivorSet> {
    if depth > MAX_SURVIVOR_DEPTH {
        return Err(invalid(format!("survivor depth {depth} above {MAX_SURVIVOR_DEPTH}")));
    }
    let omega = map.family.omega;
    let theta0 = frac(theta0);
    let theta_at = |k: usize| frac(theta0 + k as f64 * omega);
    let mut w = map.plateaus(theta_at(depth))?;
    for k in (0..depth).rev() {
        let th = theta_at(k);
        let f = map.fibre_fn(th)?;
        let back = monotone_preimage_fine(&|x| f(x), &w)?;
        w = map.plateaus(th)?.union(&back);
    }
    let set = w.complement();
    if set.is_empty() {
        return Err(Error::NumericDegeneracy(format!(
            "survivor set empty at depth {depth}; plateau tolerance too coarse"
        )));
    }
    Ok(SurvivorSet { depth, theta0, set })
}

/// [`survivor_search`] at the largest depth `<= max_depth`, in steps of 5,
/// whose survivor set is still resolvable in double precision.
pub fn deepest_survivor(map: &ForcedMonotoneMap, theta0: f64, max_depth: usize) -> Result<SurvivorSet> {
    let mut depth = max_depth;
    loop {
        match survivor_search(map, theta0, depth) {
            Err(Error::NumericDegeneracy(_)) if depth > 0 => depth = depth.saturating_sub(5),
            r => return r,
        }
    }
}

/// A finite sample of `M_rho`: consecutive points of one orbit of `F_t`,
/// stored as `(theta, x mod 1)` in time order.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct MinimalSetCloud {
    pub points: Vec<FibrePoint>,
    pub target_rho: f64,
    pub t: f64,
    pub burn_in: usize,
    pub theta0: f64,
    pub x0: f64,
    /// Largest `|F_theta(x) - F_{t,theta}(x)|` along the orbit.
    pub max_coincidence_gap: f64,
    /// Largest distance mod 1 between `F_theta(x_j)` and `x_{j+1}`.
    pub max_step_gap: f64,
}

/// Orbit sample of `M_rho` seeded inside the survivor set.
///
/// Forward iteration of `F_t` is repelled by `M_rho`, so the orbit is built
/// from the seed backwards through the monotone inverse of `F_t`: the first
/// `burn_in` preimages are discarded and the next `m` are kept, then put in
/// time order. Every recorded step is checked against both `F` and `F_t`.
pub fn omega_limit_cloud(
    map: &ForcedMonotoneMap,
    survivor: &SurvivorSet,
    burn_in: usize,
    m: usize,
    target_rho: f64,
) -> Result<MinimalSetCloud> {
    if m < 2 {
        return Err(invalid("cloud needs at least two points"));
    }
    let (a, b) = survivor
        .set
        .largest_arc()
        .ok_or_else(|| Error::NumericDegeneracy("empty survivor set".into()))?;
    let x0 = frac(0.5 * (a + b));
    let family = &map.family;
    let omega = family.omega;
    let total = burn_in + m;
    let mut pts = Vec::with_capacity(m);
    let (mut th, mut x) = (survivor.theta0, x0);
    for j in 0..total {
        th = frac(th - omega);
        x = pull_back(map, th, x, j)?;
        if j >= burn_in {
            pts.push(FibrePoint { theta: th, x });
        }
    }
    pts.reverse();
    let mut coincidence: f64 = 0.0;
    let mut step_gap: f64 = 0.0;
    for (j, w) in pts.windows(2).enumerate() {
        let fx = family.eval(w[0].theta, w[0].x);
        let ftx = map.eval(w[0].theta, w[0].x);
        let gap = (fx - ftx).abs();
        let miss = circle_dist(fx, w[1].x, 1.0);
        if gap > COINCIDENCE_TOL || miss > COINCIDENCE_TOL {
            return Err(Error::DepthInsufficient {
                step: j,
                gap: gap.max(miss),
            });
        }
        coincidence = coincidence.max(gap);
        step_gap = step_gap.max(miss);
    }
    Ok(MinimalSetCloud {
        points: pts,
        target_rho,
        t: map.t,
        burn_in,
        theta0: survivor.theta0,
        x0,
        max_coincidence_gap: coincidence,
        max_step_gap: step_gap,
    })
}

/// Preimage mod 1 of `x` under `F_{t,theta}`.
fn pull_back(map: &ForcedMonotoneMap, theta: f64, x: f64, step: usize) -> Result<f64> {
    let f = map.fibre_fn(theta)?;
    // the lift of x nearest the image of [0, 1)
    let y = x + (f(0.0) - x).ceil();
    let x = frac(monotone_inverse(&|z| f(z), y)?);
    if !x.is_finite() {
        return Err(Error::NumericDegeneracy(format!("non-finite preimage at step {step}")));
    }
    Ok(x)
}

/// A point of `M_rho` on the fibre over `theta`: a survivor seeded `steps`
/// rotations ahead, pulled back to `theta`.
pub fn fibre_representative(map: &ForcedMonotoneMap, theta: f64, steps: usize, depth: usize) -> Result<f64> {
    let omega = map.family.omega;
    let theta_at = |k: usize| frac(theta + k as f64 * omega);
    let survivor = deepest_survivor(map, theta_at(steps), depth)?;
    let (a, b) = survivor
        .set
        .largest_arc()
        .ok_or_else(|| Error::NumericDegeneracy("empty survivor set".into()))?;
    let mut x = frac(0.5 * (a + b));
    for k in (0..steps).rev() {
        x = pull_back(map, theta_at(k), x, steps - k)?;
    }
    Ok(x)
}

/// Number of occupied bins when `[0, 1)` is cut into `bins` theta-bins.
pub fn theta_bin_occupancy(points: &[FibrePoint], bins: usize) -> usize {
    let mut hit = vec![false; bins];
    for p in points {
        hit[((p.theta * bins as f64) as usize).min(bins - 1)] = true;
    }
    hit.iter().filter(|h| **h).count()
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct UniformRotationReport {
    pub n: usize,
    pub samples: usize,
    /// Largest `|(F_t^n(x) - x)/n - rho|` from cloud points.
    pub max_dev_forced: f64,
    /// Largest deviation of the `n`-step lift displacement along the recorded orbit.
    pub max_dev_orbit: f64,
    /// Largest deviation when the raw family is iterated instead; informative
    /// only, since `F` orbits leave `M_rho` once rounding pushes them off it.
    pub max_dev_raw: f64,
    pub ok: bool,
}

pub const UNIFORM_ROTATION_TOL: f64 = 5e-3;

/// Rotation of cloud points checked against the cloud's target.
pub fn uniform_rotation_check(
    cloud: &MinimalSetCloud,
    map: &ForcedMonotoneMap,
    n: usize,
    samples: usize,
) -> Result<UniformRotationReport> {
    let pts = &cloud.points;
    if pts.is_empty() || samples == 0 || n == 0 {
        return Err(invalid("uniform rotation check needs points, samples and n > 0"));
    }
    let family = &map.family;
    let rho = cloud.target_rho;
    let stride = |len: usize, i: usize| (i * len) / samples;
    let idx: Vec<usize> = (0..samples).map(|i| stride(pts.len(), i)).collect();
    let dev = |step: &(dyn Fn(f64, f64) -> f64 + Sync)| -> f64 {
        idx.par_iter()
            .map(|&i| {
                let p = pts[i];
                (orbit_displacement(step, family.omega, p.theta, p.x, n) / n as f64 - rho).abs()
            })
            .reduce(|| 0.0, f64::max)
    };
    let max_dev_forced = dev(&|th, x| map.eval(th, x));
    let max_dev_raw = dev(&|th, x| family.eval(th, x));
    // per-step lift increments along the recorded orbit
    let inc: Vec<f64> = pts.iter().map(|p| family.eval(p.theta, p.x) - p.x).collect();
    let max_dev_orbit = if pts.len() > n {
        let mut prefix = Vec::with_capacity(inc.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for v in &inc {
            acc += v;
            prefix.push(acc);
        }
        let span = pts.len() - n;
        (0..samples)
            .map(|i| {
                let s = stride(span, i);
                ((prefix[s + n] - prefix[s]) / n as f64 - rho).abs()
            })
            .fold(0.0, f64::max)
    } else {
        f64::NAN
    };
    let ok = max_dev_forced <= UNIFORM_ROTATION_TOL && !(max_dev_orbit > UNIFORM_ROTATION_TOL);
    Ok(UniformRotationReport {
        n,
        samples,
        max_dev_forced,
        max_dev_orbit,
        max_dev_raw,
        ok,
    })
}

/// Occupied cells of a `n_theta x n_x` raster of the torus.
#[derive(Debug, Clone)]
pub struct Raster {
    pub n_theta: usize,
    pub n_x: usize,
    cells: Vec<bool>,
}

impl Raster {
    pub fn new(points: &[FibrePoint], n_theta: usize, n_x: usize) -> Self {
        let mut cells = vec![false; n_theta * n_x];
        for p in points {
            let (i, j) = Self::cell_of(p, n_theta, n_x);
            cells[i * n_x + j] = true;
        }
        Self { n_theta, n_x, cells }
    }

    fn cell_of(p: &FibrePoint, n_theta: usize, n_x: usize) -> (usize, usize) {
        let i = ((frac(p.theta) * n_theta as f64) as usize).min(n_theta - 1);
        let j = ((frac(p.x) * n_x as f64) as usize).min(n_x - 1);
        (i, j)
    }

    pub fn occupied(&self, i: usize, j: usize) -> bool {
        self.cells[(i % self.n_theta) * self.n_x + (j % self.n_x)]
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|c| **c).count()
    }

    /// Number of cells occupied in both rasters.
    pub fn shared(&self, other: &Raster) -> usize {
        self.cells.iter().zip(&other.cells).filter(|(a, b)| **a && **b).count()
    }

    /// Theta-extent in cells of every 8-connected component on the torus.
    pub fn component_extents(&self) -> Vec<usize> {
        let (nt, nx) = (self.n_theta, self.n_x);
        let mut parent: Vec<usize> = (0..nt * nx).collect();
        fn find(p: &mut [usize], mut a: usize) -> usize {
            while p[a] != a {
                p[a] = p[p[a]];
                a = p[a];
            }
            a
        }
        for i in 0..nt {
            for j in 0..nx {
                if !self.cells[i * nx + j] {
                    continue;
                }
                let a = i * nx + j;
                // forward half of the 8-neighbourhood
                for (di, dj) in [(0usize, 1usize), (1, nx - 1), (1, 0), (1, 1)] {
                    let (ii, jj) = ((i + di) % nt, (j + dj) % nx);
                    if self.cells[ii * nx + jj] {
                        let (ra, rb) = (find(&mut parent, a), find(&mut parent, ii * nx + jj));
                        if ra != rb {
                            parent[ra.max(rb)] = ra.min(rb);
                        }
                    }
                }
            }
        }
        let mut cols: BTreeMap<usize, Vec<bool>> = BTreeMap::new();
        for i in 0..nt {
            for j in 0..nx {
                if self.cells[i * nx + j] {
                    let r = find(&mut parent, i * nx + j);
                    cols.entry(r).or_insert_with(|| vec![false; nt])[i] = true;
                }
            }
        }
        cols.values().map(|c| circular_extent(c)).collect()
    }
}

/// Length of the shortest circular arc of columns covering all `true` entries.
fn circular_extent(cols: &[bool]) -> usize {
    let n = cols.len();
    let occupied = cols.iter().filter(|c| **c).count();
    if occupied == 0 {
        return 0;
    }
    // longest circular run of empty columns
    let mut best = 0;
    let mut run = 0;
    for k in 0..2 * n {
        if cols[k % n] {
            run = 0;
        } else {
            run += 1;
            best = best.max(run.min(n));
        }
    }
    n - best
}

/// Longest circular run of `true` entries.
fn longest_run(cols: &[bool]) -> usize {
    let n = cols.len();
    if cols.iter().all(|c| *c) {
        return n;
    }
    let mut best = 0;
    let mut run = 0;
    for k in 0..2 * n {
        if cols[k % n] {
            run += 1;
            best = best.max(run);
        } else {
            run = 0;
        }
    }
    best.min(n)
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ExtentBin {
    pub extent: usize,
    pub count: usize,
}

/// Resolution-indexed proxies for the two parts of strange dispersion.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SdsmDiagnostics {
    pub grid: (usize, usize),
    pub occupied_cells: usize,
    pub components: usize,
    pub component_histogram: Vec<ExtentBin>,
    pub max_component_extent: usize,
    /// Every component lies in a single theta-column.
    pub separation_ok: bool,
    pub interval_checks: usize,
    pub interval_passes: usize,
    /// Every sampled ball has a theta-projection containing an arc of length `delta / 4`.
    pub interval_property_ok: bool,
}

pub const SDSM_BALL: f64 = 0.02;
pub const SDSM_BALL_CHECKS: usize = 32;

pub fn sdsm_diagnostics(points: &[FibrePoint], n_theta: usize, n_x: usize) -> Result<SdsmDiagnostics> {
    if n_theta == 0 || n_x == 0 || n_theta > 4096 || n_x > 4096 {
        return Err(invalid(format!("raster {n_theta}x{n_x} outside 1..=4096")));
    }
    if points.is_empty() {
        return Err(invalid("empty cloud"));
    }
    let raster = Raster::new(points, n_theta, n_x);
    let extents = raster.component_extents();
    let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
    for e in &extents {
        *hist.entry(*e).or_default() += 1;
    }
    let max_extent = extents.iter().copied().max().unwrap_or(0);

    let delta = SDSM_BALL;
    let need = ((delta / 4.0) * n_theta as f64).ceil() as usize;
    let checks = SDSM_BALL_CHECKS.min(points.len());
    let passes: usize = (0..checks)
        .into_par_iter()
        .map(|c| {
            let p = points[c * points.len() / checks];
            let mut cols = vec![false; n_theta];
            for q in points {
                if circle_dist(p.theta, q.theta, 1.0) <= delta && circle_dist(p.x, q.x, 1.0) <= delta {
                    cols[((q.theta * n_theta as f64) as usize).min(n_theta - 1)] = true;
                }
            }
            usize::from(longest_run(&cols) >= need)
        })
        .sum();
    Ok(SdsmDiagnostics {
        grid: (n_theta, n_x),
        occupied_cells: raster.count(),
        components: extents.len(),
        component_histogram: hist.into_iter().map(|(extent, count)| ExtentBin { extent, count }).collect(),
        max_component_extent: max_extent,
        separation_ok: max_extent <= 1,
        interval_checks: checks,
        interval_passes: passes,
        interval_property_ok: passes == checks,
    })
}

/// The curve `gamma` with `F_{t,theta}(gamma(theta))` at the middle of the
/// plateau band `I'`, and its crossing gap.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct GammaCrossing {
    pub gamma_quarter: f64,
    pub gamma_three_quarter: f64,
    /// `|gamma(1/4) - gamma(3/4)|`.
    pub gamma_gap: f64,
    pub crossing_ok: bool,
    pub band: IntervalSetMod1,
    pub band_length: f64,
    pub theta_grid: usize,
    pub max_jump: f64,
}

pub const CONTINUATION_JUMP: f64 = 0.5;
pub const CROSSING_GAP: f64 = 2.0;

pub fn gamma_crossing_certificate(map: &ForcedMonotoneMap, n_theta: usize) -> Result<GammaCrossing> {
    gamma_curve(map, n_theta).map(|(c, _)| c)
}

/// As [`gamma_crossing_certificate`], also returning `gamma` on the theta-grid.
pub fn gamma_curve(map: &ForcedMonotoneMap, n_theta: usize) -> Result<(GammaCrossing, Vec<f64>)> {
    let g = map
        .unforced()
        .ok_or_else(|| invalid("the crossing certificate needs the Arnold family"))?;
    if n_theta < 4 || !n_theta.is_multiple_of(4) {
        return Err(invalid(format!("theta grid {n_theta} must be a positive multiple of 4")));
    }
    let band = g
        .pieces()
        .iter()
        .filter(|p| p.end > p.start)
        .max_by(|a, b| (a.end - a.start).total_cmp(&(b.end - b.start)))
        .copied()
        .ok_or_else(|| invalid("no plateau: the band I' is empty (alpha > 1 is needed)"))?;
    let len = band.end - band.start;
    if len >= 1.0 {
        return Err(invalid(format!("plateau band length {len} is not below 1")));
    }
    let mid = 0.5 * (band.start + band.end);
    let family: &FibreFamily = &map.family;
    let mut gamma: Vec<f64> = Vec::with_capacity(n_theta + 1);
    let mut max_jump: f64 = 0.0;
    for i in 0..=n_theta {
        let th = i as f64 / n_theta as f64;
        let y = monotone_inverse(&|x| g.eval(x), mid - family.forcing(th))?;
        let y = match gamma.last() {
            None => y,
            Some(&prev) => {
                let y = y + (prev - y).round();
                let jump = (y - prev).abs();
                if jump > CONTINUATION_JUMP {
                    return Err(Error::ContinuationFailure { theta: th, jump });
                }
                max_jump = max_jump.max(jump);
                y
            }
        };
        gamma.push(y);
    }
    let (q1, q3) = (gamma[n_theta / 4], gamma[3 * n_theta / 4]);
    let gap = (q1 - q3).abs();
    let crossing = GammaCrossing {
        gamma_quarter: q1,
        gamma_three_quarter: q3,
        gamma_gap: gap,
        crossing_ok: gap >= CROSSING_GAP,
        band: IntervalSetMod1::from_pairs(&[(band.start, band.end)])?,
        band_length: len,
        theta_grid: n_theta,
        max_jump,
    };
    Ok((crossing, gamma))
}

/// Evidence for the strangely dispersed minimal set of a strongly forced map.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SdsmReport {
    pub gamma_gap: f64,
    pub crossing_ok: bool,
    pub band_arcs: Vec<(f64, f64)>,
    pub component_histogram: Vec<ExtentBin>,
    pub interval_property_ok: bool,
    pub gamma_quarter: f64,
    pub gamma_three_quarter: f64,
    pub separation_ok: bool,
    pub max_component_extent: usize,
    pub grid: (usize, usize),
}

impl SdsmReport {
    pub fn new(crossing: &GammaCrossing, diag: &SdsmDiagnostics) -> Self {
        Self {
            gamma_gap: crossing.gamma_gap,
            crossing_ok: crossing.crossing_ok,
            band_arcs: crossing.band.arcs().iter().map(|a| (a.start, a.end)).collect(),
            component_histogram: diag.component_histogram.clone(),
            interval_property_ok: diag.interval_property_ok,
            gamma_quarter: crossing.gamma_quarter,
            gamma_three_quarter: crossing.gamma_three_quarter,
            separation_ok: diag.separation_ok,
            max_component_extent: diag.max_component_extent,
            grid: diag.grid,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::GOLDEN_MEAN;
    use crate::plateau::forced_map;
    use std::f64::consts::TAU;

    fn standard(alpha: f64, t: f64, m: usize) -> ForcedMonotoneMap {
        forced_map(&FibreFamily::arnold(0.0, alpha, 0.0, GOLDEN_MEAN).unwrap(), t, m).unwrap()
    }

    #[test]
    fn plateau_free_map_survives_everywhere() {
        let map = forced_map(&FibreFamily::arnold(0.3, 0.5, 0.4, GOLDEN_MEAN).unwrap(), 0.5, 1024).unwrap();
        for d in [0, 3, 10] {
            assert!(survivor_search(&map, 0.1, d).unwrap().set.is_full());
        }
    }

    #[test]
    fn depth_zero_is_plateau_complement() {
        let map = standard(2.0, 1.0, 4096);
        let s = survivor_search(&map, 0.0, 0).unwrap();
        assert_eq!(s.set, map.plateaus(0.0).unwrap().complement());
        assert!(survivor_search(&map, 0.0, 61).is_err());
    }

    /// Survivors at depth 3 against a dense scan that rejects starts whose
    /// first iterates enter the plateau.
    #[test]
    fn survivors_match_grid_exclusion() {
        let map = standard(2.0, 1.0, 1 << 14);
        let s = survivor_search(&map, 0.0, 3).unwrap();
        let u = map.plateaus(0.0).unwrap();
        let n = 1_000_000;
        let kept = (0..n)
            .filter(|&i| {
                let mut x = i as f64 / n as f64;
                for _ in 0..=3 {
                    if u.contains(x) {
                        return false;
                    }
                    x = map.eval(0.0, x);
                }
                true
            })
            .count();
        assert!((s.set.measure() - kept as f64 / n as f64).abs() < 1e-5, "{} vs {}", s.set.measure(), kept);
    }

    #[test]
    fn survivor_measure_shrinks_with_depth() {
        let fam = FibreFamily::arnold(0.2, 1.5, 1.5, GOLDEN_MEAN).unwrap();
        let map = forced_map(&fam, 0.2, 4096).unwrap();
        let mut prev = 1.0;
        for d in 0..12 {
            let m = survivor_search(&map, 0.0, d).unwrap().set.measure();
            assert!(m <= prev + 1e-12);
            prev = m;
        }
    }

    #[test]
    fn rigid_cloud_fills_the_torus() {
        let tau = 2f64.sqrt() - 1.0;
        let fam = FibreFamily::arnold(tau, 0.0, 0.0, GOLDEN_MEAN).unwrap();
        let map = forced_map(&fam, 0.5, 1024).unwrap();
        let s = survivor_search(&map, 0.0, 2).unwrap();
        let cloud = omega_limit_cloud(&map, &s, 100, 1_000_000, tau).unwrap();
        let r = Raster::new(&cloud.points, 64, 64);
        assert_eq!(r.count(), 64 * 64);
        assert_eq!(cloud.max_coincidence_gap, 0.0);
    }

    #[test]
    fn constructed_curve_fails_separation() {
        let pts: Vec<FibrePoint> = (0..20_000)
            .map(|i| {
                let th = i as f64 / 20_000.0;
                FibrePoint { theta: th, x: 0.5 + 0.1 * (TAU * th).sin() }
            })
            .collect();
        let d = sdsm_diagnostics(&pts, 256, 256).unwrap();
        assert_eq!(d.components, 1);
        assert_eq!(d.max_component_extent, 256);
        assert!(!d.separation_ok);
        assert!(d.interval_property_ok);
    }

    #[test]
    fn vertical_segments_pass_separation() {
        let n = 128;
        let mut pts = Vec::new();
        for c in 0..n {
            let th = (c as f64 + 0.5) / n as f64;
            let base = 0.1 + 0.3 * (c % 3) as f64;
            for k in 0..50 {
                pts.push(FibrePoint { theta: th, x: base + 0.2 * k as f64 / 50.0 });
            }
        }
        let d = sdsm_diagnostics(&pts, n, n).unwrap();
        assert_eq!(d.components, n);
        assert!(d.separation_ok);
        assert_eq!(d.component_histogram, vec![ExtentBin { extent: 1, count: n }]);
    }

    #[test]
    fn circular_extent_wraps() {
        let mut c = vec![false; 10];
        c[9] = true;
        c[0] = true;
        assert_eq!(circular_extent(&c), 2);
        c[5] = true;
        assert_eq!(circular_extent(&c), 6);
        assert_eq!(longest_run(&c), 2);
    }

    #[test]
    fn unforced_gamma_is_constant() {
        let fam = FibreFamily::arnold(0.2, 1.5, 0.0, GOLDEN_MEAN).unwrap();
        let map = forced_map(&fam, 0.3, 4096).unwrap();
        let c = gamma_crossing_certificate(&map, 256).unwrap();
        assert!(c.gamma_gap < 1e-12);
        assert!(!c.crossing_ok);
        assert!(c.band_length > 0.0 && c.band_length < 1.0);
    }

    #[test]
    fn gamma_needs_a_plateau() {
        let fam = FibreFamily::arnold(0.2, 0.5, 1.5, GOLDEN_MEAN).unwrap();
        let map = forced_map(&fam, 0.3, 1024).unwrap();
        assert!(gamma_crossing_certificate(&map, 256).is_err());
    }
}
