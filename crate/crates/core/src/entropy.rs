//! Topological entropy: Bowen metrics, greedy separated and covering counts,
//! the `k`-fold cover lift, the `log 2 / N` certificate for maps with a
//! non-trivial rotation interval and the linear-growth check for monotone maps.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::circle::{circle_dist, frac, FibreFamily, FibrePoint, GOLDEN_MEAN};
use crate::error::{invalid, Error, Result};
use crate::minimal_set::{deepest_survivor, fibre_representative, omega_limit_cloud, MinimalSetCloud};
use crate::plateau::{forced_map, ForcedMonotoneMap, DEFAULT_GRID};
use crate::rotation::{ensemble_starts, find_t_for_rho, rotation_interval};

pub const COVER_DEGREE: usize = 4;
pub const HORIZON_CAP: usize = 1000;
/// Relative slack on the analytic horizon `floor(10 / (rho2 - rho1)) + 1`.
pub const HORIZON_SLACK: f64 = 0.2;
pub const GROWTH_RATE_TOL: f64 = 0.01;
pub const MAX_ITINERARY_DEPTH: usize = 8;
pub const MAX_SAMPLE: usize = 1_000_000;
/// Samples per unit interval when splitting `f^N` into monotone pieces.
const SEGMENT_SAMPLES: usize = 1 << 16;
const GREEDY_CHUNK: usize = 1024;
const KEPT_COMPONENTS: usize = 8;

/// The `k`-fold cover `Theta x R/kZ` of a family.
#[derive(Debug, Clone)]
pub struct CoverLift {
    pub family: FibreFamily,
    pub k: usize,
}

pub fn cover_lift(family: &FibreFamily, k: usize) -> Result<CoverLift> {
    if k == 0 {
        return Err(invalid("cover degree must be at least 1"));
    }
    Ok(CoverLift {
        family: family.clone(),
        k,
    })
}

impl CoverLift {
    /// `f^_theta(x^)` in `[0, k)`.
    pub fn eval(&self, theta: f64, x: f64) -> f64 {
        let y = self.family.eval(theta, x).rem_euclid(self.k as f64);
        if y >= self.k as f64 {
            0.0
        } else {
            y
        }
    }

    /// Projection `R/kZ -> R/Z`.
    pub fn project(&self, x: f64) -> f64 {
        frac(x)
    }
}

/// Dynamics whose Bowen metrics are sampled.
#[derive(Clone, Copy)]
pub enum Dynamics<'a> {
    Family(&'a FibreFamily),
    Forced(&'a ForcedMonotoneMap),
    Cover(&'a CoverLift),
}

impl Dynamics<'_> {
    fn omega(&self) -> f64 {
        match self {
            Dynamics::Family(f) => f.omega,
            Dynamics::Forced(m) => m.family.omega,
            Dynamics::Cover(c) => c.family.omega,
        }
    }

    /// Circumference of the fibre.
    pub fn period(&self) -> f64 {
        match self {
            Dynamics::Cover(c) => c.k as f64,
            _ => 1.0,
        }
    }

    /// One fibre step, reduced to `[0, period)`.
    fn step(&self, theta: f64, x: f64) -> f64 {
        let y = match self {
            Dynamics::Family(f) => f.eval(theta, x),
            Dynamics::Forced(m) => m.eval(theta, x),
            Dynamics::Cover(c) => c.family.eval(theta, x),
        };
        let p = self.period();
        let r = y.rem_euclid(p);
        if r >= p {
            0.0
        } else {
            r
        }
    }
}

/// `y, f(y), ..., f^n(y)` with fibre coordinates reduced mod the period.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct OrbitSegment {
    pub start: FibrePoint,
    pub length: usize,
    pub states: Vec<(f64, f64)>,
}

impl OrbitSegment {
    pub fn new(dynamics: Dynamics<'_>, start: FibrePoint, n: usize) -> Self {
        let omega = dynamics.omega();
        let mut states = Vec::with_capacity(n + 1);
        let (mut th, mut x) = (start.theta, start.x.rem_euclid(dynamics.period()));
        states.push((th, x));
        for _ in 0..n {
            x = dynamics.step(th, x);
            th = frac(th + omega);
            states.push((th, x));
        }
        Self {
            start,
            length: n,
            states,
        }
    }
}

/// `d^f_n(a, b)` for the max-metric on `Theta x T^1`.
pub fn orbit_metric(a: FibrePoint, b: FibrePoint, n: usize, family: &FibreFamily) -> f64 {
    let oa = OrbitSegment::new(Dynamics::Family(family), a, n);
    let ob = OrbitSegment::new(Dynamics::Family(family), b, n);
    oa.states
        .iter()
        .zip(&ob.states)
        .map(|(p, q)| circle_dist(p.0, q.0, 1.0).max(circle_dist(p.1, q.1, 1.0)))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub enum Scope {
    Whole,
    Fibre,
    Cover,
    Cloud,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SeparationCount {
    pub n: usize,
    pub eps: f64,
    /// Greedy `(f, n, eps)`-separated subset of the sample: a lower bound for `S(f, n, eps)`.
    pub s_lower: usize,
    /// Size of the greedy cover of the sample by `(f, n, eps)`-balls.
    pub r_upper: usize,
    pub scope: Scope,
    pub samples: usize,
}

/// Orbits of a sample, flattened: row `i` holds `n + 1` fibre states.
struct Orbits {
    theta: Vec<f64>,
    xs: Vec<f64>,
    n: usize,
    period: f64,
}

impl Orbits {
    fn len(&self) -> usize {
        self.theta.len()
    }

    fn compute(dynamics: Dynamics<'_>, starts: &[(f64, f64)], n: usize) -> Self {
        let rows: Vec<Vec<f64>> = starts
            .par_iter()
            .map(|&(th, x)| {
                OrbitSegment::new(dynamics, FibrePoint { theta: th, x }, n)
                    .states
                    .into_iter()
                    .map(|s| s.1)
                    .collect()
            })
            .collect();
        Self {
            theta: starts.iter().map(|s| s.0).collect(),
            xs: rows.concat(),
            n,
            period: dynamics.period(),
        }
    }

    /// Rows cut from one recorded orbit: row `i` starts at `points[idx[i]]`.
    fn from_cloud(points: &[FibrePoint], idx: &[usize], n: usize) -> Self {
        let mut xs = Vec::with_capacity(idx.len() * (n + 1));
        for &i in idx {
            xs.extend(points[i..=i + n].iter().map(|p| p.x));
        }
        Self {
            theta: idx.iter().map(|&i| points[i].theta).collect(),
            xs,
            n,
            period: 1.0,
        }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.xs[i * (self.n + 1)..(i + 1) * (self.n + 1)]
    }

    /// `d_n(i, j) >= eps`, stopping at the first witness.
    fn separated(&self, i: usize, j: usize, eps: f64) -> bool {
        if circle_dist(self.theta[i], self.theta[j], 1.0) >= eps {
            return true;
        }
        self.row(i)
            .iter()
            .zip(self.row(j))
            .any(|(a, b)| circle_dist(*a, *b, self.period) >= eps)
    }

    /// Cell of row `i` in a grid over `(theta, x_0, x_{n/2}, x_n)` with cells
    /// at least `eps` wide; rows closer than `eps` sit in neighbouring cells.
    fn cell(&self, i: usize, eps: f64) -> [u32; 4] {
        let r = self.row(i);
        let c = |v: f64, p: f64| {
            let k = ((p / eps).floor() as u32).max(1);
            ((v / p * k as f64) as u32).min(k - 1)
        };
        [
            c(self.theta[i], 1.0),
            c(r[0], self.period),
            c(r[self.n / 2], self.period),
            c(r[self.n], self.period),
        ]
    }

    fn neighbours(&self, cell: [u32; 4], eps: f64) -> Vec<[u32; 4]> {
        let ks = [
            ((1.0 / eps).floor() as u32).max(1),
            ((self.period / eps).floor() as u32).max(1),
        ];
        let mut out = vec![cell];
        for d in 0..4 {
            let k = ks[(d > 0) as usize];
            let mut next = Vec::with_capacity(out.len() * 3);
            for c in &out {
                for s in [k - 1, 0, 1] {
                    let mut c2 = *c;
                    c2[d] = (c[d] + s) % k;
                    next.push(c2);
                }
            }
            next.sort_unstable();
            next.dedup();
            out = next;
        }
        out
    }

    /// Greedy maximal `eps`-separated subset in sample order, extending `seed`.
    /// Candidates are screened in parallel against the set as it stood before
    /// their chunk, then accepted sequentially, so the result does not depend on
    /// scheduling.
    fn greedy(&self, eps: f64, seed: Vec<usize>) -> Vec<usize> {
        let mut chosen = seed;
        let mut taken = vec![false; self.len()];
        let mut grid: HashMap<[u32; 4], Vec<usize>> = HashMap::new();
        for &c in &chosen {
            taken[c] = true;
            grid.entry(self.cell(c, eps)).or_default().push(c);
        }
        let far_from = |grid: &HashMap<[u32; 4], Vec<usize>>, i: usize| {
            self.neighbours(self.cell(i, eps), eps)
                .iter()
                .filter_map(|c| grid.get(c))
                .all(|v| v.iter().all(|&c| self.separated(i, c, eps)))
        };
        let mut start = 0;
        while start < self.len() {
            let end = (start + GREEDY_CHUNK).min(self.len());
            let far: Vec<bool> = (start..end)
                .into_par_iter()
                .map(|i| !taken[i] && far_from(&grid, i))
                .collect();
            let mut fresh: HashMap<[u32; 4], Vec<usize>> = HashMap::new();
            for (off, ok) in far.into_iter().enumerate() {
                let i = start + off;
                if ok && far_from(&fresh, i) {
                    chosen.push(i);
                    taken[i] = true;
                    fresh.entry(self.cell(i, eps)).or_default().push(i);
                }
            }
            for (c, v) in fresh {
                grid.entry(c).or_default().extend(v);
            }
            start = end;
        }
        chosen
    }

    /// Greedy sets at `eps * 2^j` from the coarsest scale down, each extending
    /// the previous one, so counts are monotone in `eps`.
    fn nested_greedy(&self, eps: f64) -> Vec<usize> {
        let diam = 0.5 * self.period;
        let mut scales = vec![eps];
        while *scales.last().unwrap() <= diam {
            let s = scales.last().unwrap() * 2.0;
            scales.push(s);
        }
        scales
            .iter()
            .rev()
            .fold(Vec::new(), |set, &s| self.greedy(s, set))
    }
}

fn check_counts_args(n: usize, eps: f64, sample: usize) -> Result<()> {
    let _ = n;
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(invalid(format!("eps must be positive, got {eps}")));
    }
    if sample == 0 || sample > MAX_SAMPLE {
        return Err(invalid(format!("sample budget {sample} outside 1..={MAX_SAMPLE}")));
    }
    Ok(())
}

/// Kronecker sequence on one fibre with a seeded offset.
fn fibre_starts(sample: usize, seed: u64, period: f64) -> Vec<f64> {
    let u0: f64 = ChaCha8Rng::seed_from_u64(seed).gen();
    (0..sample)
        .map(|i| period * frac(u0 + i as f64 * GOLDEN_MEAN))
        .collect()
}

/// Low-discrepancy starts for `scope`; `fibre` fixes the base point of a
/// single-fibre sample.
fn sample_starts(dynamics: Dynamics<'_>, fibre: Option<f64>, sample: usize, seed: u64) -> Vec<(f64, f64)> {
    let p = dynamics.period();
    match fibre {
        Some(th) => fibre_starts(sample, seed, p).into_iter().map(|x| (frac(th), x)).collect(),
        None => ensemble_starts(sample, seed)
            .into_iter()
            .map(|(th, x)| (th, p * x))
            .collect(),
    }
}

fn scope_of(dynamics: Dynamics<'_>, fibre: Option<f64>) -> Scope {
    match (dynamics, fibre) {
        (Dynamics::Cover(_), _) => Scope::Cover,
        (_, Some(_)) => Scope::Fibre,
        _ => Scope::Whole,
    }
}

/// Greedy separated and covering counts over a low-discrepancy sample of the
/// whole space (`fibre = None`) or of the fibre over `fibre`.
///
/// A maximal separated subset of the sample is also a cover of it, so
/// `r_upper` bounds `R` for the sampled set only.
pub fn separation_counts(
    dynamics: Dynamics<'_>,
    fibre: Option<f64>,
    n: usize,
    eps: f64,
    sample: usize,
    seed: u64,
) -> Result<SeparationCount> {
    check_counts_args(n, eps, sample)?;
    let starts = sample_starts(dynamics, fibre, sample, seed);
    let orbits = Orbits::compute(dynamics, &starts, n);
    let set = orbits.nested_greedy(eps);
    Ok(SeparationCount {
        n,
        eps,
        s_lower: set.len(),
        r_upper: set.len(),
        scope: scope_of(dynamics, fibre),
        samples: sample,
    })
}

/// Evenly spaced cloud indices whose next `n` steps are recorded.
fn cloud_indices(cloud: &MinimalSetCloud, n: usize, sample: usize) -> Result<Vec<usize>> {
    let len = cloud.points.len();
    if len <= n {
        return Err(invalid(format!("cloud of {len} points shorter than horizon {n}")));
    }
    let span = len - n;
    let take = sample.min(span);
    Ok((0..take).map(|i| i * span / take).collect())
}

/// Counts for `f` restricted to a cloud, using its recorded orbit as the dynamics.
pub fn cloud_separation_counts(cloud: &MinimalSetCloud, n: usize, eps: f64, sample: usize) -> Result<SeparationCount> {
    check_counts_args(n, eps, sample)?;
    let idx = cloud_indices(cloud, n, sample)?;
    let orbits = Orbits::from_cloud(&cloud.points, &idx, n);
    let set = orbits.nested_greedy(eps);
    Ok(SeparationCount {
        n,
        eps,
        s_lower: set.len(),
        r_upper: set.len(),
        scope: Scope::Cloud,
        samples: idx.len(),
    })
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CoverComparison {
    pub k: usize,
    pub n: usize,
    pub eps: f64,
    pub samples: usize,
    pub r_cover: usize,
    pub r_base_greedy: usize,
    /// `min(greedy base cover, projected cover centres)`.
    pub r_base: usize,
    pub base_le_cover: bool,
    pub cover_le_k_base: bool,
}

/// Greedy covers of one sample of `Theta x T^1_k` and of its projection.
pub fn cover_comparison(family: &FibreFamily, k: usize, n: usize, eps: f64, sample: usize, seed: u64) -> Result<CoverComparison> {
    check_counts_args(n, eps, sample)?;
    let lift = cover_lift(family, k)?;
    let cover = Dynamics::Cover(&lift);
    let starts = sample_starts(cover, None, sample, seed);
    let projected: Vec<(f64, f64)> = starts.iter().map(|&(th, x)| (th, frac(x))).collect();
    let up = Orbits::compute(cover, &starts, n).nested_greedy(eps);
    let down = Orbits::compute(Dynamics::Family(family), &projected, n).nested_greedy(eps);
    // centres project to a cover of the projected sample
    let mut centres: Vec<(u64, u64)> = up.iter().map(|&i| (projected[i].0.to_bits(), projected[i].1.to_bits())).collect();
    centres.sort_unstable();
    centres.dedup();
    let r_base = down.len().min(centres.len());
    Ok(CoverComparison {
        k,
        n,
        eps,
        samples: sample,
        r_cover: up.len(),
        r_base_greedy: down.len(),
        r_base,
        base_le_cover: r_base <= up.len(),
        cover_le_k_base: up.len() as f64 <= k as f64 * r_base as f64 * 1.1,
    })
}

/// Single-fibre map or cloud restriction for the growth check.
#[derive(Clone, Copy)]
pub enum GrowthSource<'a> {
    Fibre { map: &'a ForcedMonotoneMap, theta: f64 },
    Cloud(&'a MinimalSetCloud),
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct GrowthReport {
    pub eps: f64,
    pub horizons: Vec<usize>,
    pub counts: Vec<usize>,
    /// `S = a + b n`.
    pub linear: (f64, f64),
    /// Squared log-residual of the linear model.
    pub linear_rss: f64,
    /// `log S = c + r n`.
    pub exp_rate: f64,
    pub exp_rss: f64,
    pub linear_wins: bool,
    pub ok: bool,
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - b * mx, b)
}

/// Linear versus exponential fit of counts over `horizons`.
pub fn growth_fit(eps: f64, horizons: &[usize], counts: &[usize]) -> GrowthReport {
    let ns: Vec<f64> = horizons.iter().map(|&n| n as f64).collect();
    let s: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let logs: Vec<f64> = s.iter().map(|v| v.ln()).collect();
    let (c, r) = least_squares(&ns, &logs);
    let exp_rss: f64 = ns.iter().zip(&logs).map(|(n, l)| (l - c - r * n).powi(2)).sum();
    let (a, b) = least_squares(&ns, &s);
    let linear_rss: f64 = ns
        .iter()
        .zip(&logs)
        .map(|(n, l)| {
            let v = a + b * n;
            if v > 0.0 {
                (l - v.ln()).powi(2)
            } else {
                f64::INFINITY
            }
        })
        .sum();
    let linear_wins = linear_rss <= exp_rss;
    GrowthReport {
        eps,
        horizons: horizons.to_vec(),
        counts: counts.to_vec(),
        linear: (a, b),
        linear_rss,
        exp_rate: r,
        exp_rss,
        linear_wins,
        ok: linear_wins && r <= GROWTH_RATE_TOL,
    }
}

/// Separated-set growth along a ladder of horizons; report only.
pub fn monotone_entropy_check(source: GrowthSource<'_>, eps: f64, horizons: &[usize], sample: usize, seed: u64) -> Result<GrowthReport> {
    if horizons.len() < 4 || horizons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("growth check needs at least four increasing horizons"));
    }
    let top = *horizons.last().unwrap();
    check_counts_args(top, eps, sample)?;
    let counts = match source {
        GrowthSource::Fibre { map, theta } => {
            let dynamics = Dynamics::Forced(map);
            let starts = sample_starts(dynamics, Some(theta), sample, seed);
            let orbits = Orbits::compute(dynamics, &starts, top);
            horizons.iter().map(|&n| truncate(&orbits, n).nested_greedy(eps).len()).collect()
        }
        GrowthSource::Cloud(cloud) => {
            let idx = cloud_indices(cloud, top, sample)?;
            horizons
                .iter()
                .map(|&n| Orbits::from_cloud(&cloud.points, &idx, n).nested_greedy(eps).len())
                .collect::<Vec<_>>()
        }
    };
    Ok(growth_fit(eps, horizons, &counts))
}

fn truncate(o: &Orbits, n: usize) -> Orbits {
    let xs = (0..o.len()).flat_map(|i| o.row(i)[..=n].iter().copied()).collect();
    Orbits {
        theta: o.theta.clone(),
        xs,
        n,
        period: o.period,
    }
}

/// Numeric knobs for [`entropy_certificate`].
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CertificateOptions {
    pub n: usize,
    pub ensemble: usize,
    pub seed: u64,
    pub m: usize,
    pub burn_in: usize,
    pub cloud_len: usize,
    pub depth: usize,
    pub bins: usize,
    pub n_max: usize,
}

impl Default for CertificateOptions {
    fn default() -> Self {
        Self {
            n: 100_000,
            ensemble: 50,
            seed: 0,
            m: DEFAULT_GRID,
            burn_in: 10_000,
            cloud_len: 100_000,
            depth: 40,
            bins: 512,
            n_max: 5,
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct EntropyCertificate {
    pub rho1: f64,
    pub rho2: f64,
    pub epsilon: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub lower_bound: f64,
    pub itinerary_counts: Vec<usize>,
    pub theta_bin: usize,
    pub theta: f64,
    pub x1: f64,
    pub x2: f64,
    pub t1: f64,
    pub t2: f64,
    /// `F^N(x2) - F^N(x1)` on the lift.
    pub spread: f64,
    pub analytic_n: usize,
    pub analytic_ok: bool,
    pub itinerary_ok: bool,
}

/// `floor(10 / d) + 1`, the least `N` with `2 N (d / 4) > 5`.
pub fn analytic_horizon(delta_rho: f64) -> usize {
    (10.0 / delta_rho).floor() as usize + 1
}

/// Largest empirical horizon accepted against [`analytic_horizon`].
pub fn horizon_bound(delta_rho: f64) -> usize {
    (analytic_horizon(delta_rho) as f64 * (1.0 + HORIZON_SLACK)).floor() as usize + 1
}

fn bin_of(theta: f64, bins: usize) -> usize {
    ((theta * bins as f64) as usize).min(bins - 1)
}

/// Lower bound `log 2 / N` on the entropy from two minimal sets with
/// rotation numbers near `rho1_target < rho2_target`.
pub fn entropy_certificate(
    family: &FibreFamily,
    rho1_target: f64,
    rho2_target: f64,
    tol: f64,
    opts: &CertificateOptions,
) -> Result<EntropyCertificate> {
    if !(rho2_target - rho1_target >= 0.05) {
        return Err(invalid(format!(
            "rho targets {rho1_target} < {rho2_target} must differ by at least 0.05"
        )));
    }
    if opts.bins == 0 || opts.n_max > MAX_ITINERARY_DEPTH {
        return Err(invalid("certificate needs bins >= 1 and n_max <= 8"));
    }
    let interval = rotation_interval(family, opts.n, opts.ensemble, opts.seed, opts.m)?;
    if interval.length() <= tol {
        return Err(Error::CertificateFailure(format!(
            "rotation interval [{}, {}] is a point; the family is monotone",
            interval.lo, interval.hi
        )));
    }
    let search = |rho: f64| find_t_for_rho(family, rho, tol, opts.n, opts.ensemble, opts.seed, opts.m);
    let s1 = search(rho1_target)?;
    let s2 = search(rho2_target)?;
    let map1 = forced_map(family, s1.t, opts.m)?;
    let map2 = forced_map(family, s2.t, opts.m)?;
    let surv = deepest_survivor(&map1, 0.0, opts.depth)?;
    let cloud1 = omega_limit_cloud(&map1, &surv, opts.burn_in, opts.cloud_len, s1.achieved_rho)?;

    let bins = opts.bins;
    let mut hit = vec![false; bins];
    for p in &cloud1.points {
        hit[bin_of(p.theta, bins)] = true;
    }
    let theta_bin = hit
        .iter()
        .position(|h| *h)
        .ok_or_else(|| Error::NumericDegeneracy("empty cloud".into()))?;
    let centre = (theta_bin as f64 + 0.5) / bins as f64;
    let key = |p: &FibrePoint| (circle_dist(p.theta, centre, 1.0), p.x);
    let rep = cloud1
        .points
        .iter()
        .filter(|p| bin_of(p.theta, bins) == theta_bin)
        .min_by(|a, b| key(a).partial_cmp(&key(b)).unwrap())
        .copied()
        .unwrap();
    let theta = rep.theta;
    let x1 = rep.x;
    let y2 = fibre_representative(&map2, theta, opts.burn_in, opts.depth)?;
    // x2 - 1 < x1 < x2 on the lift
    let x2 = x1 + frac(y2 - x1);
    if x2 <= x1 {
        return Err(Error::NumericDegeneracy("representatives coincide".into()));
    }

    let mut u1 = x1;
    let mut u2 = x2;
    let mut th = theta;
    let mut horizon = None;
    for n in 1..=HORIZON_CAP {
        u1 = family.eval(th, u1);
        u2 = family.eval(th, u2);
        th = frac(th + family.omega);
        if u2 - u1 > COVER_DEGREE as f64 {
            horizon = Some(n);
            break;
        }
    }
    let Some(n) = horizon else {
        return Err(Error::CertificateFailure(format!(
            "spread never exceeds {COVER_DEGREE} within {HORIZON_CAP} steps"
        )));
    };
    let rho1 = s1.achieved_rho;
    let rho2 = s2.achieved_rho;
    let analytic_n = analytic_horizon(rho2 - rho1);
    let mut cert = EntropyCertificate {
        rho1,
        rho2,
        epsilon: 0.25 * (rho2 - rho1),
        n,
        lower_bound: std::f64::consts::LN_2 / n as f64,
        itinerary_counts: Vec::new(),
        theta_bin,
        theta,
        x1,
        x2,
        t1: s1.t,
        t2: s2.t,
        spread: u2 - u1,
        analytic_n,
        analytic_ok: n <= horizon_bound(rho2 - rho1),
        itinerary_ok: false,
    };
    cert.itinerary_counts = itinerary_count(&cert, family, opts.n_max)?;
    cert.itinerary_ok = cert
        .itinerary_counts
        .iter()
        .enumerate()
        .all(|(k, &c)| c == 1 << (k + 1));
    Ok(cert)
}

/// Closed intervals on the lift, sorted and disjoint.
pub type Intervals = Vec<(f64, f64)>;

/// `f^N` on the cover starting from one fibre, split into monotone pieces
/// over `[lo, lo + 1]`.
struct Block<'a> {
    family: &'a FibreFamily,
    theta: f64,
    n: usize,
    pieces: Vec<Piece>,
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    ga: f64,
    gb: f64,
}

impl<'a> Block<'a> {
    fn eval(&self, x: f64) -> f64 {
        let mut x = x;
        let mut th = self.theta;
        for _ in 0..self.n {
            x = self.family.eval(th, x);
            th = frac(th + self.family.omega);
        }
        x
    }

    fn new(family: &'a FibreFamily, theta: f64, n: usize, lo: f64) -> Self {
        let mut block = Self {
            family,
            theta,
            n,
            pieces: Vec::new(),
        };
        let s = SEGMENT_SAMPLES;
        let xs: Vec<f64> = (0..=s).map(|j| lo + j as f64 / s as f64).collect();
        let gs: Vec<f64> = xs.par_iter().map(|&x| block.eval(x)).collect();
        let mut start = 0;
        let mut dir = 0i8;
        for j in 1..=s {
            let d = (gs[j] - gs[j - 1]).partial_cmp(&0.0).map_or(0, |o| o as i8);
            if d != 0 && dir != 0 && d != dir {
                block.pieces.push(Piece {
                    a: xs[start],
                    b: xs[j - 1],
                    ga: gs[start],
                    gb: gs[j - 1],
                });
                start = j - 1;
            }
            if d != 0 {
                dir = d;
            }
        }
        block.pieces.push(Piece {
            a: xs[start],
            b: xs[s],
            ga: gs[start],
            gb: gs[s],
        });
        block
    }

    fn spread(&self) -> f64 {
        let hi = self.pieces.iter().map(|p| p.ga.max(p.gb)).fold(f64::NEG_INFINITY, f64::max);
        let lo = self.pieces.iter().map(|p| p.ga.min(p.gb)).fold(f64::INFINITY, f64::min);
        hi - lo
    }

    /// Point of `piece` where `f^N` crosses `y`.
    fn solve(&self, p: &Piece, y: f64) -> f64 {
        let up = p.gb >= p.ga;
        let (mut a, mut b) = (p.a, p.b);
        loop {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if (self.eval(mid) < y) == up {
                a = mid;
            } else {
                b = mid;
            }
        }
        if up {
            b
        } else {
            a
        }
    }

    /// `{ x in [lo, lo + 1] : f^N(x) mod k in target }` for `target` in `[0, k)`.
    fn preimage(&self, target: &Intervals, k: f64) -> Intervals {
        let mut out = Vec::new();
        for p in &self.pieces {
            let (gmin, gmax) = (p.ga.min(p.gb), p.ga.max(p.gb));
            let j0 = ((gmin - k) / k).floor() as i64;
            let j1 = (gmax / k).ceil() as i64;
            for j in j0..=j1 {
                let shift = j as f64 * k;
                for &(a, b) in target {
                    let ya = (a + shift).max(gmin);
                    let yb = (b + shift).min(gmax);
                    if yb <= ya {
                        continue;
                    }
                    let (u, v) = (self.solve(p, ya), self.solve(p, yb));
                    let (u, v) = if u <= v { (u, v) } else { (v, u) };
                    if v > u {
                        out.push((u, v));
                    }
                }
            }
        }
        merge(out)
    }
}

/// Keeps the [`KEPT_COMPONENTS`] longest components. A subset of `I^n_sigma`
/// still certifies that it is non-empty, and the component count otherwise
/// grows geometrically with the nesting depth.
fn largest(mut v: Intervals) -> Intervals {
    if v.len() > KEPT_COMPONENTS {
        v.sort_by(|a, b| (b.1 - b.0).partial_cmp(&(a.1 - a.0)).unwrap().then(a.0.partial_cmp(&b.0).unwrap()));
        v.truncate(KEPT_COMPONENTS);
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
    v
}

fn merge(mut v: Intervals) -> Intervals {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out: Intervals = Vec::with_capacity(v.len());
    for (a, b) in v {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

/// The two symbols used by the itinerary coding: `I_1 = [0, 1]`, `I_3 = [2, 3]`.
pub const SYMBOLS: [usize; 2] = [1, 3];

fn symbol_interval(i: usize) -> (f64, f64) {
    ((i - 1) as f64, i as f64)
}

/// Non-empty `I^n_sigma` for `sigma` in `{1, 3}^{n+1}` as `(sigma, set)` pairs.
///
/// `I^n_sigma` holds the points of the fibre over `theta` whose `k`-th block
/// iterate lies in `I_{sigma_k}`; suffix sets are pulled back one block at a time
/// and only their longest components are kept, so each returned set is a
/// non-empty subset of `I^n_sigma`.
pub fn itinerary_sets(cert: &EntropyCertificate, family: &FibreFamily, n: usize) -> Result<Vec<(Vec<usize>, Intervals)>> {
    let k = COVER_DEGREE as f64;
    let blocks = itinerary_blocks(cert, family, n)?;
    // suffixes for positions k..=n, keyed by symbol sequence
    let mut level: Vec<(Vec<usize>, Intervals)> = SYMBOLS
        .iter()
        .map(|&s| (vec![s], vec![symbol_interval(s)]))
        .collect();
    for pos in (0..n).rev() {
        let mut next = Vec::with_capacity(level.len() * 2);
        for &s in &SYMBOLS {
            let block = &blocks[pos][if s == 1 { 0 } else { 1 }];
            for (suffix, set) in &level {
                let pre = if set.is_empty() { Vec::new() } else { largest(block.preimage(set, k)) };
                let mut sigma = Vec::with_capacity(suffix.len() + 1);
                sigma.push(s);
                sigma.extend_from_slice(suffix);
                next.push((sigma, pre));
            }
        }
        level = next;
    }
    level.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(level.into_iter().filter(|(_, set)| !set.is_empty()).collect())
}

/// Blocks `f^N` over `theta + i N omega` on `I_1` and `I_3`, after checking
/// that every `I_j` is stretched across the cover at each position.
fn itinerary_blocks<'a>(cert: &EntropyCertificate, family: &'a FibreFamily, n: usize) -> Result<Vec<[Block<'a>; 2]>> {
    if n > MAX_ITINERARY_DEPTH {
        return Err(invalid(format!("itinerary depth {n} above {MAX_ITINERARY_DEPTH}")));
    }
    if cert.n == 0 {
        return Err(invalid("certificate horizon is zero"));
    }
    let k = COVER_DEGREE as f64;
    let mut out = Vec::with_capacity(n);
    for pos in 0..=n {
        let th = frac(cert.theta + (pos * cert.n) as f64 * family.omega);
        for j in 1..=COVER_DEGREE {
            let b = Block::new(family, th, cert.n, (j - 1) as f64);
            if b.spread() <= k {
                return Err(Error::InconsistentCertificate(format!(
                    "f^{} over theta = {th} stretches I_{j} by {} <= {k}",
                    cert.n,
                    b.spread()
                )));
            }
        }
        if pos < n {
            out.push(SYMBOLS.map(|s| Block::new(family, th, cert.n, symbol_interval(s).0)));
        }
    }
    Ok(out)
}

/// Number of non-empty `I^n_sigma` for `n = 0..=n_max`.
pub fn itinerary_count(cert: &EntropyCertificate, family: &FibreFamily, n_max: usize) -> Result<Vec<usize>> {
    (0..=n_max)
        .map(|n| itinerary_sets(cert, family, n).map(|s| s.len()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rigid(tau: f64) -> FibreFamily {
        FibreFamily::arnold(tau, 0.0, 0.0, GOLDEN_MEAN).unwrap()
    }

    #[test]
    fn metric_of_isometries() {
        let f = rigid(0.3);
        let a = FibrePoint { theta: 0.1, x: 0.2 };
        let b = FibrePoint { theta: 0.15, x: 0.65 };
        let d0 = circle_dist(0.2, 0.65, 1.0).max(0.05);
        for n in [0, 1, 10, 100] {
            assert!((orbit_metric(a, b, n, &f) - d0).abs() < 1e-12);
        }
        let g = FibreFamily::arnold(0.3, 2.0, 0.4, GOLDEN_MEAN).unwrap();
        assert!((orbit_metric(a, b, 0, &g) - d0).abs() < 1e-15);
        assert!(orbit_metric(a, b, 5, &g) >= orbit_metric(a, b, 2, &g));
    }

    #[test]
    fn identity_fibre_separates_three_points() {
        let f = FibreFamily::arnold(0.0, 0.0, 0.0, GOLDEN_MEAN).unwrap();
        for n in [0, 5, 20] {
            let c = separation_counts(Dynamics::Family(&f), Some(0.3), n, 0.3, 500, 1).unwrap();
            assert_eq!(c.s_lower, 3);
            assert!(c.r_upper >= c.s_lower);
        }
    }

    #[test]
    fn counts_are_monotone_in_eps() {
        let f = FibreFamily::arnold(0.1, 2.5 * PI, 0.7, GOLDEN_MEAN).unwrap();
        for n in [1, 3] {
            let mut prev = 0;
            for eps in [0.4, 0.2, 0.1, 0.05] {
                let c = separation_counts(Dynamics::Family(&f), None, n, eps, 3000, 7).unwrap();
                assert!(c.s_lower >= prev, "n {n} eps {eps}");
                prev = c.s_lower;
            }
        }
    }

    #[test]
    fn greedy_matches_brute_force_definition() {
        let f = FibreFamily::arnold(0.2, 1.5, 0.5, GOLDEN_MEAN).unwrap();
        let starts = sample_starts(Dynamics::Family(&f), None, 400, 3);
        let n = 3;
        let eps = 0.1;
        let set = Orbits::compute(Dynamics::Family(&f), &starts, n).nested_greedy(eps);
        let pt = |i: usize| FibrePoint {
            theta: starts[i].0,
            x: starts[i].1,
        };
        for (a, &i) in set.iter().enumerate() {
            for &j in &set[a + 1..] {
                assert!(orbit_metric(pt(i), pt(j), n, &f) >= eps);
            }
        }
        // maximality: every sample point is eps-close to a chosen one
        for i in 0..starts.len() {
            assert!(set.iter().any(|&c| orbit_metric(pt(i), pt(c), n, &f) < eps) || set.contains(&i));
        }
    }

    #[test]
    fn cover_lift_examples() {
        let r = cover_lift(&rigid(0.25), 4).unwrap();
        assert!((r.eval(0.3, 3.9) - 0.15).abs() < 1e-12);
        let f = FibreFamily::arnold(0.1, 2.5 * PI, 0.7, GOLDEN_MEAN).unwrap();
        let one = cover_lift(&f, 1).unwrap();
        let four = cover_lift(&f, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let th: f64 = rng.gen();
            let x: f64 = rng.gen_range(0.0..4.0);
            let down = frac(f.eval(th, four.project(x)));
            assert!(circle_dist(four.project(four.eval(th, x)), down, 1.0) < 1e-9);
            let y: f64 = rng.gen();
            assert!(circle_dist(one.eval(th, y), frac(f.eval(th, y)), 1.0) < 1e-12);
        }
        assert!(cover_lift(&f, 0).is_err());
    }

    #[test]
    fn growth_fit_discriminates() {
        let h = [10, 20, 40, 80];
        let lin = growth_fit(0.1, &h, &[11, 21, 41, 81]);
        assert!(lin.linear_wins);
        let exp = growth_fit(0.1, &h, &[3, 9, 81, 6561]);
        assert!(!exp.linear_wins && !exp.ok);
        assert!((exp.exp_rate - 9f64.ln() / 20.0).abs() < 0.05);
        let flat = growth_fit(0.1, &h, &[7, 7, 7, 7]);
        assert!(flat.ok && flat.exp_rate == 0.0);
    }

    #[test]
    fn rigid_fibre_counts_are_constant() {
        let f = rigid(0.3);
        let map = forced_map(&f, 0.5, 1 << 10).unwrap();
        let r = monotone_entropy_check(GrowthSource::Fibre { map: &map, theta: 0.2 }, 0.05, &[10, 20, 40, 80], 2000, 0).unwrap();
        assert!(r.counts.iter().all(|&c| c == r.counts[0]), "{:?}", r.counts);
        assert!(r.ok);
    }

    #[test]
    fn horizons_from_the_spread_inequality() {
        assert_eq!(analytic_horizon(1.0), 11);
        assert_eq!(analytic_horizon(0.5), 21);
        assert_eq!(horizon_bound(1.0), 14);
        assert!((std::f64::consts::LN_2 / 11.0 - 0.0630).abs() < 1e-4);
        assert!((std::f64::consts::LN_2 / 21.0 - 0.0330).abs() < 1e-4);
    }

    #[test]
    fn merge_joins_overlaps() {
        assert_eq!(merge(vec![(0.5, 0.7), (0.0, 0.2), (0.1, 0.3)]), vec![(0.0, 0.3), (0.5, 0.7)]);
    }

    /// Strongly expanding unforced fibres: every block stretches `I_j` across
    /// the cover, so all itineraries occur.
    #[test]
    fn itineraries_of_an_expanding_map() {
        let f = FibreFamily::arnold(0.0, 8.0, 0.0, GOLDEN_MEAN).unwrap();
        let cert = EntropyCertificate {
            rho1: 0.0,
            rho2: 1.0,
            epsilon: 0.25,
            n: 3,
            lower_bound: std::f64::consts::LN_2 / 3.0,
            itinerary_counts: vec![],
            theta_bin: 0,
            theta: 0.0,
            x1: 0.0,
            x2: 0.5,
            t1: 0.0,
            t2: 1.0,
            spread: 5.0,
            analytic_n: 11,
            analytic_ok: true,
            itinerary_ok: false,
        };
        let counts = itinerary_count(&cert, &f, 3).unwrap();
        assert_eq!(counts, vec![2, 4, 8, 16]);
    }

    #[test]
    fn monotone_family_has_no_certificate() {
        let f = FibreFamily::arnold(0.3, 0.8, 0.5, GOLDEN_MEAN).unwrap();
        let opts = CertificateOptions {
            n: 2000,
            ensemble: 8,
            m: 1 << 12,
            ..Default::default()
        };
        assert!(matches!(
            entropy_certificate(&f, 0.2, 0.4, 1e-4, &opts),
            Err(Error::CertificateFailure(_))
        ));
    }
}
