//! Plateau maps: the envelopes `G-`/`G+`, the homotopy `G_t = (Phi_t)-`
//! joining them, plateau detection and the forced maps `F_t`.

use crate::circle::{
    check_monotone, frac, sliding_extremum, Extremum, FibreFamily, FibreLift, GridFunction, IntervalSetMod1, EPS,
};
use crate::error::{invalid, Error, Result};

/// Default fibre grid size.
pub const DEFAULT_GRID: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeSign {
    Plus,
    Minus,
}

/// `G+(x) = sup_{[x-1, x]} G` or `G-(x) = inf_{[x, x+1]} G` on the grid.
pub fn envelope(g: &GridFunction, sign: EnvelopeSign) -> Result<GridFunction> {
    match sign {
        EnvelopeSign::Plus => sliding_extremum(g, 1.0, Extremum::SupTrailing),
        EnvelopeSign::Minus => sliding_extremum(g, 1.0, Extremum::InfLeading),
    }
}

#[derive(Debug, Clone)]
pub struct EnvelopePair {
    pub minus: GridFunction,
    pub plus: GridFunction,
    pub source: GridFunction,
}

impl EnvelopePair {
    pub fn new(source: &GridFunction) -> Result<Self> {
        Ok(Self {
            minus: envelope(source, EnvelopeSign::Minus)?,
            plus: envelope(source, EnvelopeSign::Plus)?,
            source: source.clone(),
        })
    }
}

fn check_t(t: f64) -> Result<()> {
    if !t.is_finite() || !(0.0..=1.0).contains(&t) {
        return Err(invalid(format!("homotopy parameter t = {t} outside [0, 1]")));
    }
    Ok(())
}

/// `Phi_t(x) = sup_{[x-t, x]} G`.
pub fn phi_t(g: &GridFunction, t: f64) -> Result<GridFunction> {
    check_t(t)?;
    sliding_extremum(g, t, Extremum::SupTrailing)
}

pub fn default_plateau_tol(lipschitz: f64, m: usize) -> f64 {
    let m = m as f64;
    (4.0 * lipschitz / (m * m)).max(1e-8)
}

/// Grid runs `i0..=i1` (lifted indices, `0 <= i0 < m`) on which `g` rises by
/// at most `tol`; `None` when the whole period is flat.
fn plateau_runs(g: &GridFunction, tol: f64) -> Result<Option<Vec<(i64, i64)>>> {
    let (at, dec) = g.max_decrease();
    if dec > EPS {
        return Err(Error::NotMonotone {
            at: at as f64 / g.m() as f64,
            decrease: dec,
        });
    }
    let m = g.m() as i64;
    let flat = |j: i64| g.at(j + 1) - g.at(j) <= tol;
    // start scanning just after a rising cell so no run is cut by the seam
    let Some(rise) = (0..m).find(|&j| !flat(j)) else {
        return Ok(None);
    };
    let mut runs = Vec::new();
    let mut j = rise + 1;
    let end = rise + 1 + m;
    while j < end {
        if !flat(j) {
            j += 1;
            continue;
        }
        let i0 = j;
        let base = g.at(i0);
        while j < end && flat(j) && g.at(j + 1) - base <= tol {
            j += 1;
        }
        let i1 = j;
        let shift = i0.div_euclid(m) * m;
        runs.push((i0 - shift, i1 - shift));
    }
    runs.sort_unstable();
    Ok(Some(runs))
}

/// Projection to the circle of the maximal grid runs with total rise at most
/// `tol`, as arcs `[i0/m, i1/m)`.
pub fn detect_plateaus(g_t: &GridFunction, tol: f64) -> Result<IntervalSetMod1> {
    let m = g_t.m() as f64;
    match plateau_runs(g_t, tol)? {
        None => Ok(IntervalSetMod1::full()),
        Some(runs) => {
            let pairs: Vec<(f64, f64)> = runs.iter().map(|&(a, b)| (a as f64 / m, b as f64 / m)).collect();
            IntervalSetMod1::from_pairs(&pairs)
        }
    }
}

/// One plateau `[start, end]` on the lift, `0 <= start < 1`, at height `level`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateauPiece {
    pub start: f64,
    pub end: f64,
    pub level: f64,
}

impl PlateauPiece {
    fn shifted(self, k: f64) -> Self {
        Self {
            start: self.start + k,
            end: self.end + k,
            level: self.level + k,
        }
    }
}

/// The plateau map `G_t` of one fibre.
///
/// Grid samples of `Phi_t` and `G_t` are kept alongside a continuous
/// evaluator: on each detected plateau it returns the plateau level, elsewhere
/// the source lift itself, clamped between the neighbouring levels. Plateau
/// edges are solved from `G(x) = level` inside the adjacent grid cell.
#[derive(Debug, Clone)]
pub struct HomotopyMap {
    pub t: f64,
    pub g_t: GridFunction,
    pub phi_t: GridFunction,
    pub plateaus: IntervalSetMod1,
    pub theta: Option<f64>,
    pieces: Vec<PlateauPiece>,
    source: FibreLift,
    shift: f64,
}

fn solve_edge(s: &FibreLift, level: f64, mut lo: f64, mut hi: f64, rising_at_hi: bool) -> f64 {
    // left edge: smallest x with s >= level; right edge: largest x with s <= level
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let above = if rising_at_hi { s.eval(mid) >= level } else { s.eval(mid) > level };
        if above {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 {
            break;
        }
    }
    if rising_at_hi {
        hi
    } else {
        lo
    }
}

impl HomotopyMap {
    /// Homotopy map of an exact lift sampled on `m` points.
    pub fn from_lift(source: FibreLift, m: usize, lipschitz: f64, t: f64) -> Result<Self> {
        let g = GridFunction::sample_lift(m, lipschitz, |x| source.eval(x))?;
        Self::build(source, &g, t, default_plateau_tol(lipschitz, m))
    }

    fn build(source: FibreLift, g: &GridFunction, t: f64, tol: f64) -> Result<Self> {
        let phi = phi_t(g, t)?;
        let g_t = sliding_extremum(&phi, 1.0, Extremum::InfLeading)?;
        let m = g.m() as i64;
        let h = 1.0 / m as f64;
        let runs = plateau_runs(&g_t, tol)?.ok_or_else(|| {
            Error::NumericDegeneracy("plateau map is constant over a whole period".into())
        })?;
        let mut pieces = Vec::with_capacity(runs.len());
        let mut pairs = Vec::with_capacity(runs.len());
        for &(i0, i1) in &runs {
            let level = g_t.at(i1);
            let (a, b) = (i0 as f64 * h, i1 as f64 * h);
            pairs.push((a, b));
            let start = if source.eval(a) >= level {
                solve_edge(&source, level, a - h, a, true)
            } else {
                a
            };
            let end = if source.eval(b) <= level {
                solve_edge(&source, level, b, b + h, false)
            } else {
                b
            };
            let p = PlateauPiece { start, end, level };
            pieces.push(if start < 0.0 { p.shifted(1.0) } else { p });
        }
        pieces.sort_by(|a, b| a.start.total_cmp(&b.start));
        Ok(Self {
            t,
            plateaus: IntervalSetMod1::from_pairs(&pairs)?,
            g_t,
            phi_t: phi,
            theta: None,
            pieces,
            source,
            shift: 0.0,
        })
    }

    pub fn m(&self) -> usize {
        self.g_t.m()
    }

    pub fn pieces(&self) -> &[PlateauPiece] {
        &self.pieces
    }

    /// Open plateau interiors reduced mod 1, with refined edges.
    pub fn plateau_interiors(&self) -> IntervalSetMod1 {
        let pairs: Vec<(f64, f64)> = self
            .pieces
            .iter()
            .filter(|p| p.end > p.start)
            .map(|p| (p.start, p.end.min(p.start + 1.0)))
            .collect();
        IntervalSetMod1::from_pairs(&pairs).unwrap_or_default()
    }

    /// Closed-arc membership of `x mod 1` in a detected grid plateau.
    pub fn in_grid_plateau(&self, x: f64) -> bool {
        let u = frac(x);
        let slack = 1e-12;
        self.plateaus.contains(u)
            || self
                .plateaus
                .arcs()
                .iter()
                .any(|a| (u - a.end).abs() <= slack || (a.end >= 1.0 && u <= slack))
    }

    /// Level of the plateau containing `x` on the lift, if any.
    pub fn plateau_level(&self, x: f64) -> Option<f64> {
        let (cand, _, k) = self.locate(x)?;
        let u = x - k;
        (u >= cand.start && u <= cand.end).then_some(cand.level + k + self.shift)
    }

    /// The piece starting at or before `x mod 1`, the one after it, and `floor(x)`.
    #[inline]
    fn locate(&self, x: f64) -> Option<(PlateauPiece, PlateauPiece, f64)> {
        let n = self.pieces.len();
        if n == 0 {
            return None;
        }
        let k = x.floor();
        let u = x - k;
        let idx = self.pieces.partition_point(|p| p.start <= u);
        let cand = if idx > 0 {
            self.pieces[idx - 1]
        } else {
            self.pieces[n - 1].shifted(-1.0)
        };
        let next = if idx < n {
            self.pieces[idx]
        } else {
            self.pieces[0].shifted(1.0)
        };
        Some((cand, next, k))
    }

    /// `G_t(x)` on the lift.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let Some((cand, next, k)) = self.locate(x) else {
            return self.source.eval(x) + self.shift;
        };
        let u = x - k;
        if u <= cand.end {
            return cand.level + k + self.shift;
        }
        let s = self.source.eval(x);
        let (lo, hi) = (cand.level + k, next.level + k);
        let v = if s < lo {
            lo
        } else if s > hi {
            hi
        } else {
            s
        };
        v + self.shift
    }

    /// The same map followed by the vertical translation `c`.
    pub fn translated(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.shift += c;
        out.g_t = self.g_t.with_values(self.g_t.values().iter().map(|v| v + c).collect());
        out.phi_t = self.phi_t.with_values(self.phi_t.values().iter().map(|v| v + c).collect());
        out
    }
}

/// `G_t` of the interpolant of `g`.
pub fn homotopy_map(g: &GridFunction, t: f64) -> Result<HomotopyMap> {
    HomotopyMap::build(
        FibreLift::Samples(g.clone()),
        g,
        t,
        default_plateau_tol(g.lipschitz(), g.m()),
    )
}

/// The forced plateau map `F_t` with fibres `(F_theta)_t`.
///
/// For the Arnold family `F_{t,theta} = G_t + beta sin(2 pi theta)`, so one
/// unforced `G_t` is shared by all fibres. Tabulated families rebuild the
/// fibre for every `theta`, at `O(m)` per evaluation.
#[derive(Debug, Clone)]
pub struct ForcedMonotoneMap {
    pub family: FibreFamily,
    pub t: f64,
    pub m: usize,
    shared: Option<HomotopyMap>,
}

pub fn forced_map(family: &FibreFamily, t: f64, m: usize) -> Result<ForcedMonotoneMap> {
    check_t(t)?;
    if m < 4 {
        return Err(invalid(format!("grid size {m} too small")));
    }
    let shared = match family.unforced_lift() {
        Some(lift) => Some(HomotopyMap::from_lift(lift, m, family.lipschitz, t)?),
        None => None,
    };
    Ok(ForcedMonotoneMap {
        family: family.clone(),
        t,
        m,
        shared,
    })
}

impl ForcedMonotoneMap {
    /// The shared unforced `G_t` (Arnold family only).
    pub fn unforced(&self) -> Option<&HomotopyMap> {
        self.shared.as_ref()
    }

    pub fn fibre(&self, theta: f64) -> Result<HomotopyMap> {
        let mut h = match &self.shared {
            Some(g) => g.translated(self.family.forcing(theta)),
            None => HomotopyMap::from_lift(self.family.fibre_lift(theta), self.m, self.family.lipschitz, self.t)?,
        };
        h.theta = Some(frac(theta));
        Ok(h)
    }

    /// `F_{t,theta}(x)` on the lift.
    #[inline]
    pub fn eval(&self, theta: f64, x: f64) -> f64 {
        match &self.shared {
            Some(g) => g.eval(x) + self.family.forcing(theta),
            None => self.fibre(theta).map(|h| h.eval(x)).unwrap_or(f64::NAN),
        }
    }

    /// Evaluator of one fibre; tabulated fibres are built once here rather
    /// than on every call of [`Self::eval`].
    pub fn fibre_fn(&self, theta: f64) -> Result<Box<dyn Fn(f64) -> f64 + Send + Sync + '_>> {
        Ok(match &self.shared {
            Some(g) => {
                let c = self.family.forcing(theta);
                Box::new(move |x| g.eval(x) + c)
            }
            None => {
                let h = self.fibre(theta)?;
                Box::new(move |x| h.eval(x))
            }
        })
    }

    /// Plateau interiors `U(F_{t,theta})` mod 1.
    pub fn plateaus(&self, theta: f64) -> Result<IntervalSetMod1> {
        match &self.shared {
            Some(g) => Ok(g.plateau_interiors()),
            None => Ok(self.fibre(theta)?.plateau_interiors()),
        }
    }

    /// Sampled monotonicity of the fibre at `theta`.
    pub fn check_fibre(&self, theta: f64) -> Result<()> {
        check_monotone(&|x| self.eval(theta, x), 4096, 1e-6)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::{grid::oracle::naive_extremum, GOLDEN_MEAN};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{PI, TAU};

    fn std_map(alpha: f64) -> impl Fn(f64) -> f64 {
        move |x: f64| x + alpha / TAU * (TAU * x).sin()
    }

    fn arnold_grid(tau: f64, alpha: f64, m: usize) -> GridFunction {
        GridFunction::sample_lift(m, 1.0 + alpha, |x| x + tau + alpha / TAU * (TAU * x).sin()).unwrap()
    }

    fn dense_sup(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        (0..=n).map(|i| f(a + (b - a) * i as f64 / n as f64)).fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn rigid_lift_envelopes_are_the_lift() {
        let g = GridFunction::sample_lift(64, 1.0, |x| x + 0.3).unwrap();
        for s in [EnvelopeSign::Plus, EnvelopeSign::Minus] {
            assert_eq!(envelope(&g, s).unwrap(), g);
        }
        assert!((envelope(&g, EnvelopeSign::Plus).unwrap().interp(0.5) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn arnold_envelope_values() {
        let m = DEFAULT_GRID;
        let g = arnold_grid(0.0, 2.0, m);
        let f = std_map(2.0);
        let plus_closed = 1.0 / 3.0 + 3f64.sqrt() / TAU;
        let minus_closed = 2.0 / 3.0 - 3f64.sqrt() / TAU;
        // closed forms against a dense scan
        assert!((dense_sup(&f, 2.0 / 3.0 - 1.0, 2.0 / 3.0, 1_000_000) - plus_closed).abs() < 1e-9);
        assert!((-dense_sup(|x| -f(x), 1.0 / 3.0, 4.0 / 3.0, 1_000_000) - minus_closed).abs() < 1e-9);
        let bound = 3.0 / m as f64;
        let plus = envelope(&g, EnvelopeSign::Plus).unwrap();
        let minus = envelope(&g, EnvelopeSign::Minus).unwrap();
        assert!((plus.interp(2.0 / 3.0) - plus_closed).abs() < bound);
        assert!((minus.interp(1.0 / 3.0) - minus_closed).abs() < bound);
        assert!((plus_closed - 0.608997).abs() < 1e-6 && (minus_closed - 0.391003).abs() < 1e-6);
    }

    #[test]
    fn phi_endpoints_and_midpoint() {
        let m = 4096;
        let g = arnold_grid(0.0, 2.0, m);
        assert_eq!(phi_t(&g, 0.0).unwrap(), g);
        assert_eq!(phi_t(&g, 1.0).unwrap(), envelope(&g, EnvelopeSign::Plus).unwrap());
        let half = phi_t(&g, 0.5).unwrap();
        let naive = naive_extremum(&g, 0.5, Extremum::SupTrailing);
        assert_eq!(half.values(), naive.as_slice());
        // continuum value: sup over [0, 1/2] of the lift, attained at 1/3
        let want = dense_sup(std_map(2.0), 0.0, 0.5, 1_000_000);
        assert!((half.values()[m / 2] - want).abs() <= g.extremum_error_bound());
        assert!(phi_t(&g, 1.1).is_err());
    }

    #[test]
    fn homotopy_endpoints() {
        let g = arnold_grid(0.4, 2.7, 2048);
        let h0 = homotopy_map(&g, 0.0).unwrap();
        let h1 = homotopy_map(&g, 1.0).unwrap();
        assert_eq!(h0.g_t, envelope(&g, EnvelopeSign::Minus).unwrap());
        assert_eq!(h1.g_t, envelope(&g, EnvelopeSign::Plus).unwrap());
    }

    #[test]
    fn injective_lift_has_no_plateaus() {
        let g = GridFunction::sample_lift(1024, 1.5, |x| x + 0.2 + 0.05 * (TAU * x).sin()).unwrap();
        for t in [0.0, 0.3, 1.0] {
            let h = homotopy_map(&g, t).unwrap();
            assert_eq!(h.g_t, g);
            assert!(h.plateaus.is_empty());
            assert!(h.pieces().is_empty());
        }
        let rigid = GridFunction::sample_lift(1024, 1.0, |x| x + 0.37).unwrap();
        assert!(detect_plateaus(&rigid, default_plateau_tol(1.0, 1024)).unwrap().is_empty());
    }

    #[test]
    fn step_constant_run_is_detected_exactly() {
        let m = 20;
        let vals: Vec<f64> = (0..m)
            .map(|i| {
                let x = i as f64 / m as f64;
                1.25 * x.min(0.2) + 1.25 * (x - 0.4).max(0.0)
            })
            .collect();
        let g = GridFunction::new(vals, 1.25, 1).unwrap();
        let p = detect_plateaus(&g, 1e-8).unwrap();
        assert_eq!(p.arcs().len(), 1);
        assert!((p.arcs()[0].start - 0.2).abs() < 1e-15 && (p.arcs()[0].end - 0.4).abs() < 1e-15);
    }

    #[test]
    fn non_monotone_input_is_rejected() {
        let g = arnold_grid(0.0, 2.0, 256);
        assert!(matches!(detect_plateaus(&g, 1e-8), Err(Error::NotMonotone { .. })));
    }

    #[test]
    fn upper_envelope_plateau_of_alpha_two() {
        let m = DEFAULT_GRID;
        let g = arnold_grid(0.0, 2.0, m);
        let f = std_map(2.0);
        let c = f(1.0 / 3.0);
        let (mut lo, mut hi) = (0.85, 0.86);
        assert!(f(lo) < c && f(hi) > c);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < c {
                lo = mid
            } else {
                hi = mid
            }
        }
        assert!((lo - 0.8574).abs() < 1e-4);
        let h = HomotopyMap::from_lift(FibreLift::Arnold { tau: 0.0, alpha: 2.0, shift: 0.0 }, m, 3.0, 1.0).unwrap();
        let arcs = h.plateaus.arcs();
        assert_eq!(arcs.len(), 1);
        let cell = 1.0 / m as f64;
        assert!((arcs[0].start - 1.0 / 3.0).abs() <= 2.0 * cell, "{arcs:?}");
        assert!((arcs[0].end - lo).abs() <= 2.0 * cell, "{arcs:?}");
        let piece = h.pieces()[0];
        assert!((piece.start - 1.0 / 3.0).abs() < 2.0 * cell && (piece.end - lo).abs() < 1e-8, "{piece:?} {lo}");
        let _ = g;
    }

    #[test]
    fn random_draws_satisfy_homotopy_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = 2048;
        for _ in 0..6 {
            let tau: f64 = rng.gen();
            let alpha = rng.gen_range(1.2..3.0);
            let g = arnold_grid(tau, alpha, m);
            let env = EnvelopePair::new(&g).unwrap();
            assert_eq!(envelope(&env.plus, EnvelopeSign::Plus).unwrap(), env.plus);
            assert_eq!(envelope(&env.minus, EnvelopeSign::Minus).unwrap(), env.minus);
            let mut prev: Option<GridFunction> = None;
            for k in 0..=16 {
                let t = k as f64 / 16.0;
                let h = homotopy_map(&g, t).unwrap();
                assert_eq!(h.g_t, envelope(&h.phi_t, EnvelopeSign::Minus).unwrap());
                assert!(h.g_t.max_decrease().1 <= 1e-9);
                for i in 0..m {
                    assert!(h.g_t.values()[i] <= h.phi_t.values()[i]);
                    assert!(env.minus.values()[i] <= g.values()[i] && g.values()[i] <= env.plus.values()[i]);
                    if (h.g_t.values()[i] - g.values()[i]).abs() > 1e-6 {
                        assert!(h.in_grid_plateau(i as f64 / m as f64), "t={t} i={i}");
                    }
                }
                if let Some(p) = prev {
                    for i in 0..m {
                        assert!(h.g_t.values()[i] >= p.values()[i] - 1e-9);
                    }
                }
                prev = Some(h.g_t.clone());
            }
        }
    }

    #[test]
    fn evaluator_tracks_source_off_plateaus_and_grid_everywhere() {
        let fam = FibreFamily::arnold(0.2, 1.5, 1.5, GOLDEN_MEAN).unwrap();
        let fm = forced_map(&fam, 0.3, 4096).unwrap();
        let h = fm.unforced().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut prev = f64::NEG_INFINITY;
        for i in 0..20_000 {
            let x = -1.0 + 3.0 * i as f64 / 20_000.0;
            let v = h.eval(x);
            assert!(v >= prev - 1e-6, "x={x}");
            prev = v;
        }
        for _ in 0..2000 {
            let th: f64 = rng.gen();
            let x: f64 = rng.gen_range(-2.0..2.0);
            let v = fm.eval(th, x);
            assert!((v - h.g_t.interp(x) - fam.forcing(th)).abs() <= fam.lipschitz / 4096.0);
            if h.plateau_level(x).is_none() {
                let clamped = h.pieces().iter().any(|p| {
                    let s = fam.eval(0.0, x) - fam.forcing(0.0);
                    (s - p.level - (x - frac(x))).abs() < 1e-3
                });
                if !clamped {
                    assert_eq!(v.to_bits(), fam.eval(th, x).to_bits());
                }
            }
            assert!((fm.eval(th, x + 1.0) - v - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn forced_fibres_differ_by_forcing() {
        let fam0 = FibreFamily::arnold(0.2, 2.0, 0.0, GOLDEN_MEAN).unwrap();
        let f0 = forced_map(&fam0, 0.5, 1024).unwrap();
        assert_eq!(f0.fibre(0.1).unwrap().g_t, f0.fibre(0.7).unwrap().g_t);

        let fam = FibreFamily::arnold(0.2, 2.0, 1.5, GOLDEN_MEAN).unwrap();
        let f = forced_map(&fam, 0.3, 1024).unwrap();
        let (a, b) = (f.fibre(0.1).unwrap(), f.fibre(0.6).unwrap());
        let c = 1.5 * ((TAU * 0.1).sin() - (TAU * 0.6).sin());
        for (x, y) in a.g_t.values().iter().zip(b.g_t.values()) {
            assert!((x - y - c).abs() < 1e-12);
        }
        assert_eq!(a.plateaus, b.plateaus);

        let one = forced_map(&fam, 1.0, 1024).unwrap();
        let th = 0.27;
        let direct = envelope(&fam.fibre_grid(th, 1024).unwrap(), EnvelopeSign::Plus).unwrap();
        for (x, y) in one.fibre(th).unwrap().g_t.values().iter().zip(direct.values()) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn tabulated_fibres_are_rebuilt_per_theta() {
        use crate::circle::DisplacementTable;
        let table = DisplacementTable::from_fn(8, 256, |th, x| 0.1 + 1.8 / TAU * (TAU * x).sin() + 0.3 * (TAU * th).cos()).unwrap();
        let fam = FibreFamily::tabulated(table, GOLDEN_MEAN).unwrap();
        let f = forced_map(&fam, 1.0, 512).unwrap();
        assert!(f.unforced().is_none());
        let h = f.fibre(0.4).unwrap();
        assert!(!h.plateaus.is_empty());
        assert!(h.g_t.max_decrease().1 <= 1e-12);
        let _ = PI;
    }
}
