use super::{IntervalSetMod1, EPS};
use crate::error::{Error, Result};

const BISECT_WIDTH: f64 = 1e-12;
const BISECT_MAX_ITER: usize = 80;
const MONOTONE_SAMPLES: usize = 1024;
/// Gaps narrower than this between pulled-back arcs are bisection residue.
const SNAP: f64 = 1e-11;

/// Smallest `x` in `[lo, hi]` with `f(x) >= y`, assuming `f(lo) < y <= f(hi)`
/// and `f` non-decreasing.
fn bisect_ge(f: &impl Fn(f64) -> f64, y: f64, lo: f64, hi: f64) -> f64 {
    bisect_ge_to(f, y, lo, hi, BISECT_WIDTH, BISECT_MAX_ITER)
}

fn bisect_ge_to(f: &impl Fn(f64) -> f64, y: f64, mut lo: f64, mut hi: f64, width: f64, max_iter: usize) -> f64 {
    for _ in 0..max_iter {
        if hi - lo <= width {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) >= y {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// `inf { x : f(x) >= y }` for a non-decreasing degree-one lift `f`.
pub fn monotone_inverse(f: &impl Fn(f64) -> f64, y: f64) -> Result<f64> {
    let f0 = f(0.0);
    if !y.is_finite() || !f0.is_finite() {
        return Err(Error::NumericDegeneracy(format!("monotone_inverse of {y} with f(0) = {f0}")));
    }
    let lo = (y - f0).floor() - 1.0;
    Ok(bisect_ge(f, y, lo, lo + 2.0))
}

/// Samples `f` on one period and errors if it drops by more than `tol`
/// between neighbouring samples.
pub fn check_monotone(f: &impl Fn(f64) -> f64, samples: usize, tol: f64) -> Result<()> {
    let n = samples.max(2);
    let mut prev = f(0.0);
    for i in 1..=n {
        let x = i as f64 / n as f64;
        let v = f(x);
        if prev - v > tol {
            return Err(Error::NotMonotone {
                at: x,
                decrease: prev - v,
            });
        }
        prev = v;
    }
    Ok(())
}

/// `{ x mod 1 : f(x) mod 1 in s }` for a non-decreasing degree-one lift.
///
/// Each arc `[a, b)` pulls back to `[x_a, x_b)` with `x_c = inf { f >= c }`.
pub fn monotone_preimage(f: &impl Fn(f64) -> f64, s: &IntervalSetMod1) -> Result<IntervalSetMod1> {
    check_monotone(f, MONOTONE_SAMPLES, EPS)?;
    monotone_preimage_unchecked(f, s)
}

/// As [`monotone_preimage`] without the sampled monotonicity check, for maps
/// that are monotone by construction.
pub(crate) fn monotone_preimage_unchecked(f: &impl Fn(f64) -> f64, s: &IntervalSetMod1) -> Result<IntervalSetMod1> {
    preimage_to(f, s, BISECT_WIDTH, BISECT_MAX_ITER, SNAP)
}

/// Preimage with bisection run to machine precision, for sets whose arcs
/// shrink far below the default resolution.
pub(crate) fn monotone_preimage_fine(f: &impl Fn(f64) -> f64, s: &IntervalSetMod1) -> Result<IntervalSetMod1> {
    preimage_to(f, s, 0.0, 200, 0.0)
}

fn preimage_to(f: &impl Fn(f64) -> f64, s: &IntervalSetMod1, width: f64, iters: usize, snap: f64) -> Result<IntervalSetMod1> {
    if s.is_empty() || s.is_full() {
        return Ok(s.clone());
    }
    let f0 = f(0.0);
    let mut pairs = Vec::with_capacity(s.arcs().len());
    for (start, end) in s.circular_arcs() {
        let k = (f0 - start).ceil();
        let a = start + k;
        let b = end + k;
        let xa = bisect_ge_to(f, a, -1.0, 2.0, width, iters);
        let xb = bisect_ge_to(f, b, -1.0, 2.0, width, iters);
        if xb - xa >= 1.0 {
            return Ok(IntervalSetMod1::full());
        }
        if xb > xa {
            pairs.push((xa, xb));
        }
    }
    let set = IntervalSetMod1::from_pairs(&pairs)?;
    Ok(if snap > 0.0 { set.close_gaps(snap) } else { set })
}
