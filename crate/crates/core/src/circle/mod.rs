//! Numeric substrate: mod-1 arithmetic, arcs on the circle, grid-sampled
//! lifts with windowed extrema, fibre families and monotone inversion.

mod family;
pub(crate) mod grid;
mod interval;
pub(crate) mod preimage;

pub use family::{DisplacementTable, FamilyParams, FibreFamily, FibreLift, GOLDEN_MEAN};
pub use grid::{sliding_extremum, Extremum, GridFunction};
pub use interval::{canonicalize_intervals, complement_intervals, CircleArc, IntervalSetMod1};
pub use preimage::{check_monotone, monotone_inverse, monotone_preimage};

use crate::error::{invalid, Result};

/// Default tolerance for comparisons between reals.
pub const EPS: f64 = 1e-9;

/// Reduces `x` to the circle coordinate in `[0, 1)`.
pub fn wrap_mod1(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(invalid(format!("wrap_mod1 of non-finite value {x}")));
    }
    Ok(frac(x))
}

/// Fractional part in `[0, 1)` for finite input.
#[inline]
pub(crate) fn frac(x: f64) -> f64 {
    let r = x - x.floor();
    // x slightly below an integer can round to exactly 1.0
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Distance on `R / kZ`.
#[inline]
pub fn circle_dist(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

/// A point of `Theta x R`: circle coordinate and unreduced lift value.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FibrePoint {
    pub theta: f64,
    pub x: f64,
}

impl FibrePoint {
    pub fn new(theta: f64, x: f64) -> Result<Self> {
        Ok(Self {
            theta: wrap_mod1(theta)?,
            x,
        })
    }

    pub fn x_mod1(&self) -> f64 {
        frac(self.x)
    }
}
