use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Samples of a function on the uniform grid `{i/m}` of one period.
///
/// `degree` is 1 for lifts of degree-one circle maps (`g(x + 1) = g(x) + 1`)
/// and 0 for plain periodic functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    values: Vec<f64>,
    lipschitz: f64,
    degree: i32,
}

/// Which windowed extremum to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extremum {
    /// `sup` over the trailing window `[x - w, x]`.
    SupTrailing,
    /// `inf` over the leading window `[x, x + w]`.
    InfLeading,
}

impl GridFunction {
    pub fn new(values: Vec<f64>, lipschitz: f64, degree: i32) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("grid function needs at least one sample"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("grid function has non-finite samples"));
        }
        if !(lipschitz >= 0.0) {
            return Err(invalid(format!("lipschitz bound {lipschitz} must be >= 0")));
        }
        Ok(Self {
            values,
            lipschitz,
            degree,
        })
    }

    /// Samples a degree-one lift at `i/m`.
    pub fn sample_lift(m: usize, lipschitz: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..m).map(|i| f(i as f64 / m as f64)).collect();
        Self::new(values, lipschitz, 1)
    }

    pub fn m(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn degree(&self) -> i32 {
        self.degree
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.m() as f64
    }

    /// Value at grid index `j` of the periodic extension.
    #[inline]
    pub fn at(&self, j: i64) -> f64 {
        let m = self.values.len() as i64;
        self.values[j.rem_euclid(m) as usize] + (self.degree as i64 * j.div_euclid(m)) as f64
    }

    /// Piecewise-linear interpolant of the periodic extension.
    pub fn interp(&self, x: f64) -> f64 {
        let s = x * self.m() as f64;
        let j = s.floor();
        let f = s - j;
        let j = j as i64;
        let a = self.at(j);
        if f == 0.0 {
            a
        } else {
            a + f * (self.at(j + 1) - a)
        }
    }

    /// Largest drop between successive samples (0 when non-decreasing).
    pub fn max_decrease(&self) -> (usize, f64) {
        let m = self.m() as i64;
        (0..m)
            .map(|j| (j as usize, self.at(j) - self.at(j + 1)))
            .fold((0, 0.0), |acc, c| if c.1 > acc.1 { c } else { acc })
    }

    /// Upper bound on the gap between the continuum extremum and the grid
    /// extremum of the sampled function.
    pub fn extremum_error_bound(&self) -> f64 {
        self.lipschitz / (2.0 * self.m() as f64)
    }

    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        Self {
            values,
            lipschitz: self.lipschitz,
            degree: self.degree,
        }
    }
}

/// Splits a real window into whole grid cells and a fractional remainder.
pub(crate) fn window_cells(w: f64, m: usize) -> (usize, f64) {
    let cells = w * m as f64;
    let k = ((cells + 1e-9).floor() as usize).min(m);
    let rem = if k == m { 0.0 } else { (cells - k as f64).max(0.0) };
    (k, if rem > 1e-9 { rem } else { 0.0 })
}

/// Windowed extremum of the piecewise-linear interpolant of `g`.
///
/// The window of length `w` covers `k = floor(w m)` whole cells; a
/// fractional remainder contributes the interpolated value at the window's
/// far end. Runs in `O(m)` with a monotone deque.
pub fn sliding_extremum(g: &GridFunction, w: f64, kind: Extremum) -> Result<GridFunction> {
    if !w.is_finite() || !(0.0..=1.0).contains(&w) {
        return Err(invalid(format!("window {w} outside [0, 1]")));
    }
    let m = g.m();
    let (k, rem) = window_cells(w, m);
    if k == 0 && rem == 0.0 {
        return Ok(g.clone());
    }
    let mut out = vec![0.0; m];
    let mut q: VecDeque<(i64, f64)> = VecDeque::with_capacity(k + 2);
    let k = k as i64;
    match kind {
        Extremum::SupTrailing => {
            for j in -k..m as i64 {
                let v = g.at(j);
                while matches!(q.back(), Some(&(_, b)) if b <= v) {
                    q.pop_back();
                }
                q.push_back((j, v));
                while matches!(q.front(), Some(&(i, _)) if i < j - k) {
                    q.pop_front();
                }
                if j >= 0 {
                    let mut best = q.front().expect("window non-empty").1;
                    if rem > 0.0 {
                        let near = g.at(j - k);
                        let end = near + rem * (g.at(j - k - 1) - near);
                        best = best.max(end);
                    }
                    out[j as usize] = best;
                }
            }
        }
        Extremum::InfLeading => {
            for j in (0..m as i64 + k).rev() {
                let v = g.at(j);
                while matches!(q.back(), Some(&(_, b)) if b >= v) {
                    q.pop_back();
                }
                q.push_back((j, v));
                while matches!(q.front(), Some(&(i, _)) if i > j + k) {
                    q.pop_front();
                }
                if j < m as i64 {
                    let mut best = q.front().expect("window non-empty").1;
                    if rem > 0.0 {
                        let near = g.at(j + k);
                        let end = near + rem * (g.at(j + k + 1) - near);
                        best = best.min(end);
                    }
                    out[j as usize] = best;
                }
            }
        }
    }
    Ok(g.with_values(out))
}

#[cfg(test)]
pub(crate) mod oracle {
    use super::*;

    /// Direct double loop over the window; the reference for `sliding_extremum`.
    pub fn naive_extremum(g: &GridFunction, w: f64, kind: Extremum) -> Vec<f64> {
        let m = g.m();
        let (k, rem) = window_cells(w, m);
        let k = k as i64;
        (0..m as i64)
            .map(|i| match kind {
                Extremum::SupTrailing => {
                    let mut best = f64::NEG_INFINITY;
                    for j in (i - k)..=i {
                        best = best.max(g.at(j));
                    }
                    if rem > 0.0 {
                        let near = g.at(i - k);
                        best = best.max(near + rem * (g.at(i - k - 1) - near));
                    }
                    best
                }
                Extremum::InfLeading => {
                    let mut best = f64::INFINITY;
                    for j in i..=(i + k) {
                        best = best.min(g.at(j));
                    }
                    if rem > 0.0 {
                        let near = g.at(i + k);
                        best = best.min(near + rem * (g.at(i + k + 1) - near));
                    }
                    best
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::oracle::naive_extremum;
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_sample_trailing_sup_with_wrap() {
        let g = GridFunction::new(vec![1.0, 3.0, 2.0, 5.0, 4.0], 10.0, 0).unwrap();
        let r = sliding_extremum(&g, 0.2, Extremum::SupTrailing).unwrap();
        assert_eq!(r.values(), &[4.0, 3.0, 3.0, 5.0, 5.0]);
    }

    #[test]
    fn zero_window_is_identity() {
        let g = GridFunction::new(vec![0.1, 0.5, 0.2, 0.9], 4.0, 1).unwrap();
        for kind in [Extremum::SupTrailing, Extremum::InfLeading] {
            assert_eq!(sliding_extremum(&g, 0.0, kind).unwrap(), g);
        }
    }

    #[test]
    fn window_out_of_range() {
        let g = GridFunction::new(vec![0.0; 4], 1.0, 1).unwrap();
        assert!(sliding_extremum(&g, 1.5, Extremum::SupTrailing).is_err());
        assert!(sliding_extremum(&g, -0.1, Extremum::InfLeading).is_err());
        assert!(sliding_extremum(&g, f64::NAN, Extremum::InfLeading).is_err());
    }

    #[test]
    fn random_grids_match_naive_scan_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for case in 0..100i32 {
            let m = rng.gen_range(2..=512);
            let degree = case % 2;
            let vals: Vec<f64> = (0..m).map(|i| i as f64 / m as f64 * degree as f64 + rng.gen_range(-1.0..1.0)).collect();
            let g = GridFunction::new(vals, 10.0, degree).unwrap();
            let w = match case % 4 {
                0 => 1.0,
                1 => rng.gen_range(0.0..1.0),
                2 => (rng.gen_range(1..=m) as f64) / m as f64,
                _ => 0.0,
            };
            for kind in [Extremum::SupTrailing, Extremum::InfLeading] {
                let fast = sliding_extremum(&g, w, kind).unwrap();
                assert_eq!(fast.values(), naive_extremum(&g, w, kind).as_slice(), "m={m} w={w} {kind:?}");
            }
        }
    }

    #[test]
    fn interpolation_is_exact_on_grid_and_periodic() {
        let g = GridFunction::sample_lift(8, 2.0, |x| x + 0.1 * (x * 6.0).sin()).unwrap();
        assert_eq!(g.interp(0.25), g.values()[2]);
        assert!((g.interp(1.25) - g.values()[2] - 1.0).abs() < 1e-15);
        assert!((g.interp(-0.75) - g.values()[2] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn lift_jumps_stay_within_lipschitz() {
        let m = 1024;
        let g = GridFunction::sample_lift(m, 1.0 + 2.0, |x| x + (2.0 / (2.0 * std::f64::consts::PI)) * (2.0 * std::f64::consts::PI * x).sin()).unwrap();
        for j in 0..m as i64 {
            assert!((g.at(j + 1) - g.at(j)).abs() <= g.lipschitz() / m as f64 + 1e-9);
        }
    }
}
