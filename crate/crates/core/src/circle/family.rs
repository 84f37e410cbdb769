use std::f64::consts::TAU;
use std::sync::Arc;

use super::{frac, GridFunction};
use crate::error::{invalid, Result};

/// `(sqrt 5 - 1) / 2`, the default driving frequency.
pub const GOLDEN_MEAN: f64 = 0.618_033_988_749_894_9;

/// Fibre displacement `F_theta(x) - x` tabulated on a periodic
/// `n_theta x n_x` grid and bilinearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementTable {
    n_theta: usize,
    n_x: usize,
    values: Vec<f64>,
}

impl DisplacementTable {
    /// `values` is row-major: row `j` holds the samples at `theta = j / n_theta`.
    pub fn new(n_theta: usize, n_x: usize, values: Vec<f64>) -> Result<Self> {
        if n_theta == 0 || n_x < 2 || values.len() != n_theta * n_x {
            return Err(invalid(format!(
                "displacement table needs n_theta >= 1, n_x >= 2 and {} values, got {}",
                n_theta * n_x,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("displacement table has non-finite entries"));
        }
        Ok(Self {
            n_theta,
            n_x,
            values,
        })
    }

    pub fn from_fn(n_theta: usize, n_x: usize, d: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(n_theta * n_x);
        for j in 0..n_theta {
            for i in 0..n_x {
                values.push(d(j as f64 / n_theta as f64, i as f64 / n_x as f64));
            }
        }
        Self::new(n_theta, n_x, values)
    }

    fn at(&self, j: usize, i: usize) -> f64 {
        self.values[(j % self.n_theta) * self.n_x + (i % self.n_x)]
    }

    pub fn displacement(&self, theta: f64, x: f64) -> f64 {
        let s = frac(theta) * self.n_theta as f64;
        let j = s.floor() as usize;
        let u = s - j as f64;
        let r = frac(x) * self.n_x as f64;
        let i = r.floor() as usize;
        let v = r - i as f64;
        let row = |jj: usize| (1.0 - v) * self.at(jj, i) + v * self.at(jj, i + 1);
        (1.0 - u) * row(j) + u * row(j + 1)
    }

    /// Bounds on `|dF/dx|` and `|dF/dtheta|` of the interpolant.
    fn slope_bounds(&self) -> (f64, f64) {
        let mut dx: f64 = 0.0;
        let mut dt: f64 = 0.0;
        for j in 0..self.n_theta {
            for i in 0..self.n_x {
                dx = dx.max((self.at(j, i + 1) - self.at(j, i)).abs() * self.n_x as f64);
                dt = dt.max((self.at(j + 1, i) - self.at(j, i)).abs() * self.n_theta as f64);
            }
        }
        (1.0 + dx, dt)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FamilyParams {
    /// `F_theta(x) = x + tau + alpha/(2 pi) sin(2 pi x) + beta sin(2 pi theta)`.
    Arnold { tau: f64, alpha: f64, beta: f64 },
    Tabulated { table: Arc<DisplacementTable> },
}

/// A forced family of degree-one fibre lifts over the rotation by `omega`.
#[derive(Debug, Clone, PartialEq)]
pub struct FibreFamily {
    pub omega: f64,
    pub params: FamilyParams,
    pub lipschitz: f64,
}

/// Exact evaluator of one fibre lift.
#[derive(Debug, Clone)]
pub enum FibreLift {
    Arnold { tau: f64, alpha: f64, shift: f64 },
    Table { table: Arc<DisplacementTable>, theta: f64 },
    Samples(GridFunction),
}

impl FibreLift {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            FibreLift::Arnold { tau, alpha, shift } => x + tau + alpha / TAU * (TAU * x).sin() + shift,
            FibreLift::Table { table, theta } => x + table.displacement(*theta, x),
            FibreLift::Samples(g) => g.interp(x),
        }
    }
}

fn check_omega(omega: f64) -> Result<()> {
    if !omega.is_finite() || omega <= 0.0 || omega >= 1.0 {
        return Err(invalid(format!("omega {omega} must lie in (0, 1)")));
    }
    Ok(())
}

impl FibreFamily {
    pub fn arnold(tau: f64, alpha: f64, beta: f64, omega: f64) -> Result<Self> {
        check_omega(omega)?;
        if !(tau.is_finite() && alpha.is_finite() && beta.is_finite()) {
            return Err(invalid("Arnold parameters must be finite"));
        }
        Ok(Self {
            omega,
            params: FamilyParams::Arnold { tau, alpha, beta },
            lipschitz: 1.0 + alpha.abs() + TAU * beta.abs(),
        })
    }

    pub fn tabulated(table: DisplacementTable, omega: f64) -> Result<Self> {
        check_omega(omega)?;
        let (dx, dt) = table.slope_bounds();
        Ok(Self {
            omega,
            params: FamilyParams::Tabulated {
                table: Arc::new(table),
            },
            lipschitz: dx.max(dt),
        })
    }

    pub fn is_arnold(&self) -> bool {
        matches!(self.params, FamilyParams::Arnold { .. })
    }

    /// `(tau, alpha, beta)` for the Arnold family.
    pub fn arnold_params(&self) -> Option<(f64, f64, f64)> {
        match self.params {
            FamilyParams::Arnold { tau, alpha, beta } => Some((tau, alpha, beta)),
            FamilyParams::Tabulated { .. } => None,
        }
    }

    /// `F_theta(x)` on the lift.
    #[inline]
    pub fn eval(&self, theta: f64, x: f64) -> f64 {
        match &self.params {
            FamilyParams::Arnold { tau, alpha, beta } => {
                x + tau + alpha / TAU * (TAU * x).sin() + beta * (TAU * theta).sin()
            }
            FamilyParams::Tabulated { table } => x + table.displacement(theta, x),
        }
    }

    #[inline]
    pub fn rotate(&self, theta: f64) -> f64 {
        frac(theta + self.omega)
    }

    /// Additive forcing term of the Arnold family at `theta`.
    #[inline]
    pub fn forcing(&self, theta: f64) -> f64 {
        match self.params {
            FamilyParams::Arnold { beta, .. } => beta * (TAU * theta).sin(),
            FamilyParams::Tabulated { .. } => 0.0,
        }
    }

    pub fn fibre_lift(&self, theta: f64) -> FibreLift {
        match &self.params {
            FamilyParams::Arnold { tau, alpha, beta } => FibreLift::Arnold {
                tau: *tau,
                alpha: *alpha,
                shift: beta * (TAU * theta).sin(),
            },
            FamilyParams::Tabulated { table } => FibreLift::Table {
                table: Arc::clone(table),
                theta,
            },
        }
    }

    /// The unforced part `G(x) = x + tau + alpha/(2 pi) sin(2 pi x)` (Arnold only).
    pub fn unforced_lift(&self) -> Option<FibreLift> {
        self.arnold_params().map(|(tau, alpha, _)| FibreLift::Arnold {
            tau,
            alpha,
            shift: 0.0,
        })
    }

    pub fn fibre_grid(&self, theta: f64, m: usize) -> Result<GridFunction> {
        let lift = self.fibre_lift(theta);
        GridFunction::sample_lift(m, self.lipschitz, |x| lift.eval(x))
    }

    pub fn unforced_grid(&self, m: usize) -> Option<Result<GridFunction>> {
        self.unforced_lift()
            .map(|lift| GridFunction::sample_lift(m, self.lipschitz, |x| lift.eval(x)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn golden_mean_value() {
        assert!((GOLDEN_MEAN - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-16);
    }

    #[test]
    fn periodicity_audit() {
        let fams = [
            FibreFamily::arnold(0.2, 1.5, 1.5, GOLDEN_MEAN).unwrap(),
            FibreFamily::arnold(0.1, 2.5 * std::f64::consts::PI, 0.7, GOLDEN_MEAN).unwrap(),
            FibreFamily::tabulated(
                DisplacementTable::from_fn(16, 64, |t, x| 0.3 + 0.1 * (TAU * x).sin() + 0.2 * (TAU * t).cos()).unwrap(),
                GOLDEN_MEAN,
            )
            .unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for fam in &fams {
            for _ in 0..1000 {
                let th: f64 = rng.gen();
                let x: f64 = rng.gen_range(-5.0..5.0);
                let k: i32 = rng.gen_range(-2..=2);
                let lhs = fam.eval(th, x + k as f64) - fam.eval(th, x) - k as f64;
                assert!(lhs.abs() <= 1e-9, "{lhs}");
            }
        }
    }

    #[test]
    fn arnold_lipschitz_bound() {
        let f = FibreFamily::arnold(0.0, 2.0, 0.5, GOLDEN_MEAN).unwrap();
        assert!(f.lipschitz >= 1.0 + 2.0 + TAU * 0.5 - 1e-12);
        // finite-difference check of the x- and theta-derivatives
        let h = 1e-6;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let th: f64 = rng.gen();
            let x: f64 = rng.gen();
            let dx = (f.eval(th, x + h) - f.eval(th, x - h)) / (2.0 * h);
            let dt = (f.eval(th + h, x) - f.eval(th - h, x)) / (2.0 * h);
            assert!(dx.abs() <= f.lipschitz && dt.abs() <= f.lipschitz);
        }
    }

    #[test]
    fn omega_validation() {
        assert!(FibreFamily::arnold(0.0, 1.0, 0.0, 0.0).is_err());
        assert!(FibreFamily::arnold(0.0, 1.0, 0.0, 1.2).is_err());
        assert!(FibreFamily::arnold(f64::NAN, 1.0, 0.0, 0.3).is_err());
    }

    #[test]
    fn fibre_lift_agrees_with_family() {
        let f = FibreFamily::arnold(0.3, 0.8, 0.5, GOLDEN_MEAN).unwrap();
        let lift = f.fibre_lift(0.37);
        for x in [-1.3, 0.0, 0.42, 2.9] {
            assert!((lift.eval(x) - f.eval(0.37, x)).abs() < 1e-14);
        }
    }
}
