//! Finite-difference eigenvalues of the radial operator.
//!
//! For `lambda > 0` the substitution `r = tan(chi)/sqrt(lambda)` with
//! `u = sqrt(sin chi) (1 + lambda r^2)^(3/4) psi` turns the radial equation
//! into the symmetric Sturm–Liouville form
//!
//! ```text
//! -lambda/2 [u'' + u/4 - (m'^2 - 1/4)/sin^2(chi) u] + (V0 + lambda k) u = E u
//! ```
//!
//! and for `lambda = 0` with `u = sqrt(r) psi` into
//! `-1/2 [u'' - (m'^2 - 1/4)/r^2 u] + V0 u = E u`. Both are discretized by
//! second-order central differences with Dirichlet ends, giving a symmetric
//! tridiagonal matrix whose lowest eigenvalues are isolated by Sturm-sequence
//! bisection.
//!
//! The Coulomb problem lives on the whole sphere, `chi` in `(0, pi)`: the
//! wavefunction does not vanish at the equator, so a hemisphere box would
//! shift the levels. The oscillator potential diverges at the equator and
//! `(0, pi/2)` suffices.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::m_prime;
use crate::dynamics::SystemKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridVariable {
    /// Compactified angle `chi = arctan(r sqrt(lambda))`, for `lambda > 0`.
    Chi,
    /// Plain radius with an outer cutoff, for `lambda = 0`.
    R,
}

/// Uniform interior grid `x_i = i h`, `i = 1..=n_points`, with
/// `h = upper / (n_points + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub variable: GridVariable,
    pub n_points: usize,
    pub upper: f64,
    /// Largest accepted Richardson error estimate, relative to `max(1, |E|)`.
    pub tolerance: f64,
}

impl RadialGrid {
    pub const MIN_POINTS: usize = 200;

    pub fn new(
        variable: GridVariable,
        n_points: usize,
        upper: f64,
        tolerance: f64,
    ) -> Result<Self> {
        if n_points < Self::MIN_POINTS {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least {} points, got {n_points}",
                Self::MIN_POINTS
            )));
        }
        if !(upper > 0.0) || !upper.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "grid extent must be positive, got {upper}"
            )));
        }
        if variable == GridVariable::Chi && upper > PI {
            return Err(Error::InvalidArgument(format!(
                "chi grid cannot extend past pi, got {upper}"
            )));
        }
        if !(tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be positive, got {tolerance}"
            )));
        }
        Ok(RadialGrid {
            variable,
            n_points,
            upper,
            tolerance,
        })
    }

    pub fn spacing(&self) -> f64 {
        self.upper / (self.n_points + 1) as f64
    }

    /// The same extent at half the spacing.
    pub fn refined(&self) -> Self {
        RadialGrid {
            n_points: 2 * self.n_points + 1,
            ..*self
        }
    }

    /// A grid adequate for the lowest `n_levels` states of `(kind, m)`.
    pub fn default_for(
        kind: SystemKind,
        lambda: f64,
        k: f64,
        m: i64,
        n_levels: usize,
    ) -> Result<Self> {
        let mp = m_prime(m, k)?;
        let top = n_levels.max(1) as f64 - 1.0;
        if lambda > 0.0 {
            let upper = match kind {
                SystemKind::ScreenedCoulomb => PI,
                SystemKind::ScreenedOscillator => FRAC_PI_2,
            };
            return Self::new(GridVariable::Chi, 4000, upper, 1e-4);
        }
        match kind {
            SystemKind::ScreenedCoulomb => {
                // states extend to a few n^2 Bohr radii
                let n_eff = mp + top + 0.5;
                let r_max = 10.0 * n_eff * n_eff + 20.0;
                let n = ((r_max / 0.007) as usize).clamp(20_000, 400_000);
                Self::new(GridVariable::R, n, r_max, 1e-4)
            }
            SystemKind::ScreenedOscillator => {
                let e_top = 1.0 + mp + 2.0 * top;
                Self::new(GridVariable::R, 4000, (2.0 * e_top).sqrt() + 8.0, 1e-4)
            }
        }
    }
}

/// Lowest eigenvalues on a grid and its refinement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericLevels {
    /// Richardson-extrapolated values `(4 E_fine - E_coarse) / 3`.
    pub values: Vec<f64>,
    pub coarse: Vec<f64>,
    pub fine: Vec<f64>,
    /// `|E_fine - E_coarse| / 3`, the estimated error of the fine values.
    pub error_estimate: Vec<f64>,
}

struct Tridiagonal {
    diag: Vec<f64>,
    off: f64,
}

impl Tridiagonal {
    /// Number of eigenvalues below `x`.
    fn count_below(&self, x: f64) -> usize {
        let e2 = self.off * self.off;
        let mut count = 0;
        let mut q = 1.0;
        for (i, d) in self.diag.iter().enumerate() {
            q = if i == 0 { d - x } else { d - x - e2 / q };
            if q == 0.0 {
                q = -f64::EPSILON * (d.abs() + x.abs()).max(f64::MIN_POSITIVE);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let a = 2.0 * self.off.abs();
        let lo = self.diag.iter().fold(f64::INFINITY, |m, d| m.min(d - a));
        let hi = self
            .diag
            .iter()
            .fold(f64::NEG_INFINITY, |m, d| m.max(d + a));
        (lo, hi)
    }

    fn lowest(&self, n_levels: usize) -> Result<Vec<f64>> {
        if self.diag.iter().any(|d| !d.is_finite()) {
            return Err(Error::Eigensolver("non-finite matrix entry".into()));
        }
        let (lo0, hi0) = self.gershgorin();
        let mut out = Vec::with_capacity(n_levels);
        let mut lo = lo0;
        for j in 0..n_levels {
            let (mut a, mut b) = (lo, hi0);
            for _ in 0..300 {
                let mid = 0.5 * (a + b);
                if b - a <= 2.0 * f64::EPSILON * mid.abs().max(1.0) {
                    break;
                }
                if self.count_below(mid) <= j {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            let value = 0.5 * (a + b);
            if self.count_below(b) <= j {
                return Err(Error::Eigensolver(format!("level {j} not bracketed")));
            }
            out.push(value);
            lo = a;
        }
        Ok(out)
    }
}

fn assemble(
    kind: SystemKind,
    lambda: f64,
    k: f64,
    mp: f64,
    grid: &RadialGrid,
) -> Result<Tridiagonal> {
    let h = grid.spacing();
    let n = grid.n_points;
    let cent = mp * mp - 0.25;
    let diag = match grid.variable {
        GridVariable::Chi => {
            if !(lambda > 0.0) {
                return Err(Error::InvalidArgument("chi grid needs lambda > 0".into()));
            }
            let sl = lambda.sqrt();
            (1..=n)
                .map(|i| {
                    let chi = i as f64 * h;
                    let s = chi.sin();
                    let v = match kind {
                        SystemKind::ScreenedCoulomb => -sl * chi.cos() / s,
                        SystemKind::ScreenedOscillator => {
                            let t = chi.tan();
                            t * t / (2.0 * lambda)
                        }
                    };
                    0.5 * lambda * (2.0 / (h * h) - 0.25 + cent / (s * s)) + v + lambda * k
                })
                .collect()
        }
        GridVariable::R => {
            if lambda != 0.0 {
                return Err(Error::InvalidArgument("r grid is for lambda = 0".into()));
            }
            (1..=n)
                .map(|i| {
                    let r = i as f64 * h;
                    let v = match kind {
                        SystemKind::ScreenedCoulomb => -1.0 / r,
                        SystemKind::ScreenedOscillator => 0.5 * r * r,
                    };
                    0.5 * (2.0 / (h * h) + cent / (r * r)) + v
                })
                .collect()
        }
    };
    let scale = if grid.variable == GridVariable::Chi {
        lambda
    } else {
        1.0
    };
    Ok(Tridiagonal {
        diag,
        off: -0.5 * scale / (h * h),
    })
}

/// Lowest `n_levels` eigenvalues (`1..=10`) on `grid` and on its
/// refinement, extrapolated in `h^2`. Fails with
/// [`Error::InsufficientResolution`] when the two grids disagree by more
/// than the grid tolerance.
pub fn radial_solve_numeric(
    kind: SystemKind,
    lambda: f64,
    k: f64,
    m: i64,
    n_levels: usize,
    grid: &RadialGrid,
) -> Result<NumericLevels> {
    if !(1..=10).contains(&n_levels) {
        return Err(Error::InvalidArgument(format!(
            "n_levels must be in 1..=10, got {n_levels}"
        )));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::NegativeCurvature(lambda));
    }
    let mp = m_prime(m, k)?;
    let coarse = assemble(kind, lambda, k, mp, grid)?.lowest(n_levels)?;
    let fine = assemble(kind, lambda, k, mp, &grid.refined())?.lowest(n_levels)?;
    let mut values = Vec::with_capacity(n_levels);
    let mut error_estimate = Vec::with_capacity(n_levels);
    for (c, f) in coarse.iter().zip(&fine) {
        let est = (f - c).abs() / 3.0;
        if est > grid.tolerance * f.abs().max(1.0) {
            return Err(Error::InsufficientResolution {
                estimate: est,
                tolerance: grid.tolerance,
            });
        }
        values.push((4.0 * f - c) / 3.0);
        error_estimate.push(est);
    }
    Ok(NumericLevels {
        values,
        coarse,
        fine,
        error_estimate,
    })
}
