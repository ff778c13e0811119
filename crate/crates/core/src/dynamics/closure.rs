//! Closed-orbit detection for the frequency ratio `alpha = sqrt(1 - 2k/Lz^2)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{SystemKind, SystemParams};
use crate::error::Result;

/// Denominator cap for rational detection.
pub const MAX_DENOMINATOR: u64 = 64;
/// Distance within which `alpha` counts as rational.
pub const RATIONAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rational {
    pub p: u64,
    pub q: u64,
}

impl Rational {
    pub fn value(self) -> f64 {
        self.p as f64 / self.q as f64
    }
}

/// Best continued-fraction convergent `p/q` of a positive `x` with
/// `q <= max_den` and `|x - p/q| <= tol`, if any.
pub fn rational_approximation(x: f64, max_den: u64, tol: f64) -> Option<Rational> {
    if !(x.is_finite() && x > 0.0) {
        return None;
    }
    // convergents h_n / k_n
    let (mut h_prev, mut h) = (1u64, x.floor() as u64);
    let (mut k_prev, mut k) = (0u64, 1u64);
    let mut frac = x - x.floor();
    loop {
        if (x - h as f64 / k as f64).abs() <= tol {
            return Some(Rational { p: h, q: k });
        }
        if frac < 1e-15 {
            return None;
        }
        let inv = 1.0 / frac;
        let a = inv.floor();
        frac = inv - a;
        let a = a as u64;
        let h_next = a.checked_mul(h)?.checked_add(h_prev)?;
        let k_next = a.checked_mul(k)?.checked_add(k_prev)?;
        if k_next > max_den {
            return None;
        }
        (h_prev, h) = (h, h_next);
        (k_prev, k) = (k, k_next);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosureReport {
    pub alpha: f64,
    pub closed: bool,
    pub ratio: Option<Rational>,
    /// Azimuth advance after which the phase point recurs.
    pub closure_angle: Option<f64>,
    /// Number of radial oscillations completed over `closure_angle`.
    pub radial_periods: Option<u64>,
}

/// The Coulomb orbit varies as `cos(alpha theta)` and closes after
/// `2 pi q` when `alpha = p/q`. The oscillator varies as `cos(2 alpha theta)`,
/// so the azimuthal radial period is `pi/alpha` and the orbit closes after
/// `2 pi q` for odd `q` and `pi q` for even `q`.
pub fn closure_analysis(params: &SystemParams, lz: f64) -> Result<ClosureReport> {
    let alpha = params.alpha(lz)?;
    let ratio = rational_approximation(alpha, MAX_DENOMINATOR, RATIONAL_TOL);
    let (closure_angle, radial_periods) = match ratio {
        None => (None, None),
        Some(Rational { p, q }) => match params.kind {
            SystemKind::ScreenedCoulomb => (Some(2.0 * PI * q as f64), Some(p)),
            SystemKind::ScreenedOscillator => {
                if q % 2 == 0 {
                    (Some(PI * q as f64), Some(p))
                } else {
                    (Some(2.0 * PI * q as f64), Some(2 * p))
                }
            }
        },
    };
    Ok(ClosureReport {
        alpha,
        closed: ratio.is_some(),
        ratio,
        closure_angle,
        radial_periods,
    })
}
