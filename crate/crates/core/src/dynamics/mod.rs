//! Classical mechanics of the screened systems in gnomonic phase space.
//!
//! The Hamiltonian is `H = |pi|^2/2 + lambda Lz^2/2 + V(r)` with the
//! curvature-corrected momentum `pi = p + lambda x (x.p)`.

mod closure;
mod integrator;
mod orbit;
mod trajectory;

pub use closure::{closure_analysis, rational_approximation, ClosureReport, Rational};
pub use integrator::{integrate, integrate_until, IntegratorOptions, StopCondition};
pub use orbit::{
    closed_form_radius, compare_projected_orbits, fit_theta0, flat_equivalent_state,
    orbit_residual, perihelion_radius, OrbitResidual, OrbitShape,
};
pub use trajectory::{
    find_turning_points, DenseSegment, Sample, Trajectory, TurningKind, TurningPoint,
    TurningPoints, TRAJECTORY_CSV_HEADER,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Curvature;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SystemKind {
    /// `V(r) = -1/r - k/r^2`
    #[serde(rename = "coulomb")]
    ScreenedCoulomb,
    /// `V(r) = r^2/2 - k/r^2`
    #[serde(rename = "oscillator")]
    ScreenedOscillator,
}

impl SystemKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SystemKind::ScreenedCoulomb => "coulomb",
            SystemKind::ScreenedOscillator => "oscillator",
        }
    }
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SystemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "coulomb" | "screened-coulomb" | "screened_coulomb" => Ok(SystemKind::ScreenedCoulomb),
            "oscillator" | "screened-oscillator" | "screened_oscillator" => {
                Ok(SystemKind::ScreenedOscillator)
            }
            other => Err(Error::InvalidArgument(format!("unknown system `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub kind: SystemKind,
    pub curvature: Curvature,
    /// Screening strength, `k >= 0`.
    pub k: f64,
}

impl SystemParams {
    pub fn new(kind: SystemKind, lambda: f64, k: f64) -> Result<Self> {
        let curvature = Curvature::new(lambda)?;
        if !k.is_finite() || k < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "screening strength must be finite and non-negative, got {k}"
            )));
        }
        Ok(SystemParams { kind, curvature, k })
    }

    pub fn coulomb(lambda: f64, k: f64) -> Result<Self> {
        Self::new(SystemKind::ScreenedCoulomb, lambda, k)
    }

    pub fn oscillator(lambda: f64, k: f64) -> Result<Self> {
        Self::new(SystemKind::ScreenedOscillator, lambda, k)
    }

    #[inline]
    pub fn lambda(&self) -> f64 {
        self.curvature.lambda()
    }

    pub fn with_k(self, k: f64) -> Result<Self> {
        Self::new(self.kind, self.lambda(), k)
    }

    pub fn with_lambda(self, lambda: f64) -> Result<Self> {
        Self::new(self.kind, lambda, self.k)
    }

    pub(crate) fn require(&self, kind: SystemKind) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(Error::WrongSystem {
                expected: kind.as_str(),
            })
        }
    }

    /// `alpha = sqrt(1 - 2k/Lz^2)`.
    pub fn alpha(&self, lz: f64) -> Result<f64> {
        let lz_sq = lz * lz;
        let two_k = 2.0 * self.k;
        if !(two_k < lz_sq) {
            return Err(Error::ImaginaryAlpha { two_k, lz_sq });
        }
        Ok((1.0 - two_k / lz_sq).sqrt())
    }
}

/// Point of gnomonic phase space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseState {
    pub x1: f64,
    pub x2: f64,
    pub p1: f64,
    pub p2: f64,
}

impl PhaseState {
    pub const fn new(x1: f64, x2: f64, p1: f64, p2: f64) -> Self {
        PhaseState { x1, x2, p1, p2 }
    }

    /// Builds a state from position and the radial/angular momentum split,
    /// `p = p_r rhat + (Lz/r) thetahat`.
    pub fn from_polar(r: f64, theta: f64, p_r: f64, lz: f64) -> Self {
        let (s, c) = theta.sin_cos();
        let p_t = lz / r;
        PhaseState {
            x1: r * c,
            x2: r * s,
            p1: p_r * c - p_t * s,
            p2: p_r * s + p_t * c,
        }
    }

    #[inline]
    pub fn to_array(self) -> [f64; 4] {
        [self.x1, self.x2, self.p1, self.p2]
    }

    #[inline]
    pub fn from_array(a: [f64; 4]) -> Self {
        PhaseState::new(a[0], a[1], a[2], a[3])
    }

    #[inline]
    pub fn r_squared(&self) -> f64 {
        self.x1 * self.x1 + self.x2 * self.x2
    }

    #[inline]
    pub fn r(&self) -> f64 {
        self.x1.hypot(self.x2)
    }

    /// Azimuth in `(-pi, pi]`.
    pub fn theta(&self) -> f64 {
        self.x2.atan2(self.x1)
    }

    #[inline]
    pub fn x_dot_p(&self) -> f64 {
        self.x1 * self.p1 + self.x2 * self.p2
    }

    #[inline]
    pub fn lz(&self) -> f64 {
        self.x1 * self.p2 - self.x2 * self.p1
    }

    /// Canonical radial momentum `x.p / r`.
    pub fn p_r(&self) -> f64 {
        self.x_dot_p() / self.r()
    }

    /// Rotates position and momentum together by `angle`.
    pub fn rotated(&self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        PhaseState {
            x1: c * self.x1 - s * self.x2,
            x2: s * self.x1 + c * self.x2,
            p1: c * self.p1 - s * self.p2,
            p2: s * self.p1 + c * self.p2,
        }
    }

    pub fn max_abs_diff(&self, other: &PhaseState) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub(crate) fn checked_r(&self) -> Result<f64> {
        let r = self.r();
        if r > 0.0 && r.is_finite() {
            Ok(r)
        } else {
            Err(Error::NonPositiveRadius(r))
        }
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveRadius(r))
    }
}

pub fn potential(r: f64, params: &SystemParams) -> Result<f64> {
    check_radius(r)?;
    let screening = params.k / (r * r);
    Ok(match params.kind {
        SystemKind::ScreenedCoulomb => -1.0 / r - screening,
        SystemKind::ScreenedOscillator => 0.5 * r * r - screening,
    })
}

/// `dV/dr`.
pub fn potential_derivative(r: f64, params: &SystemParams) -> Result<f64> {
    check_radius(r)?;
    let screening = 2.0 * params.k / (r * r * r);
    Ok(match params.kind {
        SystemKind::ScreenedCoulomb => 1.0 / (r * r) + screening,
        SystemKind::ScreenedOscillator => r + screening,
    })
}

/// Classical `pi = p + lambda x (x.p)`; the symmetrized operator form
/// reduces to this product.
pub fn pi_vector(state: &PhaseState, c: Curvature) -> (f64, f64) {
    let w = c.lambda() * state.x_dot_p();
    (state.p1 + w * state.x1, state.p2 + w * state.x2)
}

pub fn hamiltonian(state: &PhaseState, params: &SystemParams) -> Result<f64> {
    let r = state.checked_r()?;
    let (pi1, pi2) = pi_vector(state, params.curvature);
    let lz = state.lz();
    Ok(0.5 * (pi1 * pi1 + pi2 * pi2) + 0.5 * params.lambda() * lz * lz + potential(r, params)?)
}

/// Analytic `(dH/dx1, dH/dx2, dH/dp1, dH/dp2)`.
pub fn hamiltonian_gradient(state: &PhaseState, params: &SystemParams) -> Result<[f64; 4]> {
    let r = state.checked_r()?;
    let lambda = params.lambda();
    let PhaseState { x1, x2, p1, p2 } = *state;
    let w = state.x_dot_p();
    let (pi1, pi2) = pi_vector(state, params.curvature);
    let pi_dot_x = pi1 * x1 + pi2 * x2;
    let lz = state.lz();
    let radial = potential_derivative(r, params)? / r;

    // d(pi_i)/dx_j = lambda (delta_ij w + x_i p_j), d(pi_i)/dp_j = delta_ij + lambda x_i x_j
    Ok([
        lambda * (pi1 * w + pi_dot_x * p1) + lambda * lz * p2 + radial * x1,
        lambda * (pi2 * w + pi_dot_x * p2) - lambda * lz * p1 + radial * x2,
        pi1 + lambda * pi_dot_x * x1 - lambda * lz * x2,
        pi2 + lambda * pi_dot_x * x2 + lambda * lz * x1,
    ])
}

/// Hamilton's equations: `(x1', x2', p1', p2')`.
pub fn equations_of_motion(state: &PhaseState, params: &SystemParams) -> Result<[f64; 4]> {
    let g = hamiltonian_gradient(state, params)?;
    Ok([g[2], g[3], -g[0], -g[1]])
}

/// `dr/dt = x.xdot / r`.
pub fn radial_velocity(state: &PhaseState, params: &SystemParams) -> Result<f64> {
    let d = equations_of_motion(state, params)?;
    Ok((state.x1 * d[0] + state.x2 * d[1]) / state.checked_r()?)
}

/// `dtheta/dt = (x1 x2' - x2 x1') / r^2`.
pub fn angular_velocity(state: &PhaseState, params: &SystemParams) -> Result<f64> {
    let d = equations_of_motion(state, params)?;
    Ok((state.x1 * d[1] - state.x2 * d[0]) / state.r_squared())
}
