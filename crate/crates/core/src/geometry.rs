//! Coordinate systems of the gnomonic projection.
//!
//! A sphere of radius `R = 1/sqrt(lambda)` is embedded in Euclidean space as
//! `q0^2 + q1^2 + q2^2 = 1/lambda`. Projecting from the sphere's center onto the
//! tangent plane at the north pole gives gnomonic Cartesian coordinates
//! `(x1, x2)`, with polar form `r = R tan(chi)` where `chi` is the polar angle
//! on the sphere measured from the point of tangency.
//!
//! Only the open upper hemisphere `chi < pi/2` is covered; the equator maps to
//! infinity.

use std::f64::consts::{FRAC_PI_2, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sphere curvature `lambda = 1/R^2`. Zero is the flat plane.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Curvature(f64);

impl Curvature {
    pub fn new(lambda: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::NegativeCurvature(lambda));
        }
        Ok(Curvature(lambda))
    }

    pub const fn flat() -> Self {
        Curvature(0.0)
    }

    #[inline]
    pub fn lambda(self) -> f64 {
        self.0
    }

    pub fn is_flat(self) -> bool {
        self.0 == 0.0
    }

    /// Sphere radius, or `None` for the flat plane.
    pub fn radius(self) -> Option<f64> {
        if self.is_flat() {
            None
        } else {
            Some(1.0 / self.0.sqrt())
        }
    }

    fn require_curved(self) -> Result<f64> {
        if self.is_flat() {
            Err(Error::FlatCurvature)
        } else {
            Ok(self.0)
        }
    }
}

/// Point in the tangent plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GnomonicPoint {
    pub x1: f64,
    pub x2: f64,
}

impl GnomonicPoint {
    pub fn new(x1: f64, x2: f64) -> Self {
        GnomonicPoint { x1, x2 }
    }

    pub fn from_polar(r: f64, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        GnomonicPoint {
            x1: r * c,
            x2: r * s,
        }
    }

    #[inline]
    pub fn r_squared(&self) -> f64 {
        self.x1 * self.x1 + self.x2 * self.x2
    }

    #[inline]
    pub fn r(&self) -> f64 {
        self.x1.hypot(self.x2)
    }
}

/// Point on the upper hemisphere in spherical coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    /// Polar angle from the point of tangency, in `[0, pi/2)`.
    pub chi: f64,
    /// Azimuth in `[0, 2 pi)`.
    pub theta: f64,
    pub radius: f64,
}

/// Embedded Cartesian coordinates `(q1, q2, q0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedPoint {
    pub q1: f64,
    pub q2: f64,
    pub q0: f64,
}

impl EmbeddedPoint {
    pub fn norm_squared(&self) -> f64 {
        self.q0 * self.q0 + self.q1 * self.q1 + self.q2 * self.q2
    }
}

pub fn embed(p: GnomonicPoint, c: Curvature) -> Result<EmbeddedPoint> {
    let lambda = c.require_curved()?;
    let scale = 1.0 / (1.0 + lambda * p.r_squared()).sqrt();
    Ok(EmbeddedPoint {
        q1: p.x1 * scale,
        q2: p.x2 * scale,
        q0: scale / lambda.sqrt(),
    })
}

pub fn to_spherical(p: GnomonicPoint, c: Curvature) -> Result<SpherePoint> {
    let lambda = c.require_curved()?;
    Ok(SpherePoint {
        chi: (p.r() * lambda.sqrt()).atan(),
        theta: normalize_angle(p.x2.atan2(p.x1)),
        radius: 1.0 / lambda.sqrt(),
    })
}

pub fn from_spherical(s: SpherePoint) -> Result<GnomonicPoint> {
    if !(0.0..FRAC_PI_2).contains(&s.chi) {
        return Err(Error::OutsideHemisphere(s.chi));
    }
    if !(s.radius > 0.0) || !s.radius.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "sphere radius must be positive, got {}",
            s.radius
        )));
    }
    Ok(GnomonicPoint::from_polar(s.radius * s.chi.tan(), s.theta))
}

/// Maps an angle into `[0, 2 pi)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if t >= TAU {
        0.0
    } else {
        t
    }
}
