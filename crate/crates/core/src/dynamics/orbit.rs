//! Closed-form projected orbits and their comparison with integrated ones.
//!
//! Curvature enters the projected orbit only through the shifted energy
//! `E - lambda Lz^2 / 2`, so with `u = 1/r` the screened Coulomb orbit is
//! `u = (1 + e cos(alpha (theta - theta0))) / (Lz^2 alpha^2)` and the screened
//! oscillator orbit is `1/r^2 = (E' + D cos(2 alpha (theta - theta0))) / (Lz^2 alpha^2)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::trajectory::{Trajectory, TurningKind, TurningPoints};
use super::{
    angular_velocity, hamiltonian, potential, radial_velocity, PhaseState, SystemKind, SystemParams,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitShape {
    pub energy: f64,
    pub lz: f64,
    pub alpha: f64,
    pub theta0: f64,
}

impl OrbitShape {
    /// Shape through `state` with `theta0 = 0`; checks that alpha is real and
    /// the orbit discriminant is non-negative.
    pub fn from_state(state: &PhaseState, params: &SystemParams) -> Result<Self> {
        let shape = OrbitShape {
            energy: hamiltonian(state, params)?,
            lz: state.lz(),
            alpha: params.alpha(state.lz())?,
            theta0: 0.0,
        };
        shape.discriminant(params)?;
        Ok(shape)
    }

    /// `E - lambda Lz^2 / 2`.
    pub fn shifted_energy(&self, params: &SystemParams) -> f64 {
        self.energy - 0.5 * params.lambda() * self.lz * self.lz
    }

    fn l2a2(&self) -> f64 {
        self.lz * self.lz * self.alpha * self.alpha
    }

    /// Amplitude of the cosine term: the eccentricity `e` (Coulomb) or `D`
    /// (oscillator).
    pub fn discriminant(&self, params: &SystemParams) -> Result<f64> {
        let es = self.shifted_energy(params);
        let disc = match params.kind {
            SystemKind::ScreenedCoulomb => 1.0 + 2.0 * es * self.l2a2(),
            SystemKind::ScreenedOscillator => es * es - self.l2a2(),
        };
        // round-off on circular orbits
        let disc = if disc < 0.0 && disc > -1e-12 {
            0.0
        } else {
            disc
        };
        if disc < 0.0 {
            return Err(Error::Unbound(format!(
                "negative orbit discriminant {disc:e}"
            )));
        }
        if params.kind == SystemKind::ScreenedOscillator && es <= 0.0 {
            return Err(Error::Unbound(format!(
                "oscillator needs positive shifted energy, got {es}"
            )));
        }
        Ok(disc.sqrt())
    }

    /// Azimuthal period of `r(theta)`: `2 pi / alpha` for Coulomb and
    /// `pi / alpha` for the oscillator.
    pub fn angular_period(&self, kind: SystemKind) -> f64 {
        match kind {
            SystemKind::ScreenedCoulomb => 2.0 * PI / self.alpha,
            SystemKind::ScreenedOscillator => PI / self.alpha,
        }
    }

    fn phase_rate(&self, kind: SystemKind) -> f64 {
        match kind {
            SystemKind::ScreenedCoulomb => self.alpha,
            SystemKind::ScreenedOscillator => 2.0 * self.alpha,
        }
    }
}

pub fn closed_form_radius(theta: f64, shape: &OrbitShape, params: &SystemParams) -> Result<f64> {
    radius_and_slope(theta, shape, params).map(|(r, _)| r)
}

/// `r(theta)` together with `dr/dtheta0`.
fn radius_and_slope(theta: f64, shape: &OrbitShape, params: &SystemParams) -> Result<(f64, f64)> {
    let amp = shape.discriminant(params)?;
    let nu = shape.phase_rate(params.kind);
    let (s, c) = (nu * (theta - shape.theta0)).sin_cos();
    let l2a2 = shape.l2a2();
    match params.kind {
        SystemKind::ScreenedCoulomb => {
            let u = (1.0 + amp * c) / l2a2;
            if u <= 0.0 {
                return Err(Error::Unbound(format!(
                    "closed form has negative bracket at theta = {theta}"
                )));
            }
            let du = amp * nu * s / l2a2;
            Ok((1.0 / u, -du / (u * u)))
        }
        SystemKind::ScreenedOscillator => {
            let w = (shape.shifted_energy(params) + amp * c) / l2a2;
            if w <= 0.0 {
                return Err(Error::Unbound(format!(
                    "closed form has negative bracket at theta = {theta}"
                )));
            }
            let dw = amp * nu * s / l2a2;
            Ok((w.powf(-0.5), -0.5 * w.powf(-1.5) * dw))
        }
    }
}

/// Perihelion and (if bound in the projection) aphelion radii, the roots of
/// the orbit relation with `dr/dtheta = 0`.
pub fn perihelion_radius(shape: &OrbitShape, params: &SystemParams) -> Result<(f64, Option<f64>)> {
    let amp = shape.discriminant(params)?;
    let l2a2 = shape.l2a2();
    Ok(match params.kind {
        SystemKind::ScreenedCoulomb => {
            let aph = (amp < 1.0).then(|| l2a2 / (1.0 - amp));
            (l2a2 / (1.0 + amp), aph)
        }
        SystemKind::ScreenedOscillator => {
            let es = shape.shifted_energy(params);
            let aph = (es - amp > 0.0).then(|| (l2a2 / (es - amp)).sqrt());
            ((l2a2 / (es + amp)).sqrt(), aph)
        }
    })
}

fn wrap_to_period(x: f64, period: f64) -> f64 {
    let mut y = x.rem_euclid(period);
    if y > 0.5 * period {
        y -= period;
    }
    y
}

/// Phase `theta0` of the closed form matching the trajectory.
///
/// Seeds from the first detected perihelion (or aphelion, shifted by half a
/// period) and refines by Gauss–Newton least squares over one radial period.
/// Result is reduced to `(-P/2, P/2]` with `P` the angular period.
pub fn fit_theta0(traj: &Trajectory, shape: &OrbitShape, params: &SystemParams) -> Result<f64> {
    let period = shape.angular_period(params.kind);
    let points = match traj.turning_points() {
        TurningPoints::Circular => return Ok(0.0),
        TurningPoints::Points(p) if p.is_empty() => return Err(Error::NoTurningPoints),
        TurningPoints::Points(p) => p,
    };
    let first = points[0];
    let mut theta0 = match first.kind {
        TurningKind::Perihelion => first.theta,
        TurningKind::Aphelion => first.theta - 0.5 * period,
    };
    // azimuthal window of one radial period after the first turning point
    let dir = traj.first().lz.signum();
    let window: Vec<(f64, f64)> = traj
        .samples()
        .iter()
        .filter(|s| {
            let d = dir * (s.theta - first.theta);
            (0.0..=period).contains(&d)
        })
        .map(|s| (s.theta, s.r))
        .collect();

    let mut fitted = *shape;
    for _ in 0..30 {
        fitted.theta0 = theta0;
        let mut jtj = 0.0;
        let mut jtr = 0.0;
        for &(th, r) in &window {
            let (rc, slope) = match radius_and_slope(th, &fitted, params) {
                Ok(v) => v,
                Err(_) => continue,
            };
            jtj += slope * slope;
            jtr += slope * (r - rc);
        }
        if jtj <= 0.0 {
            break;
        }
        let delta = jtr / jtj;
        theta0 += delta;
        if delta.abs() < 1e-15 * theta0.abs().max(1.0) {
            break;
        }
    }
    Ok(wrap_to_period(theta0, period))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitResidual {
    /// max |r - r_closed(theta)| / r
    pub max_closed_form_dev: f64,
    /// max |orbit relation LHS - (E - lambda Lz^2/2)| / max(1, |E - lambda Lz^2/2|)
    pub max_ode_relation_dev: f64,
    pub theta0: f64,
}

/// Compares the integrated orbit with the closed form under `params`
/// (which may deliberately differ from the trajectory's own parameters).
pub fn orbit_residual(traj: &Trajectory, params: &SystemParams) -> Result<OrbitResidual> {
    let mut shape = OrbitShape::from_state(&traj.first().state, params)?;
    shape.theta0 = fit_theta0(traj, &shape, params)?;
    let es = shape.shifted_energy(params);
    let lz = shape.lz;

    let mut max_cf = 0.0f64;
    let mut max_rel = 0.0f64;
    for s in traj.samples() {
        let dev = match closed_form_radius(s.theta, &shape, params) {
            Ok(rc) => (s.r - rc).abs() / s.r,
            Err(_) => f64::INFINITY,
        };
        max_cf = max_cf.max(dev);

        let drdtheta = radial_velocity(&s.state, params)? / angular_velocity(&s.state, params)?;
        let lhs = 0.5 * lz * lz * (drdtheta.powi(2) / s.r.powi(4) + 1.0 / (s.r * s.r))
            + potential(s.r, params)?;
        max_rel = max_rel.max((lhs - es).abs() / es.abs().max(1.0));
    }
    Ok(OrbitResidual {
        max_closed_form_dev: max_cf,
        max_ode_relation_dev: max_rel,
        theta0: shape.theta0,
    })
}

/// Flat-plane initial data tracing the same projected orbit as `state` on the
/// sphere: same position and `Lz`, radial momentum scaled by `1 + lambda r^2`
/// so `dr/dtheta` agrees. Its energy is `E - lambda Lz^2 / 2`.
pub fn flat_equivalent_state(
    state: &PhaseState,
    params: &SystemParams,
) -> Result<(PhaseState, SystemParams)> {
    let r = state.checked_r()?;
    let scale = 1.0 + params.lambda() * r * r;
    let flat = PhaseState::from_polar(r, state.theta(), state.p_r() * scale, state.lz());
    Ok((flat, params.with_lambda(0.0)?))
}

/// Largest relative difference in `r` at equal azimuth between two
/// trajectories, over the samples of `a` whose azimuth `b` also covers.
pub fn compare_projected_orbits(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    let mut worst = 0.0f64;
    let mut compared = 0usize;
    for s in a.samples() {
        let Some((_, sb)) = b.state_at_angle(s.theta) else {
            continue;
        };
        compared += 1;
        worst = worst.max((s.r - sb.r()).abs() / s.r);
    }
    if compared == 0 {
        return Err(Error::InvalidArgument(
            "trajectories share no azimuth range".into(),
        ));
    }
    Ok(worst)
}
