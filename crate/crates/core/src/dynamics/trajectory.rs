use std::io::Write;

use serde::{Deserialize, Serialize};

use super::integrator::{make_sample, unwrap_from, IntegratorOptions, Stepper};
use super::{radial_velocity, PhaseState, SystemParams};
use crate::error::{Error, Result};
use crate::numeric::{brent, fmt17};

pub const TRAJECTORY_CSV_HEADER: &str = "t,x1,x2,p1,p2,r,theta,H,Lz";

/// |rdot| bound for a refined turning point.
const TURNING_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub state: PhaseState,
    pub r: f64,
    /// Unwrapped (cumulative) azimuth.
    pub theta: f64,
    #[serde(rename = "H")]
    pub energy: f64,
    #[serde(rename = "Lz")]
    pub lz: f64,
}

/// Continuous extension of one accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseSegment {
    pub t0: f64,
    pub h: f64,
    pub theta0: f64,
    pub coeffs: [[f64; 4]; 5],
}

impl DenseSegment {
    pub fn eval(&self, t: f64) -> PhaseState {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        let c = &self.coeffs;
        let mut y = [0.0; 4];
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = c[0][i] + s * (c[1][i] + s1 * (c[2][i] + s * (c[3][i] + s1 * c[4][i])));
        }
        PhaseState::from_array(y)
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t0 && t <= self.t0 + self.h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TurningKind {
    Aphelion,
    Perihelion,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurningPoint {
    pub t: f64,
    pub state: PhaseState,
    pub r: f64,
    pub theta: f64,
    pub kind: TurningKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TurningPoints {
    /// `rdot` vanishes identically along the record.
    Circular,
    Points(Vec<TurningPoint>),
}

impl TurningPoints {
    pub fn points(&self) -> &[TurningPoint] {
        match self {
            TurningPoints::Circular => &[],
            TurningPoints::Points(p) => p,
        }
    }

    pub fn is_circular(&self) -> bool {
        matches!(self, TurningPoints::Circular)
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    params: SystemParams,
    opts: IntegratorOptions,
    samples: Vec<Sample>,
    segments: Vec<DenseSegment>,
    turning: TurningPoints,
}

impl Trajectory {
    pub(crate) fn new(
        params: SystemParams,
        opts: IntegratorOptions,
        samples: Vec<Sample>,
        segments: Vec<DenseSegment>,
    ) -> Self {
        Trajectory {
            params,
            opts,
            samples,
            segments,
            turning: TurningPoints::Points(Vec::new()),
        }
    }

    pub(crate) fn set_turning_points(&mut self, tp: TurningPoints) {
        self.turning = tp;
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn rel_tol(&self) -> f64 {
        self.opts.rel_tol
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn segments(&self) -> &[DenseSegment] {
        &self.segments
    }

    pub fn turning_points(&self) -> &TurningPoints {
        &self.turning
    }

    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        self.samples
            .last()
            .expect("trajectory has at least one sample")
    }

    pub fn duration(&self) -> f64 {
        self.last().t
    }

    pub fn perihelia(&self) -> impl Iterator<Item = &TurningPoint> {
        self.turning
            .points()
            .iter()
            .filter(|p| p.kind == TurningKind::Perihelion)
    }

    pub fn aphelia(&self) -> impl Iterator<Item = &TurningPoint> {
        self.turning
            .points()
            .iter()
            .filter(|p| p.kind == TurningKind::Aphelion)
    }

    /// Largest `|H(t) - H(0)| / max(1, |H(0)|)` over the record.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.first().energy;
        self.samples
            .iter()
            .map(|s| (s.energy - e0).abs())
            .fold(0.0, f64::max)
            / e0.abs().max(1.0)
    }

    pub fn lz_drift(&self) -> f64 {
        let l0 = self.first().lz;
        self.samples
            .iter()
            .map(|s| (s.lz - l0).abs())
            .fold(0.0, f64::max)
    }

    fn segment_index(&self, t: f64) -> Option<usize> {
        if self.segments.is_empty() || t < 0.0 || t > self.duration() {
            return None;
        }
        let idx = self.segments.partition_point(|s| s.t0 + s.h < t);
        Some(idx.min(self.segments.len() - 1))
    }

    /// Dense-output state at time `t`.
    pub fn state_at(&self, t: f64) -> Option<PhaseState> {
        self.segment_index(t).map(|i| self.segments[i].eval(t))
    }

    /// State at time `t` from a fresh Runge–Kutta step out of the enclosing
    /// segment's start; at least as accurate as the accepted step itself.
    pub fn precise_state_at(&self, t: f64) -> Result<PhaseState> {
        let i = self
            .segment_index(t)
            .ok_or_else(|| Error::InvalidArgument(format!("t = {t} outside trajectory")))?;
        self.substep(i, t)
    }

    fn substep(&self, i: usize, t: f64) -> Result<PhaseState> {
        let seg = &self.segments[i];
        let y0 = self.samples[i].state.to_array();
        let dt = t - seg.t0;
        if dt == 0.0 {
            return Ok(self.samples[i].state);
        }
        let first = self.first();
        let stepper =
            Stepper::new(&self.params, &self.opts).with_invariants(first.energy, first.lz);
        let k1 = stepper.rhs(seg.t0, &y0)?;
        Ok(PhaseState::from_array(
            stepper.advance(seg.t0, &y0, &k1, dt)?.y,
        ))
    }

    fn substep_theta(&self, i: usize, t: f64) -> Result<(PhaseState, f64)> {
        let s = self.substep(i, t)?;
        Ok((s, unwrap_from(self.samples[i].theta, &s)))
    }

    /// Time at which the unwrapped azimuth equals `theta`, if reached.
    /// Assumes `Lz != 0` so the azimuth is monotone.
    pub fn time_at_angle(&self, theta: f64) -> Option<f64> {
        let dir = self.first().lz.signum();
        let n = self.samples.len();
        let target = dir * theta;
        if n < 2 || target < dir * self.samples[0].theta || target > dir * self.samples[n - 1].theta
        {
            return None;
        }
        let j = self.samples.partition_point(|s| dir * s.theta < target);
        let idx = j.saturating_sub(1).min(n - 2);
        let seg = &self.segments[idx];
        brent(
            |t| {
                self.substep_theta(idx, t)
                    .map(|(_, th)| th - theta)
                    .unwrap_or(f64::NAN)
            },
            seg.t0,
            seg.t0 + seg.h,
            1e-15 * seg.t0.abs().max(1.0),
            0.0,
            200,
        )
    }

    pub fn state_at_angle(&self, theta: f64) -> Option<(f64, PhaseState)> {
        let t = self.time_at_angle(theta)?;
        let i = self.segment_index(t)?;
        self.substep(i, t).ok().map(|s| (t, s))
    }

    pub fn write_csv<W: Write>(&self, mut w: W, header: bool) -> Result<()> {
        if header {
            writeln!(w, "{TRAJECTORY_CSV_HEADER}")?;
        }
        for s in &self.samples {
            let fields = [
                s.t, s.state.x1, s.state.x2, s.state.p1, s.state.p2, s.r, s.theta, s.energy, s.lz,
            ];
            let line: Vec<String> = fields.iter().map(|&v| fmt17(v)).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    /// Space-separated columns, no header.
    pub fn write_gnuplot<W: Write>(&self, mut w: W) -> Result<()> {
        for s in &self.samples {
            let fields = [
                s.t, s.state.x1, s.state.x2, s.state.p1, s.state.p2, s.r, s.theta, s.energy, s.lz,
            ];
            let line: Vec<String> = fields.iter().map(|&v| fmt17(v)).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }

    /// `[{t, r, theta, kind}, ...]`
    pub fn turning_points_json(&self) -> serde_json::Value {
        let points: Vec<_> = self
            .turning
            .points()
            .iter()
            .map(|p| {
                serde_json::json!({
                    "t": p.t,
                    "r": p.r,
                    "theta": p.theta,
                    "kind": match p.kind {
                        TurningKind::Aphelion => "aphelion",
                        TurningKind::Perihelion => "perihelion",
                    },
                })
            })
            .collect();
        serde_json::Value::Array(points)
    }
}

/// Locates every `rdot = 0` crossing along the trajectory.
///
/// Sign changes of `rdot` between consecutive samples are refined with Brent's
/// method on fresh Runge–Kutta sub-steps until `|rdot| < 1e-10`.
pub fn find_turning_points(traj: &Trajectory) -> Result<TurningPoints> {
    let params = traj.params;
    let rdot: Vec<f64> = traj
        .samples
        .iter()
        .map(|s| radial_velocity(&s.state, &params))
        .collect::<Result<_>>()?;

    let speed = traj
        .samples
        .iter()
        .map(|s| {
            let d = super::equations_of_motion(&s.state, &params).unwrap_or([0.0; 4]);
            d[0].hypot(d[1])
        })
        .fold(0.0, f64::max);
    let max_rdot = rdot.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_rdot <= 1e-8 * speed.max(1.0) {
        return Ok(TurningPoints::Circular);
    }

    let classify = |before: f64, after: f64| {
        if before < 0.0 || after > 0.0 {
            TurningKind::Perihelion
        } else {
            TurningKind::Aphelion
        }
    };

    let mut points = Vec::new();
    for i in 0..traj.segments.len() {
        let (fa, fb) = (rdot[i], rdot[i + 1]);
        if i == 0 && fa == 0.0 {
            let s = &traj.samples[0];
            points.push(TurningPoint {
                t: s.t,
                state: s.state,
                r: s.r,
                theta: s.theta,
                kind: classify(0.0, fb),
            });
            continue;
        }
        if fb == 0.0 {
            let s = &traj.samples[i + 1];
            let after = rdot.get(i + 2).copied().unwrap_or(-fa);
            points.push(TurningPoint {
                t: s.t,
                state: s.state,
                r: s.r,
                theta: s.theta,
                kind: classify(fa, after),
            });
            continue;
        }
        if fa * fb > 0.0 || fa == 0.0 {
            continue;
        }
        let seg = traj.segments[i];
        let f = |t: f64| -> f64 {
            traj.substep(i, t)
                .and_then(|s| radial_velocity(&s, &params))
                .unwrap_or(f64::NAN)
        };
        let t_root = brent(f, seg.t0, seg.t0 + seg.h, 0.0, TURNING_TOL * 1e-2, 200)
            .ok_or_else(|| Error::InvalidArgument("turning point bracketing failed".into()))?;
        let (state, theta) = traj.substep_theta(i, t_root)?;
        let sample = make_sample(t_root, state, theta, &params)?;
        points.push(TurningPoint {
            t: t_root,
            state,
            r: sample.r,
            theta,
            kind: classify(fa, fb),
        });
    }
    Ok(TurningPoints::Points(points))
}
