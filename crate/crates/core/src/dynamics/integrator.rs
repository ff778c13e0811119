//! Adaptive Dormand–Prince 5(4) integration of Hamilton's equations with
//! Hairer's continuous extension for dense output.

use std::f64::consts::PI;

use super::trajectory::{find_turning_points, DenseSegment, Sample, Trajectory};
use super::{equations_of_motion, hamiltonian, hamiltonian_gradient, radial_velocity};
use super::{PhaseState, SystemParams};
use crate::error::{Error, Result};
use crate::numeric::brent;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;
/// Largest azimuth change allowed in one step, so unwrapping stays unambiguous.
const MAX_STEP_ANGLE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    /// Integration aborts once `r` drops below this radius.
    pub r_min_guard: f64,
    /// Project every accepted step back onto the level set of `H` and `Lz`
    /// fixed by the initial state.
    pub project_invariants: bool,
}

impl IntegratorOptions {
    pub const MIN_TOL: f64 = 1e-13;
    pub const MAX_TOL: f64 = 1e-6;

    pub fn with_tolerance(rel_tol: f64) -> Result<Self> {
        if !(Self::MIN_TOL..=Self::MAX_TOL).contains(&rel_tol) {
            return Err(Error::InvalidArgument(format!(
                "relative tolerance {rel_tol:e} outside [1e-13, 1e-6]"
            )));
        }
        Ok(IntegratorOptions {
            rel_tol,
            abs_tol: rel_tol,
            max_steps: 5_000_000,
            r_min_guard: 1e-8,
            project_invariants: true,
        })
    }
}

/// When to stop integrating. Event-based conditions truncate the final step
/// so the last sample lies exactly on the event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopCondition {
    Time(f64),
    /// Stop after the azimuth has advanced by this many radians (in the
    /// direction of motion).
    AngleAdvance(f64),
    /// Stop at the n-th perihelion strictly after the start.
    Perihelia(usize),
}

pub fn integrate(
    state0: PhaseState,
    params: SystemParams,
    t_end: f64,
    rel_tol: f64,
) -> Result<Trajectory> {
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "t_end must be positive, got {t_end}"
        )));
    }
    integrate_until(
        state0,
        params,
        StopCondition::Time(t_end),
        IntegratorOptions::with_tolerance(rel_tol)?,
    )
}

pub(crate) struct Stepper<'a> {
    params: &'a SystemParams,
    opts: &'a IntegratorOptions,
    invariants: Option<(f64, f64)>,
}

pub(crate) struct Step {
    pub y0: [f64; 4],
    pub y: [f64; 4],
    pub h: f64,
    /// Stages k1, k3, k4, k5, k6, k7 (k2 does not enter the output).
    pub k: [[f64; 4]; 6],
    pub err: f64,
}

impl Step {
    pub fn k7(&self) -> [f64; 4] {
        self.k[5]
    }

    /// Hairer's continuous-extension coefficients for this step.
    pub fn dense(&self) -> [[f64; 4]; 5] {
        let [k1, k3, k4, k5, k6, k7] = &self.k;
        let h = self.h;
        let mut dense = [[0.0; 4]; 5];
        for i in 0..4 {
            let diff = self.y[i] - self.y0[i];
            let bspl = h * k1[i] - diff;
            dense[0][i] = self.y0[i];
            dense[1][i] = diff;
            dense[2][i] = bspl;
            dense[3][i] = diff - h * k7[i] - bspl;
            dense[4][i] =
                h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
        dense
    }
}

fn axpy(y: &[f64; 4], h: f64, terms: &[(f64, &[f64; 4])]) -> [f64; 4] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let s: f64 = terms.iter().map(|(c, k)| c * k[i]).sum();
        *o += h * s;
    }
    out
}

impl<'a> Stepper<'a> {
    pub(crate) fn new(params: &'a SystemParams, opts: &'a IntegratorOptions) -> Self {
        Stepper {
            params,
            opts,
            invariants: None,
        }
    }

    /// Enables projection onto `H = energy`, `Lz = lz` in [`Stepper::advance`]
    /// when the options ask for it.
    pub(crate) fn with_invariants(mut self, energy: f64, lz: f64) -> Self {
        if self.opts.project_invariants {
            self.invariants = Some((energy, lz));
        }
        self
    }

    /// One step followed by the optional invariant projection.
    pub(crate) fn advance(&self, t: f64, y: &[f64; 4], k1: &[f64; 4], h: f64) -> Result<Step> {
        let mut step = self.step(t, y, k1, h)?;
        if let Some((energy, lz)) = self.invariants {
            self.project(t, &mut step, energy, lz)?;
        }
        Ok(step)
    }

    pub(crate) fn rhs(&self, t: f64, y: &[f64; 4]) -> Result<[f64; 4]> {
        let s = PhaseState::from_array(*y);
        let r = s.r();
        if !(r >= self.opts.r_min_guard) {
            return Err(Error::SingularOrbit { t, r });
        }
        equations_of_motion(&s, self.params)
    }

    fn scale(&self, a: f64, b: f64) -> f64 {
        self.opts.abs_tol + self.opts.rel_tol * a.abs().max(b.abs())
    }

    /// One DP5 step of size `h` from `y` where `k1 = f(y)`.
    pub(crate) fn step(&self, t: f64, y: &[f64; 4], k1: &[f64; 4], h: f64) -> Result<Step> {
        let k2 = self.rhs(t + C2 * h, &axpy(y, h, &[(A21, k1)]))?;
        let k3 = self.rhs(t + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]))?;
        let k4 = self.rhs(
            t + C4 * h,
            &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]),
        )?;
        let k5 = self.rhs(
            t + C5 * h,
            &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        )?;
        let k6 = self.rhs(
            t + h,
            &axpy(
                y,
                h,
                &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        )?;
        let y_new = axpy(
            y,
            h,
            &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let k7 = self.rhs(t + h, &y_new)?;

        let mut err_sq = 0.0;
        for i in 0..4 {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sk = self.scale(y[i], y_new[i]);
            err_sq += (e / sk).powi(2);
        }

        Ok(Step {
            y0: *y,
            y: y_new,
            h,
            k: [*k1, k3, k4, k5, k6, k7],
            err: (err_sq / 4.0).sqrt(),
        })
    }

    /// Replaces the step end by its projection onto the invariant level set
    /// `H = energy`, `Lz = lz`.
    pub(crate) fn project(&self, t: f64, step: &mut Step, energy: f64, lz: f64) -> Result<()> {
        let mut y = step.y;
        for _ in 0..4 {
            let s = PhaseState::from_array(y);
            let c = [hamiltonian(&s, self.params)? - energy, s.lz() - lz];
            if c[0].abs() <= 1e-16 * energy.abs().max(1.0)
                && c[1].abs() <= 1e-16 * lz.abs().max(1.0)
            {
                break;
            }
            let gh = hamiltonian_gradient(&s, self.params)?;
            let gl = [y[3], -y[2], -y[1], y[0]];
            let dot = |a: &[f64; 4], b: &[f64; 4]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
            let (a11, a12, a22) = (dot(&gh, &gh), dot(&gh, &gl), dot(&gl, &gl));
            let det = a11 * a22 - a12 * a12;
            // grad H and grad Lz are parallel on circular orbits, where the
            // level set degenerates and the projection is ill-posed
            if det <= 1e-10 * a11 * a22 {
                break;
            }
            let mu0 = (a22 * c[0] - a12 * c[1]) / det;
            let mu1 = (a11 * c[1] - a12 * c[0]) / det;
            for i in 0..4 {
                y[i] -= mu0 * gh[i] + mu1 * gl[i];
            }
        }
        step.y = y;
        step.k[5] = self.rhs(t + step.h, &y)?;
        Ok(())
    }

    fn initial_step(&self, t: f64, y: &[f64; 4], f0: &[f64; 4]) -> Result<f64> {
        let mut dnf = 0.0;
        let mut dny = 0.0;
        for i in 0..4 {
            let sk = self.scale(y[i], y[i]);
            dnf += (f0[i] / sk).powi(2);
            dny += (y[i] / sk).powi(2);
        }
        let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
            1e-6
        } else {
            (dny / dnf).sqrt() * 0.01
        };
        let y1 = axpy(y, h, &[(1.0, f0)]);
        let f1 = self.rhs(t + h, &y1)?;
        let mut der2 = 0.0;
        for i in 0..4 {
            let sk = self.scale(y[i], y[i]);
            der2 += ((f1[i] - f0[i]) / sk).powi(2);
        }
        let der12 = (der2.sqrt() / h).max(dnf.sqrt());
        let h1 = if der12 <= 1e-15 {
            (h * 1e-3).max(1e-6)
        } else {
            (0.01 / der12).powf(0.2)
        };
        h = (100.0 * h).min(h1);
        Ok(h)
    }
}

fn wrap_angle(d: f64) -> f64 {
    let mut d = d % (2.0 * PI);
    if d > PI {
        d -= 2.0 * PI;
    } else if d <= -PI {
        d += 2.0 * PI;
    }
    d
}

pub(crate) fn unwrap_from(theta_prev: f64, state: &PhaseState) -> f64 {
    theta_prev + wrap_angle(state.theta() - theta_prev)
}

pub(crate) fn make_sample(
    t: f64,
    state: PhaseState,
    theta: f64,
    params: &SystemParams,
) -> Result<Sample> {
    Ok(Sample {
        t,
        state,
        r: state.r(),
        theta,
        energy: super::hamiltonian(&state, params)?,
        lz: state.lz(),
    })
}

pub fn integrate_until(
    state0: PhaseState,
    params: SystemParams,
    stop: StopCondition,
    opts: IntegratorOptions,
) -> Result<Trajectory> {
    state0.checked_r()?;
    match stop {
        StopCondition::Time(t) if !(t > 0.0 && t.is_finite()) => {
            return Err(Error::InvalidArgument(format!(
                "t_end must be positive, got {t}"
            )))
        }
        StopCondition::AngleAdvance(a) if !(a > 0.0 && a.is_finite()) => {
            return Err(Error::InvalidArgument(format!(
                "angle advance must be positive, got {a}"
            )))
        }
        StopCondition::Perihelia(0) => {
            return Err(Error::InvalidArgument(
                "perihelion count must be >= 1".into(),
            ))
        }
        _ => {}
    }

    let stepper =
        Stepper::new(&params, &opts).with_invariants(hamiltonian(&state0, &params)?, state0.lz());
    let mut t = 0.0;
    let mut y = state0.to_array();
    let mut k1 = stepper.rhs(t, &y)?;
    let mut h = stepper.initial_step(t, &y, &k1)?;
    if let StopCondition::Time(t_end) = stop {
        h = h.min(t_end);
    }

    let theta0 = state0.theta();
    let direction = if state0.lz() >= 0.0 { 1.0 } else { -1.0 };
    let mut samples = vec![make_sample(t, state0, theta0, &params)?];
    let mut segments = Vec::new();
    let mut fac_old: f64 = 1e-4;
    let mut perihelia = 0usize;
    let mut rdot_prev = radial_velocity(&state0, &params)?;
    let mut rejected_last = false;
    let mut finished = false;

    for _ in 0..opts.max_steps {
        if h.abs() < 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepSizeUnderflow { t, h });
        }
        let mut step = stepper.step(t, &y, &k1, h)?;
        let theta_prev = samples.last().map(|s| s.theta).unwrap_or(theta0);
        let dtheta = wrap_angle(PhaseState::from_array(step.y).theta() - theta_prev);

        let fac11 = step.err.powf(0.2 - BETA * 0.75);
        if !step.err.is_finite() || step.err > 1.0 {
            let shrink = if step.err.is_finite() {
                (fac11 / SAFETY).clamp(1.0, 1.0 / FAC_MIN)
            } else {
                1.0 / FAC_MIN
            };
            h /= shrink;
            rejected_last = true;
            continue;
        }
        if dtheta.abs() > MAX_STEP_ANGLE {
            h *= 0.5;
            rejected_last = true;
            continue;
        }

        // accepted; check the stop event inside this step
        if let Some((energy, lz)) = stepper.invariants {
            stepper.project(t, &mut step, energy, lz)?;
        }
        let new_state = PhaseState::from_array(step.y);
        let t_new = t + h;
        let theta_new = unwrap_from(theta_prev, &new_state);
        let rdot_new = radial_velocity(&new_state, &params)?;
        let event = match stop {
            StopCondition::Time(t_end) => {
                if t_new >= t_end * (1.0 - 1e-15) {
                    Some(None)
                } else {
                    None
                }
            }
            StopCondition::AngleAdvance(advance) => {
                let target = theta0 + direction * advance;
                if direction * (theta_new - target) >= 0.0 {
                    Some(Some(EventKind::Angle(target)))
                } else {
                    None
                }
            }
            StopCondition::Perihelia(n) => {
                if rdot_prev < 0.0 && rdot_new >= 0.0 && perihelia + 1 == n {
                    Some(Some(EventKind::Perihelion))
                } else {
                    if rdot_prev < 0.0 && rdot_new >= 0.0 {
                        perihelia += 1;
                    }
                    None
                }
            }
        };

        match event {
            None => {
                segments.push(DenseSegment {
                    t0: t,
                    h,
                    theta0: theta_prev,
                    coeffs: step.dense(),
                });
                t = t_new;
                y = step.y;
                k1 = step.k7();
                samples.push(make_sample(t, new_state, theta_new, &params)?);
                rdot_prev = rdot_new;
            }
            Some(kind) => {
                let (h_final, final_step) = match kind {
                    None => (h, step),
                    Some(kind) => {
                        let g = |tau: f64| -> f64 {
                            match stepper.advance(t, &y, &k1, tau) {
                                Ok(s) => {
                                    let st = PhaseState::from_array(s.y);
                                    match kind {
                                        EventKind::Angle(target) => {
                                            unwrap_from(theta_prev, &st) - target
                                        }
                                        EventKind::Perihelion => {
                                            radial_velocity(&st, &params).unwrap_or(f64::NAN)
                                        }
                                    }
                                }
                                Err(_) => f64::NAN,
                            }
                        };
                        let tau = brent(g, 0.0, h, 1e-15 * t_new.max(1.0), 0.0, 200).ok_or_else(
                            || Error::InvalidArgument("failed to bracket stop event".into()),
                        )?;
                        if tau <= 0.0 {
                            finished = true;
                            break;
                        }
                        (tau, stepper.advance(t, &y, &k1, tau)?)
                    }
                };
                let final_state = PhaseState::from_array(final_step.y);
                segments.push(DenseSegment {
                    t0: t,
                    h: h_final,
                    theta0: theta_prev,
                    coeffs: final_step.dense(),
                });
                let theta_final = unwrap_from(theta_prev, &final_state);
                t += h_final;
                samples.push(make_sample(t, final_state, theta_final, &params)?);
                finished = true;
                break;
            }
        }

        let mut fac = fac11 / fac_old.powf(BETA);
        fac = (fac / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
        let mut h_new = h / fac;
        if rejected_last {
            h_new = h_new.min(h);
        }
        fac_old = step.err.max(1e-4);
        rejected_last = false;
        h = h_new;
        if let StopCondition::Time(t_end) = stop {
            if t + h > t_end {
                h = t_end - t;
            }
        }
    }

    if !finished {
        return Err(Error::StepSizeUnderflow { t, h });
    }

    let mut traj = Trajectory::new(params, opts, samples, segments);
    let tp = find_turning_points(&traj)?;
    traj.set_turning_points(tp);
    Ok(traj)
}

#[derive(Clone, Copy)]
enum EventKind {
    Angle(f64),
    Perihelion,
}
