use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    extended_quantities, poisson_bracket, AngularMomentum, BracketMode, BracketOf, Hamiltonian,
    ObservableRef, Product,
};
use crate::dynamics::{
    hamiltonian, OrbitShape, PhaseState, SystemKind, SystemParams, Trajectory, TurningKind,
};
use crate::error::{Error, Result};

pub const DEFAULT_SEED: u64 = 0x5eed_2024;

const R_MIN: f64 = 0.3;
const R_MAX: f64 = 3.0;
const P_MAX: f64 = 2.0;

/// Seeded states with `x` uniform (by area) in the annulus `0.3 <= r <= 3`
/// and `p` uniform in `[-2, 2]^2`. States with `2k >= Lz^2` or a negative
/// orbit discriminant are redrawn.
pub fn sample_states(params: &SystemParams, n: usize, seed: u64) -> Result<Vec<PhaseState>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while out.len() < n {
        attempts += 1;
        if attempts > 1000 * n.max(1) {
            return Err(Error::InvalidArgument(format!(
                "could not draw {n} admissible states for k = {}",
                params.k
            )));
        }
        let r = rng.gen_range(R_MIN * R_MIN..=R_MAX * R_MAX).sqrt();
        let theta = rng.gen_range(0.0..2.0 * PI);
        let p1 = rng.gen_range(-P_MAX..=P_MAX);
        let p2 = rng.gen_range(-P_MAX..=P_MAX);
        let s = PhaseState::new(r * theta.cos(), r * theta.sin(), p1, p2);
        let admissible = OrbitShape::from_state(&s, params)
            .and_then(|shape| shape.discriminant(params))
            .is_ok();
        if admissible {
            out.push(s);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketReport {
    pub identity: String,
    pub n_samples: usize,
    pub max_abs_residual: f64,
    pub mean_abs_residual: f64,
}

impl BracketReport {
    pub fn from_residuals(identity: impl Into<String>, residuals: &[f64]) -> Self {
        let n = residuals.len();
        let max = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        let mean = if n == 0 {
            0.0
        } else {
            residuals.iter().map(|r| r.abs()).sum::<f64>() / n as f64
        };
        BracketReport {
            identity: identity.into(),
            n_samples: n,
            max_abs_residual: max,
            mean_abs_residual: mean,
        }
    }
}

type Residual = fn(&PhaseState, &SystemParams) -> Result<f64>;

fn bracket(f: &ObservableRef, g: &ObservableRef, s: &PhaseState, p: &SystemParams) -> Result<f64> {
    poisson_bracket(&**f, &**g, s, p, BracketMode::Analytic)
}

fn parts(
    s: &PhaseState,
    p: &SystemParams,
) -> Result<(ObservableRef, ObservableRef, ObservableRef, f64, f64)> {
    let [a, b] = extended_quantities(p.kind);
    Ok((a, b, Arc::new(AngularMomentum), hamiltonian(s, p)?, s.lz()))
}

/// Constant `c` in the classical quadratic identity beyond the `H` and `Lz`
/// terms: `{R'x, R'y} = (-2H + 2 lambda Lz^2 + c) Lz` for Coulomb and
/// `{Q'xy, Q'1} = -(2 + lambda (2H - lambda Lz^2) + c) Lz` for the oscillator.
/// Confirmed against [`pin_classical_constant`].
pub fn classical_constant(params: &SystemParams) -> f64 {
    match params.kind {
        SystemKind::ScreenedCoulomb => -2.0 * params.k * params.lambda(),
        SystemKind::ScreenedOscillator => 0.0,
    }
}

/// The same constant with the ordering term of the quantum relation kept.
pub fn quantum_constant(params: &SystemParams) -> f64 {
    match params.kind {
        SystemKind::ScreenedCoulomb => 0.25 * params.lambda() - 2.0 * params.k * params.lambda(),
        SystemKind::ScreenedOscillator => 0.0,
    }
}

fn quadratic_base(params: &SystemParams, energy: f64, lz: f64) -> f64 {
    let lambda = params.lambda();
    match params.kind {
        SystemKind::ScreenedCoulomb => -2.0 * energy + 2.0 * lambda * lz * lz,
        SystemKind::ScreenedOscillator => -(2.0 + lambda * (2.0 * energy - lambda * lz * lz)),
    }
}

fn coulomb_identities() -> [(&'static str, Residual); 3] {
    [
        ("{R'x, Lz} + R'y = 0", |s, p| {
            let (a, b, l, _, _) = parts(s, p)?;
            Ok(bracket(&a, &l, s, p)? + b.value(s, p)?)
        }),
        ("{R'y, Lz} - R'x = 0", |s, p| {
            let (a, b, l, _, _) = parts(s, p)?;
            Ok(bracket(&b, &l, s, p)? - a.value(s, p)?)
        }),
        (
            "{R'x, R'y} - (-2H + 2 lambda Lz^2 - 2 k lambda) Lz = 0",
            |s, p| {
                let (a, b, _, e, lz) = parts(s, p)?;
                Ok(
                    bracket(&a, &b, s, p)?
                        - (quadratic_base(p, e, lz) + classical_constant(p)) * lz,
                )
            },
        ),
    ]
}

fn oscillator_identities() -> [(&'static str, Residual); 3] {
    [
        ("{Q'xy, Lz} - 2 Q'1 = 0", |s, p| {
            let (a, b, l, _, _) = parts(s, p)?;
            Ok(bracket(&a, &l, s, p)? - 2.0 * b.value(s, p)?)
        }),
        ("{Q'1, Lz} + 2 Q'xy = 0", |s, p| {
            let (a, b, l, _, _) = parts(s, p)?;
            Ok(bracket(&b, &l, s, p)? + 2.0 * a.value(s, p)?)
        }),
        (
            "{Q'xy, Q'1} + (2 + lambda (2H - lambda Lz^2)) Lz = 0",
            |s, p| {
                let (a, b, _, e, lz) = parts(s, p)?;
                Ok(
                    bracket(&a, &b, s, p)?
                        - (quadratic_base(p, e, lz) - classical_constant(p)) * lz,
                )
            },
        ),
    ]
}

fn run_identities(
    params: &SystemParams,
    identities: &[(&'static str, Residual)],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<BracketReport>> {
    let states = sample_states(params, n_samples, seed)?;
    identities
        .iter()
        .map(|(name, f)| {
            let res = states
                .iter()
                .map(|s| f(s, params))
                .collect::<Result<Vec<_>>>()?;
            Ok(BracketReport::from_residuals(*name, &res))
        })
        .collect()
}

/// Residuals of the three classical Coulomb algebra relations.
pub fn verify_coulomb_algebra(
    params: &SystemParams,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<BracketReport>> {
    params.require(SystemKind::ScreenedCoulomb)?;
    run_identities(params, &coulomb_identities(), n_samples, seed)
}

/// Residuals of the three classical oscillator algebra relations.
pub fn verify_oscillator_algebra(
    params: &SystemParams,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<BracketReport>> {
    params.require(SystemKind::ScreenedOscillator)?;
    run_identities(params, &oscillator_identities(), n_samples, seed)
}

pub fn verify_algebra(
    params: &SystemParams,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<BracketReport>> {
    match params.kind {
        SystemKind::ScreenedCoulomb => verify_coulomb_algebra(params, n_samples, seed),
        SystemKind::ScreenedOscillator => verify_oscillator_algebra(params, n_samples, seed),
    }
}

/// The constant `c` of [`classical_constant`] measured with value-only
/// finite differences, independent of the analytic gradients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinnedConstant {
    pub n_states: usize,
    /// Mean over the states.
    pub value: f64,
    /// Largest deviation of a single state from the mean.
    pub spread: f64,
    pub classical: f64,
    pub quantum: f64,
}

pub fn pin_classical_constant(
    params: &SystemParams,
    n_states: usize,
    seed: u64,
) -> Result<PinnedConstant> {
    let oracle = BracketMode::FiniteDifference {
        step: 2e-2,
        levels: 4,
    };
    let [a, b] = extended_quantities(params.kind);
    let states: Vec<_> = sample_states(params, 50 * n_states.max(1), seed)?
        .into_iter()
        .filter(|s| s.lz().abs() > 0.5)
        .take(n_states)
        .collect();
    let mut values = Vec::with_capacity(states.len());
    for s in &states {
        let lz = s.lz();
        let e = hamiltonian(s, params)?;
        let br = poisson_bracket(&*a, &*b, s, params, oracle)?;
        let base = quadratic_base(params, e, lz);
        let c = match params.kind {
            SystemKind::ScreenedCoulomb => br / lz - base,
            SystemKind::ScreenedOscillator => base - br / lz,
        };
        values.push(c);
    }
    let n = values.len();
    let value = values.iter().sum::<f64>() / n as f64;
    let spread = values.iter().fold(0.0f64, |m, c| m.max((c - value).abs()));
    Ok(PinnedConstant {
        n_states: n,
        value,
        spread,
        classical: classical_constant(params),
        quantum: quantum_constant(params),
    })
}

/// `{f, g} + {g, f}`.
pub fn antisymmetry_residual(
    f: &ObservableRef,
    g: &ObservableRef,
    state: &PhaseState,
    params: &SystemParams,
) -> Result<f64> {
    Ok(bracket(f, g, state, params)? + bracket(g, f, state, params)?)
}

/// `{f, gh} - {f, g} h - g {f, h}`, with the left side taken by finite
/// differences of the product.
pub fn leibniz_residual(
    f: &ObservableRef,
    g: &ObservableRef,
    h: &ObservableRef,
    state: &PhaseState,
    params: &SystemParams,
) -> Result<f64> {
    let gh = Product(g.clone(), h.clone());
    let lhs = poisson_bracket(&**f, &gh, state, params, BracketMode::FD)?;
    let rhs = bracket(f, g, state, params)? * h.value(state, params)?
        + g.value(state, params)? * bracket(f, h, state, params)?;
    Ok(lhs - rhs)
}

/// `{f, {g, h}} + {g, {h, f}} + {h, {f, g}}` with the inner brackets
/// differentiated numerically.
pub fn jacobi_residual(
    f: &ObservableRef,
    g: &ObservableRef,
    h: &ObservableRef,
    state: &PhaseState,
    params: &SystemParams,
) -> Result<f64> {
    let term = |a: &ObservableRef, b: &ObservableRef, c: &ObservableRef| {
        let inner = BracketOf(b.clone(), c.clone());
        poisson_bracket(&**a, &inner, state, params, BracketMode::Analytic)
    };
    Ok(term(f, g, h)? + term(g, h, f)? + term(h, f, g)?)
}

/// Time derivatives `{Q, H}` of the two extended quantities along a
/// trajectory, split into turning points and all samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurningReport {
    pub quantities: [String; 2],
    pub n_turning: usize,
    /// Largest `|{Q, H}|` over turning points and both components.
    pub turning_max: f64,
    pub n_generic: usize,
    /// Largest `|{Q, H}|` over every trajectory sample.
    pub generic_max: f64,
    /// Components at each perihelion in the frame turning with the
    /// perihelion direction (by `theta` for Coulomb, `2 theta` for the
    /// oscillator).
    pub perihelion_values: Vec<[f64; 2]>,
    /// Largest component difference between those perihelion values.
    pub perihelion_spread: Option<f64>,
}

pub fn turning_point_conservation(traj: &Trajectory) -> Result<TurningReport> {
    let params = *traj.params();
    let points = traj.turning_points().points();
    if points.is_empty() {
        return Err(Error::NoTurningPoints);
    }
    let qs = extended_quantities(params.kind);
    let h: ObservableRef = Arc::new(Hamiltonian);
    let rate = |s: &PhaseState| -> Result<f64> {
        let a = bracket(&qs[0], &h, s, &params)?.abs();
        let b = bracket(&qs[1], &h, s, &params)?.abs();
        Ok(a.max(b))
    };

    let mut turning_max = 0.0f64;
    for tp in points {
        turning_max = turning_max.max(rate(&tp.state)?);
    }
    let mut generic_max = 0.0f64;
    for s in traj.samples() {
        generic_max = generic_max.max(rate(&s.state)?);
    }

    let turns = match params.kind {
        SystemKind::ScreenedCoulomb => 1.0,
        SystemKind::ScreenedOscillator => 2.0,
    };
    let mut perihelion_values = Vec::new();
    for tp in traj.perihelia() {
        debug_assert_eq!(tp.kind, TurningKind::Perihelion);
        let (a, b) = (
            qs[0].value(&tp.state, &params)?,
            qs[1].value(&tp.state, &params)?,
        );
        // (R'x, R'y) is a vector; (Q'1, Q'xy) rotates like one at twice the angle
        let (re, im) = match params.kind {
            SystemKind::ScreenedCoulomb => (a, b),
            SystemKind::ScreenedOscillator => (b, a),
        };
        let (sn, cs) = (-turns * tp.theta).sin_cos();
        perihelion_values.push([re * cs - im * sn, re * sn + im * cs]);
    }
    let perihelion_spread = (perihelion_values.len() >= 2).then(|| {
        let first = perihelion_values[0];
        perihelion_values
            .iter()
            .map(|v| (v[0] - first[0]).abs().max((v[1] - first[1]).abs()))
            .fold(0.0, f64::max)
    });

    Ok(TurningReport {
        quantities: [qs[0].name(), qs[1].name()],
        n_turning: points.len(),
        turning_max,
        n_generic: traj.samples().len(),
        generic_max,
        perihelion_values,
        perihelion_spread,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conserved::{registry, runge_lenz, Coordinate};
    use crate::dynamics::integrate;

    #[test]
    fn sampling_is_seeded_and_admissible() {
        let params = SystemParams::coulomb(0.1, 0.4).unwrap();
        let a = sample_states(&params, 50, 3).unwrap();
        assert_eq!(a, sample_states(&params, 50, 3).unwrap());
        assert_ne!(a, sample_states(&params, 50, 4).unwrap());
        for s in &a {
            assert!((0.3..=3.0).contains(&s.r()));
            assert!(s.lz() * s.lz() > 0.8);
            assert!(s.p1.abs() <= 2.0 && s.p2.abs() <= 2.0);
        }
    }

    #[test]
    fn flat_algebras_hold() {
        for params in [
            SystemParams::coulomb(0.0, 0.0).unwrap(),
            SystemParams::oscillator(0.0, 0.0).unwrap(),
        ] {
            for rep in verify_algebra(&params, 500, DEFAULT_SEED).unwrap() {
                assert!(rep.max_abs_residual < 1e-9, "{rep:?}");
            }
        }
    }

    #[test]
    fn screened_algebras_hold() {
        for params in [
            SystemParams::coulomb(0.1, 0.05).unwrap(),
            SystemParams::oscillator(0.1, 0.05).unwrap(),
        ] {
            let reps = verify_algebra(&params, 1000, DEFAULT_SEED).unwrap();
            assert_eq!(reps.len(), 3);
            assert!(reps[0].max_abs_residual < 1e-9, "{:?}", reps[0]);
            assert!(reps[1].max_abs_residual < 1e-9, "{:?}", reps[1]);
            assert!(reps[2].max_abs_residual < 1e-7, "{:?}", reps[2]);
            assert_eq!(reps[2].n_samples, 1000);
        }
    }

    #[test]
    fn wrong_kind_rejected() {
        let osc = SystemParams::oscillator(0.1, 0.05).unwrap();
        assert!(verify_coulomb_algebra(&osc, 10, 1).is_err());
    }

    #[test]
    fn oracle_pins_classical_constant() {
        for (lambda, k) in [(0.1, 0.05), (0.4, 0.2), (1.0, 0.0)] {
            for kind in [SystemKind::ScreenedCoulomb, SystemKind::ScreenedOscillator] {
                let params = SystemParams::new(kind, lambda, k).unwrap();
                let pin = pin_classical_constant(&params, 10, 99).unwrap();
                assert_eq!(pin.n_states, 10);
                assert!(pin.spread < 1e-8, "{kind:?} {pin:?}");
                assert!((pin.value - pin.classical).abs() < 1e-8, "{kind:?} {pin:?}");
                if kind == SystemKind::ScreenedCoulomb {
                    // the ordering term is absent classically
                    assert!((pin.value - pin.quantum).abs() > 0.2 * lambda);
                }
            }
        }
    }

    #[test]
    fn antisymmetry_leibniz_jacobi() {
        for kind in [SystemKind::ScreenedCoulomb, SystemKind::ScreenedOscillator] {
            let params = SystemParams::new(kind, 0.1, 0.05).unwrap();
            let obs = registry(kind);
            let states = sample_states(&params, 40, 5).unwrap();
            for (n, s) in states.iter().enumerate() {
                let f = &obs[n % obs.len()];
                let g = &obs[(n + 3) % obs.len()];
                let h = &obs[(n + 5) % obs.len()];
                assert!(antisymmetry_residual(f, g, s, &params).unwrap().abs() < 1e-12);
                let scale = f.value(s, &params).unwrap().abs().max(1.0)
                    * g.value(s, &params).unwrap().abs().max(1.0)
                    * h.value(s, &params).unwrap().abs().max(1.0);
                let lb = leibniz_residual(f, g, h, s, &params).unwrap();
                assert!(
                    lb.abs() < 1e-8 * scale,
                    "{} {} {}: {lb:e}",
                    f.name(),
                    g.name(),
                    h.name()
                );
            }
            let [a, b] = extended_quantities(kind);
            let l: ObservableRef = Arc::new(AngularMomentum);
            for s in &states {
                let j = jacobi_residual(&l, &a, &b, s, &params).unwrap();
                assert!(j.abs() < 1e-6, "{j:e}");
            }
        }
    }

    #[test]
    fn jacobi_on_canonical_products() {
        let params = SystemParams::coulomb(0.0, 0.0).unwrap();
        let s = PhaseState::new(0.7, 0.2, 0.3, -0.5);
        let x: ObservableRef = Arc::new(Coordinate(0));
        let p: ObservableRef = Arc::new(Coordinate(2));
        let xp: ObservableRef = Arc::new(Product(x.clone(), p.clone()));
        assert!(jacobi_residual(&x, &p, &xp, &s, &params).unwrap().abs() < 1e-8);
    }

    #[test]
    fn turning_points_conserve_screened_vector() {
        let params = SystemParams::coulomb(0.1, 0.05).unwrap();
        let s0 = PhaseState::new(1.0, 0.0, 0.2, 0.9);
        let traj = integrate(s0, params, 60.0, 1e-11).unwrap();
        let rep = turning_point_conservation(&traj).unwrap();
        assert!(rep.n_turning >= 4, "{rep:?}");
        assert!(rep.turning_max < 1e-7, "{rep:?}");
        assert!(rep.generic_max > 1e-3, "{rep:?}");
        assert!(rep.perihelion_spread.unwrap() < 1e-7, "{rep:?}");

        let osc = SystemParams::oscillator(0.1, 0.05).unwrap();
        let traj = integrate(s0, osc, 30.0, 1e-11).unwrap();
        let rep = turning_point_conservation(&traj).unwrap();
        assert!(rep.turning_max < 1e-7, "{rep:?}");
        assert!(rep.generic_max > 1e-3, "{rep:?}");
        assert!(rep.perihelion_spread.unwrap() < 1e-7, "{rep:?}");
    }

    #[test]
    fn unscreened_vector_conserved_everywhere() {
        for params in [
            SystemParams::coulomb(0.1, 0.0).unwrap(),
            SystemParams::oscillator(0.1, 0.0).unwrap(),
        ] {
            let traj = integrate(PhaseState::new(1.0, 0.0, 0.2, 0.9), params, 30.0, 1e-10).unwrap();
            let rep = turning_point_conservation(&traj).unwrap();
            assert!(rep.generic_max < 1e-9, "{rep:?}");
        }
    }

    #[test]
    fn flat_kepler_vector_is_eccentricity() {
        let params = SystemParams::coulomb(0.0, 0.0).unwrap();
        let s0 = PhaseState::new(1.0, 0.0, 0.3, 0.8);
        let e0 = hamiltonian(&s0, &params).unwrap();
        let ecc = (1.0 + 2.0 * e0 * s0.lz() * s0.lz()).sqrt();
        let traj = integrate(s0, params, 20.0, 1e-11).unwrap();
        for s in traj.samples() {
            let (rx, ry) = runge_lenz(&s.state, &params).unwrap();
            assert!((rx.hypot(ry) - ecc).abs() < 1e-9);
        }
    }

    #[test]
    fn circular_orbit_has_no_turning_points() {
        let params = SystemParams::coulomb(0.0, 0.0).unwrap();
        let traj = integrate(PhaseState::new(1.0, 0.0, 0.0, 1.0), params, 5.0, 1e-10).unwrap();
        assert!(matches!(
            turning_point_conservation(&traj),
            Err(Error::NoTurningPoints)
        ));
    }

    #[test]
    fn report_serializes_with_expected_fields() {
        let rep = BracketReport::from_residuals("x", &[1e-12, -3e-12]);
        let v = serde_json::to_value(&rep).unwrap();
        assert_eq!(v["identity"], "x");
        assert_eq!(v["n_samples"], 2);
        assert_eq!(v["max_abs_residual"], 3e-12);
        assert_eq!(v["mean_abs_residual"], 2e-12);
    }
}
