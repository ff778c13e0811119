//! Extended Runge–Lenz (Coulomb) and quadrupole (oscillator) quantities and a
//! Poisson bracket engine over gnomonic phase space.
//!
//! Quantum commutators map to classical brackets via `[A, B] <-> i {A, B}`
//! with `hbar = 1`. Symmetrized operator products become plain products.

mod checks;

pub use checks::{
    antisymmetry_residual, classical_constant, jacobi_residual, leibniz_residual,
    pin_classical_constant, quantum_constant, sample_states, turning_point_conservation,
    verify_algebra, verify_coulomb_algebra, verify_oscillator_algebra, BracketReport,
    PinnedConstant, TurningReport, DEFAULT_SEED,
};

use std::sync::Arc;

use crate::dynamics::SystemParams;
use crate::dynamics::{hamiltonian, hamiltonian_gradient, pi_vector, PhaseState, SystemKind};
use crate::error::Result;

/// A phase-space function with an analytic gradient ordered
/// `(d/dx1, d/dx2, d/dp1, d/dp2)`.
pub trait Observable: Send + Sync {
    fn name(&self) -> String;
    fn value(&self, state: &PhaseState, params: &SystemParams) -> Result<f64>;
    fn gradient(&self, state: &PhaseState, params: &SystemParams) -> Result<[f64; 4]>;
}

pub type ObservableRef = Arc<dyn Observable>;

/// `Lz = x1 p2 - x2 p1`.
pub fn angular_momentum(state: &PhaseState) -> f64 {
    state.lz()
}

/// `(R'_x, R'_y)` with `R'_x = pi_y Lz - (1 + 2k/r) x/r` and
/// `R'_y = -pi_x Lz - (1 + 2k/r) y/r`.
pub fn runge_lenz(state: &PhaseState, params: &SystemParams) -> Result<(f64, f64)> {
    params.require(SystemKind::ScreenedCoulomb)?;
    let r = state.checked_r()?;
    let (pi1, pi2) = pi_vector(state, params.curvature);
    let lz = state.lz();
    let h = (1.0 + 2.0 * params.k / r) / r;
    Ok((pi2 * lz - h * state.x1, -pi1 * lz - h * state.x2))
}

/// `(Q'_xy, Q'_1)` with `Q'_xy = (1 + 2k/r^4) x y + pi_x pi_y` and
/// `Q'_1 = [(1 + 2k/r^4)(x^2 - y^2) + pi_x^2 - pi_y^2] / 2`.
pub fn fradkin_quantities(state: &PhaseState, params: &SystemParams) -> Result<(f64, f64)> {
    params.require(SystemKind::ScreenedOscillator)?;
    let r = state.checked_r()?;
    let (pi1, pi2) = pi_vector(state, params.curvature);
    let PhaseState { x1, x2, .. } = *state;
    let u = 1.0 + 2.0 * params.k / r.powi(4);
    Ok((
        u * x1 * x2 + pi1 * pi2,
        0.5 * (u * (x1 * x1 - x2 * x2) + pi1 * pi1 - pi2 * pi2),
    ))
}

/// Rows `d(pi_1)` and `d(pi_2)`.
fn pi_jacobian(state: &PhaseState, lambda: f64) -> ([f64; 4], [f64; 4]) {
    let PhaseState { x1, x2, p1, p2 } = *state;
    let w = state.x_dot_p();
    (
        [
            lambda * (w + x1 * p1),
            lambda * x1 * p2,
            1.0 + lambda * x1 * x1,
            lambda * x1 * x2,
        ],
        [
            lambda * x2 * p1,
            lambda * (w + x2 * p2),
            lambda * x1 * x2,
            1.0 + lambda * x2 * x2,
        ],
    )
}

fn lz_gradient(state: &PhaseState) -> [f64; 4] {
    [state.p2, -state.p1, -state.x2, state.x1]
}

/// Canonical coordinate by index: 0 `x1`, 1 `x2`, 2 `p1`, 3 `p2`.
#[derive(Debug, Clone, Copy)]
pub struct Coordinate(pub usize);

impl Observable for Coordinate {
    fn name(&self) -> String {
        ["x1", "x2", "p1", "p2"][self.0].to_string()
    }

    fn value(&self, state: &PhaseState, _: &SystemParams) -> Result<f64> {
        Ok(state.to_array()[self.0])
    }

    fn gradient(&self, _: &PhaseState, _: &SystemParams) -> Result<[f64; 4]> {
        let mut g = [0.0; 4];
        g[self.0] = 1.0;
        Ok(g)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AngularMomentum;

impl Observable for AngularMomentum {
    fn name(&self) -> String {
        "Lz".into()
    }

    fn value(&self, state: &PhaseState, _: &SystemParams) -> Result<f64> {
        Ok(state.lz())
    }

    fn gradient(&self, state: &PhaseState, _: &SystemParams) -> Result<[f64; 4]> {
        Ok(lz_gradient(state))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Hamiltonian;

impl Observable for Hamiltonian {
    fn name(&self) -> String {
        "H".into()
    }

    fn value(&self, state: &PhaseState, params: &SystemParams) -> Result<f64> {
        hamiltonian(state, params)
    }

    fn gradient(&self, state: &PhaseState, params: &SystemParams) -> Result<[f64; 4]> {
        hamiltonian_gradient(state, params)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// One component of the extended Runge–Lenz vector.
#[derive(Debug, Clone, Copy)]
pub struct RungeLenz(pub Axis);

impl Observable for RungeLenz {
    fn name(&self) -> String {
        match self.0 {
            Axis::X => "R'x".into(),
            Axis::Y => "R'y".into(),
        }
    }

    fn value(&self, state: &PhaseState, params: &SystemParams) -> Result<f64> {
        let (rx, ry) = runge_lenz(state, params)?;
        Ok(match self.0 {
            Axis::X => rx,
            Axis::Y => ry,
        })
    }

    fn gradient(&self, state: &PhaseState, params: &SystemParams) -> Result<[f64; 4]> {
        params.require(SystemKind::ScreenedCoulomb)?;
        let r = state.checked_r()?;
        let k = params.k;
        let (pi1, pi2) = pi_vector(state, params.curvature);
        let (d1, d2) = pi_jacobian(state, params.lambda());
        let lz = state.lz();
        let dl = lz_gradient(state);
        let h = (1.0 + 2.0 * k / r) / r;
        let dh = -1.0 / (r * r) - 4.0 * k / r.powi(3);
        let PhaseState { x1, x2, .. } = *state;
        // R'x = pi2 L - h x1 ; R'y = -pi1 L - h x2
        let (pi, dpi, sign, xi, i) = match self.0 {
            Axis::X => (pi2, d2, 1.0, x1, 0),
            Axis::Y => (pi1, d1, -1.0, x2, 1),
        };
        let x = [x1, x2];
        let mut g = [0.0; 4];
        for j in 0..4 {
            g[j] = sign * (dpi[j] * lz + pi * dl[j]);
        }
        for j in 0..2 {
            let delta = if i == j { h } else { 0.0 };
            g[j] -= delta + dh * xi * x[j] / r;
        }
        Ok(g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrupole {
    /// `Q'_xy`
    Xy,
    /// `Q'_1`
    Diagonal,
}

/// One component of the oscillator quadrupole tensor.
#[derive(Debug, Clone, Copy)]
pub struct Fradkin(pub Quadrupole);

impl Observable for Fradkin {
    fn name(&self) -> String {
        match self.0 {
            Quadrupole::Xy => "Q'xy".into(),
            Quadrupole::Diagonal => "Q'1".into(),
        }
    }

    fn value(&self, state: &PhaseState, params: &SystemParams) -> Result<f64> {
        let (qxy, q1) = fradkin_quantities(state, params)?;
        Ok(match self.0 {
            Quadrupole::Xy => qxy,
            Quadrupole::Diagonal => q1,
        })
    }

    fn gradient(&self, state: &PhaseState, params: &SystemParams) -> Result<[f64; 4]> {
        params.require(SystemKind::ScreenedOscillator)?;
        let r = state.checked_r()?;
        let k = params.k;
        let (pi1, pi2) = pi_vector(state, params.curvature);
        let (d1, d2) = pi_jacobian(state, params.lambda());
        let PhaseState { x1, x2, .. } = *state;
        let u = 1.0 + 2.0 * k / r.powi(4);
        let du = -8.0 * k / r.powi(5);
        let mut g = [0.0; 4];
        match self.0 {
            Quadrupole::Xy => {
                let m = x1 * x2;
                g[0] = du * x1 / r * m + u * x2;
                g[1] = du * x2 / r * m + u * x1;
                for j in 0..4 {
                    g[j] += d1[j] * pi2 + pi1 * d2[j];
                }
            }
            Quadrupole::Diagonal => {
                let m = 0.5 * (x1 * x1 - x2 * x2);
                g[0] = du * x1 / r * m + u * x1;
                g[1] = du * x2 / r * m - u * x2;
                for j in 0..4 {
                    g[j] += pi1 * d1[j] - pi2 * d2[j];
                }
            }
        }
        Ok(g)
    }
}

/// Pointwise product, with the product-rule gradient.
#[derive(Clone)]
pub struct Product(pub ObservableRef, pub ObservableRef);

impl Observable for Product {
    fn name(&self) -> String {
        format!("({})*({})", self.0.name(), self.1.name())
    }

    fn value(&self, state: &PhaseState, params: &SystemParams) -> Result<f64> {
        Ok(self.0.value(state, params)? * self.1.value(state, params)?)
    }

    fn gradient(&self, state: &PhaseState, params: &SystemParams) -> Result<[f64; 4]> {
        let (a, b) = (self.0.value(state, params)?, self.1.value(state, params)?);
        let (ga, gb) = (
            self.0.gradient(state, params)?,
            self.1.gradient(state, params)?,
        );
        Ok(std::array::from_fn(|i| ga[i] * b + a * gb[i]))
    }
}

/// The bracket `{f, g}` as an observable in its own right. Its gradient is
/// taken by extrapolated central differences, so nesting it gives an
/// independent check of identities such as Jacobi's.
#[derive(Clone)]
pub struct BracketOf(pub ObservableRef, pub ObservableRef);

impl Observable for BracketOf {
    fn name(&self) -> String {
        format!("{{{}, {}}}", self.0.name(), self.1.name())
    }

    fn value(&self, state: &PhaseState, params: &SystemParams) -> Result<f64> {
        poisson_bracket(&*self.0, &*self.1, state, params, BracketMode::Analytic)
    }

    fn gradient(&self, state: &PhaseState, params: &SystemParams) -> Result<[f64; 4]> {
        fd_gradient(self, state, params, FD_STEP, 2)
    }
}

/// The observables of the registry, by name.
pub fn registry(kind: SystemKind) -> Vec<ObservableRef> {
    let mut v: Vec<ObservableRef> = vec![
        Arc::new(Coordinate(0)),
        Arc::new(Coordinate(1)),
        Arc::new(Coordinate(2)),
        Arc::new(Coordinate(3)),
        Arc::new(AngularMomentum),
        Arc::new(Hamiltonian),
    ];
    v.extend(extended_quantities(kind));
    v
}

/// `[R'x, R'y]` or `[Q'xy, Q'1]`.
pub fn extended_quantities(kind: SystemKind) -> [ObservableRef; 2] {
    match kind {
        SystemKind::ScreenedCoulomb => [Arc::new(RungeLenz(Axis::X)), Arc::new(RungeLenz(Axis::Y))],
        SystemKind::ScreenedOscillator => [
            Arc::new(Fradkin(Quadrupole::Xy)),
            Arc::new(Fradkin(Quadrupole::Diagonal)),
        ],
    }
}

/// Base step of the finite-difference gradient, scaled by `max(1, |z_i|)`.
pub const FD_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BracketMode {
    Analytic,
    /// Central differences with `levels` rounds of Richardson
    /// extrapolation (`levels = 0` is the plain central difference).
    FiniteDifference {
        step: f64,
        levels: usize,
    },
}

impl BracketMode {
    pub const FD: BracketMode = BracketMode::FiniteDifference {
        step: FD_STEP,
        levels: 2,
    };
}

/// Gradient of `f` from values alone. Each level halves the step and
/// removes the next even power of it from the error.
pub fn fd_gradient<O: Observable + ?Sized>(
    f: &O,
    state: &PhaseState,
    params: &SystemParams,
    step: f64,
    levels: usize,
) -> Result<[f64; 4]> {
    let z = state.to_array();
    let mut g = [0.0; 4];
    for i in 0..4 {
        let h0 = step * z[i].abs().max(1.0);
        let mut table = Vec::with_capacity(levels + 1);
        for l in 0..=levels {
            let h = h0 / f64::from(1u32 << l);
            let (mut zp, mut zm) = (z, z);
            zp[i] += h;
            zm[i] -= h;
            let fp = f.value(&PhaseState::from_array(zp), params)?;
            let fm = f.value(&PhaseState::from_array(zm), params)?;
            table.push((fp - fm) / (2.0 * h));
        }
        for l in 1..=levels {
            let factor = 4f64.powi(l as i32);
            for j in (l..=levels).rev() {
                table[j] = (factor * table[j] - table[j - 1]) / (factor - 1.0);
            }
        }
        g[i] = table[levels];
    }
    Ok(g)
}

fn gradient_in<O: Observable + ?Sized>(
    f: &O,
    state: &PhaseState,
    params: &SystemParams,
    mode: BracketMode,
) -> Result<[f64; 4]> {
    match mode {
        BracketMode::Analytic => f.gradient(state, params),
        BracketMode::FiniteDifference { step, levels } => {
            fd_gradient(f, state, params, step, levels)
        }
    }
}

/// `{f, g} = sum_i (df/dx_i dg/dp_i - df/dp_i dg/dx_i)`.
pub fn poisson_bracket<F, G>(
    f: &F,
    g: &G,
    state: &PhaseState,
    params: &SystemParams,
    mode: BracketMode,
) -> Result<f64>
where
    F: Observable + ?Sized,
    G: Observable + ?Sized,
{
    state.checked_r()?;
    let a = gradient_in(f, state, params, mode)?;
    let b = gradient_in(g, state, params, mode)?;
    Ok(a[0] * b[2] + a[1] * b[3] - a[2] * b[0] - a[3] * b[1])
}
