//! C ABI over `gnomon`.
//!
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `*_free`. Every fallible call returns a [`GnomonStatus`]; on
//! failure [`gnomon_last_error`] describes the most recent error on the
//! calling thread. Outputs are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gnomon::conserved;
use gnomon::dynamics::{self, PhaseState, SystemKind, SystemParams, Trajectory};
use gnomon::spectra;
use gnomon::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GnomonStatus {
    Ok = 0,
    NullPointer,
    Panic,
    NegativeCurvature,
    FlatCurvature,
    OutsideHemisphere,
    NonpositiveRadius,
    ImaginaryAlpha,
    ImaginaryMPrime,
    SingularOrbit,
    Stiff,
    Unbound,
    NoTurningPoints,
    HypergeometricPole,
    Eigensolver,
    Resolution,
    InvalidArgument,
    WrongSystem,
    Io,
    /// The caller's buffer is too small; the required length is reported.
    BufferTooSmall,
}

impl From<&Error> for GnomonStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::NegativeCurvature(_) => GnomonStatus::NegativeCurvature,
            Error::FlatCurvature => GnomonStatus::FlatCurvature,
            Error::OutsideHemisphere(_) => GnomonStatus::OutsideHemisphere,
            Error::NonPositiveRadius(_) => GnomonStatus::NonpositiveRadius,
            Error::ImaginaryAlpha { .. } => GnomonStatus::ImaginaryAlpha,
            Error::ImaginaryMPrime { .. } => GnomonStatus::ImaginaryMPrime,
            Error::SingularOrbit { .. } => GnomonStatus::SingularOrbit,
            Error::StepSizeUnderflow { .. } => GnomonStatus::Stiff,
            Error::Unbound(_) => GnomonStatus::Unbound,
            Error::NoTurningPoints => GnomonStatus::NoTurningPoints,
            Error::HypergeometricPole { .. } => GnomonStatus::HypergeometricPole,
            Error::Eigensolver(_) => GnomonStatus::Eigensolver,
            Error::InsufficientResolution { .. } => GnomonStatus::Resolution,
            Error::InvalidArgument(_) => GnomonStatus::InvalidArgument,
            Error::WrongSystem { .. } => GnomonStatus::WrongSystem,
            Error::Io(_) => GnomonStatus::Io,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GnomonKind {
    Coulomb = 0,
    Oscillator = 1,
}

impl From<GnomonKind> for SystemKind {
    fn from(k: GnomonKind) -> Self {
        match k {
            GnomonKind::Coulomb => SystemKind::ScreenedCoulomb,
            GnomonKind::Oscillator => SystemKind::ScreenedOscillator,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GnomonState {
    pub x1: f64,
    pub x2: f64,
    pub p1: f64,
    pub p2: f64,
}

impl From<GnomonState> for PhaseState {
    fn from(s: GnomonState) -> Self {
        PhaseState::new(s.x1, s.x2, s.p1, s.p2)
    }
}

impl From<PhaseState> for GnomonState {
    fn from(s: PhaseState) -> Self {
        GnomonState {
            x1: s.x1,
            x2: s.x2,
            p1: s.p1,
            p2: s.p2,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GnomonSample {
    pub t: f64,
    pub state: GnomonState,
    pub r: f64,
    /// Unwrapped azimuth.
    pub theta: f64,
    pub energy: f64,
    pub lz: f64,
}

/// A system kind with its curvature and screening constant.
pub struct GnomonSystem {
    params: SystemParams,
}

/// An integrated orbit.
pub struct GnomonTrajectory {
    inner: Trajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(e: Error) -> GnomonStatus {
    set_error(format!("{}: {e}", e.code()));
    GnomonStatus::from(&e)
}

fn null(what: &str) -> GnomonStatus {
    set_error(format!("ERR_NULL_POINTER: `{what}` is null"));
    GnomonStatus::NullPointer
}

/// Runs `f`, converting errors and panics into a status.
fn guard<F>(f: F) -> GnomonStatus
where
    F: FnOnce() -> Result<(), GnomonStatus>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GnomonStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("ERR_PANIC: internal panic".into());
            GnomonStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, GnomonStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(p: *mut T, what: &str, value: T) -> Result<(), GnomonStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

/// Message for the last failed call on this thread, or null if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gnomon_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static NUL-terminated name of a status, e.g. `ERR_IMAGINARY_ALPHA`.
#[no_mangle]
pub extern "C" fn gnomon_status_name(status: GnomonStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        GnomonStatus::Ok => b"OK\0",
        GnomonStatus::NullPointer => b"ERR_NULL_POINTER\0",
        GnomonStatus::Panic => b"ERR_PANIC\0",
        GnomonStatus::NegativeCurvature => b"ERR_NEGATIVE_CURVATURE\0",
        GnomonStatus::FlatCurvature => b"ERR_FLAT_CURVATURE\0",
        GnomonStatus::OutsideHemisphere => b"ERR_OUTSIDE_HEMISPHERE\0",
        GnomonStatus::NonpositiveRadius => b"ERR_NONPOSITIVE_RADIUS\0",
        GnomonStatus::ImaginaryAlpha => b"ERR_IMAGINARY_ALPHA\0",
        GnomonStatus::ImaginaryMPrime => b"ERR_IMAGINARY_M_PRIME\0",
        GnomonStatus::SingularOrbit => b"ERR_SINGULAR_ORBIT\0",
        GnomonStatus::Stiff => b"ERR_STIFF\0",
        GnomonStatus::Unbound => b"ERR_UNBOUND\0",
        GnomonStatus::NoTurningPoints => b"ERR_NO_TURNING_POINTS\0",
        GnomonStatus::HypergeometricPole => b"ERR_HYPERGEOMETRIC_POLE\0",
        GnomonStatus::Eigensolver => b"ERR_EIGENSOLVER\0",
        GnomonStatus::Resolution => b"ERR_RESOLUTION\0",
        GnomonStatus::InvalidArgument => b"ERR_INVALID_ARGUMENT\0",
        GnomonStatus::WrongSystem => b"ERR_WRONG_SYSTEM\0",
        GnomonStatus::Io => b"ERR_IO\0",
        GnomonStatus::BufferTooSmall => b"ERR_BUFFER_TOO_SMALL\0",
    };
    s.as_ptr().cast()
}

/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn gnomon_system_new(
    kind: GnomonKind,
    lambda: f64,
    k: f64,
    out: *mut *mut GnomonSystem,
) -> GnomonStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let params = SystemParams::new(kind.into(), lambda, k).map_err(fail)?;
        out.write(Box::into_raw(Box::new(GnomonSystem { params })));
        Ok(())
    })
}

/// # Safety
/// `sys` must come from [`gnomon_system_new`] and not be freed twice. Null is
/// ignored.
#[no_mangle]
pub unsafe extern "C" fn gnomon_system_free(sys: *mut GnomonSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// # Safety
/// Pointers must be valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gnomon_hamiltonian(
    sys: *const GnomonSystem,
    state: GnomonState,
    out: *mut f64,
) -> GnomonStatus {
    guard(|| {
        let sys = deref(sys, "sys")?;
        let h = dynamics::hamiltonian(&state.into(), &sys.params).map_err(fail)?;
        write_out(out, "out", h)
    })
}

/// Equations of motion `(xdot, pdot)` at `state`.
///
/// # Safety
/// Pointers must be valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gnomon_equations_of_motion(
    sys: *const GnomonSystem,
    state: GnomonState,
    out: *mut GnomonState,
) -> GnomonStatus {
    guard(|| {
        let sys = deref(sys, "sys")?;
        let d = dynamics::equations_of_motion(&state.into(), &sys.params).map_err(fail)?;
        write_out(out, "out", PhaseState::from_array(d).into())
    })
}

/// Effective angular frequency ratio `alpha` for angular momentum `lz`.
///
/// # Safety
/// Pointers must be valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gnomon_alpha(
    sys: *const GnomonSystem,
    lz: f64,
    out: *mut f64,
) -> GnomonStatus {
    guard(|| {
        let sys = deref(sys, "sys")?;
        let a = sys.params.alpha(lz).map_err(fail)?;
        write_out(out, "out", a)
    })
}

/// Analytic energy of level `(m, n)`.
///
/// # Safety
/// Pointers must be valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gnomon_energy_level(
    sys: *const GnomonSystem,
    m: i64,
    n: u32,
    out: *mut f64,
) -> GnomonStatus {
    guard(|| {
        let sys = deref(sys, "sys")?;
        let p = &sys.params;
        let e = spectra::energy(p.kind, p.lambda(), p.k, m, n).map_err(fail)?;
        write_out(out, "out", e)
    })
}

/// Lowest `n_levels` finite-difference eigenvalues for angular number `m`,
/// written to `out[0..n_levels]`.
///
/// # Safety
/// `out` must hold `n_levels` doubles.
#[no_mangle]
pub unsafe extern "C" fn gnomon_numeric_levels(
    sys: *const GnomonSystem,
    m: i64,
    n_levels: usize,
    out: *mut f64,
) -> GnomonStatus {
    guard(|| {
        let sys = deref(sys, "sys")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let p = &sys.params;
        let (kind, lambda, k) = (p.kind, p.lambda(), p.k);
        let grid = spectra::RadialGrid::default_for(kind, lambda, k, m, n_levels).map_err(fail)?;
        let levels =
            spectra::radial_solve_numeric(kind, lambda, k, m, n_levels, &grid).map_err(fail)?;
        ptr::copy_nonoverlapping(levels.values.as_ptr(), out, n_levels);
        Ok(())
    })
}

/// Largest residual over the classical algebra identities at `n_samples`
/// random states drawn from `seed`.
///
/// # Safety
/// Pointers must be valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gnomon_verify_algebra(
    sys: *const GnomonSystem,
    n_samples: usize,
    seed: u64,
    out: *mut f64,
) -> GnomonStatus {
    guard(|| {
        let sys = deref(sys, "sys")?;
        let reports = conserved::verify_algebra(&sys.params, n_samples, seed).map_err(fail)?;
        let worst = reports
            .iter()
            .map(|r| r.max_abs_residual)
            .fold(0.0, f64::max);
        write_out(out, "out", worst)
    })
}

/// Integrates from `state` to `t_end` at relative tolerance `rel_tol`.
///
/// # Safety
/// Pointers must be valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gnomon_integrate(
    sys: *const GnomonSystem,
    state: GnomonState,
    t_end: f64,
    rel_tol: f64,
    out: *mut *mut GnomonTrajectory,
) -> GnomonStatus {
    guard(|| {
        let sys = deref(sys, "sys")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = dynamics::integrate(state.into(), sys.params, t_end, rel_tol).map_err(fail)?;
        out.write(Box::into_raw(Box::new(GnomonTrajectory { inner })));
        Ok(())
    })
}

/// # Safety
/// `traj` must come from [`gnomon_integrate`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn gnomon_trajectory_free(traj: *mut GnomonTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of samples, 0 for a null handle.
///
/// # Safety
/// `traj` must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn gnomon_trajectory_len(traj: *const GnomonTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.inner.samples().len())
}

/// # Safety
/// Pointers must be valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gnomon_trajectory_sample(
    traj: *const GnomonTrajectory,
    index: usize,
    out: *mut GnomonSample,
) -> GnomonStatus {
    guard(|| {
        let traj = deref(traj, "traj")?;
        let s = traj.inner.samples().get(index).ok_or_else(|| {
            fail(Error::InvalidArgument(format!(
                "sample {index} out of range ({} samples)",
                traj.inner.samples().len()
            )))
        })?;
        write_out(
            out,
            "out",
            GnomonSample {
                t: s.t,
                state: s.state.into(),
                r: s.r,
                theta: s.theta,
                energy: s.energy,
                lz: s.lz,
            },
        )
    })
}

/// Largest `|H(t) - H(0)|` and `|Lz(t) - Lz(0)|` over the samples.
///
/// # Safety
/// Pointers must be valid; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn gnomon_trajectory_drift(
    traj: *const GnomonTrajectory,
    energy: *mut f64,
    lz: *mut f64,
) -> GnomonStatus {
    guard(|| {
        let traj = deref(traj, "traj")?;
        write_out(energy, "energy", traj.inner.energy_drift())?;
        write_out(lz, "lz", traj.inner.lz_drift())
    })
}

/// Copies up to `capacity` turning-point times into `times` and stores the
/// total count in `count`. Returns `BufferTooSmall` (with `count` set) when
/// `capacity` is short.
///
/// # Safety
/// `times` must hold `capacity` doubles (may be null when `capacity` is 0).
#[no_mangle]
pub unsafe extern "C" fn gnomon_trajectory_turning_times(
    traj: *const GnomonTrajectory,
    times: *mut f64,
    capacity: usize,
    count: *mut usize,
) -> GnomonStatus {
    guard(|| {
        let traj = deref(traj, "traj")?;
        let points = traj.inner.turning_points().points();
        write_out(count, "count", points.len())?;
        if points.len() > capacity {
            set_error(format!(
                "ERR_BUFFER_TOO_SMALL: {} turning points, capacity {capacity}",
                points.len()
            ));
            return Err(GnomonStatus::BufferTooSmall);
        }
        if !points.is_empty() && times.is_null() {
            return Err(null("times"));
        }
        for (i, p) in points.iter().enumerate() {
            times.add(i).write(p.t);
        }
        Ok(())
    })
}
