use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use gnomon_ffi::*;

fn last_error() -> String {
    let p = gnomon_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

fn system(kind: GnomonKind, lambda: f64, k: f64) -> *mut GnomonSystem {
    let mut sys = ptr::null_mut();
    let st = unsafe { gnomon_system_new(kind, lambda, k, &mut sys) };
    assert_eq!(st, GnomonStatus::Ok);
    assert!(!sys.is_null());
    sys
}

#[test]
fn energies_and_alpha() {
    let sys = system(GnomonKind::Oscillator, 0.0, 0.0);
    let mut e = 0.0;
    assert_eq!(
        unsafe { gnomon_energy_level(sys, 0, 0, &mut e) },
        GnomonStatus::Ok
    );
    assert_eq!(e, 1.0);
    unsafe { gnomon_system_free(sys) };

    let sys = system(GnomonKind::Coulomb, 0.0, 0.375);
    let mut a = 0.0;
    assert_eq!(unsafe { gnomon_alpha(sys, 1.0, &mut a) }, GnomonStatus::Ok);
    assert!((a - 0.5).abs() < 1e-15);
    assert_eq!(
        unsafe { gnomon_alpha(sys, 0.5, &mut a) },
        GnomonStatus::ImaginaryAlpha
    );
    assert!(last_error().starts_with("ERR_IMAGINARY_ALPHA: "));
    assert_eq!(a, 0.5, "output untouched on failure");
    unsafe { gnomon_system_free(sys) };
}

#[test]
fn construction_errors() {
    let mut sys = ptr::null_mut();
    let st = unsafe { gnomon_system_new(GnomonKind::Coulomb, -0.1, 0.0, &mut sys) };
    assert_eq!(st, GnomonStatus::NegativeCurvature);
    assert!(sys.is_null());
    let name = unsafe { CStr::from_ptr(gnomon_status_name(st)) };
    assert_eq!(name.to_str().unwrap(), "ERR_NEGATIVE_CURVATURE");
    let st = unsafe { gnomon_system_new(GnomonKind::Coulomb, 0.1, 0.0, ptr::null_mut()) };
    assert_eq!(st, GnomonStatus::NullPointer);
    let mut h = 0.0;
    let st = unsafe { gnomon_hamiltonian(ptr::null(), GnomonState::default(), &mut h) };
    assert_eq!(st, GnomonStatus::NullPointer);
    unsafe { gnomon_system_free(ptr::null_mut()) };
    unsafe { gnomon_trajectory_free(ptr::null_mut()) };
}

#[test]
fn trajectory_handle() {
    let sys = system(GnomonKind::Coulomb, 0.1, 0.05);
    let s0 = GnomonState {
        x1: 1.0,
        x2: 0.0,
        p1: 0.2,
        p2: 0.9,
    };
    let mut h0 = 0.0;
    assert_eq!(
        unsafe { gnomon_hamiltonian(sys, s0, &mut h0) },
        GnomonStatus::Ok
    );
    let mut traj = ptr::null_mut();
    let st = unsafe { gnomon_integrate(sys, s0, 30.0, 1e-10, &mut traj) };
    assert_eq!(st, GnomonStatus::Ok);
    let n = unsafe { gnomon_trajectory_len(traj) };
    assert!(n > 10);
    let mut last = GnomonSample::default();
    assert_eq!(
        unsafe { gnomon_trajectory_sample(traj, n - 1, &mut last) },
        GnomonStatus::Ok
    );
    assert!((last.t - 30.0).abs() < 1e-12);
    assert!((last.energy - h0).abs() < 1e-9);
    assert_eq!(
        unsafe { gnomon_trajectory_sample(traj, n, &mut last) },
        GnomonStatus::InvalidArgument
    );
    let (mut de, mut dl) = (1.0, 1.0);
    assert_eq!(
        unsafe { gnomon_trajectory_drift(traj, &mut de, &mut dl) },
        GnomonStatus::Ok
    );
    assert!(de < 1e-9 && dl < 1e-9);

    let mut count = 0usize;
    let st = unsafe { gnomon_trajectory_turning_times(traj, ptr::null_mut(), 0, &mut count) };
    assert_eq!(st, GnomonStatus::BufferTooSmall);
    assert!(count >= 2);
    let mut times = vec![0.0; count];
    let st =
        unsafe { gnomon_trajectory_turning_times(traj, times.as_mut_ptr(), count, &mut count) };
    assert_eq!(st, GnomonStatus::Ok);
    assert!(times.windows(2).all(|w| w[0] < w[1]));
    unsafe {
        gnomon_trajectory_free(traj);
        gnomon_system_free(sys);
    }
}

#[test]
fn spectra_and_algebra() {
    let sys = system(GnomonKind::Oscillator, 0.1, 0.05);
    let mut levels = [0.0; 3];
    let st = unsafe { gnomon_numeric_levels(sys, 1, 3, levels.as_mut_ptr()) };
    assert_eq!(st, GnomonStatus::Ok);
    for (n, &v) in levels.iter().enumerate() {
        let mut e = 0.0;
        unsafe { gnomon_energy_level(sys, 1, n as u32, &mut e) };
        assert!((v - e).abs() < 1e-4 * e, "{n}: {v} vs {e}");
    }
    let mut worst = 1.0;
    let st = unsafe { gnomon_verify_algebra(sys, 200, 7, &mut worst) };
    assert_eq!(st, GnomonStatus::Ok);
    assert!(worst < 1e-9, "{worst:e}");
    let mut e = 0.0;
    assert_eq!(
        unsafe { gnomon_energy_level(sys, 0, 0, &mut e) },
        GnomonStatus::ImaginaryMPrime
    );
    unsafe { gnomon_system_free(sys) };
}

#[test]
fn header_is_current() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/gnomon.h")).unwrap();
    for f in [
        "gnomon_system_new",
        "gnomon_system_free",
        "gnomon_integrate",
        "gnomon_trajectory_sample",
        "gnomon_numeric_levels",
        "gnomon_last_error",
        "GNOMON_STATUS_IMAGINARY_ALPHA",
        "typedef struct GnomonSystem GnomonSystem;",
    ] {
        assert!(header.contains(f), "{f} missing from header");
    }
}

/// Compiles and runs a C program against the static library and header.
#[test]
fn c_program_links_and_runs() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // target/<profile>/deps/<test binary>
    let profile = std::env::current_exe()
        .unwrap()
        .parent()
        .and_then(|p| p.parent())
        .unwrap()
        .to_path_buf();
    let lib = profile.join("libgnomon_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let out = tempfile_path("gnomon_c_smoke");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(dir.join("include"))
        .arg(dir.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&out)
        .status()
        .expect("cc available");
    assert!(status.success());
    let run = Command::new(&out).output().unwrap();
    let _ = std::fs::remove_file(&out);
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(
        run.status.success(),
        "{stdout}{}",
        String::from_utf8_lossy(&run.stderr)
    );
    assert!(stdout.contains("ok"), "{stdout}");
}

fn tempfile_path(stem: &str) -> PathBuf {
    std::env::temp_dir().join(format!("{stem}_{}", std::process::id()))
}
