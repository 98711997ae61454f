//! C ABI over the grazesim library.
//!
//! Conventions:
//!
//! * handles (`GrzPotential`, `GrzBeam`, `GrzSpectrum`) are opaque; create
//!   with `grz_*_new`/`grz_*_solve`, release with the matching `grz_*_free`;
//! * every fallible call returns a `GRZ_*` status code and writes results
//!   through out-pointers; `grz_last_error` returns a thread-local message
//!   for the most recent failure;
//! * units follow the library: meV, Å, amu, wavevectors in Å⁻¹;
//! * the header shipped at `include/grazesim.h` is maintained by hand and
//!   checked against the exported symbol list by `tests/header_sync.rs`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use grazesim::integrator::{integrate_trajectory, IntegratorControl, TrajectoryState};
use grazesim::kinematics::{momentum_from_incidence, IncidenceSpec};
use grazesim::potential::PotentialParams;
use grazesim::quantum::{diffraction_spectrum, QuantumOpts};
use grazesim::{DiffractionSpectrum, GrazeError};

pub const GRZ_OK: c_int = 0;
pub const GRZ_NULL_ARGUMENT: c_int = 1;
pub const GRZ_INVALID_INPUT: c_int = 2;
pub const GRZ_DOMAIN_ERROR: c_int = 3;
pub const GRZ_PHYSICS_ERROR: c_int = 4;
pub const GRZ_PANIC: c_int = 5;

/// Names exported through the C ABI, used by the header-sync test.
pub const EXPORTED_FUNCTIONS: &[&str] = &[
    "grz_version",
    "grz_last_error",
    "grz_potential_new",
    "grz_potential_default",
    "grz_potential_free",
    "grz_potential_evaluate",
    "grz_potential_averaged",
    "grz_beam_new",
    "grz_beam_free",
    "grz_beam_momentum",
    "grz_width_analytic",
    "grz_trajectory_run",
    "grz_spectrum_solve",
    "grz_spectrum_free",
    "grz_spectrum_len",
    "grz_spectrum_channel",
    "grz_spectrum_moments",
];

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let owned = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = owned);
}

fn code_of(err: &GrazeError) -> c_int {
    match err {
        GrazeError::InvalidInput(_) | GrazeError::Config(_) | GrazeError::EmptyInput(_) => {
            GRZ_INVALID_INPUT
        }
        GrazeError::Domain(_) => GRZ_DOMAIN_ERROR,
        _ => GRZ_PHYSICS_ERROR,
    }
}

fn guarded(body: impl FnOnce() -> c_int) -> c_int {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(code) => code,
        Err(_) => {
            set_error("internal panic");
            GRZ_PANIC
        }
    }
}

/// Opaque potential handle.
pub struct GrzPotential(PotentialParams);
/// Opaque beam handle.
pub struct GrzBeam(IncidenceSpec);
/// Opaque diffraction-spectrum handle.
pub struct GrzSpectrum(DiffractionSpectrum);

/// Classical bounce summary with a C layout.
#[repr(C)]
pub struct GrzTrajectory {
    pub delta_kx: f64,
    pub delta_ky: f64,
    pub delta_kz: f64,
    pub energy_drift: f64,
    pub steps: u64,
    /// 0 completed, 1 step budget, 2 floor hit.
    pub status: c_int,
}

/// Library version as a static C string.
#[no_mangle]
pub extern "C" fn grz_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message for the most recent error on this thread. Valid until the next
/// failing call from the same thread.
#[no_mangle]
pub extern "C" fn grz_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Build a corrugated-Morse potential; NULL on invalid parameters.
#[no_mangle]
pub extern "C" fn grz_potential_new(
    well_depth_mev: f64,
    stiffness_inv_ang: f64,
    equilibrium_ang: f64,
    corrugation: f64,
    period_ang: f64,
) -> *mut GrzPotential {
    match PotentialParams::new(
        well_depth_mev,
        stiffness_inv_ang,
        equilibrium_ang,
        corrugation,
        period_ang,
    ) {
        Ok(p) => Box::into_raw(Box::new(GrzPotential(p))),
        Err(e) => {
            set_error(&e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// The library's default illustrative parameter set.
#[no_mangle]
pub extern "C" fn grz_potential_default() -> *mut GrzPotential {
    Box::into_raw(Box::new(GrzPotential(PotentialParams::default())))
}

/// # Safety
/// `p` must be NULL or a pointer from `grz_potential_new`/`_default` that
/// has not been freed.
#[no_mangle]
pub unsafe extern "C" fn grz_potential_free(p: *mut GrzPotential) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `p` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn grz_potential_evaluate(
    p: *const GrzPotential,
    x: f64,
    y: f64,
    z: f64,
    out: *mut f64,
) -> c_int {
    if p.is_null() || out.is_null() {
        set_error("null argument");
        return GRZ_NULL_ARGUMENT;
    }
    guarded(|| {
        *out = (*p).0.evaluate(x, y, z);
        GRZ_OK
    })
}

/// Channel-averaged potential V_av(y, z).
///
/// # Safety
/// `p` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn grz_potential_averaged(
    p: *const GrzPotential,
    y: f64,
    z: f64,
    out: *mut f64,
) -> c_int {
    if p.is_null() || out.is_null() {
        set_error("null argument");
        return GRZ_NULL_ARGUMENT;
    }
    guarded(|| {
        *out = (*p).0.averaged(y, z);
        GRZ_OK
    })
}

/// Build a beam spec; NULL on invalid input (see `grz_last_error`).
#[no_mangle]
pub extern "C" fn grz_beam_new(
    energy_mev: f64,
    theta_rad: f64,
    phi_rad: f64,
    mass_amu: f64,
    z_start_ang: f64,
) -> *mut GrzBeam {
    match IncidenceSpec::new(energy_mev, theta_rad, phi_rad, mass_amu, z_start_ang) {
        Ok(s) => Box::into_raw(Box::new(GrzBeam(s))),
        Err(e) => {
            set_error(&e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// # Safety
/// `b` must be NULL or an unfreed pointer from `grz_beam_new`.
#[no_mangle]
pub unsafe extern "C" fn grz_beam_free(b: *mut GrzBeam) {
    if !b.is_null() {
        drop(Box::from_raw(b));
    }
}

/// Incident wavevector (k_x, k_y, k_z) in Å⁻¹.
///
/// # Safety
/// `out` must point to at least three f64.
#[no_mangle]
pub unsafe extern "C" fn grz_beam_momentum(b: *const GrzBeam, out: *mut f64) -> c_int {
    if b.is_null() || out.is_null() {
        set_error("null argument");
        return GRZ_NULL_ARGUMENT;
    }
    guarded(|| match momentum_from_incidence(&(*b).0) {
        Ok(k) => {
            *out.add(0) = k.kx;
            *out.add(1) = k.ky;
            *out.add(2) = k.kz;
            GRZ_OK
        }
        Err(e) => {
            set_error(&e.to_string());
            code_of(&e)
        }
    })
}

/// Analytic transfer-window width: wavevector (Å⁻¹) and azimuth (rad).
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn grz_width_analytic(
    b: *const GrzBeam,
    p: *const GrzPotential,
    out_w_ky: *mut f64,
    out_w_phi: *mut f64,
) -> c_int {
    if b.is_null() || p.is_null() || out_w_ky.is_null() || out_w_phi.is_null() {
        set_error("null argument");
        return GRZ_NULL_ARGUMENT;
    }
    guarded(|| match grazesim::analysis::width_analytic(&(*b).0, &(*p).0) {
        Ok(w) => {
            *out_w_ky = w.w_ky;
            *out_w_phi = w.w_phi;
            GRZ_OK
        }
        Err(e) => {
            set_error(&e.to_string());
            code_of(&e)
        }
    })
}

/// Integrate one classical bounce from cell coordinates (x0, y0).
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn grz_trajectory_run(
    b: *const GrzBeam,
    p: *const GrzPotential,
    x0: f64,
    y0: f64,
    energy_tol: f64,
    out: *mut GrzTrajectory,
) -> c_int {
    if b.is_null() || p.is_null() || out.is_null() {
        set_error("null argument");
        return GRZ_NULL_ARGUMENT;
    }
    guarded(|| {
        let spec = (*b).0;
        if let Err(e) = spec.validate_z_start(&(*p).0) {
            set_error(&e.to_string());
            return code_of(&e);
        }
        let k = match momentum_from_incidence(&spec) {
            Ok(k) => k,
            Err(e) => {
                set_error(&e.to_string());
                return code_of(&e);
            }
        };
        let state = TrajectoryState::new([x0, y0, spec.z_start], [k.kx, k.ky, k.kz]);
        let ctrl = IntegratorControl {
            energy_tol: if energy_tol > 0.0 { energy_tol } else { 1e-8 },
            ..Default::default()
        };
        match integrate_trajectory(&state, &(*p).0, spec.mass, &ctrl) {
            Ok(r) => {
                *out = GrzTrajectory {
                    delta_kx: r.delta_kx,
                    delta_ky: r.delta_ky,
                    delta_kz: r.delta_kz,
                    energy_drift: r.energy_drift,
                    steps: r.steps,
                    status: match r.status {
                        grazesim::integrator::TrajectoryStatus::Completed => 0,
                        grazesim::integrator::TrajectoryStatus::MaxSteps => 1,
                        grazesim::integrator::TrajectoryStatus::FloorHit => 2,
                    },
                };
                GRZ_OK
            }
            Err(e) => {
                set_error(&e.to_string());
                code_of(&e)
            }
        }
    })
}

/// Solve the coupled-channel diffraction problem with automatic basis and
/// grid; NULL on failure.
///
/// # Safety
/// `b` and `p` must be valid handle pointers.
#[no_mangle]
pub unsafe extern "C" fn grz_spectrum_solve(
    b: *const GrzBeam,
    p: *const GrzPotential,
) -> *mut GrzSpectrum {
    if b.is_null() || p.is_null() {
        set_error("null argument");
        return std::ptr::null_mut();
    }
    let result = catch_unwind(AssertUnwindSafe(|| {
        diffraction_spectrum(&(*b).0, &(*p).0, &QuantumOpts::default())
    }));
    match result {
        Ok(Ok(s)) => Box::into_raw(Box::new(GrzSpectrum(s))),
        Ok(Err(e)) => {
            set_error(&e.to_string());
            std::ptr::null_mut()
        }
        Err(_) => {
            set_error("internal panic");
            std::ptr::null_mut()
        }
    }
}

/// # Safety
/// `s` must be NULL or an unfreed pointer from `grz_spectrum_solve`.
#[no_mangle]
pub unsafe extern "C" fn grz_spectrum_free(s: *mut GrzSpectrum) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Number of channel lines in the spectrum (open and closed).
///
/// # Safety
/// `s` must be a valid handle pointer.
#[no_mangle]
pub unsafe extern "C" fn grz_spectrum_len(s: *const GrzSpectrum) -> c_int {
    if s.is_null() {
        set_error("null argument");
        return -1;
    }
    (*s).0.lines.len() as c_int
}

/// Read one channel line by index.
///
/// # Safety
/// All pointers must be valid; `idx` is checked against the length.
#[no_mangle]
pub unsafe extern "C" fn grz_spectrum_channel(
    s: *const GrzSpectrum,
    idx: c_int,
    out_n: *mut c_int,
    out_ky: *mut f64,
    out_open: *mut c_int,
    out_probability: *mut f64,
) -> c_int {
    if s.is_null()
        || out_n.is_null()
        || out_ky.is_null()
        || out_open.is_null()
        || out_probability.is_null()
    {
        set_error("null argument");
        return GRZ_NULL_ARGUMENT;
    }
    let lines = &(*s).0.lines;
    if idx < 0 || idx as usize >= lines.len() {
        set_error("channel index out of range");
        return GRZ_INVALID_INPUT;
    }
    let l = &lines[idx as usize];
    *out_n = l.n;
    *out_ky = l.ky;
    *out_open = l.open as c_int;
    *out_probability = l.probability;
    GRZ_OK
}

/// Mean and rms of Δk_y under the spectrum.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn grz_spectrum_moments(
    s: *const GrzSpectrum,
    out_mean: *mut f64,
    out_rms: *mut f64,
) -> c_int {
    if s.is_null() || out_mean.is_null() || out_rms.is_null() {
        set_error("null argument");
        return GRZ_NULL_ARGUMENT;
    }
    let (mean, rms) = (*s).0.moments();
    *out_mean = mean;
    *out_rms = rms;
    GRZ_OK
}
