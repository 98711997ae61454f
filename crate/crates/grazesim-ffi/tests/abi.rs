//! Exercises the C ABI through the exported functions, including the
//! error paths a C caller relies on.

use std::f64::consts::PI;
use std::ffi::CStr;

use grazesim_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(grz_last_error()).to_string_lossy().into_owned() }
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(grz_version()) };
    assert!(!v.to_bytes().is_empty());
}

#[test]
fn potential_lifecycle_and_evaluation() {
    let p = grz_potential_new(8.0, 0.4, 1.0, 0.18, 2.84);
    assert!(!p.is_null());
    let mut v = 0.0;
    unsafe {
        assert_eq!(grz_potential_evaluate(p, 0.71, 0.71, 1.0, &mut v), GRZ_OK);
        // (L/4, L/4): corrugation cancels, Morse minimum
        assert!((v + 8.0).abs() < 1e-9, "v = {v}");
        let mut va = 0.0;
        assert_eq!(grz_potential_averaged(p, 1.42, 30.0, &mut va), GRZ_OK);
        assert!(va.abs() < 1e-3);
        grz_potential_free(p);
    }
}

#[test]
fn invalid_parameters_set_the_error_message() {
    let p = grz_potential_new(-1.0, 0.4, 1.0, 0.18, 2.84);
    assert!(p.is_null());
    assert!(last_error().contains("well_depth"));

    let b = grz_beam_new(2.0e5, 0.3 * PI, 0.0, 4.0026, 60.0);
    assert!(b.is_null());
    assert!(last_error().contains("theta"));
}

#[test]
fn null_arguments_are_rejected() {
    let mut out = 0.0;
    unsafe {
        assert_eq!(
            grz_potential_evaluate(std::ptr::null(), 0.0, 0.0, 1.0, &mut out),
            GRZ_NULL_ARGUMENT
        );
        assert_eq!(grz_spectrum_len(std::ptr::null()), -1);
        grz_potential_free(std::ptr::null_mut());
        grz_beam_free(std::ptr::null_mut());
        grz_spectrum_free(std::ptr::null_mut());
    }
}

#[test]
fn beam_momentum_matches_the_grazing_kinematics() {
    let b = grz_beam_new(2.0e5, 0.506 * PI, 0.0, 4.0026, 60.0);
    assert!(!b.is_null());
    let mut k = [0.0f64; 3];
    unsafe {
        assert_eq!(grz_beam_momentum(b, k.as_mut_ptr()), GRZ_OK);
        grz_beam_free(b);
    }
    assert_eq!(k[1], 0.0);
    assert!((k[2] + 11.6645).abs() < 0.01, "kz = {}", k[2]);
}

#[test]
fn width_trajectory_and_spectrum_flow() {
    let p = grz_potential_default();
    let b = grz_beam_new(2.0e5, 0.506 * PI, 0.0, 4.0026, 60.0);
    assert!(!p.is_null() && !b.is_null());
    unsafe {
        let (mut w_ky, mut w_phi) = (0.0, 0.0);
        assert_eq!(grz_width_analytic(b, p, &mut w_ky, &mut w_phi), GRZ_OK);
        assert!((w_phi - 0.0359).abs() < 0.001, "w_phi = {w_phi}");

        let mut traj = GrzTrajectory {
            delta_kx: 0.0,
            delta_ky: 0.0,
            delta_kz: 0.0,
            energy_drift: 0.0,
            steps: 0,
            status: -1,
        };
        assert_eq!(grz_trajectory_run(b, p, 0.3, 1.1, 1e-8, &mut traj), GRZ_OK);
        assert_eq!(traj.status, 0);
        assert!(traj.energy_drift <= 1e-8);
        assert!(traj.delta_kx.abs() < 1e-3);
        assert!(traj.steps > 0);

        let s = grz_spectrum_solve(b, p);
        assert!(!s.is_null(), "spectrum failed: {}", last_error());
        let len = grz_spectrum_len(s);
        assert!(len > 5);
        let mut total = 0.0;
        let mut seen_specular = false;
        for i in 0..len {
            let (mut n, mut ky, mut open, mut prob) = (0i32, 0.0, 0i32, 0.0);
            assert_eq!(
                grz_spectrum_channel(s, i, &mut n, &mut ky, &mut open, &mut prob),
                GRZ_OK
            );
            if open == 1 {
                total += prob;
            }
            if n == 0 {
                seen_specular = true;
                assert!(prob > 0.0);
            }
        }
        assert!(seen_specular);
        assert!((total - 1.0).abs() < 1e-6, "sum = {total}");

        let (mut mean, mut rms) = (0.0, 0.0);
        assert_eq!(grz_spectrum_moments(s, &mut mean, &mut rms), GRZ_OK);
        assert!(mean.abs() < 1e-6);
        assert!(rms > 0.0);

        let mut bad = 0i32;
        let (mut ky, mut open, mut prob) = (0.0, 0i32, 0.0);
        assert_eq!(
            grz_spectrum_channel(s, len + 3, &mut bad, &mut ky, &mut open, &mut prob),
            GRZ_INVALID_INPUT
        );

        grz_spectrum_free(s);
        grz_beam_free(b);
        grz_potential_free(p);
    }
}
