//! Acceptance suite: one test per exit criterion, each printing a
//! PASS/FAIL line with the measured numbers (run with `--nocapture` to
//! see them for passing tests).
//!
//! Heavy ensemble criteria state wall-time targets for an 8-worker box;
//! the measured time is printed next to each line.

use std::f64::consts::PI;
use std::time::Instant;

use rayon::prelude::*;

use grazesim::analysis::{energy_scan, width_analytic, ScanCtrl};
use grazesim::ensemble::{run_ensemble, sample_initial_conditions};
use grazesim::integrator::{
    integrate_trajectory, integrate_trajectory_symplectic, IntegratorControl, SymplecticControl,
};
use grazesim::kinematics::IncidenceSpec;
use grazesim::potential::PotentialParams;
use grazesim::quantum::{
    build_channel_basis, diffraction_spectrum, solve_close_coupling, splitop_oracle, QuantumOpts,
    SplitOpSettings, ZGrid,
};
use grazesim::rng;

const SEED: u64 = 20_240_613;

fn beam(phi: f64) -> IncidenceSpec {
    // 200 eV He at grazing polar angle 0.506 pi along the channel
    IncidenceSpec::new(2.0e5, 0.506 * PI, phi, 4.0026, 60.0).unwrap()
}

#[test]
fn criterion_1_energy_conservation() {
    let t0 = Instant::now();
    let params = PotentialParams::default();
    let ctrl = IntegratorControl::default(); // energy_tol = 1e-8
    let results = run_ensemble(&beam(0.004), &params, &ctrl, 1000, SEED).unwrap();
    let mut worst = 0.0f64;
    for r in &results {
        assert!(r.completed(), "trajectory did not complete: {:?}", r.status);
        assert!(
            r.energy_drift <= 1e-8,
            "energy drift {} above 1e-8",
            r.energy_drift
        );
        worst = worst.max(r.energy_drift);
    }
    println!(
        "criterion 1: PASS - 1000/1000 trajectories at E = 200 eV keep |dE|/E <= 1e-8 \
         (worst {:.2e}) in {:.1} s (target 10 s)",
        worst,
        t0.elapsed().as_secs_f64()
    );
}

struct SweepAngle {
    phi: f64,
    rms: f64,
    rms_sigma: f64,
    n: usize,
}

/// Criteria 2 and 3 share one 61 x 2000 ensemble sweep.
#[test]
fn criterion_2_and_3_frozen_axis_and_window_structure() {
    let t0 = Instant::now();
    let params = PotentialParams::default();
    let g = params.reciprocal();
    let ctrl = IntegratorControl {
        energy_tol: 1e-6,
        ..Default::default()
    };
    let n_per_angle = 2000;
    let phis: Vec<f64> = (-30..=30).map(|i| i as f64 * 0.002).collect();
    let kx = beam(0.0).momentum().kx;

    let per_angle: Vec<(SweepAngle, usize)> = phis
        .par_iter()
        .enumerate()
        .map(|(a, &phi)| {
            let results = run_ensemble(
                &beam(phi),
                &params,
                &ctrl,
                n_per_angle,
                rng::mix(SEED, a as u64),
            )
            .unwrap();
            let mut frozen = 0usize;
            let (mut m2, mut m4) = (0.0, 0.0);
            for r in &results {
                assert!(r.completed());
                if (r.delta_kx / kx).abs() <= 1e-3 {
                    frozen += 1;
                }
                let s = r.delta_ky * r.delta_ky;
                m2 += s;
                m4 += s * s;
            }
            let n = results.len() as f64;
            let rms = (m2 / n).sqrt();
            let var_m2 = (m4 / n - (m2 / n).powi(2)).max(0.0) / n;
            let rms_sigma = if rms > 0.0 {
                var_m2.sqrt() / (2.0 * rms)
            } else {
                0.0
            };
            (
                SweepAngle {
                    phi,
                    rms,
                    rms_sigma,
                    n: results.len(),
                },
                frozen,
            )
        })
        .collect();

    let total: usize = per_angle.iter().map(|(s, _)| s.n).sum();
    let frozen: usize = per_angle.iter().map(|&(_, f)| f).sum();
    let frozen_frac = frozen as f64 / total as f64;
    let max_rms = per_angle.iter().map(|(s, _)| s.rms).fold(0.0, f64::max);

    assert!(
        frozen_frac >= 0.99,
        "only {:.4} of trajectories keep |dkx|/kx <= 1e-3",
        frozen_frac
    );
    assert!(
        max_rms >= 0.5 * g,
        "peak rms dky {max_rms} below 0.5 G = {}",
        0.5 * g
    );
    println!(
        "criterion 2: PASS - |dkx|/kx <= 1e-3 for {:.3}% of {} trajectories, peak rms dky = \
         {:.2} = {:.2} G >= 0.5 G, in {:.0} s (target 300 s on 8 workers)",
        100.0 * frozen_frac,
        total,
        max_rms,
        max_rms / g,
        t0.elapsed().as_secs_f64()
    );

    // --- criterion 3: structure of the transfer window ---
    let rows: Vec<&SweepAngle> = per_angle.iter().map(|(s, _)| s).collect();
    let threshold = 0.05 * g;

    // (i) one contiguous active region containing phi = 0
    let active: Vec<usize> = (0..rows.len())
        .filter(|&i| rows[i].rms >= threshold)
        .collect();
    assert!(!active.is_empty(), "no active window found");
    for pair in active.windows(2) {
        assert_eq!(
            pair[1],
            pair[0] + 1,
            "active window is not contiguous: satellite transfer at phi = {}",
            rows[pair[1]].phi
        );
    }
    let zero_idx = 30usize;
    assert!(
        active.contains(&zero_idx),
        "active window does not contain phi = 0"
    );

    // (ii) centered at phi = 0 within one grid step (centroid of rms^2)
    let w_sum: f64 = rows.iter().map(|s| s.rms * s.rms).sum();
    let centroid: f64 = rows.iter().map(|s| s.phi * s.rms * s.rms).sum::<f64>() / w_sum;
    assert!(
        centroid.abs() <= 0.002,
        "window centroid {centroid} off zero by more than one grid step"
    );

    // (iii) even in phi within 3 sigma, tested where the curve is above
    // the integrator noise floor (orders of magnitude below 0.05 G the
    // rms measures step noise, not a physical distribution)
    let noise_floor = 1e-3 * g;
    let mut even_pairs = 0;
    for i in 0..30 {
        let a = rows[zero_idx + 1 + i];
        let b = rows[zero_idx - 1 - i];
        if a.rms.max(b.rms) < noise_floor {
            continue;
        }
        even_pairs += 1;
        let tol = 3.0 * (a.rms_sigma + b.rms_sigma);
        assert!(
            (a.rms - b.rms).abs() <= tol,
            "rms asymmetry at |phi| = {}: {} vs {} (3 sigma = {tol})",
            a.phi,
            a.rms,
            b.rms
        );
    }
    assert!(even_pairs >= 10, "too few angle pairs above the noise floor");

    // (iv) decays below 0.05 G beyond 1.5x the analytic window edge
    let edge = width_analytic(&beam(0.0), &params).unwrap().w_phi / 2.0;
    let mut checked = 0;
    for s in &rows {
        if s.phi.abs() >= 1.5 * edge {
            checked += 1;
            assert!(
                s.rms < threshold,
                "rms {} at phi = {} has not decayed below 0.05 G",
                s.rms,
                s.phi
            );
        }
    }
    assert!(checked > 10, "decay zone not sampled");
    println!(
        "criterion 3: PASS - single contiguous window ({} angles above 0.05 G), centroid \
         {:.2e} rad, even within 3 sigma, decayed at {} angles beyond 1.5 x edge ({:.4} rad)",
        active.len(),
        centroid,
        checked,
        1.5 * edge
    );
}

#[test]
fn criterion_4_unitarity_and_convergence() {
    let t0 = Instant::now();
    let params = PotentialParams::default();
    let opts = QuantumOpts::default();
    let mut worst_defect = 0.0f64;
    let mut worst_shift = 0.0f64;
    for phi in [0.0, 0.01, 0.02, 0.04] {
        let spec = beam(phi);
        let n_half = grazesim::quantum::auto_half_width(&spec, &params, opts.evanescent_buffer)
            .unwrap();
        let basis = build_channel_basis(&spec, &params, n_half).unwrap();
        let grid = ZGrid::for_basis(&basis, &params, &opts);
        let base = solve_close_coupling(&basis, &params, &grid).unwrap();

        let defect = (base.total_probability() - 1.0).abs();
        assert!(defect <= 1e-6, "phi {phi}: unitarity defect {defect:.2e}");
        worst_defect = worst_defect.max(defect);

        let doubled = build_channel_basis(&spec, &params, 2 * n_half).unwrap();
        let fine = ZGrid::for_basis(&doubled, &params, &opts).refined();
        let refined = solve_close_coupling(&doubled, &params, &fine).unwrap();
        for l in &base.lines {
            if l.open {
                let shift = (l.probability - refined.probability(l.n)).abs();
                assert!(
                    shift < 1e-6,
                    "phi {phi}, channel {}: P shifts by {shift:.2e} on refinement",
                    l.n
                );
                worst_shift = worst_shift.max(shift);
            }
        }
    }
    println!(
        "criterion 4: PASS - four azimuths unitary (worst defect {:.1e}) and converged \
         (worst refinement shift {:.1e} < 1e-6) in {:.0} s",
        worst_defect,
        worst_shift,
        t0.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_5_oracle_equivalence() {
    let t0 = Instant::now();
    let params = PotentialParams::default();

    // quantum pair: coupled channels vs wavepacket on a 5-open-channel case
    let theta: f64 = 0.506 * PI;
    let low = IncidenceSpec::new(18.0 / theta.cos().powi(2), theta, 0.0, 4.0026, 60.0).unwrap();
    let basis = build_channel_basis(&low, &params, 7).unwrap();
    assert_eq!(basis.open_count(), 5);
    let grid = ZGrid::for_basis(&basis, &params, &QuantumOpts::default());
    let cc = solve_close_coupling(&basis, &params, &grid).unwrap();
    let mut settings = SplitOpSettings::for_basis(&basis, &params);
    settings.dt = 2e-3;
    let so = splitop_oracle(&basis, &params, &settings).unwrap();
    let mut worst_q = 0.0f64;
    for l in &cc.lines {
        if l.open {
            let d = (l.probability - so.probability(l.n)).abs();
            assert!(
                d < 1e-3,
                "channel {}: coupled-channel {} vs wavepacket {}",
                l.n,
                l.probability,
                so.probability(l.n)
            );
            worst_q = worst_q.max(d);
        }
    }

    // classical pair: adaptive vs fixed-step symplectic on 100 bounces in
    // the regular regime outside the transfer window
    let spec = beam(0.025);
    let states = sample_initial_conditions(&spec, &params, 100, SEED ^ 0x5a5a).unwrap();
    let tight = IntegratorControl {
        energy_tol: 1e-11,
        ..Default::default()
    };
    let sym = SymplecticControl {
        step: 4e-5,
        ..Default::default()
    };
    let worst_c = states
        .par_iter()
        .map(|st| {
            let a = integrate_trajectory(st, &params, spec.mass, &tight).unwrap();
            let b = integrate_trajectory_symplectic(st, &params, spec.mass, &sym).unwrap();
            assert!(a.completed() && b.completed());
            let dx = (a.delta_kx - b.delta_kx).abs();
            let dy = (a.delta_ky - b.delta_ky).abs();
            assert!(
                dx < 1e-6 && dy < 1e-6,
                "integrator mismatch: dkx gap {dx:.2e}, dky gap {dy:.2e}"
            );
            dx.max(dy)
        })
        .reduce(|| 0.0, f64::max);

    println!(
        "criterion 5: PASS - quantum oracles agree to {:.1e} per channel (tol 1e-3); \
         classical integrators agree to {:.1e} 1/A on 100 trajectories (tol 1e-6); {:.0} s",
        worst_q,
        worst_c,
        t0.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_6_spectrum_phenomenology() {
    let t0 = Instant::now();
    let params = PotentialParams::default();
    let opts = QuantumOpts::default();

    let inside = diffraction_spectrum(&beam(0.0), &params, &opts).unwrap();
    let strong_nonspecular = inside
        .lines
        .iter()
        .filter(|l| l.n != 0 && l.probability > 0.05)
        .count();
    assert!(
        strong_nonspecular >= 2,
        "only {strong_nonspecular} non-specular channels above 0.05 along the channel axis"
    );

    let outside = diffraction_spectrum(&beam(0.04), &params, &opts).unwrap();
    let p0 = outside.probability(0);
    assert!(p0 > 0.99, "specular probability {p0} outside the window");

    println!(
        "criterion 6: PASS - {} non-specular channels with P > 0.05 at phi = 0 \
         (P0 = {:.3}); P0 = {:.6} at phi = 0.04 rad; {:.0} s",
        strong_nonspecular,
        inside.probability(0),
        p0,
        t0.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_7_width_estimators_vs_energy() {
    let t0 = Instant::now();
    let params = PotentialParams::default();
    let template = beam(0.0);
    let ctrl = ScanCtrl {
        seed: SEED,
        ..Default::default()
    };
    let n_energies = 13;
    let energies: Vec<f64> = (0..n_energies)
        .map(|i| {
            let t = i as f64 / (n_energies - 1) as f64;
            1.0e4 * (1.0e2f64).powf(t) // 10 eV .. 1000 eV in meV
        })
        .collect();
    let rows = energy_scan(&energies, &template, &params, &ctrl).unwrap();
    for r in &rows {
        println!(
            "  E = {:8.1} eV: W_ky = {:7.3} 1/A, W_phi analytic {:.5} classical {} quantum {} \
             ({} open channels) {:?}",
            r.energy_mev / 1e3,
            r.analytic.w_ky,
            r.analytic.w_phi,
            r.classical.map(|w| format!("{:.5}", w.w_phi)).unwrap_or_default(),
            r.quantum.map(|w| format!("{:.5}", w.w_phi)).unwrap_or_default(),
            r.open_channels,
            r.errors,
        );
        assert!(r.errors.is_empty(), "scan row failed: {:?}", r.errors);
    }

    // (a) momentum width grows monotonically with energy
    for pair in rows.windows(2) {
        assert!(
            pair[1].analytic.w_ky > pair[0].analytic.w_ky,
            "W_ky not monotone between {} and {} meV",
            pair[0].energy_mev,
            pair[1].energy_mev
        );
    }

    // (b) angular width decreases, fast at low energy then flattening
    for pair in rows.windows(2) {
        assert!(
            pair[1].analytic.w_phi < pair[0].analytic.w_phi,
            "W_phi not decreasing between {} and {} meV",
            pair[0].energy_mev,
            pair[1].energy_mev
        );
    }
    let log_slope = |a: &grazesim::analysis::EnergyScanRow,
                     b: &grazesim::analysis::EnergyScanRow| {
        (b.analytic.w_phi.ln() - a.analytic.w_phi.ln())
            / (b.energy_mev.ln() - a.energy_mev.ln())
    };
    let low_slope = log_slope(&rows[0], &rows[2]).abs();
    let high_slope = log_slope(&rows[n_energies - 3], &rows[n_energies - 1]).abs();
    assert!(
        low_slope > 1.8 * high_slope,
        "W_phi decline does not flatten: low-E slope {low_slope:.3}, high-E slope {high_slope:.3}"
    );
    let last_decade = (rows[n_energies - 1].analytic.w_phi
        - rows[n_energies - 3].analytic.w_phi)
        .abs()
        / rows[n_energies - 3].analytic.w_phi;
    assert!(
        last_decade < 0.25,
        "W_phi still changes by {last_decade:.2} over the top half-decade"
    );

    // (c) classical FWHM tracks the analytic width above 100 eV
    // (d) quantum FWHM tracks the classical one above 100 eV
    let mut checked = 0;
    for r in &rows {
        if r.energy_mev >= 0.999e5 {
            let cl = r.classical.expect("classical estimate").w_phi;
            let qm = r.quantum.expect("quantum estimate").w_phi;
            let ratio_ca = cl / r.analytic.w_phi;
            let ratio_qc = qm / cl;
            assert!(
                (0.5..=2.0).contains(&ratio_ca),
                "classical/analytic ratio {ratio_ca:.2} at {} meV",
                r.energy_mev
            );
            assert!(
                (0.5..=2.0).contains(&ratio_qc),
                "quantum/classical ratio {ratio_qc:.2} at {} meV",
                r.energy_mev
            );
            checked += 1;
        }
    }
    assert!(checked >= 6, "too few rows above 100 eV");
    println!(
        "criterion 7: PASS - {} energies over 10..1000 eV: W_ky monotone up, W_phi falling \
         {:.1}x faster at low E, estimator ratios within [0.5, 2] above 100 eV; {:.0} s \
         (target 1800 s on 8 workers)",
        rows.len(),
        low_slope / high_slope,
        t0.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_8_width_order_of_magnitude() {
    let params = PotentialParams::default();
    for e_ev in [200.0, 300.0, 500.0] {
        let theta: f64 = 0.506 * PI;
        let spec = IncidenceSpec::new(e_ev * 1e3, theta, 0.0, 4.0026, 60.0).unwrap();
        let w = width_analytic(&spec, &params).unwrap();
        assert!(
            (0.005..=0.08).contains(&w.w_phi),
            "W_phi = {} rad at {e_ev} eV outside [0.005, 0.08]",
            w.w_phi
        );
    }
    let w200 = width_analytic(&beam(0.0), &params).unwrap().w_phi;
    println!(
        "criterion 8: PASS - angular window at several hundred eV within [0.005, 0.08] rad \
         (0.02-rad scale; {w200:.4} rad at 200 eV)"
    );
}

#[test]
fn criterion_9_byte_identical_output_across_workers() {
    let t0 = Instant::now();
    let tmp = tempfile::TempDir::new().unwrap();
    let config = tmp.path().join("run.toml");
    std::fs::write(
        &config,
        "
[sweep]
phi_max_rad = 0.02
phi_count = 9
energy_tol = 1e-6

[ensemble]
n_per_angle = 200
seed = 31
",
    )
    .unwrap();

    let mut outputs = Vec::new();
    for (threads, sub) in [("1", "t1"), ("2", "t2")] {
        let out_dir = tmp.path().join(sub);
        let out = std::process::Command::new(env!("CARGO_BIN_EXE_grazesim"))
            .args(["sweep-azimuth", "--config"])
            .arg(&config)
            .args(["--threads", threads, "--out-dir"])
            .arg(&out_dir)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        outputs.push(std::fs::read(out_dir.join("sweep.csv")).unwrap());
    }
    assert_eq!(
        outputs[0], outputs[1],
        "sweep.csv bytes differ between 1 and 2 worker threads"
    );
    println!(
        "criterion 9: PASS - sweep CSV byte-identical across thread counts ({} bytes) in {:.0} s",
        outputs[0].len(),
        t0.elapsed().as_secs_f64()
    );
}
