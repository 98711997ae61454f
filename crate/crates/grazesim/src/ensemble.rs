//! Trajectory ensembles over the surface unit cell and their statistics.
//!
//! All sampling is counter-based: trajectory j of a given (seed, stream)
//! draws its cell coordinates from a pure hash of (seed, stream, j), so
//! results are independent of thread count and scheduling order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::integrator::{
    integrate_trajectory, IntegratorControl, TrajectoryResult, TrajectoryState,
};
use crate::kinematics::{momentum_from_incidence, IncidenceSpec};
use crate::potential::PotentialParams;
use crate::rng;
use crate::spectrum::{DiffractionSpectrum, SpectrumLine, SpectrumMeta, SpectrumMethod};
use crate::{GrazeError, Result};

/// Per-azimuth momentum-transfer statistics over completed trajectories.
///
/// `rms_*` are root-mean-squares of Δk itself (not centered second
/// moments), matching how the sweep curves are defined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AzimuthSweepRow {
    pub phi: f64,
    pub mean_dky: f64,
    pub rms_dky: f64,
    pub mean_dkx: f64,
    pub rms_dkx: f64,
    pub n_trajectories: usize,
    pub n_failed: usize,
}

/// Draw `n` initial states with the beam momentum of `spec`, z at the
/// start height and (x, y) i.i.d. uniform over the unit cell.
/// Deterministic: trajectory j depends only on (seed, j).
pub fn sample_initial_conditions(
    spec: &IncidenceSpec,
    params: &PotentialParams,
    n: usize,
    seed: u64,
) -> Result<Vec<TrajectoryState>> {
    if n == 0 {
        return Err(GrazeError::EmptyInput("ensemble size must be >= 1".into()));
    }
    spec.validate()?;
    spec.validate_z_start(params)?;
    let k = momentum_from_incidence(spec)?;
    let period = params.period;
    Ok((0..n)
        .map(|j| {
            let stream = rng::mix(seed, j as u64);
            let x = period * rng::unit_f64(rng::splitmix64(rng::mix(stream, 0)));
            let y = period * rng::unit_f64(rng::splitmix64(rng::mix(stream, 1)));
            TrajectoryState::new([x, y, spec.z_start], [k.kx, k.ky, k.kz])
        })
        .collect())
}

/// Integrate a full ensemble for one beam spec. Results keep sampling
/// order regardless of parallel scheduling.
pub fn run_ensemble(
    spec: &IncidenceSpec,
    params: &PotentialParams,
    ctrl: &IntegratorControl,
    n: usize,
    seed: u64,
) -> Result<Vec<TrajectoryResult>> {
    let states = sample_initial_conditions(spec, params, n, seed)?;
    states
        .par_iter()
        .map(|st| integrate_trajectory(st, params, spec.mass, ctrl))
        .collect()
}

fn row_from_results(phi: f64, results: &[TrajectoryResult]) -> AzimuthSweepRow {
    let mut n_ok = 0usize;
    let (mut sum_ky, mut sum_ky2, mut sum_kx, mut sum_kx2) = (0.0, 0.0, 0.0, 0.0);
    for r in results {
        if r.completed() {
            n_ok += 1;
            sum_ky += r.delta_ky;
            sum_ky2 += r.delta_ky * r.delta_ky;
            sum_kx += r.delta_kx;
            sum_kx2 += r.delta_kx * r.delta_kx;
        }
    }
    let n = n_ok.max(1) as f64;
    AzimuthSweepRow {
        phi,
        mean_dky: sum_ky / n,
        rms_dky: (sum_ky2 / n).sqrt(),
        mean_dkx: sum_kx / n,
        rms_dkx: (sum_kx2 / n).sqrt(),
        n_trajectories: n_ok,
        n_failed: results.len() - n_ok,
    }
}

/// Mean and rms of Δk_y and Δk_x at each azimuth of `spec_grid`.
///
/// All specs must share energy, polar angle and mass. Angle index a uses
/// the derived stream `mix(seed, a)`, so the sweep as a whole is
/// reproducible from one seed. Fails if more than 1% of any angle's
/// trajectories do not complete.
pub fn azimuth_sweep(
    spec_grid: &[IncidenceSpec],
    n_per_angle: usize,
    seed: u64,
    params: &PotentialParams,
    ctrl: &IntegratorControl,
) -> Result<Vec<AzimuthSweepRow>> {
    if spec_grid.is_empty() {
        return Err(GrazeError::EmptyInput("azimuth grid is empty".into()));
    }
    let first = &spec_grid[0];
    for s in spec_grid {
        if (s.energy_total - first.energy_total).abs() > 1e-12 * first.energy_total
            || (s.theta - first.theta).abs() > 1e-15
            || (s.mass - first.mass).abs() > 1e-15
        {
            return Err(GrazeError::InvalidInput(
                "azimuth sweep requires identical energy, theta and mass across the grid".into(),
            ));
        }
    }

    let rows: Result<Vec<AzimuthSweepRow>> = spec_grid
        .par_iter()
        .enumerate()
        .map(|(a, spec)| {
            let angle_seed = rng::mix(seed, a as u64);
            let results = run_ensemble(spec, params, ctrl, n_per_angle, angle_seed)?;
            let row = row_from_results(spec.phi, &results);
            if row.n_failed * 100 > n_per_angle {
                return Err(GrazeError::Integration(format!(
                    "{} of {} trajectories did not complete at phi = {}",
                    row.n_failed, n_per_angle, spec.phi
                )));
            }
            Ok(row)
        })
        .collect();
    rows
}

/// Histogram classical Δk_y onto channel-centered bins
/// [nG − G/2, nG + G/2). Probabilities sum to 1 over the emitted lines.
pub fn quasiclassical_spectrum(
    results: &[TrajectoryResult],
    g: f64,
) -> Result<DiffractionSpectrum> {
    if results.is_empty() {
        return Err(GrazeError::EmptyInput(
            "quasiclassical spectrum needs at least one trajectory".into(),
        ));
    }
    if !g.is_finite() || g <= 0.0 {
        return Err(GrazeError::InvalidInput(format!(
            "reciprocal lattice spacing must be positive, got {g}"
        )));
    }
    if let Some(bad) = results.iter().find(|r| !r.completed()) {
        return Err(GrazeError::InvalidInput(format!(
            "spectrum input contains a non-completed trajectory (status {:?})",
            bad.status
        )));
    }

    let bins: Vec<i32> = results
        .iter()
        .map(|r| (r.delta_ky / g + 0.5).floor() as i32)
        .collect();
    let n_min = *bins.iter().min().unwrap();
    let n_max = *bins.iter().max().unwrap();
    let mut counts = vec![0usize; (n_max - n_min + 1) as usize];
    for b in &bins {
        counts[(b - n_min) as usize] += 1;
    }
    let total = results.len() as f64;
    let lines: Vec<SpectrumLine> = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let n = n_min + i as i32;
            SpectrumLine {
                n,
                ky: results[0].initial.wavevector[1] + n as f64 * g,
                open: true,
                probability: c as f64 / total,
            }
        })
        .collect();

    Ok(DiffractionSpectrum {
        lines,
        meta: SpectrumMeta {
            method: Some(SpectrumMethod::Quasiclassical),
            g,
            n_half: n_max.unsigned_abs().max(n_min.unsigned_abs()) as usize,
            open_channels: counts.iter().filter(|&&c| c > 0).count(),
            ..SpectrumMeta::default()
        },
    })
}
