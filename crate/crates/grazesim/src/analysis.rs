//! Width of the efficient momentum-transfer window, estimated three ways.
//!
//! Freezing the normal coordinate at the distance of closest approach
//! reduces the averaged in-plane dynamics to a pendulum
//! H = p_y²/2m + V_av(y, z_m). The libration island of that pendulum spans
//! a momentum interval
//!
//! ```text
//! W_py ≈ 2·√(2m·[V_av(y_u, z_m) − V_av(y_s, z_m)])
//! ```
//!
//! between the hyperbolic point y_u and the stable point y_s, which is the
//! analytic estimate of the window width. The classical and quantum
//! estimators take the full width at half height of the rms Δk_y versus
//! azimuth curve produced by the trajectory ensembles and the
//! coupled-channel solver respectively.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{azimuth_sweep, AzimuthSweepRow};
use crate::integrator::IntegratorControl;
use crate::kinematics::{angle_width_from_momentum_width, IncidenceSpec};
use crate::potential::PotentialParams;
use crate::quantum::{self, QuantumOpts};
use crate::spectrum::DiffractionSpectrum;
use crate::{GrazeError, Result};

/// Which estimator produced a width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WidthMethod {
    Analytic,
    ClassicalFwhm,
    QuantumFwhm,
}

/// Window width in momentum (as wavevector W_ky = W_py/ħ) and azimuth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidthEstimate {
    /// Width in wavevector units, Å⁻¹.
    pub w_ky: f64,
    /// Width in incident azimuth, rad.
    pub w_phi: f64,
    pub method: WidthMethod,
    /// Total beam energy the estimate refers to, meV.
    pub energy_mev: f64,
}

/// Stationary structure of the frozen averaged potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PendulumGeometry {
    /// Most stable fixed point of V_av(·, z), Å.
    pub y_stable: f64,
    /// Hyperbolic point of the innermost separatrix, Å.
    pub y_unstable: f64,
    /// Closest-approach height z_m where the coupling is strongest, Å.
    pub z_max_interaction: f64,
}

/// Extrema of V_av(·, z) over one period: the single-harmonic corrugation
/// puts the minimum at L/2 and the maximum at 0 for β > 0 (roles swap if
/// the corrugation coefficient changes sign).
pub fn fixed_points(params: &PotentialParams, z: f64) -> Result<(f64, f64)> {
    let v1 = params.corrugation_coefficient(z);
    if v1 == 0.0 {
        return Err(GrazeError::Domain(
            "corrugation vanishes: the in-plane potential is flat and has no fixed points".into(),
        ));
    }
    if v1 > 0.0 {
        Ok((params.period / 2.0, 0.0))
    } else {
        Ok((0.0, params.period / 2.0))
    }
}

/// Innermost turning point of the averaged normal motion above the stable
/// line: solves V_av(y_s, z_m) = E·cos²θ on the repulsive branch by
/// bisection to 1e-10 Å.
pub fn closest_approach(spec: &IncidenceSpec, params: &PotentialParams) -> Result<f64> {
    let e_normal = spec.energy_total * spec.theta.cos().powi(2);
    if e_normal <= 0.0 {
        return Err(GrazeError::Domain(format!(
            "normal energy must be positive, got {e_normal} meV"
        )));
    }
    let (y_s, _) = fixed_points(params, params.equilibrium_z)
        .unwrap_or((params.period / 2.0, 0.0));
    let f = |z: f64| params.averaged(y_s, z) - e_normal;

    let mut lo = params.z_floor();
    let mut hi = params.z_cut;
    if f(lo) <= 0.0 {
        return Err(GrazeError::Domain(format!(
            "normal energy {e_normal} meV exceeds the repulsive wall at the floor"
        )));
    }
    if f(hi) >= 0.0 {
        return Err(GrazeError::Domain(
            "no turning point: the potential never drops below the normal energy".into(),
        ));
    }
    // f goes from positive at the wall to negative outside and stays
    // negative (the well is below zero), so the crossing is unique.
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Pendulum geometry at the closest approach of this beam.
pub fn pendulum_geometry(
    spec: &IncidenceSpec,
    params: &PotentialParams,
) -> Result<PendulumGeometry> {
    let z_m = closest_approach(spec, params)?;
    let (y_stable, y_unstable) = fixed_points(params, z_m)?;
    Ok(PendulumGeometry {
        y_stable,
        y_unstable,
        z_max_interaction: z_m,
    })
}

/// Analytic window width from the pendulum island size at closest
/// approach.
pub fn width_analytic(spec: &IncidenceSpec, params: &PotentialParams) -> Result<WidthEstimate> {
    let geom = pendulum_geometry(spec, params)?;
    let barrier = params.averaged(geom.y_unstable, geom.z_max_interaction)
        - params.averaged(geom.y_stable, geom.z_max_interaction);
    let w_py = 2.0 * (2.0 * spec.mass * barrier.max(0.0)).sqrt();
    let w_ky = w_py / crate::constants::hbar();
    let w_phi = angle_width_from_momentum_width(w_ky, spec)?;
    Ok(WidthEstimate {
        w_ky,
        w_phi,
        method: WidthMethod::Analytic,
        energy_mev: spec.energy_total,
    })
}

/// Full width at half height of a peaked curve by linear interpolation.
/// The baseline is the median of the outer 20% of the points, which
/// guards against a non-zero noise floor in the wings.
pub fn fwhm(curve: &[(f64, f64)]) -> Result<f64> {
    if curve.len() < 11 {
        return Err(GrazeError::InvalidInput(format!(
            "FWHM needs at least 11 points, got {}",
            curve.len()
        )));
    }
    let n = curve.len();
    let n_outer = ((n as f64 * 0.2).ceil() as usize).max(2);
    let mut wings: Vec<f64> = Vec::with_capacity(n_outer);
    for i in 0..n_outer.div_ceil(2) {
        wings.push(curve[i].1);
        wings.push(curve[n - 1 - i].1);
    }
    wings.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let baseline = if wings.len() % 2 == 1 {
        wings[wings.len() / 2]
    } else {
        0.5 * (wings[wings.len() / 2 - 1] + wings[wings.len() / 2])
    };

    let peak = curve
        .iter()
        .map(|&(_, v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    let half = 0.5 * (peak + baseline);
    if peak <= baseline {
        return Err(GrazeError::Domain(
            "curve has no peak above its baseline".into(),
        ));
    }

    let interpolate = |a: (f64, f64), b: (f64, f64)| -> f64 {
        a.0 + (half - a.1) * (b.0 - a.0) / (b.1 - a.1)
    };

    // outermost extent of the region at or above half height, so interior
    // substructure (the curve can dip between two symmetric maxima) does
    // not truncate the width
    let mut left = None;
    for i in 1..n {
        if curve[i - 1].1 < half && curve[i].1 >= half {
            left = Some(interpolate(curve[i - 1], curve[i]));
            break;
        }
    }
    let mut right = None;
    for i in (1..n).rev() {
        if curve[i].1 < half && curve[i - 1].1 >= half {
            right = Some(interpolate(curve[i], curve[i - 1]));
            break;
        }
    }
    match (left, right) {
        (Some(l), Some(r)) if r > l => Ok(r - l),
        _ => Err(GrazeError::Domain(
            "curve does not cross its half height on both sides of the peak".into(),
        )),
    }
}

/// Classical width: FWHM of the rms Δk_y(φ) sweep curve.
pub fn width_fwhm(
    curve: &[(f64, f64)],
    spec_template: &IncidenceSpec,
    method: WidthMethod,
) -> Result<WidthEstimate> {
    let w_phi = fwhm(curve)?;
    let w_ky = 2.0 * spec_template.k_total() * spec_template.theta.sin() * (w_phi / 2.0).sin();
    Ok(WidthEstimate {
        w_ky,
        w_phi,
        method,
        energy_mev: spec_template.energy_total,
    })
}

/// Broadened spectrum: f(k) = Σ_n P_n·(γ/π)/((k − k_n)² + γ²) sampled on
/// `axis`. Peak positions sit at the channel offsets n·G; the integral
/// over an unbounded axis equals Σ P_n.
pub fn convolve_lorentzian(
    spectrum: &DiffractionSpectrum,
    gamma: f64,
    axis: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if !gamma.is_finite() || gamma <= 0.0 {
        return Err(GrazeError::InvalidInput(format!(
            "Lorentzian width must be positive, got {gamma}"
        )));
    }
    let g = spectrum.meta.g;
    Ok(axis
        .iter()
        .map(|&k| {
            let f: f64 = spectrum
                .lines
                .iter()
                .map(|l| {
                    let d = k - l.n as f64 * g;
                    l.probability * (gamma / std::f64::consts::PI) / (d * d + gamma * gamma)
                })
                .sum();
            (k, f)
        })
        .collect())
}

/// Settings for the energy scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanCtrl {
    /// Trajectories per azimuth for the classical estimator.
    pub n_per_angle: usize,
    /// Azimuth grid points (odd, symmetric about 0).
    pub phi_points: usize,
    /// Half-range of the azimuth grid in units of the analytic width.
    pub phi_span_factor: f64,
    pub seed: u64,
    pub integrator: IntegratorControl,
    pub quantum: QuantumOpts,
    /// Skip the quantum estimator (the classical one is the slow part,
    /// but the quantum one can dominate at high energies).
    pub with_quantum: bool,
}

impl Default for ScanCtrl {
    fn default() -> Self {
        ScanCtrl {
            n_per_angle: 400,
            phi_points: 33,
            phi_span_factor: 1.6,
            seed: 1,
            integrator: IntegratorControl {
                energy_tol: 1e-6,
                ..Default::default()
            },
            // FWHM needs the rms to ~1%, not the spectroscopic grid
            quantum: QuantumOpts {
                points_per_wavelength: 8,
                step_cap: 8e-3,
                ..QuantumOpts::default()
            },
            with_quantum: true,
        }
    }
}

/// One row of the energy scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyScanRow {
    pub energy_mev: f64,
    pub analytic: WidthEstimate,
    pub classical: Option<WidthEstimate>,
    pub quantum: Option<WidthEstimate>,
    pub open_channels: usize,
    /// Failures recorded instead of aborting the scan.
    pub errors: Vec<String>,
}

/// Build the symmetric azimuth grid used for one scan row.
pub fn scan_phi_grid(w_phi_analytic: f64, ctrl: &ScanCtrl) -> Vec<f64> {
    let span = (ctrl.phi_span_factor * w_phi_analytic).max(1e-4);
    let n = ctrl.phi_points.max(11) | 1; // odd
    let mid = (n / 2) as i64;
    let step = span / mid as f64;
    (0..n as i64).map(|i| (i - mid) as f64 * step).collect()
}

/// Start height that keeps the beam spec asymptotic for this energy; the
/// validity threshold scales with E·cos²θ, so low energies need a higher
/// start.
pub fn auto_z_start(
    base: f64,
    energy_mev: f64,
    theta: f64,
    params: &PotentialParams,
) -> f64 {
    let e_normal = energy_mev * theta.cos().powi(2);
    // 2 D e^(-alpha dz) + corrugation swing < 1e-9 E_n, with 2x margin
    let needed = params.equilibrium_z
        + (4.0 * (1.0 + params.corrugation) * params.well_depth / (1e-9 * e_normal))
            .max(std::f64::consts::E)
            .ln()
            / params.stiffness;
    base.max((needed * 1.02).ceil())
}

/// Quantum rms Δk_y at one azimuth.
fn quantum_rms(spec: &IncidenceSpec, params: &PotentialParams, opts: &QuantumOpts) -> Result<f64> {
    let spectrum = quantum::diffraction_spectrum(spec, params, opts)?;
    spectrum.check_unitarity(1e-4)?;
    Ok(spectrum.moments().1)
}

/// Classical sweep rows for an azimuth grid at fixed energy.
pub fn classical_sweep_curve(
    template: &IncidenceSpec,
    phis: &[f64],
    params: &PotentialParams,
    ctrl: &ScanCtrl,
) -> Result<Vec<AzimuthSweepRow>> {
    let grid: Result<Vec<IncidenceSpec>> = phis
        .iter()
        .map(|&phi| {
            IncidenceSpec::new(
                template.energy_total,
                template.theta,
                phi,
                template.mass,
                template.z_start,
            )
        })
        .collect();
    azimuth_sweep(&grid?, ctrl.n_per_angle, ctrl.seed, params, &ctrl.integrator)
}

/// Width estimators versus energy. Energies in meV; per-energy failures
/// are recorded in the row and the scan continues.
pub fn energy_scan(
    energies: &[f64],
    template: &IncidenceSpec,
    params: &PotentialParams,
    ctrl: &ScanCtrl,
) -> Result<Vec<EnergyScanRow>> {
    if energies.is_empty() {
        return Err(GrazeError::EmptyInput("energy grid is empty".into()));
    }
    energies
        .par_iter()
        .map(|&energy| scan_row(energy, template, params, ctrl))
        .collect()
}

fn scan_row(
    energy: f64,
    template: &IncidenceSpec,
    params: &PotentialParams,
    ctrl: &ScanCtrl,
) -> Result<EnergyScanRow> {
    let z_start = auto_z_start(template.z_start, energy, template.theta, params);
    let spec = IncidenceSpec::new(energy, template.theta, 0.0, template.mass, z_start)?;
    let analytic = width_analytic(&spec, params)?;
    let mut errors = Vec::new();

    let phis = scan_phi_grid(analytic.w_phi, ctrl);

    let classical = match classical_sweep_curve(&spec, &phis, params, ctrl) {
        Ok(rows) => {
            let curve: Vec<(f64, f64)> = rows.iter().map(|r| (r.phi, r.rms_dky)).collect();
            match width_fwhm(&curve, &spec, WidthMethod::ClassicalFwhm) {
                Ok(w) => Some(w),
                Err(e) => {
                    errors.push(format!("classical fwhm: {e}"));
                    None
                }
            }
        }
        Err(e) => {
            errors.push(format!("classical sweep: {e}"));
            None
        }
    };

    let mut open_channels = 0;
    let quantum = if ctrl.with_quantum {
        let mut rms_curve = Vec::with_capacity(phis.len());
        let mut failed = None;
        for &phi in &phis {
            let s = IncidenceSpec::new(energy, template.theta, phi, template.mass, z_start)?;
            if phi == 0.0 {
                open_channels = quantum::auto_half_width(&s, params, 0)
                    .map(|w| {
                        quantum::build_channel_basis(&s, params, w.max(1))
                            .map(|b| b.open_count())
                            .unwrap_or(0)
                    })
                    .unwrap_or(0);
            }
            match quantum_rms(&s, params, &ctrl.quantum) {
                Ok(rms) => rms_curve.push((phi, rms)),
                Err(e) => {
                    failed = Some(format!("quantum rms at phi = {phi}: {e}"));
                    break;
                }
            }
        }
        if let Some(e) = failed {
            errors.push(e);
            None
        } else {
            match width_fwhm(&rms_curve, &spec, WidthMethod::QuantumFwhm) {
                Ok(w) => Some(w),
                Err(e) => {
                    errors.push(format!("quantum fwhm: {e}"));
                    None
                }
            }
        }
    } else {
        let basis_width = quantum::auto_half_width(&spec, params, 0).unwrap_or(1);
        open_channels = quantum::build_channel_basis(&spec, params, basis_width.max(1))
            .map(|b| b.open_count())
            .unwrap_or(0);
        None
    };

    Ok(EnergyScanRow {
        energy_mev: energy,
        analytic,
        classical,
        quantum,
        open_channels,
        errors,
    })
}
