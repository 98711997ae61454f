//! Run configuration: a TOML file with one section per subsystem, every
//! key optional, CLI flags layered on top. The resolved configuration is
//! echoed next to every output so a run can be reproduced byte for byte.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::ScanCtrl;
use crate::integrator::IntegratorControl;
use crate::kinematics::IncidenceSpec;
use crate::potential::PotentialParams;
use crate::quantum::QuantumOpts;
use crate::{GrazeError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialConfig {
    pub well_depth_mev: f64,
    pub stiffness_inv_ang: f64,
    pub equilibrium_ang: f64,
    pub corrugation: f64,
    pub period_ang: f64,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        let p = PotentialParams::default();
        PotentialConfig {
            well_depth_mev: p.well_depth,
            stiffness_inv_ang: p.stiffness,
            equilibrium_ang: p.equilibrium_z,
            corrugation: p.corrugation,
            period_ang: p.period,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IncidenceConfig {
    pub energy_ev: f64,
    /// Polar angle in radians; exclusive with `theta_pi`.
    pub theta_rad: Option<f64>,
    /// Polar angle in units of π (e.g. 0.506); exclusive with `theta_rad`.
    pub theta_pi: Option<f64>,
    pub mass_amu: f64,
    pub z_start_ang: f64,
}

impl Default for IncidenceConfig {
    fn default() -> Self {
        IncidenceConfig {
            energy_ev: 200.0,
            theta_rad: None,
            theta_pi: None,
            mass_amu: crate::constants::HE4_MASS_AMU,
            z_start_ang: 60.0,
        }
    }
}

impl IncidenceConfig {
    pub fn theta(&self) -> Result<f64> {
        match (self.theta_rad, self.theta_pi) {
            (Some(_), Some(_)) => Err(GrazeError::Config(
                "set either theta_rad or theta_pi, not both".into(),
            )),
            (Some(r), None) => Ok(r),
            (None, Some(p)) => Ok(p * std::f64::consts::PI),
            (None, None) => Ok(0.506 * std::f64::consts::PI),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleConfig {
    pub n_per_angle: usize,
    pub seed: u64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            n_per_angle: 2000,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub energy_tol: f64,
    pub step_rtol: Option<f64>,
    pub max_steps: u64,
    pub max_step: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        let c = IntegratorControl::default();
        IntegratorConfig {
            energy_tol: c.energy_tol,
            step_rtol: c.step_rtol,
            max_steps: c.max_steps,
            max_step: c.max_step,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Symmetric azimuth range: φ ∈ [−phi_max_rad, phi_max_rad].
    pub phi_max_rad: f64,
    /// Number of grid angles (made odd if even, so φ = 0 is sampled).
    pub phi_count: usize,
    /// Also compute the quantum Δk_y moments per angle.
    pub with_quantum: bool,
    /// Per-angle single-trajectory scatter rows written to scatter.csv
    /// (0 disables).
    pub scatter_per_angle: usize,
    /// Looser energy tolerance for sweep ensembles; the per-trajectory
    /// statistics do not need the tight default.
    pub energy_tol: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            phi_max_rad: 0.06,
            phi_count: 61,
            with_quantum: true,
            scatter_per_angle: 0,
            energy_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    pub phi_list_rad: Vec<f64>,
    /// Lorentzian broadening as a fraction of G.
    pub gamma_factor: f64,
    /// Trajectories for the quasiclassical histogram at each azimuth.
    pub n_classical: usize,
    /// Points of the broadened curve.
    pub axis_points: usize,
    /// Curve axis extends this many channels beyond the open window.
    pub axis_pad_channels: f64,
    pub energy_tol: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig {
            phi_list_rad: vec![0.0, 0.01, 0.02, 0.04],
            gamma_factor: 0.2,
            n_classical: 20_000,
            axis_points: 1201,
            axis_pad_channels: 2.0,
            energy_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuantumConfig {
    pub evanescent_buffer: usize,
    pub points_per_wavelength: usize,
    pub step_cap_ang: f64,
}

impl Default for QuantumConfig {
    fn default() -> Self {
        let o = QuantumOpts::default();
        QuantumConfig {
            evanescent_buffer: o.evanescent_buffer,
            points_per_wavelength: o.points_per_wavelength,
            step_cap_ang: o.step_cap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    /// Explicit energies in eV; when empty, a log grid over
    /// [e_min_ev, e_max_ev] with e_count points is used.
    pub energies_ev: Vec<f64>,
    pub e_min_ev: f64,
    pub e_max_ev: f64,
    pub e_count: usize,
    pub n_per_angle: usize,
    pub phi_points: usize,
    pub phi_span_factor: f64,
    pub with_quantum: bool,
    pub energy_tol: f64,
    /// Coarser z step for the scan's quantum estimator (the FWHM only
    /// needs percent-level probabilities).
    pub quantum_step_cap_ang: f64,
    pub quantum_points_per_wavelength: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        let c = ScanCtrl::default();
        ScanConfig {
            energies_ev: Vec::new(),
            e_min_ev: 10.0,
            e_max_ev: 1000.0,
            e_count: 13,
            n_per_angle: c.n_per_angle,
            phi_points: c.phi_points,
            phi_span_factor: c.phi_span_factor,
            with_quantum: c.with_quantum,
            energy_tol: c.integrator.energy_tol,
            quantum_step_cap_ang: c.quantum.step_cap,
            quantum_points_per_wavelength: c.quantum.points_per_wavelength,
        }
    }
}

/// Complete run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub potential: PotentialConfig,
    pub incidence: IncidenceConfig,
    pub ensemble: EnsembleConfig,
    pub integrator: IntegratorConfig,
    pub sweep: SweepConfig,
    pub spectrum: SpectrumConfig,
    pub quantum: QuantumConfig,
    pub scan: ScanConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            GrazeError::Config(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| GrazeError::Config(e.to_string()))
    }

    pub fn potential_params(&self) -> Result<PotentialParams> {
        PotentialParams::new(
            self.potential.well_depth_mev,
            self.potential.stiffness_inv_ang,
            self.potential.equilibrium_ang,
            self.potential.corrugation,
            self.potential.period_ang,
        )
    }

    /// Beam spec at the given azimuth, with the configured start height.
    pub fn incidence(&self, phi: f64) -> Result<IncidenceSpec> {
        IncidenceSpec::new(
            self.incidence.energy_ev * 1e3,
            self.incidence.theta()?,
            phi,
            self.incidence.mass_amu,
            self.incidence.z_start_ang,
        )
    }

    pub fn integrator_control(&self, energy_tol: f64) -> IntegratorControl {
        IntegratorControl {
            energy_tol,
            step_rtol: self.integrator.step_rtol,
            max_steps: self.integrator.max_steps,
            max_step: self.integrator.max_step,
        }
    }

    pub fn quantum_opts(&self) -> QuantumOpts {
        QuantumOpts {
            evanescent_buffer: self.quantum.evanescent_buffer,
            points_per_wavelength: self.quantum.points_per_wavelength,
            step_cap: self.quantum.step_cap_ang,
            ..QuantumOpts::default()
        }
    }

    /// Azimuth grid of the sweep command (odd count, symmetric, includes 0).
    pub fn sweep_phis(&self) -> Result<Vec<f64>> {
        if self.sweep.phi_count == 0 {
            return Err(GrazeError::Config("sweep.phi_count must be >= 1".into()));
        }
        if !self.sweep.phi_max_rad.is_finite() || self.sweep.phi_max_rad <= 0.0 {
            return Err(GrazeError::Config("sweep.phi_max_rad must be positive".into()));
        }
        let n = self.sweep.phi_count | 1;
        let mid = (n / 2) as i64;
        let step = self.sweep.phi_max_rad / mid.max(1) as f64;
        // built from the center so the grid is exactly symmetric and
        // contains phi = 0
        Ok((0..n as i64).map(|i| (i - mid) as f64 * step).collect())
    }

    /// Energy grid of the scan command, in meV.
    pub fn scan_energies(&self) -> Result<Vec<f64>> {
        if !self.scan.energies_ev.is_empty() {
            return Ok(self.scan.energies_ev.iter().map(|e| e * 1e3).collect());
        }
        if self.scan.e_count < 2 || self.scan.e_min_ev <= 0.0 || self.scan.e_max_ev <= self.scan.e_min_ev
        {
            return Err(GrazeError::Config(
                "scan grid needs e_count >= 2 and 0 < e_min_ev < e_max_ev".into(),
            ));
        }
        let log_min = self.scan.e_min_ev.ln();
        let log_max = self.scan.e_max_ev.ln();
        Ok((0..self.scan.e_count)
            .map(|i| {
                let t = i as f64 / (self.scan.e_count - 1) as f64;
                (log_min + t * (log_max - log_min)).exp() * 1e3
            })
            .collect())
    }

    pub fn scan_ctrl(&self) -> ScanCtrl {
        ScanCtrl {
            n_per_angle: self.scan.n_per_angle,
            phi_points: self.scan.phi_points,
            phi_span_factor: self.scan.phi_span_factor,
            seed: self.ensemble.seed,
            integrator: self.integrator_control(self.scan.energy_tol),
            quantum: QuantumOpts {
                evanescent_buffer: self.quantum.evanescent_buffer,
                points_per_wavelength: self.scan.quantum_points_per_wavelength,
                step_cap: self.scan.quantum_step_cap_ang,
                ..QuantumOpts::default()
            },
            with_quantum: self.scan.with_quantum,
        }
    }
}
