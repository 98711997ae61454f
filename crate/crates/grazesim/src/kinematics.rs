//! Beam specification and conversions between (E, θ, φ) and wavevector
//! components.
//!
//! For total energy E, polar angle θ from the outward surface normal and
//! azimuth φ from the channel axis, the momentum components are
//! p_x = √(2mE)·sinθ·cosφ, p_y = √(2mE)·sinθ·sinφ, p_z = √(2mE)·cosθ.
//! Everything downstream works with wavevectors k = p/ħ in Å⁻¹.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::hbar;
use crate::potential::PotentialParams;
use crate::{GrazeError, Result};

/// Incident beam definition. θ ∈ (π/2, π) so the beam moves toward the
/// surface; θ near π/2 is grazing.
///
/// Note the from-normal convention for θ: a value like 0.506π corresponds
/// to a beam 0.006π above the surface plane, with a small negative normal
/// wavevector component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncidenceSpec {
    /// Total kinetic energy in meV.
    pub energy_total: f64,
    /// Polar angle from the outward surface normal, rad.
    pub theta: f64,
    /// Azimuth from the channel (x) axis, rad.
    pub phi: f64,
    /// Projectile mass in amu.
    pub mass: f64,
    /// Start height above the surface plane in Å. Must be far enough out
    /// that the potential is negligible against the normal energy, see
    /// [`IncidenceSpec::validate_z_start`].
    pub z_start: f64,
}

impl IncidenceSpec {
    pub fn new(energy_total: f64, theta: f64, phi: f64, mass: f64, z_start: f64) -> Result<Self> {
        let spec = IncidenceSpec {
            energy_total,
            theta,
            phi,
            mass,
            z_start,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.energy_total.is_finite() || self.energy_total <= 0.0 {
            return Err(GrazeError::InvalidInput(format!(
                "energy_total must be positive, got {}",
                self.energy_total
            )));
        }
        if !self.mass.is_finite() || self.mass <= 0.0 {
            return Err(GrazeError::InvalidInput(format!(
                "mass must be positive, got {}",
                self.mass
            )));
        }
        if !self.theta.is_finite() || self.theta <= PI / 2.0 || self.theta >= PI {
            return Err(GrazeError::InvalidInput(format!(
                "theta must lie in (pi/2, pi) for an incoming beam, got {}",
                self.theta
            )));
        }
        if !self.phi.is_finite() {
            return Err(GrazeError::InvalidInput("phi must be finite".into()));
        }
        if !self.z_start.is_finite() || self.z_start <= 0.0 {
            return Err(GrazeError::InvalidInput(format!(
                "z_start must be positive, got {}",
                self.z_start
            )));
        }
        Ok(())
    }

    /// Check that the start height is asymptotic: |V(z_start)| must be
    /// below 1e-9 of the normal energy E·cos²θ.
    pub fn validate_z_start(&self, params: &PotentialParams) -> Result<()> {
        let e_normal = self.energy_total * self.theta.cos().powi(2);
        // worst case over the unit cell: |V0| plus the full corrugation swing
        let v = params.morse(self.z_start).abs()
            + 2.0 * params.corrugation_coefficient(self.z_start).abs();
        if v >= 1e-9 * e_normal {
            return Err(GrazeError::InvalidInput(format!(
                "z_start = {} is not asymptotic: |V| = {:.3e} meV vs 1e-9*E_n = {:.3e} meV; \
                 increase z_start",
                self.z_start,
                v,
                1e-9 * e_normal
            )));
        }
        Ok(())
    }

    /// Magnitude of the total wavevector √(2mE)/ħ in Å⁻¹.
    pub fn k_total(&self) -> f64 {
        (2.0 * self.mass * self.energy_total).sqrt() / hbar()
    }

    /// Energy in the plane perpendicular to the channel axis,
    /// E_perp = ħ²(k_y² + k_z²)/2m.
    pub fn energy_perp(&self) -> f64 {
        let k = self.momentum();
        crate::constants::HBAR_SQ_MEV_AMU_ANG2 * (k.ky * k.ky + k.kz * k.kz) / (2.0 * self.mass)
    }

    /// Shorthand for [`momentum_from_incidence`].
    pub fn momentum(&self) -> MomentumVector {
        momentum_from_incidence(self).expect("spec validated on construction")
    }
}

/// Wavevector triple in Å⁻¹ (momentum divided by ħ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentumVector {
    pub kx: f64,
    pub ky: f64,
    pub kz: f64,
}

impl MomentumVector {
    pub fn norm(&self) -> f64 {
        (self.kx * self.kx + self.ky * self.ky + self.kz * self.kz).sqrt()
    }

    /// Kinetic energy ħ²k²/2m in meV.
    pub fn energy(&self, mass: f64) -> f64 {
        crate::constants::HBAR_SQ_MEV_AMU_ANG2
            * (self.kx * self.kx + self.ky * self.ky + self.kz * self.kz)
            / (2.0 * mass)
    }
}

/// Incident wavevector components for a validated beam spec. k_z < 0 for
/// the incoming beam.
pub fn momentum_from_incidence(spec: &IncidenceSpec) -> Result<MomentumVector> {
    spec.validate()?;
    let k = spec.k_total();
    let (sin_theta, cos_theta) = spec.theta.sin_cos();
    let (sin_phi, cos_phi) = spec.phi.sin_cos();
    Ok(MomentumVector {
        kx: k * sin_theta * cos_phi,
        ky: k * sin_theta * sin_phi,
        kz: k * cos_theta,
    })
}

/// Reconstruct (E, θ, φ) from a wavevector. Inverse of
/// [`momentum_from_incidence`] up to roundoff.
pub fn incidence_angles_from_momentum(k: &MomentumVector, mass: f64) -> (f64, f64, f64) {
    let energy = k.energy(mass);
    let norm = k.norm();
    let theta = (k.kz / norm).acos();
    let phi = k.ky.atan2(k.kx);
    (energy, theta, phi)
}

/// Convert a momentum-space window width (in wavevector units, Å⁻¹) into
/// the corresponding window of incident azimuths:
/// W_φ = 2·asin(W_ky / (2·k·sinθ)).
pub fn angle_width_from_momentum_width(w_ky: f64, spec: &IncidenceSpec) -> Result<f64> {
    if !w_ky.is_finite() || w_ky < 0.0 {
        return Err(GrazeError::Domain(format!(
            "momentum width must be non-negative, got {w_ky}"
        )));
    }
    let arg = w_ky / (2.0 * spec.k_total() * spec.theta.sin());
    if arg > 1.0 {
        return Err(GrazeError::Domain(format!(
            "momentum width {w_ky} exceeds the kinematic limit 2*k*sin(theta)"
        )));
    }
    Ok(2.0 * arg.asin())
}
