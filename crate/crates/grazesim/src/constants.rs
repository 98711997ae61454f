//! Physical constants in the crate unit system (meV, Å, amu).

use serde::{Deserialize, Serialize};

/// ħ²/(1 amu · 1 Å²) in meV. This single number fixes the whole unit
/// system: with it, ħ²k²/2m is in meV for k in Å⁻¹ and m in amu.
pub const HBAR_SQ_MEV_AMU_ANG2: f64 = 4.1804;

/// Mass of ⁴He in amu, the default projectile.
pub const HE4_MASS_AMU: f64 = 4.0026;

/// Immutable bundle of the constants entering kinetic-energy and
/// wavevector conversions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysConstants {
    /// ħ²/(amu·Å²) in meV·amu·Å² units.
    pub hbar_sq_per_amu_ang2: f64,
    /// Default projectile mass in amu.
    pub default_mass: f64,
}

impl Default for PhysConstants {
    fn default() -> Self {
        PhysConstants {
            hbar_sq_per_amu_ang2: HBAR_SQ_MEV_AMU_ANG2,
            default_mass: HE4_MASS_AMU,
        }
    }
}

impl PhysConstants {
    /// ħ in √(meV·amu)·Å, i.e. the factor converting a wavevector in Å⁻¹
    /// into a momentum in √(meV·amu).
    pub fn hbar(&self) -> f64 {
        self.hbar_sq_per_amu_ang2.sqrt()
    }
}

/// ħ in √(meV·amu)·Å for the default constants.
pub fn hbar() -> f64 {
    HBAR_SQ_MEV_AMU_ANG2.sqrt()
}
