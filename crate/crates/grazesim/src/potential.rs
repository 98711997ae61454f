//! Corrugated Morse model of the atom–surface interaction.
//!
//! The interaction is a laterally averaged Morse well plus a separable
//! first-harmonic corrugation on the repulsive exponential:
//!
//! ```text
//! V(x,y,z)  = V0(z) + V1(z)·[cos(2πx/L) + cos(2πy/L)]
//! V0(z)     = D·(e^(−2α(z−z_e)) − 2·e^(−α(z−z_e)))
//! V1(z)     = β·D·e^(−2α(z−z_e))
//! ```
//!
//! Averaging over the channel coordinate x removes the cos(2πx/L) term and
//! nothing else, so the averaged potential carries exactly one Fourier
//! harmonic in y. Corrugation of this form couples only the principal
//! surface directions, which is the regime the rest of the crate assumes.
//!
//! The default parameters are illustrative placeholders on the He/LiF(001)
//! scale, not a fit to any measured surface; every number is configurable.

use serde::{Deserialize, Serialize};

use crate::{GrazeError, Result};

/// Parameters of the corrugated Morse model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialParams {
    /// Well depth D in meV.
    pub well_depth: f64,
    /// Inverse range α of the Morse exponentials in Å⁻¹.
    pub stiffness: f64,
    /// Position z_e of the well minimum in Å.
    pub equilibrium_z: f64,
    /// Dimensionless corrugation amplitude β, 0 ≤ β < 0.5.
    pub corrugation: f64,
    /// Lattice period L of the square surface cell in Å.
    pub period: f64,
    /// Height beyond which the potential is treated as zero, Å.
    pub z_cut: f64,
}

impl Default for PotentialParams {
    fn default() -> Self {
        // The softness alpha = 0.4 1/A keeps the collision slow against the
        // lateral motion (sharp window edges), and the corrugation is sized
        // so the window spans several reciprocal-lattice units at a few
        // hundred eV.
        PotentialParams::new(8.0, 0.40, 1.0, 0.18, 2.84).expect("defaults are valid")
    }
}

impl PotentialParams {
    /// Build a parameter set, deriving `z_cut` from the 1e-9·D decay level
    /// of the slowest exponential.
    pub fn new(
        well_depth: f64,
        stiffness: f64,
        equilibrium_z: f64,
        corrugation: f64,
        period: f64,
    ) -> Result<Self> {
        // |V| < 1e-9 D once 2 e^(-alpha dz) < 1e-9.
        let z_cut = equilibrium_z + (2.0e9f64).ln() / stiffness;
        let p = PotentialParams {
            well_depth,
            stiffness,
            equilibrium_z,
            corrugation,
            period,
            z_cut,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.well_depth.is_finite() || self.well_depth <= 0.0 {
            return Err(GrazeError::InvalidInput(format!(
                "well_depth must be positive, got {}",
                self.well_depth
            )));
        }
        if !self.stiffness.is_finite() || self.stiffness <= 0.0 {
            return Err(GrazeError::InvalidInput(format!(
                "stiffness must be positive, got {}",
                self.stiffness
            )));
        }
        if !self.period.is_finite() || self.period <= 0.0 {
            return Err(GrazeError::InvalidInput(format!(
                "period must be positive, got {}",
                self.period
            )));
        }
        if !self.corrugation.is_finite() || self.corrugation < 0.0 || self.corrugation >= 0.5 {
            return Err(GrazeError::InvalidInput(format!(
                "corrugation must lie in [0, 0.5), got {}",
                self.corrugation
            )));
        }
        if !self.equilibrium_z.is_finite() {
            return Err(GrazeError::InvalidInput("equilibrium_z must be finite".into()));
        }
        let v_cut = self.evaluate(0.0, 0.0, self.z_cut).abs();
        if v_cut >= 1e-9 * self.well_depth {
            return Err(GrazeError::InvalidInput(format!(
                "z_cut = {} does not satisfy |V(z_cut)| < 1e-9 D (|V| = {v_cut:.3e} meV)",
                self.z_cut
            )));
        }
        Ok(())
    }

    /// Reciprocal-lattice spacing G = 2π/L in Å⁻¹.
    pub fn reciprocal(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.period
    }

    /// Laterally averaged Morse part V0(z), meV.
    pub fn morse(&self, z: f64) -> f64 {
        let e = (-self.stiffness * (z - self.equilibrium_z)).exp();
        self.well_depth * (e * e - 2.0 * e)
    }

    /// Corrugation coefficient V1(z) = β·D·e^(−2α(z−z_e)), meV. This is the
    /// first Fourier harmonic of the averaged potential up to a factor 1/2.
    pub fn corrugation_coefficient(&self, z: f64) -> f64 {
        let e = (-self.stiffness * (z - self.equilibrium_z)).exp();
        self.corrugation * self.well_depth * e * e
    }

    /// Full 3D model value at (x, y, z), meV. Periodic in x and y with
    /// period L.
    pub fn evaluate(&self, x: f64, y: f64, z: f64) -> f64 {
        let g = self.reciprocal();
        self.morse(z) + self.corrugation_coefficient(z) * ((g * x).cos() + (g * y).cos())
    }

    /// Analytic gradient (∂V/∂x, ∂V/∂y, ∂V/∂z) in meV/Å.
    pub fn gradient(&self, x: f64, y: f64, z: f64) -> [f64; 3] {
        let g = self.reciprocal();
        let a = self.stiffness;
        let e = (-a * (z - self.equilibrium_z)).exp();
        let e2 = e * e;
        let v1 = self.corrugation * self.well_depth * e2;
        let (sx, cx) = (g * x).sin_cos();
        let (sy, cy) = (g * y).sin_cos();
        let dv0_dz = self.well_depth * (-2.0 * a * e2 + 2.0 * a * e);
        let dv1_dz = -2.0 * a * v1;
        [
            -v1 * g * sx,
            -v1 * g * sy,
            dv0_dz + dv1_dz * (cx + cy),
        ]
    }

    /// Channel-averaged potential (1/L)∫₀ᴸ V dx = V0(z) + V1(z)·cos(2πy/L).
    pub fn averaged(&self, y: f64, z: f64) -> f64 {
        self.morse(z) + self.corrugation_coefficient(z) * (self.reciprocal() * y).cos()
    }

    /// n-th Fourier coefficient of the averaged potential in y, with the
    /// convention V_av(y,z) = Σ_n c_n(z)·e^(i n G y):
    /// c_0 = V0, c_±1 = V1/2, and every higher harmonic vanishes.
    pub fn coupling_fourier(&self, n: i32, z: f64) -> f64 {
        match n {
            0 => self.morse(z),
            1 | -1 => 0.5 * self.corrugation_coefficient(z),
            _ => 0.0,
        }
    }

    /// Height of the diagnostic hard floor, where the averaged repulsion
    /// reaches 10³·D. Valid-energy dynamics never gets there.
    pub fn z_floor(&self) -> f64 {
        // V0 = D (u^2 - 2u) = 1000 D  =>  u = 1 + sqrt(1001)
        let u = 1.0 + 1001.0f64.sqrt();
        self.equilibrium_z - u.ln() / self.stiffness
    }
}

/// Direct quadrature of (1/L)∫₀ᴸ V(x, y, z) dx with `n_points` uniform
/// panels. The integrand is smooth and periodic, so the trapezoid rule
/// converges spectrally; this exists as an independent check of
/// [`PotentialParams::averaged`].
pub fn averaged_quadrature_oracle(
    params: &PotentialParams,
    y: f64,
    z: f64,
    n_points: usize,
) -> Result<f64> {
    if n_points < 16 {
        return Err(GrazeError::InvalidInput(format!(
            "quadrature needs at least 16 points, got {n_points}"
        )));
    }
    let h = params.period / n_points as f64;
    let mut acc = 0.0;
    for i in 0..n_points {
        acc += params.evaluate(i as f64 * h, y, z);
    }
    Ok(acc / n_points as f64)
}
