//! Diffraction spectra over the reciprocal-lattice channel grid.

use serde::{Deserialize, Serialize};

use crate::{GrazeError, Result};

/// How a spectrum was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumMethod {
    /// Coupled-channel solve of the effective 2D model.
    CloseCoupling,
    /// Wavepacket propagation on the (y, z) grid, projected on channels.
    SplitOperator,
    /// Histogram of classical Δk_y over channel-centered bins.
    Quasiclassical,
}

/// One diffraction channel: final parallel wavevector ky0 + n·G.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumLine {
    /// Channel index (reciprocal-lattice order).
    pub n: i32,
    /// Final parallel wavevector component in Å⁻¹.
    pub ky: f64,
    /// Whether the channel is energetically open. Closed channels carry no
    /// outgoing flux and have probability 0.
    pub open: bool,
    /// Flux-normalized probability.
    pub probability: f64,
}

/// Solver settings recorded alongside a spectrum so a run can be
/// reproduced exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SpectrumMeta {
    pub method: Option<SpectrumMethod>,
    pub energy_mev: f64,
    pub theta_rad: f64,
    pub phi_rad: f64,
    /// Reciprocal-lattice spacing G = 2π/L.
    pub g: f64,
    /// Half-width of the channel basis (channels −N..N).
    pub n_half: usize,
    /// Number of open channels.
    pub open_channels: usize,
    /// z-grid step for grid-based solvers.
    pub grid_step: Option<f64>,
    /// z-grid span for grid-based solvers.
    pub grid_span: Option<(f64, f64)>,
    /// |Σ P_n − 1| reported by the solver, when it has a meaning.
    pub unitarity_defect: Option<f64>,
}

/// Flux-normalized diffraction probabilities per channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffractionSpectrum {
    pub lines: Vec<SpectrumLine>,
    pub meta: SpectrumMeta,
}

impl DiffractionSpectrum {
    /// Sum of open-channel probabilities.
    pub fn total_probability(&self) -> f64 {
        self.lines.iter().map(|l| l.probability).sum()
    }

    /// Probability of channel `n`, zero if absent.
    pub fn probability(&self, n: i32) -> f64 {
        self.lines
            .iter()
            .find(|l| l.n == n)
            .map_or(0.0, |l| l.probability)
    }

    /// Verify Σ P_n = 1 within `tol` and P_n ≥ 0.
    pub fn check_unitarity(&self, tol: f64) -> Result<()> {
        if let Some(bad) = self.lines.iter().find(|l| l.probability < -tol) {
            return Err(GrazeError::NonUnitary(format!(
                "negative probability {} in channel {}",
                bad.probability, bad.n
            )));
        }
        let defect = (self.total_probability() - 1.0).abs();
        if defect > tol {
            return Err(GrazeError::NonUnitary(format!(
                "sum of probabilities deviates from 1 by {defect:.3e} (tolerance {tol:.1e})"
            )));
        }
        Ok(())
    }

    /// Mean and root-mean-square of Δk_y = n·G under the spectrum.
    /// The rms is of Δk_y itself, not a centered standard deviation.
    pub fn moments(&self) -> (f64, f64) {
        let g = self.meta.g;
        let mut mean = 0.0;
        let mut sq = 0.0;
        for l in &self.lines {
            let dky = l.n as f64 * g;
            mean += l.probability * dky;
            sq += l.probability * dky * dky;
        }
        (mean, sq.sqrt())
    }
}

/// Mean and rms of Δk_y from a spectrum that is unitary within `tol`.
pub fn quantum_moments(spectrum: &DiffractionSpectrum, tol: f64) -> Result<(f64, f64)> {
    spectrum.check_unitarity(tol)?;
    Ok(spectrum.moments())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spectrum(pairs: &[(i32, f64)], g: f64) -> DiffractionSpectrum {
        DiffractionSpectrum {
            lines: pairs
                .iter()
                .map(|&(n, p)| SpectrumLine {
                    n,
                    ky: n as f64 * g,
                    open: true,
                    probability: p,
                })
                .collect(),
            meta: SpectrumMeta {
                g,
                ..SpectrumMeta::default()
            },
        }
    }

    #[test]
    fn pure_specular_has_zero_moments() {
        let s = spectrum(&[(0, 1.0)], 2.2);
        assert_eq!(s.moments(), (0.0, 0.0));
    }

    #[test]
    fn symmetric_spectrum_has_zero_mean() {
        let s = spectrum(&[(-2, 0.2), (-1, 0.25), (0, 0.1), (1, 0.25), (2, 0.2)], 2.2);
        let (mean, rms) = s.moments();
        assert!(mean.abs() < 1e-15);
        assert!(rms > 0.0);
    }

    #[test]
    fn two_channel_rms_is_g() {
        let g = 2.2123;
        let s = spectrum(&[(-1, 0.5), (1, 0.5)], g);
        let (mean, rms) = quantum_moments(&s, 1e-9).unwrap();
        assert!(mean.abs() < 1e-15);
        assert!((rms - g).abs() < 1e-12);
    }

    #[test]
    fn unitarity_check_rejects_bad_sums() {
        let s = spectrum(&[(0, 0.9)], 2.2);
        assert!(s.check_unitarity(1e-6).is_err());
        assert!(s.check_unitarity(0.2).is_ok());
    }
}
