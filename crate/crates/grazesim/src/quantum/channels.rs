//! Reciprocal-lattice channel basis for the effective 2D model.
//!
//! The fast motion along the channel axis is frozen, so scattering
//! redistributes momentum only among parallel components ky0 + n·G with
//! G = 2π/L. Channel n is open when the in-plane energy E_perp exceeds its
//! parallel kinetic energy; the remaining normal wavevector follows from
//! energy conservation in the (y, z) plane.

use serde::{Deserialize, Serialize};

use crate::constants::HBAR_SQ_MEV_AMU_ANG2;
use crate::kinematics::IncidenceSpec;
use crate::potential::PotentialParams;
use crate::{GrazeError, Result};

/// One diffraction channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub n: i32,
    /// Parallel wavevector ky0 + n·G, Å⁻¹.
    pub ky: f64,
    /// Squared normal wavevector k_z,n² = 2mE_perp/ħ² − ky², Å⁻². Negative
    /// for closed channels.
    pub kz_sq: f64,
}

impl Channel {
    pub fn is_open(&self) -> bool {
        self.kz_sq > 0.0
    }

    /// Normal wavevector for an open channel, Å⁻¹.
    pub fn kz(&self) -> f64 {
        self.kz_sq.max(0.0).sqrt()
    }

    /// Decay constant κ for a closed channel, Å⁻¹.
    pub fn kappa(&self) -> f64 {
        (-self.kz_sq).max(0.0).sqrt()
    }
}

/// Channel set n = −N..N with the shared kinematic quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelBasis {
    pub channels: Vec<Channel>,
    pub n_half: usize,
    /// Reciprocal-lattice spacing G, Å⁻¹.
    pub g: f64,
    /// Incident parallel component normal to the channel axis, Å⁻¹.
    pub ky0: f64,
    /// Total in-plane energy E_perp = E − ħ²k_x²/2m, meV.
    pub e_perp: f64,
    /// 2m·E_perp/ħ², Å⁻².
    pub k_perp_sq: f64,
    pub mass: f64,
    pub energy_total: f64,
    pub theta: f64,
    pub phi: f64,
}

impl ChannelBasis {
    pub fn channel(&self, n: i32) -> Option<&Channel> {
        let idx = n + self.n_half as i32;
        if idx < 0 {
            return None;
        }
        self.channels.get(idx as usize)
    }

    pub fn open_channels(&self) -> impl Iterator<Item = &Channel> {
        self.channels.iter().filter(|c| c.is_open())
    }

    pub fn open_count(&self) -> usize {
        self.open_channels().count()
    }

    /// Index of channel n = 0 (the incident channel) in `channels`.
    pub fn entrance_index(&self) -> usize {
        self.n_half
    }
}

/// Build the channel basis with half-width `n_half` (channels −N..N).
pub fn build_channel_basis(
    spec: &IncidenceSpec,
    params: &PotentialParams,
    n_half: usize,
) -> Result<ChannelBasis> {
    if n_half < 1 {
        return Err(GrazeError::InvalidInput(
            "channel basis needs n_half >= 1".into(),
        ));
    }
    spec.validate()?;
    let k = spec.momentum();
    let e_perp = spec.energy_perp();
    if e_perp <= 0.0 {
        return Err(GrazeError::NoOpenChannels(format!(
            "in-plane energy E_perp = {e_perp} meV is not positive"
        )));
    }
    let k_perp_sq = 2.0 * spec.mass * e_perp / HBAR_SQ_MEV_AMU_ANG2;
    let g = params.reciprocal();
    let ky0 = k.ky;

    let channels: Vec<Channel> = (-(n_half as i32)..=n_half as i32)
        .map(|n| {
            let ky = ky0 + n as f64 * g;
            Channel {
                n,
                ky,
                kz_sq: k_perp_sq - ky * ky,
            }
        })
        .collect();

    if !channels.iter().any(|c| c.is_open()) {
        return Err(GrazeError::NoOpenChannels(
            "no channel is energetically open for this beam".into(),
        ));
    }

    Ok(ChannelBasis {
        channels,
        n_half,
        g,
        ky0,
        e_perp,
        k_perp_sq,
        mass: spec.mass,
        energy_total: spec.energy_total,
        theta: spec.theta,
        phi: spec.phi,
    })
}

/// Smallest half-width that contains every reachable open channel plus
/// `buffer` evanescent channels on each side.
///
/// The coupling is a nearest-neighbor chain, so population spreads at
/// most over the classically allowed transfer window of width W_ky
/// around the entrance; open channels far beyond it stay empty below
/// 1e-10 and are dropped when the full open window is wider. The
/// automatic enlargement on a failed convergence check still applies on
/// top of this estimate.
pub fn auto_half_width(
    spec: &IncidenceSpec,
    params: &PotentialParams,
    buffer: usize,
) -> Result<usize> {
    spec.validate()?;
    let e_perp = spec.energy_perp();
    if e_perp <= 0.0 {
        return Err(GrazeError::NoOpenChannels(format!(
            "in-plane energy E_perp = {e_perp} meV is not positive"
        )));
    }
    let k_perp = (2.0 * spec.mass * e_perp / HBAR_SQ_MEV_AMU_ANG2).sqrt();
    let ky0 = spec.momentum().ky;
    let g = params.reciprocal();
    // open window: -k_perp < ky0 + nG < k_perp (strict; threshold
    // channels with kz = 0 count as closed)
    let lo = ((-k_perp - ky0) / g).floor() as i64 + 1;
    let hi = ((k_perp - ky0) / g).ceil() as i64 - 1;
    let widest = lo.abs().max(hi.abs()).max(1) as usize;

    // closed-form transfer half-width of the frozen in-plane pendulum at
    // the normal-energy turning point (the analytic window estimate)
    let beta = params.corrugation;
    let reach = if beta > 0.0 && beta < 1.0 {
        let e_n = spec.energy_total * spec.theta.cos().powi(2);
        let u = (1.0 + (1.0 + (1.0 - beta) * e_n / params.well_depth).sqrt()) / (1.0 - beta);
        let w_ky = 2.0
            * (4.0 * spec.mass * beta * params.well_depth).sqrt()
            * u
            / crate::constants::hbar();
        ((w_ky / g).ceil() as usize + 2).max(4)
    } else {
        widest
    };
    Ok(widest.min(reach) + buffer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn reference_beam(phi: f64) -> IncidenceSpec {
        IncidenceSpec::new(2.0e5, 0.506 * PI, phi, 4.0026, 60.0).unwrap()
    }

    #[test]
    fn symmetric_open_set_at_zero_azimuth() {
        let basis =
            build_channel_basis(&reference_beam(0.0), &PotentialParams::default(), 12).unwrap();
        assert_eq!(basis.ky0, 0.0);
        for c in &basis.channels {
            let mirror = basis.channel(-c.n).unwrap();
            assert_eq!(c.is_open(), mirror.is_open());
            assert!((c.kz_sq - mirror.kz_sq).abs() < 1e-12 * c.kz_sq.abs().max(1.0));
        }
    }

    #[test]
    fn eleven_channels_open_at_reference_conditions() {
        // E_perp = E cos^2(0.506 pi) ~ 71.05 meV, G ~ 2.212 1/A: channels
        // |n| <= 5 satisfy (nG)^2 < 2mE_perp/hbar^2. Frozen as a regression
        // value.
        let spec = reference_beam(0.0);
        assert!((spec.energy_perp() - 71.05).abs() < 0.01);
        let basis = build_channel_basis(&spec, &PotentialParams::default(), 9).unwrap();
        assert_eq!(basis.open_count(), 11);
        assert!(basis.channel(5).unwrap().is_open());
        assert!(!basis.channel(6).unwrap().is_open());
    }

    #[test]
    fn closed_channels_carry_decay_constants() {
        let basis = build_channel_basis(&reference_beam(0.0), &PotentialParams::default(), 9).unwrap();
        let closed = basis.channel(7).unwrap();
        assert!(!closed.is_open());
        assert!(closed.kappa() > 0.0);
        assert_eq!(closed.kz(), 0.0);
        // kappa^2 = -kz_sq by definition
        assert!((closed.kappa().powi(2) + closed.kz_sq).abs() < 1e-12);
    }

    #[test]
    fn open_channels_conserve_in_plane_energy() {
        let spec = reference_beam(0.015);
        let basis = build_channel_basis(&spec, &PotentialParams::default(), 20).unwrap();
        for c in basis.open_channels() {
            let e = HBAR_SQ_MEV_AMU_ANG2 * (c.kz().powi(2) + c.ky * c.ky) / (2.0 * spec.mass);
            assert!(
                ((e - basis.e_perp) / basis.e_perp).abs() < 1e-12,
                "channel {} breaks the energy identity",
                c.n
            );
        }
        // open set is contiguous in n
        let opens: Vec<i32> = basis.open_channels().map(|c| c.n).collect();
        for pair in opens.windows(2) {
            assert_eq!(pair[1], pair[0] + 1);
        }
    }

    #[test]
    fn auto_width_covers_open_set_plus_buffer() {
        let spec = reference_beam(0.0);
        let params = PotentialParams::default();
        let n_half = auto_half_width(&spec, &params, 4).unwrap();
        assert_eq!(n_half, 9); // 5 open on each side + 4 buffer
        let basis = build_channel_basis(&spec, &params, n_half).unwrap();
        assert_eq!(basis.open_count(), 11);
    }
}
