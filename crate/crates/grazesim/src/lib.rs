//! Simulation of fast-atom scattering from a periodic surface at grazing
//! incidence, close to a low-index channeling direction.
//!
//! The crate provides three layers:
//!
//! * classical trajectory ensembles in the full 3D corrugated potential
//!   ([`ensemble`], [`integrator`]), used to map out the azimuthal window in
//!   which the beam exchanges momentum between the in-plane component normal
//!   to the channel and the surface-normal component while the component
//!   along the channel stays frozen;
//! * an effective 2D quantum model ([`quantum`]) that expands the scattered
//!   wave in reciprocal-lattice channels perpendicular to the channeling
//!   direction and solves the resulting coupled equations against the
//!   channel-averaged potential, yielding flux-normalized diffraction
//!   probabilities;
//! * phase-space width estimators ([`analysis`]) that reduce the averaged
//!   dynamics to a pendulum at the distance of closest approach and compare
//!   the analytic window width against classical and quantum FWHM estimates.
//!
//! # Units
//!
//! All public APIs use a fixed unit system: energies in meV, lengths in Å,
//! masses in amu, and momenta expressed as wavevectors k = p/ħ in Å⁻¹.
//! The single conversion constant is ħ²/(1 amu · 1 Å²) = 4.1804 meV, see
//! [`constants`]. The implied time unit is Å·√(amu/meV).
//!
//! # Conventions
//!
//! The surface occupies z ≤ 0 with the outward normal along +z; the channel
//! axis is x and the in-plane normal to it is y. The polar angle θ is
//! measured from the outward normal, so an incoming beam has θ ∈ (π/2, π)
//! and k_z < 0. The azimuth φ is measured from the channel axis. Grazing
//! incidence close to the channel means θ slightly above π/2 and |φ| small.

pub mod analysis;
pub mod commands;
pub mod config;
pub mod constants;
pub mod ensemble;
mod error;
pub mod integrator;
pub mod kinematics;
pub mod output;
pub mod potential;
pub mod quantum;
pub mod rng;
pub mod spectrum;
pub mod svg;

pub use error::GrazeError;
pub use kinematics::{IncidenceSpec, MomentumVector};
pub use potential::PotentialParams;
pub use spectrum::{DiffractionSpectrum, SpectrumLine, SpectrumMethod};

/// Crate result alias.
pub type Result<T> = std::result::Result<T, GrazeError>;
