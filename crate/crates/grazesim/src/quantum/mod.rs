//! Effective 2D quantum model: reciprocal-lattice channels in y, coupled
//! equations in z against the channel-averaged potential.
//!
//! Two independent solvers are provided. The production path is a
//! renormalized-Numerov coupled-channel propagation
//! ([`close_coupling::solve_close_coupling`]); a split-operator wavepacket
//! on the (y, z) grid ([`split_operator::splitop_oracle`]) serves as its
//! cross-check. Each is the other's oracle.

pub mod channels;
pub mod close_coupling;
pub mod split_operator;

pub use channels::{auto_half_width, build_channel_basis, Channel, ChannelBasis};
pub use close_coupling::{solve_close_coupling, solve_s_matrix, QuantumOpts, ZGrid};
pub use split_operator::{splitop_oracle, SplitOpSettings};

use crate::kinematics::IncidenceSpec;
use crate::potential::PotentialParams;
use crate::spectrum::DiffractionSpectrum;
use crate::Result;

/// One-call diffraction spectrum: automatic basis (all open channels plus
/// an evanescent buffer), automatic z grid, unitarity guarded. If the
/// first solve misses the soft unitarity tolerance the buffer is doubled
/// once before giving up.
pub fn diffraction_spectrum(
    spec: &IncidenceSpec,
    params: &PotentialParams,
    opts: &QuantumOpts,
) -> Result<DiffractionSpectrum> {
    let n_half = auto_half_width(spec, params, opts.evanescent_buffer)?;
    let basis = build_channel_basis(spec, params, n_half)?;
    let grid = ZGrid::for_basis(&basis, params, opts);
    let spectrum = solve_close_coupling(&basis, params, &grid)?;
    if spectrum
        .meta
        .unitarity_defect
        .is_some_and(|d| d > opts.unitarity_soft_tol)
    {
        let wider = build_channel_basis(spec, params, n_half + opts.evanescent_buffer)?;
        let grid = ZGrid::for_basis(&wider, params, opts);
        return solve_close_coupling(&wider, params, &grid);
    }
    Ok(spectrum)
}
