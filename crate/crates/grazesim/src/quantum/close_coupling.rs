//! Coupled-channel solve of the effective 2D model by renormalized
//! Numerov propagation.
//!
//! The channel expansion ψ(y,z) = Σ_n φ_n(z)·e^(i(ky0+nG)y) turns the
//! Schrödinger equation with the averaged potential into
//! φ″ = W(z)·φ, where the coupling matrix
//!
//! ```text
//! W_nn(z)    = (2m/ħ²)·V0(z) − k_z,n²
//! W_n,n±1(z) = (m/ħ²)·V1(z)
//! ```
//!
//! is tridiagonal because the averaged potential carries a single Fourier
//! harmonic. Closed channels grow like e^(κz), which destroys naive
//! integration; propagating the ratio R_j = F_{j+1}·F_j⁻¹ instead of the
//! solution matrix keeps the recursion bounded. At the outer edge the
//! ratio is matched against unit-flux plane waves (open channels) and
//! decaying exponentials (closed channels), which yields the S-matrix row
//! of the incident channel directly in a flux-normalized form:
//! P_n = |S_n0|² and Σ P_n = 1 exactly for the continuum problem.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::HBAR_SQ_MEV_AMU_ANG2;
use crate::potential::PotentialParams;
use crate::spectrum::{DiffractionSpectrum, SpectrumLine, SpectrumMeta, SpectrumMethod};
use crate::{GrazeError, Result};

use super::channels::ChannelBasis;

/// Solver knobs shared by the grid builder and the auto entry point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantumOpts {
    /// Evanescent channels kept on each side of the open window.
    pub evanescent_buffer: usize,
    /// Grid points per local wavelength of the fastest channel.
    pub points_per_wavelength: usize,
    /// Upper bound on the z step, Å.
    pub step_cap: f64,
    /// Unitarity defect that aborts a solve.
    pub unitarity_hard_tol: f64,
    /// Unitarity defect that triggers one automatic basis enlargement.
    pub unitarity_soft_tol: f64,
}

impl Default for QuantumOpts {
    fn default() -> Self {
        QuantumOpts {
            evanescent_buffer: 4,
            points_per_wavelength: 12,
            step_cap: 4.0e-3,
            unitarity_hard_tol: 1e-4,
            unitarity_soft_tol: 1e-6,
        }
    }
}

/// Uniform z grid from the repulsive floor to the matching height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZGrid {
    pub z_min: f64,
    pub z_max: f64,
    pub n_points: usize,
}

impl ZGrid {
    pub fn step(&self) -> f64 {
        (self.z_max - self.z_min) / (self.n_points - 1) as f64
    }

    pub fn z(&self, j: usize) -> f64 {
        self.z_min + j as f64 * self.step()
    }

    /// Grid for a basis: starts at the diagnostic floor (all channels
    /// deeply evanescent there), ends where the Morse tail is below
    /// 1e-9·E_perp and past the potential cutoff, with the step resolving
    /// the fastest local wavelength by `points_per_wavelength` points.
    pub fn for_basis(basis: &ChannelBasis, params: &PotentialParams, opts: &QuantumOpts) -> ZGrid {
        let z_min = params.z_floor();
        let z_tail = params.equilibrium_z
            + (2.0 * params.well_depth / (1e-9 * basis.e_perp)).max(std::f64::consts::E).ln()
                / params.stiffness;
        let z_max = params.z_cut.max(z_tail);

        // fastest local wavenumber: wall repulsion plus the largest
        // channel offset, or the open-channel maximum in the tail
        let two_m_over_h2 = 2.0 * basis.mass / HBAR_SQ_MEV_AMU_ANG2;
        let ky2_max = basis
            .channels
            .iter()
            .map(|c| c.ky * c.ky)
            .fold(0.0, f64::max);
        let wall = two_m_over_h2 * 1e3 * params.well_depth + ky2_max - basis.k_perp_sq;
        let k2_max = wall.max(basis.k_perp_sq).max(1.0);
        let step = (2.0 * std::f64::consts::PI / (opts.points_per_wavelength as f64 * k2_max.sqrt()))
            .min(opts.step_cap);

        let n_points = ((z_max - z_min) / step).ceil() as usize + 1;
        ZGrid {
            z_min,
            z_max,
            n_points: n_points.max(8),
        }
    }

    /// Same span with half the step, for convergence tests.
    pub fn refined(&self) -> ZGrid {
        ZGrid {
            z_min: self.z_min,
            z_max: self.z_max,
            n_points: 2 * (self.n_points - 1) + 1,
        }
    }
}

/// Solve for the incident channel and return flux-normalized
/// probabilities. Hard-errors if the probability sum deviates from 1 by
/// more than the default hard tolerance.
pub fn solve_close_coupling(
    basis: &ChannelBasis,
    params: &PotentialParams,
    grid: &ZGrid,
) -> Result<DiffractionSpectrum> {
    let opts = QuantumOpts::default();
    let (_, spectrum) = solve_internal(basis, params, grid, false, opts.unitarity_hard_tol)?;
    Ok(spectrum)
}

/// Full flux-normalized S-matrix over the open channels (rows and columns
/// in open-channel order) along with the incident-channel spectrum.
pub fn solve_s_matrix(
    basis: &ChannelBasis,
    params: &PotentialParams,
    grid: &ZGrid,
) -> Result<(DMatrix<Complex64>, DiffractionSpectrum)> {
    let opts = QuantumOpts::default();
    let (s, spectrum) = solve_internal(basis, params, grid, true, opts.unitarity_hard_tol)?;
    Ok((s.expect("requested"), spectrum))
}

fn solve_internal(
    basis: &ChannelBasis,
    params: &PotentialParams,
    grid: &ZGrid,
    full_s: bool,
    unitarity_hard_tol: f64,
) -> Result<(Option<DMatrix<Complex64>>, DiffractionSpectrum)> {
    let n_ch = basis.channels.len();
    let open: Vec<usize> = (0..n_ch)
        .filter(|&i| basis.channels[i].is_open())
        .collect();
    let n_open = open.len();
    if n_open == 0 {
        return Err(GrazeError::NoOpenChannels(
            "basis contains no open channel".into(),
        ));
    }
    if n_ch < n_open + 4 {
        return Err(GrazeError::InvalidInput(format!(
            "basis too small: {n_ch} channels for {n_open} open ones; keep an evanescent buffer"
        )));
    }
    let entrance = basis.entrance_index();
    if !basis.channels[entrance].is_open() {
        return Err(GrazeError::NoOpenChannels(
            "incident channel is closed".into(),
        ));
    }
    if grid.z_max < params.z_cut {
        return Err(GrazeError::InvalidInput(format!(
            "matching height {} is inside the potential cutoff {}",
            grid.z_max, params.z_cut
        )));
    }

    let h = grid.step();
    let h2_12 = h * h / 12.0;
    let two_m_over_h2 = 2.0 * basis.mass / HBAR_SQ_MEV_AMU_ANG2;
    // z-independent part of the diagonal: ky_n^2 - k_perp^2 = -kz_n^2
    let diag0: Vec<f64> = basis.channels.iter().map(|c| -c.kz_sq).collect();

    // Numerov three-term relation for phi'' = W phi:
    //   B_{j+1} phi_{j+1} = (12 B_j^{-1} - 10 I) (B_j phi_j) - B_{j-1} phi_{j-1}
    // with the tridiagonal B_j = I - (h^2/12) W_j. The renormalized ratio
    // R_j = F_{j+1} F_j^{-1} of F_j = B_j phi_j obeys R_j = U_j - R_{j-1}^{-1}
    // with U_j = 12 B_j^{-1} - 10 I.
    let mut r = DMatrix::<f64>::zeros(n_ch, n_ch); // renormalized ratio
    let mut u = DMatrix::<f64>::zeros(n_ch, n_ch);
    let mut tri_diag = vec![0.0; n_ch];

    let assemble_u = |z: f64, tri_diag: &mut [f64], u: &mut DMatrix<f64>| {
        let v0 = two_m_over_h2 * params.morse(z);
        let off = two_m_over_h2 * 0.5 * params.corrugation_coefficient(z);
        for i in 0..n_ch {
            tri_diag[i] = 1.0 - h2_12 * (v0 + diag0[i]);
        }
        let tri_off = -h2_12 * off;
        // u := 12 B^{-1}
        u.fill(0.0);
        for i in 0..n_ch {
            u[(i, i)] = 12.0;
        }
        solve_tridiagonal_inplace(tri_diag, tri_off, u);
        for i in 0..n_ch {
            u[(i, i)] -= 10.0;
        }
    };

    // start: F_0 = 0 deep in the forbidden region, so R_1 = U_1
    assemble_u(grid.z(1), &mut tri_diag, &mut u);
    r.copy_from(&u);

    let last = grid.n_points - 1;
    for j in 2..last {
        let r_inv = r.clone().try_inverse().ok_or_else(|| {
            GrazeError::NonUnitary(format!("ratio matrix singular at z = {}", grid.z(j - 1)))
        })?;
        assemble_u(grid.z(j), &mut tri_diag, &mut u);
        r.copy_from(&u);
        r -= r_inv;
    }
    // r now holds R_{last-1} = F_last F_{last-1}^{-1}

    // psi_last = B_last^{-1} R_{last-1} B_{last-1} psi_{last-1}
    let b_fac = |z: f64, tri_diag: &mut Vec<f64>| -> (Vec<f64>, f64) {
        let v0 = two_m_over_h2 * params.morse(z);
        let off = two_m_over_h2 * 0.5 * params.corrugation_coefficient(z);
        for i in 0..n_ch {
            tri_diag[i] = 1.0 - h2_12 * (v0 + diag0[i]);
        }
        (tri_diag.clone(), -h2_12 * off)
    };
    let (d_last, o_last) = b_fac(grid.z(last), &mut tri_diag);
    let (d_prev, o_prev) = b_fac(grid.z(last - 1), &mut tri_diag);

    // M_rel = B_last^{-1} R B_{last-1}
    let mut m_rel = r;
    multiply_tridiagonal_right(&mut m_rel, &d_prev, o_prev);
    solve_tridiagonal_inplace(&d_last, o_last, &mut m_rel);

    // reference functions at the two outer points, origin at z_last
    let zeta_prev = -h;
    let mut a_mat = DMatrix::<Complex64>::zeros(n_ch, n_ch);
    let mut rhs = DMatrix::<Complex64>::zeros(n_ch, n_open);
    for col in 0..n_ch {
        let ch = &basis.channels[col];
        let (g_last, g_prev) = if ch.is_open() {
            let k = ch.kz();
            let inv_sqrt_k = 1.0 / k.sqrt();
            (
                Complex64::new(inv_sqrt_k, 0.0),
                (Complex64::i() * k * zeta_prev).exp() * inv_sqrt_k,
            )
        } else {
            let kappa = ch.kappa();
            (
                Complex64::new(1.0, 0.0),
                Complex64::new((-kappa * zeta_prev).exp(), 0.0),
            )
        };
        for row in 0..n_ch {
            let m = Complex64::new(m_rel[(row, col)], 0.0);
            a_mat[(row, col)] = -m * g_prev;
        }
        a_mat[(col, col)] += g_last;
    }
    for (oc, &col) in open.iter().enumerate() {
        let ch = &basis.channels[col];
        let k = ch.kz();
        let inv_sqrt_k = 1.0 / k.sqrt();
        let f_last = Complex64::new(inv_sqrt_k, 0.0);
        let f_prev = (-Complex64::i() * k * zeta_prev).exp() * inv_sqrt_k;
        for row in 0..n_ch {
            rhs[(row, oc)] = Complex64::new(m_rel[(row, col)], 0.0) * f_prev;
        }
        rhs[(col, oc)] -= f_last;
    }

    let lu = a_mat.lu();
    let entrance_open = open
        .iter()
        .position(|&c| c == entrance)
        .expect("entrance channel is open");

    let solve_column = |rhs_col: DVector<Complex64>| -> Result<DVector<Complex64>> {
        lu.solve(&rhs_col).ok_or_else(|| {
            GrazeError::NonUnitary("matching system is singular; refine the grid".into())
        })
    };

    let b_entrance = solve_column(rhs.column(entrance_open).into_owned())?;

    let mut s_full = None;
    if full_s {
        let mut s = DMatrix::<Complex64>::zeros(n_open, n_open);
        for oc in 0..n_open {
            let b = solve_column(rhs.column(oc).into_owned())?;
            for (or, &row) in open.iter().enumerate() {
                s[(or, oc)] = b[row];
            }
        }
        s_full = Some(s);
    }

    let mut lines = Vec::with_capacity(n_ch);
    let mut total = 0.0;
    for (i, ch) in basis.channels.iter().enumerate() {
        let p = if ch.is_open() {
            let p = b_entrance[i].norm_sqr();
            total += p;
            p
        } else {
            0.0
        };
        lines.push(SpectrumLine {
            n: ch.n,
            ky: ch.ky,
            open: ch.is_open(),
            probability: p,
        });
    }
    let defect = (total - 1.0).abs();
    if defect > unitarity_hard_tol {
        return Err(GrazeError::NonUnitary(format!(
            "flux defect {defect:.3e} exceeds {unitarity_hard_tol:.1e}; refine grid or enlarge basis"
        )));
    }

    let spectrum = DiffractionSpectrum {
        lines,
        meta: SpectrumMeta {
            method: Some(SpectrumMethod::CloseCoupling),
            energy_mev: basis.energy_total,
            theta_rad: basis.theta,
            phi_rad: basis.phi,
            g: basis.g,
            n_half: basis.n_half,
            open_channels: n_open,
            grid_step: Some(h),
            grid_span: Some((grid.z_min, grid.z_max)),
            unitarity_defect: Some(defect),
        },
    };
    Ok((s_full, spectrum))
}

/// Solve (I − T)·X = B in place for tridiagonal (I − T) given by `diag`
/// and constant off-diagonal `off` (Thomas algorithm, multiple RHS).
fn solve_tridiagonal_inplace(diag: &[f64], off: f64, b: &mut DMatrix<f64>) {
    let n = diag.len();
    if n == 1 {
        let d = diag[0];
        for j in 0..b.ncols() {
            b[(0, j)] /= d;
        }
        return;
    }
    let mut c_prime = vec![0.0; n];
    let mut denom = vec![0.0; n];
    c_prime[0] = off / diag[0];
    denom[0] = diag[0];
    for i in 1..n {
        denom[i] = diag[i] - off * c_prime[i - 1];
        c_prime[i] = off / denom[i];
    }
    for j in 0..b.ncols() {
        // forward sweep
        b[(0, j)] /= denom[0];
        for i in 1..n {
            let prev = b[(i - 1, j)];
            b[(i, j)] = (b[(i, j)] - off * prev) / denom[i];
        }
        // back substitution
        for i in (0..n - 1).rev() {
            let next = b[(i + 1, j)];
            b[(i, j)] -= c_prime[i] * next;
        }
    }
}

/// A := A·B for tridiagonal B with diagonal `diag` and constant
/// off-diagonal `off`.
fn multiply_tridiagonal_right(a: &mut DMatrix<f64>, diag: &[f64], off: f64) {
    let n = diag.len();
    let nr = a.nrows();
    let mut row = vec![0.0; n];
    for r in 0..nr {
        for c in 0..n {
            row[c] = a[(r, c)];
        }
        for c in 0..n {
            let mut v = row[c] * diag[c];
            if c > 0 {
                v += row[c - 1] * off;
            }
            if c + 1 < n {
                v += row[c + 1] * off;
            }
            a[(r, c)] = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::IncidenceSpec;
    use crate::quantum::channels::build_channel_basis;
    use std::f64::consts::PI;

    fn reference_beam(phi: f64) -> IncidenceSpec {
        IncidenceSpec::new(2.0e5, 0.506 * PI, phi, 4.0026, 60.0).unwrap()
    }

    fn solve(phi: f64, params: &PotentialParams) -> DiffractionSpectrum {
        let spec = reference_beam(phi);
        let n_half = crate::quantum::auto_half_width(&spec, params, 4).unwrap();
        let basis = build_channel_basis(&spec, params, n_half).unwrap();
        let grid = ZGrid::for_basis(&basis, params, &QuantumOpts::default());
        solve_close_coupling(&basis, params, &grid).unwrap()
    }

    #[test]
    fn flat_surface_scatters_into_the_specular_channel_only() {
        let params = PotentialParams {
            corrugation: 0.0,
            ..Default::default()
        };
        let s = solve(0.0, &params);
        assert!((s.probability(0) - 1.0).abs() < 1e-9, "P0 = {}", s.probability(0));
        for l in &s.lines {
            if l.n != 0 {
                assert!(l.probability < 1e-10, "channel {}: {}", l.n, l.probability);
            }
        }
    }

    #[test]
    fn unitarity_at_reference_conditions() {
        let params = PotentialParams::default();
        for phi in [0.0, 0.01, 0.02, 0.04] {
            let s = solve(phi, &params);
            assert!(
                s.check_unitarity(1e-6).is_ok(),
                "phi = {phi}: sum = {}",
                s.total_probability()
            );
        }
    }

    #[test]
    fn parity_links_opposite_azimuths() {
        let params = PotentialParams::default();
        let plus = solve(0.012, &params);
        let minus = solve(-0.012, &params);
        for l in &plus.lines {
            let p_mirror = minus.probability(-l.n);
            assert!(
                (l.probability - p_mirror).abs() < 1e-8,
                "P_{}({}) vs P_{}({})",
                l.n,
                l.probability,
                -l.n,
                p_mirror
            );
        }
    }

    #[test]
    fn s_matrix_is_symmetric() {
        let params = PotentialParams::default();
        let spec = reference_beam(0.01);
        let n_half = crate::quantum::auto_half_width(&spec, &params, 4).unwrap();
        let basis = build_channel_basis(&spec, &params, n_half).unwrap();
        let grid = ZGrid::for_basis(&basis, &params, &QuantumOpts::default());
        let (s, _) = solve_s_matrix(&basis, &params, &grid).unwrap();
        let n = s.nrows();
        for i in 0..n {
            for j in 0..i {
                let d = (s[(i, j)] - s[(j, i)]).norm();
                assert!(d < 1e-6, "|S[{i},{j}] - S[{j},{i}]| = {d:.2e}");
            }
        }
    }

    #[test]
    fn converged_in_basis_and_step() {
        let params = PotentialParams::default();
        let spec = reference_beam(0.0);
        let n_half = crate::quantum::auto_half_width(&spec, &params, 4).unwrap();
        let basis = build_channel_basis(&spec, &params, n_half).unwrap();
        let grid = ZGrid::for_basis(&basis, &params, &QuantumOpts::default());
        let base = solve_close_coupling(&basis, &params, &grid).unwrap();

        let wider = build_channel_basis(&spec, &params, n_half + 2).unwrap();
        let fine = ZGrid::for_basis(&wider, &params, &QuantumOpts::default()).refined();
        let refined = solve_close_coupling(&wider, &params, &fine).unwrap();

        for l in &base.lines {
            if l.open {
                let d = (l.probability - refined.probability(l.n)).abs();
                assert!(d < 1e-6, "channel {}: drift {d:.2e}", l.n);
            }
        }
    }

    #[test]
    fn tridiagonal_solver_matches_dense() {
        let diag = vec![2.0, 2.5, 3.0, 2.2, 1.9];
        let off = 0.4;
        let n = diag.len();
        let mut dense = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            dense[(i, i)] = diag[i];
            if i > 0 {
                dense[(i, i - 1)] = off;
                dense[(i - 1, i)] = off;
            }
        }
        let b = DMatrix::<f64>::from_fn(n, 2, |i, j| (i + 1) as f64 * 0.3 + j as f64);
        let mut x = b.clone();
        solve_tridiagonal_inplace(&diag, off, &mut x);
        let exact = dense.clone().lu().solve(&b).unwrap();
        assert!((x - exact).norm() < 1e-12);

        let mut prod = DMatrix::<f64>::from_fn(2, n, |i, j| (i as f64 + 0.5) * (j as f64 - 1.3));
        let expected = &prod * &dense;
        multiply_tridiagonal_right(&mut prod, &diag, off);
        assert!((prod - expected).norm() < 1e-12);
    }
}
