//! Subcommand implementations shared by the CLI binary and tests.
//!
//! Every command writes its artifacts plus a `config_echo.json` holding the
//! resolved configuration; re-running with that file and the same seed
//! reproduces the outputs byte for byte regardless of the worker count.

use std::path::PathBuf;

use serde::Serialize;

use crate::analysis::{self, WidthMethod};
use crate::config::RunConfig;
use crate::ensemble::{self, AzimuthSweepRow};
use crate::integrator::{integrate_trajectory_recorded, IntegratorControl};
use crate::kinematics::IncidenceSpec;
use crate::output::{ensure_out_dir, fmt_f64, write_csv, write_json};
use crate::quantum;
use crate::rng;
use crate::spectrum::DiffractionSpectrum;
use crate::svg::{plot, Series};
use crate::{GrazeError, Result};

/// Resolved invocation shared by all subcommands.
#[derive(Debug, Clone)]
pub struct CommandCtx {
    pub config: RunConfig,
    pub out_dir: PathBuf,
    pub svg: bool,
}

impl CommandCtx {
    pub fn new(config: RunConfig, out_dir: impl Into<PathBuf>, svg: bool) -> Self {
        CommandCtx {
            config,
            out_dir: out_dir.into(),
            svg,
        }
    }

    fn echo(&self, command: &str, extra: impl Serialize) -> Result<()> {
        #[derive(Serialize)]
        struct Echo<'a, T: Serialize> {
            command: &'a str,
            version: &'a str,
            config: &'a RunConfig,
            invocation: T,
        }
        write_json(
            &self.out_dir.join("config_echo.json"),
            &Echo {
                command,
                version: env!("CARGO_PKG_VERSION"),
                config: &self.config,
                invocation: extra,
            },
        )
    }
}

/// Classical (and optionally quantum) Δk statistics over the azimuth grid.
/// Writes `sweep.csv` with columns:
/// `phi_rad, cl_mean_dky, cl_rms_dky, cl_mean_dkx, cl_rms_dkx,
///  q_mean_dky, q_rms_dky, open_channels, n_completed, n_failed`.
pub fn cmd_sweep_azimuth(ctx: &CommandCtx) -> Result<()> {
    let cfg = &ctx.config;
    let params = cfg.potential_params()?;
    let phis = cfg.sweep_phis()?;
    let specs: Result<Vec<IncidenceSpec>> = phis.iter().map(|&p| cfg.incidence(p)).collect();
    let specs = specs?;
    let ctrl = cfg.integrator_control(cfg.sweep.energy_tol);

    let rows = ensemble::azimuth_sweep(
        &specs,
        cfg.ensemble.n_per_angle,
        cfg.ensemble.seed,
        &params,
        &ctrl,
    )?;

    let quantum_cols: Vec<Option<(f64, f64, usize)>> = if cfg.sweep.with_quantum {
        use rayon::prelude::*;
        let opts = cfg.quantum_opts();
        specs
            .par_iter()
            .map(|spec| {
                quantum::diffraction_spectrum(spec, &params, &opts)
                    .ok()
                    .map(|s| {
                        let (mean, rms) = s.moments();
                        (mean, rms, s.meta.open_channels)
                    })
            })
            .collect()
    } else {
        vec![None; specs.len()]
    };

    ensure_out_dir(&ctx.out_dir)?;
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .zip(&quantum_cols)
        .map(|(r, q)| {
            let (qm, qr, oc) = match q {
                Some((m, r, o)) => (fmt_f64(*m), fmt_f64(*r), o.to_string()),
                None => (String::new(), String::new(), String::new()),
            };
            vec![
                fmt_f64(r.phi),
                fmt_f64(r.mean_dky),
                fmt_f64(r.rms_dky),
                fmt_f64(r.mean_dkx),
                fmt_f64(r.rms_dkx),
                qm,
                qr,
                oc,
                r.n_trajectories.to_string(),
                r.n_failed.to_string(),
            ]
        })
        .collect();
    write_csv(
        &ctx.out_dir.join("sweep.csv"),
        &[
            "phi_rad",
            "cl_mean_dky",
            "cl_rms_dky",
            "cl_mean_dkx",
            "cl_rms_dkx",
            "q_mean_dky",
            "q_rms_dky",
            "open_channels",
            "n_completed",
            "n_failed",
        ],
        &csv_rows,
    )?;

    if cfg.sweep.scatter_per_angle > 0 {
        write_scatter(ctx, &specs, &params, &ctrl)?;
    }

    if ctx.svg {
        let cl: Vec<(f64, f64)> = rows.iter().map(|r| (r.phi, r.rms_dky)).collect();
        let mean: Vec<(f64, f64)> = rows.iter().map(|r| (r.phi, r.mean_dky)).collect();
        let mut series = vec![
            Series { label: "rms dky (classical)", points: &cl, sticks: false },
            Series { label: "mean dky (classical)", points: &mean, sticks: false },
        ];
        let q: Vec<(f64, f64)> = rows
            .iter()
            .zip(&quantum_cols)
            .filter_map(|(r, qc)| qc.map(|(_, rms, _)| (r.phi, rms)))
            .collect();
        if !q.is_empty() {
            series.push(Series { label: "rms dky (quantum)", points: &q, sticks: false });
        }
        std::fs::write(
            ctx.out_dir.join("sweep.svg"),
            plot("momentum transfer vs azimuth", "phi (rad)", "dky (1/A)", &series),
        )?;
    }

    ctx.echo("sweep-azimuth", serde_json::json!({ "n_angles": phis.len() }))
}

fn write_scatter(
    ctx: &CommandCtx,
    specs: &[IncidenceSpec],
    params: &crate::potential::PotentialParams,
    ctrl: &IntegratorControl,
) -> Result<()> {
    use rayon::prelude::*;
    let n = ctx.config.sweep.scatter_per_angle;
    let seed = rng::mix(ctx.config.ensemble.seed, 0x5ca7);
    let rows: Result<Vec<Vec<Vec<String>>>> = specs
        .par_iter()
        .enumerate()
        .map(|(a, spec)| {
            let results =
                ensemble::run_ensemble(spec, params, ctrl, n, rng::mix(seed, a as u64))?;
            Ok(results
                .iter()
                .filter(|r| r.completed())
                .map(|r| vec![fmt_f64(spec.phi), fmt_f64(r.delta_ky), fmt_f64(r.delta_kx)])
                .collect())
        })
        .collect();
    let flat: Vec<Vec<String>> = rows?.into_iter().flatten().collect();
    write_csv(
        &ctx.out_dir.join("scatter.csv"),
        &["phi_rad", "dky", "dkx"],
        &flat,
    )
}

/// Quantum and quasiclassical spectra at each requested azimuth, as
/// channel sticks (`spectrum_XX.csv`) and Lorentzian-broadened curves
/// (`curve_XX.csv`), plus a solver-settings sidecar per azimuth.
pub fn cmd_spectrum(ctx: &CommandCtx, phi_override: Option<Vec<f64>>) -> Result<()> {
    let cfg = &ctx.config;
    let params = cfg.potential_params()?;
    let phis = phi_override.unwrap_or_else(|| cfg.spectrum.phi_list_rad.clone());
    if phis.is_empty() {
        return Err(GrazeError::Config("spectrum phi list is empty".into()));
    }
    let opts = cfg.quantum_opts();
    let ctrl = cfg.integrator_control(cfg.spectrum.energy_tol);
    let g = params.reciprocal();
    let gamma = cfg.spectrum.gamma_factor * g;
    if !gamma.is_finite() || gamma <= 0.0 {
        return Err(GrazeError::Config("spectrum.gamma_factor must be positive".into()));
    }

    ensure_out_dir(&ctx.out_dir)?;

    use rayon::prelude::*;
    let per_phi: Result<Vec<(DiffractionSpectrum, DiffractionSpectrum)>> = phis
        .par_iter()
        .enumerate()
        .map(|(i, &phi)| {
            let spec = cfg.incidence(phi)?;
            let q = quantum::diffraction_spectrum(&spec, &params, &opts)?;
            let results = ensemble::run_ensemble(
                &spec,
                &params,
                &ctrl,
                cfg.spectrum.n_classical,
                rng::mix(cfg.ensemble.seed, i as u64),
            )?;
            let completed: Vec<_> = results.into_iter().filter(|r| r.completed()).collect();
            let qc = ensemble::quasiclassical_spectrum(&completed, g)?;
            Ok((q, qc))
        })
        .collect();
    let per_phi = per_phi?;

    for (i, ((q, qc), &phi)) in per_phi.iter().zip(&phis).enumerate() {
        let n_lo = q.lines.iter().map(|l| l.n).min().unwrap_or(0).min(
            qc.lines.iter().map(|l| l.n).min().unwrap_or(0),
        );
        let n_hi = q.lines.iter().map(|l| l.n).max().unwrap_or(0).max(
            qc.lines.iter().map(|l| l.n).max().unwrap_or(0),
        );
        let ky0 = ky0_of(q);
        let stick_rows: Vec<Vec<String>> = (n_lo..=n_hi)
            .map(|n| {
                let open = q
                    .lines
                    .iter()
                    .find(|l| l.n == n)
                    .map(|l| l.open)
                    .unwrap_or(true);
                vec![
                    n.to_string(),
                    fmt_f64(ky0 + q.meta.g * n as f64),
                    if open { "open" } else { "closed" }.to_string(),
                    fmt_f64(q.probability(n)),
                    fmt_f64(qc.probability(n)),
                ]
            })
            .collect();
        write_csv(
            &ctx.out_dir.join(format!("spectrum_{i:02}.csv")),
            &["n", "ky_n", "state", "p_quantum", "p_quasiclassical"],
            &stick_rows,
        )?;

        let pad = cfg.spectrum.axis_pad_channels;
        let k_lo = (n_lo as f64 - pad) * g;
        let k_hi = (n_hi as f64 + pad) * g;
        let n_axis = cfg.spectrum.axis_points.max(2);
        let axis: Vec<f64> = (0..n_axis)
            .map(|j| k_lo + (k_hi - k_lo) * j as f64 / (n_axis - 1) as f64)
            .collect();
        let cq = analysis::convolve_lorentzian(q, gamma, &axis)?;
        let cc = analysis::convolve_lorentzian(qc, gamma, &axis)?;
        let curve_rows: Vec<Vec<String>> = cq
            .iter()
            .zip(&cc)
            .map(|(&(k, fq), &(_, fc))| vec![fmt_f64(k), fmt_f64(fq), fmt_f64(fc)])
            .collect();
        write_csv(
            &ctx.out_dir.join(format!("curve_{i:02}.csv")),
            &["dky", "f_quantum", "f_quasiclassical"],
            &curve_rows,
        )?;

        #[derive(Serialize)]
        struct Sidecar<'a> {
            phi_rad: f64,
            gamma: f64,
            quantum: &'a crate::spectrum::SpectrumMeta,
            quasiclassical: &'a crate::spectrum::SpectrumMeta,
        }
        write_json(
            &ctx.out_dir.join(format!("spectrum_{i:02}.meta.json")),
            &Sidecar {
                phi_rad: phi,
                gamma,
                quantum: &q.meta,
                quasiclassical: &qc.meta,
            },
        )?;

        if ctx.svg {
            let sticks_q: Vec<(f64, f64)> = q
                .lines
                .iter()
                .filter(|l| l.open)
                .map(|l| (l.n as f64 * g, l.probability))
                .collect();
            let curve_q: Vec<(f64, f64)> = cq.clone();
            let curve_c: Vec<(f64, f64)> = cc.clone();
            std::fs::write(
                ctx.out_dir.join(format!("spectrum_{i:02}.svg")),
                plot(
                    &format!("diffraction spectrum at phi = {}", fmt_f64(phi)),
                    "dky (1/A)",
                    "probability",
                    &[
                        Series { label: "quantum sticks", points: &sticks_q, sticks: true },
                        Series { label: "quantum (broadened)", points: &curve_q, sticks: false },
                        Series { label: "quasiclassical (broadened)", points: &curve_c, sticks: false },
                    ],
                ),
            )?;
        }
    }

    ctx.echo("spectrum", serde_json::json!({ "phi_list_rad": phis }))
}

/// Incident parallel component recovered from any channel line.
fn ky0_of(s: &DiffractionSpectrum) -> f64 {
    s.lines
        .first()
        .map(|l| l.ky - l.n as f64 * s.meta.g)
        .unwrap_or(0.0)
}

/// Width estimators versus energy; one CSV row per energy.
pub fn cmd_width_scan(ctx: &CommandCtx) -> Result<()> {
    let cfg = &ctx.config;
    let params = cfg.potential_params()?;
    let energies = cfg.scan_energies()?;
    let template = cfg.incidence(0.0)?;
    let ctrl = cfg.scan_ctrl();

    let rows = analysis::energy_scan(&energies, &template, &params, &ctrl)?;

    ensure_out_dir(&ctx.out_dir)?;
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                fmt_f64(r.energy_mev / 1e3),
                fmt_f64(r.analytic.w_phi),
                r.classical.map(|w| fmt_f64(w.w_phi)).unwrap_or_default(),
                r.quantum.map(|w| fmt_f64(w.w_phi)).unwrap_or_default(),
                fmt_f64(r.analytic.w_ky),
                r.open_channels.to_string(),
                if r.errors.is_empty() {
                    "ok".to_string()
                } else {
                    r.errors.join("; ").replace(',', ";")
                },
            ]
        })
        .collect();
    write_csv(
        &ctx.out_dir.join("width_scan.csv"),
        &[
            "energy_ev",
            "w_phi_analytic",
            "w_phi_classical",
            "w_phi_quantum",
            "w_ky_analytic",
            "open_channels",
            "status",
        ],
        &csv_rows,
    )?;

    if ctx.svg {
        let a: Vec<(f64, f64)> = rows
            .iter()
            .map(|r| (r.energy_mev / 1e3, r.analytic.w_phi))
            .collect();
        let c: Vec<(f64, f64)> = rows
            .iter()
            .filter_map(|r| r.classical.map(|w| (r.energy_mev / 1e3, w.w_phi)))
            .collect();
        let q: Vec<(f64, f64)> = rows
            .iter()
            .filter_map(|r| r.quantum.map(|w| (r.energy_mev / 1e3, w.w_phi)))
            .collect();
        std::fs::write(
            ctx.out_dir.join("width_scan.svg"),
            plot(
                "window width vs incident energy",
                "E (eV)",
                "W_phi (rad)",
                &[
                    Series { label: "analytic", points: &a, sticks: false },
                    Series { label: "classical FWHM", points: &c, sticks: false },
                    Series { label: "quantum FWHM", points: &q, sticks: false },
                ],
            ),
        )?;
    }

    ctx.echo("width-scan", serde_json::json!({ "n_energies": energies.len() }))
}

/// Single-trajectory debug dump: time series plus a summary.
pub fn cmd_trajectory(ctx: &CommandCtx, phi: f64, x0: Option<f64>, y0: Option<f64>) -> Result<()> {
    let cfg = &ctx.config;
    let params = cfg.potential_params()?;
    let spec = cfg.incidence(phi)?;
    spec.validate_z_start(&params)?;

    let (x, y) = match (x0, y0) {
        (Some(x), Some(y)) => (x, y),
        _ => {
            let stream = rng::mix(cfg.ensemble.seed, 0);
            (
                params.period * rng::unit_f64(rng::splitmix64(rng::mix(stream, 0))),
                params.period * rng::unit_f64(rng::splitmix64(rng::mix(stream, 1))),
            )
        }
    };
    let k = spec.momentum();
    let state = crate::integrator::TrajectoryState::new([x, y, spec.z_start], [k.kx, k.ky, k.kz]);
    let ctrl = cfg.integrator_control(cfg.integrator.energy_tol);

    let mut record = Vec::new();
    let result = integrate_trajectory_recorded(&state, &params, spec.mass, &ctrl, &mut record)?;

    ensure_out_dir(&ctx.out_dir)?;
    let stride = (record.len() / 20_000).max(1);
    let rows: Vec<Vec<String>> = record
        .iter()
        .enumerate()
        .filter(|(i, _)| i % stride == 0 || *i == record.len() - 1)
        .map(|(_, st)| {
            vec![
                fmt_f64(st.time),
                fmt_f64(st.position[0]),
                fmt_f64(st.position[1]),
                fmt_f64(st.position[2]),
                fmt_f64(st.wavevector[0]),
                fmt_f64(st.wavevector[1]),
                fmt_f64(st.wavevector[2]),
                fmt_f64(st.energy(&params, spec.mass)),
            ]
        })
        .collect();
    write_csv(
        &ctx.out_dir.join("trajectory.csv"),
        &["t", "x", "y", "z", "kx", "ky", "kz", "energy_mev"],
        &rows,
    )?;
    write_json(&ctx.out_dir.join("trajectory_summary.json"), &result)?;

    if ctx.svg {
        let zt: Vec<(f64, f64)> = record.iter().map(|s| (s.time, s.position[2])).collect();
        let kyt: Vec<(f64, f64)> = record.iter().map(|s| (s.time, s.wavevector[1])).collect();
        std::fs::write(
            ctx.out_dir.join("trajectory.svg"),
            plot(
                "single trajectory",
                "t",
                "z (A) / ky (1/A)",
                &[
                    Series { label: "z(t)", points: &zt, sticks: false },
                    Series { label: "ky(t)", points: &kyt, sticks: false },
                ],
            ),
        )?;
    }

    ctx.echo(
        "trajectory",
        serde_json::json!({ "phi": phi, "x0": x, "y0": y }),
    )
}

/// Table of the potential and its channel average on a z grid, for
/// plotting.
pub fn cmd_potential_table(ctx: &CommandCtx) -> Result<()> {
    let cfg = &ctx.config;
    let params = cfg.potential_params()?;
    let (y_s, y_u) = analysis::fixed_points(&params, params.equilibrium_z)
        .unwrap_or((params.period / 2.0, 0.0));

    let z_lo = params.z_floor();
    let z_hi = params.z_cut.min(params.equilibrium_z + 14.0 / params.stiffness);
    let n = 1200;
    let rows: Vec<Vec<String>> = (0..n)
        .map(|i| {
            let z = z_lo + (z_hi - z_lo) * i as f64 / (n - 1) as f64;
            vec![
                fmt_f64(z),
                fmt_f64(params.morse(z)),
                fmt_f64(params.corrugation_coefficient(z)),
                fmt_f64(params.averaged(y_s, z)),
                fmt_f64(params.averaged(y_u, z)),
                fmt_f64(params.evaluate(0.0, 0.0, z)),
            ]
        })
        .collect();

    ensure_out_dir(&ctx.out_dir)?;
    write_csv(
        &ctx.out_dir.join("potential_table.csv"),
        &["z", "v0", "v1", "vav_stable", "vav_unstable", "v_origin"],
        &rows,
    )?;

    if ctx.svg {
        let vs: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let z = z_lo + (z_hi - z_lo) * i as f64 / (n - 1) as f64;
                (z, params.averaged(y_s, z))
            })
            .collect();
        let vu: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let z = z_lo + (z_hi - z_lo) * i as f64 / (n - 1) as f64;
                (z, params.averaged(y_u, z))
            })
            .collect();
        std::fs::write(
            ctx.out_dir.join("potential_table.svg"),
            plot(
                "channel-averaged potential",
                "z (A)",
                "V (meV)",
                &[
                    Series { label: "V_av at stable line", points: &vs, sticks: false },
                    Series { label: "V_av at unstable line", points: &vu, sticks: false },
                ],
            ),
        )?;
    }

    ctx.echo("potential-table", serde_json::json!({}))
}

/// Classical FWHM width from a sweep, exposed for tests and the FFI crate.
pub fn classical_width_from_rows(
    rows: &[AzimuthSweepRow],
    template: &IncidenceSpec,
) -> Result<crate::analysis::WidthEstimate> {
    let curve: Vec<(f64, f64)> = rows.iter().map(|r| (r.phi, r.rms_dky)).collect();
    analysis::width_fwhm(&curve, template, WidthMethod::ClassicalFwhm)
}
