//! End-to-end tests of the command-line interface: exit codes, artifact
//! schemas and byte-level reproducibility.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn grazesim() -> Command {
    Command::new(env!("CARGO_BIN_EXE_grazesim"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path
}

/// Small but complete sweep setup: few angles, small ensembles, quantum on.
const SMALL_SWEEP: &str = "
[sweep]
phi_max_rad = 0.01
phi_count = 5
energy_tol = 1e-5

[ensemble]
n_per_angle = 40
seed = 7
";

fn run_ok(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn sweep_is_byte_identical_across_thread_counts() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), SMALL_SWEEP);
    let mut bytes = Vec::new();
    for (threads, sub) in [("1", "a"), ("2", "b")] {
        let out_dir = tmp.path().join(sub);
        let out = grazesim()
            .args(["sweep-azimuth", "--config"])
            .arg(&config)
            .args(["--threads", threads, "--out-dir"])
            .arg(&out_dir)
            .output()
            .unwrap();
        run_ok(&out);
        bytes.push(fs::read(out_dir.join("sweep.csv")).unwrap());
    }
    assert_eq!(bytes[0], bytes[1], "sweep.csv differs across thread counts");
    assert!(!bytes[0].is_empty());
}

#[test]
fn sweep_env_var_thread_fallback_works() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), SMALL_SWEEP);
    let out_dir = tmp.path().join("env");
    let out = grazesim()
        .env("GRAZESIM_THREADS", "1")
        .args(["sweep-azimuth", "--config"])
        .arg(&config)
        .arg("--out-dir")
        .arg(&out_dir)
        .output()
        .unwrap();
    run_ok(&out);
    let header = fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    assert!(header.starts_with(
        "phi_rad,cl_mean_dky,cl_rms_dky,cl_mean_dkx,cl_rms_dkx,q_mean_dky,q_rms_dky,open_channels"
    ));
}

#[test]
fn seed_override_changes_the_output() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        tmp.path(),
        "
[sweep]
phi_max_rad = 0.01
phi_count = 3
with_quantum = false
energy_tol = 1e-5

[ensemble]
n_per_angle = 30
",
    );
    let run = |seed: &str, sub: &str| {
        let out_dir = tmp.path().join(sub);
        let out = grazesim()
            .args(["sweep-azimuth", "--config"])
            .arg(&config)
            .args(["--seed", seed, "--threads", "2", "--out-dir"])
            .arg(&out_dir)
            .output()
            .unwrap();
        run_ok(&out);
        fs::read(out_dir.join("sweep.csv")).unwrap()
    };
    let a = run("1", "s1");
    let b = run("2", "s2");
    let a2 = run("1", "s1again");
    assert_ne!(a, b);
    assert_eq!(a, a2);
}

#[test]
fn config_echo_reproduces_the_run() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), SMALL_SWEEP);
    let out_dir = tmp.path().join("out");
    let out = grazesim()
        .args(["sweep-azimuth", "--config"])
        .arg(&config)
        .args(["--threads", "1", "--out-dir"])
        .arg(&out_dir)
        .output()
        .unwrap();
    run_ok(&out);
    let echo: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("config_echo.json")).unwrap())
            .unwrap();
    assert_eq!(echo["command"], "sweep-azimuth");
    assert_eq!(echo["config"]["ensemble"]["seed"], 7);
    assert_eq!(echo["config"]["ensemble"]["n_per_angle"], 40);
}

#[test]
fn unknown_config_key_exits_2_and_names_it() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), "[potential]\nwell_depht_mev = 8.0\n");
    let out = grazesim()
        .args(["sweep-azimuth", "--config"])
        .arg(&config)
        .arg("--out-dir")
        .arg(tmp.path().join("x"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("well_depht_mev"), "stderr: {err}");
}

#[test]
fn sweep_scatter_mode_writes_per_trajectory_rows() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        tmp.path(),
        "
[sweep]
phi_max_rad = 0.01
phi_count = 3
with_quantum = false
scatter_per_angle = 5
energy_tol = 1e-5

[ensemble]
n_per_angle = 20
",
    );
    let out_dir = tmp.path().join("out");
    let out = grazesim()
        .args(["sweep-azimuth", "--config"])
        .arg(&config)
        .args(["--threads", "2", "--out-dir"])
        .arg(&out_dir)
        .output()
        .unwrap();
    run_ok(&out);
    let text = fs::read_to_string(out_dir.join("scatter.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "phi_rad,dky,dkx");
    assert_eq!(lines.len(), 1 + 3 * 5);
}

#[test]
fn empty_azimuth_grid_exits_2() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), "[sweep]\nphi_count = 0\n");
    let out = grazesim()
        .args(["sweep-azimuth", "--config"])
        .arg(&config)
        .arg("--out-dir")
        .arg(tmp.path().join("x"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_subcommand_is_a_usage_error() {
    let out = grazesim().output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn spectrum_emits_normalized_spectra_per_azimuth() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        tmp.path(),
        "
[spectrum]
phi_list_rad = [0.0, 0.04]
n_classical = 400
energy_tol = 1e-5
axis_points = 301
",
    );
    let out_dir = tmp.path().join("out");
    let out = grazesim()
        .args(["spectrum", "--config"])
        .arg(&config)
        .args(["--threads", "2", "--svg", "--out-dir"])
        .arg(&out_dir)
        .output()
        .unwrap();
    run_ok(&out);

    for i in 0..2 {
        let text = fs::read_to_string(out_dir.join(format!("spectrum_{i:02}.csv"))).unwrap();
        let mut p_q_sum = 0.0;
        let mut p_c_sum = 0.0;
        for line in text.lines().skip(1) {
            let cells: Vec<&str> = line.split(',').collect();
            assert_eq!(cells.len(), 5, "row: {line}");
            p_q_sum += cells[3].parse::<f64>().unwrap();
            p_c_sum += cells[4].parse::<f64>().unwrap();
        }
        assert!((p_q_sum - 1.0).abs() < 1e-6, "quantum sum {p_q_sum} at {i}");
        assert!((p_c_sum - 1.0).abs() < 1e-9, "classical sum {p_c_sum} at {i}");
        assert!(out_dir.join(format!("curve_{i:02}.csv")).exists());
        assert!(out_dir.join(format!("spectrum_{i:02}.meta.json")).exists());
        assert!(out_dir.join(format!("spectrum_{i:02}.svg")).exists());
    }
    // outside the transfer window the spectrum is specular
    let outside = fs::read_to_string(out_dir.join("spectrum_01.csv")).unwrap();
    for line in outside.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        let n: i32 = cells[0].parse().unwrap();
        let p: f64 = cells[3].parse().unwrap();
        if n == 0 {
            assert!(p > 0.99, "specular {p}");
        }
    }
}

#[test]
fn flat_surface_spectrum_is_a_single_stick() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        tmp.path(),
        "
[potential]
corrugation = 0.0

[spectrum]
phi_list_rad = [0.005]
n_classical = 200
energy_tol = 1e-5
",
    );
    let out_dir = tmp.path().join("out");
    let out = grazesim()
        .args(["spectrum", "--config"])
        .arg(&config)
        .args(["--threads", "2", "--out-dir"])
        .arg(&out_dir)
        .output()
        .unwrap();
    run_ok(&out);
    let text = fs::read_to_string(out_dir.join("spectrum_00.csv")).unwrap();
    for line in text.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        let n: i32 = cells[0].parse().unwrap();
        let pq: f64 = cells[3].parse().unwrap();
        let pc: f64 = cells[4].parse().unwrap();
        if n == 0 {
            assert!(pq > 1.0 - 1e-9 && pc == 1.0, "n=0: {pq} {pc}");
        } else {
            assert!(pq < 1e-10 && pc == 0.0, "n={n}: {pq} {pc}");
        }
    }
}

#[test]
fn empty_spectrum_phi_list_exits_2() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(tmp.path(), "[spectrum]\nphi_list_rad = []\n");
    let out = grazesim()
        .args(["spectrum", "--config"])
        .arg(&config)
        .arg("--out-dir")
        .arg(tmp.path().join("x"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn width_scan_emits_one_row_per_energy() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        tmp.path(),
        "
[scan]
energies_ev = [150.0, 400.0]
n_per_angle = 60
phi_points = 15
with_quantum = false
",
    );
    let out_dir = tmp.path().join("out");
    let out = grazesim()
        .args(["width-scan", "--config"])
        .arg(&config)
        .args(["--threads", "2", "--out-dir"])
        .arg(&out_dir)
        .output()
        .unwrap();
    run_ok(&out);
    let text = fs::read_to_string(out_dir.join("width_scan.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "energy_ev,w_phi_analytic,w_phi_classical,w_phi_quantum,w_ky_analytic,open_channels,status"
    );
    assert_eq!(lines.len(), 3);
    for (row, e) in lines[1..].iter().zip(["150", "400"]) {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells[0], e);
        assert!(cells[1].parse::<f64>().unwrap() > 0.0);
        assert!(cells[2].parse::<f64>().unwrap() > 0.0);
        assert_eq!(cells[6], "ok");
    }
}

#[test]
fn width_scan_analytic_column_matches_hand_evaluation() {
    // closed form of the pendulum width at one energy, evaluated the long
    // way around through the CLI
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        tmp.path(),
        "
[scan]
energies_ev = [200.0]
n_per_angle = 40
phi_points = 11
with_quantum = false
",
    );
    let out_dir = tmp.path().join("out");
    let out = grazesim()
        .args(["width-scan", "--config"])
        .arg(&config)
        .args(["--threads", "1", "--out-dir"])
        .arg(&out_dir)
        .output()
        .unwrap();
    run_ok(&out);
    let text = fs::read_to_string(out_dir.join("width_scan.csv")).unwrap();
    let cells: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let w_ky: f64 = cells[4].parse().unwrap();

    // spreadsheet-level evaluation with the default model constants
    let (d, alpha, beta, m) = (8.0, 0.40, 0.18, 4.0026);
    let theta = 0.506 * std::f64::consts::PI;
    let e_n = 2.0e5 * theta.cos().powi(2);
    let u = (1.0 + (1.0 + (1.0 - beta) * e_n / d).sqrt()) / (1.0 - beta);
    let _ = alpha; // the turning-point factor enters through u alone
    let w_expected = 2.0 * (4.0 * m * beta * d).sqrt() * u / 4.1804f64.sqrt();
    assert!(
        ((w_ky - w_expected) / w_expected).abs() < 1e-6,
        "CLI {w_ky} vs hand {w_expected}"
    );
}

#[test]
fn trajectory_dump_is_consistent() {
    let tmp = TempDir::new().unwrap();
    let out_dir = tmp.path().join("out");
    let out = grazesim()
        .args(["trajectory", "--phi", "0.01", "--x0", "0.4", "--y0", "1.1"])
        .args(["--threads", "1", "--out-dir"])
        .arg(&out_dir)
        .output()
        .unwrap();
    run_ok(&out);
    let text = fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,x,y,z,kx,ky,kz,energy_mev");
    assert!(lines.len() > 10);
    // energy column is conserved along the dump
    let energy = |row: &str| row.split(',').nth(7).unwrap().parse::<f64>().unwrap();
    let e0 = energy(lines[1]);
    for row in &lines[2..] {
        assert!(((energy(row) - e0) / e0).abs() < 1e-6);
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("trajectory_summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["status"], "completed");
}

#[test]
fn potential_table_samples_the_model() {
    let tmp = TempDir::new().unwrap();
    let out_dir = tmp.path().join("out");
    let out = grazesim()
        .args(["potential-table", "--out-dir"])
        .arg(&out_dir)
        .output()
        .unwrap();
    run_ok(&out);
    let text = fs::read_to_string(out_dir.join("potential_table.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "z,v0,v1,vav_stable,vav_unstable,v_origin");
    // the stable line sits below the unstable one everywhere
    for row in &lines[1..] {
        let cells: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        assert!(cells[3] <= cells[4] + 1e-12);
    }
}
