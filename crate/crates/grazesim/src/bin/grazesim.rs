use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use grazesim::commands::{
    cmd_potential_table, cmd_spectrum, cmd_sweep_azimuth, cmd_trajectory, cmd_width_scan,
    CommandCtx,
};
use grazesim::config::RunConfig;
use grazesim::GrazeError;

/// Grazing-incidence fast-atom scattering from a periodic surface:
/// classical trajectory ensembles, coupled-channel diffraction spectra and
/// momentum-transfer window widths.
#[derive(Parser)]
#[command(name = "grazesim", version, about, max_term_width = 100)]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the ensemble seed from the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (falls back to GRAZESIM_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output directory for CSV/JSON artifacts.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,

    /// Also write static SVG plots.
    #[arg(long, global = true)]
    svg: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classical and quantum momentum-transfer statistics vs azimuth.
    SweepAzimuth,
    /// Diffraction spectra (quantum and quasiclassical) at fixed azimuths.
    Spectrum {
        /// Comma-separated azimuths in rad; overrides the configuration.
        #[arg(long, value_delimiter = ',')]
        phi: Option<Vec<f64>>,
    },
    /// Width estimators (analytic, classical FWHM, quantum FWHM) vs energy.
    WidthScan,
    /// Integrate and dump a single trajectory.
    Trajectory {
        /// Incident azimuth in rad.
        #[arg(long, default_value_t = 0.0)]
        phi: f64,
        /// Start cell coordinate x (random from the seed when omitted).
        #[arg(long)]
        x0: Option<f64>,
        /// Start cell coordinate y (random from the seed when omitted).
        #[arg(long)]
        y0: Option<f64>,
    },
    /// Sample the potential and its channel average on a z grid.
    PotentialTable,
}

fn run(cli: Cli) -> Result<(), GrazeError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.ensemble.seed = seed;
    }

    let threads = cli.threads.or_else(|| {
        std::env::var("GRAZESIM_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });

    let ctx = CommandCtx::new(config, cli.out_dir.clone(), cli.svg);
    let work = || match &cli.command {
        Command::SweepAzimuth => cmd_sweep_azimuth(&ctx),
        Command::Spectrum { phi } => cmd_spectrum(&ctx, phi.clone()),
        Command::WidthScan => cmd_width_scan(&ctx),
        Command::Trajectory { phi, x0, y0 } => cmd_trajectory(&ctx, *phi, *x0, *y0),
        Command::PotentialTable => cmd_potential_table(&ctx),
    };

    match threads {
        Some(n) if n > 0 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| GrazeError::Config(format!("thread pool: {e}")))?;
            pool.install(work)
        }
        _ => work(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
