use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dicke_cli::manifest::{unix_now, RunManifest};
use dicke_cli::{parse_config, resolve, run_command, verify, write_run, CliError, Command, ConfigFile};
use dicke_core::experiment::DEFAULT_SWEEP_POINTS;
use dicke_core::SweepAxis;

/// Dicke-state preparation by rapid adiabatic passage on trapped ions.
#[derive(Parser)]
#[command(name = "dicke", version)]
struct Cli {
    /// JSON configuration; omitted keys take the built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for output files and manifest.json. Without it the primary
    /// output is printed to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the readout seed of the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Prepare, run the RAP pulse and report the final state.
    Simulate,
    /// Adiabatic energies of the five-state model, with and without carrier.
    Potentials,
    /// Parity oscillation after a global π/2 analysis pulse.
    Parity {
        /// Use the ideal Dicke state instead of simulating.
        #[arg(long)]
        ideal: bool,
    },
    /// Simulated fluorescence-count histogram.
    Histogram {
        #[arg(long)]
        ideal: bool,
        /// Analysis-pulse phase (rad) applied before readout.
        #[arg(long)]
        phi: Option<f64>,
    },
    /// Fidelity over one decade of pulse width or peak Rabi frequency.
    Sweep {
        #[arg(long, default_value = "width")]
        axis: SweepAxis,
        #[arg(long, default_value_t = DEFAULT_SWEEP_POINTS)]
        points: usize,
    },
    /// Check the files in an output directory against its manifest.
    Verify { dir: PathBuf },
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let cmd = match cli.command {
        Sub::Verify { dir } => {
            let m = verify(&dir)?;
            println!("{} files match {}", m.files.len(), dir.join("manifest.json").display());
            return Ok(0);
        }
        Sub::Simulate => Command::Simulate,
        Sub::Potentials => Command::Potentials,
        Sub::Parity { ideal } => Command::Parity { ideal },
        Sub::Histogram { ideal, phi } => Command::Histogram { ideal, phi },
        Sub::Sweep { axis, points } => Command::Sweep { axis, points },
    };
    let started = unix_now();
    let mut file = match &cli.config {
        Some(p) => parse_config(p)?,
        None => ConfigFile::default(),
    };
    if let Some(seed) = cli.seed {
        file.seed = Some(seed);
    }
    let resolved = resolve(&file)?;
    let cfg = &resolved.experiment;
    let output = run_command(&cmd, cfg)?;

    match &cli.out {
        Some(dir) => {
            let manifest = RunManifest {
                tool: "dicke".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                command: cmd.name().into(),
                seed: cfg.measurement.seed,
                started_unix_s: started,
                finished_unix_s: started,
                partial: output.partial,
                eta: cfg.eta_value(),
                config: resolved.file.clone(),
                files: Vec::new(),
            };
            write_run(dir, manifest, &output.files)?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(output.files[0].contents.as_bytes())?;
            stdout.flush()?;
        }
    }
    if output.partial {
        eprintln!("dicke: some sweep points failed; see NaN rows");
        return Ok(3);
    }
    Ok(0)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("dicke: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
