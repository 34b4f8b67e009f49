use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ofdm_sense::harness::{
    draw_trial, emit_csv, emit_plot_script, parse_snr, run_suite, run_sweep, run_trial,
    InstanceDump, Mode, Suite, SweepConfig,
};
use ofdm_sense::{OfdmConfig, SenseError};

#[derive(Parser)]
#[command(
    name = "sense",
    version,
    about = "Compressive spectrum sensing of OFDM signals with unknown timing offset"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo grid sweep and write per-cell metrics as CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write a gnuplot script with the data inline.
        #[arg(long)]
        plot: Option<PathBuf>,
        /// Overrides the seed in the config file.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; defaults to all cores. Output does not depend on it.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run one trial and print its record as a CSV line.
    Trial {
        /// SNR in dB, or `inf` for no noise.
        #[arg(long, value_parser = snr_arg, allow_hyphen_values = true)]
        snr_db: f64,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        nb: usize,
        /// Compression ratio M/N in (0, 1].
        #[arg(long)]
        ratio: f64,
        #[arg(long, value_parser = mode_arg)]
        mode: Mode,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 32)]
        n_sub: usize,
        #[arg(long, default_value_t = 8)]
        n_cp: usize,
        #[arg(long, default_value_t = 4)]
        max_sweeps: usize,
        /// Print the CSV header line first.
        #[arg(long)]
        header: bool,
        /// Write the drawn instance (A, z, truth) as JSON.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Run property suites; exits nonzero if any property fails.
    Verify {
        #[arg(long, value_parser = suite_arg, default_value = "all")]
        suite: Suite,
    },
}

fn snr_arg(s: &str) -> Result<f64, String> {
    parse_snr(s).map_err(|e| e.to_string())
}

fn mode_arg(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|e: SenseError| e.to_string())
}

fn suite_arg(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|e: SenseError| e.to_string())
}

fn sweep(
    config: PathBuf,
    out: PathBuf,
    plot: Option<PathBuf>,
    seed: Option<u64>,
    workers: Option<usize>,
) -> Result<(), SenseError> {
    let mut sc = SweepConfig::load(&config)?;
    if let Some(s) = seed {
        sc.seed = s;
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        if n == 0 {
            return Err(SenseError::InvalidConfig(
                "--workers must be at least 1".into(),
            ));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| SenseError::InvalidConfig(format!("thread pool: {e}")))?;
    let rows = pool.install(|| run_sweep(&sc))?;
    emit_csv(&rows, &out)?;
    if let Some(p) = plot {
        emit_plot_script(&rows, &p)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn trial(
    snr_db: f64,
    k: usize,
    nb: usize,
    ratio: f64,
    mode: Mode,
    seed: u64,
    n_sub: usize,
    n_cp: usize,
    max_sweeps: usize,
    header: bool,
    dump: Option<PathBuf>,
) -> Result<(), SenseError> {
    let cfg = OfdmConfig::with_ratio(n_sub, n_cp, k, ratio, nb)?;
    if let Some(path) = dump {
        let text =
            InstanceDump::new(&cfg, snr_db, seed, &draw_trial(&cfg, snr_db, seed)?).to_json();
        std::fs::write(&path, text).map_err(|source| SenseError::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    let record = run_trial(&cfg, snr_db, mode, seed, max_sweeps)?;
    if header {
        println!("{}", ofdm_sense::harness::TrialRecord::CSV_HEADER);
    }
    println!("{record}");
    Ok(())
}

fn main() -> ExitCode {
    let result = match Cli::parse().cmd {
        Command::Sweep {
            config,
            out,
            plot,
            seed,
            workers,
        } => sweep(config, out, plot, seed, workers),
        Command::Trial {
            snr_db,
            k,
            nb,
            ratio,
            mode,
            seed,
            n_sub,
            n_cp,
            max_sweeps,
            header,
            dump,
        } => trial(
            snr_db, k, nb, ratio, mode, seed, n_sub, n_cp, max_sweeps, header, dump,
        ),
        Command::Verify { suite } => {
            let outcomes = run_suite(suite);
            for o in &outcomes {
                println!("{o}");
            }
            if outcomes.iter().all(|o| o.passed()) {
                return ExitCode::SUCCESS;
            }
            return ExitCode::FAILURE;
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
