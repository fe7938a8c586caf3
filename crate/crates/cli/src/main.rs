use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dissolve::harness::{parse_grid, run_experiment};
use dissolve::{DecoderKind, ExperimentConfig, ExperimentKind, GainMapping};

/// Monte Carlo experiments for interference dissolution. Writes CSV to
/// standard output unless --out is given.
#[derive(Parser)]
#[command(name = "dissolve", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Symbol error rate of the scheme, 2x1 MRC and successive decoding.
    Ser(Common),
    /// Normalized Gaussian-input rates, the C - 1 floor and the Fano bound.
    Rate(Common),
    /// Scaled minimum distance floor as the constellation grows.
    Dmin {
        #[command(flatten)]
        common: Common,
        /// Comma-separated half-sizes to probe.
        #[arg(long, value_delimiter = ',', default_value = "2,4,8,16")]
        qs_grid: Vec<u32>,
    },
    /// Fano-bound DoF slope; --snr-db gives the power grid 10 log10 P.
    Dof(Common),
    /// Three-user multicast error rates.
    Multicast(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Decoder {
    Weight,
    Ml,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mapping {
    Independent,
    Shared,
}

#[derive(Args)]
struct Common {
    /// Symbols per block.
    #[arg(long, default_value_t = 4)]
    k: usize,
    /// Constellation half-size; the alphabet is 2*qs-PAM.
    #[arg(long, default_value_t = 2)]
    qs: u32,
    /// SNR grid as start:step:stop, a comma list, or one value (dB).
    #[arg(long, default_value = "0:2:30", allow_hyphen_values = true)]
    snr_db: String,
    #[arg(long, default_value_t = 100_000)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value = "weight")]
    decoder: Decoder,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Add normalized columns for external plotting.
    #[arg(long)]
    emit_plot_data: bool,
    #[arg(long, default_value_t = 2)]
    antennas: usize,
    #[arg(long, value_enum, default_value = "independent")]
    mapping: Mapping,
    /// Noise variance; 0 runs the noiseless channel.
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    /// Constellation growth exponent for the DoF sweep.
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
}

fn config(kind: ExperimentKind, c: Common) -> dissolve::Result<ExperimentConfig> {
    Ok(ExperimentConfig {
        experiment: kind,
        k: c.k,
        q_s: c.qs,
        zeta_db_grid: parse_grid(&c.snr_db)?,
        trials: c.trials,
        seed: c.seed,
        decoder: match c.decoder {
            Decoder::Weight => DecoderKind::Weight,
            Decoder::Ml => DecoderKind::Ml,
        },
        output_path: c.out,
        antennas: c.antennas,
        mapping: match c.mapping {
            Mapping::Independent => GainMapping::Independent,
            Mapping::Shared => GainMapping::SharedAntennas,
        },
        sigma2: c.sigma2,
        epsilon: c.epsilon,
        emit_plot_data: c.emit_plot_data,
        ..ExperimentConfig::default()
    })
}

fn run(cli: Cli) -> dissolve::Result<()> {
    let cfg = match cli.command {
        Command::Ser(c) => config(ExperimentKind::Ser, c)?,
        Command::Rate(c) => config(ExperimentKind::Rate, c)?,
        Command::Dmin { common, qs_grid } => {
            ExperimentConfig { dmin_q_grid: qs_grid, ..config(ExperimentKind::Dmin, common)? }
        }
        Command::Dof(c) => config(ExperimentKind::Dof, c)?,
        Command::Multicast(c) => config(ExperimentKind::Multicast, c)?,
    };
    let csv = run_experiment(&cfg)?;
    if cfg.output_path.is_none() {
        print!("{csv}");
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
