use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use cramer_wold::PhiMode;
use cramer_wold_cli::{
    cmd_bench, cmd_dist, cmd_normality, cmd_oracle_validate, cmd_train, BenchOptions, CliError,
    DistOptions, OracleOptions, RunReport,
};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Auto,
    Exact,
    Asymptotic,
    Bessel2,
}

impl ModeArg {
    fn resolve(self) -> Option<PhiMode> {
        match self {
            ModeArg::Auto => None,
            ModeArg::Exact => Some(PhiMode::ExactSeries),
            ModeArg::Asymptotic => Some(PhiMode::AsymptoticLargeD),
            ModeArg::Bessel2 => Some(PhiMode::BesselD2),
        }
    }
}

/// Cramer-Wold distances, Monte-Carlo validation, normality statistics and
/// CWAE training.
#[derive(Debug, Parser)]
#[command(name = "cwdist", version)]
struct Cli {
    /// Worker threads for parallel sums (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Seed for every random choice made by the command.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Also write the report to this file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Print the sectioned report instead of key=value lines.
    #[arg(long, global = true)]
    dump: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Squared CW distance between two samples, or to N(0, I) when Y is omitted.
    Dist {
        x: PathBuf,
        y: Option<PathBuf>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long, value_enum, default_value = "auto")]
        mode: ModeArg,
        /// CSV files start with a header row.
        #[arg(long)]
        header: bool,
    },
    /// Compare the closed form with a Monte-Carlo average over random slices.
    Oracle {
        x: PathBuf,
        y: Option<PathBuf>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long, value_enum, default_value = "auto")]
        mode: ModeArg,
        #[arg(long, default_value_t = 200_000)]
        directions: usize,
        #[arg(long)]
        header: bool,
    },
    /// Mardia skewness and kurtosis.
    Normality {
        x: PathBuf,
        #[arg(long)]
        header: bool,
    },
    /// Train an autoencoder from a key=value config file.
    Train { config: PathBuf },
    /// Time the CW cost and gradient for several batch sizes.
    Bench {
        #[arg(long, value_delimiter = ',', default_values_t = vec![128, 256])]
        batch_sizes: Vec<usize>,
        #[arg(long, default_value_t = 8)]
        dim: usize,
        #[arg(long, default_value_t = 20)]
        repeats: usize,
        #[arg(long, value_enum, default_value = "auto")]
        mode: ModeArg,
    },
}

fn run(cli: &Cli) -> Result<RunReport, CliError> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::Dist {
            x,
            y,
            gamma,
            mode,
            header,
        } => cmd_dist(&DistOptions {
            x: x.clone(),
            y: y.clone(),
            gamma: *gamma,
            mode: mode.resolve(),
            header: *header,
        }),
        Command::Oracle {
            x,
            y,
            gamma,
            mode,
            directions,
            header,
        } => cmd_oracle_validate(&OracleOptions {
            x: x.clone(),
            y: y.clone(),
            gamma: *gamma,
            mode: mode.resolve(),
            directions: *directions,
            seed,
            header: *header,
        }),
        Command::Normality { x, header } => cmd_normality(x, *header),
        Command::Train { config } => cmd_train(config, cli.seed),
        Command::Bench {
            batch_sizes,
            dim,
            repeats,
            mode,
        } => cmd_bench(&BenchOptions {
            batch_sizes: batch_sizes.clone(),
            dim: *dim,
            repeats: *repeats,
            seed,
            mode: mode.resolve(),
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            let text = if cli.dump {
                report.to_sections()
            } else {
                report.to_kv()
            };
            print!("{text}");
            if let Some(path) = &cli.out {
                if let Err(e) = std::fs::write(path, &text) {
                    eprintln!("cwdist: cannot write {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("cwdist: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
