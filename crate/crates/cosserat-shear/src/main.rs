use clap::{Parser, Subcommand};
use cosserat_shear::cli::{
    cmd_check, cmd_evolve, cmd_harmonic, cmd_minima, cmd_potential, cmd_selftest, CliError,
};
use cosserat_shear::config::{parse_file, ScenarioConfig};
use std::path::PathBuf;
use std::process::ExitCode;

/// Batch tool for the 2D Cosserat shear problem: potential tables, branch
/// traces, the harmonic limit, Allen-Cahn relaxation runs, and parameter /
/// boundary-data checks.
#[derive(Parser)]
#[command(name = "cosserat-shear", version, about)]
struct Cli {
    /// Scenario config file
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides the [output] section)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for the randomized self-checks
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the reaction potentials over one period
    Potential {
        /// Shear values for extra J_beta columns (comma separated)
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        betas: Vec<f64>,
        /// Number of samples on [0, 2*pi)
        #[arg(long, default_value_t = 361)]
        n_alpha: usize,
    },
    /// Trace minima/maxima branches over a shear range
    Minima {
        #[arg(long, default_value_t = -2.0, allow_negative_numbers = true)]
        beta_min: f64,
        #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
        beta_max: f64,
        #[arg(long, default_value_t = 81)]
        n_beta: usize,
    },
    /// Solve the harmonic limiting problem for the scenario boundary data
    Harmonic,
    /// Run the Allen-Cahn relaxation to stationarity
    Evolve,
    /// Evaluate the parameter and boundary-data conditions
    Check,
    /// Run the seeded randomized self-checks
    #[command(hide = true)]
    Selftest,
}

fn load_config(path: &Option<PathBuf>) -> Result<ScenarioConfig, CliError> {
    match path {
        Some(p) => Ok(parse_file(p)?),
        None => Err(CliError::Config(
            "this subcommand needs --config <file>".into(),
        )),
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Potential { betas, n_alpha } => {
            let cfg = load_config(&cli.config)?;
            let path = cmd_potential(&cfg, out, betas, *n_alpha)?;
            println!("wrote {}", path.display());
        }
        Command::Minima {
            beta_min,
            beta_max,
            n_beta,
        } => {
            let cfg = load_config(&cli.config)?;
            let path = cmd_minima(&cfg, out, *beta_min, *beta_max, *n_beta)?;
            println!("wrote {}", path.display());
        }
        Command::Harmonic => {
            let cfg = load_config(&cli.config)?;
            let path = cmd_harmonic(&cfg, out)?;
            println!("wrote {}", path.display());
        }
        Command::Evolve => {
            let cfg = load_config(&cli.config)?;
            let path = cmd_evolve(&cfg, out)?;
            println!("wrote {}", path.display());
        }
        Command::Check => {
            let cfg = load_config(&cli.config)?;
            print!("{}", cmd_check(&cfg)?);
        }
        Command::Selftest => {
            let (text, ok) = cmd_selftest(cli.seed);
            print!("{text}");
            if !ok {
                return Err(CliError::Numerical("selftest failed".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
