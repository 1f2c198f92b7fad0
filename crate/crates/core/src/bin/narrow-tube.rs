use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use narrow_tube::harness::{self, HarnessError, Kind, EXIT_CONFIG, EXIT_OK};

#[derive(Parser)]
#[command(name = "narrow-tube", version, about = "Reflected Brownian motion in graph-shaped narrow tubes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (default: config, then NARROW_TUBE_WORKERS, then all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse the config and check the domain is feasible for every eps.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Exit place, mean exit time, exponential law and independence.
    ExitStats(Common),
    /// Intermediate-scale chain predictions.
    Metastable(Common),
    /// First critical scale against the continuous-time chain.
    CtmcCompare(Common),
    /// Neumann heat solutions through the process.
    Pde(Common),
    /// Localization near the smallest vertex.
    Localization(Common),
}

fn read(path: &PathBuf) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.clone(), source })
}

fn run(cli: Cli) -> Result<i32, HarnessError> {
    let (kind, c) = match cli.command {
        Command::Validate { config, .. } => {
            let text = read(&config).map_err(|e| HarnessError::Config(e.to_string()))?;
            print!("{}", harness::validate(&text)?);
            return Ok(EXIT_OK);
        }
        Command::ExitStats(c) => (Kind::ExitStats, c),
        Command::Metastable(c) => (Kind::MetastableIntermediate, c),
        Command::CtmcCompare(c) => (Kind::CtmcCompare, c),
        Command::Pde(c) => (Kind::Pde, c),
        Command::Localization(c) => (Kind::Localization, c),
    };
    let text = read(&c.config).map_err(|e| HarnessError::Config(e.to_string()))?;
    harness::execute(kind, &text, &c.out, c.workers, c.seed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
