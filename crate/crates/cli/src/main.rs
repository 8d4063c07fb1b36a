use std::path::PathBuf;
use std::process::ExitCode;

use absorption_cli::{exit_code, run, CliError, ExperimentConfig, Scenario, THREADS_ENV};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "absorption-lab", version, about = "Experiments for the heat equation with weak absorption")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML file overriding the scenario defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out_dir` from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Multiplies every check tolerance.
    #[arg(long, global = true, default_value_t = 1.0)]
    tolerance_scale: f64,
    /// Print the resolved config as TOML and exit.
    #[arg(long, global = true)]
    print_config: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Classify the nonlinearity against the growth conditions.
    Conditions,
    /// Flat solutions and the solution with infinite data.
    FlatOde,
    /// Stationary radial profiles and their growth law.
    Stationary,
    /// Decreasing sequence of capped problems.
    TheoremB,
    /// Increasing sequence of truncated problems and the threshold functional.
    TheoremC,
    /// Two limits from one initial datum.
    NonUniqueness,
    /// Threshold functional in the borderline exponent.
    Alpha2,
}

impl From<Command> for Scenario {
    fn from(c: Command) -> Self {
        match c {
            Command::Conditions => Scenario::Conditions,
            Command::FlatOde => Scenario::FlatOde,
            Command::Stationary => Scenario::Stationary,
            Command::TheoremB => Scenario::TheoremB,
            Command::TheoremC => Scenario::TheoremC,
            Command::NonUniqueness => Scenario::NonUniqueness,
            Command::Alpha2 => Scenario::Alpha2,
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .map_err(|_| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got '{value}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Config(format!("{THREADS_ENV}: {e}")))
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    configure_threads()?;
    let scenario = Scenario::from(cli.command);
    let config = match &cli.config {
        Some(path) => ExperimentConfig::load(path, Some(scenario))?,
        None => ExperimentConfig::defaults(scenario),
    };
    if cli.print_config {
        print!("{}", config.to_toml());
        return Ok(0);
    }
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(&config.out_dir));
    let manifest = run(&config, &out, cli.tolerance_scale)?;
    for check in &manifest.checks {
        println!(
            "[{}] {}: {:.6e} (limit {:.6e})",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            check.measured,
            check.limit
        );
    }
    println!("wrote {} files to {}", manifest.files.len() + 1, out.display());
    Ok(exit_code(&manifest))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
