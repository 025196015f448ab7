use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use slipcurrent_cli::commands::{cmd_epsilon_study, cmd_flat_norm, cmd_run, cmd_slice_dump, cmd_verify, Options};
use slipcurrent_cli::{parse_scenario, CliError, Level, RunManifest};

#[derive(Parser)]
#[command(name = "slipcurrent", version, about = "Discrete dislocation plasticity with slip currents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory; defaults to `output.dir` of the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for the catalog search.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed of the randomized invariant checks.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a scenario and write its trace.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Also run the invariant suite at this level.
        #[arg(long, value_enum)]
        level: Option<Level>,
    },
    /// Run the invariant suite.
    Verify {
        #[arg(long, value_enum, default_value = "fast")]
        level: Level,
        /// Scenario for the solver checks instead of the built-in one.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Compare evolutions of εℤ-rounded initial data across ε.
    EpsilonStudy {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 0.5, 0.25, 0.125])]
        eps: Vec<f64>,
        #[arg(long, value_enum)]
        level: Option<Level>,
    },
    /// Write the dislocation system at every step or at given times.
    SliceDump {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',')]
        times: Option<Vec<f64>>,
    },
    /// Flat norm of a 1-chain dump, or the flat distance between two.
    FlatNorm {
        chain: PathBuf,
        #[arg(long)]
        against: Option<PathBuf>,
        /// Bounding cube `lo,hi` of the chains.
        #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [0.0, 1.0])]
        r#box: Vec<f64>,
    },
}

fn dispatch(cli: &Cli) -> Result<RunManifest, CliError> {
    let mut opts = Options { out: cli.out.clone(), threads: cli.threads, seed: cli.seed, level: None };
    if cli.threads == Some(0) {
        return Err(CliError::Usage("--threads must be positive".into()));
    }
    match &cli.command {
        Command::Run { config, level } => {
            opts.level = *level;
            cmd_run(&parse_scenario(config)?, Some(config), &opts)
        }
        Command::Verify { level, config } => {
            let sc = config.as_deref().map(parse_scenario).transpose()?;
            cmd_verify(*level, sc.as_ref(), config.as_deref(), &opts)
        }
        Command::EpsilonStudy { config, eps, level } => {
            opts.level = *level;
            cmd_epsilon_study(&parse_scenario(config)?, eps, Some(config), &opts)
        }
        Command::SliceDump { config, times } => cmd_slice_dump(&parse_scenario(config)?, times.as_deref(), Some(config), &opts),
        Command::FlatNorm { chain, against, r#box } => cmd_flat_norm(chain, against.as_deref(), [r#box[0], r#box[1]], &opts),
    }
}

fn print(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).unwrap_or_else(|_| v.to_string()));
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match dispatch(&cli) {
        Ok(m) => {
            let manifest = m.out_dir.as_deref().map(|d| Path::new(d).join("manifest.json"));
            print(&json!({
                "command": m.command,
                "status": if m.passed { "pass" } else { "fail" },
                "summary": m.summary,
                "failures": m.failures,
                "results": if m.command == "flat-norm" { m.results.clone() } else { serde_json::Value::Null },
                "manifest": manifest,
            }));
            m.exit_code
        }
        Err(e) => {
            print(&json!({ "status": "error", "error": e.to_string(), "failures": e.failures() }));
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
