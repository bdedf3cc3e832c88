use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod report;

#[derive(Parser)]
#[command(name = "search-game", version, about = "Equilibria and price of anarchy in competitive search games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a named instance, or list the catalog.
    Scenario(ScenarioArgs),
    /// Compute equilibria of an instance.
    Solve(SolveArgs),
    /// Check whether a profile is an epsilon-equilibrium.
    Verify(VerifyArgs),
    /// Social optimum, price of anarchy and price of stability.
    Poa(PoaArgs),
    /// Stationary distribution, derivatives and monotonicity of a Markov user model.
    Markov(MarkovArgs),
    /// Structural checks of a selection rule.
    Rulecheck(RulecheckArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Closed form for the proportional rule when it applies, pure profiles otherwise.
    Auto,
    ClosedForm,
    BestResponse,
    BruteForce,
}

#[derive(Args)]
pub struct Output {
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct ScenarioArgs {
    #[arg(long)]
    pub list: bool,
    #[arg(long, required_unless_present = "list")]
    pub name: Option<String>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Perturbation scale.
    #[arg(long)]
    pub scale: Option<f64>,
    /// Write the instance JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the claimed equilibrium profile here, when there is one.
    #[arg(long)]
    pub profile_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    pub method: Method,
    #[arg(long, default_value_t = 1e-6)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Grid denominator for brute force (12 by default; 1 enumerates pure profiles).
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long, default_value_t = 100)]
    pub max_rounds: usize,
    /// Write the first verified equilibrium here.
    #[arg(long)]
    pub profile_out: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub profile: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args)]
pub struct PoaArgs {
    #[arg(long, required_unless_present = "scenario", conflicts_with = "scenario")]
    pub instance: Option<PathBuf>,
    /// A profile file, or a JSON array of profile files' contents.
    #[arg(long, requires = "instance")]
    pub equilibria: Option<PathBuf>,
    /// Sweep a scenario instead of reading an instance.
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long, value_delimiter = ',', requires = "scenario")]
    pub n_values: Vec<usize>,
    #[arg(long, value_delimiter = ',', requires = "scenario")]
    pub k_values: Vec<usize>,
    #[arg(long, requires = "scenario")]
    pub beta: Option<f64>,
    #[arg(long, requires = "scenario")]
    pub scale: Option<f64>,
    /// Grid denominator when equilibria are searched by brute force.
    #[arg(long, default_value_t = 1)]
    pub grid: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// exhaustive, top_k or greedy; chosen from the instance by default.
    #[arg(long)]
    pub optimum: Option<String>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args)]
pub struct MarkovArgs {
    /// Model JSON with `success` and `failure` matrices.
    #[arg(long, required_unless_present = "instance", conflicts_with = "instance")]
    pub model: Option<PathBuf>,
    /// Instance whose rule is `induced_markov`.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// Satisfaction profile, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub q: Vec<f64>,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Args)]
pub struct RulecheckArgs {
    #[arg(long, required_unless_present = "instance", conflicts_with = "instance")]
    pub rule: Option<String>,
    #[arg(long, requires = "rule")]
    pub k: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    #[arg(long)]
    pub pages: Option<usize>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub instance: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0625)]
    pub grid_step: f64,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Shift sizes for the cross-concavity check.
    #[arg(long, value_delimiter = ',')]
    pub epsilons: Option<Vec<f64>>,
    /// Fixed coordinates 3..k for the cross-concavity check.
    #[arg(long, value_delimiter = ',')]
    pub rest: Option<Vec<f64>>,
    #[command(flatten)]
    pub output: Output,
}

/// Failure with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

pub const EXIT_INVALID: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;

impl Failure {
    pub fn invalid(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }
}

impl From<search_game::Error> for Failure {
    fn from(e: search_game::Error) -> Self {
        let code = match e {
            search_game::Error::Numeric(_) => EXIT_SOLVER,
            _ => EXIT_INVALID,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    let start = Instant::now();
    let result = match cli.command {
        Command::Scenario(a) => commands::scenario(a, &argv),
        Command::Solve(a) => commands::solve(a, &argv),
        Command::Verify(a) => commands::verify(a, &argv),
        Command::Poa(a) => commands::poa(a, &argv),
        Command::Markov(a) => commands::markov(a, &argv),
        Command::Rulecheck(a) => commands::rulecheck(a, &argv),
    };
    eprintln!("wall time: {:.3}s", start.elapsed().as_secs_f64());
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
