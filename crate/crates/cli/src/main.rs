//! `varmdp`: batch front end for the Value-at-Risk MDP solvers.

mod cdf_file;
mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use varmdp::rational::{self, Rational};
use varmdp::ErrorKind;

use crate::output::Format;

const SCHEMA_HELP: &str = "\
DOCUMENTS (schema version 1)
  Input and output documents are JSON. Every numeric field accepts a JSON
  number, a decimal string (\"0.25\") or a rational string (\"1/4\"); values
  are stored exactly. Unknown fields are rejected.

  MDP document:
    schema       1 (optional)
    horizon      N
    states       [name, ...]
    actions      [[name, ...] per state]
    transitions  [{x, a, y, p, r}, ...]   names of state, action, next state
    mu0          [prob per state]
    salvage      [value per state] (optional, zero when absent)
    reward_kind  \"sas\" | \"sa\"

  MRP document:
    schema       1 (optional)
    horizon      N
    states       [name, ...]
    transitions  [{x, y, p, r?}, ...]     r when reward_on = \"transition\"
    reward_on    \"state\" | \"transition\"
    rewards      [{x, r}, ...]            when reward_on = \"state\"
    mu0          [prob per state]
    salvage      [value per state] (optional)

  A document is read from the INPUT path, or from stdin when INPUT is absent
  or `-`.

OUTPUT
  Exact quantities print as `num/den (decimal)`, or as a rational column
  followed by a decimal column. Estimates print with 12 significant digits.
  --format applies to tables; summaries print as text, or as a single JSON
  object with --format jsonl.

ENVIRONMENT
  VARMDP_THREADS   worker threads for policy sweeps and simulation
  RUST_LOG         log filter (default: warn)

EXIT STATUS
  0 success, 1 I/O or other failure, 2 parse error, 3 precondition
  violation, 4 budget refusal, 5 ergodicity or degenerate variance,
  6 numerical failure";

#[derive(Debug, Parser)]
#[command(name = "varmdp", version, about = "Value-at-Risk solvers for finite-horizon MDPs", after_long_help = SCHEMA_HELP)]
struct Cli {
    /// Output path for the main artifact (stdout when absent or `-`).
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,

    /// Table format.
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// The two-epoch instance.
    PaperShort,
    /// The same instance with N = 500.
    PaperLong,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RewardKindArg {
    Sas,
    Sa,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KappaStartArg {
    Stationary,
    Initial,
}

/// A document input, optionally narrowed to a stationary policy.
#[derive(Debug, Args)]
pub struct Input {
    /// Document path; stdin when absent or `-`.
    pub input: Option<PathBuf>,

    /// Replace SAS rewards by their expectations r'(x, a) before solving.
    #[arg(long)]
    pub simplify: bool,
}

#[derive(Debug, Args)]
pub struct PolicyArg {
    /// Stationary policy id (mixed-radix over states, state 0 fastest). For
    /// MDP documents the default is the expected-reward optimal policy.
    #[arg(long)]
    pub policy: Option<u128>,
}

#[derive(Debug, Args)]
pub struct KappaArgs {
    /// Fixed truncation lag T instead of the mixing time.
    #[arg(long)]
    pub truncation: Option<usize>,

    /// Mixing-time tolerance on ||P^T - 1 xi||_inf.
    #[arg(long, default_value_t = 1e-12)]
    pub mixing_tol: f64,

    /// Only positive lags in the second kappa term.
    #[arg(long)]
    pub one_sided: bool,

    /// Start distribution weighting the kappa sums.
    #[arg(long, value_enum, default_value_t = KappaStartArg::Stationary)]
    pub kappa_start: KappaStartArg,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the inventory MDP document.
    GenInventory {
        #[arg(long, value_enum)]
        preset: Preset,
        /// Order sets 0..=M-x over stock levels 0..=M instead of the printed sets.
        #[arg(long)]
        capacity_variant: bool,
        /// Override the horizon.
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long, value_enum, default_value_t = RewardKindArg::Sas)]
        reward_kind: RewardKindArg,
    },
    /// Optimal expected total reward and the tie-broken optimal policy.
    SolveExpected {
        #[command(flatten)]
        input: Input,
    },
    /// Exact distribution of the total reward under one policy.
    DistExact {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        policy: PolicyArg,
    },
    /// eta_tau = max P(Phi >= tau) and an optimal augmented-state policy.
    VarThreshold {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_parser = parse_rational, allow_hyphen_values = true)]
        tau: Rational,
    },
    /// Exact Pareto front of the total-reward CDFs (short horizons).
    ParetoShort {
        #[command(flatten)]
        input: Input,
        /// Report min P(Phi <= tau) instead of min P(Phi < tau).
        #[arg(long)]
        closed: bool,
        /// Percentiles alpha for rho_alpha queries, recorded in the companion file.
        #[arg(long, value_parser = parse_rational)]
        alpha: Vec<Rational>,
        /// Companion file mapping witness policy ids to rule listings
        /// (default `<output>.policies.json`).
        #[arg(long)]
        policies: Option<PathBuf>,
        /// Maximum number of augmented policies enumerated.
        #[arg(long, default_value_t = 100_000)]
        max_policies: usize,
    },
    /// Rewrite a transition-rewarded chain over transition pairs `x->y`.
    Transform {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        policy: PolicyArg,
    },
    /// Edgeworth estimate of the total-reward CDF of a chain.
    EstimateCdf {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        policy: PolicyArg,
        /// Horizon (defaults to the document's).
        #[arg(long)]
        horizon: Option<usize>,
        /// `lo:hi:steps`; defaults to mean +- 6 sd with 401 points.
        #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
        grid: Option<Grid>,
        /// Sidecar JSON with the chain quantities (default `<output>.sidecar.json`, else stderr).
        #[arg(long)]
        sidecar: Option<PathBuf>,
        #[command(flatten)]
        kappa: KappaArgs,
    },
    /// Estimated Pareto front over all stationary policies (long horizons).
    ParetoLong {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        horizon: Option<usize>,
        /// `lo:hi:steps`; defaults to mean +- 6 sd of every policy with 401 points.
        #[arg(long, value_parser = parse_grid, allow_hyphen_values = true)]
        grid: Option<Grid>,
        /// Percentiles alpha for rho_alpha queries, recorded in the companion file.
        #[arg(long)]
        alpha: Vec<f64>,
        /// Companion file with per-policy estimates and skip reasons
        /// (default `<output>.policies.json`).
        #[arg(long)]
        policies: Option<PathBuf>,
        #[command(flatten)]
        kappa: KappaArgs,
    },
    /// Monte Carlo sample quantiles of the total reward.
    Simulate {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        policy: PolicyArg,
        /// Horizon (defaults to the document's).
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of evenly spaced quantile levels from 0 to 1.
        #[arg(long, default_value_t = 1001)]
        quantiles: usize,
    },
    /// Kolmogorov-Smirnov distance between two CDF tables.
    Compare { first: PathBuf, second: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

fn parse_rational(s: &str) -> Result<Rational, String> {
    rational::parse(s).map_err(|e| e.to_string())
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, steps] = parts[..] else {
        return Err(format!("expected lo:hi:steps, got `{s}`"));
    };
    let lo: f64 = lo
        .trim()
        .parse()
        .map_err(|_| format!("grid lo `{lo}` is not a number"))?;
    let hi: f64 = hi
        .trim()
        .parse()
        .map_err(|_| format!("grid hi `{hi}` is not a number"))?;
    let steps: usize = steps
        .trim()
        .parse()
        .map_err(|_| format!("grid steps `{steps}` is not a count"))?;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(format!("grid needs finite lo < hi, got {lo}:{hi}"));
    }
    if steps < 2 {
        return Err(format!("grid needs at least 2 steps, got {steps}"));
    }
    Ok(Grid { lo, hi, steps })
}

/// Failure of one command, carrying its exit status.
#[derive(Debug)]
pub enum CliError {
    Core(varmdp::Error),
    Io(String),
    Parse(String),
    Precondition(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Precondition(_) => 3,
            CliError::Core(e) => match e.kind() {
                ErrorKind::Parse => 2,
                ErrorKind::Precondition => 3,
                ErrorKind::Budget => 4,
                ErrorKind::Ergodicity => 5,
                ErrorKind::Numerical => 6,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(s) | CliError::Parse(s) | CliError::Precondition(s) => f.write_str(s),
        }
    }
}

impl From<varmdp::Error> for CliError {
    fn from(e: varmdp::Error) -> Self {
        CliError::Core(e)
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("VARMDP_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Parse(format!("VARMDP_THREADS: `{raw}` is not a positive integer"))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Io(format!("VARMDP_THREADS: {e}")))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| commands::run(&cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn grid_spec() {
        assert_eq!(
            parse_grid("-10:20:31").unwrap(),
            Grid {
                lo: -10.0,
                hi: 20.0,
                steps: 31
            }
        );
        assert!(parse_grid("1:0:5").is_err());
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("0:1:1").is_err());
    }

    #[test]
    fn help_names_schema_version() {
        let help = Cli::command().render_long_help().to_string();
        assert!(help.contains("schema version 1"));
    }
}
