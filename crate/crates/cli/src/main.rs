mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Two-bubble approximate solutions of critical Lotka–Volterra systems.
#[derive(Debug, Parser, Serialize)]
#[command(name = "segbubble", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Serialize)]
pub struct Common {
    /// Space dimension (5 by default, 4 for `pohozaev`; taken from
    /// the domain file when one is given).
    #[arg(long = "N", global = true)]
    pub n_dim: Option<usize>,
    /// Domain description (JSON); the unit ball when omitted.
    #[arg(long, global = true)]
    pub domain: Option<PathBuf>,
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    /// Comma-separated λ values.
    #[arg(long, global = true, value_delimiter = ',')]
    pub lambda_grid: Option<Vec<f64>>,
    /// Monte Carlo sample or walk count.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true, env = "SEGBUBBLE_DEFAULT_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Report directory.
    #[arg(long, global = true, default_value = "segbubble-out")]
    pub out: PathBuf,
    /// Also write SVG convergence plots.
    #[arg(long, global = true)]
    pub plot: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Convolution,
    Expansion,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Structural constants of the bubble.
    Constants,
    /// Robin function at a point by walk-on-spheres.
    Robin {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        x: Vec<f64>,
    },
    /// Critical points of the Robin function.
    Critpoints {
        #[arg(long, default_value_t = 8)]
        multistart: usize,
    },
    /// Solve the reduced balance system.
    ReducedSolve {
        #[arg(long, default_value_t = 8)]
        multistart: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 1.0])]
        mu: Vec<f64>,
        /// Separation margin; on the unit ball δ is about 0.1 for N = 5.
        #[arg(long, default_value_t = 0.05)]
        eta: f64,
        /// Fix the centres instead of searching for critical points.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "xi2")]
        xi1: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "xi1")]
        xi2: Option<Vec<f64>>,
    },
    /// Check an asymptotic lemma on a λ grid.
    Verify {
        /// Lemma name, or `all`.
        #[arg(long)]
        lemma: String,
        #[arg(long, default_value_t = 0)]
        j: usize,
    },
    /// Dual norms of the approximant's error terms on a λ grid.
    ResidualScan {
        /// Full system configuration (JSON); overrides the defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Mode::Convolution)]
        mode: Mode,
        /// Scale β with λ as this fraction of the admissible bound.
        #[arg(long)]
        beta_fraction: Option<f64>,
    },
    /// Local Pohozaev identity for N = 4.
    Pohozaev {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Mode::Convolution)]
        mode: Mode,
        #[arg(long, default_value_t = 1e-3)]
        lambda: f64,
        #[arg(long, default_value_t = 1)]
        component: usize,
        #[arg(long, default_value_t = 1)]
        j: usize,
        #[arg(long)]
        rho: Option<f64>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Constants => "constants",
            Command::Robin { .. } => "robin",
            Command::Critpoints { .. } => "critpoints",
            Command::ReducedSolve { .. } => "reduced-solve",
            Command::Verify { .. } => "verify",
            Command::ResidualScan { .. } => "residual-scan",
            Command::Pohozaev { .. } => "pohozaev",
        }
    }
}

/// Failure classes mapped onto exit codes.
#[derive(Debug)]
pub enum Failure {
    Input(String),
    Numeric(String),
}

impl From<segbubble::Error> for Failure {
    fn from(e: segbubble::Error) -> Self {
        if e.is_input_error() {
            Failure::Input(e.to_string())
        } else {
            Failure::Numeric(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(j) = cli.common.jobs {
        std::env::set_var("SEGBUBBLE_JOBS", j.max(1).to_string());
    }
    match commands::run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
