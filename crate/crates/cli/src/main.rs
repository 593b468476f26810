//! `probclone`: optimal probabilistic cloning and purification from the
//! command line.
//!
//! Exit codes: 0 success, 1 an oracle or Monte Carlo check failed (or the
//! computation itself failed), 2 unknown scenario or bad usage, 3 invalid
//! parameters, 4 output could not be written.

mod commands;
mod format;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use settings::Settings;

#[derive(Debug)]
pub enum CliError {
    UnknownScenario(String),
    Invalid(String),
    Io(String),
    Compute(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Compute(_) => 1,
            CliError::UnknownScenario(_) => 2,
            CliError::Invalid(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::UnknownScenario(s) => write!(
                f,
                "unknown scenario '{s}' (expected one of: {})",
                probclone::scenarios::ScenarioName::ALL.map(|n| n.as_str()).join(", ")
            ),
            CliError::Invalid(s) | CliError::Io(s) | CliError::Compute(s) => f.write_str(s),
        }
    }
}

impl From<probclone::Error> for CliError {
    fn from(e: probclone::Error) -> Self {
        use probclone::Error as E;
        match e {
            E::OutOfRange(_) | E::InvalidEnsemble(_) | E::DimensionMismatch(_) | E::IllPosed(_) => {
                CliError::Invalid(e.to_string())
            }
            _ => CliError::Compute(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "probclone", version, about = "Optimal probabilistic cloning, transposition and purification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario and compare with its reference values.
    Scenario {
        #[command(flatten)]
        common: Common,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
        /// Write the optimal Choi operator as JSON.
        #[arg(long, value_name = "PATH")]
        emit_choi: Option<String>,
    },
    /// Sweep one parameter and write CSV curve data.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Parameter to vary: eta, r, M, N, d or cutoff.
        #[arg(long)]
        param: Option<String>,
        #[arg(long)]
        from: Option<String>,
        #[arg(long)]
        to: Option<String>,
        #[arg(long)]
        steps: Option<String>,
        /// Output CSV path; standard output when omitted.
        #[arg(long)]
        out: Option<String>,
    },
    /// Monte Carlo check of the optimal (or explicit) map.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Number of sampled inputs (default 100000).
        #[arg(long)]
        samples: Option<String>,
        #[arg(long)]
        seed: Option<String>,
        /// Allowed deviation in standard errors (default 4).
        #[arg(long)]
        sigma: Option<String>,
        /// Map to sample: optimal or explicit.
        #[arg(long)]
        map: Option<String>,
    },
    /// Write the quadrature ensemble of a scenario as JSON.
    Ensemble {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<String>,
    },
}

#[derive(Args)]
struct Common {
    /// universal-clone, transposition, phase-covariant, coherent-clone,
    /// depol-purify or ad-purify.
    scenario: String,
    /// Number of output copies.
    #[arg(long = "M")]
    m: Option<String>,
    /// Number of input copies.
    #[arg(long = "N")]
    n: Option<String>,
    /// Local dimension for transposition.
    #[arg(long = "d")]
    d: Option<String>,
    /// Channel parameter.
    #[arg(long)]
    eta: Option<String>,
    /// Coherent amplitude |α|.
    #[arg(long)]
    r: Option<String>,
    /// Fock cutoff of the coherent filter.
    #[arg(long)]
    cutoff: Option<String>,
    /// parallel or perpendicular.
    #[arg(long)]
    encoding: Option<String>,
    /// Relative tolerance for the top eigenvalue cluster (default 1e-8).
    #[arg(long)]
    cluster_tol: Option<String>,
    /// Fidelity oracle tolerance (default 1e-9).
    #[arg(long)]
    tol: Option<String>,
    /// Success-probability oracle tolerance (default 1e-6).
    #[arg(long)]
    p_tol: Option<String>,
    /// Penalty parameter of the gradient SDP path (default 1).
    #[arg(long)]
    pg_step: Option<String>,
    /// Iteration limit of the gradient SDP path (default 20000).
    #[arg(long)]
    pg_max_iter: Option<String>,
    /// Relative duality-gap target of the gradient SDP path (default 1e-12).
    #[arg(long)]
    pg_tol: Option<String>,
    /// Flat key=value file; flags take precedence.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
}

impl Common {
    fn settings(&self, extra: &[(&str, &Option<String>)]) -> Result<Settings, CliError> {
        let mut s = match &self.config {
            Some(p) => Settings::from_config(p)?,
            None => Settings::default(),
        };
        s.overlay(&[
            ("M", &self.m),
            ("N", &self.n),
            ("d", &self.d),
            ("eta", &self.eta),
            ("r", &self.r),
            ("cutoff", &self.cutoff),
            ("encoding", &self.encoding),
            ("cluster_tol", &self.cluster_tol),
            ("tol", &self.tol),
            ("p_tol", &self.p_tol),
            ("pg_step", &self.pg_step),
            ("pg_max_iter", &self.pg_max_iter),
            ("pg_tol", &self.pg_tol),
        ])?;
        s.overlay(extra)?;
        Ok(s)
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Scenario { common, json, emit_choi } => {
            let name = commands::scenario_name(&common.scenario)?;
            let s = common.settings(&[("emit_choi", &emit_choi)])?;
            commands::cmd_scenario(name, &s, json)
        }
        Command::Sweep { common, param, from, to, steps, out } => {
            let name = commands::scenario_name(&common.scenario)?;
            let s = common.settings(&[
                ("param", &param),
                ("from", &from),
                ("to", &to),
                ("steps", &steps),
                ("out", &out),
            ])?;
            commands::cmd_sweep(name, &s)
        }
        Command::Verify { common, samples, seed, sigma, map } => {
            let name = commands::scenario_name(&common.scenario)?;
            let s = common.settings(&[("samples", &samples), ("seed", &seed), ("sigma", &sigma), ("map", &map)])?;
            commands::cmd_verify(name, &s)
        }
        Command::Ensemble { common, out } => {
            let name = commands::scenario_name(&common.scenario)?;
            let s = common.settings(&[("out", &out)])?;
            commands::cmd_ensemble(name, &s)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => 0,
                ErrorKind::InvalidValue | ErrorKind::ValueValidation => 3,
                _ => 2,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
