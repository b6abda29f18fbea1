mod commands;
mod report;

use cartan_forge::connection::ConnectionKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "cartan-forge", version, about = "Riemann-Cartan geometry on concrete spacetimes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Metric, connections, curvature and torsion at a point.
    Describe(DescribeArgs),
    /// Integrate an autoparallel and write its trajectory.
    Autoparallel(AutoparallelArgs),
    /// Build a normal chart at a point and check its defining conditions.
    NormalChart(NormalChartArgs),
    /// Kinematic decomposition of a reference frame at points.
    Decompose(DecomposeArgs),
    /// Test a reference frame against an inertial-frame predicate.
    Classify(ClassifyArgs),
    /// Describe every catalog entry at its reference point.
    SelfTest,
}

#[derive(Args, Clone)]
pub struct Source {
    /// Built-in spacetime.
    #[arg(long, conflicts_with = "file", required_unless_present = "file")]
    pub catalog: Option<String>,
    /// Spacetime document.
    #[arg(long)]
    pub file: Option<std::path::PathBuf>,
    /// Parameter override `name=value` (repeatable).
    #[arg(long = "param", value_name = "K=V")]
    pub params: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Connection {
    LeviCivita,
    RiemannCartan,
    Teleparallel,
}

impl Connection {
    pub fn kind(self) -> ConnectionKind {
        match self {
            Connection::LeviCivita => ConnectionKind::LeviCivita,
            Connection::RiemannCartan => ConnectionKind::RiemannCartan,
            Connection::Teleparallel => ConnectionKind::Teleparallel,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args)]
pub struct DescribeArgs {
    #[command(flatten)]
    pub source: Source,
    /// Comma-separated coordinates; entries may be constant expressions.
    #[arg(long, allow_hyphen_values = true)]
    pub point: String,
}

#[derive(Args)]
pub struct AutoparallelArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, value_enum, default_value = "levi-civita")]
    pub connection: Connection,
    /// Start point.
    #[arg(long, allow_hyphen_values = true)]
    pub point: String,
    /// Start velocity.
    #[arg(long, allow_hyphen_values = true)]
    pub velocity: String,
    #[arg(long)]
    pub tau_end: f64,
    /// Fixed RK4 step; without it the step adapts by halving.
    #[arg(long)]
    pub step: Option<f64>,
    /// Per-step error bound for the adaptive integrator.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Trajectory CSV path; the JSON report then goes to stdout.
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Parallel transport an orthonormal frame and add its columns.
    #[arg(long)]
    pub frame: bool,
}

#[derive(Args)]
pub struct NormalChartArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, value_enum, default_value = "levi-civita")]
    pub connection: Connection,
    /// Base point.
    #[arg(long, allow_hyphen_values = true)]
    pub point: String,
    #[arg(long, default_value_t = 0.1)]
    pub patch_radius: f64,
    /// Finite-difference step for the Christoffel derivative check.
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
}

#[derive(Args)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub source: Source,
    /// Reference field components, comma separated; defaults to the
    /// document's frame vector e_0.
    #[arg(long, allow_hyphen_values = true)]
    pub z: Option<String>,
    /// Divide Z by its norm instead of requiring it to be unit.
    #[arg(long)]
    pub normalize: bool,
    /// Sample point (repeatable).
    #[arg(long = "point", allow_hyphen_values = true, required = true)]
    pub points: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum PredicateArg {
    Irf,
    Pirf,
    Nacs,
    Lirf,
    LirfRc,
    Antisymmetry,
}

#[derive(Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, value_enum)]
    pub predicate: PredicateArg,
    /// Connection for irf and pirf.
    #[arg(long, value_enum, default_value = "levi-civita")]
    pub connection: Connection,
    #[arg(long, allow_hyphen_values = true)]
    pub z: Option<String>,
    #[arg(long)]
    pub normalize: bool,
    /// Sample points, or the start point for lirf and lirf-rc.
    #[arg(long = "point", allow_hyphen_values = true, required = true)]
    pub points: Vec<String>,
    /// Start velocity for lirf and lirf-rc.
    #[arg(long, allow_hyphen_values = true)]
    pub velocity: Option<String>,
    #[arg(long)]
    pub tau_end: Option<f64>,
    /// Sample spacing along the curve for lirf and lirf-rc.
    #[arg(long, default_value_t = 0.25)]
    pub step: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 0.1)]
    pub patch_radius: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{err}");
                return ExitCode::SUCCESS;
            }
            report::emit_error(&report::CliError::Usage(err.to_string()));
            return ExitCode::from(2);
        }
    };
    let outcome = match cli.command {
        Command::Describe(a) => commands::describe(&a),
        Command::Autoparallel(a) => commands::autoparallel(&a),
        Command::NormalChart(a) => commands::normal_chart(&a),
        Command::Decompose(a) => commands::decompose(&a),
        Command::Classify(a) => commands::classify(&a),
        Command::SelfTest => commands::self_test(),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            report::emit_error(&err);
            ExitCode::from(2)
        }
    }
}
