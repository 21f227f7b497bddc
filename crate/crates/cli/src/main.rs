//! `ecapm` command-line front end.
//!
//! Every command writes `<out>/<command>.json` (plus data files) and prints a
//! JSON document on stdout. Failures print `{"error": {...}}` on stderr and
//! exit with a code that identifies the failure class.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ecapm_core::synthetic::FitnessDistribution;
use ecapm_core::{Error, ModelKind};

#[derive(Parser, Debug)]
#[command(
    name = "ecapm",
    version,
    about = "Reconstruct weighted bipartite holdings networks from strengths and link counts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a synthetic ground truth; writes truth.csv and marginals.csv.
    Generate(GenerateArgs),
    /// Solve for the ECAPM density parameter z.
    Calibrate(CalibrateArgs),
    /// Per-node (and optionally per-pair) expectations of one model, as TSV.
    Reconstruct(ReconstructArgs),
    /// Draw networks from a model; one edge list per draw.
    Sample(SampleArgs),
    /// Topological, statistical and financial indicators against a truth.
    Evaluate(EvaluateArgs),
    /// Turn an evaluate report into plot-ready TSV tables.
    Report(ReportArgs),
}

#[derive(Args, Debug, Serialize)]
struct OutDir {
    /// Output directory.
    #[arg(long, env = "ECAPM_OUT_DIR", default_value = ".")]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ModelArg {
    Ecapm,
    Mecapm,
    Capm,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Ecapm => ModelKind::Ecapm,
            ModelArg::Mecapm => ModelKind::Mecapm,
            ModelArg::Capm => ModelKind::Capm,
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct GenerateArgs {
    /// Number of holders N.
    #[arg(long)]
    holders: usize,
    /// Number of issuers M.
    #[arg(long)]
    issuers: usize,
    /// Target link density; L = round(density·N·M).
    #[arg(long)]
    density: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// pareto:EXPONENT:MIN, lognormal:LOCATION:SCALE or uniform:LO:HI.
    #[arg(long, default_value = "pareto:1.5:1e6", value_parser = parse_fitness)]
    #[serde(serialize_with = "output::ser_fitness")]
    holder_fitness: FitnessDistribution,
    #[arg(long, default_value = "pareto:1.5:1e6", value_parser = parse_fitness)]
    #[serde(serialize_with = "output::ser_fitness")]
    issuer_fitness: FitnessDistribution,
    /// Log-normal multiplicative weight noise (σ); 0 keeps the truth well specified.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Absolute tolerance on ⟨L⟩ − L (default 1e-10·max(1, L)).
    #[arg(long)]
    tolerance: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    out: OutDir,
}

#[derive(Args, Debug, Serialize)]
struct CalibrateArgs {
    #[arg(long)]
    marginals: PathBuf,
    /// Link count to calibrate to instead of the one in the marginals file.
    #[arg(long)]
    links: Option<f64>,
    /// Calibrate to density·N·M instead of the file's link count.
    #[arg(long, conflicts_with = "links")]
    density: Option<f64>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    out: OutDir,
}

#[derive(Args, Debug, Serialize)]
struct ReconstructArgs {
    #[arg(long)]
    marginals: PathBuf,
    #[arg(long, value_enum, default_value = "ecapm")]
    model: ModelArg,
    /// Also stream one row per pair with a positive link probability.
    #[arg(long)]
    pairs: bool,
    #[arg(long)]
    tolerance: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    out: OutDir,
}

#[derive(Args, Debug, Serialize)]
struct SampleArgs {
    #[arg(long)]
    marginals: PathBuf,
    #[arg(long, value_enum, default_value = "ecapm")]
    model: ModelArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    draws: usize,
    #[arg(long)]
    tolerance: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    out: OutDir,
}

#[derive(Args, Debug, Serialize)]
struct EvaluateArgs {
    /// Observed network (edge list).
    #[arg(long)]
    truth: PathBuf,
    /// Marginals to reconstruct from; defaults to those of the truth.
    #[arg(long)]
    marginals: Option<PathBuf>,
    /// A concrete reconstructed network to score against the truth.
    #[arg(long)]
    candidate: Option<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "ecapm,mecapm")]
    model: Vec<ModelArg>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Monte Carlo draws per model for the sampled confusion matrix.
    #[arg(long, default_value_t = 0)]
    draws: usize,
    #[arg(long)]
    tolerance: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    out: OutDir,
}

#[derive(Args, Debug, Serialize)]
struct ReportArgs {
    /// An evaluate.json file.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    out: OutDir,
}

fn parse_fitness(s: &str) -> Result<FitnessDistribution, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |k: usize| -> Result<f64, String> {
        parts
            .get(k)
            .ok_or_else(|| format!("'{s}': expected KIND:A:B"))?
            .parse::<f64>()
            .map_err(|e| format!("'{s}': {e}"))
    };
    if parts.len() != 3 {
        return Err(format!("'{s}': expected KIND:A:B"));
    }
    let (a, b) = (num(1)?, num(2)?);
    match parts[0] {
        "pareto" => Ok(FitnessDistribution::Pareto {
            exponent: a,
            minimum: b,
        }),
        "lognormal" => Ok(FitnessDistribution::LogNormal { location: a, scale: b }),
        "uniform" => Ok(FitnessDistribution::Uniform { lo: a, hi: b }),
        k => Err(format!("unknown fitness distribution '{k}'")),
    }
}

/// Failure classes and their exit codes.
#[derive(Debug)]
pub struct Failure {
    kind: &'static str,
    code: u8,
    message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            kind: "usage",
            code: 2,
            message: message.into(),
        }
    }

    pub fn input(message: impl Into<String>) -> Self {
        Self {
            kind: "input",
            code: 4,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (kind, code) = match &e {
            Error::Io { .. } => ("io", 3),
            Error::DegenerateLinkTarget { .. } | Error::InfeasibleLinkTarget { .. } | Error::SaturatedNode { .. } => {
                ("infeasible", 5)
            }
            Error::NoConvergence { .. } => ("convergence", 6),
            _ => ("input", 4),
        };
        Self {
            kind,
            code,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(Failure::usage(e.to_string().trim_end())),
    };
    let result = match &cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Calibrate(a) => commands::calibrate(a),
        Command::Reconstruct(a) => commands::reconstruct(a),
        Command::Sample(a) => commands::sample(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Report(a) => commands::report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => fail(f),
    }
}

fn fail(f: Failure) -> ExitCode {
    let body = serde_json::json!({
        "error": { "kind": f.kind, "code": f.code, "message": f.message }
    });
    eprintln!("{body}");
    ExitCode::from(f.code)
}
