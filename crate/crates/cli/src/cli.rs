//! Argument parsing and dispatch.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use shapnet::discrete::DiscreteMetric;
use shapnet::faithfulness::FaithfulnessScope;

use crate::commands::{self, ShapleyMethod, StrategyChoice};
use crate::error::CliError;
use crate::model;
use crate::render::render_table;
use crate::report::{Payload, ReportEnvelope};

#[derive(Debug, Parser)]
#[command(
    name = "shapnet",
    version,
    about = "Exact Shapley-value analysis of predictive games on Bayesian networks"
)]
pub struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = OutFormat::Table, global = true)]
    pub out: OutFormat,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    Json,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Accuracy,
    Information,
}

impl From<MetricArg> for DiscreteMetric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Accuracy => DiscreteMetric::Accuracy,
            MetricArg::Information => DiscreteMetric::Information,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScopeArg {
    /// Pairs involving the target.
    Target,
    /// Every pair of variables.
    AllPairs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Topk,
    Rfe,
    Mb,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Shapley value of every predictor.
    Shapley(ShapleyArgs),
    /// Graph queries: Markov boundary, d-separation, relevance, faithfulness.
    Structure(StructureArgs),
    /// Feature selection compared against the Markov-boundary oracle.
    Select(SelectArgs),
    /// Summand structure, dominance and axiom checks.
    VerifyTheorems(VerifyArgs),
    /// Prevalence simulation over random networks.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct ShapleyArgs {
    pub model: PathBuf,
    /// Enumerate every coalition (the default).
    #[arg(long, conflicts_with = "mc")]
    pub exact: bool,
    /// Estimate from this many random permutations.
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    pub mc: Option<u64>,
    #[arg(long, default_value_t = 0, requires = "mc")]
    pub seed: u64,
    /// Stratify permutations on the positions of Markov-boundary members.
    #[arg(long, requires = "mc")]
    pub stratify_mb: bool,
    /// Game for discrete models.
    #[arg(long, value_enum)]
    pub metric: Option<MetricArg>,
}

#[derive(Debug, Args)]
pub struct StructureArgs {
    pub model: PathBuf,
    #[command(subcommand)]
    pub query: StructureQuery,
}

#[derive(Debug, Subcommand)]
pub enum StructureQuery {
    /// Markov boundary of the target.
    Mb,
    /// Whether X and Y are d-separated given the remaining names.
    Dsep {
        x: String,
        y: String,
        given: Vec<String>,
    },
    /// Strong, weak or irrelevant, per predictor.
    Relevance,
    /// Compare the model's independencies with d-separation.
    VerifyFaithfulness {
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = ScopeArg::Target)]
        scope: ScopeArg,
    },
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    pub model: PathBuf,
    #[arg(long, value_enum)]
    pub strategy: StrategyArg,
    /// Number of variables to keep (top-k and RFE).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: Option<u64>,
    #[arg(long, value_enum)]
    pub metric: Option<MetricArg>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub model: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, value_enum)]
    pub metric: Option<MetricArg>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub config: PathBuf,
}

fn check_tol(tol: f64) -> Result<f64, CliError> {
    if tol.is_finite() && tol >= 0.0 {
        Ok(tol)
    } else {
        Err(CliError::Usage(format!(
            "--tol must be a non-negative number, got {tol}"
        )))
    }
}

/// Runs one command and builds its envelope.
pub fn execute(command: &Command) -> Result<ReportEnvelope, CliError> {
    let metric = |m: Option<MetricArg>| m.map(DiscreteMetric::from);
    let input = |p: &PathBuf| p.display().to_string();
    match command {
        Command::Shapley(a) => {
            let model = model::load(&a.model)?;
            let method = match a.mc {
                Some(n) => ShapleyMethod::MonteCarlo {
                    samples: usize::try_from(n)
                        .map_err(|_| CliError::Usage("--mc is too large".into()))?,
                    seed: a.seed,
                    stratify_mb: a.stratify_mb,
                },
                None => ShapleyMethod::Exact,
            };
            let payload = commands::shapley(&model, metric(a.metric), method)?;
            let seed = a.mc.map(|_| a.seed);
            Ok(ReportEnvelope::new(
                "shapley",
                &input(&a.model),
                seed,
                Payload::Shapley(payload),
            ))
        }
        Command::Structure(a) => {
            let model = model::load(&a.model)?;
            let (name, payload) = match &a.query {
                StructureQuery::Mb => ("structure mb", commands::markov_boundary_query(&model)),
                StructureQuery::Dsep { x, y, given } => {
                    ("structure dsep", commands::dsep_query(&model, x, y, given)?)
                }
                StructureQuery::Relevance => {
                    ("structure relevance", commands::relevance_query(&model))
                }
                StructureQuery::VerifyFaithfulness { tol, scope } => {
                    let scope = match scope {
                        ScopeArg::Target => FaithfulnessScope::Target,
                        ScopeArg::AllPairs => FaithfulnessScope::AllPairs,
                    };
                    (
                        "structure verify-faithfulness",
                        commands::faithfulness_query(&model, check_tol(*tol)?, scope)?,
                    )
                }
            };
            Ok(ReportEnvelope::new(
                name,
                &input(&a.model),
                None,
                Payload::Structure(payload),
            ))
        }
        Command::Select(a) => {
            let model = model::load(&a.model)?;
            let k = a.k.map(|k| usize::try_from(k).unwrap_or(usize::MAX));
            let need_k =
                || k.ok_or_else(|| CliError::Usage("--k is required for this strategy".into()));
            let strategy = match a.strategy {
                StrategyArg::Topk => StrategyChoice::TopK(need_k()?),
                StrategyArg::Rfe => StrategyChoice::Rfe(need_k()?),
                StrategyArg::Mb => StrategyChoice::MarkovBoundary,
            };
            let payload = commands::select(&model, metric(a.metric), strategy)?;
            Ok(ReportEnvelope::new(
                "select",
                &input(&a.model),
                None,
                Payload::Selection(payload),
            ))
        }
        Command::VerifyTheorems(a) => {
            let model = model::load(&a.model)?;
            let payload = commands::verify_theorems(&model, metric(a.metric), check_tol(a.tol)?)?;
            Ok(ReportEnvelope::new(
                "verify-theorems",
                &input(&a.model),
                None,
                Payload::Theorems(payload),
            ))
        }
        Command::Simulate(a) => {
            let config = commands::read_sim_config(&a.config)?;
            let report = commands::simulate(&config)?;
            Ok(ReportEnvelope::new(
                "simulate",
                &input(&a.config),
                Some(config.seed),
                Payload::Prevalence(report),
            ))
        }
    }
}

/// Runs the parsed command line and renders the report.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let env = execute(&cli.command)?;
    match cli.out {
        OutFormat::Json => env.to_json().map(|mut s| {
            s.push('\n');
            s
        }),
        OutFormat::Table => Ok(render_table(&env)),
    }
}
