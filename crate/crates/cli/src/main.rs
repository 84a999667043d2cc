//! `pairwise-ot`: command line front end for the pairwise-ot library.
//!
//! Every subcommand writes a metadata record (tool version, effective seed,
//! all flags and a timestamp) before its results, so a run can be repeated
//! exactly. Exit codes: 0 on success, 2 for invalid input, 64 for an unknown
//! subcommand, 66 for an unreadable input file and 1 for anything else.

mod commands;
mod io;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{Context as _, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use pairwise_ot::apps::{CircleVariant, Scheme};
use pairwise_ot::couplings::{Algo, CouplingOptions};
use pairwise_ot::ratio::BoundKind;
use serde::de::DeserializeOwned;
use serde::{Serialize, Serializer};
use serde_json::Value;

use crate::io::{InvalidInput, Unreadable};
use crate::output::{Format, Metadata, Output};

/// Environment variable that overrides `--seed` when set.
const SEED_ENV: &str = "PAIRWISE_OT_SEED";

const EXIT_INVALID: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_NO_INPUT: u8 = 66;

#[derive(Debug, Parser)]
#[command(name = "pairwise-ot", version, about = "Pairwise multi-marginal couplings on finite spaces")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Serialize)]
struct Global {
    /// Master seed; overridden by PAIRWISE_OT_SEED when that is set.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output encoding.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(untagged)]
enum Command {
    /// Exact optimal transport cost between two distributions.
    Emd(EmdArgs),
    /// Closed-form Poisson coupling disagreement probability.
    Dpc(DpcArgs),
    /// Coupled sample of one distribution.
    Hash(HashArgs),
    /// Pairwise ratio of a coupling on a collection of distributions.
    Ratio(RatioArgs),
    /// Closed-form ratio bounds.
    Bounds(BoundsArgs),
    /// Lower-bound instance generators.
    #[command(subcommand)]
    Instance(InstanceCommand),
    /// Transport cost estimates from coupled sketches.
    Sketch(SketchArgs),
    /// Robust transport plans under a small perturbation.
    RobustDemo(RobustArgs),
    /// Online transport along a task sequence.
    Online(OnlineArgs),
    /// Rounding of a fractional labeling by a coupling.
    RoundLabels(LabelArgs),
    /// Minimax-path ultrametric of a metric space, written as a space file.
    Ultrametric(UltrametricArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Emd(_) => "emd",
            Command::Dpc(_) => "dpc",
            Command::Hash(_) => "hash",
            Command::Ratio(_) => "ratio",
            Command::Bounds(_) => "bounds",
            Command::Instance(InstanceCommand::Cycle(_)) => "instance cycle",
            Command::Instance(InstanceCommand::Mixture(_)) => "instance mixture",
            Command::Sketch(_) => "sketch",
            Command::RobustDemo(_) => "robust-demo",
            Command::Online(_) => "online",
            Command::RoundLabels(_) => "round-labels",
            Command::Ultrametric(_) => "ultrametric",
        }
    }
}

/// A space file plus distribution files; the space may come from the
/// distribution files instead.
#[derive(Debug, Args, Serialize)]
struct SpaceArg {
    /// Space file.
    #[arg(long)]
    space: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct EmdArgs {
    #[command(flatten)]
    #[serde(flatten)]
    space: SpaceArg,
    /// First distribution file.
    #[arg(long)]
    p: PathBuf,
    /// Second distribution file.
    #[arg(long)]
    q: PathBuf,
    /// Also write the optimal plan as JSON to this file.
    #[arg(long)]
    plan: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct DpcArgs {
    #[command(flatten)]
    #[serde(flatten)]
    space: SpaceArg,
    #[arg(long)]
    p: PathBuf,
    #[arg(long)]
    q: PathBuf,
    /// Also estimate the disagreement probability from this many trials.
    #[arg(long, value_name = "TRIALS")]
    empirical: Option<u64>,
}

/// Options of the hash-based couplings.
#[derive(Debug, Args, Serialize)]
struct CouplingArgs {
    /// Coupling construction.
    #[arg(long, default_value = "metric", value_parser = parse_name::<Algo>)]
    algo: Algo,
    /// Geometric rate of the level schedule.
    #[arg(long)]
    eta: Option<f64>,
    /// Use only the levels that can separate two points.
    #[arg(long)]
    reduced: bool,
    /// Kernel quadrature resolution of the torus hash.
    #[arg(long)]
    resolution: Option<usize>,
}

impl CouplingArgs {
    fn options(&self) -> CouplingOptions {
        CouplingOptions {
            eta: self.eta,
            reduced: self.reduced,
            resolution: self.resolution,
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct HashArgs {
    #[command(flatten)]
    #[serde(flatten)]
    space: SpaceArg,
    /// Distribution file.
    #[arg(long)]
    dist: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    coupling: CouplingArgs,
    /// Stream this many hashes under the trial seeds of the master seed.
    #[arg(long, value_name = "N")]
    batch: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
struct RatioArgs {
    #[command(flatten)]
    #[serde(flatten)]
    space: SpaceArg,
    /// Distribution files of the collection.
    #[arg(long, num_args = 2.., required = true)]
    dists: Vec<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    coupling: CouplingArgs,
    /// Monte Carlo trials.
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    /// Estimate the truncated ratio at this level instead.
    #[arg(long, value_name = "ETA")]
    truncate: Option<f64>,
}

/// Norm index: a number in `[1, inf)` or `inf`.
#[derive(Debug, Clone, Copy)]
struct Norm(f64);

impl FromStr for Norm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "inf" | "infinity" => Ok(Norm(f64::INFINITY)),
            _ => s.parse().map(Norm).map_err(|e| format!("expected a number or `inf`: {e}")),
        }
    }
}

impl Serialize for Norm {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            ser.serialize_str("inf")
        } else {
            ser.serialize_f64(self.0)
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct BoundsArgs {
    /// Which bound to evaluate.
    #[arg(long, value_parser = parse_name::<BoundKind>)]
    kind: BoundKind,
    /// Dimension.
    #[arg(long)]
    n: Option<usize>,
    /// Norm index.
    #[arg(long, default_value = "2")]
    p: Norm,
    /// Cost exponent.
    #[arg(long, default_value_t = 1.0)]
    q: f64,
    /// Grid side.
    #[arg(long)]
    s: Option<usize>,
    /// Number of points, or of distributions for finite-collection.
    #[arg(long)]
    size: Option<usize>,
    /// Ratio of largest to smallest distance for finite-set.
    #[arg(long)]
    gamma: Option<f64>,
    /// Truncation level for circle-truncated.
    #[arg(long)]
    eta: Option<f64>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(untagged)]
enum InstanceCommand {
    /// Uniform distributions on a cycle of points, each missing one point.
    Cycle(CycleArgs),
    /// Mixtures of point masses along a walk.
    Mixture(MixtureArgs),
}

#[derive(Debug, Args, Serialize)]
struct CycleArgs {
    /// Space file.
    #[arg(long)]
    space: PathBuf,
    /// Distinct points of the cycle, in order.
    #[arg(long, num_args = 3.., required = true)]
    points: Vec<usize>,
    /// Write the space, one distribution file per member and an instance
    /// file into this directory.
    #[arg(long)]
    emit_dir: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct MixtureArgs {
    /// Space file.
    #[arg(long)]
    space: PathBuf,
    /// Points of the walk, in order.
    #[arg(long, num_args = 2.., required_unless_present = "grid_walk", conflicts_with = "grid_walk")]
    points: Vec<usize>,
    /// Use the boundary walk of a grid or torus space.
    #[arg(long)]
    grid_walk: bool,
    /// Write the space, one distribution file per member and an instance
    /// file into this directory.
    #[arg(long)]
    emit_dir: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct SketchArgs {
    /// Instance file `{"space", "algo"?, "dists"}`.
    #[arg(long)]
    instance: PathBuf,
    /// Coupling; overrides the instance's `algo`.
    #[arg(long, value_parser = parse_name::<Algo>)]
    algo: Option<Algo>,
    /// Sketch length.
    #[arg(long, default_value_t = 1000)]
    trials: u64,
}

#[derive(Debug, Args, Serialize)]
struct RobustArgs {
    /// Instance file `{"space", "p", "q", "q_prime"}`; the built-in five
    /// point example when absent.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Perturbation size of the built-in example.
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value = "metric", value_parser = parse_name::<Algo>)]
    algo: Algo,
    /// Monte Carlo trials for the plans and the ratio.
    #[arg(long, default_value_t = 20_000)]
    trials: u64,
}

#[derive(Debug, Args, Serialize)]
struct OnlineArgs {
    /// Instance file `{"space", "initial", "tasks": [{"b", "dist"?}]}`.
    #[arg(long, required_unless_present = "circle", conflicts_with = "circle")]
    instance: Option<PathBuf>,
    /// Use the adversarial circle instance with 2L points.
    #[arg(long, value_name = "L", requires = "horizon")]
    circle: Option<usize>,
    /// Last task of the circle instance.
    #[arg(long, value_name = "T")]
    horizon: Option<usize>,
    /// Distance of the circle instance.
    #[arg(long, default_value = "chord", value_parser = parse_name::<CircleVariant>)]
    variant: CircleVariant,
    /// Scheme to simulate; both when absent.
    #[arg(long, value_parser = parse_name::<Scheme>)]
    scheme: Option<Scheme>,
    #[arg(long, default_value = "metric", value_parser = parse_name::<Algo>)]
    algo: Algo,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
}

#[derive(Debug, Args, Serialize)]
struct LabelArgs {
    /// Instance file `{"space", "g", "edges", "fractional"}`.
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value = "metric", value_parser = parse_name::<Algo>)]
    algo: Algo,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
}

#[derive(Debug, Args, Serialize)]
struct UltrametricArgs {
    /// Metric space file.
    #[arg(long)]
    space: PathBuf,
}

/// Parses a kebab-case name through the type's serde representation.
fn parse_name<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(Value::String(s.to_owned())).map_err(|_| format!("unknown value `{s}`"))
}

/// Settings shared by every command.
pub struct Session {
    pub seed: u64,
    pub format: Format,
    pub out: Option<PathBuf>,
    meta: Metadata,
}

impl Session {
    /// Starts the output table with `columns`.
    pub fn table(&self, columns: &[&str]) -> Result<Output> {
        Output::begin(self.out.as_deref(), self.format, &self.meta, columns)
    }

    pub fn metadata(&self) -> &Metadata {
        &self.meta
    }
}

fn effective_seed(flag: u64) -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|e| io::invalid(SEED_ENV, format!("`{v}` is not a 64-bit unsigned integer: {e}"))),
        Err(std::env::VarError::NotPresent) => Ok(flag),
        Err(e) => Err(io::invalid(SEED_ENV, e.to_string())),
    }
}

fn run(cli: Cli) -> Result<()> {
    let seed = effective_seed(cli.global.seed)?;
    if let Some(threads) = cli.global.threads {
        if threads == 0 {
            return Err(io::invalid("threads", "must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("cannot start the worker pool")?;
    }
    let mut flags = serde_json::to_value(&cli.command)?;
    if let Value::Object(map) = &mut flags {
        map.insert("threads".into(), serde_json::to_value(cli.global.threads)?);
        map.insert("format".into(), serde_json::to_value(cli.global.format)?);
        map.insert("out".into(), serde_json::to_value(&cli.global.out)?);
    }
    let ctx = Session {
        seed,
        format: cli.global.format,
        out: cli.global.out,
        meta: Metadata::new(cli.command.name(), seed, flags),
    };
    match &cli.command {
        Command::Emd(a) => commands::transport::emd(&ctx, a),
        Command::Dpc(a) => commands::transport::dpc(&ctx, a),
        Command::Hash(a) => commands::hash::hash(&ctx, a),
        Command::Ratio(a) => commands::ratio::ratio(&ctx, a),
        Command::Bounds(a) => commands::ratio::bounds(&ctx, a),
        Command::Instance(InstanceCommand::Cycle(a)) => commands::instance::cycle(&ctx, a),
        Command::Instance(InstanceCommand::Mixture(a)) => commands::instance::mixture(&ctx, a),
        Command::Sketch(a) => commands::apps::sketch(&ctx, a),
        Command::RobustDemo(a) => commands::apps::robust(&ctx, a),
        Command::Online(a) => commands::apps::online(&ctx, a),
        Command::RoundLabels(a) => commands::apps::round_labels(&ctx, a),
        Command::Ultrametric(a) => commands::transport::ultrametric(&ctx, a),
    }
}

/// Exit code for a failed run, from the first recognized error in the chain.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Unreadable>() {
            return EXIT_NO_INPUT;
        }
        if cause.is::<InvalidInput>()
            || cause.is::<pairwise_ot::Error>()
            || cause.is::<serde_json::Error>()
        {
            return EXIT_INVALID;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                ErrorKind::InvalidSubcommand => EXIT_USAGE,
                _ => EXIT_INVALID,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
