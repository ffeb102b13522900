//! `qplace`: generate instances, run cyclic-expansion placement, evaluate and
//! render placements.
//!
//! Exit codes: 0 success, 1 validation or legality failure, 2 solver or
//! infrastructure failure.

mod files;
mod place;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qplace_core::expansion::{IndexStrategy, InnerTermination};
use qplace_core::solvers::Backend;

use crate::files::CliError;

#[derive(Parser)]
#[command(name = "qplace", version, about = "Cyclic-expansion FPGA placement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random netlist instance.
    Generate(GenerateArgs),
    /// Place an instance and write placement, convergence log and manifest.
    Place(PlaceArgs),
    /// Report cost, per-type counts and legality of a placement.
    Eval(EvalArgs),
    /// Draw a placement as SVG.
    Render(RenderArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    m: usize,
    #[arg(long, env = "QPLACE_SEED", default_value_t = 0)]
    seed: u64,
    /// `fictional`, `fictional:<side>` or an architecture JSON file.
    #[arg(long, default_value = "fictional")]
    arch: String,
    #[arg(long, default_value_t = 3.0)]
    mean_degree: f64,
    /// Pin both IO blocks to random IO cells.
    #[arg(long)]
    pin_io: bool,
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum SolverArg {
    Exhaustive,
    Sa,
    External,
}

impl From<SolverArg> for Backend {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Exhaustive => Backend::Exhaustive,
            SolverArg::Sa => Backend::SimulatedAnnealing,
            SolverArg::External => Backend::External,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum StrategyArg {
    Random,
    Worst,
}

impl From<StrategyArg> for IndexStrategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Random => IndexStrategy::Random,
            StrategyArg::Worst => IndexStrategy::Worst,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum InnerArg {
    Coverage,
    Fixed,
}

#[derive(Args)]
pub struct PlaceArgs {
    /// Replay a manifest written by an earlier run; other run flags are ignored.
    #[arg(long, conflicts_with = "instance")]
    pub manifest: Option<PathBuf>,
    #[arg(long, required_unless_present = "manifest")]
    pub instance: Option<PathBuf>,
    #[arg(long, default_value = "fictional")]
    pub arch: String,
    #[arg(long, default_value_t = 100)]
    pub k: usize,
    #[arg(long = "ku", default_value_t = 50)]
    pub k_u: usize,
    #[arg(long, default_value_t = 50)]
    pub iters: usize,
    #[arg(long, value_enum, default_value = "sa")]
    pub solver: SolverArg,
    #[arg(long, env = "QPLACE_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "random")]
    pub index_strategy: StrategyArg,
    /// Stop once an outer iteration improves the cost by less than this fraction.
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
    #[arg(long, value_enum, default_value = "coverage")]
    pub inner: InnerArg,
    /// Round cap factor for coverage termination, or the round count for `fixed`.
    #[arg(long)]
    pub inner_rounds: Option<usize>,
    #[arg(long, default_value_t = 100)]
    pub reads: usize,
    #[arg(long, default_value_t = 1000)]
    pub sweeps: usize,
    #[arg(long, requires = "beta_high")]
    pub beta_low: Option<f64>,
    #[arg(long, requires = "beta_low")]
    pub beta_high: Option<f64>,
    /// Shell command for the external backend.
    #[arg(long)]
    pub external_cmd: Option<String>,
    #[arg(long)]
    pub time_limit_ms: Option<u64>,
    /// Start from this placement instead of a random one.
    #[arg(long)]
    pub init: Option<PathBuf>,
    /// Output directory (default: current directory, or the manifest's).
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Per-round events as JSON lines.
    #[arg(long)]
    pub events: Option<PathBuf>,
    /// Write 0 in the `ms` column so logs are byte-reproducible.
    #[arg(long)]
    pub no_timing: bool,
    /// Independent runs with seeds `seed, seed+1, ...`, each in `run-<seed>/`.
    #[arg(long, default_value_t = 1)]
    pub runs: u64,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value = "fictional")]
    arch: String,
    #[arg(long)]
    placement: PathBuf,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long, default_value = "fictional")]
    arch: String,
    /// Netlist for block types and net edges.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long)]
    placement: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Place(a) => place::cmd_place(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Render(a) => cmd_render(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("qplace: {e}");
            e.exit_code()
        }
    }
}

fn cmd_generate(a: GenerateArgs) -> Result<ExitCode, CliError> {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use qplace_core::fpga::{generate_instance_with, CellType, GeneratorConfig};

    let arch = files::load_arch(&a.arch)?;
    let cfg = GeneratorConfig {
        mean_degree: a.mean_degree,
        pin_io: a.pin_io,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let netlist = generate_instance_with(&arch, a.m, &cfg, &mut rng).map_err(CliError::from_core)?;
    let counts: Vec<String> = CellType::ALL
        .iter()
        .map(|&t| format!("{t}={}", netlist.count(t)))
        .collect();
    let summary = format!(
        "blocks {} ({}), nets {}",
        netlist.len(),
        counts.join(" "),
        netlist.nets().len()
    );
    match &a.output {
        Some(path) => {
            files::write_file(path, netlist.to_json_string() + "\n")?;
            println!("{summary}");
        }
        None => {
            println!("{}", netlist.to_json_string());
            eprintln!("{summary}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_eval(a: EvalArgs) -> Result<ExitCode, CliError> {
    let arch = files::load_arch(&a.arch)?;
    let netlist = files::load_netlist(&a.instance)?;
    let placement = files::load_placement(&a.placement)?;
    let report = files::evaluate(&arch, &netlist, &placement)?;
    println!("cost {}", report.cost);
    println!("blocks {}", report.counts);
    if report.violations.is_empty() {
        println!("legal yes");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("legal no");
        for v in &report.violations {
            println!("violation {v}");
        }
        Ok(ExitCode::from(1))
    }
}

fn cmd_render(a: RenderArgs) -> Result<ExitCode, CliError> {
    let arch = files::load_arch(&a.arch)?;
    let netlist = a.instance.as_deref().map(files::load_netlist).transpose()?;
    let placement = match &a.placement {
        Some(p) => files::load_placement(p)?,
        None => Default::default(),
    };
    let svg = render::render_svg(&arch, netlist.as_ref(), &placement)?;
    match &a.output {
        Some(path) => files::write_file(path, svg)?,
        None => print!("{svg}"),
    }
    Ok(ExitCode::SUCCESS)
}

pub(crate) fn inner_termination(kind: InnerArg, rounds: Option<usize>) -> InnerTermination {
    match kind {
        InnerArg::Coverage => InnerTermination::Coverage {
            cap_factor: rounds.unwrap_or(10),
        },
        InnerArg::Fixed => InnerTermination::FixedRounds(rounds.unwrap_or(20)),
    }
}
