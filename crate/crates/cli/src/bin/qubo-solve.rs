//! Reads a QUBO exchange document on stdin, solves it in-process and prints
//! `{"x": [...], "objective": f}`. Useful as a reference command for the
//! external backend.

use std::io::{self, Write};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use qplace_core::qubo::QuboProblem;
use qplace_core::solvers::{solve, SolutionExchange, SolverConfig};

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Exhaustive,
    Sa,
}

#[derive(Parser)]
#[command(version, about = "Solve a QUBO exchange document from stdin")]
struct Args {
    #[arg(long, value_enum, default_value = "sa")]
    backend: Method,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    reads: usize,
    #[arg(long, default_value_t = 1000)]
    sweeps: usize,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let problem = match QuboProblem::read_json(io::stdin().lock()) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("qubo-solve: {e}");
            return ExitCode::from(1);
        }
    };
    let cfg = match args.backend {
        Method::Exhaustive => SolverConfig::exhaustive(),
        Method::Sa => SolverConfig::simulated_annealing(args.reads, args.sweeps, args.seed),
    };
    match solve(&problem, &cfg) {
        Ok(result) => {
            let doc = SolutionExchange::from(&result);
            let mut out = io::stdout().lock();
            serde_json::to_writer(&mut out, &doc).expect("solution serializes");
            let _ = writeln!(out);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("qubo-solve: {e}");
            ExitCode::from(2)
        }
    }
}
