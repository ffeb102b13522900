use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use qplace_core::expansion::{run_with_events, ExpansionConfig, ExpansionEvent, IterationRecord};
use qplace_core::fpga::{build_distance_matrix, build_flow_matrix, TypeLegality};
use qplace_core::solvers::SolverConfig;
use serde::{Deserialize, Serialize};

use crate::files::{self, CliError};
use crate::PlaceArgs;

/// Everything needed to repeat a placement run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub instance: PathBuf,
    pub arch: String,
    pub init: Option<PathBuf>,
    pub out: PathBuf,
    pub events: Option<PathBuf>,
    pub no_timing: bool,
    pub config: ExpansionConfig,
}

struct RunSummary {
    seed: u64,
    out: PathBuf,
    initial: f64,
    last: f64,
}

pub fn cmd_place(a: PlaceArgs) -> Result<ExitCode, CliError> {
    let manifests = match &a.manifest {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            let mut m: RunManifest = serde_json::from_str(&text)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            if let Some(out) = &a.out {
                m.out = out.clone();
            }
            vec![m]
        }
        None => manifests_from_args(&a)?,
    };

    let summaries = run_all(manifests, a.jobs.max(1))?;
    for s in &summaries {
        println!(
            "seed {}: initial cost {}, final cost {} -> {}",
            s.seed,
            s.initial,
            s.last,
            s.out.display()
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn manifests_from_args(a: &PlaceArgs) -> Result<Vec<RunManifest>, CliError> {
    let instance = a.instance.clone().expect("clap requires instance without manifest");
    if a.runs == 0 {
        return Err(CliError::Validation("--runs must be positive".into()));
    }
    let solver = SolverConfig {
        backend: a.solver.into(),
        num_reads: a.reads,
        sa_sweeps: a.sweeps,
        sa_beta_range: a.beta_low.zip(a.beta_high),
        seed: 0,
        external_cmd: a.external_cmd.clone(),
        time_limit_ms: a.time_limit_ms,
        ..SolverConfig::default()
    };
    let base_out = a.out.clone().unwrap_or_else(|| PathBuf::from("."));
    Ok((0..a.runs)
        .map(|r| {
            let seed = a.seed.wrapping_add(r);
            let mut config = ExpansionConfig::new(a.k, a.k_u, solver.clone());
            config.index_strategy = a.index_strategy.into();
            config.max_outer_iters = a.iters;
            config.rel_improvement_eps = a.eps;
            config.inner_termination = crate::inner_termination(a.inner, a.inner_rounds);
            config.seed = seed;
            let (out, events) = if a.runs == 1 {
                (base_out.clone(), a.events.clone())
            } else {
                let dir = base_out.join(format!("run-{seed}"));
                let events = a
                    .events
                    .as_ref()
                    .map(|e| dir.join(e.file_name().unwrap_or("events.jsonl".as_ref())));
                (dir, events)
            };
            RunManifest {
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                instance: instance.clone(),
                arch: a.arch.clone(),
                init: a.init.clone(),
                out,
                events,
                no_timing: a.no_timing,
                config,
            }
        })
        .collect())
}

fn run_all(manifests: Vec<RunManifest>, jobs: usize) -> Result<Vec<RunSummary>, CliError> {
    if jobs == 1 || manifests.len() == 1 {
        return manifests.iter().map(run_one).collect();
    }
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<RunSummary, CliError>>>> =
        Mutex::new((0..manifests.len()).map(|_| None).collect());
    thread::scope(|scope| {
        for _ in 0..jobs.min(manifests.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(m) = manifests.get(i) else { break };
                let r = run_one(m);
                results.lock().expect("no poisoned runs")[i] = Some(r);
            });
        }
    });
    results
        .into_inner()
        .expect("no poisoned runs")
        .into_iter()
        .map(|r| r.expect("every run finished"))
        .collect()
}

fn run_one(m: &RunManifest) -> Result<RunSummary, CliError> {
    let arch = files::load_arch(&m.arch)?;
    let netlist = files::load_netlist(&m.instance)?;
    let legal = TypeLegality::new(&netlist, &arch).map_err(CliError::from_core)?;
    legal.check_capacity().map_err(CliError::from_core)?;
    let f = build_flow_matrix(&netlist);
    let d = build_distance_matrix(&arch);
    let init = match &m.init {
        Some(path) => Some(files::to_sub_permutation(
            &netlist,
            &arch,
            &files::load_placement(path)?,
        )?),
        None => None,
    };
    let mut config = m.config.clone();
    config.fixed = legal.pinned();

    let mut events = match &m.events {
        Some(path) => Some(BufWriter::new(create(path)?)),
        None => None,
    };
    let mut event_error = None;
    let run = run_with_events(&f, &d, &legal, init, &config, |ev: &ExpansionEvent| {
        if let Some(w) = events.as_mut() {
            let mut line = serde_json::to_string(ev).expect("events serialize");
            line.push('\n');
            if let Err(e) = w.write_all(line.as_bytes()) {
                event_error.get_or_insert(e);
            }
        }
    })
    .map_err(CliError::from_core)?;
    if let Some(mut w) = events {
        if let Some(e) = event_error.or_else(|| w.flush().err()) {
            return Err(CliError::Infra(format!("events: {e}")));
        }
    }

    let placement = files::to_placement(&netlist, &arch, &run.placement);
    files::write_file(&m.out.join("placement.json"), files::placement_json(&placement))?;
    files::write_file(&m.out.join("convergence.csv"), convergence_csv(&run.records, m.no_timing))?;
    let manifest = serde_json::to_string_pretty(m).expect("manifest serializes") + "\n";
    files::write_file(&m.out.join("manifest.json"), manifest)?;

    Ok(RunSummary {
        seed: m.config.seed,
        out: m.out.clone(),
        initial: run.initial_cost(),
        last: run.final_cost(),
    })
}

fn create(path: &Path) -> Result<File, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Infra(format!("{}: {e}", dir.display())))?;
    }
    File::create(path).map_err(|e| CliError::Infra(format!("{}: {e}", path.display())))
}

pub fn convergence_csv(records: &[IterationRecord], no_timing: bool) -> String {
    let mut s = String::from("iter,cost,inner_rounds,qubo_dim,ms\n");
    for r in records {
        let ms = if no_timing { 0 } else { r.wall_time_ms };
        let _ = writeln!(s, "{},{},{},{},{}", r.outer_iter, r.qap_cost, r.inner_rounds, r.qubo_dim, ms);
    }
    s
}
