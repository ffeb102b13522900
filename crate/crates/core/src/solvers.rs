//! QUBO solver backends.
//!
//! All backends minimize `x^T q x + offset` and report the objective including
//! the offset. [`solve`] additionally scores the all-zero vector, so its result
//! is never worse than `offset`; for cycle-selection QUBOs that means the
//! placement cost never increases.

use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::QuboProblem;

pub const DEFAULT_EXHAUSTIVE_MAX_DIM: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Exhaustive,
    SimulatedAnnealing,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub backend: Backend,
    pub num_reads: usize,
    pub sa_sweeps: usize,
    /// Inverse temperatures at the first and last sweep; derived from the
    /// problem when unset.
    pub sa_beta_range: Option<(f64, f64)>,
    pub seed: u64,
    pub external_cmd: Option<String>,
    pub time_limit_ms: Option<u64>,
    pub exhaustive_max_dim: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            backend: Backend::SimulatedAnnealing,
            num_reads: 100,
            sa_sweeps: 1000,
            sa_beta_range: None,
            seed: 0,
            external_cmd: None,
            time_limit_ms: None,
            exhaustive_max_dim: DEFAULT_EXHAUSTIVE_MAX_DIM,
        }
    }
}

impl SolverConfig {
    pub fn exhaustive() -> Self {
        Self {
            backend: Backend::Exhaustive,
            ..Self::default()
        }
    }

    pub fn simulated_annealing(num_reads: usize, sa_sweeps: usize, seed: u64) -> Self {
        Self {
            backend: Backend::SimulatedAnnealing,
            num_reads,
            sa_sweeps,
            seed,
            ..Self::default()
        }
    }

    pub fn external(cmd: impl Into<String>) -> Self {
        Self {
            backend: Backend::External,
            external_cmd: Some(cmd.into()),
            ..Self::default()
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.num_reads == 0 || self.sa_sweeps == 0 {
            return Err(Error::InvalidConfig(
                "num_reads and sa_sweeps must be positive".into(),
            ));
        }
        if let Some((lo, hi)) = self.sa_beta_range {
            if !(lo > 0.0 && hi > 0.0 && lo.is_finite() && hi.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "beta range must be positive, got ({lo}, {hi})"
                )));
            }
        }
        if self.time_limit_ms == Some(0) {
            return Err(Error::InvalidConfig("time limit must be positive".into()));
        }
        match self.backend {
            Backend::Exhaustive if dim > self.exhaustive_max_dim => Err(Error::ExhaustiveTooLarge {
                dim,
                max: self.exhaustive_max_dim,
            }),
            Backend::External if self.external_cmd.is_none() => Err(Error::InvalidConfig(
                "external backend needs a command".into(),
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub best_x: Vec<bool>,
    /// Includes the problem offset.
    pub best_objective: f64,
    pub reads_used: usize,
    pub wall_time_ms: u64,
}

/// Solution document exchanged with external solvers: `{"x": [0, 1, ...], "objective": f}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionExchange {
    pub x: Vec<u8>,
    pub objective: f64,
}

impl From<&SolveResult> for SolutionExchange {
    fn from(r: &SolveResult) -> Self {
        Self {
            x: r.best_x.iter().map(|&b| u8::from(b)).collect(),
            objective: r.best_objective,
        }
    }
}

fn ties(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Strictly lower objective wins; near-equal objectives go to the
/// lexicographically smaller vector.
fn improves(obj: f64, x: &[bool], best_obj: f64, best_x: &[bool]) -> bool {
    if ties(obj, best_obj) {
        x < best_x
    } else {
        obj < best_obj
    }
}

pub fn solve(problem: &QuboProblem, cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate(problem.dim())?;
    let start = Instant::now();
    let mut result = match cfg.backend {
        Backend::Exhaustive => solve_exhaustive_capped(problem, cfg.exhaustive_max_dim)?,
        Backend::SimulatedAnnealing => solve_sa(problem, cfg)?,
        Backend::External => solve_external(problem, cfg)?,
    };
    let zero = vec![false; problem.dim()];
    if improves(problem.offset(), &zero, result.best_objective, &result.best_x) {
        result.best_x = zero;
        result.best_objective = problem.offset();
    }
    result.wall_time_ms = start.elapsed().as_millis() as u64;
    Ok(result)
}

pub fn solve_exhaustive(problem: &QuboProblem) -> Result<SolveResult> {
    solve_exhaustive_capped(problem, DEFAULT_EXHAUSTIVE_MAX_DIM)
}

/// Exact minimum by Gray-code enumeration: consecutive vectors differ in one
/// bit, so each step costs O(dim) through maintained local fields.
pub fn solve_exhaustive_capped(problem: &QuboProblem, max_dim: usize) -> Result<SolveResult> {
    let dim = problem.dim();
    if dim > max_dim.min(63) {
        return Err(Error::ExhaustiveTooLarge {
            dim,
            max: max_dim.min(63),
        });
    }
    let start = Instant::now();
    // field[i] = sum_{j != i} q_ij x_j
    let mut field = vec![0.0; dim];
    let mut x: u64 = 0;
    let mut energy = problem.offset();
    let (mut best_mask, mut best_energy) = (0u64, energy);

    for step in 1u64..(1u64 << dim) {
        let i = step.trailing_zeros() as usize;
        let bit = 1u64 << i;
        let setting = x & bit == 0;
        let local = problem.get(i, i) + 2.0 * field[i];
        let sign = if setting { 1.0 } else { -1.0 };
        energy += sign * local;
        x ^= bit;
        for (j, (fj, &qij)) in field.iter_mut().zip(problem.row(i)).enumerate() {
            if j != i {
                *fj += sign * qij;
            }
        }
        let better = if ties(energy, best_energy) {
            lex_less_mask(x, best_mask)
        } else {
            energy < best_energy
        };
        if better {
            best_mask = x;
            best_energy = energy;
        }
    }

    let best_x: Vec<bool> = (0..dim).map(|i| best_mask >> i & 1 == 1).collect();
    Ok(SolveResult {
        best_objective: problem.objective(&best_x),
        best_x,
        reads_used: 1,
        wall_time_ms: start.elapsed().as_millis() as u64,
    })
}

/// Lexicographic order on bit vectors where bit 0 is the leading entry.
fn lex_less_mask(a: u64, b: u64) -> bool {
    let diff = a ^ b;
    diff != 0 && a & (diff & diff.wrapping_neg()) == 0
}

/// Couplings of one variable: `(j, q_ij)` for the nonzero off-diagonal entries.
fn sparse_rows(problem: &QuboProblem) -> Vec<Vec<(usize, f64)>> {
    (0..problem.dim())
        .map(|i| {
            problem
                .row(i)
                .iter()
                .enumerate()
                .filter(|&(j, &v)| j != i && v != 0.0)
                .map(|(j, &v)| (j, v))
                .collect()
        })
        .collect()
}

/// `(ln 2 / max |dE|, ln 100 / min |dE|)` over single-flip energy changes from
/// the zero vector (the diagonal). Falls back to coupling magnitudes when the
/// diagonal is empty.
pub fn auto_beta_range(problem: &QuboProblem) -> (f64, f64) {
    let dim = problem.dim();
    let mut mags: Vec<f64> = (0..dim)
        .map(|i| problem.get(i, i).abs())
        .filter(|&v| v > 0.0)
        .collect();
    if mags.is_empty() {
        mags = (0..dim)
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .map(|(i, j)| 2.0 * problem.get(i, j).abs())
            .filter(|&v| v > 0.0)
            .collect();
    }
    if mags.is_empty() {
        return (1.0, 1.0);
    }
    let max = mags.iter().copied().fold(0.0, f64::max);
    let min = mags.iter().copied().fold(f64::INFINITY, f64::min);
    (2f64.ln() / max, 100f64.ln() / min)
}

/// Independent Metropolis annealing runs on a geometric inverse-temperature
/// schedule. Read `r` draws from stream `r` of a generator seeded with
/// `cfg.seed`, so results do not depend on execution order.
pub fn solve_sa(problem: &QuboProblem, cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate(problem.dim())?;
    let start = Instant::now();
    let dim = problem.dim();
    let zero = vec![false; dim];
    if dim == 0 {
        return Ok(SolveResult {
            best_x: zero,
            best_objective: problem.offset(),
            reads_used: 0,
            wall_time_ms: 0,
        });
    }

    let (beta_lo, beta_hi) = cfg.sa_beta_range.unwrap_or_else(|| auto_beta_range(problem));
    let sweeps = cfg.sa_sweeps;
    let betas: Vec<f64> = (0..sweeps)
        .map(|t| {
            if sweeps == 1 {
                beta_hi
            } else {
                beta_lo * (beta_hi / beta_lo).powf(t as f64 / (sweeps - 1) as f64)
            }
        })
        .collect();
    let couplings = sparse_rows(problem);
    let diag: Vec<f64> = (0..dim).map(|i| problem.get(i, i)).collect();

    let mut best_x = zero.clone();
    let mut best_obj = problem.offset();
    let mut order: Vec<usize> = (0..dim).collect();
    let mut field = vec![0.0; dim];
    for read in 0..cfg.num_reads {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(read as u64);
        let mut x: Vec<bool> = (0..dim).map(|_| rng.gen()).collect();
        field.iter_mut().for_each(|f| *f = 0.0);
        for i in (0..dim).filter(|&i| x[i]) {
            for &(j, w) in &couplings[i] {
                field[j] += w;
            }
        }
        let mut energy = problem.objective(&x);
        let mut read_best = (energy, x.clone());

        for &beta in &betas {
            order.shuffle(&mut rng);
            for &i in &order {
                let sign = if x[i] { -1.0 } else { 1.0 };
                let delta = sign * (diag[i] + 2.0 * field[i]);
                if delta > 0.0 && rng.gen::<f64>() >= (-beta * delta).exp() {
                    continue;
                }
                x[i] = !x[i];
                energy += delta;
                for &(j, w) in &couplings[i] {
                    field[j] += sign * w;
                }
            }
            if energy < read_best.0 {
                read_best = (energy, x.clone());
            }
        }

        let obj = problem.objective(&read_best.1);
        if improves(obj, &read_best.1, best_obj, &best_x) {
            best_obj = obj;
            best_x = read_best.1;
        }
    }

    Ok(SolveResult {
        best_x,
        best_objective: best_obj,
        reads_used: cfg.num_reads,
        wall_time_ms: start.elapsed().as_millis() as u64,
    })
}

/// Runs `cfg.external_cmd` through `sh -c`, feeding the QUBO exchange JSON on
/// stdin and reading a [`SolutionExchange`] from stdout. The reported
/// objective is re-evaluated locally.
pub fn solve_external(problem: &QuboProblem, cfg: &SolverConfig) -> Result<SolveResult> {
    let cmd = cfg
        .external_cmd
        .as_deref()
        .ok_or_else(|| Error::InvalidConfig("external backend needs a command".into()))?;
    let start = Instant::now();
    let mut payload = Vec::new();
    problem.write_json(&mut payload)?;

    let mut child = Command::new("sh")
        .arg("-c")
        .arg(cmd)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()?;
    let mut stdin = child.stdin.take().expect("stdin piped");
    let writer = thread::spawn(move || {
        // the child may exit without reading; a broken pipe is not our failure
        let _ = stdin.write_all(&payload);
    });
    let mut stdout = child.stdout.take().expect("stdout piped");
    let mut stderr = child.stderr.take().expect("stderr piped");
    let out_reader = thread::spawn(move || {
        let mut buf = Vec::new();
        stdout.read_to_end(&mut buf).map(|_| buf)
    });
    let err_reader = thread::spawn(move || {
        let mut buf = Vec::new();
        stderr.read_to_end(&mut buf).map(|_| buf)
    });

    let deadline = cfg.time_limit_ms.map(|ms| start + Duration::from_millis(ms));
    let status = loop {
        if let Some(status) = child.try_wait()? {
            break status;
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            let _ = child.kill();
            let _ = child.wait();
            return Err(Error::ExternalTimeout {
                limit_ms: cfg.time_limit_ms.unwrap_or_default(),
            });
        }
        thread::sleep(Duration::from_millis(2));
    };
    let _ = writer.join();
    let stdout = out_reader.join().expect("stdout reader panicked")?;
    let stderr = err_reader.join().expect("stderr reader panicked")?;

    if !status.success() {
        return Err(Error::ExternalFailure {
            status: status.to_string(),
            stderr: String::from_utf8_lossy(&stderr).trim().to_string(),
        });
    }
    let doc: SolutionExchange = serde_json::from_slice(&stdout)
        .map_err(|e| Error::ExternalMalformed(e.to_string()))?;
    if doc.x.len() != problem.dim() {
        return Err(Error::ExternalMalformed(format!(
            "x has {} entries, expected {}",
            doc.x.len(),
            problem.dim()
        )));
    }
    let x = doc
        .x
        .iter()
        .map(|&b| match b {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(Error::ExternalMalformed(format!("x entry {other} is not a bit"))),
        })
        .collect::<Result<Vec<_>>>()?;
    let actual = problem.objective(&x);
    if (doc.objective - actual).abs() > 1e-6 * actual.abs().max(1.0) {
        return Err(Error::ObjectiveMismatch {
            reported: doc.objective,
            actual,
        });
    }
    Ok(SolveResult {
        best_x: x,
        best_objective: actual,
        reads_used: 1,
        wall_time_ms: start.elapsed().as_millis() as u64,
    })
}
