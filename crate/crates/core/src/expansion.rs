//! Cyclic expansion: the outer/inner optimization loop.
//!
//! Each outer iteration picks `k` facilities `I` and `k_u` free locations `J`.
//! The locations `I_pi` together with `J` then stay fixed while inner rounds
//! repeatedly sample a disjoint legal cycle set over them, solve the
//! cycle-selection QUBO and apply the chosen cycles. Because every solver
//! scores the empty selection, the cost never increases.

use std::time::Instant;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cycles::{
    apply_selection_in_place, cycle_count, sample_cycle_set, CycleSelection, TwoCycleSet,
    DEFAULT_MAX_RESAMPLE,
};
use crate::error::{Error, Result};
use crate::qap::{
    is_legal_placement, per_facility_cost, qap_cost, DistanceMatrix, FlowMatrix, LegalityOracle,
    SubPermutation,
};
use crate::qubo::{build_subproblem_matrix, AlphaQuboBuilder, SubProblemIndex};
use crate::solvers::{solve, SolverConfig};

/// Placement attempts made by [`init_random`].
pub const INIT_ATTEMPTS: usize = 100;

/// Weight given to free locations at distance zero from every bound one.
pub const ZERO_DISTANCE_WEIGHT: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexStrategy {
    /// Uniform k-subset.
    Random,
    /// The k facilities with the largest cost rows.
    Worst,
}

/// When an inner loop stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerTermination {
    /// Stop once every location pair of the sub-problem appeared in some
    /// sampled cycle set, or after `cap_factor * ceil((k + k_u) / s)` rounds.
    Coverage { cap_factor: usize },
    /// Always run this many rounds.
    FixedRounds(usize),
}

impl Default for InnerTermination {
    fn default() -> Self {
        Self::Coverage { cap_factor: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionConfig {
    pub k: usize,
    pub k_u: usize,
    pub index_strategy: IndexStrategy,
    pub max_outer_iters: usize,
    /// Stop when an outer iteration improves the cost by less than this
    /// fraction; zero runs all iterations.
    pub rel_improvement_eps: f64,
    pub solver: SolverConfig,
    pub seed: u64,
    pub inner_termination: InnerTermination,
    pub max_resample: usize,
    /// Fresh `(I, J)` draws tried when no full legal cycle set exists.
    pub max_redraws: usize,
    /// Facilities that never move.
    pub fixed: Vec<usize>,
    /// Build the restricted cost matrix each outer iteration and check it
    /// against the current cost, for sub-problems up to this many variables.
    pub verify_subproblem_max_dim: usize,
}

impl ExpansionConfig {
    pub fn new(k: usize, k_u: usize, solver: SolverConfig) -> Self {
        Self {
            k,
            k_u,
            index_strategy: IndexStrategy::Random,
            max_outer_iters: 50,
            rel_improvement_eps: 0.0,
            solver,
            seed: 0,
            inner_termination: InnerTermination::default(),
            max_resample: DEFAULT_MAX_RESAMPLE,
            max_redraws: 10,
            fixed: Vec::new(),
            verify_subproblem_max_dim: 0,
        }
    }

    pub fn validate(&self, m: usize, n: usize) -> Result<()> {
        if self.k == 0 || self.k > m {
            return Err(Error::InvalidConfig(format!(
                "k must lie in 1..={m}, got {}",
                self.k
            )));
        }
        if self.k_u > self.k || self.k_u > n - m {
            return Err(Error::InvalidConfig(format!(
                "k_u must not exceed min(k, n - m) = {}, got {}",
                self.k.min(n - m),
                self.k_u
            )));
        }
        if self.max_outer_iters == 0 {
            return Err(Error::InvalidConfig("max_outer_iters must be positive".into()));
        }
        if !(self.rel_improvement_eps >= 0.0) {
            return Err(Error::InvalidConfig("rel_improvement_eps must be >= 0".into()));
        }
        match self.inner_termination {
            InnerTermination::Coverage { cap_factor: 0 } | InnerTermination::FixedRounds(0) => {
                return Err(Error::InvalidConfig("inner round limit must be positive".into()))
            }
            _ => {}
        }
        if let Some(&f) = self.fixed.iter().find(|&&f| f >= m) {
            return Err(Error::InvalidConfig(format!("fixed facility {f} out of range")));
        }
        Ok(())
    }
}

/// Cost after one outer iteration; record 0 holds the starting placement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub outer_iter: usize,
    pub qap_cost: f64,
    pub inner_rounds: usize,
    pub qubo_dim: usize,
    pub wall_time_ms: u64,
    pub cap_hit: bool,
}

/// Progress notifications from [`run_with_events`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum ExpansionEvent {
    Round {
        outer_iter: usize,
        round: usize,
        cycles: usize,
        applied: usize,
        qap_cost: f64,
    },
    Iteration(IterationRecord),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionRun {
    pub placement: SubPermutation,
    pub records: Vec<IterationRecord>,
}

impl ExpansionRun {
    pub fn initial_cost(&self) -> f64 {
        self.records.first().map_or(0.0, |r| r.qap_cost)
    }

    pub fn final_cost(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.qap_cost)
    }
}

/// Legal random placement. Facilities are placed most-constrained first
/// (random order among equals), each on a uniformly chosen free legal
/// location.
pub fn init_random<R: Rng + ?Sized>(
    m: usize,
    n: usize,
    legal: &impl LegalityOracle,
    rng: &mut R,
) -> Result<SubPermutation> {
    if m > n {
        return Err(Error::TooManyFacilities {
            facilities: m,
            locations: n,
        });
    }
    let options: Vec<Vec<usize>> = (0..m)
        .map(|f| (0..n).filter(|&l| legal.is_legal(f, l)).collect())
        .collect();
    if options.iter().any(Vec::is_empty) {
        return Err(Error::InfeasibleInit { attempts: 0 });
    }
    for _ in 0..INIT_ATTEMPTS {
        let mut order: Vec<usize> = (0..m).collect();
        order.shuffle(rng);
        order.sort_by_key(|&f| options[f].len());
        let mut taken = vec![false; n];
        let mut assign = vec![usize::MAX; m];
        let mut ok = true;
        for f in order {
            let free: Vec<usize> = options[f].iter().copied().filter(|&l| !taken[l]).collect();
            match free.choose(rng) {
                Some(&l) => {
                    taken[l] = true;
                    assign[f] = l;
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return SubPermutation::new(assign, n);
        }
    }
    Err(Error::InfeasibleInit {
        attempts: INIT_ATTEMPTS,
    })
}

/// Picks `k` facilities out of all of them; see [`select_indices_among`].
pub fn select_indices<R: Rng + ?Sized>(
    f: &FlowMatrix,
    d: &DistanceMatrix,
    p: &SubPermutation,
    strategy: IndexStrategy,
    k: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let all: Vec<usize> = (0..p.m()).collect();
    select_indices_among(f, d, p, strategy, k, &all, rng)
}

/// Picks `k` of the `eligible` facilities, returned in ascending order.
/// `Worst` takes the largest per-facility costs, lower index first on ties.
pub fn select_indices_among<R: Rng + ?Sized>(
    f: &FlowMatrix,
    d: &DistanceMatrix,
    p: &SubPermutation,
    strategy: IndexStrategy,
    k: usize,
    eligible: &[usize],
    rng: &mut R,
) -> Result<Vec<usize>> {
    if k > eligible.len() {
        return Err(Error::InvalidConfig(format!(
            "cannot select {k} of {} facilities",
            eligible.len()
        )));
    }
    let mut chosen: Vec<usize> = match strategy {
        IndexStrategy::Random => index::sample(rng, eligible.len(), k)
            .into_iter()
            .map(|i| eligible[i])
            .collect(),
        IndexStrategy::Worst => {
            let costs = per_facility_cost(f, d, p)?;
            let mut ranked = eligible.to_vec();
            ranked.sort_by(|&a, &b| costs[b].total_cmp(&costs[a]).then(a.cmp(&b)));
            ranked.truncate(k);
            ranked
        }
    };
    chosen.sort_unstable();
    Ok(chosen)
}

/// Draws `k_u` free locations without replacement; see [`select_unbound_among`].
pub fn select_unbound<R: Rng + ?Sized>(
    p: &SubPermutation,
    d: &DistanceMatrix,
    k_u: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    select_unbound_among(p, d, &p.unbound_locations(), k_u, rng)
}

/// Draws `k_u` of the free `candidates`, each draw with probability
/// proportional to the distance from the candidate to its nearest bound
/// location.
pub fn select_unbound_among<R: Rng + ?Sized>(
    p: &SubPermutation,
    d: &DistanceMatrix,
    candidates: &[usize],
    k_u: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if k_u > candidates.len() {
        return Err(Error::InvalidConfig(format!(
            "cannot draw {k_u} of {} unbound locations",
            candidates.len()
        )));
    }
    if let Some(&l) = candidates.iter().find(|&&l| l >= p.n() || p.is_bound(l)) {
        return Err(Error::InvalidIndex(format!("location {l} is not a free location")));
    }
    let bound = p.assignment();
    let mut pool: Vec<(usize, f64)> = candidates
        .iter()
        .map(|&l| {
            let row = d.row(l);
            let nearest = bound.iter().map(|&b| row[b]).fold(f64::INFINITY, f64::min);
            let w = if nearest.is_finite() && nearest > 0.0 {
                nearest
            } else {
                ZERO_DISTANCE_WEIGHT
            };
            (l, w)
        })
        .collect();
    let mut out = Vec::with_capacity(k_u);
    for _ in 0..k_u {
        let total: f64 = pool.iter().map(|&(_, w)| w).sum();
        let mut u = rng.gen::<f64>() * total;
        let mut pick = pool.len() - 1;
        for (i, &(_, w)) in pool.iter().enumerate() {
            if u < w {
                pick = i;
                break;
            }
            u -= w;
        }
        out.push(pool.remove(pick).0);
    }
    Ok(out)
}

/// Which location pairs of the current sub-problem appeared in a sampled
/// cycle set, and how many rounds ran.
#[derive(Debug, Clone)]
pub struct InnerState {
    locations: Vec<usize>,
    covered: Vec<bool>,
    uncovered: usize,
    rounds: usize,
    cap: usize,
}

impl InnerState {
    pub fn new(mut locations: Vec<usize>, cap: usize) -> Self {
        locations.sort_unstable();
        locations.dedup();
        let w = locations.len();
        Self {
            covered: vec![false; w * w],
            uncovered: w * w.saturating_sub(1) / 2,
            locations,
            rounds: 0,
            cap,
        }
    }

    /// Round cap for `width = k + k_u` locations and `s` cycles per round.
    pub fn coverage_cap(cap_factor: usize, width: usize, s: usize) -> usize {
        if s == 0 {
            1
        } else {
            cap_factor * width.div_ceil(s)
        }
    }

    pub fn record(&mut self, cs: &TwoCycleSet) {
        self.rounds += 1;
        for c in cs {
            let (Ok(i), Ok(j)) = (
                self.locations.binary_search(&c.a()),
                self.locations.binary_search(&c.b()),
            ) else {
                continue;
            };
            let w = self.locations.len();
            let slot = &mut self.covered[i.min(j) * w + i.max(j)];
            if !*slot {
                *slot = true;
                self.uncovered -= 1;
            }
        }
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn all_pairs_covered(&self) -> bool {
        self.uncovered == 0
    }

    pub fn cap_reached(&self) -> bool {
        self.rounds >= self.cap
    }
}

/// True once every pair has been seen or the round cap is reached.
pub fn inner_termination(state: &InnerState) -> bool {
    state.all_pairs_covered() || state.cap_reached()
}

pub fn run(
    f: &FlowMatrix,
    d: &DistanceMatrix,
    legal: &impl LegalityOracle,
    init: Option<SubPermutation>,
    cfg: &ExpansionConfig,
) -> Result<ExpansionRun> {
    run_with_events(f, d, legal, init, cfg, |_| {})
}

pub fn run_with_events(
    f: &FlowMatrix,
    d: &DistanceMatrix,
    legal: &impl LegalityOracle,
    init: Option<SubPermutation>,
    cfg: &ExpansionConfig,
    mut on_event: impl FnMut(&ExpansionEvent),
) -> Result<ExpansionRun> {
    let (m, n) = (f.m(), d.n());
    if m > n {
        return Err(Error::TooManyFacilities {
            facilities: m,
            locations: n,
        });
    }
    cfg.validate(m, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut solver_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    solver_rng.set_stream(1);

    let mut p = match init {
        Some(p) => {
            if p.m() != m || p.n() != n {
                return Err(Error::DimensionMismatch {
                    context: "initial placement",
                    expected: m,
                    found: p.m(),
                });
            }
            if !is_legal_placement(&p, legal) {
                return Err(Error::InvalidPermutation(
                    "initial placement violates legality".into(),
                ));
            }
            p
        }
        None => init_random(m, n, legal, &mut rng)?,
    };

    let mut is_fixed = vec![false; m];
    for &fx in &cfg.fixed {
        is_fixed[fx] = true;
    }
    let movable: Vec<usize> = (0..m).filter(|&i| !is_fixed[i]).collect();
    let builder = AlphaQuboBuilder::new(f, d);

    let mut cost = qap_cost(f, d, &p)?;
    let mut records = vec![IterationRecord {
        outer_iter: 0,
        qap_cost: cost,
        inner_rounds: 0,
        qubo_dim: 0,
        wall_time_ms: 0,
        cap_hit: false,
    }];
    on_event(&ExpansionEvent::Iteration(records[0].clone()));
    if movable.is_empty() {
        return Ok(ExpansionRun {
            placement: p,
            records,
        });
    }

    for outer in 1..=cfg.max_outer_iters {
        let started = Instant::now();
        let cost_before = cost;
        let k = cfg.k.min(movable.len());

        let (selected, locations, mut cycles) =
            draw_subproblem(f, d, &p, legal, cfg, k, &movable, &mut rng)?;
        if cfg.verify_subproblem_max_dim > 0 {
            verify_subproblem(f, d, &p, &selected, &locations, cfg.verify_subproblem_max_dim, cost)?;
        }

        let width = locations.len();
        let k_u = width - selected.len();
        let s = cycle_count(selected.len(), k_u);
        let cap = match cfg.inner_termination {
            InnerTermination::Coverage { cap_factor } => {
                InnerState::coverage_cap(cap_factor, width, s)
            }
            InnerTermination::FixedRounds(r) => r,
        };
        let mut state = InnerState::new(locations.clone(), cap);
        let mut qubo_dim = 0;

        loop {
            if state.rounds() > 0 {
                let free: Vec<usize> = locations.iter().copied().filter(|&l| !p.is_bound(l)).collect();
                cycles = match sample_cycle_set(&selected, &free, &p, legal, &mut rng, cfg.max_resample) {
                    Ok(cs) => cs,
                    Err(Error::InfeasibleCycleSet { partial, .. }) => partial,
                    Err(e) => return Err(e),
                };
            }
            state.record(&cycles);
            let mut applied = 0;
            if !cycles.is_empty() {
                let qubo = builder.build(&p, &cycles)?;
                qubo_dim = qubo_dim.max(qubo.dim());
                let solver_cfg = SolverConfig {
                    seed: solver_rng.gen::<u64>() ^ cfg.solver.seed,
                    ..cfg.solver.clone()
                };
                let result = solve(&qubo, &solver_cfg)?;
                applied = result.best_x.iter().filter(|&&b| b).count();
                apply_selection_in_place(&mut p, &cycles, &CycleSelection::new(result.best_x))?;
                cost = result.best_objective;
            }
            on_event(&ExpansionEvent::Round {
                outer_iter: outer,
                round: state.rounds(),
                cycles: cycles.len(),
                applied,
                qap_cost: cost,
            });
            let done = match cfg.inner_termination {
                InnerTermination::Coverage { .. } => inner_termination(&state),
                InnerTermination::FixedRounds(_) => state.cap_reached(),
            };
            if done {
                break;
            }
        }

        cost = qap_cost(f, d, &p)?;
        let record = IterationRecord {
            outer_iter: outer,
            qap_cost: cost,
            inner_rounds: state.rounds(),
            qubo_dim,
            wall_time_ms: started.elapsed().as_millis() as u64,
            cap_hit: !state.all_pairs_covered(),
        };
        on_event(&ExpansionEvent::Iteration(record.clone()));
        records.push(record);

        if cfg.rel_improvement_eps > 0.0 {
            let gain = if cost_before > 0.0 {
                (cost_before - cost) / cost_before
            } else {
                0.0
            };
            if gain < cfg.rel_improvement_eps {
                break;
            }
        }
    }

    Ok(ExpansionRun {
        placement: p,
        records,
    })
}

/// Chooses `(I, J)` and the first cycle set, redrawing when no full legal set
/// exists. Free locations no selected facility may occupy are never drawn.
#[allow(clippy::too_many_arguments)]
fn draw_subproblem(
    f: &FlowMatrix,
    d: &DistanceMatrix,
    p: &SubPermutation,
    legal: &impl LegalityOracle,
    cfg: &ExpansionConfig,
    k: usize,
    movable: &[usize],
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<usize>, Vec<usize>, TwoCycleSet)> {
    let mut fallback = None;
    for _ in 0..=cfg.max_redraws {
        let selected = select_indices_among(f, d, p, cfg.index_strategy, k, movable, rng)?;
        let candidates: Vec<usize> = p
            .unbound_locations()
            .into_iter()
            .filter(|&l| selected.iter().any(|&i| legal.is_legal(i, l)))
            .collect();
        let k_u = cfg.k_u.min(k).min(candidates.len());
        let unbound = select_unbound_among(p, d, &candidates, k_u, rng)?;
        let locations: Vec<usize> = selected
            .iter()
            .map(|&i| p.location(i))
            .chain(unbound.iter().copied())
            .collect();
        match sample_cycle_set(&selected, &unbound, p, legal, rng, cfg.max_resample) {
            Ok(cs) => return Ok((selected, locations, cs)),
            Err(Error::InfeasibleCycleSet { partial, .. }) => {
                let better = fallback
                    .as_ref()
                    .is_none_or(|(_, _, best): &(_, _, TwoCycleSet)| partial.len() > best.len());
                if better {
                    fallback = Some((selected, locations, partial));
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(fallback.expect("at least one draw was made"))
}

fn verify_subproblem(
    f: &FlowMatrix,
    d: &DistanceMatrix,
    p: &SubPermutation,
    selected: &[usize],
    locations: &[usize],
    max_dim: usize,
    cost: f64,
) -> Result<()> {
    let unbound = locations[selected.len()..].to_vec();
    let idx = SubProblemIndex::new(p, selected.to_vec(), unbound)?;
    if idx.dim() > max_dim {
        return Ok(());
    }
    let q = build_subproblem_matrix(f, d, p, &idx)?;
    let value = q.objective(&idx.encode(p));
    if (value - cost).abs() > 1e-9 * cost.abs().max(1.0) {
        return Err(Error::InvalidIndex(format!(
            "restricted cost {value} disagrees with placement cost {cost}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qap::Unconstrained;

    fn line(n: usize) -> DistanceMatrix {
        DistanceMatrix::from_metric(n, |a, b| (a as f64 - b as f64).abs()).unwrap()
    }

    #[test]
    fn worst_picks_largest_rows() {
        // star around facility 2 on a line: rows are [a, b, a+b+c, c]
        let f = FlowMatrix::from_rows(&[
            vec![0.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
            vec![1.0, 1.0, 0.0, 1.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ])
        .unwrap();
        let d = line(8);
        let p = SubPermutation::new(vec![0, 4, 5, 7], 8).unwrap();
        let costs = per_facility_cost(&f, &d, &p).unwrap();
        assert_eq!(costs, vec![5.0, 1.0, 8.0, 2.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let picked = select_indices(&f, &d, &p, IndexStrategy::Worst, 2, &mut rng).unwrap();
        assert_eq!(picked, vec![0, 2]);
    }

    #[test]
    fn worst_breaks_ties_by_index() {
        let f = FlowMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let d = line(3);
        let p = SubPermutation::new(vec![0, 2], 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let picked = select_indices(&f, &d, &p, IndexStrategy::Worst, 1, &mut rng).unwrap();
        assert_eq!(picked, vec![0]);
    }

    #[test]
    fn full_selection_for_both_strategies() {
        let f = FlowMatrix::zeros(4);
        let d = line(6);
        let p = SubPermutation::new(vec![5, 1, 2, 0], 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for s in [IndexStrategy::Random, IndexStrategy::Worst] {
            assert_eq!(select_indices(&f, &d, &p, s, 4, &mut rng).unwrap(), vec![0, 1, 2, 3]);
        }
    }

    #[test]
    fn random_selection_is_seeded() {
        let f = FlowMatrix::zeros(10);
        let d = line(12);
        let p = SubPermutation::new((0..10).collect(), 12).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            select_indices(&f, &d, &p, IndexStrategy::Random, 4, &mut rng).unwrap()
        };
        assert_eq!(draw(11), draw(11));
        assert_eq!(draw(11).len(), 4);
    }

    #[test]
    fn unbound_selection_takes_everything_when_asked() {
        let d = line(6);
        let p = SubPermutation::new(vec![0, 3], 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut j = select_unbound(&p, &d, 4, &mut rng).unwrap();
        j.sort();
        assert_eq!(j, vec![1, 2, 4, 5]);
        assert!(select_unbound(&p, &d, 5, &mut rng).is_err());
    }

    #[test]
    fn unbound_weights_follow_single_neighbor_distance() {
        // bound = {0} on a 5-line: weights 1, 2, 3, 4
        let d = line(5);
        let p = SubPermutation::new(vec![0], 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut counts = [0usize; 5];
        let draws = 20_000;
        for _ in 0..draws {
            counts[select_unbound(&p, &d, 1, &mut rng).unwrap()[0]] += 1;
        }
        assert_eq!(counts[0], 0);
        for loc in 1..5 {
            let expected = draws as f64 * loc as f64 / 10.0;
            assert!((counts[loc] as f64 - expected).abs() < 0.06 * expected, "{counts:?}");
        }
    }

    #[test]
    fn init_random_forces_scarce_location() {
        // facility 0 fits only location 2
        let legal = |f: usize, l: usize| f != 0 || l == 2;
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = init_random(3, 4, &legal, &mut rng).unwrap();
            assert_eq!(p.location(0), 2);
        }
    }

    #[test]
    fn init_random_reports_infeasibility() {
        let legal = |_: usize, l: usize| l == 0;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            init_random(2, 3, &legal, &mut rng),
            Err(Error::InfeasibleInit { .. })
        ));
    }

    #[test]
    fn coverage_of_single_pair_stops_after_one_round() {
        let mut st = InnerState::new(vec![3, 7], InnerState::coverage_cap(10, 2, 1));
        assert!(!inner_termination(&st));
        st.record(&TwoCycleSet::from_pairs(&[(3, 7)]).unwrap());
        assert!(inner_termination(&st));
        assert!(st.all_pairs_covered());
    }

    #[test]
    fn cap_ends_inner_loop() {
        let mut st = InnerState::new(vec![0, 1, 2, 3], 2);
        st.record(&TwoCycleSet::from_pairs(&[(0, 1)]).unwrap());
        assert!(!inner_termination(&st));
        st.record(&TwoCycleSet::from_pairs(&[(0, 1)]).unwrap());
        assert!(inner_termination(&st));
        assert!(st.cap_reached() && !st.all_pairs_covered());
        assert_eq!(InnerState::coverage_cap(10, 150, 75), 20);
    }

    #[test]
    fn single_facility_finds_zero_cost() {
        let f = FlowMatrix::zeros(1);
        let d = line(4);
        let cfg = ExpansionConfig::new(1, 1, SolverConfig::exhaustive());
        let out = run(&f, &d, &Unconstrained, None, &cfg).unwrap();
        assert_eq!(out.final_cost(), 0.0);
        assert_eq!(out.records.len(), 51);
    }

    #[test]
    fn config_bounds() {
        let f = FlowMatrix::zeros(3);
        let d = line(4);
        let bad_k = ExpansionConfig::new(4, 0, SolverConfig::exhaustive());
        assert!(run(&f, &d, &Unconstrained, None, &bad_k).is_err());
        let bad_ku = ExpansionConfig::new(2, 2, SolverConfig::exhaustive());
        assert!(run(&f, &d, &Unconstrained, None, &bad_ku).is_err());
    }

    #[test]
    fn fixed_facilities_stay_put() {
        let f = FlowMatrix::from_rows(&[
            vec![0.0, 1.0, 1.0],
            vec![1.0, 0.0, 1.0],
            vec![1.0, 1.0, 0.0],
        ])
        .unwrap();
        let d = line(8);
        let init = SubPermutation::new(vec![0, 7, 4], 8).unwrap();
        let mut cfg = ExpansionConfig::new(2, 2, SolverConfig::exhaustive());
        cfg.fixed = vec![0];
        cfg.max_outer_iters = 10;
        let out = run(&f, &d, &Unconstrained, Some(init), &cfg).unwrap();
        assert_eq!(out.placement.location(0), 0);
        assert!(out.final_cost() < out.initial_cost());
    }

    #[test]
    fn improvement_threshold_stops_early() {
        let f = FlowMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let d = line(3);
        let mut cfg = ExpansionConfig::new(2, 1, SolverConfig::exhaustive());
        cfg.rel_improvement_eps = 0.5;
        let out = run(&f, &d, &Unconstrained, None, &cfg).unwrap();
        assert!(out.records.len() < 51);
    }
}
