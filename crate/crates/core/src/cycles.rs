//! 2-cycles over location indices and disjoint sets of them.
//!
//! A cycle `(a, b)` exchanges whatever occupies locations `a` and `b`: two
//! facilities swap, a facility next to a free cell moves, and two free cells
//! leave the placement unchanged. In matrix form this is `X' = X C` for the
//! m x n placement matrix `X` and the n x n transposition `C`.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::qap::{LegalityOracle, Matrix, SubPermutation};

/// Shuffles tried by [`sample_cycle_set`] before giving up.
pub const DEFAULT_MAX_RESAMPLE: usize = 50;

/// Transposition of two distinct locations, stored with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TwoCycle {
    a: usize,
    b: usize,
}

impl TwoCycle {
    pub fn new(a: usize, b: usize) -> Result<Self> {
        if a == b {
            return Err(Error::InvalidPermutation(format!(
                "2-cycle needs two distinct locations, got ({a}, {b})"
            )));
        }
        Ok(Self {
            a: a.min(b),
            b: a.max(b),
        })
    }

    pub fn a(&self) -> usize {
        self.a
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn contains(&self, loc: usize) -> bool {
        self.a == loc || self.b == loc
    }
}

/// Pairwise disjoint 2-cycles; their product does not depend on order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TwoCycleSet {
    cycles: Vec<TwoCycle>,
}

impl TwoCycleSet {
    pub fn new(cycles: Vec<TwoCycle>) -> Result<Self> {
        let mut seen = std::collections::HashSet::with_capacity(cycles.len() * 2);
        for c in &cycles {
            for loc in [c.a, c.b] {
                if !seen.insert(loc) {
                    return Err(Error::NotDisjoint { location: loc });
                }
            }
        }
        Ok(Self { cycles })
    }

    pub fn from_pairs(pairs: &[(usize, usize)]) -> Result<Self> {
        let cycles = pairs
            .iter()
            .map(|&(a, b)| TwoCycle::new(a, b))
            .collect::<Result<Vec<_>>>()?;
        Self::new(cycles)
    }

    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    pub fn cycles(&self) -> &[TwoCycle] {
        &self.cycles
    }

    pub fn iter(&self) -> std::slice::Iter<'_, TwoCycle> {
        self.cycles.iter()
    }

    pub fn check_range(&self, n: usize) -> Result<()> {
        match self.cycles.iter().find(|c| c.b >= n) {
            Some(c) => Err(Error::LocationOutOfRange { location: c.b, n }),
            None => Ok(()),
        }
    }

    /// Product of all cycles as a permutation array on `0..n`.
    pub fn as_permutation(&self, n: usize) -> Result<Vec<usize>> {
        self.check_range(n)?;
        let mut perm: Vec<usize> = (0..n).collect();
        for c in &self.cycles {
            perm.swap(c.a, c.b);
        }
        Ok(perm)
    }

    /// n x n permutation matrix of the product.
    pub fn to_matrix(&self, n: usize) -> Result<Matrix> {
        let perm = self.as_permutation(n)?;
        Ok(Matrix::from_fn(n, n, |r, c| f64::from(u8::from(perm[r] == c))))
    }
}

impl<'a> IntoIterator for &'a TwoCycleSet {
    type Item = &'a TwoCycle;
    type IntoIter = std::slice::Iter<'a, TwoCycle>;

    fn into_iter(self) -> Self::IntoIter {
        self.cycles.iter()
    }
}

/// Binary vector choosing which cycles of a set to apply.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CycleSelection(Vec<bool>);

impl CycleSelection {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn zeros(s: usize) -> Self {
        Self(vec![false; s])
    }

    /// Parses 0/1 values; anything else is rejected.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        bits.iter()
            .map(|&b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::InvalidConfig(format!(
                    "selection entries must be 0 or 1, got {other}"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    /// Bit `i` of `mask` becomes entry `i`.
    pub fn from_mask(mask: u64, s: usize) -> Self {
        Self((0..s).map(|i| mask >> i & 1 == 1).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }
}

/// Applies the selected cycles of `cs` to `p` (the map `g(P, alpha, C)`).
pub fn apply_selection(
    p: &SubPermutation,
    cs: &TwoCycleSet,
    alpha: &CycleSelection,
) -> Result<SubPermutation> {
    let mut out = p.clone();
    apply_selection_in_place(&mut out, cs, alpha)?;
    Ok(out)
}

pub fn apply_selection_in_place(
    p: &mut SubPermutation,
    cs: &TwoCycleSet,
    alpha: &CycleSelection,
) -> Result<()> {
    if alpha.len() != cs.len() {
        return Err(Error::DimensionMismatch {
            context: "cycle selection length",
            expected: cs.len(),
            found: alpha.len(),
        });
    }
    cs.check_range(p.n())?;
    for (c, &on) in cs.iter().zip(alpha.bits()) {
        if on {
            p.swap_locations(c.a, c.b)?;
        }
    }
    Ok(())
}

/// One nonzero of `(C - I)` applied to a placement: `value` at
/// `(facility, location)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaEntry {
    pub facility: usize,
    pub location: usize,
    pub value: f64,
}

/// Sparse m x n change of the placement matrix caused by one 2-cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaMatrix {
    pub m: usize,
    pub n: usize,
    pub entries: Vec<DeltaEntry>,
}

impl DeltaMatrix {
    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_dense(&self) -> Matrix {
        let mut out = Matrix::zeros(self.m, self.n);
        for e in &self.entries {
            out[(e.facility, e.location)] += e.value;
        }
        out
    }
}

/// The placement change `X C - X` for a single cycle.
///
/// A facility at `a` contributes `-1` at `(f, a)` and `+1` at `(f, b)`, and
/// symmetrically for a facility at `b`.
pub fn delta_matrix(p: &SubPermutation, c: &TwoCycle) -> Result<DeltaMatrix> {
    let n = p.n();
    if c.b >= n {
        return Err(Error::LocationOutOfRange { location: c.b, n });
    }
    let mut entries = Vec::with_capacity(4);
    for (from, to) in [(c.a, c.b), (c.b, c.a)] {
        if let Some(f) = p.occupant(from) {
            entries.push(DeltaEntry {
                facility: f,
                location: from,
                value: -1.0,
            });
            entries.push(DeltaEntry {
                facility: f,
                location: to,
                value: 1.0,
            });
        }
    }
    Ok(DeltaMatrix {
        m: p.m(),
        n,
        entries,
    })
}

/// Cycles per inner round: `k_u` moves plus `floor((k - k_u) / 2)` swaps.
pub fn cycle_count(k: usize, k_u: usize) -> usize {
    k_u + k.saturating_sub(k_u) / 2
}

/// Samples `cycle_count(|selected|, |unbound|)` disjoint legal cycles.
///
/// Every location in `unbound` receives one facility from `selected` (a
/// move-cycle), and the remaining selected facilities are paired into
/// swap-cycles; with an odd remainder one facility sits out. Pairing is greedy
/// over a fresh shuffle on each of up to `max_resample` attempts. On failure
/// the error carries the largest legal set found.
pub fn sample_cycle_set<R: Rng + ?Sized>(
    selected: &[usize],
    unbound: &[usize],
    p: &SubPermutation,
    legal: &impl LegalityOracle,
    rng: &mut R,
    max_resample: usize,
) -> Result<TwoCycleSet> {
    let k = selected.len();
    let k_u = unbound.len();
    if k_u > k {
        return Err(Error::InvalidIndex(format!(
            "{k_u} unbound locations but only {k} selected facilities"
        )));
    }
    let mut seen_fac = vec![false; p.m()];
    for &f in selected {
        if f >= p.m() || std::mem::replace(&mut seen_fac[f], true) {
            return Err(Error::InvalidIndex(format!(
                "selected facility {f} is out of range or repeated"
            )));
        }
    }
    let mut seen_loc = vec![false; p.n()];
    for &j in unbound {
        if j >= p.n() {
            return Err(Error::LocationOutOfRange {
                location: j,
                n: p.n(),
            });
        }
        if p.is_bound(j) || std::mem::replace(&mut seen_loc[j], true) {
            return Err(Error::InvalidIndex(format!(
                "location {j} is bound or repeated"
            )));
        }
    }

    let wanted_swaps = (k - k_u) / 2;
    let wanted = k_u + wanted_swaps;
    let mut best: Vec<TwoCycle> = Vec::new();
    let mut order = selected.to_vec();
    let mut targets = unbound.to_vec();
    let attempts = max_resample.max(1);

    for _ in 0..attempts {
        order.shuffle(rng);
        targets.shuffle(rng);
        let mut used = vec![false; k];
        let mut cycles = Vec::with_capacity(wanted);
        let mut moves = 0;

        for &j in &targets {
            if let Some(idx) = (0..k).find(|&i| !used[i] && legal.is_legal(order[i], j)) {
                used[idx] = true;
                cycles.push(TwoCycle::new(p.location(order[idx]), j)?);
                moves += 1;
            }
        }

        let rest: Vec<usize> = (0..k).filter(|&i| !used[i]).map(|i| order[i]).collect();
        let mut paired = vec![false; rest.len()];
        let mut swaps = 0;
        for x in 0..rest.len() {
            if swaps == wanted_swaps {
                break;
            }
            if paired[x] {
                continue;
            }
            let (fx, lx) = (rest[x], p.location(rest[x]));
            let partner = (x + 1..rest.len()).find(|&y| {
                let (fy, ly) = (rest[y], p.location(rest[y]));
                !paired[y] && legal.is_legal(fx, ly) && legal.is_legal(fy, lx)
            });
            if let Some(y) = partner {
                paired[x] = true;
                paired[y] = true;
                cycles.push(TwoCycle::new(lx, p.location(rest[y]))?);
                swaps += 1;
            }
        }

        if moves == k_u && swaps == wanted_swaps {
            return TwoCycleSet::new(cycles);
        }
        if cycles.len() > best.len() {
            best = cycles;
        }
    }

    Err(Error::InfeasibleCycleSet {
        wanted,
        attempts,
        partial: TwoCycleSet::new(best)?,
    })
}

/// Splits a permutation into two products of disjoint transpositions.
///
/// `perm[x]` is the image of `x`. Returns `(L, R)` with
/// `perm[x] == L(R(x))` for every `x`, where `L` and `R` are the products of
/// the returned sets. A cycle `c_0 -> c_1 -> ... -> c_{l-1}` is the composition
/// of the reflections `c_i -> c_{1-i}` and `c_i -> c_{-i}` (indices mod `l`).
pub fn decompose_into_two_involutions(perm: &[usize]) -> Result<(TwoCycleSet, TwoCycleSet)> {
    let n = perm.len();
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidPermutation(format!(
                "input is not a bijection on 0..{n}"
            )));
        }
    }

    let mut left = Vec::new();
    let mut right = Vec::new();
    let mut visited = vec![false; n];
    for start in 0..n {
        if visited[start] {
            continue;
        }
        let mut cycle = vec![start];
        visited[start] = true;
        let mut x = perm[start];
        while x != start {
            visited[x] = true;
            cycle.push(x);
            x = perm[x];
        }
        let len = cycle.len();
        for i in 0..len {
            let l = (len + 1 - i) % len;
            if i < l {
                left.push(TwoCycle::new(cycle[i], cycle[l])?);
            }
            let r = (len - i) % len;
            if i < r {
                right.push(TwoCycle::new(cycle[i], cycle[r])?);
            }
        }
    }
    Ok((TwoCycleSet::new(left)?, TwoCycleSet::new(right)?))
}
