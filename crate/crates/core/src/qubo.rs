//! QUBO problems and the builders that produce them.
//!
//! Three formulations are provided:
//!
//! * [`build_full_qubo`]: the whole placement as one penalty QUBO over the
//!   m*n assignment bits plus n slack bits. Only practical for tiny instances.
//! * [`build_subproblem_matrix`]: the placement restricted to `k` selected
//!   facilities moving among their own locations and `k_u` free ones, with
//!   every other facility held fixed.
//! * [`build_alpha_qubo`]: one bit per cycle of a disjoint cycle set; its
//!   objective is exactly the placement cost after applying the selected
//!   cycles.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::cycles::{delta_matrix, DeltaEntry, TwoCycleSet};
use crate::error::{Error, Result};
use crate::qap::{qap_cost, DistanceMatrix, FlowMatrix, Matrix, SubPermutation};

/// `minimize x^T q x + offset` over `x in {0,1}^dim`, with `q` symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboProblem {
    dim: usize,
    q: Vec<f64>,
    offset: f64,
}

impl QuboProblem {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            q: vec![0.0; dim * dim],
            offset: 0.0,
        }
    }

    /// Symmetrizes any square matrix: `q_ij = (m_ij + m_ji) / 2`. The quadratic
    /// form is unchanged, so upper-triangular input works as well.
    pub fn from_matrix(m: &Matrix, offset: f64) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::InvalidMatrix(format!(
                "QUBO matrix must be square, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let dim = m.rows();
        let mut out = Self::zeros(dim);
        out.offset = offset;
        for i in 0..dim {
            for j in 0..dim {
                out.q[i * dim + j] = if i == j {
                    m[(i, i)]
                } else {
                    0.5 * (m[(i, j)] + m[(j, i)])
                };
            }
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn set_offset(&mut self, offset: f64) {
        self.offset = offset;
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.dim + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.q[i * self.dim..(i + 1) * self.dim]
    }

    /// Adds `value * x_i * x_j` to the objective (a linear term when `i == j`).
    pub fn add_term(&mut self, i: usize, j: usize, value: f64) {
        if i == j {
            self.q[i * self.dim + i] += value;
        } else {
            let half = 0.5 * value;
            self.q[i * self.dim + j] += half;
            self.q[j * self.dim + i] += half;
        }
    }

    /// Adds `weight * (sum_k coef_k x_k + constant)^2`, expanded with `x^2 = x`.
    fn add_squared_linear(&mut self, terms: &[(usize, f64)], constant: f64, weight: f64) {
        for (a, &(i, ci)) in terms.iter().enumerate() {
            self.add_term(i, i, weight * (ci * ci + 2.0 * constant * ci));
            for &(j, cj) in &terms[a + 1..] {
                self.add_term(i, j, weight * 2.0 * ci * cj);
            }
        }
        self.offset += weight * constant * constant;
    }

    pub fn objective(&self, x: &[bool]) -> f64 {
        assert_eq!(x.len(), self.dim, "assignment length must equal QUBO dimension");
        let ones: Vec<usize> = (0..self.dim).filter(|&i| x[i]).collect();
        let mut total = self.offset;
        for &i in &ones {
            let row = self.row(i);
            total += ones.iter().map(|&j| row[j]).sum::<f64>();
        }
        total
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn to_exchange(&self) -> QuboExchange {
        let mut terms = Vec::new();
        for i in 0..self.dim {
            for j in i..self.dim {
                let v = if i == j {
                    self.get(i, i)
                } else {
                    2.0 * self.get(i, j)
                };
                if v != 0.0 {
                    terms.push((i, j, v));
                }
            }
        }
        QuboExchange {
            dim: self.dim,
            offset: self.offset,
            terms,
        }
    }

    pub fn from_exchange(doc: &QuboExchange) -> Result<Self> {
        let mut out = Self::zeros(doc.dim);
        out.offset = doc.offset;
        for &(i, j, v) in &doc.terms {
            if i >= doc.dim || j >= doc.dim {
                return Err(Error::InvalidMatrix(format!(
                    "term ({i}, {j}) outside dimension {}",
                    doc.dim
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidMatrix(format!("term ({i}, {j}) is not finite")));
            }
            out.add_term(i, j, v);
        }
        Ok(out)
    }

    pub fn write_json(&self, w: impl Write) -> Result<()> {
        serde_json::to_writer(w, &self.to_exchange())?;
        Ok(())
    }

    pub fn read_json(r: impl Read) -> Result<Self> {
        Self::from_exchange(&serde_json::from_reader(r)?)
    }
}

/// Wire form of a QUBO: `terms` holds `[i, j, value]` with `i <= j`, where
/// `value` multiplies `x_i * x_j` (a linear coefficient on the diagonal).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuboExchange {
    pub dim: usize,
    pub offset: f64,
    pub terms: Vec<(usize, usize, f64)>,
}

/// Penalty weights of the monolithic formulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyParams {
    lambda: f64,
    mu: f64,
}

impl PenaltyParams {
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        if !(lambda > 0.0 && mu > 0.0 && lambda.is_finite() && mu.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "penalties must be positive, got lambda={lambda}, mu={mu}"
            )));
        }
        Ok(Self { lambda, mu })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

/// `lambda = mu = 1 + sum(F) * max(D)`, which exceeds the cost of any feasible
/// placement, so no constraint violation can pay for itself.
pub fn default_penalties(f: &FlowMatrix, d: &DistanceMatrix) -> PenaltyParams {
    let bound = 1.0 + f.total() * d.max_entry();
    PenaltyParams {
        lambda: bound,
        mu: bound,
    }
}

/// Index of assignment bit `X[facility][location]` in the full QUBO.
pub fn full_x_index(facility: usize, location: usize, n: usize) -> usize {
    facility * n + location
}

/// Index of the slack bit of `location`; slacks follow all m*n assignment bits.
pub fn full_slack_index(location: usize, m: usize, n: usize) -> usize {
    m * n + location
}

/// Penalty QUBO over `(x, s)`:
/// `x^T (F (x) D) x + lambda ||A x - 1||^2 + mu ||B x - s||^2` where `A x` are
/// the row sums and `B x` the column sums of the m x n matrix behind `x`.
pub fn build_full_qubo(f: &FlowMatrix, d: &DistanceMatrix, params: PenaltyParams) -> Result<QuboProblem> {
    let (m, n) = (f.m(), d.n());
    if m > n {
        return Err(Error::TooManyFacilities {
            facilities: m,
            locations: n,
        });
    }
    let mut qubo = QuboProblem::zeros(m * n + n);
    for i in 0..m {
        for j in 0..m {
            let w = f.get(i, j);
            if w == 0.0 {
                continue;
            }
            for a in 0..n {
                for b in 0..n {
                    let v = w * d.get(a, b);
                    if v != 0.0 {
                        qubo.add_term(full_x_index(i, a, n), full_x_index(j, b, n), v);
                    }
                }
            }
        }
    }
    for i in 0..m {
        let row: Vec<(usize, f64)> = (0..n).map(|a| (full_x_index(i, a, n), 1.0)).collect();
        qubo.add_squared_linear(&row, -1.0, params.lambda);
    }
    for a in 0..n {
        let mut col: Vec<(usize, f64)> = (0..m).map(|i| (full_x_index(i, a, n), 1.0)).collect();
        col.push((full_slack_index(a, m, n), -1.0));
        qubo.add_squared_linear(&col, 0.0, params.mu);
    }
    Ok(qubo)
}

/// Reads the assignment bits of a full-QUBO solution; `None` unless every
/// facility has exactly one location and no location is shared.
pub fn decode_full_solution(x: &[bool], m: usize, n: usize) -> Option<SubPermutation> {
    if x.len() != m * n + n {
        return None;
    }
    let mut assign = Vec::with_capacity(m);
    for i in 0..m {
        let mut locs = (0..n).filter(|&a| x[full_x_index(i, a, n)]);
        let loc = locs.next()?;
        if locs.next().is_some() {
            return None;
        }
        assign.push(loc);
    }
    SubPermutation::new(assign, n).ok()
}

/// Facilities `I`, their current locations `I_pi`, free locations `J`, and
/// the combined location list `I_pi` followed by `J`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubProblemIndex {
    facilities: Vec<usize>,
    unbound: Vec<usize>,
    image: Vec<usize>,
}

impl SubProblemIndex {
    /// Reads `I_pi` from the placement.
    pub fn new(p: &SubPermutation, facilities: Vec<usize>, unbound: Vec<usize>) -> Result<Self> {
        if let Some(&f) = facilities.iter().find(|&&f| f >= p.m()) {
            return Err(Error::InvalidIndex(format!("facility {f} out of range")));
        }
        let image = facilities.iter().map(|&f| p.location(f)).collect();
        let idx = Self {
            facilities,
            unbound,
            image,
        };
        idx.validate(p)?;
        Ok(idx)
    }

    /// Takes `I_pi` as given; it is checked against the placement on use.
    pub fn from_parts(facilities: Vec<usize>, unbound: Vec<usize>, image: Vec<usize>) -> Self {
        Self {
            facilities,
            unbound,
            image,
        }
    }

    pub fn facilities(&self) -> &[usize] {
        &self.facilities
    }

    pub fn unbound(&self) -> &[usize] {
        &self.unbound
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn image_ext(&self) -> Vec<usize> {
        self.image.iter().chain(&self.unbound).copied().collect()
    }

    /// `k * (k + k_u)`.
    pub fn dim(&self) -> usize {
        self.facilities.len() * (self.facilities.len() + self.unbound.len())
    }

    pub fn validate(&self, p: &SubPermutation) -> Result<()> {
        if self.image.len() != self.facilities.len() {
            return Err(Error::InvalidIndex("I_pi and I differ in length".into()));
        }
        let mut seen = vec![false; p.m()];
        for (&f, &loc) in self.facilities.iter().zip(&self.image) {
            if f >= p.m() || std::mem::replace(&mut seen[f], true) {
                return Err(Error::InvalidIndex(format!(
                    "facility {f} out of range or repeated"
                )));
            }
            if p.location(f) != loc {
                return Err(Error::InvalidIndex(format!(
                    "facility {f} sits at {} but the index says {loc}",
                    p.location(f)
                )));
            }
        }
        let mut seen_loc = vec![false; p.n()];
        for &j in &self.unbound {
            if j >= p.n() {
                return Err(Error::LocationOutOfRange { location: j, n: p.n() });
            }
            if p.is_bound(j) || std::mem::replace(&mut seen_loc[j], true) {
                return Err(Error::InvalidIndex(format!(
                    "location {j} is bound or repeated in J"
                )));
            }
        }
        Ok(())
    }

    /// Bit `r * (k + k_u) + c` of the sub-problem vector is `X[I_r][image_ext_c]`.
    pub fn variable(&self, r: usize, c: usize) -> usize {
        r * (self.facilities.len() + self.unbound.len()) + c
    }

    /// Current placement restricted to the sub-problem.
    pub fn encode(&self, p: &SubPermutation) -> Vec<bool> {
        let locs = self.image_ext();
        let mut x = vec![false; self.dim()];
        for (r, &f) in self.facilities.iter().enumerate() {
            if let Some(c) = locs.iter().position(|&l| l == p.location(f)) {
                x[self.variable(r, c)] = true;
            }
        }
        x
    }

    /// Places facility `I_r` on `image_ext[targets[r]]`, keeping all others.
    pub fn reassign(&self, p: &SubPermutation, targets: &[usize]) -> Result<SubPermutation> {
        let locs = self.image_ext();
        let mut assign = p.assignment().to_vec();
        for (&f, &c) in self.facilities.iter().zip(targets) {
            assign[f] = *locs.get(c).ok_or_else(|| {
                Error::InvalidIndex(format!("target column {c} out of range"))
            })?;
        }
        SubPermutation::new(assign, p.n())
    }
}

/// Cost matrix of the restricted problem:
/// `F_I (x) D_{I'} + 2 diag(vec(F_{I,I^c} D_{I^c_pi, I'}))`, with the cost among
/// the fixed facilities carried in the offset. For any placement that only
/// rearranges `I` inside `I'`, `objective(encode(P)) == qap_cost(P)`.
pub fn build_subproblem_matrix(
    f: &FlowMatrix,
    d: &DistanceMatrix,
    p: &SubPermutation,
    idx: &SubProblemIndex,
) -> Result<QuboProblem> {
    check_dims(f, d, p)?;
    idx.validate(p)?;
    let sel = idx.facilities();
    let locs = idx.image_ext();
    let width = locs.len();
    if width > p.n() {
        return Err(Error::InvalidIndex("k + k_u exceeds location count".into()));
    }
    let mut in_sel = vec![false; p.m()];
    for &i in sel {
        in_sel[i] = true;
    }
    let rest: Vec<usize> = (0..p.m()).filter(|&g| !in_sel[g]).collect();

    let mut qubo = QuboProblem::zeros(idx.dim());
    for (r, &i) in sel.iter().enumerate() {
        for (r2, &j) in sel.iter().enumerate() {
            let w = f.get(i, j);
            if w == 0.0 {
                continue;
            }
            for (c, &a) in locs.iter().enumerate() {
                for (c2, &b) in locs.iter().enumerate() {
                    qubo.q[idx.variable(r, c) * idx.dim() + idx.variable(r2, c2)] += w * d.get(a, b);
                }
            }
        }
        for (c, &a) in locs.iter().enumerate() {
            let lin: f64 = rest
                .iter()
                .map(|&g| f.get(i, g) * d.get(p.location(g), a))
                .sum();
            let v = idx.variable(r, c);
            qubo.q[v * idx.dim() + v] += 2.0 * lin;
        }
    }
    qubo.offset = rest
        .iter()
        .flat_map(|&g| rest.iter().map(move |&h| (g, h)))
        .map(|(g, h)| f.get(g, h) * d.get(p.location(g), p.location(h)))
        .sum();
    Ok(qubo)
}

fn check_dims(f: &FlowMatrix, d: &DistanceMatrix, p: &SubPermutation) -> Result<()> {
    if f.m() != p.m() {
        return Err(Error::DimensionMismatch {
            context: "facility count (flow vs placement)",
            expected: f.m(),
            found: p.m(),
        });
    }
    if d.n() != p.n() {
        return Err(Error::DimensionMismatch {
            context: "location count (distance vs placement)",
            expected: d.n(),
            found: p.n(),
        });
    }
    Ok(())
}

/// Builds cycle-selection QUBOs for a fixed instance, caching the sparsity of
/// `F` across calls.
#[derive(Debug, Clone)]
pub struct AlphaQuboBuilder<'a> {
    f: &'a FlowMatrix,
    d: &'a DistanceMatrix,
    neighbors: Vec<Vec<usize>>,
}

impl<'a> AlphaQuboBuilder<'a> {
    pub fn new(f: &'a FlowMatrix, d: &'a DistanceMatrix) -> Self {
        Self {
            f,
            d,
            neighbors: f.neighbors(),
        }
    }

    /// `s x s` matrix with `Q_ij = c(C_i, C_j)` off the diagonal and
    /// `Q_ii = c(C_i) + c(C_i, P) + c(P, C_i)`, offset `c(P)`, where
    /// `C_i = X C_i - X` and `c(A, B) = tr(F A D B^T)`.
    pub fn build(&self, p: &SubPermutation, cs: &TwoCycleSet) -> Result<QuboProblem> {
        check_dims(self.f, self.d, p)?;
        cs.check_range(p.n())?;
        let s = cs.len();
        let deltas: Vec<Vec<DeltaEntry>> = cs
            .iter()
            .map(|c| delta_matrix(p, c).map(|dm| dm.entries))
            .collect::<Result<_>>()?;
        let mut cycle_of = vec![usize::MAX; p.m()];
        for (ci, entries) in deltas.iter().enumerate() {
            for e in entries {
                cycle_of[e.facility] = ci;
            }
        }

        // cross[i][j] = c(C_i, C_j) = sum_{f,g} F[f][g] <C_i[g,:], D C_j[f,:]>
        let mut cross = vec![0.0; s * s];
        let mut linear = vec![0.0; s];
        for (i, entries) in deltas.iter().enumerate() {
            for ea in entries {
                let g = ea.facility;
                for &fac in &self.neighbors[g] {
                    let w = self.f.get(fac, g) * ea.value;
                    // c(C_i, P) picks up row `fac` of P.
                    linear[i] += w * self.d.get(ea.location, p.location(fac));
                    let j = cycle_of[fac];
                    if j == usize::MAX {
                        continue;
                    }
                    for eb in deltas[j].iter().filter(|eb| eb.facility == fac) {
                        cross[i * s + j] += w * eb.value * self.d.get(ea.location, eb.location);
                    }
                }
            }
            // c(P, C_i) = sum_{f,g} F[f][g] (P D C_i^T)[g][f]
            for eb in entries {
                let fac = eb.facility;
                for &g in &self.neighbors[fac] {
                    linear[i] += self.f.get(fac, g)
                        * eb.value
                        * self.d.get(p.location(g), eb.location);
                }
            }
        }

        let mut qubo = QuboProblem::zeros(s);
        for i in 0..s {
            qubo.q[i * s + i] = cross[i * s + i] + linear[i];
            for j in 0..i {
                let v = 0.5 * (cross[i * s + j] + cross[j * s + i]);
                qubo.q[i * s + j] = v;
                qubo.q[j * s + i] = v;
            }
        }
        qubo.offset = qap_cost(self.f, self.d, p)?;
        Ok(qubo)
    }
}

/// See [`AlphaQuboBuilder::build`].
pub fn build_alpha_qubo(
    f: &FlowMatrix,
    d: &DistanceMatrix,
    p: &SubPermutation,
    cs: &TwoCycleSet,
) -> Result<QuboProblem> {
    AlphaQuboBuilder::new(f, d).build(p, cs)
}
