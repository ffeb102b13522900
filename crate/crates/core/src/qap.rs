//! Quadratic assignment data model.
//!
//! `m` facilities (functional blocks) are assigned injectively to `n >= m`
//! locations (grid cells). The flow matrix `F` couples facilities, the distance
//! matrix `D` couples locations, and a placement `P` costs
//! `sum_{i,j} F[i][j] * D[P(i)][P(j)] = tr(F X D X^T)` where `X` is the 0/1
//! sub-permutation matrix of `P`.

use std::collections::BTreeSet;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from nested rows; all rows must have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch {
                context: "matrix row length",
                expected: cols,
                found: bad.len(),
            });
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                context: "matrix product",
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == 0.0 {
                    continue;
                }
                for c in 0..other.cols {
                    out.data[r * other.cols + c] += a * other[(k, c)];
                }
            }
        }
        Ok(out)
    }

    fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

fn validate_square(mat: &Matrix, what: &str) -> Result<()> {
    if mat.rows() != mat.cols() {
        return Err(Error::InvalidMatrix(format!(
            "{what} must be square, got {}x{}",
            mat.rows(),
            mat.cols()
        )));
    }
    if let Some(v) = mat.as_slice().iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::InvalidMatrix(format!(
            "{what} entries must be finite and nonnegative, found {v}"
        )));
    }
    if (0..mat.rows()).any(|i| mat[(i, i)] != 0.0) {
        return Err(Error::InvalidMatrix(format!("{what} must have a zero diagonal")));
    }
    if !mat.is_symmetric() {
        return Err(Error::InvalidMatrix(format!("{what} must be symmetric")));
    }
    Ok(())
}

/// Symmetric, zero-diagonal, nonnegative facility connectivity `F` (m x m).
#[derive(Debug, Clone, PartialEq)]
pub struct FlowMatrix(Matrix);

impl FlowMatrix {
    pub fn new(mat: Matrix) -> Result<Self> {
        validate_square(&mat, "flow matrix")?;
        Ok(Self(mat))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn zeros(m: usize) -> Self {
        Self(Matrix::zeros(m, m))
    }

    /// Facility count.
    pub fn m(&self) -> usize {
        self.0.rows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.0.row(i)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    /// Sum of all entries (each undirected connection counted twice).
    pub fn total(&self) -> f64 {
        self.0.as_slice().iter().sum()
    }

    /// Nonzero column indices of every row.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        (0..self.m())
            .map(|i| (0..self.m()).filter(|&j| self.get(i, j) != 0.0).collect())
            .collect()
    }

    /// Reorders facilities: entry `(i, j)` of the result is `F[perm[i]][perm[j]]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        check_bijection(perm, self.m())?;
        Ok(Self(Matrix::from_fn(self.m(), self.m(), |i, j| {
            self.get(perm[i], perm[j])
        })))
    }
}

/// Symmetric, zero-diagonal, nonnegative location distances `D` (n x n).
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix(Matrix);

impl DistanceMatrix {
    pub fn new(mat: Matrix) -> Result<Self> {
        validate_square(&mat, "distance matrix")?;
        Ok(Self(mat))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    /// Builds `D[a][b] = dist(a, b)`, requiring the result to be a metric.
    pub fn from_metric(n: usize, dist: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let d = Self::new(Matrix::from_fn(n, n, dist))?;
        if !d.satisfies_triangle_inequality() {
            return Err(Error::InvalidMatrix(
                "distance function violates the triangle inequality".into(),
            ));
        }
        Ok(d)
    }

    /// Location count.
    pub fn n(&self) -> usize {
        self.0.rows()
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.0[(a, b)]
    }

    pub fn row(&self, a: usize) -> &[f64] {
        self.0.row(a)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn max_entry(&self) -> f64 {
        self.0.as_slice().iter().copied().fold(0.0, f64::max)
    }

    pub fn satisfies_triangle_inequality(&self) -> bool {
        let n = self.n();
        (0..n).all(|a| {
            (0..n).all(|b| (0..n).all(|c| self.get(a, c) <= self.get(a, b) + self.get(b, c)))
        })
    }
}

fn check_bijection(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::DimensionMismatch {
            context: "permutation length",
            expected: n,
            found: perm.len(),
        });
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidPermutation(format!(
                "{perm:?} is not a bijection on 0..{n}"
            )));
        }
    }
    Ok(())
}

/// Injective assignment of `m` facilities to `n` locations.
///
/// Keeps the inverse map (location -> facility) in sync so bound/unbound
/// queries are O(1).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SubPermutation {
    assign: Vec<usize>,
    occupant: Vec<Option<usize>>,
}

impl SubPermutation {
    pub fn new(assign: Vec<usize>, n: usize) -> Result<Self> {
        if assign.len() > n {
            return Err(Error::TooManyFacilities {
                facilities: assign.len(),
                locations: n,
            });
        }
        let mut occupant = vec![None; n];
        for (f, &loc) in assign.iter().enumerate() {
            if loc >= n {
                return Err(Error::LocationOutOfRange { location: loc, n });
            }
            if let Some(other) = occupant[loc].replace(f) {
                return Err(Error::InvalidPermutation(format!(
                    "facilities {other} and {f} both assigned to location {loc}"
                )));
            }
        }
        Ok(Self { assign, occupant })
    }

    pub fn identity(n: usize) -> Self {
        Self::new((0..n).collect(), n).expect("identity is injective")
    }

    /// Parses a 0/1 matrix with unit row sums and column sums at most one.
    pub fn from_matrix(x: &Matrix) -> Result<Self> {
        let mut assign = Vec::with_capacity(x.rows());
        for r in 0..x.rows() {
            let ones: Vec<usize> = (0..x.cols()).filter(|&c| x[(r, c)] != 0.0).collect();
            if ones.len() != 1 || x[(r, ones[0])] != 1.0 {
                return Err(Error::InvalidPermutation(format!(
                    "row {r} is not a unit vector"
                )));
            }
            assign.push(ones[0]);
        }
        Self::new(assign, x.cols())
    }

    /// Facility count.
    pub fn m(&self) -> usize {
        self.assign.len()
    }

    /// Location count.
    pub fn n(&self) -> usize {
        self.occupant.len()
    }

    #[inline]
    pub fn location(&self, facility: usize) -> usize {
        self.assign[facility]
    }

    #[inline]
    pub fn occupant(&self, location: usize) -> Option<usize> {
        self.occupant[location]
    }

    #[inline]
    pub fn is_bound(&self, location: usize) -> bool {
        self.occupant[location].is_some()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assign
    }

    pub fn into_assignment(self) -> Vec<usize> {
        self.assign
    }

    /// Exchanges the occupants of two locations. A facility next to an empty
    /// location simply moves there.
    pub fn swap_locations(&mut self, a: usize, b: usize) -> Result<()> {
        let n = self.n();
        for loc in [a, b] {
            if loc >= n {
                return Err(Error::LocationOutOfRange { location: loc, n });
            }
        }
        let (fa, fb) = (self.occupant[a], self.occupant[b]);
        if let Some(f) = fa {
            self.assign[f] = b;
        }
        if let Some(f) = fb {
            self.assign[f] = a;
        }
        self.occupant[a] = fb;
        self.occupant[b] = fa;
        Ok(())
    }

    pub fn unbound_locations(&self) -> Vec<usize> {
        (0..self.n()).filter(|&l| !self.is_bound(l)).collect()
    }

    pub fn bound_set(&self) -> BoundSet {
        BoundSet {
            bound: self.assign.iter().copied().collect(),
            unbound: self.unbound_locations().into_iter().collect(),
        }
    }

    /// The m x n 0/1 matrix `X` with `X[i][P(i)] = 1`.
    pub fn to_matrix(&self) -> Matrix {
        let mut x = Matrix::zeros(self.m(), self.n());
        for (f, &loc) in self.assign.iter().enumerate() {
            x[(f, loc)] = 1.0;
        }
        x
    }
}

/// Partition of the locations into occupied and free cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundSet {
    pub bound: BTreeSet<usize>,
    pub unbound: BTreeSet<usize>,
}

/// Decides whether a facility may occupy a location.
pub trait LegalityOracle {
    fn is_legal(&self, facility: usize, location: usize) -> bool;
}

impl<T: Fn(usize, usize) -> bool> LegalityOracle for T {
    fn is_legal(&self, facility: usize, location: usize) -> bool {
        self(facility, location)
    }
}

/// Every facility fits every location.
#[derive(Debug, Clone, Copy, Default)]
pub struct Unconstrained;

impl LegalityOracle for Unconstrained {
    fn is_legal(&self, _: usize, _: usize) -> bool {
        true
    }
}

/// Checks that every facility of `p` sits on a legal location.
pub fn is_legal_placement(p: &SubPermutation, legal: &impl LegalityOracle) -> bool {
    p.assignment()
        .iter()
        .enumerate()
        .all(|(f, &loc)| legal.is_legal(f, loc))
}

fn check_instance(f: &FlowMatrix, d: &DistanceMatrix, p: &SubPermutation) -> Result<()> {
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

/// `sum_{i,j} F[i][j] * D[P(i)][P(j)]`.
pub fn qap_cost(f: &FlowMatrix, d: &DistanceMatrix, p: &SubPermutation) -> Result<f64> {
    Ok(per_facility_cost(f, d, p)?.iter().sum())
}

/// Row `i` of the cost: `sum_j F[i][j] * D[P(i)][P(j)]`.
pub fn per_facility_cost(f: &FlowMatrix, d: &DistanceMatrix, p: &SubPermutation) -> Result<Vec<f64>> {
    check_instance(f, d, p)?;
    let assign = p.assignment();
    Ok((0..f.m())
        .map(|i| {
            let drow = d.row(assign[i]);
            f.row(i)
                .iter()
                .zip(assign)
                .filter(|(w, _)| **w != 0.0)
                .map(|(w, &loc)| w * drow[loc])
                .sum()
        })
        .collect())
}

/// Bilinear cost `c(A, B) = tr(F A D B^T)` for real m x n matrices.
pub fn qap_cost_bilinear(f: &FlowMatrix, d: &DistanceMatrix, a: &Matrix, b: &Matrix) -> Result<f64> {
    for (mat, context) in [(a, "bilinear cost, first argument"), (b, "bilinear cost, second argument")] {
        if mat.rows() != f.m() {
            return Err(Error::DimensionMismatch {
                context,
                expected: f.m(),
                found: mat.rows(),
            });
        }
        if mat.cols() != d.n() {
            return Err(Error::DimensionMismatch {
                context,
                expected: d.n(),
                found: mat.cols(),
            });
        }
    }
    // tr(F A D B^T) = sum_{i,j} F[i][j] * (A D B^T)[j][i]
    let ad = a.mul(d.matrix())?;
    let mut total = 0.0;
    for i in 0..f.m() {
        for j in 0..f.m() {
            let w = f.get(i, j);
            if w == 0.0 {
                continue;
            }
            let dot: f64 = ad.row(j).iter().zip(b.row(i)).map(|(x, y)| x * y).sum();
            total += w * dot;
        }
    }
    Ok(total)
}
