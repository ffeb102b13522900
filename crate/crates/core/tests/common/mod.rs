//! Independent reference computations for the integration tests. Nothing
//! here calls into the library's cost or QUBO code.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;

pub type Dense = Vec<Vec<f64>>;

/// Triple-loop cost `sum_{i,j} F[i][j] * D[a_i][a_j]`.
pub fn naive_cost(f: &Dense, d: &Dense, assign: &[usize]) -> f64 {
    let mut total = 0.0;
    for i in 0..f.len() {
        for j in 0..f.len() {
            total += f[i][j] * d[assign[i]][assign[j]];
        }
    }
    total
}

/// Every injective map from `m` facilities into `n` locations.
pub fn all_sub_permutations(m: usize, n: usize) -> Vec<Vec<usize>> {
    fn rec(m: usize, n: usize, cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == m {
            out.push(cur.clone());
            return;
        }
        for l in 0..n {
            if !used[l] {
                used[l] = true;
                cur.push(l);
                rec(m, n, cur, used, out);
                cur.pop();
                used[l] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(m, n, &mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

pub fn brute_force_qap(f: &Dense, d: &Dense, legal: impl Fn(usize, usize) -> bool) -> f64 {
    all_sub_permutations(f.len(), d.len())
        .into_iter()
        .filter(|a| a.iter().enumerate().all(|(i, &l)| legal(i, l)))
        .map(|a| naive_cost(f, d, &a))
        .fold(f64::INFINITY, f64::min)
}

/// `x^T Q x + offset` with the dense matrix as given (not symmetrized).
pub fn naive_qubo(q: &Dense, offset: f64, x: &[bool]) -> f64 {
    let mut total = offset;
    for i in 0..q.len() {
        for j in 0..q.len() {
            if x[i] && x[j] {
                total += q[i][j];
            }
        }
    }
    total
}

pub fn bits(mask: u64, len: usize) -> Vec<bool> {
    (0..len).map(|b| mask >> b & 1 == 1).collect()
}

/// Minimum over all binary vectors with the first minimizer in mask order.
pub fn brute_force_qubo(objective: impl Fn(&[bool]) -> f64, dim: usize) -> (f64, Vec<bool>) {
    let mut best = (f64::INFINITY, Vec::new());
    for mask in 0..1u64 << dim {
        let x = bits(mask, dim);
        let v = objective(&x);
        if v < best.0 {
            best = (v, x);
        }
    }
    best
}

pub fn zeros(r: usize, c: usize) -> Dense {
    vec![vec![0.0; c]; r]
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let (r, k, c) = (a.len(), b.len(), b[0].len());
    let mut out = zeros(r, c);
    for i in 0..r {
        for t in 0..k {
            for j in 0..c {
                out[i][j] += a[i][t] * b[t][j];
            }
        }
    }
    out
}

pub fn transpose(a: &Dense) -> Dense {
    let mut out = zeros(a[0].len(), a.len());
    for (i, row) in a.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            out[j][i] = v;
        }
    }
    out
}

pub fn add(a: &Dense, b: &Dense) -> Dense {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q).collect())
        .collect()
}

pub fn sub(a: &Dense, b: &Dense) -> Dense {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p - q).collect())
        .collect()
}

pub fn trace(a: &Dense) -> f64 {
    (0..a.len()).map(|i| a[i][i]).sum()
}

/// `m x n` 0/1 matrix with `X[i][assign[i]] = 1`.
pub fn assignment_matrix(assign: &[usize], n: usize) -> Dense {
    let mut x = zeros(assign.len(), n);
    for (i, &l) in assign.iter().enumerate() {
        x[i][l] = 1.0;
    }
    x
}

pub fn identity(n: usize) -> Dense {
    let mut x = zeros(n, n);
    for (i, row) in x.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    x
}

/// `n x n` transposition matrix exchanging `a` and `b`.
pub fn transposition(n: usize, a: usize, b: usize) -> Dense {
    let mut c = identity(n);
    c[a][a] = 0.0;
    c[b][b] = 0.0;
    c[a][b] = 1.0;
    c[b][a] = 1.0;
    c
}

/// Reads an assignment back from a 0/1 matrix, checking it is a valid
/// sub-permutation matrix.
pub fn decode_assignment(x: &Dense) -> Option<Vec<usize>> {
    let n = x[0].len();
    let mut col_used = vec![false; n];
    let mut out = Vec::new();
    for row in x {
        let ones: Vec<usize> = (0..n).filter(|&l| row[l] == 1.0).collect();
        if ones.len() != 1 || row.iter().any(|&v| v != 0.0 && v != 1.0) {
            return None;
        }
        if col_used[ones[0]] {
            return None;
        }
        col_used[ones[0]] = true;
        out.push(ones[0]);
    }
    Some(out)
}

/// Symmetric nonnegative integer flow with zero diagonal.
pub fn random_flow<R: Rng>(rng: &mut R, m: usize, max: u32) -> Dense {
    let mut f = zeros(m, m);
    for i in 0..m {
        for j in i + 1..m {
            let v = rng.gen_range(0..=max) as f64;
            f[i][j] = v;
            f[j][i] = v;
        }
    }
    f
}

/// Manhattan distances between `n` distinct random points of a `side x side`
/// grid.
pub fn random_grid_distance<R: Rng>(rng: &mut R, n: usize, side: usize) -> Dense {
    let mut cells: Vec<(i64, i64)> = (0..side * side)
        .map(|c| ((c / side) as i64, (c % side) as i64))
        .collect();
    cells.shuffle(rng);
    let pts = &cells[..n];
    pts.iter()
        .map(|a| pts.iter().map(|b| ((a.0 - b.0).abs() + (a.1 - b.1).abs()) as f64).collect())
        .collect()
}

/// Random injective assignment of `m` facilities into `n` locations.
pub fn random_assignment<R: Rng>(rng: &mut R, m: usize, n: usize) -> Vec<usize> {
    let mut locs: Vec<usize> = (0..n).collect();
    locs.shuffle(rng);
    locs.truncate(m);
    locs
}

/// `s` disjoint location pairs over `[0, n)`.
pub fn random_disjoint_pairs<R: Rng>(rng: &mut R, n: usize, s: usize) -> Vec<(usize, usize)> {
    let mut locs: Vec<usize> = (0..n).collect();
    locs.shuffle(rng);
    locs.chunks(2).take(s).map(|c| (c[0], c[1])).collect()
}

/// Map of a product of disjoint transpositions; `None` if two pairs share a
/// point or a pair is degenerate.
pub fn involution_map(n: usize, pairs: &[(usize, usize)]) -> Option<Vec<usize>> {
    let mut map: Vec<usize> = (0..n).collect();
    let mut touched = vec![false; n];
    for &(a, b) in pairs {
        if a == b || touched[a] || touched[b] {
            return None;
        }
        touched[a] = true;
        touched[b] = true;
        map[a] = b;
        map[b] = a;
    }
    Some(map)
}

/// Cycle lengths of a permutation given as an image array.
pub fn cycle_lengths(perm: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; perm.len()];
    let mut out = Vec::new();
    for s in 0..perm.len() {
        if seen[s] {
            continue;
        }
        let mut len = 0;
        let mut x = s;
        while !seen[x] {
            seen[x] = true;
            x = perm[x];
            len += 1;
        }
        out.push(len);
    }
    out
}
