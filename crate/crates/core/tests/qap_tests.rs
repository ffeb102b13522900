mod common;

use proptest::prelude::*;
use qplace_core::qap::{
    per_facility_cost, qap_cost, qap_cost_bilinear, DistanceMatrix, FlowMatrix, Matrix, SubPermutation,
};
use qplace_core::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;

fn instance(seed: u64, m: usize, n: usize) -> (Dense, Dense, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (
        random_flow(&mut rng, m, 5),
        random_grid_distance(&mut rng, n, 4),
        random_assignment(&mut rng, m, n),
    )
}

fn dense(x: &Dense) -> Matrix {
    Matrix::from_rows(x).unwrap()
}

#[test]
fn per_facility_rows_sum_to_twice_pair_cost() {
    let (f, d, a) = instance(3, 4, 7);
    let p = SubPermutation::new(a.clone(), 7).unwrap();
    let (fm, dm) = (FlowMatrix::from_rows(&f).unwrap(), DistanceMatrix::from_rows(&d).unwrap());
    let rows = per_facility_cost(&fm, &dm, &p).unwrap();
    let mut pairs = 0.0;
    for i in 0..4 {
        for j in i + 1..4 {
            pairs += f[i][j] * d[a[i]][a[j]];
        }
    }
    assert_eq!(rows.iter().sum::<f64>(), 2.0 * pairs);
    assert_eq!(qap_cost(&fm, &dm, &p).unwrap(), 2.0 * pairs);
}

#[test]
fn trace_form_matches_dense_oracle() {
    let (f, d, a) = instance(9, 3, 5);
    let x = assignment_matrix(&a, 5);
    let oracle = trace(&matmul(&matmul(&matmul(&f, &x), &d), &transpose(&x)));
    let fm = FlowMatrix::from_rows(&f).unwrap();
    let dm = DistanceMatrix::from_rows(&d).unwrap();
    assert_eq!(qap_cost_bilinear(&fm, &dm, &dense(&x), &dense(&x)).unwrap(), oracle);
    assert_eq!(oracle, naive_cost(&f, &d, &a));
}

#[test]
fn balanced_padding_agrees_with_sub_permutation_cost() {
    // zero-padding F to n x n with dummy facilities on the free locations
    let (f, d, a) = instance(21, 3, 6);
    let mut padded = zeros(6, 6);
    for i in 0..3 {
        for j in 0..3 {
            padded[i][j] = f[i][j];
        }
    }
    let mut full = a.clone();
    full.extend((0..6).filter(|l| !a.contains(l)));
    assert_eq!(naive_cost(&padded, &d, &full), naive_cost(&f, &d, &a));
    let p = SubPermutation::new(full, 6).unwrap();
    let cost = qap_cost(&FlowMatrix::from_rows(&padded).unwrap(), &DistanceMatrix::from_rows(&d).unwrap(), &p);
    assert_eq!(cost.unwrap(), naive_cost(&f, &d, &a));
}

#[test]
fn facility_count_mismatch_is_rejected() {
    let f = FlowMatrix::zeros(3);
    let d = DistanceMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
    let p = SubPermutation::new(vec![0, 1], 2).unwrap();
    assert!(matches!(qap_cost(&f, &d, &p), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn invalid_matrices_are_rejected() {
    assert!(FlowMatrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
    assert!(FlowMatrix::from_rows(&[vec![1.0]]).is_err());
    assert!(FlowMatrix::from_rows(&[vec![0.0, -1.0], vec![-1.0, 0.0]]).is_err());
    assert!(DistanceMatrix::from_rows(&[vec![0.0, f64::NAN], vec![f64::NAN, 0.0]]).is_err());
    assert!(DistanceMatrix::from_metric(3, |a, b| if a == b { 0.0 } else if a + b == 2 { 5.0 } else { 1.0 }).is_err());
}

#[test]
fn sub_permutation_validation() {
    assert!(SubPermutation::new(vec![0, 0], 3).is_err());
    assert!(SubPermutation::new(vec![3], 3).is_err());
    assert!(SubPermutation::new(vec![0, 1, 2, 3], 3).is_err());
    let p = SubPermutation::new(vec![2, 0], 4).unwrap();
    assert_eq!(p.unbound_locations(), vec![1, 3]);
    let back = SubPermutation::from_matrix(&p.to_matrix()).unwrap();
    assert_eq!(back, p);
}

proptest! {
    #[test]
    fn cost_equals_bilinear_and_naive(seed in any::<u64>(), m in 1usize..6, extra in 0usize..4) {
        let n = m + extra;
        let (f, d, a) = instance(seed, m, n);
        let fm = FlowMatrix::from_rows(&f).unwrap();
        let dm = DistanceMatrix::from_rows(&d).unwrap();
        let p = SubPermutation::new(a.clone(), n).unwrap();
        let x = p.to_matrix();
        let c = qap_cost(&fm, &dm, &p).unwrap();
        prop_assert_eq!(c, naive_cost(&f, &d, &a));
        prop_assert_eq!(c, qap_cost_bilinear(&fm, &dm, &x, &x).unwrap());
    }

    #[test]
    fn real_valued_cost_matches_to_relative_precision(seed in any::<u64>(), m in 1usize..6) {
        let n = m + 2;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, d, a) = instance(seed, m, n);
        let scale = |x: &Dense, rng: &mut ChaCha8Rng| -> Dense {
            let mut y = x.clone();
            for i in 0..y.len() {
                for j in i + 1..y.len() {
                    let v = y[i][j] * rand::Rng::gen_range(rng, 0.1..3.0);
                    y[i][j] = v;
                    y[j][i] = v;
                }
            }
            y
        };
        let (f, d) = (scale(&f, &mut rng), scale(&d, &mut rng));
        let fm = FlowMatrix::from_rows(&f).unwrap();
        let dm = DistanceMatrix::from_rows(&d).unwrap();
        let p = SubPermutation::new(a.clone(), n).unwrap();
        let x = p.to_matrix();
        let c = qap_cost(&fm, &dm, &p).unwrap();
        let b = qap_cost_bilinear(&fm, &dm, &x, &x).unwrap();
        prop_assert!((c - b).abs() <= 1e-9 * c.abs().max(1.0));
    }

    #[test]
    fn relabeling_facilities_preserves_cost(seed in any::<u64>(), m in 1usize..7) {
        let n = m + 2;
        let (f, d, a) = instance(seed, m, n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        let perm = random_assignment(&mut rng, m, m);
        let fm = FlowMatrix::from_rows(&f).unwrap();
        let dm = DistanceMatrix::from_rows(&d).unwrap();
        let relabeled = fm.relabel(&perm).unwrap();
        let moved: Vec<usize> = perm.iter().map(|&i| a[i]).collect();
        let before = qap_cost(&fm, &dm, &SubPermutation::new(a, n).unwrap()).unwrap();
        let after = qap_cost(&relabeled, &dm, &SubPermutation::new(moved, n).unwrap()).unwrap();
        prop_assert_eq!(before, after);
    }
}
