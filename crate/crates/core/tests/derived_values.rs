//! Hand-derived reference values, frozen as constants and checked against
//! the public API.

mod common;

use oversmooth::graph::{barabasi_albert, gcn_dominant_eigenvector, row_stochastic_adjacency, sym_norm_adjacency, Graph};
use oversmooth::hilbert::{activation_eigenvector_check, column_hilbert_radius, hilbert_distance, ConeVector};
use oversmooth::linalg::{
    frobenius_norm, power_iteration, singular_values, spectral_gap, spectral_norm, DenseMatrix, POWER_MAX_ITER,
    POWER_TOL,
};
use oversmooth::metrics::{dirichlet_energy, effective_rank, numerical_rank, projection_energy, stable_rank};
use oversmooth::pipeline::pearson;
use oversmooth::propagate::{gat_attention, gcn_layer, ActivationKind};

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn linear_algebra_values() {
    assert_eq!(frobenius_norm(&DenseMatrix::from_rows(&[[3.0, 4.0]]).unwrap()), 5.0);
    let ones = DenseMatrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
    let s = singular_values(&ones).unwrap();
    assert!(close(s[0], 2.0, 1e-14) && s[1] == 0.0);
    assert!(close(spectral_norm(&ones).unwrap(), 2.0, 1e-12));

    let half = DenseMatrix::from_rows(&[[0.5, 0.5], [0.5, 0.5]]).unwrap();
    let pair = power_iteration(&half, POWER_TOL, POWER_MAX_ITER).unwrap();
    assert!(close(pair.value, 1.0, 1e-12));
    assert!(pair.vector.iter().all(|v| close(*v, SQRT_HALF, 1e-12)));
    assert!(spectral_gap(&half).unwrap() < 1e-10);
    let a3 = DenseMatrix::from_rows(&[[0.0, 1.0], [0.5, 0.5]]).unwrap();
    assert!(close(spectral_gap(&a3).unwrap(), 0.5, 1e-9));
}

#[test]
fn graph_values() {
    let g = barabasi_albert(10, 2, 7).unwrap();
    assert!(g.is_connected());
    assert_eq!(g.edges().len(), 3 + 7 * 2);

    let edge = Graph::new(2, &[(0, 1)]).unwrap();
    let half = DenseMatrix::from_rows(&[[0.5, 0.5], [0.5, 0.5]]).unwrap();
    assert_eq!(sym_norm_adjacency(&edge), half);
    assert_eq!(row_stochastic_adjacency(&edge), half);
    let tri = Graph::new(3, &[(0, 1), (0, 2), (1, 2)]).unwrap();
    assert!(sym_norm_adjacency(&tri).data().iter().all(|v| close(*v, 1.0 / 3.0, 1e-15)));
    let path = Graph::new(3, &[(0, 1), (1, 2)]).unwrap();
    assert!(row_stochastic_adjacency(&path).row(1).iter().all(|v| close(*v, 1.0 / 3.0, 1e-15)));

    let u = gcn_dominant_eigenvector(&edge).unwrap();
    assert!(u.iter().all(|v| close(*v, SQRT_HALF, 1e-15)));
    let u = gcn_dominant_eigenvector(&path).unwrap();
    let norm = (2.0 + 3.0 + 2.0f64).sqrt();
    let expect = [2f64.sqrt() / norm, 3f64.sqrt() / norm, 2f64.sqrt() / norm];
    assert!(u.iter().zip(expect).all(|(a, b)| close(*a, b, 1e-15)));
}

#[test]
fn propagation_values() {
    let half = DenseMatrix::from_rows(&[[0.5, 0.5], [0.5, 0.5]]).unwrap();
    let x = DenseMatrix::from_rows(&[[1.0], [3.0]]).unwrap();
    let out = gcn_layer(&half, &x, &DenseMatrix::identity(1), ActivationKind::Identity, None, None).unwrap();
    assert_eq!(out.data(), &[2.0, 2.0]);

    let edge = Graph::new(2, &[(0, 1)]).unwrap();
    let x = DenseMatrix::from_rows(&[[3f64.ln()], [0.0]]).unwrap();
    let a = gat_attention(&x, &DenseMatrix::identity(1), &[0.0], &[1.0], &edge, 0.2).unwrap();
    assert!(close(a[(0, 0)], 0.75, 1e-15) && close(a[(0, 1)], 0.25, 1e-15));
}

#[test]
fn metric_values() {
    let edge = Graph::new(2, &[(0, 1)]).unwrap();
    let x = DenseMatrix::from_rows(&[[2.0], [0.0]]).unwrap();
    let s2 = 2f64.sqrt();
    assert!(close(dirichlet_energy(&x, &edge, &[s2, s2]).unwrap(), 2.0, 1e-14));
    let x = DenseMatrix::from_rows(&[[0.0], [1.0]]).unwrap();
    assert_eq!(projection_energy(&x, &[1.0, 0.0]).unwrap(), 1.0);

    let d = DenseMatrix::from_diag(&[2.0, 1.0]);
    assert!(close(numerical_rank(&d).unwrap(), 1.25, 1e-14));
    assert!(close(stable_rank(&d).unwrap(), 1.8, 1e-14));
    let erank = (3f64.ln() - (2.0 / 3.0) * 2f64.ln()).exp();
    assert!(close(effective_rank(&d).unwrap(), erank, 1e-14));
    assert!(close(erank, 1.8899, 1e-4));
}

#[test]
fn hilbert_values() {
    let c = |v: &[f64]| ConeVector::new(v.to_vec()).unwrap();
    assert!(close(hilbert_distance(&c(&[2.0, 1.0]), &c(&[1.0, 1.0])).unwrap(), 2f64.ln(), 1e-15));
    let x = DenseMatrix::from_rows(&[[2.0, 1.0], [1.0, 1.0]]).unwrap();
    assert!(close(column_hilbert_radius(&x, &c(&[1.0, 1.0])).unwrap(), 2f64.ln(), 1e-15));
    assert!(!activation_eigenvector_check(ActivationKind::Tanh, &c(&[1.0, 2.0]), &[1.0]));
}

#[test]
fn pearson_value() {
    let r = pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap();
    assert!(close(r, 0.5, 1e-15));
    assert!(close(common::textbook_pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]), 0.5, 1e-15));
}

#[test]
fn singular_values_match_reference_paths() {
    let mut rng = oversmooth::rng::Xoshiro256pp::seed_from_u64(99);
    for rows in 1..=12 {
        for cols in 1..=12 {
            let x = common::random_matrix(rows, cols, &mut rng);
            let ours = singular_values(&x).unwrap();
            let reference = common::oracle_singular_values(&x);
            for (a, b) in ours.iter().zip(&reference) {
                assert!(close(*a, *b, 1e-9), "{rows}x{cols}: {ours:?} vs {reference:?}");
            }
        }
    }
}

#[test]
fn reference_paths_agree_with_each_other() {
    let mut rng = oversmooth::rng::Xoshiro256pp::seed_from_u64(5);
    for n in [2usize, 3] {
        for _ in 0..50 {
            let x = common::random_matrix(n, n + 4, &mut rng);
            let g: Vec<Vec<f64>> = (0..n)
                .map(|i| (0..n).map(|j| x.row(i).iter().zip(x.row(j)).map(|(a, b)| a * b).sum()).collect())
                .collect();
            let mut closed = if n == 2 { common::eig2(&g) } else { common::eig3(&g) };
            closed.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let sturm = common::eig_sturm(&g);
            for (a, b) in closed.iter().zip(&sturm) {
                assert!(close(*a, *b, 1e-10), "{closed:?} vs {sturm:?}");
            }
        }
    }
}
