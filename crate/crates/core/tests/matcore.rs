use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;
use robust_mc::matcore::svd::{svd, truncated_svd};
use robust_mc::matcore::{frob_norm, spectral_norm, DenseMatrix, RngStream};

fn random(rows: usize, cols: usize, rng: &mut RngStream) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random::<f64>() * 2.0 - 1.0)
}

fn to_na(a: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(a.rows(), a.cols(), a.as_slice())
}

fn rel_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    frob_norm(&a.sub(b).unwrap()).unwrap() / frob_norm(b).unwrap()
}

#[test]
fn matmul_matches_triple_loop() {
    let mut rng = RngStream::new(7, 0);
    let a = random(7, 5, &mut rng);
    let b = random(5, 3, &mut rng);
    let mut oracle = DenseMatrix::zeros(7, 3);
    for i in 0..7 {
        for j in 0..3 {
            let mut acc = 0.0;
            for k in 0..5 {
                acc += a[(i, k)] * b[(k, j)];
            }
            oracle.as_mut_slice()[i * 3 + j] = acc;
        }
    }
    assert!(rel_diff(&a.matmul(&b).unwrap(), &oracle) <= 1e-13);
    assert!(rel_diff(&a.transpose().t_matmul(&b).unwrap(), &oracle) <= 1e-13);
    assert!(rel_diff(&a.matmul_t(&b.transpose()).unwrap(), &oracle) <= 1e-13);
}

#[test]
fn spectral_norm_matches_nalgebra() {
    let mut rng = RngStream::new(8, 0);
    for _ in 0..10 {
        let a = random(6, 6, &mut rng);
        let oracle = to_na(&a).singular_values().max();
        assert!((spectral_norm(&a).unwrap() - oracle).abs() <= 1e-9 * oracle);
    }
}

#[test]
fn full_svd_matches_nalgebra_spectrum() {
    let mut rng = RngStream::new(9, 0);
    for (r, c) in [(30, 30), (25, 9), (9, 25)] {
        let a = random(r, c, &mut rng);
        let d = svd(&a).unwrap();
        let mut oracle: Vec<f64> = to_na(&a).singular_values().iter().copied().collect();
        oracle.sort_by(|x, y| y.total_cmp(x));
        for (s, o) in d.s.iter().zip(&oracle) {
            assert!((s - o).abs() <= 1e-10 * oracle[0]);
        }
        assert!(rel_diff(&d.reconstruct(), &a) <= 1e-12);
    }
}

#[test]
fn truncated_svd_on_large_matrix_matches_nalgebra() {
    // Large enough to take the subspace-iteration path.
    let mut rng = RngStream::new(10, 0);
    let (n, k) = (150, 5);
    let spectrum: Vec<f64> = (0..n)
        .map(|i| if i < k { 10.0 - i as f64 } else { 0.01 })
        .collect();
    let q1 = robust_mc::synth::random_orthonormal(n, n, &mut rng).unwrap();
    let q2 = robust_mc::synth::random_orthonormal(n, n, &mut rng).unwrap();
    let a = q1.scale_columns(&spectrum).unwrap().matmul_t(&q2).unwrap();
    let noise = random(n, n, &mut rng).scale(1e-3);
    let a = a.add(&noise).unwrap();
    let d = truncated_svd(&a, k).unwrap();
    let mut oracle: Vec<f64> = to_na(&a).singular_values().iter().copied().collect();
    oracle.sort_by(|x, y| y.total_cmp(x));
    for i in 0..k {
        assert!(
            (d.s[i] - oracle[i]).abs() <= 1e-8 * oracle[0],
            "σ_{i}: {} vs {}",
            d.s[i],
            oracle[i]
        );
    }
    let ortho =
        d.u.t_matmul(&d.u)
            .unwrap()
            .sub(&DenseMatrix::identity(k))
            .unwrap();
    assert!(frob_norm(&ortho).unwrap() <= 1e-10);
}

fn matrix_strategy(rows: usize, cols: usize) -> impl Strategy<Value = DenseMatrix> {
    prop::collection::vec(-10.0f64..10.0, rows * cols)
        .prop_map(move |v| DenseMatrix::new(rows, cols, v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matmul_is_associative(
        a in matrix_strategy(4, 3),
        b in matrix_strategy(3, 5),
        c in matrix_strategy(5, 2),
    ) {
        let left = a.matmul(&b).unwrap().matmul(&c).unwrap();
        let right = a.matmul(&b.matmul(&c).unwrap()).unwrap();
        let scale = frob_norm(&left).unwrap().max(1e-300);
        prop_assert!(frob_norm(&left.sub(&right).unwrap()).unwrap() <= 1e-10 * scale);
    }

    #[test]
    fn norm_ordering(a in matrix_strategy(5, 3)) {
        let s = spectral_norm(&a).unwrap();
        let f = frob_norm(&a).unwrap();
        prop_assert!(s <= f * (1.0 + 1e-12));
        prop_assert!(f <= 3f64.sqrt() * s * (1.0 + 1e-12) + 1e-300);
    }
}
