mod common;

use craft::numerics::{invert, min_sym_eig, pca_basis, solve, spectral_norm, Matrix};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::random_matrix;

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.data())
}

#[test]
fn spectral_norm_matches_svd() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (r, c) in [(1, 1), (3, 3), (5, 2), (2, 7), (20, 20), (40, 40)] {
        let m = random_matrix(&mut rng, r, c, 1.0);
        let expected = to_na(&m).singular_values().max();
        let got = spectral_norm(&m).unwrap();
        assert!((got - expected).abs() <= 1e-10 * expected.max(1.0), "{r}x{c}: {got} vs {expected}");
    }
}

#[test]
fn spectral_norm_with_repeated_top_singular_value() {
    // An orthogonal matrix scaled by 3 has every singular value equal to 3.
    let q = to_na(&random_matrix(&mut ChaCha8Rng::seed_from_u64(2), 30, 30, 1.0)).qr().q() * 3.0;
    let m = Matrix::new(30, 30, q.transpose().as_slice().to_vec()).unwrap();
    assert!((spectral_norm(&m).unwrap() - 3.0).abs() < 1e-10);
}

#[test]
fn min_sym_eig_matches_symmetric_eigen() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [1, 2, 5, 12, 30] {
        let m = random_matrix(&mut rng, n, n, 1.0);
        let na = to_na(&m);
        let sym = (&na + na.transpose()) * 0.5;
        let expected = sym.symmetric_eigen().eigenvalues.min();
        let got = min_sym_eig(&m).unwrap();
        assert!((got - expected).abs() < 1e-7, "n={n}: {got} vs {expected}");
    }
}

#[test]
fn inverse_and_solve_match() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for n in [1, 3, 10, 25] {
        let m = random_matrix(&mut rng, n, n, 1.0).add(&Matrix::identity(n).scale(2.0));
        let expected = to_na(&m).try_inverse().unwrap();
        let got = to_na(&invert(&m).unwrap());
        assert!((got - &expected).amax() < 1e-9);
        let b: Vec<f64> = (0..n).map(|i| i as f64 - 1.5).collect();
        let x = solve(&m, &b).unwrap();
        let want = expected * DMatrix::from_column_slice(n, 1, &b);
        for i in 0..n {
            assert!((x[i] - want[i]).abs() < 1e-9);
        }
    }
}

#[test]
fn pca_basis_spans_left_singular_vectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (p, k) in [(2, 5), (6, 6), (10, 25)] {
        let a = random_matrix(&mut rng, p, k, 1.0);
        let b = to_na(&pca_basis(&a));
        assert!((b.transpose() * &b - DMatrix::identity(p, p)).amax() < 1e-10);
        let svd = to_na(&a).svd(true, false);
        let u = svd.u.unwrap();
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&i, &j| svd.singular_values[j].partial_cmp(&svd.singular_values[i]).unwrap());
        for (col, &i) in order.iter().enumerate() {
            let d = b.column(col).dot(&u.column(i)).abs();
            assert!((d - 1.0).abs() < 1e-8, "p={p} column {col}: |<b, u>| = {d}");
        }
    }
}

#[test]
fn pca_basis_completes_rank_deficient_input() {
    let a = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0], [0.0, 0.0]]).unwrap();
    let b = to_na(&pca_basis(&a));
    assert!((b.transpose() * &b - DMatrix::identity(3, 3)).amax() < 1e-12);
    let lead = b.column(0);
    let dir = nalgebra::DVector::from_vec(vec![1.0, 2.0, 0.0]).normalize();
    assert!((lead.dot(&dir).abs() - 1.0).abs() < 1e-12);
}
