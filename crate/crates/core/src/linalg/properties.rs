use super::{cholesky, eigh, hermitian_sqrt, logdet_psd, solve_psd, svd, CMatrix, C64};
use crate::channel::{gaussian_matrix, rng_stream, Purpose};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn random(rows: usize, cols: usize, seed: u64) -> CMatrix {
    gaussian_matrix(rows, cols, &mut rng_stream(seed, 0, Purpose::Search))
}

fn oracle(m: &CMatrix) -> DMatrix<C64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

fn gram_error(q: &CMatrix) -> f64 {
    (&q.adjoint_mul(q).unwrap() - &CMatrix::identity(q.cols())).frobenius_norm()
}

fn spd(n: usize, seed: u64) -> CMatrix {
    let b = random(n, n, seed);
    let mut a = b.gram_outer();
    for i in 0..n {
        a[(i, i)] += C64::new(0.5, 0.0);
    }
    a.hermitian_part()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn svd_is_orthonormal_sorted_and_reconstructs(rows in 1usize..=64, cols in 1usize..=64, seed in any::<u64>()) {
        let a = random(rows, cols, seed);
        let d = svd(&a).unwrap();
        prop_assert_eq!(d.u.shape(), (rows, rows));
        prop_assert_eq!(d.v.shape(), (cols, cols));
        prop_assert_eq!(d.s.len(), rows.min(cols));
        prop_assert!(gram_error(&d.u) <= 1e-10);
        prop_assert!(gram_error(&d.v) <= 1e-10);
        prop_assert!(d.s.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(d.s.iter().all(|&x| x >= 0.0));
        let err = (&a - &d.reconstruct()).frobenius_norm();
        prop_assert!(err <= 1e-9 * a.frobenius_norm(), "reconstruction error {}", err);

        let reference = oracle(&a).singular_values();
        let mut reference: Vec<f64> = reference.iter().copied().collect();
        reference.sort_by(|x, y| y.total_cmp(x));
        for (mine, theirs) in d.s.iter().zip(&reference) {
            prop_assert!((mine - theirs).abs() <= 1e-9 * reference[0]);
        }

        let again = svd(&a).unwrap();
        prop_assert_eq!(&again.s, &d.s);
        prop_assert_eq!(again.u.as_slice(), d.u.as_slice());
        prop_assert_eq!(again.v.as_slice(), d.v.as_slice());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn svd_sign_convention(rows in 1usize..=12, cols in 1usize..=12, seed in any::<u64>()) {
        let d = svd(&random(rows, cols, seed)).unwrap();
        for j in 0..cols {
            let first = d.v.col(j).iter().copied().find(|z| z.norm() > 1e-12).unwrap();
            prop_assert!(first.im.abs() <= 1e-12 && first.re > 0.0);
        }
    }

    #[test]
    fn svd_detects_rank(rows in 2usize..=20, cols in 2usize..=20, inner in 1usize..=20, seed in any::<u64>()) {
        let r = inner.min(rows).min(cols);
        let a = random(rows, r, seed).matmul(&random(r, cols, seed ^ 0x9e37)).unwrap();
        prop_assert_eq!(svd(&a).unwrap().rank(None), r);
    }

    #[test]
    fn logdet_of_inverse_cancels(n in 1usize..=16, seed in any::<u64>()) {
        let a = spd(n, seed);
        let inv = solve_psd(&a, &CMatrix::identity(n)).unwrap().hermitian_part();
        let sum = logdet_psd(&a).unwrap() + logdet_psd(&inv).unwrap();
        prop_assert!(sum.abs() <= 1e-8, "{}", sum);

        let reference = oracle(&a).cholesky().unwrap().determinant().log2();
        prop_assert!((logdet_psd(&a).unwrap() - reference).abs() <= 1e-9 * reference.abs().max(1.0));
    }

    #[test]
    fn solve_has_small_residual(n in 1usize..=16, k in 1usize..=6, seed in any::<u64>()) {
        let a = spd(n, seed);
        let b = random(n, k, seed.wrapping_add(1));
        let x = solve_psd(&a, &b).unwrap();
        let res = (&a.matmul(&x).unwrap() - &b).frobenius_norm();
        prop_assert!(res <= 1e-9 * b.frobenius_norm());
        let l = cholesky(&a).unwrap();
        prop_assert!((&l.matmul(&l.adjoint()).unwrap() - &a).frobenius_norm() <= 1e-10 * a.frobenius_norm());
    }

    #[test]
    fn determinant_lemma(seed in any::<u64>()) {
        let v = random(3, 1, seed);
        let mut a = v.gram_outer();
        for i in 0..3 {
            a[(i, i)] += C64::new(1.0, 0.0);
        }
        let expected = (1.0 + v.frobenius_norm().powi(2)).log2();
        prop_assert!((logdet_psd(&a.hermitian_part()).unwrap() - expected).abs() <= 1e-12 * expected.max(1.0));
    }

    #[test]
    fn eigh_matches_oracle_and_square_root_squares_back(n in 1usize..=12, seed in any::<u64>()) {
        let a = spd(n, seed);
        let (vals, vecs) = eigh(&a).unwrap();
        let mut reference: Vec<f64> = oracle(&a).symmetric_eigenvalues().iter().copied().collect();
        reference.sort_by(|x, y| x.total_cmp(y));
        for (mine, theirs) in vals.iter().zip(&reference) {
            prop_assert!((mine - theirs).abs() <= 1e-9 * reference[n - 1]);
        }
        prop_assert!(gram_error(&vecs) <= 1e-10);
        let root = hermitian_sqrt(&a).unwrap();
        prop_assert!((&root.matmul(&root).unwrap() - &a).frobenius_norm() <= 1e-9 * a.frobenius_norm());
    }
}

#[test]
fn svd_worked_examples() {
    let d = svd(&CMatrix::identity(3)).unwrap();
    assert_eq!(d.s, vec![1.0, 1.0, 1.0]);

    let q = svd(&random(2, 2, 7)).unwrap().u;
    let diag = CMatrix::from_real_diagonal(&[3.0, 2.0]);
    let rotated = q.matmul(&diag).unwrap().matmul(&q.adjoint()).unwrap();
    let s = svd(&rotated).unwrap().s;
    assert!((s[0] - 3.0).abs() < 1e-12 && (s[1] - 2.0).abs() < 1e-12);

    let a = random(4, 6, 11);
    let d = svd(&a).unwrap();
    let (gram_vals, _) = eigh(&a.gram_outer().hermitian_part()).unwrap();
    for (s, l) in d.s.iter().zip(gram_vals.iter().rev()) {
        assert!((s * s - l).abs() <= 1e-10 * gram_vals[3]);
    }
}
