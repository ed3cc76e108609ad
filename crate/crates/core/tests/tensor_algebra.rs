mod common;

use common::*;
use proptest::prelude::*;
use tubal_core::tensor::{dft3, idft3, ttranspose};
use tubal_core::{tprod, Shape3, Tensor3};

fn dims() -> impl Strategy<Value = (usize, usize, usize, usize, u64)> {
    (1usize..=6, 1usize..=6, 1usize..=6, 1usize..=6, any::<u64>())
}

#[test]
fn fft_product_matches_circular_convolution() {
    let mut g = rng(11);
    for _ in 0..100 {
        let (m, r, n, k) = (
            rand::Rng::random_range(&mut g, 1..=6),
            rand::Rng::random_range(&mut g, 1..=6),
            rand::Rng::random_range(&mut g, 1..=6),
            rand::Rng::random_range(&mut g, 1..=6),
        );
        let a = random_tensor(&mut g, Shape3::new(m, r, k));
        let b = random_tensor(&mut g, Shape3::new(r, n, k));
        assert!(rel_err(&tprod(&a, &b).unwrap(), &tprod_direct(&a, &b)) <= 1e-12);
    }
}

#[test]
fn single_tube_product_is_circular_convolution() {
    let a = Tensor3::from_vec(Shape3::new(1, 1, 4), vec![1.0, 2.0, 0.0, -1.0]).unwrap();
    let b = Tensor3::from_vec(Shape3::new(1, 1, 4), vec![0.0, 1.0, 0.0, 0.0]).unwrap();
    // convolving with a unit delay shifts by one
    assert_eq!(tprod(&a, &b).unwrap().as_slice(), &[-1.0, 1.0, 2.0, 0.0]);
}

#[test]
fn mismatched_shapes_are_rejected() {
    let a = Tensor3::zeros(Shape3::new(2, 3, 4));
    assert!(tprod(&a, &Tensor3::zeros(Shape3::new(2, 3, 4))).is_err());
    assert!(tprod(&a, &Tensor3::zeros(Shape3::new(3, 3, 5))).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn product_agrees_with_oracle((m, r, n, k, seed) in dims()) {
        let mut g = rng(seed);
        let a = random_tensor(&mut g, Shape3::new(m, r, k));
        let b = random_tensor(&mut g, Shape3::new(r, n, k));
        prop_assert!(rel_err(&tprod(&a, &b).unwrap(), &tprod_direct(&a, &b)) <= 1e-10);
    }

    #[test]
    fn identity_is_neutral((m, n, _r, k, seed) in dims()) {
        let a = random_tensor(&mut rng(seed), Shape3::new(m, n, k));
        let left = tprod(&Tensor3::identity(m, k), &a).unwrap();
        let right = tprod(&a, &Tensor3::identity(n, k)).unwrap();
        prop_assert!(rel_err(&left, &a) <= 1e-12);
        prop_assert!(rel_err(&right, &a) <= 1e-12);
    }

    #[test]
    fn product_is_associative((m, r, n, k, seed) in dims(), p in 1usize..=5) {
        let mut g = rng(seed);
        let a = random_tensor(&mut g, Shape3::new(m, r, k));
        let b = random_tensor(&mut g, Shape3::new(r, n, k));
        let c = random_tensor(&mut g, Shape3::new(n, p, k));
        let lhs = tprod(&tprod(&a, &b).unwrap(), &c).unwrap();
        let rhs = tprod(&a, &tprod(&b, &c).unwrap()).unwrap();
        prop_assert!(rel_err(&lhs, &rhs) <= 1e-10);
    }

    #[test]
    fn transpose_reverses_products((m, r, n, k, seed) in dims()) {
        let mut g = rng(seed);
        let a = random_tensor(&mut g, Shape3::new(m, r, k));
        let b = random_tensor(&mut g, Shape3::new(r, n, k));
        prop_assert_eq!(ttranspose(&a), ttranspose_direct(&a));
        let lhs = ttranspose(&tprod(&a, &b).unwrap());
        let rhs = tprod(&ttranspose(&b), &ttranspose(&a)).unwrap();
        prop_assert!(rel_err(&lhs, &rhs) <= 1e-10);
    }

    #[test]
    fn dft_round_trip_and_parseval((m, n, _r, k, seed) in dims()) {
        let a = random_tensor(&mut rng(seed), Shape3::new(m, n, k));
        let spec = dft3(&a);
        prop_assert!(rel_err(&idft3(&spec).unwrap(), &a) <= 1e-12);
        let energy = spec.energy();
        prop_assert!((energy - k as f64 * a.fro_norm_sq()).abs() <= 1e-10 * energy.max(1.0));
    }

    #[test]
    fn product_is_bilinear((m, r, n, k, seed) in dims(), alpha in -3.0f64..3.0) {
        let mut g = rng(seed);
        let a = random_tensor(&mut g, Shape3::new(m, r, k));
        let b1 = random_tensor(&mut g, Shape3::new(r, n, k));
        let b2 = random_tensor(&mut g, Shape3::new(r, n, k));
        let lhs = tprod(&a, &b1.axpy(alpha, &b2).unwrap()).unwrap();
        let rhs = tprod(&a, &b1).unwrap().axpy(alpha, &tprod(&a, &b2).unwrap()).unwrap();
        prop_assert!(sub(&lhs, &rhs).max_abs() <= 1e-10 * (1.0 + rhs.max_abs()));
    }
}
