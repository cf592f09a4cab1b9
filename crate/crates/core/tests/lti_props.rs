mod common;

use common::*;
use msgain::lti::{dlyap, h2_norm_sq, to_state_space, H2Method, Polynomial};
use msgain::{closed_loop_block, Error, FrequencyGrid, TransferFunction};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tf_strategy(max_degree: usize, max_pole: f64) -> impl Strategy<Value = TransferFunction> {
    (1..=max_degree, any::<u64>()).prop_map(move |(deg, seed)| {
        random_stable_tf(&mut ChaCha8Rng::seed_from_u64(seed), deg, max_pole)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conjugate_symmetry(tf in tf_strategy(4, 0.95), w in 0.0..std::f64::consts::PI) {
        let a = tf.evaluate(w).unwrap();
        let b = tf.evaluate(-w).unwrap();
        prop_assert!((a - b.conj()).norm() <= 1e-12 * (1.0 + a.norm()));
    }

    #[test]
    fn realization_matches_transfer_function(tf in tf_strategy(4, 0.95), seed in any::<u64>()) {
        let ss = to_state_space(&tf);
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..16 {
            let w = r.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            let want = eval_tf(&tf, Complex64::from_polar(1.0, w));
            let got = ss.frequency_response(w).unwrap()[(0, 0)];
            prop_assert!((want - got).norm() <= 1e-10 * (1.0 + want.norm()), "{want} vs {got}");
        }
    }

    #[test]
    fn dlyap_residual(seed in any::<u64>(), n in 1usize..6) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let mut a = DMatrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
        let rho = msgain::spectral_radius(&a).unwrap();
        if rho > 0.0 {
            a *= 0.95 / rho.max(0.95);
        }
        let l = DMatrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
        let q = &l * l.transpose();
        let x = dlyap(&a, &q).unwrap();
        let res = &a * &x * a.transpose() - &x + &q;
        let scale = 1.0 + x.norm() * (1.0 + a.norm().powi(2)) + q.norm();
        prop_assert!(res.norm() <= 1e-10 * scale, "residual {}", res.norm());
        prop_assert!((&x - x.transpose()).norm() == 0.0);
    }

    #[test]
    fn closed_loop_block_columns_are_proportional(p in 1.05..3.0f64, s in -0.9..0.9f64, w in -3.0..3.0f64) {
        // Plant (z - s)/(z - p) at a gain inside its stabilizing interval.
        let plant = TransferFunction::from_coeffs(&[1.0, -s], &[1.0, -p]).unwrap();
        let (lo, hi) = msgain::stabilizability::jury_gain_interval(p, s).unwrap();
        let k = 0.5 * (lo + hi);
        let g = closed_loop_block(&plant, k).unwrap();
        let m = g.evaluate(w).unwrap();
        // First column is k times the second: rank one.
        prop_assert!((m[(0, 0)] - m[(0, 1)] * k).norm() < 1e-12 * (1.0 + m.norm()));
        prop_assert!((m[(1, 0)] - m[(1, 1)] * k).norm() < 1e-12 * (1.0 + m.norm()));
        // Sensitivity plus complementary sensitivity is one.
        prop_assert!((m[(1, 1)] + m[(0, 0)] - 1.0).norm() < 1e-12 * (1.0 + m.norm()));
    }
}

#[test]
fn h2_methods_agree_with_impulse_oracle() {
    let mut r = rng(2024);
    for _ in 0..50 {
        let deg = r.random_range(1..=4);
        let tf = random_stable_tf(&mut r, deg, 0.9);
        let oracle = h2_by_impulse(&tf);
        let lyap = h2_norm_sq(&tf, H2Method::Lyapunov, FrequencyGrid::default()).unwrap();
        let quad = h2_norm_sq(&tf, H2Method::Quadrature, FrequencyGrid::default()).unwrap();
        let scale = 1.0 + oracle;
        assert!((lyap - oracle).abs() <= 1e-8 * scale, "{tf:?}: lyap {lyap} oracle {oracle}");
        assert!((quad - oracle).abs() <= 1e-8 * scale, "{tf:?}: quad {quad} oracle {oracle}");
        assert!((lyap - quad).abs() <= 1e-8 * scale);
    }
}

#[test]
fn h2_first_order_analytic() {
    let tf = TransferFunction::first_order(0.5);
    for m in [H2Method::Lyapunov, H2Method::Quadrature] {
        let v = h2_norm_sq(&tf, m, FrequencyGrid::default()).unwrap();
        assert!((v - 4.0 / 3.0).abs() < 1e-10);
    }
}

#[test]
fn polynomial_roots_reconstruct() {
    let mut r = rng(7);
    for _ in 0..50 {
        let deg = r.random_range(1..=6);
        let roots: Vec<f64> = (0..deg).map(|_| r.random_range(-2.0..2.0)).collect();
        let p = Polynomial::from_real_roots(&roots);
        let found = p.roots().unwrap();
        assert_eq!(found.len(), deg);
        for z in found {
            assert!(p.eval(z).norm() <= p.root_residual_bound(z) + 1e-9, "{z}");
        }
    }
}

#[test]
fn unstable_and_degenerate_inputs_are_rejected() {
    let unstable = TransferFunction::from_coeffs(&[1.0], &[1.0, -1.2]).unwrap();
    assert_eq!(
        h2_norm_sq(&unstable, H2Method::Lyapunov, FrequencyGrid::default()),
        Err(Error::UnstableH2)
    );
    assert!(matches!(
        TransferFunction::from_coeffs(&[1.0, 0.0, 0.0], &[1.0, 0.5]),
        Err(Error::Improper { .. })
    ));
    assert!(matches!(
        TransferFunction::from_coeffs(&[1.0], &[0.0]),
        Err(Error::ZeroDenominator)
    ));
    assert!(matches!(FrequencyGrid::new(32), Err(Error::GridTooSmall { .. })));
}
