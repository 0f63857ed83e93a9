mod common;

use common::*;
use hum_spectral::initial_data::*;
use hum_spectral::operators1d::EigenBasis;
use hum_spectral::quadrature::lgl_rule;
use hum_spectral::HumError;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn interpolation_reproduces_the_cubic() {
    let rule = lgl_rule(12).unwrap();
    let (u0, u1) = interpolate_data(|x| x * (1.0 - x * x), |_| 0.0, &rule).unwrap();
    for (i, &x) in rule.nodes().iter().enumerate() {
        assert!((u0[i] - x * (1.0 - x * x)).abs() < 1e-15);
        assert_eq!(u1[i], 0.0);
    }
    for x in [-0.77, 0.1, 0.93] {
        assert!((rule.interpolate(&u0, x).unwrap() - x * (1.0 - x * x)).abs() < 1e-13);
    }
}

#[test]
fn boundary_values_are_forced_to_zero() {
    let rule = lgl_rule(6).unwrap();
    let (u0, _) = interpolate_data(|_| 1.0, |_| 2.0, &rule).unwrap();
    assert_eq!((u0[0], u0[6]), (0.0, 0.0));
    let (a, b) = interpolate_samples(&[3.0; 7], &[1.0; 7], &rule).unwrap();
    assert_eq!((a[0], a[6], b[0], b[6]), (0.0, 0.0, 0.0, 0.0));
    assert_eq!(a[3], 3.0);
}

#[test]
fn invalid_samples_are_rejected() {
    let rule = lgl_rule(6).unwrap();
    assert!(matches!(
        interpolate_samples(&[0.0; 5], &[0.0; 7], &rule),
        Err(HumError::Dimension { .. })
    ));
    let mut bad = vec![0.0; 7];
    bad[2] = f64::NAN;
    assert!(matches!(
        interpolate_samples(&bad, &[0.0; 7], &rule),
        Err(HumError::InvalidData(_))
    ));
    assert!(interpolate_data(|x| 1.0 / x, |_| 0.0, &lgl_rule(4).unwrap()).is_err());
}

#[test]
fn builtin_profiles() {
    let rule = lgl_rule(20).unwrap();
    let (hat, v) = BuiltinData::Hat.nodes_1d(&rule).unwrap();
    assert!((hat[10] - 1.0).abs() < 1e-15);
    assert!(v.iter().all(|&x| x == 0.0));
    assert!(hat.iter().all(|&x| (0.0..=1.0).contains(&x)));
    let (g0, g1) = BuiltinData::GaussianBump.nodes_1d(&rule).unwrap();
    let x = rule.nodes();
    assert!((g0[7] - (-10.0 * x[7] * x[7]).exp()).abs() < 1e-15);
    assert!((g1[7] + 20.0 * x[7] * g0[7]).abs() < 1e-15);
    assert!(BuiltinData::Gaussian2d.nodes_1d(&rule).is_err());
    assert!(BuiltinData::Hat.nodes_2d(&rule, &rule).is_err());
    let (a, b) = BuiltinData::Gaussian2d
        .nodes_2d(&rule, &lgl_rule(8).unwrap())
        .unwrap();
    assert_eq!(a.shape(), (21, 9));
    assert!((a[(10, 4)] - 1.0).abs() < 1e-15);
    assert_eq!(b[(10, 4)], 0.0);
}

#[test]
fn builtin_names_round_trip() {
    for d in [
        BuiltinData::GaussianBump,
        BuiltinData::Hat,
        BuiltinData::Gaussian2d,
    ] {
        assert_eq!(BuiltinData::from_name(d.name()).unwrap(), d);
    }
    assert!(matches!(
        BuiltinData::from_name("square"),
        Err(HumError::Config(_))
    ));
}

#[test]
fn retained_modes_rule() {
    assert_eq!(retained_modes(20, 0.6), 1);
    assert_eq!(retained_modes(256, 0.6), 1);
    assert_eq!(retained_modes(1 << 24, 0.6), 4);
    assert_eq!(retained_modes(1 << 16, 0.63), 2);
}

#[test]
fn truncation_keeps_the_first_mode() {
    let basis = EigenBasis::for_order(20).unwrap();
    let phi = basis.mode(0).to_vec();
    let (a, b) = truncated_projection(&phi, &phi, &basis, 0.6).unwrap();
    for i in 0..=20 {
        assert!((a[i] - phi[i]).abs() < 1e-13);
        assert!((b[i] - phi[i]).abs() < 1e-13);
    }
    let second = basis.mode(1).to_vec();
    let (a, _) = truncated_projection(&second, &second, &basis, 0.6).unwrap();
    assert!(a.iter().all(|v| v.abs() < 1e-13));
}

#[test]
fn truncation_is_idempotent() {
    let basis = EigenBasis::for_order(16).unwrap();
    let mut g = rng(5);
    let mut u: Vec<f64> = (0..17).map(|_| g.gen_range(-1.0..1.0)).collect();
    u[0] = 0.0;
    u[16] = 0.0;
    let (a, _) = truncated_projection_rank(&u, &u, &basis, 4).unwrap();
    let (b, _) = truncated_projection_rank(&a, &a, &basis, 4).unwrap();
    for i in 0..17 {
        assert!((a[i] - b[i]).abs() < 1e-13);
    }
    let (full, _) = truncated_projection_rank(&u, &u, &basis, 100).unwrap();
    for i in 0..17 {
        assert!((full[i] - u[i]).abs() < 1e-12);
    }
}

#[test]
fn truncation_error_decreases_with_rank() {
    let basis = EigenBasis::for_order(24).unwrap();
    let (u0, u1) = BuiltinData::GaussianBump.nodes_1d(basis.rule()).unwrap();
    let err = |r: usize| {
        let (a, _) = truncated_projection_rank(&u0, &u1, &basis, r).unwrap();
        let d: Vec<f64> = a.iter().zip(&u0).map(|(x, y)| x - y).collect();
        basis.rule().norm_sq(&d).unwrap().sqrt()
    };
    let errs: Vec<f64> = [1, 3, 5, 9, 15].iter().map(|&r| err(r)).collect();
    assert!(errs.windows(2).all(|w| w[1] <= w[0] + 1e-15), "{errs:?}");
    assert!(errs[4] < 0.05 * errs[0]);
}

#[test]
fn h_minus1_norm_of_single_modes() {
    let basis = EigenBasis::for_order(12).unwrap();
    let mu = basis.frequencies();
    assert!((h_minus1_norm(&[1.0], &basis).unwrap() - 1.0 / mu[0]).abs() < 1e-15);
    assert_eq!(h_minus1_norm(&[0.0; 5], &basis).unwrap(), 0.0);
    let e = vec![0.0, 0.0, 2.0];
    assert!((h_minus1_norm(&e, &basis).unwrap() - 2.0 / mu[2]).abs() < 1e-15);
    assert!(matches!(
        h_minus1_norm(&[1.0; 12], &basis),
        Err(HumError::Dimension { .. })
    ));
}

#[test]
fn alpha_outside_range_is_a_domain_error() {
    let basis = EigenBasis::for_order(8).unwrap();
    let z = vec![0.0; 9];
    for alpha in [0.0, -0.1, 0.64, 1.0] {
        assert!(matches!(
            truncated_projection(&z, &z, &basis, alpha),
            Err(HumError::Domain { .. })
        ));
    }
}

proptest! {
    #[test]
    fn h_minus1_is_absolutely_homogeneous(s in -10.0f64..10.0, seed in 0u64..500) {
        let basis = EigenBasis::for_order(10).unwrap();
        let mut g = rng(seed);
        let c: Vec<f64> = (0..9).map(|_| g.gen_range(-1.0..1.0)).collect();
        let sc: Vec<f64> = c.iter().map(|x| s * x).collect();
        let a = h_minus1_norm(&c, &basis).unwrap();
        let b = h_minus1_norm(&sc, &basis).unwrap();
        prop_assert!((b - s.abs() * a).abs() <= 1e-13 * (1.0 + b));
    }

    #[test]
    fn projection_is_linear(seed in 0u64..500, s in -3.0f64..3.0) {
        let basis = EigenBasis::for_order(14).unwrap();
        let mut g = rng(seed);
        let mut draw = || {
            let mut v: Vec<f64> = (0..15).map(|_| g.gen_range(-1.0..1.0)).collect();
            v[0] = 0.0;
            v[14] = 0.0;
            v
        };
        let (u, w) = (draw(), draw());
        let mix: Vec<f64> = u.iter().zip(&w).map(|(a, b)| a + s * b).collect();
        let (pu, _) = truncated_projection_rank(&u, &u, &basis, 5).unwrap();
        let (pw, _) = truncated_projection_rank(&w, &w, &basis, 5).unwrap();
        let (pm, _) = truncated_projection_rank(&mix, &mix, &basis, 5).unwrap();
        for i in 0..15 {
            prop_assert!((pm[i] - pu[i] - s * pw[i]).abs() < 1e-12);
        }
    }
}
