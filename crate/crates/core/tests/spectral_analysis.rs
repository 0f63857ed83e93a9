use std::f64::consts::FRAC_PI_2;

use hum_spectral::operators1d::EigenBasis;
use hum_spectral::spectral_analysis::{
    gap_scan, mode_quotient, observability_quotient, scaling_fit, top_pair_gap,
};
use hum_spectral::HumError;
use proptest::prelude::*;

#[test]
fn low_gaps_approach_quarter_period() {
    let b = EigenBasis::for_order(20).unwrap();
    let gaps = gap_scan(&b);
    assert_eq!(gaps.len(), 18);
    assert_eq!(gaps[0].0, 1);
    for &(k, g) in &gaps[..4] {
        assert!((g - FRAC_PI_2).abs() < 1e-6, "k = {k}: {g}");
    }
    assert!(gaps.iter().all(|&(_, g)| g > 0.0));
}

#[test]
fn top_pair_is_the_last_even_odd_pair() {
    let b = EigenBasis::for_order(16).unwrap();
    let (k, g) = top_pair_gap(&b).unwrap();
    assert_eq!(k, 14);
    assert_eq!(g, b.frequencies()[14] - b.frequencies()[13]);
    assert!(top_pair_gap(&EigenBasis::for_order(3).unwrap()).is_none());
    assert!(top_pair_gap(&EigenBasis::for_order(4).unwrap()).is_some());
}

#[test]
fn top_pair_gaps_collapse_with_n() {
    let gaps: Vec<f64> = [16, 32, 64]
        .iter()
        .map(|&n| top_pair_gap(&EigenBasis::for_order(n).unwrap()).unwrap().1)
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0] / 3.0), "{gaps:?}");
}

#[test]
fn first_mode_quotient_matches_continuous_ratio() {
    let b = EigenBasis::for_order(20).unwrap();
    let q = mode_quotient(&b, 1, false);
    assert!((q - 1.0).abs() < 0.05, "{q}");
}

#[test]
fn reinforcement_never_increases_the_quotient() {
    for n in [8usize, 16, 40] {
        let b = EigenBasis::for_order(n).unwrap();
        for k in 1..=b.count() {
            assert!(mode_quotient(&b, k, true) <= mode_quotient(&b, k, false));
        }
        let plain = observability_quotient(&b, b.rule(), false);
        let reinforced = observability_quotient(&b, b.rule(), true);
        assert!(reinforced.value <= plain.value);
        assert!(!plain.degenerate && !reinforced.degenerate);
        assert!((plain.value - mode_quotient(&b, plain.argmax, false)).abs() < 1e-12 * plain.value);
    }
}

#[test]
fn reinforced_quotient_stays_near_one() {
    for n in [16usize, 32, 64, 128] {
        let b = EigenBasis::for_order(n).unwrap();
        let q = observability_quotient(&b, b.rule(), true);
        assert!(q.value <= 1.05, "N = {n}: {}", q.value);
    }
}

#[test]
fn plain_quotient_grows() {
    let values: Vec<f64> = [16, 32, 64]
        .iter()
        .map(|&n| {
            let b = EigenBasis::for_order(n).unwrap();
            observability_quotient(&b, b.rule(), false).value
        })
        .collect();
    assert!(values.windows(2).all(|w| w[1] > 2.0 * w[0]), "{values:?}");
}

#[test]
fn fit_of_exact_and_constant_data() {
    let exact: Vec<(f64, f64)> = [4.0, 8.0, 16.0, 32.0]
        .iter()
        .map(|&n| (n, 3.0 * n * n))
        .collect();
    let f = scaling_fit(&exact).unwrap();
    assert!((f.exponent - 2.0).abs() < 1e-12);
    assert!((f.prefactor - 3.0).abs() < 1e-12);
    assert!((f.r_squared - 1.0).abs() < 1e-12);
    let flat = scaling_fit(&[(2.0, 5.0), (4.0, 5.0), (8.0, 5.0)]).unwrap();
    assert!(flat.exponent.abs() < 1e-14);
    assert!((flat.prefactor - 5.0).abs() < 1e-12);
}

#[test]
fn fit_rejects_bad_samples() {
    assert!(matches!(
        scaling_fit(&[(1.0, 1.0), (2.0, -1.0), (3.0, 1.0)]),
        Err(HumError::Domain { .. })
    ));
    assert!(matches!(
        scaling_fit(&[(1.0, 1.0), (2.0, 1.0)]),
        Err(HumError::InvalidData(_))
    ));
    assert!(scaling_fit(&[(2.0, 1.0), (2.0, 3.0), (2.0, 4.0)]).is_err());
    assert!(scaling_fit(&[(0.0, 1.0), (2.0, 3.0), (3.0, 4.0)]).is_err());
}

proptest! {
    #[test]
    fn fit_recovers_any_power_law(p in -3.0f64..3.0, c in 0.01f64..100.0) {
        let s: Vec<(f64, f64)> = [3.0, 7.0, 20.0, 90.0].iter().map(|&n: &f64| (n, c * n.powf(p))).collect();
        let f = scaling_fit(&s).unwrap();
        prop_assert!((f.exponent - p).abs() < 1e-10);
        prop_assert!((f.prefactor / c - 1.0).abs() < 1e-10);
    }
}
