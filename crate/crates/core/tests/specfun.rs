use std::f64::consts::PI;

use proptest::prelude::*;
use qgsw_core::specfun::*;
use qgsw_core::Error;

// 40-digit mpmath values, rounded.
const J0_TABLE: [(f64, f64); 6] = [
    (1.0, 0.765_197_686_557_966_6),
    (2.5, -0.048_383_776_468_197_996),
    (7.3, 0.288_216_947_635_014_4),
    (15.0, -0.014_224_472_826_780_773),
    (42.0, -0.114_739_496_713_582_82),
    (99.5, -0.019_543_066_407_440_784),
];
const J1_TABLE: [(f64, f64); 6] = [
    (0.5, 0.242_268_457_674_873_9),
    (2.0, 0.576_724_807_756_873_4),
    (7.3, 0.082_570_430_493_257_83),
    (15.0, 0.205_104_038_613_522_76),
    (42.0, -0.045_993_888_221_887_14),
    (99.5, -0.077_663_198_243_076_94),
];
const K0_TABLE: [(f64, f64); 10] = [
    (1e-6, 13.931_442_073_626_42),
    (0.1, 2.427_069_024_702_016_6),
    (1.0, 0.421_024_438_240_708_3),
    (2.0, 0.113_893_872_749_533_44),
    (3.7, 0.015_630_659_921_626_658),
    (10.0, 1.778_006_231_616_765_2e-5),
    (24.0, 9.608_818_780_833_116e-12),
    (26.0, 1.249_877_397_985_072_4e-12),
    (60.0, 1.413_897_840_559_107_8e-27),
    (100.0, 4.656_628_229_175_902e-45),
];
const K1_TABLE: [(f64, f64); 10] = [
    (1e-6, 999_999.999_992_784_3),
    (0.1, 9.853_844_780_870_606),
    (1.0, 0.601_907_230_197_234_6),
    (2.0, 0.139_865_881_816_522_43),
    (3.7, 0.017_628_035_102_223_263),
    (10.0, 1.864_877_345_382_558_5e-5),
    (24.0, 9.806_998_930_441_144e-12),
    (26.0, 1.273_690_779_238_923_6e-12),
    (60.0, 1.425_632_026_517_104_3e-27),
    (100.0, 4.679_853_735_636_909e-45),
];

#[test]
fn j_matches_high_precision_values() {
    for (x, want) in J0_TABLE {
        assert!((bessel_j0(x).unwrap() - want).abs() <= 1e-10, "J0({x})");
    }
    for (x, want) in J1_TABLE {
        assert!((bessel_j1(x).unwrap() - want).abs() <= 1e-10, "J1({x})");
    }
}

#[test]
fn k_matches_high_precision_values() {
    for (x, want) in K0_TABLE {
        let got = bessel_k0(x).unwrap();
        assert!((got - want).abs() <= 1e-10 * want, "K0({x}) = {got}, want {want}");
    }
    for (x, want) in K1_TABLE {
        let got = bessel_k1(x).unwrap();
        assert!((got - want).abs() <= 1e-10 * want, "K1({x}) = {got}, want {want}");
    }
}

/// Trapezoid rule on `J_n(x) = (1/π)∫₀^π cos(nτ − x sin τ) dτ`; spectrally
/// accurate for this periodic integrand.
fn j_integral(n: f64, x: f64) -> f64 {
    let m = 4000;
    let h = PI / m as f64;
    let mut sum = 0.5 * ((0.0f64).cos() + (n * PI - x * PI.sin()).cos());
    for k in 1..m {
        let t = k as f64 * h;
        sum += (n * t - x * t.sin()).cos();
    }
    sum * h / PI
}

/// Trapezoid rule on `K_n(x) = ∫₀^∞ e^{−x cosh t} cosh(nt) dt`.
fn k_integral(n: f64, x: f64) -> f64 {
    let h = 1e-3;
    let mut sum = 0.5 * (-x).exp();
    let mut t: f64 = h;
    loop {
        let term = (-x * t.cosh()).exp() * (n * t).cosh();
        sum += term;
        if term < 1e-30 * sum {
            break;
        }
        t += h;
    }
    sum * h
}

#[test]
fn j_agrees_with_integral_representation_on_a_sweep() {
    for k in 0..=200 {
        let x = 0.5 * k as f64;
        assert!((bessel_j0(x).unwrap() - j_integral(0.0, x)).abs() <= 1e-10, "J0({x})");
        assert!((bessel_j1(x).unwrap() - j_integral(1.0, x)).abs() <= 1e-10, "J1({x})");
    }
}

#[test]
fn k_agrees_with_integral_representation_on_a_sweep() {
    for k in 0..=120 {
        let x = 1e-3 * 10f64.powf(k as f64 / 24.0);
        let (k0, k1) = (bessel_k0(x).unwrap(), bessel_k1(x).unwrap());
        assert!((k0 - k_integral(0.0, x)).abs() <= 1e-10 * k0, "K0({x})");
        assert!((k1 - k_integral(1.0, x)).abs() <= 1e-10 * k1, "K1({x})");
    }
}

#[test]
fn spec_examples() {
    assert_eq!(bessel_j0(0.0).unwrap(), 1.0);
    assert!(bessel_j0(3.8317).unwrap() < 0.0);
    assert_eq!(bessel_j1(0.0).unwrap(), 0.0);
    assert!(bessel_j1(3.8317).unwrap().abs() <= 1e-4);
    assert!((1e-6 * bessel_k1(1e-6).unwrap() - 1.0).abs() <= 1e-4);
    assert!(bessel_k1(10.0).unwrap() / bessel_k1(9.0).unwrap() < (-1f64).exp() * 1.1);
    assert_eq!(bessel_j1_prime(0.0).unwrap(), 0.5);
    assert!((bessel_j1_prime(3.8317).unwrap() - bessel_j0(3.8317).unwrap()).abs() <= 1e-4);
    let h = 1e-6;
    let fd = (bessel_k1(1.0 + h).unwrap() - bessel_k1(1.0 - h).unwrap()) / (2.0 * h);
    assert!((bessel_k1_prime(1.0).unwrap() - fd).abs() <= 1e-7);
    assert!((bessel_k1_prime(1.0).unwrap() + 1.022_931_668_437_942_9).abs() <= 1e-12);
}

#[test]
fn domain_errors_name_the_function() {
    for r in [bessel_j0(-1.0), bessel_j1(-0.5), bessel_k0(0.0), bessel_k1(-2.0), green_free(0.0)] {
        assert!(matches!(r, Err(Error::Domain { .. })));
    }
    assert!(bessel_k1_prime(0.0).is_err());
    assert!(bessel_j1_prime(-1.0).is_err());
}

#[test]
fn j1_is_positive_before_its_first_zero() {
    for k in 1..3800 {
        assert!(bessel_j1(k as f64 * 1e-3).unwrap() > 0.0);
    }
    assert!(bessel_j1(3.8).unwrap() > 0.0 && bessel_j1(3.9).unwrap() < 0.0);
}

#[test]
fn derivative_identities_on_a_log_sweep() {
    for k in 0..1000 {
        let x = 1e-4 * (5e5f64).powf(k as f64 / 999.0);
        let j1p = bessel_j1_prime(x).unwrap();
        let want = bessel_j0(x).unwrap() - bessel_j1(x).unwrap() / x;
        assert!((j1p - want).abs() <= 1e-9 * want.abs().max(1e-300), "J1'({x})");
        let k1p = bessel_k1_prime(x).unwrap();
        let want = -bessel_k0(x).unwrap() - bessel_k1(x).unwrap() / x;
        assert!((k1p - want).abs() <= 1e-9 * want.abs(), "K1'({x})");
    }
}

#[test]
fn k0_derivative_is_minus_k1() {
    for x in [0.05, 0.3, 1.0, 2.0, 2.5, 7.0, 20.0, 30.0] {
        let h = 1e-5 * x;
        let fd = (bessel_k0(x + h).unwrap() - bessel_k0(x - h).unwrap()) / (2.0 * h);
        let k1 = bessel_k1(x).unwrap();
        assert!((fd + k1).abs() <= 1e-7 * k1, "x = {x}");
    }
}

#[test]
fn green_free_examples() {
    for k in 0..=40 {
        let r = 1e-6 * 1e4f64.powf(k as f64 / 40.0);
        let g = green_free(r).unwrap();
        assert!((g - (2.0 / r).ln() / (2.0 * PI)).abs() <= 0.2, "r = {r}");
    }
    assert!(green_free(3.0).unwrap() <= (-1.5f64).exp());
    assert!((green_free(1.0).unwrap() - 0.067_008_120_508_497_14).abs() <= 1e-15);
}

#[test]
fn large_arguments_stay_finite() {
    for x in [150.0, 1e3, 1e5] {
        assert!(bessel_j0(x).unwrap().is_finite());
        assert!(bessel_j1(x).unwrap().abs() <= 1.0);
        assert!(bessel_k0(x).unwrap() >= 0.0 && bessel_k1(x).unwrap() >= 0.0);
    }
}

proptest! {
    #[test]
    fn k_is_positive_and_decreasing(x in 1e-6f64..100.0, step in 1e-3f64..1.0) {
        let (a, b) = (bessel_k0(x).unwrap(), bessel_k0(x + step).unwrap());
        prop_assert!(a > 0.0 && b > 0.0 && b < a);
        let (a, b) = (bessel_k1(x).unwrap(), bessel_k1(x + step).unwrap());
        prop_assert!(a > 0.0 && b > 0.0 && b < a);
    }

    #[test]
    fn green_free_is_strictly_decreasing(r in 1e-6f64..50.0, step in 1e-4f64..1.0) {
        prop_assert!(green_free(r + step).unwrap() < green_free(r).unwrap());
    }

    #[test]
    fn j1_over_x_tends_to_a_half(x in 1e-12f64..1e-4) {
        prop_assert!((bessel_j1(x).unwrap() / x - 0.5).abs() <= x);
    }

    #[test]
    fn bessel_bounds_hold(x in 0.0f64..100.0) {
        prop_assert!(bessel_j0(x).unwrap().abs() <= 1.0);
        prop_assert!(bessel_j1(x).unwrap().abs() <= 0.59);
    }
}
