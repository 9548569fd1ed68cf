//! Bessel functions J₀, J₁, K₀, K₁ on the real half-line and the free-space
//! fundamental solution of `−Δ + 1` in two dimensions.
//!
//! Evaluation strategy:
//!
//! * `J₀`, `J₁`: ascending power series for `x < 12`, Hankel asymptotic
//!   expansion (optimally truncated) for `x ≥ 12`. Both branches agree to
//!   better than 1e-12 in a window around the crossover.
//! * `K₀`, `K₁`: ascending series (with the logarithmic terms) for `x ≤ 2`,
//!   Steed's continued fraction for `2 < x < 25`, and the large-argument
//!   asymptotic expansion for `x ≥ 25`.
//!
//! All functions are pure and thread-safe.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const J_SERIES_LIMIT: f64 = 12.0;
const K_SERIES_LIMIT: f64 = 2.0;
const K_ASYMPTOTIC_FROM: f64 = 25.0;

fn check_nonnegative(function: &'static str, x: f64) -> Result<()> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain { function, value: x });
    }
    Ok(())
}

fn check_positive(function: &'static str, x: f64) -> Result<()> {
    if x.is_nan() || x <= 0.0 {
        return Err(Error::Domain { function, value: x });
    }
    Ok(())
}

/// Bessel function of the first kind of order zero, `x ≥ 0`.
pub fn bessel_j0(x: f64) -> Result<f64> {
    check_nonnegative("bessel_j0", x)?;
    Ok(j0_unchecked(x))
}

/// Bessel function of the first kind of order one, `x ≥ 0`.
pub fn bessel_j1(x: f64) -> Result<f64> {
    check_nonnegative("bessel_j1", x)?;
    Ok(j1_unchecked(x))
}

/// Modified Bessel function of the second kind of order zero, `x > 0`.
pub fn bessel_k0(x: f64) -> Result<f64> {
    check_positive("bessel_k0", x)?;
    Ok(k01_unchecked(x).0)
}

/// Modified Bessel function of the second kind of order one, `x > 0`.
pub fn bessel_k1(x: f64) -> Result<f64> {
    check_positive("bessel_k1", x)?;
    Ok(k01_unchecked(x).1)
}

/// `J₁′(x) = J₀(x) − J₁(x)/x`, with `J₁′(0) = 1/2`.
pub fn bessel_j1_prime(x: f64) -> Result<f64> {
    check_nonnegative("bessel_j1_prime", x)?;
    Ok(j1_prime_unchecked(x))
}

/// `K₁′(x) = −K₀(x) − K₁(x)/x`.
pub fn bessel_k1_prime(x: f64) -> Result<f64> {
    check_positive("bessel_k1_prime", x)?;
    Ok(k1_prime_unchecked(x))
}

/// Fundamental solution of `−Δ + 1` in the plane as a function of the
/// distance: `K₀(r)/(2π)`.
pub fn green_free(r: f64) -> Result<f64> {
    check_positive("green_free", r)?;
    Ok(green_free_unchecked(r))
}

pub(crate) fn green_free_unchecked(r: f64) -> f64 {
    k01_unchecked(r).0 / (2.0 * PI)
}

pub(crate) fn j0_unchecked(x: f64) -> f64 {
    if x < J_SERIES_LIMIT {
        j_series(0, x)
    } else {
        j_hankel(0, x)
    }
}

pub(crate) fn j1_unchecked(x: f64) -> f64 {
    if x < J_SERIES_LIMIT {
        j_series(1, x)
    } else {
        j_hankel(1, x)
    }
}

pub(crate) fn j1_prime_unchecked(x: f64) -> f64 {
    if x == 0.0 {
        0.5
    } else {
        j0_unchecked(x) - j1_unchecked(x) / x
    }
}

pub(crate) fn k1_unchecked(x: f64) -> f64 {
    k01_unchecked(x).1
}

pub(crate) fn k1_prime_unchecked(x: f64) -> f64 {
    let (k0, k1) = k01_unchecked(x);
    -k0 - k1 / x
}

/// Ascending series `Σ (−1)^k (x/2)^{2k+n} / (k! (k+n)!)` for `n ∈ {0, 1}`.
fn j_series(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = half * half;
    let mut term = if n == 0 { 1.0 } else { half };
    let mut sum = term;
    for k in 1..200 {
        let kf = k as f64;
        term *= -q / (kf * (kf + n as f64));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs().max(1e-300) && k > 2 {
            break;
        }
    }
    sum
}

/// Hankel asymptotic expansion `√(2/πx) (P cos χ − Q sin χ)`, summed until
/// the terms stop decreasing.
fn j_hankel(n: u32, x: f64) -> f64 {
    let mu = 4.0 * (n * n) as f64;
    let (p, q) = hankel_pq(mu, x);
    // χ = x − φ with φ = (n/2 + 1/4)π; expanded to keep the large-x phase accurate.
    let (sx, cx) = x.sin_cos();
    let (sp, cp) = (0.5 * n as f64 * PI + FRAC_PI_4).sin_cos();
    let cos_chi = cx * cp + sx * sp;
    let sin_chi = sx * cp - cx * sp;
    (2.0 / (PI * x)).sqrt() * (p * cos_chi - q * sin_chi)
}

fn hankel_pq(mu: f64, x: f64) -> (f64, f64) {
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term: f64 = 1.0;
    let mut smallest = f64::INFINITY;
    for k in 1..80 {
        let odd = (2 * k - 1) as f64;
        let next = term * (mu - odd * odd) / (k as f64 * 8.0 * x);
        if next.abs() >= smallest || next == 0.0 {
            break;
        }
        smallest = next.abs();
        term = next;
        // a_k / x^k enters P with sign (−1)^{k/2} for even k and Q with
        // sign (−1)^{(k−1)/2} for odd k.
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * term;
        } else {
            q += sign * term;
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    (p, q)
}

/// Returns `(K₀(x), K₁(x))` for `x > 0`.
pub(crate) fn k01_unchecked(x: f64) -> (f64, f64) {
    if x <= K_SERIES_LIMIT {
        k01_series(x)
    } else if x < K_ASYMPTOTIC_FROM {
        k01_steed(x)
    } else {
        (k_asymptotic(0.0, x), k_asymptotic(4.0, x))
    }
}

fn k01_series(x: f64) -> (f64, f64) {
    let half = 0.5 * x;
    let q = half * half;
    let log_half = half.ln();

    // I₀ and I₁ alongside the digamma-weighted sums.
    let mut i0 = 0.0;
    let mut i1 = 0.0;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    // term0 = q^k/(k!)², term1 = q^k/(k!(k+1)!)
    let mut term0: f64 = 1.0;
    let mut term1: f64 = 1.0;
    let mut harmonic = 0.0; // H_k
    for k in 0..100 {
        let kf = k as f64;
        if k > 0 {
            term0 *= q / (kf * kf);
            term1 *= q / (kf * (kf + 1.0));
            harmonic += 1.0 / kf;
        }
        let psi_k1 = -EULER_GAMMA + harmonic;
        let psi_k2 = psi_k1 + 1.0 / (kf + 1.0);
        i0 += term0;
        i1 += term1;
        s0 += term0 * psi_k1;
        s1 += term1 * (psi_k1 + psi_k2);
        if term0 < 1e-18 * i0 && k > 2 {
            break;
        }
    }
    let i1 = half * i1;
    let k0 = -log_half * i0 + s0;
    let k1 = 1.0 / x + log_half * i1 - 0.5 * half * s1;
    (k0, k1)
}

/// Steed's continued fraction (Temme's CF2) for `K₀` and `K₁`.
fn k01_steed(x: f64) -> (f64, f64) {
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 1..10_000 {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    let h = a1 * h;
    let k0 = (FRAC_PI_2 / x).sqrt() * (-x).exp() / s;
    let k1 = k0 * (x + 0.5 - h) / x;
    (k0, k1)
}

/// `K_ν(x) ~ √(π/2x) e^{−x} Σ a_k(ν)/x^k` with `mu = 4ν²`.
fn k_asymptotic(mu: f64, x: f64) -> f64 {
    (FRAC_PI_2 / x).sqrt() * (-x).exp() * k_asymptotic_sum(mu, x)
}

fn k_asymptotic_sum(mu: f64, x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term: f64 = 1.0;
    let mut smallest = f64::INFINITY;
    for k in 1..80 {
        let odd = (2 * k - 1) as f64;
        let next = term * (mu - odd * odd) / (k as f64 * 8.0 * x);
        if next.abs() >= smallest || next == 0.0 {
            break;
        }
        smallest = next.abs();
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// `K₁′(x)/K₁(x)`, finite even where `K₁` itself underflows.
pub(crate) fn k1_log_derivative(x: f64) -> f64 {
    let ratio = if x < K_ASYMPTOTIC_FROM {
        let (k0, k1) = k01_unchecked(x);
        k0 / k1
    } else {
        k_asymptotic_sum(0.0, x) / k_asymptotic_sum(4.0, x)
    };
    -ratio - 1.0 / x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_errors() {
        assert!(bessel_j0(-1.0).is_err());
        assert!(bessel_j1(-1e-300).is_err());
        assert!(bessel_k0(0.0).is_err());
        assert!(bessel_k1(-2.0).is_err());
        assert!(bessel_j1_prime(f64::NAN).is_err());
        assert!(bessel_k1_prime(0.0).is_err());
        assert!(green_free(0.0).is_err());
    }

    #[test]
    fn trivial_values() {
        assert_eq!(bessel_j0(0.0).unwrap(), 1.0);
        assert_eq!(bessel_j1(0.0).unwrap(), 0.0);
        assert_eq!(bessel_j1_prime(0.0).unwrap(), 0.5);
        let x = 1e-8;
        assert!((bessel_j1(x).unwrap() / x - 0.5).abs() < 1e-15);
    }

    #[test]
    fn j_branches_agree_across_crossover() {
        for i in 0..=200 {
            let x = 10.0 + 4.0 * i as f64 / 200.0;
            assert!((j_series(0, x) - j_hankel(0, x)).abs() < 1e-10, "J0 at {x}");
            assert!((j_series(1, x) - j_hankel(1, x)).abs() < 1e-10, "J1 at {x}");
        }
    }

    #[test]
    fn k_branches_agree_across_crossovers() {
        for i in 0..=100 {
            let x = 1.5 + i as f64 / 100.0;
            let (a0, a1) = k01_series(x);
            let (b0, b1) = k01_steed(x);
            assert!(((a0 - b0) / b0).abs() < 1e-12, "K0 at {x}");
            assert!(((a1 - b1) / b1).abs() < 1e-12, "K1 at {x}");
        }
        for i in 0..=100 {
            let x = 20.0 + 15.0 * i as f64 / 100.0;
            let (b0, b1) = k01_steed(x);
            assert!(((k_asymptotic(0.0, x) - b0) / b0).abs() < 1e-12, "K0 at {x}");
            assert!(((k_asymptotic(4.0, x) - b1) / b1).abs() < 1e-12, "K1 at {x}");
        }
    }

    #[test]
    fn large_arguments_return_asymptotic_values() {
        let j = bessel_j1(250.0).unwrap();
        assert!(j.is_finite() && j.abs() < (2.0 / (PI * 250.0)).sqrt() * 1.01);
        let k = bessel_k1(150.0).unwrap();
        assert!(k > 0.0 && k < 1e-60);
    }
}
