//! Analytic thermal correlators for the small lattices, used as oracles for
//! the numerical engines.
//!
//! With `u = sqrt(4 + h²) β` and `v = |h| β`:
//! `f1 = cosh u + cosh v = 2 cosh p cosh q` and
//! `f2 = cosh u - cosh v = 2 sinh p sinh q`, where `p = (u+v)/2`, `q = (u-v)/2`.
//! Products of these are evaluated in the log domain so β = 50 is harmless.

use std::f64::consts::LN_2;

fn log_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - LN_2
}

/// `ln sinh x` for `x ≥ 0`; `-inf` at zero.
fn log_sinh(x: f64) -> f64 {
    if x == 0.0 {
        return f64::NEG_INFINITY;
    }
    x + (-(-2.0 * x).exp()).ln_1p() - LN_2
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn half_angles(beta: f64, h: f64) -> (f64, f64) {
    let u = (4.0 + h * h).sqrt() * beta.abs();
    let v = h.abs() * beta.abs();
    ((u + v) / 2.0, (u - v) / 2.0)
}

pub fn log_f1(beta: f64, h: f64) -> f64 {
    let (p, q) = half_angles(beta, h);
    LN_2 + log_cosh(p) + log_cosh(q)
}

pub fn log_f2(beta: f64, h: f64) -> f64 {
    let (p, q) = half_angles(beta, h);
    LN_2 + log_sinh(p) + log_sinh(q)
}

/// `cosh(sqrt(4+h²)β) + cosh(|h|β)`.
pub fn f1(beta: f64, h: f64) -> f64 {
    log_f1(beta, h).exp()
}

/// `cosh(sqrt(4+h²)β) - cosh(|h|β)`, never negative.
pub fn f2(beta: f64, h: f64) -> f64 {
    log_f2(beta, h).exp()
}

/// `⟨Z Z⟩` across the two-site interface of the four-site diamond:
/// `(AD + BC)/(AC + BD)` with `A, B = f1, f2 at h1` and `C, D = f1, f2 at h4`.
pub fn f(beta: f64, h1: f64, h4: f64) -> f64 {
    let (a, b) = (log_f1(beta, h1), log_f2(beta, h1));
    let (c, d) = (log_f1(beta, h4), log_f2(beta, h4));
    let num = log_sum_exp(a + d, b + c);
    let den = log_sum_exp(a + c, b + d);
    (num - den).exp()
}

/// `f2/f1 = tanh p · tanh q`; the interface correlator of the five-site chain.
pub fn g(beta: f64, h3: f64) -> f64 {
    let (p, q) = half_angles(beta, h3);
    p.tanh() * q.tanh()
}

/// Connected `⟨Z_1 Z_3⟩` of the chain `-h X_1 - J1 Z_1 Z_2 - J2 Z_2 Z_3`:
/// `tanh(βJ2) · tanh(β r) · J1/r` with `r = sqrt(J1² + h²)`.
///
/// At `J1 = h = 0` the ratio is 0/0; the exact value there is 0 and that is returned.
pub fn chain3_correlation(beta: f64, j1: f64, j2: f64, h: f64) -> f64 {
    let r = j1.hypot(h);
    if r == 0.0 {
        return 0.0;
    }
    (beta * j2).tanh() * (beta * r).tanh() * j1 / r
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    // Frozen from an independent 30-digit evaluation of the cosh expressions.
    #[test]
    fn frozen_values() {
        assert_abs_diff_eq!(f(1.0, 1.0, 1.0), 0.8077421053142364, epsilon = 1e-14);
        assert_abs_diff_eq!(f(0.5, 2.0, 0.5), 0.3675593012375804, epsilon = 1e-14);
        assert_abs_diff_eq!(f(2.0, 0.0, 0.0), 0.9973216901154173, epsilon = 1e-14);
        assert_abs_diff_eq!(f(1.0, 0.3, 1.7), 0.8004158325077719, epsilon = 1e-14);
        assert_abs_diff_eq!(g(1.0, 1.0), 0.5081621976698633, epsilon = 1e-14);
        assert_abs_diff_eq!(g(2.0, 0.5), 0.9048260617216659, epsilon = 1e-14);
        assert_abs_diff_eq!(chain3_correlation(1.0, 1.0, 1.0, 1.0), 0.47842084812408475, epsilon = 1e-14);
        assert_abs_diff_eq!(chain3_correlation(2.0, 0.4, 1.3, 1.1), 0.3317899986700817, epsilon = 1e-14);
    }

    #[test]
    fn direct_cosh_agreement() {
        for &(b, h) in &[(0.3, 0.0), (1.0, 1.0), (2.5, 0.7), (4.0, 2.0)] {
            let u = (4.0f64 + h * h).sqrt() * b;
            let v = f64::abs(h) * b;
            assert_abs_diff_eq!(f1(b, h), u.cosh() + v.cosh(), epsilon = 1e-12 * u.cosh());
            assert_abs_diff_eq!(f2(b, h), u.cosh() - v.cosh(), epsilon = 1e-12 * u.cosh());
        }
    }

    #[test]
    fn limits() {
        assert_abs_diff_eq!(f1(1e-9, 1.0), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f2(1e-9, 1.0), 0.0, epsilon = 1e-12);
        assert!(1.0 - g(50.0, 1.0) < 1e-6);
        assert!(1.0 - f(50.0, 2.0, 0.5) < 1e-6);
        assert_abs_diff_eq!(g(1e-9, 1.0), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(chain3_correlation(0.0, 1.0, 1.0, 1.0), 0.0);
        assert!(1.0 - chain3_correlation(50.0, 1.0, 1.0, 0.0) < 1e-12);
        assert_eq!(chain3_correlation(1.0, 0.0, 1.0, 0.0), 0.0);
    }

    #[test]
    fn huge_arguments_stay_finite() {
        let v = f(400.0, 3.0, 0.1);
        assert!(v.is_finite() && v <= 1.0);
        assert!(log_f1(400.0, 3.0).is_finite());
        assert!(g(1e4, 2.0) <= 1.0);
    }

    #[test]
    fn zero_field_reduces_to_symmetric_form() {
        // With h1 = h4 = 0 both factors coincide: f = 2 f1 f2 / (f1² + f2²).
        for b in [0.25, 1.0, 3.0] {
            let (a, c) = (f1(b, 0.0), f2(b, 0.0));
            assert_abs_diff_eq!(f(b, 0.0, 0.0), 2.0 * a * c / (a * a + c * c), epsilon = 1e-14);
        }
    }

    proptest! {
        #[test]
        fn ranges(beta in 1e-3f64..8.0, h1 in -3.0f64..3.0, h4 in -3.0f64..3.0) {
            // Beyond β ≈ 8.6 the gap 1 - f drops below one ulp at zero field.
            prop_assert!(f2(beta, h1) >= 0.0);
            let v = f(beta, h1, h4);
            prop_assert!((0.0..1.0).contains(&v));
            let w = g(beta, h1);
            prop_assert!((0.0..=1.0).contains(&w));
        }

        #[test]
        fn f_is_symmetric_in_fields(beta in 1e-3f64..10.0, h1 in -3.0f64..3.0, h4 in -3.0f64..3.0) {
            prop_assert!((f(beta, h1, h4) - f(beta, h4, h1)).abs() < 1e-14);
        }
    }
}
