//! Sine integral, hyperbolic sine/cosine integrals and exponential integrals.
//!
//! Small arguments use the power series. Large arguments go through the
//! exponential integrals, which are evaluated in scaled form
//! (`e^{-x} Ei(x)`, `e^{x} E1(x)`) so that products with `cosh`/`sinh`
//! can be formed without overflow.

use num_complex::Complex64;
use std::f64::consts::FRAC_PI_2;

use crate::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_6;

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 10_000;
const TINY: f64 = 1e-300;

/// Series / continued-fraction crossover for `si`.
const SI_SERIES_MAX: f64 = 2.0;
/// Series / exponential-integral crossover for `shi` and `chi`.
const HYP_SERIES_MAX: f64 = 32.0;
/// Series / asymptotic crossover for `Ei`, where the smallest asymptotic
/// term drops below machine epsilon.
const EI_ASYMPTOTIC_MIN: f64 = 40.0;
/// Naive / scaled crossover in [`stable_shi_chi_combo`].
const COMBO_SCALED_MIN: f64 = 1.0;

/// Sine integral Si(x) = ∫₀ˣ sin t / t dt.
pub fn si(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let ax = x.abs();
    let v = if ax <= SI_SERIES_MAX {
        si_series(ax)
    } else {
        // E1(i x) by continued fraction; Si(x) = π/2 + Im[e^{-ix} h] where
        // h e^{-ix} = E1(ix).
        let h = e1_imag_cf(ax);
        let (s, c) = ax.sin_cos();
        let e1 = Complex64::new(c, -s) * h;
        FRAC_PI_2 + e1.im
    };
    v.copysign(x)
}

fn si_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x; // x^{2n+1}/(2n+1)!
    let mut sum = x;
    let mut n = 0usize;
    loop {
        n += 1;
        let k = (2 * n) as f64;
        term *= -x2 / (k * (k + 1.0));
        let add = term / (k + 1.0);
        sum += add;
        if add.abs() < EPS * sum.abs() || n > MAX_ITER {
            return sum;
        }
    }
}

/// Modified Lentz evaluation of `e^{ix} E1(ix)` for x > 0.
fn e1_imag_cf(x: f64) -> Complex64 {
    let mut b = Complex64::new(1.0, x);
    let mut c = Complex64::new(1.0 / TINY, 0.0);
    let mut d = Complex64::new(1.0, 0.0) / b;
    let mut h = d;
    for i in 2..MAX_ITER {
        let a = -(((i - 1) * (i - 1)) as f64);
        b += 2.0;
        d = Complex64::new(1.0, 0.0) / (d * a + b);
        c = b + Complex64::new(a, 0.0) / c;
        let del = c * d;
        h *= del;
        if (del.re - 1.0).abs() + del.im.abs() < EPS {
            break;
        }
    }
    h
}

/// Hyperbolic sine integral Shi(x) = ∫₀ˣ sinh t / t dt.
pub fn shi(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let ax = x.abs();
    let v = if ax <= HYP_SERIES_MAX {
        let x2 = ax * ax;
        let mut term = ax;
        let mut sum = ax;
        let mut n = 0usize;
        loop {
            n += 1;
            let k = (2 * n) as f64;
            term *= x2 / (k * (k + 1.0));
            let add = term / (k + 1.0);
            sum += add;
            if add < EPS * sum || n > MAX_ITER {
                break sum;
            }
        }
    } else {
        0.5 * (ei(ax) + e1(ax))
    };
    v.copysign(x)
}

/// Hyperbolic cosine integral Chi(x) = γ + ln x + ∫₀ˣ (cosh t − 1)/t dt, x > 0.
pub fn chi(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("chi requires x > 0, got {x}")));
    }
    if x <= HYP_SERIES_MAX {
        let x2 = x * x;
        let mut term = 1.0;
        let mut sum = 0.0;
        let mut n = 0usize;
        loop {
            n += 1;
            let k = (2 * n) as f64;
            term *= x2 / ((k - 1.0) * k);
            let add = term / k;
            sum += add;
            if add < EPS * sum || n > MAX_ITER {
                break;
            }
        }
        Ok(EULER_GAMMA + x.ln() + sum)
    } else {
        Ok(0.5 * (ei(x) - e1(x)))
    }
}

/// Exponential integral E1(x) = ∫ₓ^∞ e^{-t}/t dt for x > 0.
pub fn e1(x: f64) -> f64 {
    if x <= 1.0 {
        e1_series(x)
    } else {
        e1_scaled(x) * (-x).exp()
    }
}

/// `e^{x} E1(x)` for x > 0, finite for arbitrarily large x.
pub fn e1_scaled(x: f64) -> f64 {
    if x <= 1.0 {
        return e1_series(x) * x.exp();
    }
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let a = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

fn e1_series(x: f64) -> f64 {
    // E1 = -γ - ln x - Σ_{k≥1} (-x)^k / (k k!)
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..MAX_ITER {
        let kf = k as f64;
        term *= -x / kf;
        let add = term / kf;
        sum += add;
        if add.abs() < EPS * sum.abs().max(TINY) {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

/// Exponential integral Ei(x) = -PV∫_{-x}^∞ e^{-t}/t dt for x > 0.
pub fn ei(x: f64) -> f64 {
    if x < EI_ASYMPTOTIC_MIN {
        ei_series(x)
    } else {
        ei_scaled(x) * x.exp()
    }
}

/// `e^{-x} Ei(x)` for x > 0, finite for arbitrarily large x.
pub fn ei_scaled(x: f64) -> f64 {
    if x < EI_ASYMPTOTIC_MIN {
        return ei_series(x) * (-x).exp();
    }
    // e^{-x} Ei(x) ~ (1/x) Σ k!/x^k, truncated at the smallest term
    let mut sum = 1.0;
    let mut term = 1.0;
    for k in 1..MAX_ITER {
        let prev = term;
        term *= k as f64 / x;
        if term > prev {
            break;
        }
        sum += term;
        if term < EPS * sum {
            break;
        }
    }
    sum / x
}

fn ei_series(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..MAX_ITER {
        let kf = k as f64;
        term *= x / kf;
        let add = term / kf;
        sum += add;
        if add < EPS * sum {
            break;
        }
    }
    EULER_GAMMA + x.ln() + sum
}

/// a·Shi(x)cosh x + b·Shi(x)sinh x − a·Chi(x)sinh x − b·Chi(x)cosh x, x ≥ 0.
///
/// With Shi = (Ei + E1)/2 and Chi = (Ei − E1)/2 the combination collapses to
///
/// a·(e^{-x}Ei + e^{x}E1)/2 + b·(e^{x}E1 − e^{-x}Ei)/2,
///
/// which stays O(1/x) where the individual terms grow like e^{2x}/x.
/// At x = 0 the value is 0 (the `b` term diverges like −b ln x, and callers
/// pair it with b → 0).
pub fn stable_shi_chi_combo(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < COMBO_SCALED_MIN {
        let s = shi(x);
        let c = chi(x).expect("x > 0");
        let (sh, ch) = (x.sinh(), x.cosh());
        return a * (s * ch - c * sh) + b * (s * sh - c * ch);
    }
    let p = ei_scaled(x);
    let q = e1_scaled(x);
    0.5 * a * (p + q) + 0.5 * b * (q - p)
}

/// The same combination evaluated literally; overflows for x ≳ 700.
pub fn naive_shi_chi_combo(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let s = shi(x);
    let c = chi(x).expect("x > 0");
    a * s * x.cosh() + b * s * x.sinh() - a * c * x.sinh() - b * c * x.cosh()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::quad::{integrate, QuadOptions};
    use approx::assert_relative_eq;

    #[test]
    fn si_small_and_asymptote() {
        assert_eq!(si(0.0), 0.0);
        assert!((si(1e6) - FRAC_PI_2).abs() < 2e-6);
        assert_relative_eq!(si(-3.0), -si(3.0));
    }

    #[test]
    fn si_one_matches_quadrature() {
        let opts = QuadOptions::absolute(1e-14);
        let r = integrate(|t| if t == 0.0 { 1.0 } else { t.sin() / t }, 0.0, 1.0, &opts).unwrap();
        assert_relative_eq!(si(1.0), r.value, max_relative = 1e-13);
        // reference value to 16 digits
        assert_relative_eq!(si(1.0), 0.946_083_070_367_183_0, max_relative = 1e-15);
    }

    #[test]
    fn si_branches_agree_at_crossover() {
        let x = SI_SERIES_MAX;
        let series = si_series(x);
        let h = e1_imag_cf(x);
        let (s, c) = x.sin_cos();
        let cf = FRAC_PI_2 + (Complex64::new(c, -s) * h).im;
        assert_relative_eq!(series, cf, max_relative = 1e-14);
    }

    #[test]
    fn shi_chi_reference_values() {
        // frozen from 40-digit series summation
        assert_relative_eq!(shi(2.0), 2.501_567_433_354_975_6, max_relative = 1e-14);
        assert_relative_eq!(chi(2.0).unwrap(), 2.452_666_922_646_915_6, max_relative = 1e-14);
        assert_eq!(shi(0.0), 0.0);
        let x = 1e-6;
        assert!((chi(x).unwrap() - x.ln() - EULER_GAMMA).abs() < 1e-10);
        assert!(chi(0.0).is_err());
        assert!(chi(-1.0).is_err());
    }

    #[test]
    fn hyperbolic_branches_agree_at_crossover() {
        let x = HYP_SERIES_MAX;
        assert_relative_eq!(shi(x), 0.5 * (ei(x) + e1(x)), max_relative = 1e-13);
        assert_relative_eq!(chi(x).unwrap(), 0.5 * (ei(x) - e1(x)), max_relative = 1e-13);
    }

    #[test]
    fn exponential_integrals() {
        assert_relative_eq!(e1(1.0), 0.219_383_934_395_520_27, max_relative = 1e-14);
        assert_relative_eq!(e1(0.5), 0.559_773_594_776_160_8, max_relative = 1e-14);
        assert_relative_eq!(ei(1.0), 1.895_117_816_355_936_8, max_relative = 1e-14);
        assert_relative_eq!(ei(50.0), 1.058_563_689_713_169_1e20, max_relative = 1e-13);
        assert_relative_eq!(ei(39.9), ei_scaled(39.9) * 39.9f64.exp(), max_relative = 1e-14);
        // the two Ei branches meet
        let x = EI_ASYMPTOTIC_MIN;
        let asym = {
            let mut sum = 1.0;
            let mut term = 1.0;
            for k in 1..100 {
                let next = term * k as f64 / x;
                if next > term {
                    break;
                }
                term = next;
                sum += term;
            }
            sum / x * x.exp()
        };
        assert_relative_eq!(ei_series(x), asym, max_relative = 1e-13);
    }

    #[test]
    fn combo_matches_naive_at_moderate_x() {
        // below x ≈ 5 the naive form still has ~10 good digits
        for &x in &[1e-3, 0.1, 0.5, 0.999, 1.0, 2.0, 3.5, 5.0] {
            for &(a, b) in &[(1.0, 0.0), (0.0, 1.0), (2.5, -0.7)] {
                let s = stable_shi_chi_combo(a, b, x);
                let n = naive_shi_chi_combo(a, b, x);
                assert_relative_eq!(s, n, max_relative = 1e-9, epsilon = 1e-300);
            }
        }
    }

    #[test]
    fn combo_matches_extended_precision_naive() {
        // naive form summed with 80 significant digits
        let cases = [
            (10.0, 1.0, 0.0, 0.102_355_177_206_599_43),
            (10.0, 0.0, 1.0, -0.010_791_843_266_811_348),
            (10.0, 2.5, -0.7, 0.263_442_233_303_266_52),
            (15.0, 1.0, 0.0, 0.067_296_909_799_909_975),
            (15.0, 0.0, 1.0, -0.004_576_630_692_500_733_4),
            (15.0, 2.5, -0.7, 0.171_445_915_984_525_45),
            (30.0, 1.0, 0.0, 0.033_408_430_275_670_986),
            (30.0, 0.0, 1.0, -0.001_118_691_516_690_860_5),
            (30.0, 2.5, -0.7, 0.084_304_159_750_861_067),
        ];
        for (x, a, b, want) in cases {
            assert_relative_eq!(stable_shi_chi_combo(a, b, x), want, max_relative = 1e-9);
        }
    }

    #[test]
    fn combo_large_x_is_finite() {
        // 200-digit reference: a=1, b=0 → (e^{-x}Ei(x) + e^{x}E1(x))/2
        let v = stable_shi_chi_combo(1.0, 0.0, 500.0);
        assert_relative_eq!(v, 2.000_016_000_768_092e-3, max_relative = 1e-12);
        let w = stable_shi_chi_combo(0.3, 1.7, 700.0);
        assert!(w.is_finite());
        assert_eq!(stable_shi_chi_combo(3.0, 4.0, 0.0), 0.0);
    }
}
