//! Scalar special functions used by the Mellin–Barnes kernels and by the
//! direct-form oracles.
//!
//! Complex log-gamma uses the 15-term Lanczos approximation with
//! g = 607/128 for `Re z >= 1/2` and the upward recurrence otherwise, which
//! keeps the result on the principal branch (continuous off the negative
//! real axis) and accurate for large imaginary parts.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Absolute distance to a non-positive integer treated as a gamma pole.
pub const POLE_TOLERANCE: f64 = 1e-12;

const LANCZOS_G: f64 = 607.0 / 128.0;
const LANCZOS_COEF: [f64; 15] = [
    0.999_999_999_999_997_1,
    57.156_235_665_862_92,
    -59.597_960_355_475_49,
    14.136_097_974_741_747,
    -0.491_913_816_097_620_2,
    3.399_464_998_481_189e-5,
    4.652_362_892_704_858e-5,
    -9.837_447_530_487_956e-5,
    1.580_887_032_249_125e-4,
    -2.102_644_417_241_049e-4,
    2.174_396_181_152_126_4e-4,
    -1.643_181_065_367_639e-4,
    8.441_822_398_385_275e-5,
    -2.619_083_840_158_141e-5,
    3.689_918_265_953_162_4e-6,
];
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

fn is_pole(re: f64, im: f64) -> bool {
    im.abs() <= POLE_TOLERANCE && re <= POLE_TOLERANCE && (re - re.round()).abs() <= POLE_TOLERANCE
}

/// Principal-branch `ln Γ(z)`.
pub fn ln_gamma(z: Complex64) -> Result<Complex64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::InvalidArgument(format!("ln_gamma of non-finite {z}")));
    }
    if is_pole(z.re, z.im) {
        return Err(Error::GammaPole { re: z.re, im: z.im });
    }
    if z.re >= 0.5 {
        return Ok(lanczos_ln_gamma(z));
    }
    // ln Γ(z) = ln Γ(z + n) - Σ ln(z + k)
    let n = (0.5 - z.re).ceil() as usize;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut w = z;
    for _ in 0..n {
        acc += w.ln();
        w += 1.0;
    }
    Ok(lanczos_ln_gamma(w) - acc)
}

fn lanczos_ln_gamma(z: Complex64) -> Complex64 {
    let zm1 = z - 1.0;
    let mut series = Complex64::new(LANCZOS_COEF[0], 0.0);
    for (k, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        series += *c / (zm1 + k as f64);
    }
    let t = zm1 + LANCZOS_G + 0.5;
    (zm1 + 0.5) * t.ln() - t + LN_SQRT_2PI + series.ln()
}

/// `ln |Γ(x)|` for real `x`, together with the sign of `Γ(x)`.
pub fn ln_gamma_real(x: f64) -> Result<(f64, f64)> {
    if !x.is_finite() {
        return Err(Error::InvalidArgument(format!("ln_gamma_real of {x}")));
    }
    if is_pole(x, 0.0) {
        return Err(Error::GammaPole { re: x, im: 0.0 });
    }
    if x >= 0.5 {
        return Ok((lanczos_ln_gamma_real(x), 1.0));
    }
    // reflection: Γ(x) Γ(1-x) = π / sin(πx)
    let s = (PI * x).sin();
    let (lg, _) = ln_gamma_real(1.0 - x)?;
    Ok((PI.ln() - s.abs().ln() - lg, s.signum()))
}

fn lanczos_ln_gamma_real(x: f64) -> f64 {
    let xm1 = x - 1.0;
    let mut series = LANCZOS_COEF[0];
    for (k, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        series += c / (xm1 + k as f64);
    }
    let t = xm1 + LANCZOS_G + 0.5;
    (xm1 + 0.5) * t.ln() - t + LN_SQRT_2PI + series.ln()
}

/// Real gamma function with explicit pole and overflow errors.
pub fn gamma_real(x: f64) -> Result<f64> {
    let (lg, sign) = ln_gamma_real(x)?;
    if lg > f64::MAX.ln() {
        return Err(Error::Overflow(format!("gamma({x})")));
    }
    Ok(sign * lg.exp())
}

/// Complementary error function, relative accuracy around 1e-14.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 2.0 {
        1.0 - erf_series(x)
    } else if x > 27.3 {
        0.0
    } else {
        erfc_continued_fraction(x)
    }
}

/// `erf x = 2/√π e^{-x²} Σ 2ⁿ x^{2n+1} / (2n+1)!!`; every term is positive.
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= 2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
    }
    2.0 / PI.sqrt() * (-x2).exp() * sum
}

/// Modified Lentz evaluation of
/// `erfc x = e^{-x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))`.
fn erfc_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..500 {
        let a = k as f64 / 2.0;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / (PI.sqrt() * f)
}

/// Exponentially scaled modified Bessel function `e^{-x} I_ν(x)`.
pub fn bessel_i_scaled(order: f64, x: f64) -> Result<f64> {
    if !(order >= -0.5) || !order.is_finite() {
        return Err(Error::InvalidArgument(format!("bessel order {order} < -0.5")));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::InvalidArgument(format!("bessel argument {x}")));
    }
    if x == 0.0 {
        return if order == 0.0 {
            Ok(1.0)
        } else if order > 0.0 {
            Ok(0.0)
        } else {
            Err(Error::Overflow(format!("I_{order}(0) is infinite")))
        };
    }
    if x > 30.0_f64.max(order * order) {
        Ok(bessel_i_scaled_asymptotic(order, x))
    } else {
        bessel_i_scaled_series(order, x)
    }
}

/// Modified Bessel function of the first kind, real order `ν >= -1/2`.
pub fn bessel_i(order: f64, x: f64) -> Result<f64> {
    let scaled = bessel_i_scaled(order, x)?;
    let ln = scaled.ln() + x;
    if ln > f64::MAX.ln() {
        return Err(Error::Overflow(format!("I_{order}({x})")));
    }
    Ok(scaled * x.exp())
}

fn bessel_i_scaled_series(order: f64, x: f64) -> Result<f64> {
    let half = 0.5 * x;
    let q = half * half;
    let (lg, _) = ln_gamma_real(order + 1.0)?;
    let ln_t0 = order * half.ln() - lg;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * (k + order));
        sum += term;
        if term < 1e-17 * sum && k > q.sqrt() {
            break;
        }
    }
    Ok((ln_t0 - x + sum.ln()).exp())
}

fn bessel_i_scaled_asymptotic(order: f64, x: f64) -> f64 {
    let mu = 4.0 * order * order;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= -(mu - odd * odd) / (8.0 * kf * x);
        if term.abs() > prev {
            break;
        }
        sum += term;
        prev = term.abs();
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (2.0 * PI * x).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!((ln_gamma(c(5.0, 0.0)).unwrap().re - 24f64.ln()).abs() < 1e-13);
        assert!((ln_gamma(c(0.5, 0.0)).unwrap().re - 0.572_364_942_924_700_1).abs() < 1e-13);
        assert!((ln_gamma(c(1.0, 0.0)).unwrap().norm()) < 1e-14);
    }

    #[test]
    fn ln_gamma_recurrence_large_imaginary() {
        let z = c(1.0, 10.0);
        let lhs = ln_gamma(z + 1.0).unwrap();
        let rhs = ln_gamma(z).unwrap() + z.ln();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn ln_gamma_poles() {
        assert!(matches!(ln_gamma(c(0.0, 0.0)), Err(Error::GammaPole { .. })));
        assert!(matches!(ln_gamma(c(-3.0, 0.0)), Err(Error::GammaPole { .. })));
        assert!(ln_gamma(c(-3.0, 1e-6)).is_ok());
        assert!(matches!(gamma_real(0.0), Err(Error::GammaPole { .. })));
        assert!(matches!(gamma_real(-2.0), Err(Error::GammaPole { .. })));
    }

    #[test]
    fn gamma_real_values() {
        assert!((gamma_real(1.0).unwrap() - 1.0).abs() < 1e-15);
        let via_ln = ln_gamma(c(4.5, 0.0)).unwrap().re.exp();
        assert!((gamma_real(4.5).unwrap() - 11.631_728_396_567_448).abs() < 1e-11);
        assert!((gamma_real(4.5).unwrap() - via_ln).abs() < 1e-11);
        assert!((gamma_real(-0.5).unwrap() + 2.0 * PI.sqrt()).abs() < 1e-13);
        assert!(matches!(gamma_real(200.0), Err(Error::Overflow(_))));
    }

    #[test]
    fn erfc_values() {
        assert_eq!(erfc(0.0), 1.0);
        assert!((erfc(1.0) - 0.157_299_207_050_285_13).abs() < 1e-15);
        assert!((erfc(2.0) - 0.004_677_734_981_047_266).abs() < 1e-16);
        assert!((erfc(5.0) / 1.537_459_794_428_034_8e-12 - 1.0).abs() < 1e-12);
        assert_eq!(erfc(40.0), 0.0);
        let mut prev = 2.0;
        for i in 0..300 {
            let v = erfc(-5.0 + i as f64 * 0.1);
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn bessel_half_integer_and_origin() {
        let v = bessel_i(0.5, 1.0).unwrap();
        let exact = (2.0 / PI).sqrt() * 1f64.sinh();
        assert!((v - exact).abs() < 1e-14);
        assert!((v - 0.937_674_888_245_488).abs() < 1e-12);
        // I_{-1/2}(x) = sqrt(2/(πx)) cosh x
        let v = bessel_i(-0.5, 2.5).unwrap();
        assert!((v / ((2.0 / (PI * 2.5)).sqrt() * 2.5f64.cosh()) - 1.0).abs() < 1e-13);
        assert_eq!(bessel_i(0.0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_i(1.3, 0.0).unwrap(), 0.0);
        assert!(bessel_i(-0.5, 0.0).is_err());
    }

    #[test]
    fn bessel_branch_switch_is_continuous() {
        for &nu in &[0.0, 0.25, 1.0, 3.0] {
            let x = 30.0_f64.max(nu * nu);
            let lo = bessel_i_scaled_series(nu, x).unwrap();
            let hi = bessel_i_scaled_asymptotic(nu, x);
            assert!((lo / hi - 1.0).abs() < 1e-12, "nu={nu}: {lo} vs {hi}");
        }
    }

    #[test]
    fn bessel_overflow_is_reported() {
        assert!(matches!(bessel_i(1.0, 800.0), Err(Error::Overflow(_))));
        assert!(bessel_i_scaled(1.0, 800.0).unwrap() > 0.0);
    }
}
