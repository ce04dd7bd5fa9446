//! Standard normal distribution: density, CDF and a high-accuracy quantile.
//!
//! The quantile starts from Wichura's AS 241 (PPND16) rational approximation
//! and applies one Newton step against the erfc-based CDF. The step is taken
//! on the lower tail for `p < 0.5` and on the upper tail otherwise, so that
//! `1 - p` never loses digits.

use crate::error::{Error, Result};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

pub fn normal_ln_pdf(x: f64) -> f64 {
    -LN_SQRT_2PI - 0.5 * x * x
}

/// Φ(x).
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// 1 - Φ(x), accurate in the upper tail.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Φ⁻¹(tau) for tau in (0, 1).
pub fn inverse_normal_cdf(tau: f64) -> Result<f64> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "quantile level must lie in (0, 1), got {tau}"
        )));
    }
    Ok(quantile_unchecked(tau))
}

pub(crate) fn quantile_unchecked(tau: f64) -> f64 {
    let x = ppnd16(tau);
    if !x.is_finite() {
        return x;
    }
    let density = normal_pdf(x);
    if density == 0.0 {
        return x;
    }
    if tau < 0.5 {
        x - (normal_cdf(x) - tau) / density
    } else {
        x + (normal_sf(x) - (1.0 - tau)) / density
    }
}

/// Evaluate a polynomial with coefficients in increasing degree.
fn horner(coef: &[f64], x: f64) -> f64 {
    coef.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

// Wichura's AS241 (PPND16) coefficients.
#[allow(clippy::excessive_precision)]
const CENTRAL_NUM: [f64; 8] = [
    3.387132872796366608,
    133.14166789178437745,
    1971.5909503065514427,
    13731.693765509461125,
    45921.953931549871457,
    67265.770927008700853,
    33430.575583588128105,
    2509.0809287301226727,
];
#[allow(clippy::excessive_precision)]
const CENTRAL_DEN: [f64; 8] = [
    1.0,
    42.313330701600911252,
    687.1870074920579083,
    5394.1960214247511077,
    21213.794301586595867,
    39307.89580009271061,
    28729.085735721942674,
    5226.495278852545925,
];
#[allow(clippy::excessive_precision)]
const NEAR_NUM: [f64; 8] = [
    1.42343711074968357734,
    4.6303378461565452959,
    5.7694972214606914055,
    3.64784832476320460504,
    1.27045825245236838258,
    0.24178072517745061177,
    0.0227238449892691845833,
    7.7454501427834140764e-4,
];
#[allow(clippy::excessive_precision)]
const NEAR_DEN: [f64; 8] = [
    1.0,
    2.05319162663775882187,
    1.6763848301838038494,
    0.68976733498510000455,
    0.14810397642748007459,
    0.0151986665636164571966,
    5.475938084995344946e-4,
    1.05075007164441684324e-9,
];
#[allow(clippy::excessive_precision)]
const FAR_NUM: [f64; 8] = [
    6.6579046435011037772,
    5.4637849111641143699,
    1.7848265399172913358,
    0.29656057182850489123,
    0.026532189526576123093,
    0.0012426609473880784386,
    2.71155556874348757815e-5,
    2.01033439929228813265e-7,
];
#[allow(clippy::excessive_precision)]
const FAR_DEN: [f64; 8] = [
    1.0,
    0.59983220655588793769,
    0.13692988092273580531,
    0.0148753612908506148525,
    7.868691311456132591e-4,
    1.8463183175100546818e-5,
    1.4215117583164458887e-7,
    2.04426310338993978564e-15,
];

fn ppnd16(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q * horner(&CENTRAL_NUM, r) / horner(&CENTRAL_DEN, r);
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let r = (-tail.ln()).sqrt();
    let val = if r <= 5.0 {
        let r = r - 1.6;
        horner(&NEAR_NUM, r) / horner(&NEAR_DEN, r)
    } else {
        let r = r - 5.0;
        horner(&FAR_NUM, r) / horner(&FAR_DEN, r)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bisect(tau: f64) -> f64 {
        let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if normal_cdf(mid) < tau {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn median_is_zero() {
        assert_eq!(inverse_normal_cdf(0.5).unwrap(), 0.0);
    }

    #[test]
    fn familiar_values() {
        let oracle_975 = bisect(0.975);
        let oracle_01 = bisect(0.01);
        assert!((oracle_975 - 1.959964).abs() < 1e-6);
        assert!((oracle_01 + 2.326348).abs() < 1e-6);
        assert!((inverse_normal_cdf(0.975).unwrap() - oracle_975).abs() < 1e-12);
        assert!((inverse_normal_cdf(0.01).unwrap() - oracle_01).abs() < 1e-12);
    }

    #[test]
    fn cdf_round_trip_in_the_tails() {
        for &tau in &[1e-12, 1e-8, 1e-4, 0.3, 0.7, 1.0 - 1e-4, 1.0 - 1e-8] {
            let x = inverse_normal_cdf(tau).unwrap();
            assert!((normal_cdf(x) - tau).abs() < 1e-12, "tau = {tau}");
        }
    }

    #[test]
    fn rejects_closed_endpoints() {
        for bad in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(inverse_normal_cdf(bad).is_err());
        }
    }

    #[test]
    fn antisymmetric() {
        for &tau in &[0.01, 0.05, 0.25, 0.4] {
            let lo = inverse_normal_cdf(tau).unwrap();
            let hi = inverse_normal_cdf(1.0 - tau).unwrap();
            assert!((lo + hi).abs() < 1e-14);
        }
    }
}
