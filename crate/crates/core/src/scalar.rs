//! Scalar abstraction for the real-valued kernels (products, series, densities).

use std::fmt::Debug;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Num, ToPrimitive};

/// Field-like scalar used by the density and series kernels.
///
/// Exact work uses [`BigRational`]; `f32`/`f64` give quick approximate profiles.
pub trait Scalar: Num + Clone + PartialOrd + Debug {
    fn from_ratio(numer: &BigInt, denom: &BigInt) -> Self;

    fn from_count(n: &BigUint) -> Self {
        Self::from_ratio(&BigInt::from(n.clone()), &BigInt::from(1u8))
    }

    fn approx_f64(&self) -> f64;
}

fn ratio_f64(numer: &BigInt, denom: &BigInt) -> f64 {
    match (numer.to_f64(), denom.to_f64()) {
        (Some(a), Some(b)) if a.is_finite() && b.is_finite() => a / b,
        _ => BigRational::new(numer.clone(), denom.clone()).to_f64().unwrap_or(f64::NAN),
    }
}

impl Scalar for f64 {
    fn from_ratio(numer: &BigInt, denom: &BigInt) -> Self {
        ratio_f64(numer, denom)
    }

    fn approx_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for f32 {
    fn from_ratio(numer: &BigInt, denom: &BigInt) -> Self {
        ratio_f64(numer, denom) as f32
    }

    fn approx_f64(&self) -> f64 {
        *self as f64
    }
}

impl Scalar for BigRational {
    fn from_ratio(numer: &BigInt, denom: &BigInt) -> Self {
        BigRational::new(numer.clone(), denom.clone())
    }

    fn approx_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// `numer / denom` as a rational.
pub fn ratio(numer: impl Into<BigInt>, denom: impl Into<BigInt>) -> BigRational {
    BigRational::new(numer.into(), denom.into())
}

/// Renders a rational as `p/q`.
pub fn fraction_string(r: &BigRational) -> String {
    if r.denom() == &BigInt::from(1u8) {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Decimal rendering with `digits` places, truncated toward zero.
pub fn decimal_string(r: &BigRational, digits: usize) -> String {
    let neg = r.numer() < &BigInt::from(0);
    let numer = if neg { -r.numer().clone() } else { r.numer().clone() };
    let denom = r.denom().clone();
    let int = &numer / &denom;
    let mut rem = numer % &denom;
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    out.push_str(&int.to_string());
    if digits > 0 {
        out.push('.');
        for _ in 0..digits {
            rem *= 10;
            let d = &rem / &denom;
            rem %= &denom;
            out.push_str(&d.to_string());
        }
    }
    out
}

/// `{"num", "den", "decimal"}` rendering used in JSON reports.
pub fn rational_json(r: &BigRational) -> serde_json::Value {
    serde_json::json!({
        "num": r.numer().to_string(),
        "den": r.denom().to_string(),
        "decimal": decimal_string(r, 12),
    })
}

/// Parses `p/q`, `p` or a plain decimal like `0.5`.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q == BigInt::from(0) {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    if let Some((a, b)) = s.split_once('.') {
        let neg = a.starts_with('-');
        let whole: BigInt = if a.is_empty() || a == "-" { BigInt::from(0) } else { a.parse().ok()? };
        if b.is_empty() || !b.bytes().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let frac: BigInt = b.parse().ok()?;
        let scale = num_traits::pow(BigInt::from(10), b.len());
        let frac = if neg { -frac } else { frac };
        return Some(BigRational::new(whole * &scale + frac, scale));
    }
    Some(BigRational::from_integer(s.parse().ok()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_rendering() {
        assert_eq!(decimal_string(&ratio(1, 3), 4), "0.3333");
        assert_eq!(decimal_string(&ratio(-5, 4), 2), "-1.25");
        assert_eq!(fraction_string(&ratio(6, 3)), "2");
    }

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rational("1/2"), Some(ratio(1, 2)));
        assert_eq!(parse_rational("0.25"), Some(ratio(1, 4)));
        assert_eq!(parse_rational("-0.5"), Some(ratio(-1, 2)));
        assert_eq!(parse_rational("3"), Some(ratio(3, 1)));
        assert_eq!(parse_rational("1/0"), None);
    }

    #[test]
    fn float_and_exact_agree() {
        let a = BigInt::from(2);
        let b = BigInt::from(7);
        let exact = <BigRational as Scalar>::from_ratio(&a, &b);
        assert!((exact.approx_f64() - <f64 as Scalar>::from_ratio(&a, &b)).abs() < 1e-15);
        assert!((<f32 as Scalar>::from_ratio(&a, &b) as f64 - 2.0 / 7.0).abs() < 1e-6);
    }
}
