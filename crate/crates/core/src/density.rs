//! Density of periodic positions `d_n`, the series `L` and the regular/irregular verdict.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde_json::json;

use crate::periods::PeriodTable;
use crate::scalar::{decimal_string, rational_json, ratio, Scalar};
use crate::skeleton::{j_size, ToeplitzSkeleton};
use crate::tower::{QuotientTower, TailSpec};
use crate::{Budget, Error, Result};

fn big(n: &BigUint) -> BigInt {
    BigInt::from(n.clone())
}

/// `|D_n ∩ Per(η,Γ_n)| / |D_n|` by enumerating the period sets.
pub fn d_enumeration(sk: &ToeplitzSkeleton, n: usize, budget: &Budget) -> Result<BigRational> {
    let t = PeriodTable::from_skeleton(sk, n, budget)?;
    let count = t.per[0].len() + t.per[1].len();
    Ok(BigRational::new(BigInt::from(count), big(sk.tower().size(n))))
}

/// `Σ_{i<n} |J(i)| / |D_{i+1}|`.
pub fn d_recursion<S: Scalar>(tower: &QuotientTower, n: usize) -> Result<S> {
    tower.check_level(n)?;
    let mut acc = S::zero();
    for i in 0..n {
        acc = acc + S::from_ratio(&big(&j_size(tower, i)), &big(tower.size(i + 1)));
    }
    Ok(acc)
}

/// `1 − (1 − 1/|D_1|) ∏_{j=1}^{n−1} (1 − |D_j|/|D_{j+1}|)`.
pub fn d_closed_form<S: Scalar>(tower: &QuotientTower, n: usize) -> Result<S> {
    tower.check_level(n)?;
    if n == 0 {
        return Ok(S::zero());
    }
    Ok(S::one() - complement_product::<S>(tower, n - 1))
}

/// `(1 − 1/|D_1|) ∏_{j=1}^{terms} (1 − |D_j|/|D_{j+1}|)`.
pub fn complement_product<S: Scalar>(tower: &QuotientTower, terms: usize) -> S {
    let one = BigInt::one();
    let mut p = S::one() - S::from_ratio(&one, &BigInt::from(tower.base(1)));
    for j in 1..=terms {
        p = p * (S::one() - S::from_ratio(&one, &BigInt::from(tower.base(j + 1))));
    }
    p
}

/// The three routes to `d_n`; enumeration is absent when the level is beyond the skeleton
/// depth or the enumeration budget.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DensityTriple {
    pub level: usize,
    pub enumeration: Option<BigRational>,
    pub recursion: BigRational,
    pub closed_form: BigRational,
}

impl DensityTriple {
    pub fn value(&self) -> &BigRational {
        &self.recursion
    }
}

/// `d_n` by every available route; all of them must agree exactly.
pub fn d_exact(sk: &ToeplitzSkeleton, n: usize, budget: &Budget) -> Result<DensityTriple> {
    let tower = sk.tower();
    let recursion: BigRational = d_recursion(tower, n)?;
    let closed_form: BigRational = d_closed_form(tower, n)?;
    let enumeration = if n <= sk.depth() && budget.enumerable(tower.size(n)) {
        Some(d_enumeration(sk, n, budget)?)
    } else {
        None
    };
    let disagree = |what: &str, a: &BigRational, b: &BigRational| Error::MethodDisagreement {
        what: format!("d_{n}"),
        detail: format!("{what}: {a} vs {b}"),
    };
    if recursion != closed_form {
        return Err(disagree("recursion/closed form", &recursion, &closed_form));
    }
    if let Some(e) = &enumeration {
        if e != &recursion {
            return Err(disagree("enumeration/recursion", e, &recursion));
        }
    }
    Ok(DensityTriple { level: n, enumeration, recursion, closed_form })
}

/// Largest `|(1 − d_{n+1}) − (1 − d_n)(1 − |D_n|/|D_{n+1}|)|` over `1 ≤ n < levels`.
pub fn telescoping_defect<S: Scalar>(tower: &QuotientTower, levels: usize) -> Result<S> {
    let mut worst = S::zero();
    for n in 1..levels {
        let a: S = S::one() - d_recursion::<S>(tower, n + 1)?;
        let b: S = (S::one() - d_recursion::<S>(tower, n)?)
            * (S::one() - S::from_ratio(&BigInt::one(), &BigInt::from(tower.base(n + 1))));
        let diff = if a > b { a - b } else { b - a };
        if diff > worst {
            worst = diff;
        }
    }
    Ok(worst)
}

/// `d_1, …, d_levels` in a chosen scalar.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityProfile<S> {
    pub d: Vec<S>,
    pub complement: Vec<S>,
}

impl<S: Scalar> DensityProfile<S> {
    pub fn compute(tower: &QuotientTower, levels: usize) -> Result<Self> {
        tower.check_level(levels)?;
        let mut d = Vec::with_capacity(levels);
        let mut complement = Vec::with_capacity(levels);
        for n in 1..=levels {
            let v: S = d_closed_form(tower, n)?;
            complement.push(S::one() - v.clone());
            d.push(v);
        }
        Ok(DensityProfile { d, complement })
    }

    pub fn is_increasing(&self) -> bool {
        self.d.windows(2).all(|w| w[0] < w[1])
    }
}

/// Partial sum of `L` and the declared bound on what follows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LSeries {
    pub terms: usize,
    pub partial: BigRational,
    /// `None` when the tail is unbounded (divergent or undeclared).
    pub tail_bound: Option<BigRational>,
}

/// `1/|D_1| + Σ_{j=1}^{terms} |D_j|/|D_{j+1}|` and a bound on `Σ_{j>terms}`.
///
/// Known terms past `terms` are summed exactly; after the last known term a geometric tail
/// `t·r/(1−r)` is added.
pub fn l_series(tower: &QuotientTower, terms: usize) -> Result<LSeries> {
    let known = tower.depth().saturating_sub(1);
    if terms > known {
        return Err(Error::DepthExceeded { requested: terms + 1, available: tower.depth() });
    }
    let mut partial = tower.series_head();
    for j in 1..=terms {
        partial += tower.series_term(j);
    }
    let tail_bound = match tower.tail() {
        Some(TailSpec::Geometric { ratio: r }) if known >= 1 => {
            let r = &r.0;
            let mut t = BigRational::zero();
            for j in terms + 1..=known {
                t += tower.series_term(j);
            }
            let last = tower.series_term(known);
            Some(t + last * r / (BigRational::one() - r))
        }
        _ => None,
    };
    Ok(LSeries { terms, partial, tail_bound })
}

/// Rounds `q ≥ 0` up to a multiple of `2^-bits`.
fn round_up(q: &BigRational, bits: usize) -> BigRational {
    let scale = BigInt::one() << bits;
    let scaled = q * BigRational::from_integer(scale.clone());
    BigRational::new(scaled.ceil().to_integer(), scale)
}

/// Certified upper bound on `e^x` for rational `x ≥ 0`.
pub fn exp_upper(x: &BigRational) -> BigRational {
    assert!(!x.is_negative());
    let half = ratio(1, 2);
    let mut y = x.clone();
    let mut halvings = 0;
    while y > half {
        y /= BigRational::from_integer(2.into());
        halvings += 1;
    }
    // For 0 ≤ y ≤ 1/2: e^y ≤ Σ_{i≤N} y^i/i! + 2·y^{N+1}/(N+1)!.
    let n = 30;
    let mut term = BigRational::one();
    let mut sum = BigRational::one();
    for i in 1..=n {
        term = term * &y / BigRational::from_integer(i.into());
        sum += &term;
    }
    term = term * &y / BigRational::from_integer((n + 1).into());
    sum += term * BigRational::from_integer(2.into());
    let mut up = round_up(&sum, 256);
    for _ in 0..halvings {
        up = round_up(&(&up * &up), 256);
    }
    up
}

/// Certified lower bound on `e^{-x}` for `x ≥ 0`.
pub fn exp_neg_lower(x: &BigRational) -> BigRational {
    exp_upper(x).recip()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Regular,
    Irregular,
    Inconclusive(String),
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Regular => f.write_str("Regular"),
            Verdict::Irregular => f.write_str("Irregular"),
            Verdict::Inconclusive(why) => write!(f, "Inconclusive ({why})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DensityReport {
    /// `d_1, …, d_levels`.
    pub d_seq: Vec<BigRational>,
    pub l_partial: BigRational,
    pub l_tail_bound: Option<BigRational>,
    /// `(1 − 1/|D_1|) ∏_{j<depth} (1 − |D_j|/|D_{j+1}|) = 1 − d_depth`.
    pub product_partial: BigRational,
    pub d_interval: (BigRational, BigRational),
    /// Certified lower bound on `e^{-2L}` (irregular case).
    pub exp_lower: Option<BigRational>,
    pub verdict: Verdict,
}

impl DensityReport {
    /// `1 − e^{-2L} < 1/4`, certified.
    pub fn small_exp_condition(&self) -> Option<bool> {
        self.exp_lower.as_ref().map(|e| BigRational::one() - e < ratio(1, 4))
    }

    /// `d < 1 − d` follows from `d_interval.upper < 1/2`.
    pub fn d_below_half(&self) -> bool {
        self.d_interval.1 < ratio(1, 2)
    }

    pub fn width(&self) -> BigRational {
        &self.d_interval.1 - &self.d_interval.0
    }

    pub fn to_json(&self) -> serde_json::Value {
        let opt = |r: &Option<BigRational>| r.as_ref().map(rational_json).unwrap_or(json!("unbounded"));
        json!({
            "d_seq": self.d_seq.iter().map(rational_json).collect::<Vec<_>>(),
            "L_partial": rational_json(&self.l_partial),
            "L_tail_bound": opt(&self.l_tail_bound),
            "product_partial": rational_json(&self.product_partial),
            "d_interval": {
                "lower": rational_json(&self.d_interval.0),
                "upper": rational_json(&self.d_interval.1),
            },
            "exp_neg_2L_lower": self.exp_lower.as_ref().map(rational_json),
            "one_minus_exp_below_quarter": self.small_exp_condition(),
            "d_below_complement": self.d_below_half(),
            "verdict": self.verdict.to_string(),
        })
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, d) in self.d_seq.iter().enumerate() {
            out.push_str(&format!("d_{} = {} ≈ {}\n", i + 1, crate::scalar::fraction_string(d), decimal_string(d, 9)));
        }
        out.push_str(&format!("L partial ≈ {}\n", decimal_string(&self.l_partial, 9)));
        match &self.l_tail_bound {
            Some(t) => out.push_str(&format!("L tail ≤ {}\n", decimal_string(t, 12))),
            None => out.push_str("L tail unbounded\n"),
        }
        out.push_str(&format!(
            "d ∈ [{}, {}]\n",
            decimal_string(&self.d_interval.0, 12),
            decimal_string(&self.d_interval.1, 12)
        ));
        if let Some(e) = &self.exp_lower {
            out.push_str(&format!("e^(-2L) ≥ {}\n", decimal_string(e, 12)));
        }
        out.push_str(&format!("verdict: {}\n", self.verdict));
        out
    }
}

/// Regular iff `L` diverges; decided from the declared tail.
///
/// `levels` bounds `d_seq`; the interval always uses every known level.
pub fn regularity_verdict(tower: &QuotientTower, levels: usize) -> Result<DensityReport> {
    let depth = tower.depth();
    let levels = levels.min(depth);
    let d_seq = (1..=levels).map(|n| d_closed_form(tower, n)).collect::<Result<Vec<BigRational>>>()?;
    let known = depth.saturating_sub(1);
    let l = l_series(tower, known)?;
    let product_partial: BigRational = complement_product(tower, known);
    let d_last = BigRational::one() - &product_partial;
    let mut report = DensityReport {
        d_seq,
        l_partial: l.partial.clone(),
        l_tail_bound: l.tail_bound.clone(),
        product_partial: product_partial.clone(),
        d_interval: (d_last.clone(), BigRational::one()),
        exp_lower: None,
        verdict: Verdict::Inconclusive(String::new()),
    };
    match (tower.tail(), &l.tail_bound) {
        (Some(TailSpec::Divergent { .. }), _) => report.verdict = Verdict::Regular,
        (Some(TailSpec::Geometric { ratio: r }), Some(tail)) if r.0 < BigRational::one() && tail < &ratio(1, 2) => {
            // ∏(1 − t_j) ≥ 1 − Σ t_j over the tail.
            let upper = BigRational::one() - &product_partial * (BigRational::one() - tail);
            let l_upper = &l.partial + tail;
            let e = exp_neg_lower(&(l_upper * BigRational::from_integer(2.into())));
            // 1 − x ≥ e^{-2x} on [0, 1/2] gives d ≤ 1 − e^{-2L}.
            let alt = BigRational::one() - &e;
            report.d_interval.1 = if alt < upper { alt } else { upper };
            report.exp_lower = Some(e);
            report.verdict = Verdict::Irregular;
        }
        (Some(TailSpec::Geometric { .. }), _) => {
            report.verdict = Verdict::Inconclusive("geometric tail needs at least two levels and ratio < 1".into())
        }
        (None, _) => report.verdict = Verdict::Inconclusive("no tail behaviour declared".into()),
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tower::{DomainStyle, TowerConfig};
    use num_traits::ToPrimitive;

    fn threeadic(depth: usize) -> QuotientTower {
        let cfg = TowerConfig::line(vec![3; depth], DomainStyle::NonNegative)
            .with_tail(TailSpec::Divergent { min_term: crate::tower::ConfigRatio(ratio(1, 3)) });
        QuotientTower::build(&cfg).unwrap()
    }

    fn irregular(indices: Vec<u64>) -> QuotientTower {
        let cfg = TowerConfig::line(indices, DomainStyle::Centered)
            .with_tail(TailSpec::Geometric { ratio: crate::tower::ConfigRatio(ratio(1, 2)) });
        QuotientTower::build(&cfg).unwrap()
    }

    #[test]
    fn threeadic_values() {
        let sk = ToeplitzSkeleton::build(threeadic(6), 5).unwrap();
        let b = Budget::default();
        let want = [ratio(1, 3), ratio(5, 9), ratio(19, 27), ratio(65, 81), ratio(211, 243)];
        for (n, w) in (1..=5).zip(want.iter()) {
            let t = d_exact(&sk, n, &b).unwrap();
            assert_eq!(t.enumeration.as_ref(), Some(w));
            assert_eq!(&t.closed_form, w);
        }
        assert_eq!(BigRational::one() - d_closed_form::<BigRational>(sk.tower(), 2).unwrap(), ratio(4, 9));
        assert!(telescoping_defect::<BigRational>(sk.tower(), 6).unwrap().is_zero());
    }

    #[test]
    fn float_profile_tracks_exact() {
        let t = threeadic(8);
        let f = DensityProfile::<f64>::compute(&t, 8).unwrap();
        let e = DensityProfile::<BigRational>::compute(&t, 8).unwrap();
        assert!(f.is_increasing() && e.is_increasing());
        for (a, b) in f.d.iter().zip(&e.d) {
            assert!((a - b.to_f64().unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn l_series_examples() {
        let t = irregular(vec![15, 31, 63, 127, 255]);
        let l = l_series(&t, 3).unwrap();
        assert_eq!(l.partial, ratio(1, 15) + ratio(1, 31) + ratio(1, 63) + ratio(1, 127));
        assert!(l.tail_bound.unwrap() <= ratio(2, 255));
        assert_eq!(l_series(&t, 0).unwrap().partial, ratio(1, 15));
        assert_eq!(l_series(&threeadic(4), 2).unwrap().tail_bound, None);
    }

    #[test]
    fn verdicts() {
        let r = regularity_verdict(&threeadic(6), 6).unwrap();
        assert_eq!(r.verdict, Verdict::Regular);
        assert_eq!(r.d_seq[0], ratio(1, 3));
        let t = irregular((1..=20).map(|j| (1u64 << (j + 3)) - 1).collect());
        let r = regularity_verdict(&t, 4).unwrap();
        assert_eq!(r.verdict, Verdict::Irregular);
        assert!(r.d_interval.1 < ratio(1, 4));
        assert!(r.width() < ratio(1, 1_000_000));
        assert_eq!(r.small_exp_condition(), Some(true));
        assert!(r.d_below_half());
        let single = QuotientTower::build(&TowerConfig::line(vec![5], DomainStyle::NonNegative)).unwrap();
        assert!(matches!(regularity_verdict(&single, 1).unwrap().verdict, Verdict::Inconclusive(_)));
    }

    #[test]
    fn exp_bounds() {
        for (x, e) in [(0.0, 1.0f64), (0.3, (-0.3f64).exp()), (3.0, (-3.0f64).exp())] {
            let lo = exp_neg_lower(&BigRational::from_float(x).unwrap()).to_f64().unwrap();
            assert!(lo <= e && e - lo < 1e-12, "{x}");
        }
    }
}
