//! The odometer factor `π : O(η) → lim G/Γ_n` at finite depth.

use std::collections::{BTreeMap, HashSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::measures::{orbit_member, EtaView, SetId};
use crate::periods::PeriodTable;
use crate::skeleton::ToeplitzSkeleton;
use crate::tower::{GroupElement, QuotientTower};
use crate::{Budget, CheckResult, Error, Result};

/// A point of the odometer truncated at `depth`: `cosets[n-1] ∈ D_n` for `n = 1..=depth`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OdometerPoint {
    pub depth: usize,
    pub cosets: Vec<GroupElement>,
}

impl OdometerPoint {
    pub fn coset(&self, n: usize) -> &GroupElement {
        &self.cosets[n - 1]
    }

    /// `reduce(c_{n+1}, n) = c_n` for all `n < depth`.
    pub fn is_coherent(&self, tower: &QuotientTower) -> Result<bool> {
        for n in 1..self.depth {
            if tower.reduce(self.coset(n + 1), n)? != *self.coset(n) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Left action of `g` on every coordinate.
    pub fn translate(&self, tower: &QuotientTower, g: &GroupElement) -> Result<OdometerPoint> {
        let cosets = self
            .cosets
            .iter()
            .enumerate()
            .map(|(i, c)| tower.reduce(&tower.mul(g, c)?, i + 1))
            .collect::<Result<_>>()?;
        Ok(OdometerPoint { depth: self.depth, cosets })
    }
}

impl std::fmt::Display for OdometerPoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.cosets.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// `π(σ^{v⁻¹}η) = (reduce(v, n))_{n ≤ depth}`.
pub fn pi_of_orbit(sk: &ToeplitzSkeleton, v: &GroupElement, depth: usize) -> Result<OdometerPoint> {
    if depth > sk.depth() {
        return Err(Error::DepthExceeded { requested: depth, available: sk.depth() });
    }
    let t = sk.tower();
    let cosets = (1..=depth).map(|n| t.reduce(v, n)).collect::<Result<_>>()?;
    Ok(OdometerPoint { depth, cosets })
}

/// `π` from its definition: at each level the unique `w ∈ D_n` with `σ^{v⁻¹}η ∈ σ^{w⁻¹}C_n`.
pub fn pi_by_membership(sk: &ToeplitzSkeleton, v: &GroupElement, depth: usize, budget: &Budget) -> Result<OdometerPoint> {
    if depth > sk.depth() {
        return Err(Error::DepthExceeded { requested: depth, available: sk.depth() });
    }
    let t = sk.tower();
    let mut cosets = Vec::with_capacity(depth);
    for n in 1..=depth {
        let mut found = Vec::new();
        for w in t.enumerate(n, budget)? {
            // σ^{w}σ^{v⁻¹}η is the orbit point of v·w⁻¹.
            let p = t.mul(v, &t.inv(&w)?)?;
            if orbit_member(sk, &p, &SetId::Cn, n, budget)? {
                found.push(w);
            }
        }
        match found.len() {
            1 => cosets.push(found.pop().unwrap()),
            k => {
                return Err(Error::MethodDisagreement {
                    what: format!("π at level {n}"),
                    detail: format!("{k} translates of C_{n} contain the point"),
                })
            }
        }
    }
    Ok(OdometerPoint { depth, cosets })
}

/// Haar mass `1/|G/Γ_n|` of the cylinder over `c ∈ D_n`.
pub fn haar_cylinder(tower: &QuotientTower, c: &GroupElement, n: usize) -> Result<BigRational> {
    if !tower.in_domain(c, n)? {
        return Err(Error::NotInDomain { element: c.to_string(), level: n });
    }
    Ok(BigRational::new(BigInt::from(1), BigInt::from(tower.size(n).clone())))
}

/// Share of the cosets of `Γ_depth` on which `η` is constant, read off the window on `D_S`:
/// the finite-depth shadow of `ν(π(T))`.
pub fn toeplitz_mass_estimate(sk: &ToeplitzSkeleton, depth: usize, budget: &Budget) -> Result<BigRational> {
    if depth > sk.depth() {
        return Err(Error::DepthExceeded { requested: depth, available: sk.depth() });
    }
    // At the construction depth every non-periodic coset holds an undefined cell.
    let window = sk.materialize_window(sk.depth(), budget)?;
    let table = PeriodTable::from_window(sk.tower(), &window, depth)?;
    let forced = table.per(0).len() + table.per(1).len();
    Ok(BigRational::new(forced.into(), BigInt::from(sk.tower().size(depth).clone())))
}

/// For each `c ∈ D_n`, the number of distinct `D_n`-windows of the orbit points `σ^{v⁻¹}η` with
/// `v ∈ D_{n+1}`, `reduce(v, n) = c`. Undefined cells count as a third symbol.
pub fn fiber_profile(sk: &ToeplitzSkeleton, n: usize, budget: &Budget) -> Result<BTreeMap<u64, usize>> {
    if n + 1 > sk.depth() {
        return Err(Error::DepthExceeded { requested: n + 1, available: sk.depth() });
    }
    let t = sk.tower();
    budget.require_enumerable("fiber windows", &(t.size(n + 1) * t.size(n)))?;
    let view = EtaView::new(sk, budget)?;
    let q = view.quotient();
    let (dn, dn1) = (q.sub_size(n), q.sub_size(n + 1));
    Ok((0..dn)
        .into_par_iter()
        .map(|c| {
            let mut seen = HashSet::new();
            for k in 0..dn1 / dn {
                let v = q.lift(c + k * dn, n + 1);
                let w: Vec<Option<u8>> = (0..dn).map(|x| view.at(q.mul(v, q.lift(x, n)))).collect();
                seen.insert(w);
            }
            (c, seen.len())
        })
        .collect())
}

/// `π(g·v) = g·π(v)` on seeded random `g`, `v`.
pub fn equivariance_check(sk: &ToeplitzSkeleton, budget: &Budget) -> CheckResult {
    let name = "equivariance";
    let run = || -> Result<CheckResult> {
        let t = sk.tower();
        let depth = sk.depth();
        let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
        let samples = budget.samples.min(2000);
        for _ in 0..samples {
            let g = t.random_element(&mut rng, 40);
            let v = t.random_element(&mut rng, 40);
            let lhs = pi_of_orbit(sk, &t.mul(&g, &v)?, depth)?;
            let rhs = pi_of_orbit(sk, &v, depth)?.translate(t, &g)?;
            if lhs != rhs || !lhs.is_coherent(t)? {
                return Ok(CheckResult::fail(name, format!("depth {depth}"), format!("g = {g}, v = {v}: {lhs} vs {rhs}")));
            }
        }
        Ok(CheckResult::pass(name, format!("{samples} seeded pairs, depth {depth}")))
    };
    run().unwrap_or_else(|e| CheckResult::inconclusive(name, e.to_string()))
}

/// `μ_m(π⁻¹[c]) = 1/|D_n|` for every `c ∈ D_n`, `n ≤ m < S`.
pub fn pushforward_check(sk: &ToeplitzSkeleton, budget: &Budget) -> CheckResult {
    let name = "pushforward";
    let run = || -> Result<CheckResult> {
        let t = sk.tower();
        let mut pairs = Vec::new();
        for m in 1..sk.depth() {
            let points = match t.enumerate(m, budget) {
                Ok(p) => p,
                Err(_) => break,
            };
            for n in 1..=m {
                let mut counts: BTreeMap<GroupElement, u64> = BTreeMap::new();
                for d in &points {
                    *counts.entry(pi_of_orbit(sk, d, n)?.coset(n).clone()).or_default() += 1;
                }
                let dn = t.size_u64(n).unwrap_or(0);
                let share = points.len() as u64 / dn.max(1);
                if counts.len() as u64 != dn || counts.values().any(|&c| c != share) {
                    return Ok(CheckResult::fail(name, format!("n={n}, m={m}"), "π-cylinder masses are not uniform"));
                }
                pairs.push((n, m));
            }
        }
        if pairs.is_empty() {
            return Ok(CheckResult::inconclusive(name, "no level below depth within budget"));
        }
        Ok(CheckResult::pass(name, format!("(n, m) ∈ {pairs:?}")))
    };
    run().unwrap_or_else(|e| CheckResult::inconclusive(name, e.to_string()))
}

/// The reduction formula for `π` against the membership definition, over `D_depth`.
pub fn pi_membership_check(sk: &ToeplitzSkeleton, budget: &Budget) -> CheckResult {
    let name = "pi-membership";
    let run = || -> Result<CheckResult> {
        let t = sk.tower();
        let depth = (1..=sk.depth())
            .rev()
            .find(|&n| t.size(n) * t.size(n) * t.size(sk.depth()) <= num_bigint::BigUint::from(budget.enumeration) * 16u32)
            .ok_or_else(|| Error::BudgetExceeded {
                what: "π membership scan".into(),
                size: (t.size(1) * t.size(1) * t.size(sk.depth())).to_string(),
                budget: budget.enumeration,
            })?;
        let points = t.enumerate(depth, budget)?;
        for v in &points {
            let a = pi_of_orbit(sk, v, depth)?;
            let b = pi_by_membership(sk, v, depth, budget)?;
            if a != b {
                return Ok(CheckResult::fail(name, format!("depth {depth}"), format!("v = {v}: {a} vs {b}")));
            }
        }
        Ok(CheckResult::pass(name, format!("all v ∈ D_{depth}, levels 1..={depth}")))
    };
    run().unwrap_or_else(|e| CheckResult::inconclusive(name, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::d_exact;
    use crate::presets;
    use crate::tower::DomainStyle;
    use crate::Status;

    fn three(depth: usize) -> ToeplitzSkeleton {
        ToeplitzSkeleton::from_config(&presets::threeadic(DomainStyle::NonNegative), depth).unwrap()
    }

    #[test]
    fn pi_examples() {
        let sk = three(4);
        let p = pi_of_orbit(&sk, &GroupElement::scalar(7), 2).unwrap();
        assert_eq!(p.to_string(), "(1, 7)");
        assert!(p.is_coherent(sk.tower()).unwrap());
        let id = pi_of_orbit(&sk, &GroupElement::scalar(0), 4).unwrap();
        assert!(id.cosets.iter().all(|c| *c == GroupElement::scalar(0)));
        assert!(pi_of_orbit(&sk, &GroupElement::scalar(0), 5).is_err());
        let b = Budget::default();
        assert_eq!(pi_by_membership(&sk, &GroupElement::scalar(7), 2, &b).unwrap(), p);
    }

    #[test]
    fn haar_and_mass() {
        let sk = three(5);
        let b = Budget::default();
        let t = sk.tower();
        assert_eq!(haar_cylinder(t, &GroupElement::scalar(4), 2).unwrap(), BigRational::new(1.into(), 9.into()));
        assert!(haar_cylinder(t, &GroupElement::scalar(9), 2).is_err());
        assert_eq!(toeplitz_mass_estimate(&sk, 2, &b).unwrap(), BigRational::new(5.into(), 9.into()));
        for n in 1..=5 {
            assert_eq!(toeplitz_mass_estimate(&sk, n, &b).unwrap(), *d_exact(&sk, n, &b).unwrap().value());
        }
    }

    #[test]
    fn fibers_and_checks() {
        let sk = three(5);
        let b = Budget::default();
        let f = fiber_profile(&sk, 1, &b).unwrap();
        assert_eq!(f.len(), 3);
        assert!(f.values().all(|&c| c >= 1));
        for r in [equivariance_check(&sk, &b), pushforward_check(&sk, &b), pi_membership_check(&sk, &b)] {
            assert_eq!(r.status, Status::Pass, "{r}");
        }
    }
}
