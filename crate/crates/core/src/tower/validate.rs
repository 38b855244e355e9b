use std::collections::HashSet;

use super::{GroupElement, QuotientTower};
use crate::{Budget, CheckResult};

const NAME: &str = "decom";

/// Checks the nested fundamental domain axioms on every level that fits the enumeration budget.
pub fn validate_tower(tower: &QuotientTower, budget: &Budget) -> CheckResult {
    let mut domains = Vec::new();
    for n in 0..=tower.depth() {
        match tower.enumerate(n, budget) {
            Ok(d) => domains.push(d),
            Err(_) => break,
        }
    }
    validate_domains(tower, &domains)
}

/// Same checks against explicitly supplied domains `domains[n] = D_n` (n = 0, 1, …).
pub fn validate_domains(tower: &QuotientTower, domains: &[Vec<GroupElement>]) -> CheckResult {
    let top = domains.len().saturating_sub(1);
    let scope = format!("exhaustive D_0..D_{top}");
    match first_violation(tower, domains) {
        Some(c) => CheckResult::fail(NAME, scope, c),
        None => CheckResult::pass(NAME, scope),
    }
}

fn first_violation(tower: &QuotientTower, domains: &[Vec<GroupElement>]) -> Option<String> {
    let id = tower.identity();
    let sets: Vec<HashSet<&GroupElement>> = domains.iter().map(|d| d.iter().collect()).collect();
    for (n, dn) in domains.iter().enumerate() {
        if !sets[n].contains(&id) {
            return Some(format!("identity missing from D_{n}"));
        }
        if n + 1 < domains.len() {
            if let Some(x) = dn.iter().find(|x| !sets[n + 1].contains(x)) {
                return Some(format!("{x} ∈ D_{n} but not in D_{}", n + 1));
            }
        }
        let mut hit = HashSet::new();
        for x in dn {
            let r = match tower.reduce(x, n) {
                Ok(r) => r,
                Err(e) => return Some(format!("{x}: {e}")),
            };
            if !hit.insert(r.clone()) {
                return Some(format!("D_{n} meets coset {r}Γ_{n} twice (at {x})"));
            }
        }
        if (hit.len() as u64) != tower.size_u64(n).unwrap_or(u64::MAX) {
            let missing = (0..tower.size_u64(n).unwrap_or(0))
                .filter_map(|i| tower.element_at(n, i).ok())
                .find(|c| !hit.contains(c));
            return Some(match missing {
                Some(c) => format!("coset {c}Γ_{n} has no representative in D_{n}"),
                None => format!("D_{n} has {} elements, expected {}", hit.len(), tower.size(n)),
            });
        }
        if n > 0 && tower.size(n) <= tower.size(n - 1) {
            return Some(format!("|G/Γ_{n}| does not increase"));
        }
    }
    for j in 1..domains.len() {
        for i in 0..j {
            let mut seen = HashSet::new();
            let vs: Vec<&GroupElement> =
                domains[j].iter().filter(|v| tower.in_subgroup(v, i).unwrap_or(false)).collect();
            for v in &vs {
                for u in &domains[i] {
                    let p = tower.mul(v, u).ok()?;
                    if !sets[j].contains(&p) {
                        return Some(format!("{v}·{u} = {p} leaves D_{j}"));
                    }
                    if !seen.insert(p.clone()) {
                        return Some(format!("tiles of D_{j} by D_{i} overlap at {p}"));
                    }
                }
            }
            if seen.len() != domains[j].len() {
                return Some(format!("Γ_{i}-translates of D_{i} cover {} of {} elements of D_{j}", seen.len(), domains[j].len()));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::check::Status;
    use crate::tower::{DomainStyle, TowerConfig};

    #[test]
    fn threeadic_and_lattice_pass() {
        let t = QuotientTower::build(&TowerConfig::line(vec![3, 3, 3], DomainStyle::NonNegative)).unwrap();
        let r = validate_tower(&t, &Budget::default());
        assert_eq!(r.status, Status::Pass, "{r}");
        assert_eq!(r.scope, "exhaustive D_0..D_3");
        let l = QuotientTower::build(
            &TowerConfig::from_json(r#"{"kind":"zd","dim":2,"indices":[[3,3],[3,3]],"domain":"nonneg"}"#).unwrap(),
        )
        .unwrap();
        assert_eq!(l.size_u64(2), Some(81));
        assert_eq!(validate_tower(&l, &Budget::default()).status, Status::Pass);
    }

    #[test]
    fn corrupted_domain_fails_with_coset() {
        let t = QuotientTower::build(&TowerConfig::line(vec![3, 3, 3], DomainStyle::NonNegative)).unwrap();
        let mut d: Vec<Vec<GroupElement>> = (0..=2).map(|n| t.enumerate(n, &Budget::default()).unwrap()).collect();
        d[2].retain(|x| *x != GroupElement::scalar(5));
        let r = validate_domains(&t, &d);
        assert_eq!(r.status, Status::Fail);
        assert!(r.counterexample.unwrap().contains("5Γ_2"));
    }
}
