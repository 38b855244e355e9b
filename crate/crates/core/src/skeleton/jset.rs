use std::collections::HashSet;

use num_bigint::BigUint;
use num_traits::One;

use crate::tower::{GroupElement, QuotientTower};
use crate::{Budget, Result};

/// `J(n)` in tower enumeration order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JSet {
    pub level: usize,
    pub elements: Vec<GroupElement>,
}

impl JSet {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        self.elements.contains(g)
    }
}

/// `J(n) = D_n \ ⋃_{i<n} J(i)Γ_{i+1}`, computed from the definition.
pub fn j_set(tower: &QuotientTower, n: usize, budget: &Budget) -> Result<JSet> {
    Ok(j_sets_upto(tower, n, budget)?.pop().expect("level 0 present"))
}

/// `J(0), …, J(n)` from the definition.
pub fn j_sets_upto(tower: &QuotientTower, n: usize, budget: &Budget) -> Result<Vec<JSet>> {
    tower.check_level(n)?;
    budget.require_enumerable(&format!("D_{n}"), tower.size(n))?;
    let mut out = vec![JSet { level: 0, elements: vec![tower.identity()] }];
    let mut members: Vec<HashSet<GroupElement>> = vec![out[0].elements.iter().cloned().collect()];
    for level in 1..=n {
        let mut elements = Vec::new();
        for d in tower.enumerate(level, budget)? {
            let mut covered = false;
            for (i, set) in members.iter().enumerate() {
                if set.contains(&tower.reduce(&d, i + 1)?) {
                    covered = true;
                    break;
                }
            }
            if !covered {
                elements.push(d);
            }
        }
        members.push(elements.iter().cloned().collect());
        out.push(JSet { level, elements });
    }
    Ok(out)
}

/// `J(n)` by the translate recursion `J(n) = ⋃_{γ ∈ (D_n ∩ Γ_{n-1}) \ {1}} γ J(n-1)` for `n ≥ 2`;
/// levels 0 and 1 come from the definition.
pub fn j_set_recursive(tower: &QuotientTower, n: usize, budget: &Budget) -> Result<JSet> {
    tower.check_level(n)?;
    budget.require_enumerable(&format!("D_{n}"), tower.size(n))?;
    if n <= 1 {
        return j_set(tower, n, budget);
    }
    let prev = j_set_recursive(tower, n - 1, budget)?;
    let id = tower.identity();
    let mut gammas = Vec::new();
    for d in tower.enumerate(n, budget)? {
        if d != id && tower.in_subgroup(&d, n - 1)? {
            gammas.push(d);
        }
    }
    let mut elements = Vec::with_capacity(gammas.len() * prev.len());
    for g in &gammas {
        for u in &prev.elements {
            elements.push(tower.mul(g, u)?);
        }
    }
    let mut keyed: Vec<(BigUint, GroupElement)> = Vec::with_capacity(elements.len());
    for e in elements {
        keyed.push((tower.coset_index_big(&e, n)?, e));
    }
    keyed.sort();
    keyed.dedup_by(|a, b| a.0 == b.0);
    Ok(JSet { level: n, elements: keyed.into_iter().map(|(_, e)| e).collect() })
}

/// `|J(n)| = ∏_{i ≤ n} ([Γ_{i-1} : Γ_i] − 1)`.
pub fn j_size(tower: &QuotientTower, n: usize) -> BigUint {
    (1..=n.min(tower.depth())).fold(BigUint::one(), |acc, i| acc * (tower.base(i) - 1))
}

/// The `t`-th (1-based) element of `J(k)` in enumeration order, as digits.
pub fn j_element_digits(tower: &QuotientTower, k: usize, t: u64) -> Vec<u64> {
    let mut r = t - 1;
    (1..=k)
        .map(|i| {
            let b = tower.base(i) - 1;
            let d = r % b;
            r /= b;
            if d < tower.identity_digit(i) {
                d
            } else {
                d + 1
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tower::{DomainStyle, TowerConfig};

    fn threeadic() -> QuotientTower {
        QuotientTower::build(&TowerConfig::line(vec![3; 6], DomainStyle::NonNegative)).unwrap()
    }

    fn ints(j: &JSet) -> Vec<String> {
        j.elements.iter().map(|e| e.to_string()).collect()
    }

    #[test]
    fn definitional_sets() {
        let t = threeadic();
        let b = Budget::default();
        assert_eq!(ints(&j_set(&t, 0, &b).unwrap()), ["0"]);
        assert_eq!(ints(&j_set(&t, 1, &b).unwrap()), ["1", "2"]);
        assert_eq!(ints(&j_set(&t, 2, &b).unwrap()), ["4", "5", "7", "8"]);
        assert_eq!(ints(&j_set(&t, 3, &b).unwrap()), ["13", "14", "16", "17", "22", "23", "25", "26"]);
    }

    #[test]
    fn recursion_and_size_agree() {
        let t = threeadic();
        let b = Budget::default();
        for n in 0..=6 {
            let d = j_set(&t, n, &b).unwrap();
            assert_eq!(d, j_set_recursive(&t, n, &b).unwrap(), "level {n}");
            assert_eq!(BigUint::from(d.len()), j_size(&t, n));
            for (i, e) in d.elements.iter().enumerate() {
                assert_eq!(&t.element_from_digits(&j_element_digits(&t, n, i as u64 + 1)), e);
            }
        }
    }

    #[test]
    fn budget_refuses_large_levels() {
        let t = threeadic();
        let b = Budget { enumeration: 100, ..Budget::default() };
        assert!(j_set(&t, 5, &b).is_err());
        assert_eq!(j_size(&t, 5), BigUint::from(32u8));
    }
}
