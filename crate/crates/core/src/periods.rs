//! Period sets `Per(x, Γ_n, α)` stored as subsets of `G/Γ_n`, and the identities they satisfy.

use std::collections::{BTreeSet, HashSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::skeleton::{j_element_digits, j_sets_upto, SymbolWindow, ToeplitzSkeleton};
use crate::tower::{GroupElement, Quotient, QuotientTower};
use crate::{Budget, CheckResult, Error, Result};

/// A set of `Γ_n`-cosets, stored as enumeration indices of their representatives in `D_n`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct CosetSet {
    level: usize,
    members: BTreeSet<u64>,
}

impl CosetSet {
    pub fn new(level: usize) -> Self {
        CosetSet { level, members: BTreeSet::new() }
    }

    pub fn from_indices(level: usize, it: impl IntoIterator<Item = u64>) -> Self {
        CosetSet { level, members: it.into_iter().collect() }
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, idx: u64) -> bool {
        self.members.contains(&idx)
    }

    pub fn insert(&mut self, idx: u64) {
        self.members.insert(idx);
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.members.iter().copied()
    }

    pub fn union(&self, other: &CosetSet) -> CosetSet {
        assert_eq!(self.level, other.level);
        CosetSet { level: self.level, members: self.members.union(&other.members).copied().collect() }
    }

    pub fn difference(&self, other: &CosetSet) -> CosetSet {
        assert_eq!(self.level, other.level);
        CosetSet { level: self.level, members: self.members.difference(&other.members).copied().collect() }
    }

    pub fn intersection(&self, other: &CosetSet) -> CosetSet {
        assert_eq!(self.level, other.level);
        CosetSet { level: self.level, members: self.members.intersection(&other.members).copied().collect() }
    }

    /// `g·S` for `g` given as an index of `q`'s level.
    pub fn translate(&self, q: &Quotient<'_>, g: u64) -> CosetSet {
        assert_eq!(q.level(), self.level);
        CosetSet { level: self.level, members: self.members.iter().map(|&c| q.mul(g, c)).collect() }
    }

    /// Preimage under `G/Γ_m → G/Γ_level` for `m ≥ level`.
    pub fn lift_to(&self, q: &Quotient<'_>) -> CosetSet {
        let m = q.level();
        assert!(m >= self.level);
        let n = self.level;
        CosetSet { level: m, members: (0..q.size()).filter(|&d| self.contains(q.project(d, n))).collect() }
    }

    pub fn elements(&self, tower: &QuotientTower) -> Result<Vec<GroupElement>> {
        let q = tower.quotient(self.level)?;
        Ok(self.members.iter().map(|&i| q.element(i)).collect())
    }

    pub fn to_csv(&self, tower: &QuotientTower) -> Result<String> {
        let mut out = String::from("representative\n");
        for e in self.elements(tower)? {
            out.push_str(&format!("\"{e}\"\n"));
        }
        Ok(out)
    }
}

/// `Per(x, Γ_n, 0)` and `Per(x, Γ_n, 1)` at one level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeriodTable {
    pub level: usize,
    pub per: [CosetSet; 2],
}

impl PeriodTable {
    /// Scans every cell of a window at level `≥ n`: a coset is `α`-periodic iff all its cells
    /// are defined and equal `α`.
    pub fn from_window(tower: &QuotientTower, window: &SymbolWindow, n: usize) -> Result<Self> {
        if n > window.level() {
            return Err(Error::DepthExceeded { requested: n, available: window.level() });
        }
        let size = tower.quotient(n)?.size() as usize;
        // 0 unseen, 1 all zero, 2 all one, 3 mixed or undefined
        let mut state = vec![0u8; size];
        for idx in 0..window.len() {
            let c = (idx % size as u64) as usize;
            let s = match window.get(idx) {
                Some(0) => 1,
                Some(_) => 2,
                None => 3,
            };
            state[c] = match state[c] {
                0 => s,
                x if x == s => x,
                _ => 3,
            };
        }
        let pick = |v: u8| CosetSet::from_indices(n, (0..size as u64).filter(|&c| state[c as usize] == v));
        Ok(PeriodTable { level: n, per: [pick(1), pick(2)] })
    }

    /// Structural route: `dΓ_n` is periodic iff its covering level is below `n`.
    pub fn from_skeleton(sk: &ToeplitzSkeleton, n: usize, budget: &Budget) -> Result<Self> {
        if n > sk.depth() {
            return Err(Error::DepthExceeded { requested: n, available: sk.depth() });
        }
        let size = budget.require_enumerable(&format!("D_{n}"), sk.tower().size(n))?;
        let mut per = [CosetSet::new(n), CosetSet::new(n)];
        for d in 0..size {
            if sk.level_of_index(n, d) < n {
                let v = sk.eval_index(n, d).expect("covered below depth");
                per[v as usize].insert(d);
            }
        }
        Ok(PeriodTable { level: n, per })
    }

    pub fn per(&self, alpha: u8) -> &CosetSet {
        &self.per[alpha as usize]
    }

    /// `Per(x, Γ_n)`.
    pub fn periodic(&self) -> CosetSet {
        self.per[0].union(&self.per[1])
    }
}

/// `Per(η, Γ_n, α)` for the constructed array.
pub fn per_set(sk: &ToeplitzSkeleton, n: usize, alpha: u8, budget: &Budget) -> Result<CosetSet> {
    Ok(PeriodTable::from_skeleton(sk, n, budget)?.per[alpha as usize].clone())
}

/// `⋃_{i<n} J(i)Γ_{i+1}` reduced mod `Γ_n`, from definitional `J` sets.
pub fn covered_union(tower: &QuotientTower, n: usize, budget: &Budget) -> Result<CosetSet> {
    let q = tower.quotient(n)?;
    budget.require_enumerable(&format!("D_{n}"), tower.size(n))?;
    let js = if n == 0 { Vec::new() } else { j_sets_upto(tower, n - 1, budget)? };
    let mut keys: Vec<HashSet<u64>> = Vec::new();
    for (i, j) in js.iter().enumerate() {
        let qi = tower.quotient(i + 1)?;
        keys.push(j.elements.iter().map(|e| qi.index(e)).collect::<Result<_>>()?);
    }
    Ok(CosetSet::from_indices(
        n,
        (0..q.size()).filter(|&d| keys.iter().enumerate().any(|(i, k)| k.contains(&q.project(d, i + 1)))),
    ))
}

/// Period-set identity and fresh-set placement on the skeleton's own window.
pub fn per_eq_check(sk: &ToeplitzSkeleton, n: usize, budget: &Budget) -> CheckResult {
    if n > sk.depth() {
        return CheckResult::inconclusive("per-eq", format!("level {n} beyond construction depth {}", sk.depth()));
    }
    match sk.materialize_window(sk.depth(), budget) {
        Ok(w) => per_eq_check_window(sk.tower(), &w, n, budget),
        Err(e) => CheckResult::inconclusive("per-eq", e.to_string()),
    }
}

/// Per-eq/J-sub for levels `1..=n` against an arbitrary window.
pub fn per_eq_check_window(tower: &QuotientTower, window: &SymbolWindow, n: usize, budget: &Budget) -> CheckResult {
    let scope = format!("levels 1..={n}, window D_{}", window.level());
    let run = || -> Result<Option<String>> {
        let mut periodic = Vec::new();
        for l in 0..=n {
            periodic.push(PeriodTable::from_window(tower, window, l)?.periodic());
        }
        for (l, got) in periodic.iter().enumerate().skip(1) {
            let want = covered_union(tower, l, budget)?;
            if *got != want {
                let q = tower.quotient(l)?;
                let c = got.difference(&want).iter().chain(want.difference(got).iter()).next().unwrap();
                let side = if got.contains(c) { "periodic but not covered" } else { "covered but not periodic" };
                return Ok(Some(format!("coset {}Γ_{l} is {side}", q.element(c))));
            }
        }
        let js = j_sets_upto(tower, n.saturating_sub(1), budget)?;
        for (i, j) in js.iter().enumerate().take(n) {
            let (qi, qi1) = (tower.quotient(i)?, tower.quotient(i + 1)?);
            for u in &j.elements {
                if !periodic[i + 1].contains(qi1.index(u)?) || periodic[i].contains(qi.index(u)?) {
                    return Ok(Some(format!("{u} ∈ J({i}) is not in Per(Γ_{}) \\ Per(Γ_{i})", i + 1)));
                }
            }
        }
        Ok(None)
    };
    match run() {
        Ok(c) => CheckResult::from_outcome("per-eq", scope, c),
        Err(e) => CheckResult::inconclusive("per-eq", format!("{scope}: {e}")),
    }
}

/// `Γ_n` is essential: every `g ∉ Γ_n` moves some period set.
pub fn essential_check(tower: &QuotientTower, table: &PeriodTable) -> Result<CheckResult> {
    if !tower.is_abelian() {
        return Err(Error::NonAbelianUnsupported);
    }
    let n = table.level;
    let q = tower.quotient(n)?;
    let scope = format!("exhaustive D_{n}");
    for g in 0..q.size() {
        if g == q.identity() {
            continue;
        }
        let gi = q.inv(g);
        let moved = (0..2u8).any(|a| table.per(a).iter().any(|c| !table.per(a).contains(q.mul(gi, c))));
        if !moved {
            return Ok(CheckResult::fail("essential", scope, format!("{} preserves every period set", q.element(g))));
        }
    }
    Ok(CheckResult::pass("essential", scope))
}

/// `Per(η, Γ_s, 1)` equals `Γ_1` plus the planted cosets of all records up to step `s`;
/// at each block end the 1-periods stop growing.
pub fn per1_structure_check(sk: &ToeplitzSkeleton, s: usize, budget: &Budget) -> CheckResult {
    let name = "periodo1";
    let run = || -> Result<Option<String>> {
        let tower = sk.tower();
        let w = sk.materialize_window(sk.depth(), budget)?;
        for l in 1..=s {
            let q = tower.quotient(l)?;
            let got = PeriodTable::from_window(tower, &w, l)?.per[1].clone();
            let mut want = CosetSet::from_indices(l, (0..q.size()).filter(|&d| q.project(d, 1) == q.identity() % q.sub_size(1)));
            for r in sk.h_records().iter().filter(|r| r.step <= l) {
                let h = tower.quotient(r.step)?.index(&r.h)?;
                for d in 0..q.size() {
                    if q.project(d, r.step) == h {
                        want.insert(d);
                    }
                }
            }
            if got != want {
                let c = got.difference(&want).iter().chain(want.difference(&got).iter()).next().unwrap();
                return Ok(Some(format!("Per(η,Γ_{l},1) and the record union differ at {}", q.element(c))));
            }
        }
        for k in sk.completed_blocks() {
            let nk = sk.subsequence_m(k)?;
            if nk + 1 > s {
                continue;
            }
            let hi = tower.quotient(nk + 1)?;
            let low = PeriodTable::from_window(tower, &w, nk)?.per[1].lift_to(&hi);
            let high = PeriodTable::from_window(tower, &w, nk + 1)?.per[1].clone();
            if low != high {
                return Ok(Some(format!("Per(η,Γ_{nk},1) ≠ Per(η,Γ_{},1) at block end {k}", nk + 1)));
            }
        }
        Ok(None)
    };
    if s > sk.depth() {
        return CheckResult::inconclusive(name, format!("level {s} beyond construction depth {}", sk.depth()));
    }
    match run() {
        Ok(c) => CheckResult::from_outcome(name, format!("levels 1..={s}"), c),
        Err(e) => CheckResult::inconclusive(name, e.to_string()),
    }
}

/// Where a translate `γJ(i)` lands.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AuxiliarCover {
    /// All of `γJ(i)` lies in `J(l)Γ_{l+1}`.
    Level(usize),
    /// Some translate is not covered at the construction depth.
    BeyondDepth,
    /// Translates land on different levels.
    Split(Vec<usize>),
}

/// Minimal `l` with `γJ(i) ⊆ J(l)Γ_{l+1}`.
pub fn auxiliar_cover(sk: &ToeplitzSkeleton, i: usize, gamma: &GroupElement, budget: &Budget) -> Result<AuxiliarCover> {
    let tower = sk.tower();
    if !tower.in_subgroup(gamma, i)? {
        return Err(Error::NotInDomain { element: gamma.to_string(), level: i });
    }
    let count = budget.require_enumerable(&format!("J({i})"), &crate::skeleton::j_size(tower, i))?;
    let mut levels = BTreeSet::new();
    for t in 1..=count {
        let u = tower.element_from_digits(&j_element_digits(tower, i, t));
        match sk.level_of(&tower.mul(gamma, &u)?)? {
            Some(l) => {
                levels.insert(l);
            }
            None => return Ok(AuxiliarCover::BeyondDepth),
        }
    }
    Ok(match levels.len() {
        1 => AuxiliarCover::Level(*levels.iter().next().unwrap()),
        _ => AuxiliarCover::Split(levels.into_iter().collect()),
    })
}

pub fn auxiliar_cover_check(sk: &ToeplitzSkeleton, i: usize, gamma: &GroupElement, budget: &Budget) -> CheckResult {
    let name = "auxiliar";
    let scope = format!("γ={gamma}, J({i})");
    match auxiliar_cover(sk, i, gamma, budget) {
        Ok(AuxiliarCover::Level(l)) if l >= i => CheckResult::pass(name, scope).witness(format!("l={l}")),
        Ok(AuxiliarCover::Level(l)) => CheckResult::fail(name, scope, format!("landed on level {l} < {i}")),
        Ok(AuxiliarCover::Split(ls)) => CheckResult::fail(name, scope, format!("translates split over levels {ls:?}")),
        Ok(AuxiliarCover::BeyondDepth) => CheckResult::inconclusive(name, format!("{scope}: beyond depth")),
        Err(e) => CheckResult::inconclusive(name, format!("{scope}: {e}")),
    }
}

/// Tallies for the at-most-one-1 property over `Γ_k`-translates of `J(k)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PartitionTally {
    pub translates: u64,
    pub undetermined: u64,
    pub violations: u64,
    pub first_violation: Option<GroupElement>,
}

/// For each `γ` tested: at most one `g ∈ J(k)` has `η(γg) = 1`. Translates touching undefined
/// cells are counted as undetermined.
pub fn partitions_c(sk: &ToeplitzSkeleton, k: usize, gammas: &[GroupElement]) -> Result<PartitionTally> {
    let tower = sk.tower();
    let size = crate::skeleton::j_size(tower, k);
    let count = num_traits::ToPrimitive::to_u64(&size).ok_or(Error::BudgetExceeded {
        what: format!("J({k})"),
        size: size.to_string(),
        budget: u64::MAX,
    })?;
    let js: Vec<GroupElement> = (1..=count).map(|t| tower.element_from_digits(&j_element_digits(tower, k, t))).collect();
    let mut tally = PartitionTally::default();
    'outer: for gamma in gammas {
        let mut ones = 0;
        for g in &js {
            match sk.eval(&tower.mul(gamma, g)?)? {
                Some(1) => ones += 1,
                Some(_) => {}
                None => {
                    tally.undetermined += 1;
                    continue 'outer;
                }
            }
        }
        tally.translates += 1;
        if ones > 1 {
            tally.violations += 1;
            tally.first_violation.get_or_insert_with(|| gamma.clone());
        }
    }
    Ok(tally)
}

/// Exhaustive over `Γ_k ∩ D_{k+3}` (or `D_{k+2}` when the tower is shorter), then `samples`
/// seeded random `γ ∈ Γ_k`, for `k = 1..=k_max`.
pub fn partitions_c_check(sk: &ToeplitzSkeleton, k_max: usize, samples: usize, seed: u64, budget: &Budget) -> CheckResult {
    let name = "partitions-c";
    let tower = sk.tower();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scope = Vec::new();
    let mut total = PartitionTally::default();
    for k in 1..=k_max {
        let e = (k + 3).min(tower.depth());
        if e < k + 2 {
            scope.push(format!("k={k}: tower too short"));
            continue;
        }
        let mut gammas = Vec::new();
        match tower.quotient(e) {
            Ok(q) if budget.enumerable(tower.size(e)) => {
                for d in 0..q.size() {
                    let g = q.element(d);
                    if tower.in_subgroup(&g, k).unwrap_or(false) {
                        gammas.push(g);
                    }
                }
            }
            _ => {
                scope.push(format!("k={k}: D_{e} over budget"));
                continue;
            }
        }
        let exhaustive = gammas.len();
        for _ in 0..samples {
            match tower.random_in_subgroup(&mut rng, k, 48) {
                Ok(g) => gammas.push(g),
                Err(e) => return CheckResult::inconclusive(name, e.to_string()),
            }
        }
        let t = match partitions_c(sk, k, &gammas) {
            Ok(t) => t,
            Err(e) => return CheckResult::inconclusive(name, format!("k={k}: {e}")),
        };
        scope.push(format!(
            "k={k}: {exhaustive} γ in Γ_{k}∩D_{e} + {samples} sampled ({} decided, {} undetermined)",
            t.translates, t.undetermined
        ));
        total.translates += t.translates;
        total.undetermined += t.undetermined;
        total.violations += t.violations;
        if total.first_violation.is_none() {
            total.first_violation = t.first_violation;
        }
    }
    let scope = format!("seed {seed}; {}", scope.join("; "));
    if let Some(g) = total.first_violation {
        return CheckResult::fail(name, scope, format!("γ={g} gives two ones"));
    }
    if total.translates == 0 {
        return CheckResult::inconclusive(name, scope);
    }
    CheckResult::pass(name, scope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tower::{DomainStyle, TowerConfig};
    use crate::Status;

    fn sk(depth: usize) -> ToeplitzSkeleton {
        ToeplitzSkeleton::from_config(&TowerConfig::line(vec![3; 8], DomainStyle::NonNegative), depth).unwrap()
    }

    fn ints(tower: &QuotientTower, s: &CosetSet) -> Vec<String> {
        s.elements(tower).unwrap().iter().map(|e| e.to_string()).collect()
    }

    #[test]
    fn per_set_examples() {
        let s = sk(5);
        let b = Budget::default();
        assert_eq!(ints(s.tower(), &per_set(&s, 1, 1, &b).unwrap()), ["0"]);
        assert_eq!(ints(s.tower(), &per_set(&s, 2, 1, &b).unwrap()), ["0", "3", "6"]);
        assert_eq!(ints(s.tower(), &per_set(&s, 2, 0, &b).unwrap()), ["1", "2"]);
        assert_eq!(ints(s.tower(), &per_set(&s, 3, 1, &b).unwrap()), ["0", "3", "4", "6", "9", "12", "15", "18", "21", "24"]);
    }

    #[test]
    fn window_and_structure_routes_agree() {
        let s = sk(5);
        let b = Budget::default();
        let w = s.materialize_window(5, &b).unwrap();
        for n in 0..=5 {
            assert_eq!(PeriodTable::from_window(s.tower(), &w, n).unwrap(), PeriodTable::from_skeleton(&s, n, &b).unwrap());
        }
    }

    #[test]
    fn per_eq_and_negative_control() {
        let s = sk(5);
        let b = Budget::default();
        assert_eq!(per_eq_check(&s, 5, &b).status, Status::Pass);
        let mut w = s.materialize_window(5, &b).unwrap();
        w.flip(4);
        let r = per_eq_check_window(s.tower(), &w, 3, &b);
        assert_eq!(r.status, Status::Fail);
        assert!(r.counterexample.unwrap().contains("4Γ_3"));
    }

    #[test]
    fn essential_cases() {
        let s = sk(5);
        let b = Budget::default();
        for n in 1..=4 {
            let t = PeriodTable::from_skeleton(&s, n, &b).unwrap();
            assert_eq!(essential_check(s.tower(), &t).unwrap().status, Status::Pass, "level {n}");
        }
        let zero = SymbolWindow::from_symbols(2, &[Some(0); 9]);
        let t = PeriodTable::from_window(s.tower(), &zero, 2).unwrap();
        assert_eq!(essential_check(s.tower(), &t).unwrap().status, Status::Fail);
    }

    #[test]
    fn periodo_one() {
        let s = sk(5);
        for l in 1..=5 {
            assert_eq!(per1_structure_check(&s, l, &Budget::default()).status, Status::Pass);
        }
    }

    #[test]
    fn auxiliar_examples() {
        let s = sk(6);
        let b = Budget::default();
        let g = |x: i64| GroupElement::scalar(x);
        assert_eq!(auxiliar_cover(&s, 1, &g(9), &b).unwrap(), AuxiliarCover::Level(1));
        assert_eq!(auxiliar_cover(&s, 2, &g(0), &b).unwrap(), AuxiliarCover::Level(2));
        assert_eq!(auxiliar_cover(&s, 2, &g(27), &b).unwrap(), AuxiliarCover::Level(2));
        assert_eq!(auxiliar_cover(&s, 1, &g(3), &b).unwrap(), AuxiliarCover::Level(2));
        assert!(auxiliar_cover(&s, 1, &g(1), &b).is_err());
    }

    #[test]
    fn partitions_small() {
        let s = sk(5);
        let r = partitions_c_check(&s, 3, 200, 7, &Budget::default());
        assert_eq!(r.status, Status::Pass, "{r}");
    }
}
