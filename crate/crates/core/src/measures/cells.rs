//! Exact unions of partition cells `σ^{v⁻¹}C_n^0` and `σ^{v⁻¹}C_{n,g}`.
//!
//! An atom at level `n` is a pair `(v, tag)` with `v ∈ D_n` and `tag` either `Zero` (the cell
//! `σ^{v⁻¹}C_n^0`) or `One(g)` for `g ∈ J(n)` (the cell `σ^{v⁻¹}C_{n,g}`). Atoms are numbered
//! `v·(1+|J(n)|) + t` with `t = 0` for `Zero` and `t = 1 + rank(g)`.

use std::collections::BTreeMap;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::orbit::EtaView;
use super::to_u64;
use crate::bits::BitBuf;
use crate::periods::PeriodTable;
use crate::skeleton::{j_element_digits, j_size, ToeplitzSkeleton};
use crate::tower::{GroupElement, Quotient};
use crate::{Budget, CheckResult, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tag {
    Zero,
    /// Rank of `g` in `J(n)`.
    One(u64),
}

/// Index space of the atoms at one level.
pub struct CellSpace<'a> {
    sk: &'a ToeplitzSkeleton,
    level: usize,
    q: Quotient<'a>,
    jn: u64,
}

impl<'a> CellSpace<'a> {
    pub fn new(sk: &'a ToeplitzSkeleton, n: usize, budget: &Budget) -> Result<Self> {
        if n == 0 {
            return Err(Error::Unsupported("cells start at level 1".into()));
        }
        let t = sk.tower();
        let q = t.quotient(n)?;
        let jn = to_u64(&j_size(t, n), "J(n)")?;
        let atoms = num_bigint::BigUint::from(q.size()) * (jn + 1);
        budget.require_enumerable(&format!("cells at level {n}"), &atoms)?;
        Ok(CellSpace { sk, level: n, q, jn })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn quotient(&self) -> &Quotient<'a> {
        &self.q
    }

    pub fn dn(&self) -> u64 {
        self.q.size()
    }

    pub fn jn(&self) -> u64 {
        self.jn
    }

    pub fn atom_count(&self) -> u64 {
        self.dn() * (self.jn + 1)
    }

    pub fn atom(&self, v: u64, tag: Tag) -> u64 {
        v * (self.jn + 1)
            + match tag {
                Tag::Zero => 0,
                Tag::One(r) => r + 1,
            }
    }

    pub fn decode(&self, a: u64) -> (u64, Tag) {
        let (v, t) = (a / (self.jn + 1), a % (self.jn + 1));
        (v, if t == 0 { Tag::Zero } else { Tag::One(t - 1) })
    }

    /// Rank in `J(n)` of the element of `D_n` with index `idx`.
    pub fn j_rank(&self, idx: u64) -> Option<u64> {
        let t = self.sk.tower();
        let mut rank = 0;
        let mut scale = 1;
        for (i, d) in self.q.digits(idx).into_iter().enumerate() {
            let p = t.identity_digit(i + 1);
            if d == p {
                return None;
            }
            rank += scale * if d < p { d } else { d - 1 };
            scale *= t.base(i + 1) - 1;
        }
        Some(rank)
    }

    /// Index in `D_n` of the `J(n)` element with the given rank.
    pub fn j_index(&self, rank: u64) -> u64 {
        let digits = j_element_digits(self.sk.tower(), self.level, rank + 1);
        digits.iter().enumerate().map(|(i, &d)| d * self.q.sub_size(i)).sum()
    }

    /// `Γ_{n-1} ∩ D_n` minus the identity, as indices of `D_n`.
    pub fn top_translations(&self) -> Vec<u64> {
        let t = self.sk.tower();
        let n = self.level;
        let base = self.q.identity() - t.identity_digit(n) * self.q.sub_size(n - 1);
        (0..t.base(n)).filter(|&d| d != t.identity_digit(n)).map(|d| base + d * self.q.sub_size(n - 1)).collect()
    }

    pub fn empty(&self) -> CellSet {
        CellSet { level: self.level, bits: BitBuf::zeros(self.atom_count()) }
    }

    pub fn describe(&self, a: u64) -> String {
        let (v, tag) = self.decode(a);
        let v = self.q.element(v);
        match tag {
            Tag::Zero => format!("σ^{{-{v}}}C_{}^0", self.level),
            Tag::One(r) => format!("σ^{{-{v}}}C_{{{},{}}}", self.level, self.q.element(self.j_index(r))),
        }
    }
}

/// A union of atoms at one level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellSet {
    level: usize,
    bits: BitBuf,
}

impl CellSet {
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn insert(&mut self, a: u64) {
        self.bits.set(a, true);
    }

    pub fn contains(&self, a: u64) -> bool {
        self.bits.get(a)
    }

    pub fn len(&self) -> u64 {
        self.bits.count_ones()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.bits.iter().enumerate().filter(|(_, b)| *b).map(|(i, _)| i as u64)
    }

    pub fn union(&self, other: &CellSet) -> CellSet {
        assert_eq!(self.level, other.level);
        let words = self.bits.words().iter().zip(other.bits.words()).map(|(a, b)| a | b).collect();
        CellSet { level: self.level, bits: BitBuf::from_words(words, self.bits.len()) }
    }

    /// First atom of `self` outside `other`.
    pub fn first_outside(&self, other: &CellSet) -> Option<u64> {
        self.iter().find(|&a| !other.contains(a))
    }

    pub fn is_subset(&self, other: &CellSet) -> bool {
        self.first_outside(other).is_none()
    }
}

/// Sets that can be written as atom unions, plus the coordinate predicates `U_n`, `Y_n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SetId {
    Cn,
    Cn0,
    Cn1,
    Cng(GroupElement),
    Zn,
    Wn,
    /// The cylinder `[i] = {x : x(1_G) = i}`.
    Cylinder(u8),
    Un,
    Yn,
}

impl FromStr for SetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "Cn" | "C" => SetId::Cn,
            "Cn0" => SetId::Cn0,
            "Cn1" => SetId::Cn1,
            "Zn" | "Z" => SetId::Zn,
            "Wn" | "W" => SetId::Wn,
            "Un" | "U" => SetId::Un,
            "Yn" | "Y" => SetId::Yn,
            "[0]" | "cyl0" => SetId::Cylinder(0),
            "[1]" | "cyl1" => SetId::Cylinder(1),
            other => match other.strip_prefix("Cng:") {
                Some(g) => SetId::Cng(GroupElement::parse(g)?),
                None => return Err(Error::Parse(format!("unknown set {other:?}"))),
            },
        })
    }
}

/// The cell of `η` itself at level `n`: `Zero` on closing levels, else the planted `h`.
pub fn eta_tag(sk: &ToeplitzSkeleton, space: &CellSpace<'_>) -> Result<Tag> {
    let n = space.level;
    if n >= sk.depth() {
        return Err(Error::DepthExceeded { requested: n + 1, available: sk.depth() });
    }
    Ok(match sk.planted_digits(n) {
        Some(h) => {
            let idx: u64 = h.iter().enumerate().map(|(i, &d)| d * space.q.sub_size(i)).sum();
            Tag::One(space.j_rank(idx).expect("planted h lies in J(n)"))
        }
        None => Tag::Zero,
    })
}

/// Which containment of the refinement lemma places a level `n+1` atom.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Rule {
    /// `σ^{γ⁻¹}C^0_{n+1} ⊆ C^0_n`, `γ ≠ 1`.
    ZeroShift,
    /// `σ^{γ⁻¹}C_{n+1,γg} ⊆ C_{n,g}`.
    SameShift,
    /// `σ^{γ⁻¹}C_{n+1,γ̃g} ⊆ C^0_n`, `γ ≠ γ̃`.
    OtherShift,
    /// `C_{n+1} ⊆ C^0_n` on closing levels.
    ClosingLevel,
    /// `C_{n+1} ⊆ C_{n,h}` on planting levels.
    PlantingLevel,
}

impl Rule {
    fn label(self) -> &'static str {
        match self {
            Rule::ZeroShift => "(1)",
            Rule::SameShift => "(2)",
            Rule::OtherShift => "(3)",
            Rule::ClosingLevel => "(4)",
            Rule::PlantingLevel => "(5)",
        }
    }
}

fn classify(child: &CellSpace<'_>, parent: &CellSpace<'_>, eta: Tag, a: u64) -> (Rule, u64) {
    let q = &child.q;
    let n = parent.level;
    let (v, tag) = child.decode(a);
    let u = q.project(v, n);
    let gamma = q.mul(v, q.inv(q.lift(u, n)));
    let unit = gamma == q.identity();
    let (rule, ptag) = match tag {
        _ if unit => match eta {
            Tag::Zero => (Rule::ClosingLevel, Tag::Zero),
            t => (Rule::PlantingLevel, t),
        },
        Tag::Zero => (Rule::ZeroShift, Tag::Zero),
        Tag::One(r) => {
            let g1 = child.j_index(r);
            let g = q.project(g1, n);
            let gamma_t = q.mul(g1, q.inv(q.lift(g, n)));
            if gamma_t == gamma {
                (Rule::SameShift, Tag::One(parent.j_rank(g).expect("projection of J(n+1) lies in J(n)")))
            } else {
                (Rule::OtherShift, Tag::Zero)
            }
        }
    };
    (rule, parent.atom(u, ptag))
}

/// Level-`n` atom containing a level-`n+1` atom, from the refinement rules.
pub fn symbolic_parent(child: &CellSpace<'_>, parent: &CellSpace<'_>, eta: Tag, a: u64) -> u64 {
    classify(child, parent, eta, a).1
}

fn expand(set: &CellSet, child: &CellSpace<'_>, parent: &CellSpace<'_>, eta: Tag) -> CellSet {
    let mut out = child.empty();
    for a in 0..child.atom_count() {
        if set.contains(symbolic_parent(child, parent, eta, a)) {
            out.insert(a);
        }
    }
    out
}

/// Expands a level-`from` set to level `to` through the parent map.
fn expand_to(sk: &ToeplitzSkeleton, set: CellSet, to: usize, budget: &Budget) -> Result<CellSet> {
    let mut cur = set;
    while cur.level < to {
        let parent = CellSpace::new(sk, cur.level, budget)?;
        let child = CellSpace::new(sk, cur.level + 1, budget)?;
        let eta = eta_tag(sk, &parent)?;
        cur = expand(&cur, &child, &parent, eta);
    }
    Ok(cur)
}

fn z_set(space: &CellSpace<'_>) -> CellSet {
    let mut s = space.empty();
    for v in 0..space.dn() {
        s.insert(space.atom(v, Tag::Zero));
    }
    s
}

/// `⋃_{v ∈ D_{n-1}} σ^{v⁻¹}C_n^1` at level `n`.
fn c1_lifted(space: &CellSpace<'_>) -> CellSet {
    let n = space.level;
    let q = &space.q;
    let mut s = space.empty();
    for v in 0..q.sub_size(n - 1) {
        let v = q.lift(v, n - 1);
        for r in 0..space.jn {
            s.insert(space.atom(v, Tag::One(r)));
        }
    }
    s
}

/// `W_n`, from its defining union over `v`, `g ∈ J(n−1)`, `γ̃ ≠ 1` and `γ ∉ {1, γ̃}`.
fn w_set(sk: &ToeplitzSkeleton, space: &CellSpace<'_>, budget: &Budget) -> Result<CellSet> {
    let n = space.level;
    if n < 2 {
        return Err(Error::Unsupported("W_n needs n ≥ 2".into()));
    }
    let prev = CellSpace::new(sk, n - 1, budget)?;
    let q = &space.q;
    let gammas = space.top_translations();
    let mut s = space.empty();
    for v in 0..q.sub_size(n - 1) {
        let v = q.lift(v, n - 1);
        for r in 0..prev.jn {
            let g = q.lift(prev.j_index(r), n - 1);
            for &gt in &gammas {
                let rank = space.j_rank(q.mul(gt, g)).ok_or_else(|| Error::MethodDisagreement {
                    what: format!("W_{n}"),
                    detail: "γ̃g left J(n)".into(),
                })?;
                for &ga in gammas.iter().filter(|&&x| x != gt) {
                    s.insert(space.atom(q.mul(ga, v), Tag::One(rank)));
                }
            }
        }
    }
    Ok(s)
}

fn cylinder_set(sk: &ToeplitzSkeleton, space: &CellSpace<'_>, i: u8, budget: &Budget) -> Result<CellSet> {
    let table = PeriodTable::from_skeleton(sk, space.level, budget)?;
    let mut s = space.empty();
    for v in table.per(i).iter() {
        s.insert(space.atom(v, Tag::Zero));
        for r in 0..space.jn {
            s.insert(space.atom(v, Tag::One(r)));
        }
    }
    for r in 0..space.jn {
        let g = space.j_index(r);
        if i == 1 {
            s.insert(space.atom(g, Tag::One(r)));
        } else {
            s.insert(space.atom(g, Tag::Zero));
            for h in (0..space.jn).filter(|&h| h != r) {
                s.insert(space.atom(g, Tag::One(h)));
            }
        }
    }
    Ok(s)
}

/// Writes a named set as an exact union of level-`n` atoms.
pub fn cell_decompose(sk: &ToeplitzSkeleton, set: &SetId, n: usize, budget: &Budget) -> Result<CellSet> {
    let space = CellSpace::new(sk, n, budget)?;
    let id = space.q.identity();
    let mut s = space.empty();
    match set {
        SetId::Cn => {
            s.insert(space.atom(id, Tag::Zero));
            (0..space.jn).for_each(|r| s.insert(space.atom(id, Tag::One(r))));
        }
        SetId::Cn0 => s.insert(space.atom(id, Tag::Zero)),
        SetId::Cn1 => (0..space.jn).for_each(|r| s.insert(space.atom(id, Tag::One(r)))),
        SetId::Cng(g) => {
            let r = space.j_rank(space.q.index(g)?).filter(|_| sk.tower().in_domain(g, n).unwrap_or(false));
            let r = r.ok_or_else(|| Error::NotInDomain { element: format!("{g} (J({n}))"), level: n })?;
            s.insert(space.atom(id, Tag::One(r)));
        }
        SetId::Zn => s = z_set(&space),
        SetId::Wn => s = w_set(sk, &space, budget)?,
        SetId::Cylinder(i) => s = cylinder_set(sk, &space, *i, budget)?,
        SetId::Un | SetId::Yn => {
            return Err(Error::Unsupported("U_n and Y_n are coordinate predicates; use orbit membership".into()))
        }
    }
    Ok(s)
}

/// Level-`n` atom of the point `w` of `view` (a `σ^{w⁻¹}` shift of `η` or of a periodization).
/// `Ok(None)` when a needed cell is undefined; `Err` when two cells of `J(n)` carry a 1.
pub(super) fn semantic_atom(view: &EtaView<'_>, space: &CellSpace<'_>, j_lifted: &[u64], w: u64) -> std::result::Result<Option<u64>, String> {
    let q = view.quotient();
    let n = space.level;
    let v = q.project(w, n);
    let gamma = q.mul(w, q.inv(q.lift(v, n)));
    let mut tag = Tag::Zero;
    for (r, &g) in j_lifted.iter().enumerate() {
        match view.at(q.mul(gamma, g)) {
            None => return Ok(None),
            Some(1) => {
                if tag != Tag::Zero {
                    return Err(format!("two ones over J({n}) for the point {}", q.element(w)));
                }
                tag = Tag::One(r as u64);
            }
            Some(_) => {}
        }
    }
    Ok(Some(space.atom(v, tag)))
}

pub(super) fn j_lifted(space: &CellSpace<'_>, q: &Quotient<'_>) -> Vec<u64> {
    (0..space.jn).map(|r| q.lift(space.j_index(r), space.level)).collect()
}

/// Points of `G/Γ_S` to examine: all of them when affordable, else a seeded sample.
pub(super) fn sample_points(size: u64, per_point: u64, budget: &Budget) -> (Vec<u64>, bool) {
    if size.saturating_mul(per_point.max(1)) <= budget.enumeration.saturating_mul(8) {
        ((0..size).collect(), true)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
        ((0..budget.samples).map(|_| rng.gen_range(0..size)).collect(), false)
    }
}

/// Refinement containments checked on orbit points of `η`: the level-`n` cell of each point
/// must be the symbolic parent of its level-`n+1` cell.
pub fn containings_check(sk: &ToeplitzSkeleton, budget: &Budget) -> CheckResult {
    let name = "containings";
    let run = || -> Result<CheckResult> {
        let s = sk.depth();
        if s < 3 {
            return Ok(CheckResult::inconclusive(name, format!("construction depth {s} < 3")));
        }
        let view = EtaView::new(sk, budget)?;
        let mut counts: BTreeMap<Rule, u64> = BTreeMap::new();
        let mut levels = Vec::new();
        let mut points_used = 0u64;
        let mut exhaustive = true;
        let m_levels = sk.m_levels(s);
        for n in 1..=s - 2 {
            let (parent, child) = match (CellSpace::new(sk, n, budget), CellSpace::new(sk, n + 1, budget)) {
                (Ok(p), Ok(c)) => (p, c),
                _ => break,
            };
            let eta = eta_tag(sk, &parent)?;
            let in_m = m_levels.contains(&n);
            if in_m != (eta == Tag::Zero) {
                return Ok(CheckResult::fail(name, format!("n={n}"), "closing levels disagree with M"));
            }
            let (jp, jc) = (j_lifted(&parent, view.quotient()), j_lifted(&child, view.quotient()));
            let (points, all) = sample_points(view.quotient().size(), jp.len() as u64 + jc.len() as u64, budget);
            exhaustive &= all;
            for &w in &points {
                let (a1, a0) = match (semantic_atom(&view, &child, &jc, w), semantic_atom(&view, &parent, &jp, w)) {
                    (Ok(Some(a1)), Ok(Some(a0))) => (a1, a0),
                    (Err(e), _) | (_, Err(e)) => return Ok(CheckResult::fail(name, format!("n={n}"), e)),
                    _ => continue,
                };
                points_used += 1;
                let (rule, p) = classify(&child, &parent, eta, a1);
                if p != a0 {
                    return Ok(CheckResult::fail(
                        name,
                        format!("n={n}"),
                        format!(
                            "rule {}: point {} lies in {} but in {} at level {n}",
                            rule.label(),
                            view.quotient().element(w),
                            child.describe(a1),
                            parent.describe(a0)
                        ),
                    ));
                }
                *counts.entry(rule).or_default() += 1;
            }
            levels.push(n);
        }
        if levels.is_empty() {
            return Ok(CheckResult::inconclusive(name, "no level within budget"));
        }
        let mode = if exhaustive { "all points of G/Γ_S" } else { "seeded sample" };
        let mut r = CheckResult::pass(name, format!("n ∈ {levels:?}, {points_used} decided points ({mode}, S={s})"));
        for rule in [Rule::ZeroShift, Rule::SameShift, Rule::OtherShift, Rule::ClosingLevel, Rule::PlantingLevel] {
            r.push_witness(format!("{}: {} points", rule.label(), counts.get(&rule).copied().unwrap_or(0)));
        }
        Ok(r)
    };
    run().unwrap_or_else(|e| CheckResult::inconclusive(name, e.to_string()))
}

/// `Z_n = Z_{n+1} ∪ W_{n+1} ∪ ⋃σ^{v⁻¹}C^1_{n+1}` on closing levels, `Z_n ⊆ Z_{n+1} ∪ W_{n+1}`
/// elsewhere, and the chained inclusion between closing levels.
pub fn z_identity_check(sk: &ToeplitzSkeleton, budget: &Budget) -> CheckResult {
    let name = "z-identity";
    let run = || -> Result<CheckResult> {
        let s = sk.depth();
        let m_levels = sk.m_levels(s);
        let mut eq_levels = Vec::new();
        let mut sub_levels = Vec::new();
        for n in 1..s {
            let (parent, child) = match (CellSpace::new(sk, n, budget), CellSpace::new(sk, n + 1, budget)) {
                (Ok(p), Ok(c)) => (p, c),
                _ => break,
            };
            let eta = eta_tag(sk, &parent)?;
            let lhs = expand(&z_set(&parent), &child, &parent, eta);
            let zw = z_set(&child).union(&w_set(sk, &child, budget)?);
            if m_levels.contains(&n) {
                let rhs = zw.union(&c1_lifted(&child));
                if let Some(a) = lhs.first_outside(&rhs).or_else(|| rhs.first_outside(&lhs)) {
                    return Ok(CheckResult::fail(
                        name,
                        format!("n={n} (closing level)"),
                        format!("{} is on one side only", child.describe(a)),
                    ));
                }
                eq_levels.push(n);
            } else {
                if let Some(a) = lhs.first_outside(&zw) {
                    return Ok(CheckResult::fail(name, format!("n={n}"), format!("{} ⊄ Z ∪ W", child.describe(a))));
                }
                sub_levels.push(n);
            }
        }
        let mut chained = Vec::new();
        for (i, &nj) in m_levels.iter().enumerate() {
            for &ns in &m_levels[i + 1..] {
                if CellSpace::new(sk, ns, budget).is_err() || ns > s {
                    continue;
                }
                let top = CellSpace::new(sk, ns, budget)?;
                let lhs = expand_to(sk, z_set(&CellSpace::new(sk, nj, budget)?), ns, budget)?;
                let mut rhs = z_set(&top);
                for r in nj + 1..=ns {
                    let space = CellSpace::new(sk, r, budget)?;
                    rhs = rhs.union(&expand_to(sk, w_set(sk, &space, budget)?, ns, budget)?);
                }
                for &m in m_levels.iter().filter(|&&m| m >= nj && m < ns) {
                    let space = CellSpace::new(sk, m + 1, budget)?;
                    rhs = rhs.union(&expand_to(sk, c1_lifted(&space), ns, budget)?);
                }
                if let Some(a) = lhs.first_outside(&rhs) {
                    return Ok(CheckResult::fail(
                        name,
                        format!("chain {nj}→{ns}"),
                        format!("{} escapes the chained union", top.describe(a)),
                    ));
                }
                chained.push((nj, ns));
            }
        }
        if eq_levels.is_empty() && sub_levels.is_empty() {
            return Ok(CheckResult::inconclusive(name, format!("no level pair within depth {s} and budget")));
        }
        Ok(CheckResult::pass(
            name,
            format!("equality at {eq_levels:?}, containment at {sub_levels:?}, chains {chained:?}"),
        ))
    };
    run().unwrap_or_else(|e| CheckResult::inconclusive(name, e.to_string()))
}

/// The cylinders `[0]`, `[1]` split the level-`n` atoms, and every orbit point's atom sits in
/// the cylinder of its own symbol.
pub fn cylinder_cells_check(sk: &ToeplitzSkeleton, budget: &Budget) -> CheckResult {
    let name = "cylinder-cells";
    let run = || -> Result<CheckResult> {
        let s = sk.depth();
        let view = EtaView::new(sk, budget)?;
        let mut levels = Vec::new();
        for n in 1..s {
            let space = match CellSpace::new(sk, n, budget) {
                Ok(x) => x,
                Err(_) => break,
            };
            let c0 = cylinder_set(sk, &space, 0, budget)?;
            let c1 = cylinder_set(sk, &space, 1, budget)?;
            for a in 0..space.atom_count() {
                if c0.contains(a) == c1.contains(a) {
                    return Ok(CheckResult::fail(name, format!("n={n}"), format!("{} not in exactly one cylinder", space.describe(a))));
                }
            }
            let js = j_lifted(&space, view.quotient());
            let (points, _) = sample_points(view.quotient().size(), js.len() as u64, budget);
            for w in points {
                let x = view.at(w);
                match (semantic_atom(&view, &space, &js, w), x) {
                    (Ok(Some(a)), Some(x)) => {
                        let cyl = if x == 1 { &c1 } else { &c0 };
                        if !cyl.contains(a) {
                            return Ok(CheckResult::fail(
                                name,
                                format!("n={n}"),
                                format!("point {} has symbol {x} but lies in {}", view.quotient().element(w), space.describe(a)),
                            ));
                        }
                    }
                    (Err(e), _) => return Ok(CheckResult::fail(name, format!("n={n}"), e)),
                    _ => {}
                }
            }
            levels.push(n);
        }
        if levels.is_empty() {
            return Ok(CheckResult::inconclusive(name, "no level within budget"));
        }
        Ok(CheckResult::pass(name, format!("n ∈ {levels:?}")))
    };
    run().unwrap_or_else(|e| CheckResult::inconclusive(name, e.to_string()))
}

/// Under `μ_m` (`m ≥ n`): cell masses are translation invariant, sum to 1, and
/// `μ_m([1]) = a_{n,1}/|D_n| + μ_m(C_n^1)`, `μ_m([0]) = (a_{n,0}+|J(n)|)/|D_n| − μ_m(C_n^1)`.
pub fn partition_mass_check(sk: &ToeplitzSkeleton, budget: &Budget) -> CheckResult {
    let name = "partition-mass";
    let run = || -> Result<CheckResult> {
        let s = sk.depth();
        let mut pairs = Vec::new();
        let mut skipped = Vec::new();
        for m in 1..s {
            let view = match EtaView::periodic(sk, m, budget) {
                Ok(v) => v,
                Err(_) => break,
            };
            let dm = view.quotient().size();
            let ones = (0..dm).filter(|&d| view.at(d) == Some(1)).count() as u64;
            for n in 1..=m {
                let space = match CellSpace::new(sk, n, budget) {
                    Ok(x) => x,
                    Err(_) => break,
                };
                if dm.saturating_mul(space.jn) > budget.enumeration.saturating_mul(8) {
                    skipped.push((n, m));
                    continue;
                }
                let js = j_lifted(&space, view.quotient());
                let mut counts = vec![0u64; space.atom_count() as usize];
                for d in 0..dm {
                    match semantic_atom(&view, &space, &js, d) {
                        Ok(Some(a)) => counts[a as usize] += 1,
                        Ok(None) => return Ok(CheckResult::fail(name, format!("n={n}, m={m}"), "undefined cell in η_m")),
                        Err(e) => return Ok(CheckResult::fail(name, format!("n={n}, m={m}"), e)),
                    }
                }
                let per_tag = |t: u64| counts[t as usize];
                for a in 0..space.atom_count() {
                    let (_, tag) = space.decode(a);
                    if counts[a as usize] != per_tag(space.atom(0, tag)) {
                        return Ok(CheckResult::fail(
                            name,
                            format!("n={n}, m={m}"),
                            format!("μ_{m}({}) differs from its untranslated cell", space.describe(a)),
                        ));
                    }
                }
                let c1: u64 = (0..space.jn).map(|r| per_tag(space.atom(0, Tag::One(r)))).sum();
                let ac = super::a_counts(sk, n)?;
                let dn = space.dn();
                let (a0, a1) = (to_u64(&ac.a0, "a0")?, to_u64(&ac.a1, "a1")?);
                // Multiply through by |D_m|: per-cell mass of an untranslated atom is count/|D_m|.
                let lhs1 = ones as u128 * dn as u128;
                let rhs1 = a1 as u128 * dm as u128 + c1 as u128 * dn as u128;
                let lhs0 = (dm - ones) as u128 * dn as u128;
                let rhs0 = (a0 + space.jn) as u128 * dm as u128 - c1 as u128 * dn as u128;
                if lhs1 != rhs1 || lhs0 != rhs0 {
                    return Ok(CheckResult::fail(name, format!("n={n}, m={m}"), "cylinder masses disagree with cell masses"));
                }
                pairs.push((n, m));
            }
        }
        if pairs.is_empty() {
            return Ok(CheckResult::inconclusive(name, "no (n, m) within depth and budget"));
        }
        let mut r = CheckResult::pass(name, format!("(n, m) ∈ {pairs:?}"));
        if !skipped.is_empty() {
            r.scope.push_str(&format!("; skipped over budget {skipped:?}"));
        }
        Ok(r)
    };
    run().unwrap_or_else(|e| CheckResult::inconclusive(name, e.to_string()))
}
