//! Membership of orbit points `σ^{w⁻¹}η` in the coordinate sets `U_n`, `Y_n`, and the checks
//! built on it.
//!
//! A point is named by `w ∈ G/Γ_S` (`S` the construction depth): `σ^{w⁻¹}η(u) = η(wu)` only
//! depends on `wu` modulo `Γ_S` wherever `η` is defined.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::cells::{cell_decompose, j_lifted, sample_points, semantic_atom, CellSpace, SetId, Tag};
use crate::density::l_series;
use crate::periods::PeriodTable;
use crate::skeleton::{SymbolWindow, ToeplitzSkeleton};
use crate::tower::{GroupElement, Quotient, QuotientTower};
use crate::{Budget, CheckResult, Error, Result};

/// `η` (or its periodization `η_m`) read through the index space `G/Γ_level`.
pub struct EtaView<'a> {
    sk: &'a ToeplitzSkeleton,
    q: Quotient<'a>,
    window: Option<SymbolWindow>,
}

impl<'a> EtaView<'a> {
    /// `η` modulo `Γ_S`, materialized when the window budget allows.
    pub fn new(sk: &'a ToeplitzSkeleton, budget: &Budget) -> Result<Self> {
        let s = sk.depth();
        let q = sk.tower().quotient(s)?;
        let window = sk.materialize_window(s, budget).ok();
        Ok(EtaView { sk, q, window })
    }

    /// `η_m`, the `Γ_m`-periodic repetition of `η|_{D_m}`; needs `m < S`.
    pub fn periodic(sk: &'a ToeplitzSkeleton, m: usize, budget: &Budget) -> Result<Self> {
        if m >= sk.depth() {
            return Err(Error::DepthExceeded { requested: m + 1, available: sk.depth() });
        }
        let q = sk.tower().quotient(m)?;
        let window = Some(sk.materialize_window(m, budget)?);
        Ok(EtaView { sk, q, window })
    }

    pub fn level(&self) -> usize {
        self.q.level()
    }

    pub fn quotient(&self) -> &Quotient<'a> {
        &self.q
    }

    #[inline]
    pub fn at(&self, idx: u64) -> Option<u8> {
        match &self.window {
            Some(w) => w.get(idx),
            None => self.sk.eval_index(self.q.level(), idx),
        }
    }
}

/// `(Γ_{n+1} ∩ D_m) \ (D_{n+1}Γ_{n+2} ∪ … ∪ D_{m−1}Γ_m)` as indices of `D_m`.
pub fn good_relation_set(tower: &QuotientTower, n: usize, m: usize, budget: &Budget) -> Result<Vec<u64>> {
    if m < n + 2 {
        return Err(Error::Unsupported(format!("good relation needs m ≥ n+2, got n={n}, m={m}")));
    }
    let q = tower.quotient(m)?;
    let count = budget.require_enumerable(&format!("Γ_{}∩D_{m}", n + 1), &(tower.size(m) / tower.size(n + 1)))?;
    let base = q.identity() % q.sub_size(n + 1);
    Ok((0..count)
        .map(|k| base + k * q.sub_size(n + 1))
        .filter(|&idx| (n + 1..m).all(|j| !q.digit_is_identity(idx, j + 1)))
        .collect())
}

/// `|D_m|/|D_{n+1}| · ∏_{l=1}^{m−n−1} (1 − |D_{n+l}|/|D_{n+l+1}|)`.
pub fn good_relation_bound(tower: &QuotientTower, n: usize, m: usize) -> BigRational {
    let mut b = BigRational::new(tower.size(m).clone().into(), tower.size(n + 1).clone().into());
    for l in 1..m - n {
        b *= BigRational::one() - tower.series_term(n + l);
    }
    b
}

fn product_bound(tower: &QuotientTower, n: usize, m: usize) -> BigRational {
    (1..m - n).fold(BigRational::one(), |acc, l| acc * (BigRational::one() - tower.series_term(n + l)))
}

/// Existence and size of good relations over `M` pairs and every enumerable `m ≥ n+2`, plus the
/// containment `γD_{n+1} ⊆ D_m \ (D_{n+1}Γ_{n+2} ∪ …)` for each good `γ`.
pub fn good_relation_check(sk: &ToeplitzSkeleton, budget: &Budget) -> CheckResult {
    let name = "good-relation";
    let run = || -> Result<CheckResult> {
        let t = sk.tower();
        let top = t.depth();
        let m_levels: BTreeSet<usize> = sk.m_levels(top).into_iter().collect();
        let mut pairs = Vec::new();
        let mut m_pairs = Vec::new();
        let mut containment_ops = 0u64;
        for n in 1..top {
            for m in n + 2..=top {
                let set = match good_relation_set(t, n, m, budget) {
                    Ok(s) => s,
                    Err(_) => continue,
                };
                let count = BigRational::from_integer(set.len().into());
                let bound = good_relation_bound(t, n, m);
                let expected: BigUint = (n + 2..=m).map(|i| BigUint::from(t.base(i) - 1)).product();
                if set.is_empty() || count < bound || BigUint::from(set.len()) != expected {
                    return Ok(CheckResult::fail(
                        name,
                        format!("n={n}, m={m}"),
                        format!("N = {} against bound {bound} and digit count {expected}", set.len()),
                    ));
                }
                let q = t.quotient(m)?;
                let dn1 = q.sub_size(n + 1);
                if (set.len() as u64).saturating_mul(dn1) <= budget.samples as u64 * 10 {
                    for &g in &set {
                        let ge = q.element(g);
                        for d in 0..dn1 {
                            let p = t.mul(&ge, &q.element(q.lift(d, n + 1)))?;
                            let idx = q.index(&p)?;
                            let inside = t.in_domain(&p, m)? && (n + 1..m).all(|j| !q.digit_is_identity(idx, j + 1));
                            if !inside {
                                return Ok(CheckResult::fail(
                                    name,
                                    format!("n={n}, m={m}"),
                                    format!("{ge}·{} = {p} leaves D_m minus the union", q.element(q.lift(d, n + 1))),
                                ));
                            }
                            containment_ops += 1;
                        }
                    }
                }
                if m_levels.contains(&n) && m_levels.contains(&m) && m > n + 2 {
                    m_pairs.push((n, m, set.len()));
                }
                pairs.push((n, m));
            }
        }
        if pairs.is_empty() {
            return Ok(CheckResult::inconclusive(name, "no enumerable (n, m)"));
        }
        let mut r = CheckResult::pass(
            name,
            format!("{} pairs with m ≥ n+2 up to level {top}; {containment_ops} containment products", pairs.len()),
        );
        for (n, m, c) in m_pairs {
            r.push_witness(format!("M pair ({n},{m}): N = {c} ≥ {}", good_relation_bound(t, n, m)));
        }
        Ok(r)
    };
    run().unwrap_or_else(|e| CheckResult::inconclusive(name, e.to_string()))
}

fn lift_to(q: &Quotient<'_>, from: &Quotient<'_>, idx: u64) -> u64 {
    q.lift(idx, from.level())
}

/// Whether `η(wx) = η_n(x)` for all `x ∈ D_{n+1}`; `None` if undetermined at this depth.
fn in_u(view: &EtaView<'_>, n: usize, w: u64) -> Option<bool> {
    let q = view.quotient();
    let mut undecided = false;
    for x in 0..q.sub_size(n + 1) {
        let xl = q.lift(x, n + 1);
        let want = view.at(q.lift(q.project(xl, n), n));
        match (view.at(q.mul(w, xl)), want) {
            (Some(a), Some(b)) if a != b => return Some(false),
            (Some(_), Some(_)) => {}
            _ => undecided = true,
        }
    }
    (!undecided).then_some(true)
}

/// Whether `σ^{w⁻¹}η ∈ σ^{γ}C_n^0` for every `γ ∈ Γ_n ∩ D_{n+1}`.
fn in_y(view: &EtaView<'_>, space: &CellSpace<'_>, js: &[u64], w: u64) -> std::result::Result<Option<bool>, String> {
    let q = view.quotient();
    let n = space.level();
    let zero = space.atom(space.quotient().identity(), Tag::Zero);
    let base = q.identity() % q.sub_size(n);
    for t in 0..q.sub_size(n + 1) / q.sub_size(n) {
        let gamma = q.lift(base + t * q.sub_size(n), n + 1);
        match semantic_atom(view, space, js, q.mul(w, gamma))? {
            Some(a) if a != zero => return Ok(Some(false)),
            Some(_) => {}
            None => return Ok(None),
        }
    }
    Ok(Some(true))
}

/// Exact membership of the orbit point `σ^{v⁻¹}η` in a named set at level `n`.
pub fn orbit_member(sk: &ToeplitzSkeleton, v: &GroupElement, set: &SetId, n: usize, budget: &Budget) -> Result<bool> {
    let s = sk.depth();
    let view = EtaView::new(sk, budget)?;
    let q = view.quotient();
    let w = q.index(v)?;
    let undetermined = || Error::DepthExceeded { requested: n + 1, available: s };
    match set {
        SetId::Cylinder(i) => view.at(w).map(|x| x == *i).ok_or_else(undetermined),
        SetId::Cn => {
            // Per(x, Γ_n, α) = Per(η, Γ_n, α) for both α, each read off a window on D_S.
            let shifted: Vec<Option<u8>> = (0..q.size()).map(|y| view.at(q.mul(w, y))).collect();
            let own: Vec<Option<u8>> = (0..q.size()).map(|y| view.at(y)).collect();
            let t = sk.tower();
            let px = PeriodTable::from_window(t, &SymbolWindow::from_symbols(s, &shifted), n)?;
            let pe = PeriodTable::from_window(t, &SymbolWindow::from_symbols(s, &own), n)?;
            Ok(px == pe)
        }
        SetId::Un => {
            if n + 1 > s {
                return Err(undetermined());
            }
            in_u(&view, n, w).ok_or_else(undetermined)
        }
        SetId::Yn => {
            if n + 1 > s {
                return Err(undetermined());
            }
            let space = CellSpace::new(sk, n, budget)?;
            let js = j_lifted(&space, q);
            in_y(&view, &space, &js, w).map_err(|e| Error::MethodDisagreement { what: "Y_n".into(), detail: e })?.ok_or_else(undetermined)
        }
        other => {
            let space = CellSpace::new(sk, n, budget)?;
            let js = j_lifted(&space, q);
            let a = semantic_atom(&view, &space, &js, w)
                .map_err(|e| Error::MethodDisagreement { what: "cell label".into(), detail: e })?
                .ok_or_else(undetermined)?;
            Ok(cell_decompose(sk, other, n, budget)?.contains(a))
        }
    }
}

/// For each good `γ_0 ∈ Γ_{n+1} ∩ D_m` that also satisfies the patching relation
/// `η(γ_0γu) = η(u)`, the point `σ^{γ_0⁻¹}η` lies in `U_n`.
pub fn good_patches_check(sk: &ToeplitzSkeleton, budget: &Budget) -> CheckResult {
    let name = "good-patches";
    let run = || -> Result<CheckResult> {
        let s = sk.depth();
        let view = EtaView::new(sk, budget)?;
        let q = view.quotient();
        let mut scope = Vec::new();
        let mut qualifying = 0usize;
        for n in 1..s {
            for m in n + 2..=s {
                let set = match good_relation_set(sk.tower(), n, m, budget) {
                    Ok(x) => x,
                    Err(_) => continue,
                };
                let qm = sk.tower().quotient(m)?;
                let space = CellSpace::new(sk, n, budget)?;
                let js = j_lifted(&space, q);
                let gammas: Vec<u64> = gamma_layer(q, n);
                let mut decided = true;
                let mut count = 0;
                for &g in &set {
                    let g0 = lift_to(q, &qm, g);
                    let mut patch = Some(true);
                    'p: for &u in &js {
                        for &ga in &gammas {
                            match (view.at(q.mul(g0, q.mul(ga, u))), view.at(u)) {
                                (Some(a), Some(b)) if a != b => {
                                    patch = Some(false);
                                    break 'p;
                                }
                                (Some(_), Some(_)) => {}
                                _ => patch = None,
                            }
                        }
                    }
                    match patch {
                        Some(true) => match in_u(&view, n, g0) {
                            Some(true) => count += 1,
                            Some(false) => {
                                return Ok(CheckResult::fail(
                                    name,
                                    format!("n={n}, m={m}"),
                                    format!("γ_0 = {} is good and patching but σ^{{γ_0⁻¹}}η ∉ U_{n}", q.element(g0)),
                                ))
                            }
                            None => decided = false,
                        },
                        Some(false) => {}
                        None => decided = false,
                    }
                }
                if decided {
                    qualifying += count;
                    scope.push(format!("({n},{m}): {count}/{}", set.len()));
                }
            }
        }
        if scope.is_empty() {
            return Ok(CheckResult::inconclusive(name, format!("no (n, m) fully determined at depth {s}")));
        }
        Ok(CheckResult::pass(name, format!("qualifying/good per (n,m): {}", scope.join(", ")))
            .witness(format!("{qualifying} qualifying γ_0 land in U_n")))
    };
    run().unwrap_or_else(|e| CheckResult::inconclusive(name, e.to_string()))
}

/// `Γ_n ∩ D_{n+1}` as indices of the view's quotient.
fn gamma_layer(q: &Quotient<'_>, n: usize) -> Vec<u64> {
    let base = q.identity() % q.sub_size(n);
    (0..q.sub_size(n + 1) / q.sub_size(n)).map(|t| q.lift(base + t * q.sub_size(n), n + 1)).collect()
}

/// For `n_k < n_j` in `M` and good `γ_0 ∈ Γ_{n_k+1} ∩ D_{n_j}`: `η(γ_0γu) = η(u)` for all
/// `γ ∈ Γ_{n_k} ∩ D_{n_k+1}` and `u ∈ J(n_k)`.
pub fn t1t2_check(sk: &ToeplitzSkeleton, budget: &Budget) -> CheckResult {
    let name = "t1t2";
    let run = || -> Result<CheckResult> {
        let s = sk.depth();
        let view = EtaView::new(sk, budget)?;
        let q = view.quotient();
        let m_levels = sk.m_levels(s);
        let mut done = Vec::new();
        let mut evals = 0u64;
        for (i, &nk) in m_levels.iter().enumerate() {
            for &nj in m_levels[i + 1..].iter().filter(|&&nj| nj < s) {
                let set = match good_relation_set(sk.tower(), nk, nj, budget) {
                    Ok(x) => x,
                    Err(_) => continue,
                };
                let qm = sk.tower().quotient(nj)?;
                let space = CellSpace::new(sk, nk, budget)?;
                let js = j_lifted(&space, q);
                let gammas = gamma_layer(q, nk);
                for &g in &set {
                    let g0 = lift_to(q, &qm, g);
                    for &u in &js {
                        for &ga in &gammas {
                            let p = q.mul(g0, q.mul(ga, u));
                            let (a, b) = (view.at(p), view.at(u));
                            if a.is_none() || a != b {
                                return Ok(CheckResult::fail(
                                    name,
                                    format!("n_k={nk}, n_j={nj}"),
                                    format!("η(γ_0γu) = {a:?}, η(u) = {b:?} at γ_0γu = {}", q.element(p)),
                                ));
                            }
                            evals += 1;
                        }
                    }
                }
                done.push((nk, nj));
            }
        }
        if done.is_empty() {
            return Ok(CheckResult::inconclusive(name, format!("no M pair below depth {s} (M ∩ [1,{s}] = {m_levels:?})")));
        }
        Ok(CheckResult::pass(name, format!("pairs {done:?}, {evals} evaluations")))
    };
    run().unwrap_or_else(|e| CheckResult::inconclusive(name, e.to_string()))
}

/// For `n_k ∈ M`, `n_k ≥ 2`: every `w ∈ D_{n_k−1} \ {1}` has `g_w ∈ Per(η, Γ_{n_k−1}, 1)` with
/// `wg_w ∈ D_{n_k+1} \ Per(η, Γ_{n_k+1}, 1)`.
pub fn good_ds_check(sk: &ToeplitzSkeleton, budget: &Budget) -> CheckResult {
    let name = "good-ds";
    let run = || -> Result<CheckResult> {
        let s = sk.depth();
        let mut done = Vec::new();
        let mut r = CheckResult::pass(name, "");
        for nk in sk.m_levels(s).into_iter().filter(|&n| n >= 2 && n < s) {
            let q = sk.tower().quotient(nk + 1)?;
            let low = PeriodTable::from_skeleton(sk, nk - 1, budget)?;
            let high = PeriodTable::from_skeleton(sk, nk + 1, budget)?;
            let id = q.sub_size(nk - 1);
            let ident_low = q.identity() % id;
            let mut witnesses = 0;
            for w in (0..id).filter(|&w| w != ident_low) {
                let wl = q.lift(w, nk - 1);
                let winv = q.inv(wl);
                // g_w = w⁻¹x with x = wg_w ∈ D_{n_k+1}.
                let found = (0..q.size())
                    .find(|&x| !high.per(1).contains(x) && low.per(1).contains(q.project(q.mul(winv, x), nk - 1)));
                match found {
                    Some(x) => {
                        witnesses += 1;
                        if witnesses <= 3 {
                            r.push_witness(format!(
                                "n_k={nk}: w = {}, wg_w = {}",
                                q.element(wl),
                                q.element(x)
                            ));
                        }
                    }
                    None => {
                        return Ok(CheckResult::fail(name, format!("n_k={nk}"), format!("no g_w for w = {}", q.element(wl))))
                    }
                }
            }
            done.push((nk, witnesses));
        }
        if done.is_empty() {
            return Ok(CheckResult::inconclusive(name, format!("no n_k ≥ 2 in M below depth {s}")));
        }
        r.scope = format!("(n_k, |D_{{n_k−1}}|−1) ∈ {done:?}, existence only");
        Ok(r)
    };
    run().unwrap_or_else(|e| CheckResult::inconclusive(name, e.to_string()))
}

/// Orbit points of `η` in `U_{n_k}` lie in `Y_{n_k}`. Vacated on blocks where the linking
/// condition fails; violations found there are reported as witnesses.
pub fn u_in_y_check(sk: &ToeplitzSkeleton, budget: &Budget) -> CheckResult {
    let name = "u-in-y";
    let run = || -> Result<CheckResult> {
        let s = sk.depth();
        let view = EtaView::new(sk, budget)?;
        let q = view.quotient();
        let mut passed = Vec::new();
        let mut vacated = Vec::new();
        for (k, nk) in sk.m_levels(s).into_iter().enumerate() {
            if nk + 1 > s {
                continue;
            }
            let space = CellSpace::new(sk, nk, budget)?;
            let js = j_lifted(&space, q);
            let (points, all) = sample_points(q.size(), q.sub_size(nk + 1), budget);
            let (mut members, mut violations, mut first) = (0u64, 0u64, None);
            for w in points {
                if in_u(&view, nk, w) != Some(true) {
                    continue;
                }
                members += 1;
                match in_y(&view, &space, &js, w) {
                    Ok(Some(true)) => {}
                    Ok(Some(false)) => {
                        violations += 1;
                        first.get_or_insert(w);
                    }
                    Ok(None) => {}
                    Err(e) => return Ok(CheckResult::fail(name, format!("n_k={nk}"), e)),
                }
            }
            let mode = if all { "all of G/Γ_S" } else { "sampled" };
            match sk.linking_ok(k) {
                Some(true) => {
                    if let Some(w) = first {
                        return Ok(CheckResult::fail(
                            name,
                            format!("n_k={nk}"),
                            format!("σ^{{-{}}}η ∈ U_{nk} \\ Y_{nk} ({violations} such points)", q.element(w)),
                        ));
                    }
                    passed.push(format!("n_k={nk}: {members} points of U in Y ({mode})"));
                }
                _ => vacated.push(format!("n_k={nk} (block {k}): linking fails, {violations}/{members} U points outside Y")),
            }
        }
        if passed.is_empty() && vacated.is_empty() {
            return Ok(CheckResult::inconclusive(name, format!("no n_k with n_k+1 ≤ {s}")));
        }
        let mut r = if passed.is_empty() {
            CheckResult::vacated(name, vacated.join("; "))
        } else {
            CheckResult::pass(name, passed.join("; "))
        };
        for v in vacated.iter().filter(|_| !passed.is_empty()) {
            r.push_witness(format!("vacated {v}"));
        }
        Ok(r)
    };
    run().unwrap_or_else(|e| CheckResult::inconclusive(name, e.to_string()))
}

/// `σ^{v⁻¹}Y_{n_k} ⊆ Z_{n_k}` for `v ∈ D_{n_k+1}`, over orbit points of `η` in `Y_{n_k}`.
pub fn y_in_z_check(sk: &ToeplitzSkeleton, budget: &Budget) -> CheckResult {
    let name = "y-in-z";
    let run = || -> Result<CheckResult> {
        let s = sk.depth();
        let view = EtaView::new(sk, budget)?;
        let q = view.quotient();
        let mut done = Vec::new();
        for nk in sk.m_levels(s).into_iter().filter(|&n| n < s) {
            let space = CellSpace::new(sk, nk, budget)?;
            let js = j_lifted(&space, q);
            let (points, _) = sample_points(q.size(), q.sub_size(nk + 1) * (js.len() as u64 + 1), budget);
            let mut ys = 0;
            for w in points {
                if in_y(&view, &space, &js, w).ok().flatten() != Some(true) {
                    continue;
                }
                ys += 1;
                for v in 0..q.sub_size(nk + 1) {
                    let p = q.mul(w, q.lift(v, nk + 1));
                    if let Ok(Some(a)) = semantic_atom(&view, &space, &js, p) {
                        if space.decode(a).1 != Tag::Zero {
                            return Ok(CheckResult::fail(
                                name,
                                format!("n_k={nk}"),
                                format!("shift of a Y point lands in {}", space.describe(a)),
                            ));
                        }
                    }
                }
            }
            done.push((nk, ys));
        }
        if done.is_empty() {
            return Ok(CheckResult::inconclusive(name, format!("no n_k below depth {s}")));
        }
        Ok(CheckResult::pass(name, format!("(n_k, Y points) ∈ {done:?}")))
    };
    run().unwrap_or_else(|e| CheckResult::inconclusive(name, e.to_string()))
}

/// Indices `d ∈ D_m` with `σ^{d⁻¹}η_m ∈ U_n`.
fn u_points(view: &EtaView<'_>, n: usize) -> Vec<u64> {
    (0..view.quotient().size()).filter(|&d| in_u(view, n, d) == Some(true)).collect()
}

fn check_mu_levels(sk: &ToeplitzSkeleton, n: usize, m: usize) -> Result<()> {
    if n == 0 || m < n + 1 {
        return Err(Error::Unsupported(format!("μ_m(U_n) needs 1 ≤ n < m, got n={n}, m={m}")));
    }
    if m >= sk.depth() {
        return Err(Error::DepthExceeded { requested: m + 1, available: sk.depth() });
    }
    Ok(())
}

/// `μ_m(U_n)`, exact.
pub fn mu_u(sk: &ToeplitzSkeleton, n: usize, m: usize, budget: &Budget) -> Result<BigRational> {
    check_mu_levels(sk, n, m)?;
    let view = EtaView::periodic(sk, m, budget)?;
    let dm = view.quotient().size();
    budget.require_enumerable("μ_m(U_n) scan", &(BigUint::from(dm) * view.quotient().sub_size(n + 1)))?;
    Ok(BigRational::new(u_points(&view, n).len().into(), dm.into()))
}

/// `μ_m(⋃_{v ∈ D_{n+1}} σ^{v⁻¹}U_n)`, exact.
pub fn mu_union_u(sk: &ToeplitzSkeleton, n: usize, m: usize, budget: &Budget) -> Result<BigRational> {
    check_mu_levels(sk, n, m)?;
    let view = EtaView::periodic(sk, m, budget)?;
    let q = view.quotient();
    budget.require_enumerable("μ_m(U_n) scan", &(BigUint::from(q.size()) * q.sub_size(n + 1)))?;
    // σ^{d⁻¹}η_m ∈ σ^{v⁻¹}U_n iff d·v⁻¹ is a U point.
    let mut hit = vec![false; q.size() as usize];
    for u in u_points(&view, n) {
        for v in 0..q.sub_size(n + 1) {
            hit[q.mul(u, q.lift(v, n + 1)) as usize] = true;
        }
    }
    Ok(BigRational::new(hit.iter().filter(|&&h| h).count().into(), q.size().into()))
}

/// `μ_m(Z_n)`: the share of `d ∈ D_m` whose level-`n` cell under `η_m` is a `C^0` cell.
fn mu_z(sk: &ToeplitzSkeleton, n: usize, m: usize, budget: &Budget) -> Result<BigRational> {
    let view = EtaView::periodic(sk, m, budget)?;
    let q = view.quotient();
    let space = CellSpace::new(sk, n, budget)?;
    let js = j_lifted(&space, q);
    let mut zeros = 0u64;
    for d in 0..q.size() {
        let a = semantic_atom(&view, &space, &js, d)
            .map_err(|e| Error::MethodDisagreement { what: "μ_m(Z_n)".into(), detail: e })?
            .ok_or(Error::DepthExceeded { requested: m + 1, available: sk.depth() })?;
        if space.decode(a).1 == Tag::Zero {
            zeros += 1;
        }
    }
    Ok(BigRational::new(zeros.into(), q.size().into()))
}

/// Pairs `(n, m)` at which `μ_m(U_n)` is computed: `n ∈ M`, `n+2 ≤ m < S`, within budget.
pub fn uns_pairs(sk: &ToeplitzSkeleton, budget: &Budget) -> Vec<(usize, usize)> {
    let s = sk.depth();
    let t = sk.tower();
    let mut out = Vec::new();
    for n in sk.m_levels(s) {
        for m in n + 2..s {
            let cost = t.size(m) * t.size(n + 1);
            if budget.enumerable(&cost) || cost <= BigUint::from(budget.enumeration) * 64u32 {
                out.push((n, m));
            }
        }
    }
    out
}

/// `μ_m(U_n) ≥ N_{m,n}/|D_m| ≥ (1/|D_{n+1}|)·∏(1 − |D_{n+l}|/|D_{n+l+1}|)` and the union form
/// `μ_m(⋃σ^{v⁻¹}U_n) ≥ ∏(…)`, as exact comparisons.
pub fn uns_bound_check(sk: &ToeplitzSkeleton, budget: &Budget) -> CheckResult {
    let name = "uns-bound";
    let run = || -> Result<CheckResult> {
        let t = sk.tower();
        let pairs = uns_pairs(sk, budget);
        if pairs.is_empty() {
            return Ok(CheckResult::inconclusive(name, format!("no (n ∈ M, m ≥ n+2) below depth {}", sk.depth())));
        }
        let big = Budget { enumeration: budget.enumeration.saturating_mul(64), ..*budget };
        let m_levels = sk.m_levels(sk.depth());
        let mut r = CheckResult::pass(name, "");
        let mut strict = true;
        for &(n, m) in &pairs {
            let mu = mu_u(sk, n, m, &big)?;
            let union = mu_union_u(sk, n, m, &big)?;
            let prod = product_bound(t, n, m);
            let single = &prod / BigRational::from_integer(t.size(n + 1).clone().into());
            if mu < single {
                return Ok(CheckResult::fail(name, format!("n={n}, m={m}"), format!("μ_m(U_n) = {mu} < {single}")));
            }
            // Every good γ patches only when m is a closing level too; only then do the
            // intermediate count and the union form follow.
            if m_levels.contains(&m) {
                let good = good_relation_set(t, n, m, &big)?.len();
                let n_share = BigRational::new(good.into(), t.size(m).clone().into());
                if mu < n_share || union < prod {
                    return Ok(CheckResult::fail(
                        name,
                        format!("n={n}, m={m}"),
                        format!("μ_m(U_n) = {mu}, N/|D_m| = {n_share}; union {union} vs {prod}"),
                    ));
                }
            }
            strict &= mu > single;
            r.push_witness(format!("({n},{m}): μ_m(U_n) = {mu} ≥ {single}; union {union}, product {prod}"));
        }
        r.scope = format!("(n, m) ∈ {pairs:?}, {}", if strict { "all strict" } else { "some equalities" });
        Ok(r)
    };
    run().unwrap_or_else(|e| CheckResult::inconclusive(name, e.to_string()))
}

/// Lower bounds on `lim_s ∏_{l=1}^{s}(1 − |D_{n+l}|/|D_{n+l+1}|)` for `n = 1..=levels`:
/// the known factors times `1 − (declared tail sum)`. `None` when no tail is declared.
pub fn measure_one_bounds(tower: &QuotientTower, levels: usize) -> Result<Option<Vec<(usize, BigRational)>>> {
    let known = tower.depth().saturating_sub(1);
    let tail = match l_series(tower, known)?.tail_bound {
        Some(t) => t,
        None => return Ok(None),
    };
    let one = BigRational::one();
    let mut out = Vec::new();
    for n in 1..=levels.min(known) {
        let mut b = &one - &tail;
        for j in n + 1..=known {
            b *= &one - tower.series_term(j);
        }
        out.push((n, b.max(BigRational::zero())));
    }
    Ok(Some(out))
}

/// The chain `μ_m(Z_n) ≥ μ_m(⋃σ^{v⁻¹}U_n) ≥ ∏(…)` at computed pairs, and the limiting lower
/// bounds nondecreasing over levels `1..=S`.
pub fn measure_one_trend_check(sk: &ToeplitzSkeleton, budget: &Budget) -> CheckResult {
    let name = "measure-1-trend";
    let run = || -> Result<CheckResult> {
        let t = sk.tower();
        let s = sk.depth();
        let bounds = match measure_one_bounds(t, s)? {
            Some(b) if b.len() >= 2 => b,
            Some(_) => return Ok(CheckResult::inconclusive(name, "fewer than two levels with known factors")),
            None => return Ok(CheckResult::inconclusive(name, "no declared summable tail; bounds are 0")),
        };
        if let Some(w) = bounds.windows(2).find(|w| w[1].1 < w[0].1) {
            return Ok(CheckResult::fail(name, format!("levels {}..{}", w[0].0, w[1].0), "bound decreases"));
        }
        let big = Budget { enumeration: budget.enumeration.saturating_mul(64), ..*budget };
        let m_levels = sk.m_levels(s);
        let mut r = CheckResult::pass(name, "");
        let mut chains = Vec::new();
        for (n, m) in uns_pairs(sk, budget) {
            let z = mu_z(sk, n, m, &big)?;
            let union = mu_union_u(sk, n, m, &big)?;
            let prod = product_bound(t, n, m);
            if z < union || (m_levels.contains(&m) && union < prod) {
                return Ok(CheckResult::fail(
                    name,
                    format!("n={n}, m={m}"),
                    format!("μ_m(Z_n) = {z}, μ_m(⋃σU_n) = {union}, product {prod}"),
                ));
            }
            chains.push((n, m));
            r.push_witness(format!("({n},{m}): μ_m(Z_n) = {z} ≥ μ_m(⋃σU_n) = {union}; product {prod}"));
        }
        for (n, b) in &bounds {
            r.push_witness(format!("bound at n={n}: {}", crate::scalar::rational_json(b)["decimal"]));
        }
        r.scope = format!("finite shadow: bounds nondecreasing over n = 1..={}, chains at {chains:?}", bounds.len());
        Ok(r)
    };
    run().unwrap_or_else(|e| CheckResult::inconclusive(name, e.to_string()))
}

