//! Named checks over a skeleton, run one at a time or as a suite.

use std::time::Instant;

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::Serialize;

use crate::density::d_exact;
use crate::factor::{equivariance_check, pi_membership_check, pushforward_check, toeplitz_mass_estimate};
use crate::measures::{
    an_det_check, containings_check, cylinder_cells_check, good_ds_check, good_patches_check, good_relation_check,
    measure_one_trend_check, partition_mass_check, t1t2_check, u_in_y_check, uns_bound_check, y_in_z_check,
    z_identity_check,
};
use crate::periods::{
    auxiliar_cover_check, essential_check, partitions_c_check, per1_structure_check, per_eq_check, per_eq_check_window,
    PeriodTable,
};
use crate::skeleton::{j_set, j_set_recursive, SymbolWindow, ToeplitzSkeleton};
use crate::tower::validate_domains;
use crate::{Budget, CheckResult, Error, Result, Status};

/// Optional overrides for a single check.
#[derive(Clone, Debug, Default)]
pub struct CheckParams {
    /// Upper level of the examined range, where the check has one.
    pub level: Option<usize>,
    /// Replaces `η|_{D_S}` for window-based checks.
    pub window: Option<SymbolWindow>,
}

pub struct Context<'a> {
    pub sk: &'a ToeplitzSkeleton,
    pub budget: &'a Budget,
    pub params: &'a CheckParams,
}

impl Context<'_> {
    fn level_or(&self, default: usize) -> usize {
        self.params.level.unwrap_or(default)
    }
}

pub struct CheckSpec {
    pub name: &'static str,
    /// The finite statement being checked.
    pub statement: &'static str,
    run: fn(&Context<'_>) -> CheckResult,
}

pub const REGISTRY: &[CheckSpec] = &[
    CheckSpec { name: "decom", statement: "D_{n+1} = ⋃_{γ ∈ Γ_n∩D_{n+1}} γD_n, nested fundamental domains", run: decom },
    CheckSpec { name: "j-recursion", statement: "J(n+1) = ((Γ_n∩D_{n+1}) \\ {1})·J(n)", run: j_recursion },
    CheckSpec { name: "per-eq", statement: "Per(η,Γ_n) = ⋃_{i<n} J(i)Γ_{i+1}", run: per_eq },
    CheckSpec { name: "j-sub", statement: "J(n) ⊆ Per(η,Γ_{n+1}) \\ Per(η,Γ_n)", run: j_sub },
    CheckSpec { name: "essential", statement: "every Γ_n is an essential group of periods", run: essential },
    CheckSpec { name: "periodo1", statement: "Per(η,Γ_s,1) is Γ_1 plus the planted cosets", run: periodo1 },
    CheckSpec { name: "auxiliar", statement: "γJ(i) lands in one level ≥ i for γ ∈ (Γ_i∩D_{i+1}) \\ {1}", run: auxiliar },
    CheckSpec { name: "good-relation", statement: "good relations exist and number at least the product bound", run: good_relation },
    CheckSpec { name: "good-patches", statement: "good and patching γ_0 give σ^{γ_0⁻¹}η ∈ U_n", run: good_patches },
    CheckSpec { name: "t1t2", statement: "η(γ_0γu) = η(u) for M pairs", run: t1t2 },
    CheckSpec { name: "partitions-c", statement: "at most one 1 on each Γ_k-translate of J(k)", run: partitions_c },
    CheckSpec { name: "linking", statement: "(Γ_{m_k−2}∩D_{m_k−1})⁻¹h ⊆ D_{m_k}", run: linking },
    CheckSpec { name: "good-ds", statement: "every w ∈ D_{n_k−1} \\ {1} has a witness g_w", run: good_ds },
    CheckSpec { name: "u-in-y", statement: "U_{n_k} ∩ O(η) ⊆ Y_{n_k}", run: u_in_y },
    CheckSpec { name: "y-in-z", statement: "⋃_v σ^{v⁻¹}Y_{n_k} ⊆ Z_{n_k}", run: y_in_z },
    CheckSpec { name: "containings", statement: "refinement rules (1)–(5) between P_{n+1} and P_n", run: containings },
    CheckSpec { name: "z-identity", statement: "Z_n vs Z_{n+1} ∪ W_{n+1} (∪ C^1 part on closing levels), chained", run: z_identity },
    CheckSpec { name: "cylinder-cells", statement: "[0], [1] as unions of P_n cells", run: cylinder_cells },
    CheckSpec { name: "partition-mass", statement: "μ_m([1]) = a_{n,1}/|D_n| + μ_m(C_n^1) and cell invariance", run: partition_mass },
    CheckSpec { name: "an-det", statement: "det A_n = |D_n|", run: an_det },
    CheckSpec { name: "uns-bound", statement: "μ_m(U_n) ≥ (1/|D_{n+1}|)∏(1 − |D_{n+l}|/|D_{n+l+1}|)", run: uns_bound },
    CheckSpec { name: "measure-1-trend", statement: "lower bounds on μ(Z_n) nondecreasing toward 1", run: measure_one },
    CheckSpec { name: "density-triple", statement: "d_n by enumeration, recursion and closed form agree", run: density_triple },
    CheckSpec { name: "toeplitz-mass", statement: "forced share of Γ_n cosets equals d_n", run: toeplitz_mass },
    CheckSpec { name: "equivariance", statement: "π(gv) = gπ(v)", run: equivariance },
    CheckSpec { name: "pushforward", statement: "π_*μ_m gives each depth-n cylinder mass 1/|D_n|", run: pushforward },
    CheckSpec { name: "pi-membership", statement: "π by reduction equals π by C_n membership", run: pi_membership },
];

/// Finite statements that must each have a registered check.
pub const STATEMENTS: &[(&str, &str)] = &[
    ("fundamental domain decomposition", "decom"),
    ("recursive description of J(n)", "j-recursion"),
    ("period sets as unions of J-cosets", "per-eq"),
    ("J(n) is fresh at level n+1", "j-sub"),
    ("period structure is essential", "essential"),
    ("1-periods before a block end", "periodo1"),
    ("translates of J(i) are J-sets", "auxiliar"),
    ("good relation count", "good-relation"),
    ("good patches land in U_n", "good-patches"),
    ("patching on closing levels", "t1t2"),
    ("one 1 per J-translate", "partitions-c"),
    ("linking condition", "linking"),
    ("witnesses off the 1-periods", "good-ds"),
    ("U_n inside Y_n on the orbit closure", "u-in-y"),
    ("shifts of Y_n inside Z_n", "y-in-z"),
    ("refinement containments", "containings"),
    ("Z_n refinement identities", "z-identity"),
    ("cylinders in partition cells", "cylinder-cells"),
    ("at-least identities for cell masses", "partition-mass"),
    ("determinant of A_n", "an-det"),
    ("measure of U_n", "uns-bound"),
    ("measure of Z_n tends to 1", "measure-1-trend"),
    ("density of the periodic part", "density-triple"),
    ("Toeplitz points have Haar mass d_n", "toeplitz-mass"),
    ("factor map is equivariant", "equivariance"),
    ("pushforward of μ_m is Haar", "pushforward"),
    ("factor map from C_n membership", "pi-membership"),
];

pub fn check_names() -> Vec<&'static str> {
    REGISTRY.iter().map(|c| c.name).collect()
}

/// Runs one registered check and stamps its running time.
pub fn run_check(sk: &ToeplitzSkeleton, name: &str, params: &CheckParams, budget: &Budget) -> Result<CheckResult> {
    let spec = REGISTRY.iter().find(|c| c.name == name).ok_or_else(|| Error::UnknownCheck(name.to_string()))?;
    let start = Instant::now();
    let mut r = (spec.run)(&Context { sk, budget, params });
    r.name = spec.name.to_string();
    r.millis = start.elapsed().as_millis() as u64;
    Ok(r)
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub depth: usize,
    pub results: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn count(&self, status: Status) -> usize {
        self.results.iter().filter(|r| r.status == status).count()
    }

    pub fn any_fail(&self) -> bool {
        self.results.iter().any(|r| r.is_fail())
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.results.iter().find(|r| r.name == name)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "depth": self.depth,
            "summary": {
                "pass": self.count(Status::Pass),
                "fail": self.count(Status::Fail),
                "inconclusive": self.count(Status::Inconclusive),
                "vacated": self.count(Status::Vacated),
            },
            "checks": self.results,
        })
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for r in &self.results {
            out.push_str(&format!("{r}\n"));
        }
        out.push_str(&format!(
            "{} pass, {} fail, {} inconclusive, {} vacated\n",
            self.count(Status::Pass),
            self.count(Status::Fail),
            self.count(Status::Inconclusive),
            self.count(Status::Vacated)
        ));
        out
    }
}

/// Every registered check, in registry order.
pub fn run_all(sk: &ToeplitzSkeleton, budget: &Budget) -> SuiteReport {
    let params = CheckParams::default();
    let results = REGISTRY
        .par_iter()
        .map(|c| run_check(sk, c.name, &params, budget).expect("registered"))
        .collect();
    SuiteReport { depth: sk.depth(), results }
}

/// Every statement has a registered check and every check covers a statement.
pub fn registry_self_test() -> CheckResult {
    let names = check_names();
    for (what, check) in STATEMENTS {
        if !names.contains(check) {
            return CheckResult::fail("registry", "statement list", format!("{what:?} has no check {check:?}"));
        }
    }
    for n in &names {
        if !STATEMENTS.iter().any(|(_, c)| c == n) {
            return CheckResult::fail("registry", "statement list", format!("check {n:?} covers no statement"));
        }
    }
    CheckResult::pass("registry", format!("{} statements, {} checks", STATEMENTS.len(), names.len()))
}

fn decom(cx: &Context<'_>) -> CheckResult {
    let t = cx.sk.tower();
    let cap = cx.budget.enumeration.min(1 << 20);
    let mut domains = Vec::new();
    for n in 0..=t.depth() {
        if t.size(n) > &BigUint::from(cap) {
            break;
        }
        match t.enumerate(n, cx.budget) {
            Ok(d) => domains.push(d),
            Err(_) => break,
        }
    }
    validate_domains(t, &domains)
}

fn j_recursion(cx: &Context<'_>) -> CheckResult {
    let t = cx.sk.tower();
    let max = cx.level_or(6).min(t.depth());
    let mut done = Vec::new();
    for n in 0..=max {
        match (j_set(t, n, cx.budget), j_set_recursive(t, n, cx.budget)) {
            (Ok(a), Ok(b)) if a == b => done.push((n, a.len())),
            (Ok(a), Ok(b)) => {
                let x = a.elements.iter().find(|g| !b.contains(g)).or_else(|| b.elements.iter().find(|g| !a.contains(g)));
                return CheckResult::fail("j-recursion", format!("n={n}"), format!("routes differ at {x:?}"));
            }
            _ => break,
        }
    }
    if done.is_empty() {
        return CheckResult::inconclusive("j-recursion", "no enumerable level");
    }
    CheckResult::pass("j-recursion", format!("(n, |J(n)|) ∈ {done:?}"))
}

fn per_eq(cx: &Context<'_>) -> CheckResult {
    let n = cx.level_or(cx.sk.depth());
    match &cx.params.window {
        Some(w) => per_eq_check_window(cx.sk.tower(), w, n.min(w.level()), cx.budget),
        None => per_eq_check(cx.sk, n, cx.budget),
    }
}

fn j_sub(cx: &Context<'_>) -> CheckResult {
    per_eq(cx)
}

fn essential(cx: &Context<'_>) -> CheckResult {
    let max = cx.level_or(cx.sk.depth());
    let mut r = CheckResult::pass("essential", format!("n=1..={max}"));
    for n in 1..=max {
        let table = match PeriodTable::from_skeleton(cx.sk, n, cx.budget) {
            Ok(t) => t,
            Err(e) => return CheckResult::inconclusive("essential", e.to_string()),
        };
        match essential_check(cx.sk.tower(), &table) {
            Ok(c) if c.is_fail() => return c,
            Ok(_) => {}
            Err(e) => return CheckResult::inconclusive("essential", e.to_string()),
        }
    }
    r.scope = format!("exhaustive D_n, n=1..={max}");
    r
}

fn periodo1(cx: &Context<'_>) -> CheckResult {
    per1_structure_check(cx.sk, cx.level_or(cx.sk.depth()), cx.budget)
}

fn auxiliar(cx: &Context<'_>) -> CheckResult {
    let t = cx.sk.tower();
    let mut acc: Option<CheckResult> = None;
    let mut tried: Vec<(usize, usize)> = Vec::new();
    for i in 1..cx.sk.depth() {
        let q = match t.quotient(i + 1) {
            Ok(q) => q,
            Err(e) => return CheckResult::inconclusive("auxiliar", e.to_string()),
        };
        let base = q.identity() % q.sub_size(i);
        for k in 0..t.base(i + 1) {
            let g = base + k * q.sub_size(i);
            if g == q.identity() {
                continue;
            }
            let r = auxiliar_cover_check(cx.sk, i, &q.element(g), cx.budget);
            if r.status == Status::Inconclusive {
                continue;
            }
            match tried.last_mut() {
                Some((l, c)) if *l == i => *c += 1,
                _ => tried.push((i, 1)),
            }
            let r = CheckResult { scope: String::new(), ..r };
            acc = Some(match acc {
                None => r,
                Some(a) => a.merge(r),
            });
        }
    }
    match acc {
        Some(r) => CheckResult { scope: format!("(i, γ count) ∈ {tried:?}"), ..r },
        None => CheckResult::inconclusive("auxiliar", "no level within depth and budget"),
    }
}

fn good_relation(cx: &Context<'_>) -> CheckResult {
    good_relation_check(cx.sk, cx.budget)
}

fn good_patches(cx: &Context<'_>) -> CheckResult {
    good_patches_check(cx.sk, cx.budget)
}

fn t1t2(cx: &Context<'_>) -> CheckResult {
    t1t2_check(cx.sk, cx.budget)
}

fn partitions_c(cx: &Context<'_>) -> CheckResult {
    let k = cx.level_or(3).min(cx.sk.depth());
    partitions_c_check(cx.sk, k, cx.budget.samples, cx.budget.seed, cx.budget)
}

fn linking(cx: &Context<'_>) -> CheckResult {
    let verdicts = cx.sk.linking();
    if verdicts.is_empty() {
        return CheckResult::inconclusive("linking", format!("no completed block at depth {}", cx.sk.depth()));
    }
    let scope = format!("blocks {:?}", verdicts.iter().map(|v| v.block).collect::<Vec<_>>());
    let bad: Vec<_> = verdicts.iter().filter(|v| !v.ok).collect();
    let mut r = if bad.is_empty() { CheckResult::pass("linking", scope) } else { CheckResult::vacated("linking", scope) };
    for v in verdicts {
        match &v.witness {
            Some(w) => r.push_witness(format!("block {}: h = {}, v = {w} leaves D_{{m_k}}", v.block, v.h)),
            None => r.push_witness(format!("block {}: h = {}, {} translations stay inside", v.block, v.h, v.checked)),
        }
    }
    r
}

fn good_ds(cx: &Context<'_>) -> CheckResult {
    good_ds_check(cx.sk, cx.budget)
}

fn u_in_y(cx: &Context<'_>) -> CheckResult {
    u_in_y_check(cx.sk, cx.budget)
}

fn y_in_z(cx: &Context<'_>) -> CheckResult {
    y_in_z_check(cx.sk, cx.budget)
}

fn containings(cx: &Context<'_>) -> CheckResult {
    containings_check(cx.sk, cx.budget)
}

fn z_identity(cx: &Context<'_>) -> CheckResult {
    z_identity_check(cx.sk, cx.budget)
}

fn cylinder_cells(cx: &Context<'_>) -> CheckResult {
    cylinder_cells_check(cx.sk, cx.budget)
}

fn partition_mass(cx: &Context<'_>) -> CheckResult {
    partition_mass_check(cx.sk, cx.budget)
}

fn an_det(cx: &Context<'_>) -> CheckResult {
    an_det_check(cx.sk, cx.level_or(cx.sk.depth()), cx.budget)
}

fn uns_bound(cx: &Context<'_>) -> CheckResult {
    uns_bound_check(cx.sk, cx.budget)
}

fn measure_one(cx: &Context<'_>) -> CheckResult {
    measure_one_trend_check(cx.sk, cx.budget)
}

fn density_triple(cx: &Context<'_>) -> CheckResult {
    let max = cx.level_or(cx.sk.depth());
    let mut r = CheckResult::pass("density-triple", "");
    let mut enumerated = Vec::new();
    for n in 1..=max {
        match d_exact(cx.sk, n, cx.budget) {
            Ok(t) => {
                if t.enumeration.is_some() {
                    enumerated.push(n);
                }
                r.push_witness(format!("d_{n} = {}", t.value()));
            }
            Err(e @ Error::MethodDisagreement { .. }) => return CheckResult::fail("density-triple", format!("n={n}"), e.to_string()),
            Err(e) => return CheckResult::inconclusive("density-triple", e.to_string()),
        }
    }
    r.scope = format!("n=1..={max}, enumeration at {enumerated:?}");
    r
}

fn toeplitz_mass(cx: &Context<'_>) -> CheckResult {
    let max = cx.level_or(cx.sk.depth());
    for n in 1..=max {
        let (est, exact) = match (toeplitz_mass_estimate(cx.sk, n, cx.budget), d_exact(cx.sk, n, cx.budget)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => return CheckResult::inconclusive("toeplitz-mass", e.to_string()),
        };
        if &est != exact.value() {
            return CheckResult::fail("toeplitz-mass", format!("n={n}"), format!("window share {est} vs d_{n} = {}", exact.value()));
        }
    }
    CheckResult::pass("toeplitz-mass", format!("n=1..={max}"))
}

fn equivariance(cx: &Context<'_>) -> CheckResult {
    equivariance_check(cx.sk, cx.budget)
}

fn pushforward(cx: &Context<'_>) -> CheckResult {
    pushforward_check(cx.sk, cx.budget)
}

fn pi_membership(cx: &Context<'_>) -> CheckResult {
    pi_membership_check(cx.sk, cx.budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use crate::tower::DomainStyle;

    #[test]
    fn registry_is_complete() {
        assert_eq!(registry_self_test().status, Status::Pass);
        let sk = ToeplitzSkeleton::from_config(&presets::threeadic(DomainStyle::NonNegative), 3).unwrap();
        assert!(matches!(run_check(&sk, "nope", &CheckParams::default(), &Budget::default()), Err(Error::UnknownCheck(_))));
    }

    #[test]
    fn flipped_window_fails_per_eq() {
        let sk = ToeplitzSkeleton::from_config(&presets::threeadic(DomainStyle::NonNegative), 5).unwrap();
        let b = Budget::default();
        let mut w = sk.materialize_window(5, &b).unwrap();
        w.flip(4);
        let params = CheckParams { level: Some(3), window: Some(w) };
        let r = run_check(&sk, "per-eq", &params, &b).unwrap();
        assert_eq!(r.status, Status::Fail);
        assert!(r.counterexample.unwrap().contains("coset"));
        let ok = run_check(&sk, "per-eq", &CheckParams { level: Some(4), window: None }, &b).unwrap();
        assert_eq!(ok.status, Status::Pass);
    }
}
