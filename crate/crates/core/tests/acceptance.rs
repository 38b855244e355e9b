//! Acceptance criteria, one pass/fail line each.

use std::alloc::{GlobalAlloc, Layout, System};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use toeplitz::density::{d_exact, regularity_verdict, Verdict};
use toeplitz::measures::{
    a_counts, containings_check, good_patches_check, good_relation_check, measure_one_trend_check, t1t2_check,
    u_in_y_check, uns_bound_check, z_identity_check,
};
use toeplitz::periods::{partitions_c_check, per_eq_check};
use toeplitz::skeleton::{j_set, j_set_recursive};
use toeplitz::{presets, Budget, CheckResult, GroupElement, QuotientTower, Status, ToeplitzSkeleton};

struct Counting;

static LIVE: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let p = System.alloc(layout);
        if !p.is_null() {
            let now = LIVE.fetch_add(layout.size(), Ordering::Relaxed) + layout.size();
            PEAK.fetch_max(now, Ordering::Relaxed);
        }
        p
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        System.dealloc(ptr, layout);
        LIVE.fetch_sub(layout.size(), Ordering::Relaxed);
    }
}

#[global_allocator]
static ALLOC: Counting = Counting;

type Outcome = Result<String, String>;

fn ratio(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

fn sk(name: &str, depth: usize) -> ToeplitzSkeleton {
    ToeplitzSkeleton::from_config(&presets::by_name(name).unwrap(), depth).unwrap()
}

fn tower(name: &str) -> QuotientTower {
    QuotientTower::build(&presets::by_name(name).unwrap()).unwrap()
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit: Duration, what: &str) -> Result<(), String> {
    ensure(elapsed < limit, format!("{what} took {elapsed:?}, limit {limit:?}"))
}

fn passed(r: &CheckResult) -> Result<(), String> {
    ensure(r.status == Status::Pass, r.to_string())
}

fn ints(v: &[GroupElement]) -> Vec<i64> {
    let mut v: Vec<i64> = v.iter().map(|g| g.to_string().parse().unwrap()).collect();
    v.sort();
    v
}

fn construction_fidelity() -> Outcome {
    let start = Instant::now();
    let b = Budget::default();
    let s = sk("threeadic", 4);
    let t = s.tower();
    let want: [&[i64]; 3] = [&[1, 2], &[4, 5, 7, 8], &[13, 14, 16, 17, 22, 23, 25, 26]];
    for (i, w) in want.iter().enumerate() {
        let got = ints(&j_set(t, i + 1, &b).map_err(|e| e.to_string())?.elements);
        ensure(&got == w, format!("J({}) = {got:?}", i + 1))?;
    }
    let recs: Vec<(usize, String)> = s.h_records().iter().map(|r| (r.step, r.h.to_string())).collect();
    ensure(recs == [(3, "4".to_string()), (4, "14".to_string())], format!("h-records {recs:?}"))?;
    let w = s.materialize_window(2, &b).map_err(|e| e.to_string())?;
    let want = [1u8, 0, 0, 1, 1, 0, 1, 0, 0].map(Some).to_vec();
    ensure(w.symbols() == want, format!("window(D_2) = {:?}", w.symbols()))?;
    within(start.elapsed(), Duration::from_secs(1), "construction")?;
    Ok(format!("J(1..3), h-records, window(D_2) match in {:?}", start.elapsed()))
}

fn j_recursion() -> Outcome {
    let start = Instant::now();
    let b = Budget::default();
    let mut sizes = Vec::new();
    for (name, max) in [("threeadic", 6), ("irregular-demo", 2)] {
        let t = tower(name);
        for n in 0..=max {
            let mut x = j_set(&t, n, &b).map_err(|e| e.to_string())?.elements;
            let mut y = j_set_recursive(&t, n, &b).map_err(|e| e.to_string())?.elements;
            x.sort_by_key(|g| g.to_string());
            y.sort_by_key(|g| g.to_string());
            ensure(x == y, format!("{name}: J({n}) routes differ"))?;
        }
        sizes.push(format!("{name} n ≤ {max}"));
    }
    within(start.elapsed(), Duration::from_secs(5), "J recursion")?;
    Ok(format!("{} in {:?}", sizes.join(", "), start.elapsed()))
}

fn per_eq() -> Outcome {
    let r = per_eq_check(&sk("threeadic", 5), 5, &Budget::default());
    passed(&r)?;
    Ok(r.scope)
}

fn density_triple() -> Outcome {
    let b = Budget::default();
    for (name, max) in [("threeadic", 5), ("irregular-demo", 4)] {
        let s = sk(name, max);
        for n in 1..=max {
            let d = d_exact(&s, n, &b).map_err(|e| e.to_string())?;
            ensure(d.enumeration.is_some(), format!("{name} d_{n}: enumeration skipped"))?;
        }
    }
    let d2 = d_exact(&sk("threeadic", 2), 2, &b).map_err(|e| e.to_string())?;
    ensure(BigRational::from_integer(1.into()) - d2.value() == ratio(4, 9), "1 − d_2 ≠ 4/9")?;
    Ok("three routes agree, threeadic n ≤ 5, irregular-demo n ≤ 4; 1 − d_2 = 4/9".into())
}

fn irregularity() -> Outcome {
    let start = Instant::now();
    let t = tower("irregular-demo");
    let r = regularity_verdict(&t, t.depth()).map_err(|e| e.to_string())?;
    ensure(r.verdict == Verdict::Irregular, format!("verdict {}", r.verdict))?;
    ensure(r.d_interval.1 < ratio(1, 4), "upper ≥ 1/4")?;
    ensure(r.d_below_half(), "d < 1 − d not certified")?;
    ensure(r.width() < ratio(1, 1_000_000), format!("width {}", r.width()))?;
    within(start.elapsed(), Duration::from_secs(5), "verdict")?;
    Ok(format!("Irregular, d ≤ {}, width {}", r.d_interval.1, r.width()))
}

fn determinant() -> Outcome {
    for name in ["threeadic", "irregular-demo"] {
        let s = sk(name, 5);
        for n in 1..=5 {
            let c = a_counts(&s, n).map_err(|e| e.to_string())?;
            ensure(c.det() == BigInt::from(c.dn.clone()), format!("{name} n={n}: det {} vs {}", c.det(), c.dn))?;
        }
    }
    Ok("det A_n = |D_n|, n ≤ 5, both presets".into())
}

fn partitions_c() -> Outcome {
    let b = Budget::default();
    let r = partitions_c_check(&sk("threeadic", 6), 3, 10_000, b.seed, &b);
    passed(&r)?;
    Ok(format!("k ≤ 3, exhaustive plus 10^4 seeded γ per k, seed {}", b.seed))
}

fn good_relation() -> Outcome {
    let b = Budget::default();
    let mut scopes = Vec::new();
    for name in ["threeadic", "irregular-demo"] {
        let r = good_relation_check(&sk(name, 4), &b);
        passed(&r)?;
        scopes.push(format!("{name}: {}", r.scope));
    }
    Ok(scopes.join("; "))
}

/// Violation count from a vacated u-in-y scope, `…, v/m U points outside Y`.
fn vacated_violations(scope: &str) -> Option<u64> {
    scope
        .split(';')
        .map(|part| part.rsplit_once(", ").and_then(|(_, t)| t.split('/').next()).and_then(|v| v.trim().parse::<u64>().ok()))
        .sum()
}

fn good_patches_t1t2_u_in_y() -> Outcome {
    let b = Budget::default();
    let mut notes = Vec::new();
    for name in ["threeadic", "threeadic-centered"] {
        let s = sk(name, 5);
        passed(&good_patches_check(&s, &b))?;
        passed(&t1t2_check(&s, &b))?;
        let u = u_in_y_check(&s, &b);
        match u.status {
            Status::Pass => notes.push(format!("{name}: u-in-y pass")),
            Status::Vacated => {
                let v = vacated_violations(&u.scope).ok_or_else(|| format!("unreadable scope {}", u.scope))?;
                ensure(v == 0, format!("{name}: {v} points of U outside Y"))?;
                notes.push(format!("{name}: u-in-y vacated by linking, 0 violations"));
            }
            _ => return Err(u.to_string()),
        }
    }
    Ok(format!("good-patches, t1t2 pass at depth 5; {}", notes.join("; ")))
}

fn cell_algebra() -> Outcome {
    let b = Budget::default();
    for name in ["threeadic", "threeadic-centered"] {
        let s = sk(name, 5);
        passed(&z_identity_check(&s, &b))?;
        passed(&containings_check(&s, &b))?;
    }
    Ok("Z identities and containings (1)–(5) exact at depth 5".into())
}

fn uns_and_trend() -> Outcome {
    let b = Budget::default();
    for (name, depth) in [("threeadic", 5), ("irregular-demo", 4)] {
        passed(&uns_bound_check(&sk(name, depth), &b))?;
    }
    let r = measure_one_trend_check(&sk("irregular-demo", 4), &b);
    passed(&r)?;
    Ok(format!("uns-bound on both presets; {}", r.scope))
}

fn performance() -> Outcome {
    let b = Budget::default();
    let s = sk("irregular-demo", 4);
    let base = LIVE.load(Ordering::Relaxed);
    PEAK.store(base, Ordering::Relaxed);
    let start = Instant::now();
    let w = s.materialize_window(4, &b).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    let peak = PEAK.load(Ordering::Relaxed) - base;
    ensure(w.len() == 3_720_465, format!("window has {} cells", w.len()))?;
    within(took, Duration::from_secs(10), "window")?;
    ensure(peak < 64 << 20, format!("window peak {peak} bytes"))?;
    drop(w);

    let s = sk("irregular-demo", 5);
    let half = 3_720_465i64 * 255 / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(b.seed);
    let start = Instant::now();
    let mut defined = 0;
    for _ in 0..100_000 {
        let g = GroupElement::scalar(rng.gen_range(-half..=half));
        if s.eval(&g).map_err(|e| e.to_string())?.is_some() {
            defined += 1;
        }
    }
    let evals = start.elapsed();
    within(evals, Duration::from_secs(5), "lazy evals")?;
    Ok(format!(
        "window 3720465 cells in {took:?}, peak {:.1} MB; 10^5 evals in {evals:?} ({defined} defined)",
        peak as f64 / (1 << 20) as f64
    ))
}

fn regular_control() -> Outcome {
    let t = tower("threeadic");
    let r = regularity_verdict(&t, t.depth()).map_err(|e| e.to_string())?;
    ensure(r.verdict == Verdict::Regular, format!("verdict {}", r.verdict))?;
    ensure(r.d_seq[0] == ratio(1, 3) && r.d_seq[1] == ratio(5, 9), "d_1, d_2 ≠ 1/3, 5/9")?;
    ensure(r.d_seq.windows(2).all(|p| p[0] < p[1]), "d_seq not strictly increasing")?;
    ensure(r.d_seq.iter().all(|d| *d < ratio(1, 1)), "d_n reached 1")?;
    Ok(format!("Regular, d_1..d_{} strictly increasing, d_{} = {}", r.d_seq.len(), r.d_seq.len(), r.d_seq.last().unwrap()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("construction fidelity", construction_fidelity),
        ("J-recursion equivalence", j_recursion),
        ("per-eq and J-sub", per_eq),
        ("density triple agreement", density_triple),
        ("irregularity verdict", irregularity),
        ("determinant identity", determinant),
        ("partitions-C", partitions_c),
        ("good-relation count bound", good_relation),
        ("good-patches, T1T2, u-in-y", good_patches_t1t2_u_in_y),
        ("cell-algebra identities", cell_algebra),
        ("U_n bound and measure-1 trend", uns_and_trend),
        ("performance envelope", performance),
        ("regular-case control", regular_control),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("[PASS] {:>2}. {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {:>2}. {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
