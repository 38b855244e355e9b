//! Frozen values from a brute-force oracle, plus an in-test oracle that re-derives them
//! from the definitions on plain integers.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use toeplitz::measures::{a_counts, a_counts_enumerated};
use toeplitz::periods::per_set;
use toeplitz::presets;
use toeplitz::skeleton::j_set;
use toeplitz::tower::DomainStyle;
use toeplitz::{Budget, GroupElement, ToeplitzSkeleton};

/// The construction on `Z` with nested intervals as domains, straight from the definitions.
struct Oracle {
    sizes: Vec<i64>,
    centered: bool,
    j: Vec<Vec<i64>>,
    j_sets: Vec<BTreeSet<i64>>,
    planted: BTreeMap<usize, i64>,
    records: Vec<(usize, usize, usize, i64)>,
    depth: usize,
}

impl Oracle {
    fn new(indices: &[i64], depth: usize, centered: bool) -> Self {
        let mut sizes = vec![1];
        for b in indices {
            sizes.push(sizes.last().unwrap() * b);
        }
        let mut o = Oracle {
            sizes,
            centered,
            j: vec![vec![0]],
            j_sets: vec![BTreeSet::from([0])],
            planted: BTreeMap::new(),
            records: Vec::new(),
            depth,
        };
        for n in 1..=depth {
            let jn: Vec<i64> = o.domain(n).filter(|&d| !(0..n).any(|i| o.j_sets[i].contains(&o.reduce(d, i + 1)))).collect();
            o.j_sets.push(jn.iter().copied().collect());
            o.j.push(jn);
        }
        // block boundaries m_k = 1 + k + Σ_{i ≤ k} |J(i)|
        let mut mk = Vec::new();
        let mut acc = 0;
        for k in 0..=depth {
            acc += o.j[k].len();
            mk.push(1 + k + acc);
        }
        for s in 2..depth {
            let k = (1..=depth).find(|&k| mk[k - 1] <= s && s < mk[k]).unwrap();
            if mk[k - 1] < s + 1 && s + 1 < mk[k] {
                let slot = s - mk[k - 1];
                let g = o.j[k][slot];
                let h = *o.j[s].iter().find(|&&x| o.reduce(x, k) == o.reduce(g, k)).unwrap();
                o.records.push((s + 1, k, slot + 1, h));
                o.planted.insert(s, h);
            }
        }
        o
    }

    fn low(&self, n: usize) -> i64 {
        if self.centered {
            -(self.sizes[n] - 1) / 2
        } else {
            0
        }
    }

    fn domain(&self, n: usize) -> std::ops::Range<i64> {
        self.low(n)..self.low(n) + self.sizes[n]
    }

    fn reduce(&self, g: i64, n: usize) -> i64 {
        (g - self.low(n)).rem_euclid(self.sizes[n]) + self.low(n)
    }

    fn eval(&self, g: i64) -> Option<u8> {
        for i in 0..self.depth {
            let r = self.reduce(g, i + 1);
            if self.j_sets[i].contains(&r) {
                return Some(match i {
                    0 => 1,
                    1 => 0,
                    _ => u8::from(self.planted.get(&i) == Some(&r)),
                });
            }
        }
        None
    }

    /// Per(η, Γ_n, α) judged on the window over `D_s`.
    fn per(&self, n: usize, s: usize, alpha: u8) -> Vec<i64> {
        self.domain(n)
            .filter(|&d| {
                let vals: BTreeSet<Option<u8>> = self.domain(s).filter(|&x| self.reduce(x, n) == d).map(|x| self.eval(x)).collect();
                vals.len() == 1 && vals.contains(&Some(alpha))
            })
            .collect()
    }
}

fn ints(v: &[GroupElement]) -> Vec<i64> {
    v.iter().map(|g| g.to_string().parse().unwrap()).collect()
}

fn three(depth: usize) -> ToeplitzSkeleton {
    ToeplitzSkeleton::from_config(&presets::threeadic(DomainStyle::NonNegative), depth).unwrap()
}

#[test]
fn j_sets_frozen() {
    let b = Budget::default();
    let t = presets::by_name("threeadic").unwrap();
    let tower = toeplitz::QuotientTower::build(&t).unwrap();
    let want: [&[i64]; 3] = [&[1, 2], &[4, 5, 7, 8], &[13, 14, 16, 17, 22, 23, 25, 26]];
    let oracle = Oracle::new(&[3; 12], 5, false);
    for (n, w) in want.iter().enumerate() {
        let mut got = ints(&j_set(&tower, n + 1, &b).unwrap().elements);
        got.sort();
        assert_eq!(&got, w);
        assert_eq!(&oracle.j[n + 1], w);
    }
}

#[test]
fn h_records_frozen() {
    let frozen = [(3, 1, 1, 4), (4, 1, 2, 14), (6, 2, 1, 121), (7, 2, 2, 365), (8, 2, 3, 1096), (9, 2, 4, 3284)];
    assert_eq!(Oracle::new(&[3; 12], 10, false).records, frozen);
    let sk = three(10);
    let got: Vec<(usize, usize, usize, i64)> = sk
        .h_records()
        .iter()
        .map(|r| (r.step, r.block, r.slot as usize, r.h.to_string().parse().unwrap()))
        .collect();
    assert_eq!(got, frozen);
}

#[test]
fn centered_records_frozen() {
    let frozen = [(3, 1, 1, -4), (4, 1, 2, -11)];
    assert_eq!(Oracle::new(&[3; 12], 5, true).records, frozen);
    let sk = ToeplitzSkeleton::from_config(&presets::by_name("threeadic-centered").unwrap(), 5).unwrap();
    let got: Vec<i64> = sk.h_records().iter().map(|r| r.h.to_string().parse().unwrap()).collect();
    assert_eq!(got, [-4, -11]);
}

#[test]
fn windows_and_evals_frozen() {
    let sk = three(5);
    let w = sk.materialize_window(2, &Budget::default()).unwrap();
    let frozen = [1u8, 0, 0, 1, 1, 0, 1, 0, 0];
    assert_eq!(w.symbols(), frozen.map(Some).to_vec());
    let oracle = Oracle::new(&[3; 12], 5, false);
    for g in -300i64..300 {
        assert_eq!(sk.eval(&GroupElement::scalar(g)).unwrap(), oracle.eval(g), "g = {g}");
    }
    for (g, v) in [(0, 1), (4, 1), (5, 0), (7, 0), (14, 1), (13, 0)] {
        assert_eq!(oracle.eval(g), Some(v));
    }
}

#[test]
fn a_counts_and_density_frozen() {
    let b = Budget::default();
    let sk = three(5);
    let frozen = [(1, 0, 1, 2, (1, 3)), (2, 2, 3, 4, (5, 9)), (3, 9, 10, 8, (19, 27)), (4, 34, 31, 16, (65, 81)), (5, 118, 93, 32, (211, 243))];
    let oracle = Oracle::new(&[3; 12], 5, false);
    for (n, a0, a1, j, (p, q)) in frozen {
        let c = a_counts(&sk, n).unwrap();
        assert_eq!((c.a0.to_string(), c.a1.to_string(), c.j.to_string()), (a0.to_string(), a1.to_string(), j.to_string()));
        let e = a_counts_enumerated(&sk, n, &b).unwrap();
        assert_eq!((e.a0, e.a1), (c.a0, c.a1));
        let d = toeplitz::density::d_exact(&sk, n, &b).unwrap();
        assert_eq!(*d.value(), BigRational::new(p.into(), q.into()));
        assert_eq!(oracle.per(n, 5, 0).len(), a0);
        assert_eq!(oracle.per(n, 5, 1).len(), a1);
    }
}

#[test]
fn per_set_frozen() {
    let sk = three(5);
    let frozen = [0i64, 3, 4, 6, 9, 12, 15, 18, 21, 24];
    let got: Vec<i64> = ints(&per_set(&sk, 3, 1, &Budget::default()).unwrap().elements(sk.tower()).unwrap());
    assert_eq!(got, frozen);
    assert_eq!(Oracle::new(&[3; 12], 5, false).per(3, 5, 1), frozen);
}

#[test]
fn irregular_small_frozen() {
    let oracle = Oracle::new(&[15, 31, 63], 3, false);
    assert_eq!((oracle.j[1].len(), oracle.j[2].len()), (14, 420));
    let tower = toeplitz::QuotientTower::build(&presets::irregular_demo()).unwrap();
    let b = Budget::default();
    assert_eq!(j_set(&tower, 1, &b).unwrap().len(), 14);
    assert_eq!(j_set(&tower, 2, &b).unwrap().len(), 420);
}
