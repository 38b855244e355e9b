//! Finite quotient towers given by explicit Cayley tables.

use crate::{Error, Result};

#[derive(Clone, Debug)]
pub(crate) struct FiniteTower {
    pub table: Vec<Vec<u32>>,
    pub inv: Vec<u32>,
    /// `transversal[i-1]`: T_i sorted by element id.
    pub transversal: Vec<Vec<u32>>,
    /// `dn[n][idx]`: element of D_n at enumeration index idx.
    pub dn: Vec<Vec<u32>>,
    /// `rep_index[n][x]`: index in D_n of the representative of xΓ_n.
    pub rep_index: Vec<Vec<u32>>,
    pub abelian: bool,
}

const MAX_ORDER: usize = 1 << 12;

impl FiniteTower {
    pub fn build(table: Vec<Vec<u32>>, chain: &[Vec<u32>]) -> Result<Self> {
        let order = table.len();
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if order == 0 || order > MAX_ORDER {
            return bad(format!("group order {order} outside 1..={MAX_ORDER}"));
        }
        for (i, row) in table.iter().enumerate() {
            if row.len() != order {
                return bad(format!("table row {i} has {} entries, expected {order}", row.len()));
            }
            if let Some(&x) = row.iter().find(|&&x| x as usize >= order) {
                return bad(format!("table entry {x} out of range"));
            }
            let mut seen = vec![false; order];
            for &x in row {
                if std::mem::replace(&mut seen[x as usize], true) {
                    return bad(format!("table row {i} repeats {x}; not a group"));
                }
            }
        }
        for x in 0..order {
            if table[0][x] as usize != x || table[x][0] as usize != x {
                return bad("element 0 must be the identity".into());
            }
        }
        let mul = |a: u32, b: u32| table[a as usize][b as usize];
        let triples = (order as u64).pow(3);
        let step = if triples <= 20_000_000 { 1 } else { 7 };
        for a in (0..order as u32).step_by(step) {
            for b in 0..order as u32 {
                let ab = mul(a, b);
                for c in (0..order as u32).step_by(step) {
                    if mul(ab, c) != mul(a, mul(b, c)) {
                        return bad(format!("table not associative at ({a},{b},{c})"));
                    }
                }
            }
        }
        let mut inv = vec![0u32; order];
        for a in 0..order {
            inv[a] = table[a].iter().position(|&x| x == 0).expect("latin row contains identity") as u32;
        }
        let abelian = (0..order).all(|a| (0..order).all(|b| table[a][b] == table[b][a]));

        if chain.is_empty() {
            return bad("generic tower needs at least one subgroup".into());
        }
        let mut member = vec![vec![true; order]];
        for (lvl, sub) in chain.iter().enumerate() {
            let mut m = vec![false; order];
            for &x in sub {
                if x as usize >= order {
                    return bad(format!("subgroup {} lists element {x} out of range", lvl + 1));
                }
                m[x as usize] = true;
            }
            if !m[0] {
                return bad(format!("subgroup {} misses the identity", lvl + 1));
            }
            let elems: Vec<u32> = (0..order as u32).filter(|&x| m[x as usize]).collect();
            for &a in &elems {
                for &b in &elems {
                    if !m[mul(a, b) as usize] {
                        return bad(format!("subgroup {} not closed", lvl + 1));
                    }
                }
            }
            for g in 0..order as u32 {
                for &h in &elems {
                    if !m[mul(mul(g, h), inv[g as usize]) as usize] {
                        return bad(format!("subgroup {} is not normal", lvl + 1));
                    }
                }
            }
            let prev = member.last().unwrap();
            if (0..order).any(|x| m[x] && !prev[x]) {
                return bad(format!("subgroup {} not contained in its predecessor", lvl + 1));
            }
            if elems.len() == prev.iter().filter(|&&b| b).count() {
                return bad(format!("subgroup {} has index 1 in its predecessor", lvl + 1));
            }
            member.push(m);
        }
        if member.last().unwrap().iter().filter(|&&b| b).count() != 1 {
            return bad("last subgroup must be trivial".into());
        }

        let depth = chain.len();
        let mut transversal = Vec::with_capacity(depth);
        for i in 1..=depth {
            let mut covered = vec![false; order];
            let mut t = Vec::new();
            for x in 0..order as u32 {
                if member[i - 1][x as usize] && !covered[x as usize] {
                    t.push(x);
                    for y in 0..order as u32 {
                        if member[i][y as usize] {
                            covered[mul(x, y) as usize] = true;
                        }
                    }
                }
            }
            transversal.push(t);
        }
        let mut dn = vec![vec![0u32]];
        for i in 1..=depth {
            let prev = &dn[i - 1];
            let cur: Vec<u32> =
                transversal[i - 1].iter().flat_map(|&t| prev.iter().map(move |&d| mul(t, d))).collect();
            dn.push(cur);
        }
        let mut rep_index = Vec::with_capacity(depth + 1);
        for n in 0..=depth {
            let mut rep = vec![u32::MAX; order];
            for (k, &d) in dn[n].iter().enumerate() {
                for y in 0..order as u32 {
                    if member[n][y as usize] {
                        let x = mul(d, y) as usize;
                        if rep[x] != u32::MAX {
                            return bad(format!("D_{n} meets a coset twice"));
                        }
                        rep[x] = k as u32;
                    }
                }
            }
            if rep.contains(&u32::MAX) {
                return bad(format!("D_{n} misses a coset"));
            }
            rep_index.push(rep);
        }
        Ok(FiniteTower { table, inv, transversal, dn, rep_index, abelian })
    }

    pub fn order(&self) -> usize {
        self.table.len()
    }

    pub fn mul(&self, a: u32, b: u32) -> u32 {
        self.table[a as usize][b as usize]
    }
}

/// Cayley table of the cyclic group ℤ/n.
pub fn cyclic_table(n: u32) -> Vec<Vec<u32>> {
    (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect()
}

/// Cayley table of S_3 acting on {0,1,2}; element 0 is the identity and {0,1,2} is A_3.
pub fn s3_table() -> Vec<Vec<u32>> {
    let perms: [[usize; 3]; 6] = [[0, 1, 2], [1, 2, 0], [2, 0, 1], [1, 0, 2], [0, 2, 1], [2, 1, 0]];
    let pos = |p: [usize; 3]| perms.iter().position(|q| *q == p).unwrap() as u32;
    (0..6)
        .map(|a| {
            (0..6)
                .map(|b| {
                    let (p, q) = (perms[a], perms[b]);
                    pos([p[q[0]], p[q[1]], p[q[2]]])
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclic_chain() {
        let t = FiniteTower::build(cyclic_table(12), &[vec![0, 2, 4, 6, 8, 10], vec![0, 6], vec![0]]).unwrap();
        assert_eq!(t.transversal[0], vec![0, 1]);
        assert_eq!(t.transversal[1], vec![0, 2, 4]);
        assert_eq!(t.transversal[2], vec![0, 6]);
        assert_eq!(t.dn[2], vec![0, 1, 2, 3, 4, 5]);
        assert!(t.abelian);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(FiniteTower::build(cyclic_table(4), &[vec![0, 2], vec![0, 1]]).is_err());
        assert!(FiniteTower::build(cyclic_table(4), &[vec![0, 2]]).is_err());
        assert!(FiniteTower::build(s3_table(), &[vec![0, 3], vec![0]]).is_err());
        let mut bad = cyclic_table(3);
        bad[1][1] = 1;
        assert!(FiniteTower::build(bad, &[vec![0]]).is_err());
    }

    #[test]
    fn s3_with_normal_a3() {
        let t = FiniteTower::build(s3_table(), &[vec![0, 1, 2], vec![0]]).unwrap();
        assert!(!t.abelian);
        assert_eq!(t.dn[2].len(), 6);
    }
}
