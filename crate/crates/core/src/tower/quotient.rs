use num_traits::ToPrimitive;

use super::{GroupElement, QuotientTower};
use crate::{Error, Result};

/// `G/Γ_n` as enumeration indices `0..|D_n|`.
#[derive(Clone, Debug)]
pub struct Quotient<'a> {
    tower: &'a QuotientTower,
    level: usize,
    /// `|D_m|` for m = 0..=level.
    sizes: Vec<u64>,
    /// Identity index at each level m = 0..=level.
    ident: Vec<u64>,
    /// Per axis: (N_level, lo_level) for box towers.
    axis_mod: Vec<(u64, i128)>,
}

impl<'a> Quotient<'a> {
    pub(super) fn new(tower: &'a QuotientTower, level: usize) -> Result<Self> {
        tower.check_level(level)?;
        let size = tower.size(level);
        if size.to_u64().is_none() {
            return Err(Error::BudgetExceeded {
                what: format!("index space of G/Γ_{level}"),
                size: size.to_string(),
                budget: u64::MAX,
            });
        }
        let sizes = (0..=level).map(|m| tower.size_u64(m).unwrap()).collect();
        let ident = (0..=level).map(|m| tower.identity_index(m).to_u64().unwrap()).collect();
        let axis_mod = match tower.axes() {
            Some((axes, _)) => axes
                .iter()
                .map(|ax| (ax.modulus[level].to_u64().unwrap(), ax.lo[level].to_i128().unwrap()))
                .collect(),
            None => Vec::new(),
        };
        Ok(Quotient { tower, level, sizes, ident, axis_mod })
    }

    pub fn tower(&self) -> &'a QuotientTower {
        self.tower
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn size(&self) -> u64 {
        self.sizes[self.level]
    }

    /// `|D_m|` for `m ≤ level`.
    pub fn sub_size(&self, m: usize) -> u64 {
        self.sizes[m]
    }

    pub fn identity(&self) -> u64 {
        self.ident[self.level]
    }

    pub fn digits(&self, idx: u64) -> Vec<u64> {
        self.tower.index_digits(idx, self.level)
    }

    /// Projection `G/Γ_level → G/Γ_m`.
    #[inline]
    pub fn project(&self, idx: u64, m: usize) -> u64 {
        idx % self.sizes[m]
    }

    /// Index in `D_level` of the element of `D_m` with index `idx_m`.
    #[inline]
    pub fn lift(&self, idx_m: u64, m: usize) -> u64 {
        idx_m + self.ident[self.level] - self.ident[m]
    }

    pub fn element(&self, idx: u64) -> GroupElement {
        self.tower.element_from_digits(&self.digits(idx))
    }

    pub fn index(&self, g: &GroupElement) -> Result<u64> {
        Ok(self.tower.coset_index_big(g, self.level)?.to_u64().expect("fits by construction"))
    }

    fn offsets(&self, idx: u64) -> Vec<u64> {
        let (axes, stride) = self.tower.axes().expect("box tower");
        let d = self.digits(idx);
        axes.iter()
            .enumerate()
            .map(|(a, ax)| {
                let mut off = 0u64;
                for i in (0..self.level).rev() {
                    off = off * ax.index[i] + (d[i] / stride[i][a]) % ax.index[i];
                }
                off
            })
            .collect()
    }

    fn from_offsets(&self, offs: &[u64]) -> u64 {
        let (axes, stride) = self.tower.axes().expect("box tower");
        let mut o = offs.to_vec();
        let mut idx = 0u64;
        for i in 0..self.level {
            let mut t = 0u64;
            for (a, ax) in axes.iter().enumerate() {
                t += (o[a] % ax.index[i]) * stride[i][a];
                o[a] /= ax.index[i];
            }
            idx += t * self.sizes[i];
        }
        idx
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        if let Some(f) = self.tower.finite() {
            let (x, y) = (f.dn[self.level][a as usize], f.dn[self.level][b as usize]);
            return f.rep_index[self.level][f.mul(x, y) as usize] as u64;
        }
        if self.axis_mod.len() == 1 {
            let (n, lo) = self.axis_mod[0];
            return (a as i128 + b as i128 + lo).rem_euclid(n as i128) as u64;
        }
        let (oa, ob) = (self.offsets(a), self.offsets(b));
        let o: Vec<u64> = self
            .axis_mod
            .iter()
            .enumerate()
            .map(|(k, &(n, lo))| (oa[k] as i128 + ob[k] as i128 + lo).rem_euclid(n as i128) as u64)
            .collect();
        self.from_offsets(&o)
    }

    #[inline]
    pub fn inv(&self, a: u64) -> u64 {
        if let Some(f) = self.tower.finite() {
            let x = f.dn[self.level][a as usize];
            return f.rep_index[self.level][f.inv[x as usize] as usize] as u64;
        }
        if self.axis_mod.len() == 1 {
            let (n, lo) = self.axis_mod[0];
            return (-(a as i128) - 2 * lo).rem_euclid(n as i128) as u64;
        }
        let oa = self.offsets(a);
        let o: Vec<u64> = self
            .axis_mod
            .iter()
            .enumerate()
            .map(|(k, &(n, lo))| (-(oa[k] as i128) - 2 * lo).rem_euclid(n as i128) as u64)
            .collect();
        self.from_offsets(&o)
    }

    /// Whether the level-`i` digit of `idx` is the identity digit (`1 ≤ i ≤ level`).
    #[inline]
    pub fn digit_is_identity(&self, idx: u64, i: usize) -> bool {
        (idx / self.sizes[i - 1]) % self.tower.base(i) == self.tower.identity_digit(i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tower::{cyclic_table, s3_table, DomainStyle, TowerConfig};
    use crate::Budget;

    fn check_against_elements(t: &QuotientTower, n: usize) {
        let q = t.quotient(n).unwrap();
        let all = t.enumerate(n, &Budget::default()).unwrap();
        assert_eq!(q.element(q.identity()), t.identity());
        for (a, ea) in all.iter().enumerate() {
            let a = a as u64;
            assert_eq!(q.index(ea).unwrap(), a);
            let ia = t.reduce(&t.inv(ea).unwrap(), n).unwrap();
            assert_eq!(q.element(q.inv(a)), ia);
            for (b, eb) in all.iter().enumerate() {
                let ab = t.reduce(&t.mul(ea, eb).unwrap(), n).unwrap();
                assert_eq!(q.element(q.mul(a, b as u64)), ab);
            }
            for m in 0..=n {
                let em = t.reduce(ea, m).unwrap();
                let qm = t.quotient(m).unwrap();
                assert_eq!(qm.element(q.project(a, m)), em);
                assert_eq!(q.element(q.lift(qm.index(&em).unwrap(), m)), em);
            }
        }
    }

    #[test]
    fn line_quotients() {
        for style in [DomainStyle::NonNegative, DomainStyle::Centered] {
            let t = QuotientTower::build(&TowerConfig::line(vec![3, 5, 3], style)).unwrap();
            check_against_elements(&t, 2);
        }
    }

    #[test]
    fn lattice_quotients() {
        for d in ["nonneg", "centered"] {
            let cfg = format!(r#"{{"kind":"zd","dim":2,"indices":[[3,5],[3,3]],"domain":"{d}"}}"#);
            let t = QuotientTower::build(&TowerConfig::from_json(&cfg).unwrap()).unwrap();
            check_against_elements(&t, 2);
        }
    }

    #[test]
    fn finite_quotients() {
        let t = QuotientTower::build(&TowerConfig::Generic {
            table: cyclic_table(12),
            chain: vec![(0..12).step_by(2).collect(), vec![0, 6], vec![0]],
            tail: None,
        })
        .unwrap();
        check_against_elements(&t, 2);
        let s3 = QuotientTower::build(&TowerConfig::Generic {
            table: s3_table(),
            chain: vec![vec![0, 1, 2], vec![0]],
            tail: None,
        })
        .unwrap();
        check_against_elements(&s3, 2);
    }
}
