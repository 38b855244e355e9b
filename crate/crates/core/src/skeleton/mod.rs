//! The level-by-level construction of `η`, its step records, and lazy evaluation.
//!
//! Step 1 puts 1 on `Γ_1`; step 2 puts 0 on `J(1)Γ_2`. Steps are grouped in blocks: block `k`
//! runs from `m_{k-1}+1` to `m_k = 1 + k + Σ_{i≤k} |J(i)|`. Inside a block, step `s+1 < m_k`
//! plants a single 1 on `J(s)Γ_{s+1}` at the coset of `h`, the first element of `J(s)` lying
//! over the next slot of `J(k)`; step `m_k` writes only zeros.

mod jset;
mod window;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use jset::{j_element_digits, j_set, j_set_recursive, j_sets_upto, j_size, JSet};
pub use window::{SymbolWindow, WindowFormat};

use crate::bits::BitBuf;
use crate::tower::{GroupElement, QuotientTower, TowerConfig};
use crate::{Budget, Error, Result};

/// What a construction step writes on `J(s)Γ_{s+1}` (step `s+1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepKind {
    /// Step 1: ones on `Γ_1`.
    Ones,
    /// A block's closing step: zeros only.
    Zeros { block: usize },
    /// One planted 1 for slot `slot` (1-based) of block `block`.
    Plant { block: usize, slot: u64 },
}

/// A step that planted a 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HRecord {
    pub step: usize,
    pub block: usize,
    pub slot: u64,
    /// The chosen `h ∈ J(step-1)`.
    pub h: GroupElement,
}

/// Verdict of the linking condition `v⁻¹h ∈ D_{m_k}` for one block.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkingVerdict {
    pub block: usize,
    pub ok: bool,
    /// `h^k_{m(k)}` (the identity for block 0).
    pub h: GroupElement,
    /// Number of `v` examined.
    pub checked: u64,
    pub witness: Option<GroupElement>,
}

/// Block bookkeeping: `m(k) = |J(k)|` and block ends `m_k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockLayout {
    pub m_of: Vec<BigUint>,
    pub m_k: Vec<u64>,
}

impl BlockLayout {
    /// Blocks until the one containing step `max_step`.
    pub fn new(tower: &QuotientTower, max_step: usize) -> Self {
        let mut m_of = vec![BigUint::from(1u8)];
        let mut m_k = vec![2u64];
        while (*m_k.last().unwrap() as usize) < max_step {
            let k = m_k.len();
            let mk = j_size(tower, k);
            let end = mk.to_u64().and_then(|x| x.checked_add(1 + m_k[k - 1])).unwrap_or(u64::MAX);
            m_of.push(mk);
            m_k.push(end);
        }
        BlockLayout { m_of, m_k }
    }

    pub fn step_kind(&self, step: usize) -> StepKind {
        let s = step as u64;
        if s <= 1 {
            return StepKind::Ones;
        }
        let k = self.m_k.iter().position(|&e| s <= e).expect("layout covers step");
        if s == self.m_k[k] {
            StepKind::Zeros { block: k }
        } else {
            StepKind::Plant { block: k, slot: s - self.m_k[k - 1] }
        }
    }

    /// `n_k = m_k − 1`.
    pub fn n_k(&self, k: usize) -> Option<u64> {
        self.m_k.get(k).map(|m| m - 1)
    }
}

/// Compact description of `η` up to a construction depth.
#[derive(Clone, Debug)]
pub struct ToeplitzSkeleton {
    tower: QuotientTower,
    depth: usize,
    layout: BlockLayout,
    records: Vec<HRecord>,
    /// `plant[i]`: digits of `h` for a planting step `i+1`.
    plant: Vec<Option<Vec<u64>>>,
    linking: Vec<LinkingVerdict>,
}

/// Serialized form of a skeleton.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkeletonFile {
    pub tower: TowerConfig,
    pub depth: usize,
    pub m_of: Vec<String>,
    pub m_k: Vec<u64>,
    pub h_records: Vec<HRecord>,
    pub linking_ok: Vec<bool>,
}

impl ToeplitzSkeleton {
    /// Runs construction steps `1..=depth`.
    pub fn build(tower: QuotientTower, depth: usize) -> Result<Self> {
        if depth == 0 {
            return Err(Error::Unsupported("construction depth must be at least 1".into()));
        }
        tower.check_level(depth)?;
        let layout = BlockLayout::new(&tower, depth);
        let mut records = Vec::new();
        let mut plant = vec![None; depth];
        for step in 2..=depth {
            if let StepKind::Plant { block, slot } = layout.step_kind(step) {
                let s = step - 1;
                let digits = choose_h(&tower, block, slot, s).ok_or(Error::EmptySlot { step, block, slot })?;
                records.push(HRecord { step, block, slot, h: tower.element_from_digits(&digits) });
                plant[s] = Some(digits);
            }
        }
        let mut sk = ToeplitzSkeleton { tower, depth, layout, records, plant, linking: Vec::new() };
        sk.linking = sk.compute_linking();
        Ok(sk)
    }

    pub fn from_config(config: &TowerConfig, depth: usize) -> Result<Self> {
        Self::build(QuotientTower::build(config)?, depth)
    }

    pub fn tower(&self) -> &QuotientTower {
        &self.tower
    }

    /// Last completed construction step; `η` is defined on `⋃_{i<depth} J(i)Γ_{i+1}`.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    pub fn h_records(&self) -> &[HRecord] {
        &self.records
    }

    pub fn step_kind(&self, step: usize) -> StepKind {
        self.layout.step_kind(step)
    }

    /// Digits of the `h` planted on level `i` (step `i+1`), if that step planted.
    pub fn planted_digits(&self, level: usize) -> Option<&[u64]> {
        self.plant.get(level).and_then(|p| p.as_deref())
    }

    pub fn linking(&self) -> &[LinkingVerdict] {
        &self.linking
    }

    /// Linking verdict for block `k`, `None` if the block is not complete at this depth.
    pub fn linking_ok(&self, k: usize) -> Option<bool> {
        self.linking.iter().find(|v| v.block == k).map(|v| v.ok)
    }

    /// Blocks whose closing step `m_k` ran.
    pub fn completed_blocks(&self) -> Vec<usize> {
        (0..self.layout.m_k.len()).filter(|&k| self.layout.m_k[k] as usize <= self.depth).collect()
    }

    /// `M ∩ [1, max]`: levels `n_k = m_k − 1` not above `max`.
    pub fn m_levels(&self, max: usize) -> Vec<usize> {
        let layout = BlockLayout::new(&self.tower, max + 1);
        layout.m_k.iter().map(|&m| (m - 1) as usize).filter(|&n| n <= max).collect()
    }

    /// `n_k = m_k − 1` for a completed block.
    pub fn subsequence_m(&self, k: usize) -> Result<usize> {
        match self.layout.m_k.get(k) {
            Some(&m) if m as usize <= self.depth => Ok(m as usize - 1),
            _ => Err(Error::DepthExceeded {
                requested: self.layout.m_k.get(k).map(|&m| m as usize).unwrap_or(usize::MAX),
                available: self.depth,
            }),
        }
    }

    fn compute_linking(&self) -> Vec<LinkingVerdict> {
        let t = &self.tower;
        let mut out = Vec::new();
        for k in self.completed_blocks() {
            let mk = self.layout.m_k[k] as usize;
            let h = if k == 0 {
                t.identity()
            } else {
                let rec = self.records.iter().rfind(|r| r.block == k).expect("block has plantings");
                rec.h.clone()
            };
            // (Γ_{m_k-2} ∩ D_{m_k-1}) \ {1} is T_{m_k-1} minus the identity.
            let lvl = mk - 1;
            let mut ok = true;
            let mut witness = None;
            let mut checked = 0;
            for t_digit in 0..t.base(lvl) {
                if t_digit == t.identity_digit(lvl) {
                    continue;
                }
                let mut digits: Vec<u64> = (1..=lvl).map(|i| t.identity_digit(i)).collect();
                digits[lvl - 1] = t_digit;
                let v = t.element_from_digits(&digits);
                checked += 1;
                let moved = t.mul(&t.inv(&v).unwrap(), &h).unwrap();
                if !t.in_domain(&moved, mk).unwrap_or(false) {
                    ok = false;
                    witness = Some(v);
                    break;
                }
            }
            out.push(LinkingVerdict { block: k, ok, h, checked, witness });
        }
        out
    }

    /// Minimal `i` with `g ∈ J(i)Γ_{i+1}`, or `None` beyond the construction depth.
    pub fn level_of(&self, g: &GroupElement) -> Result<Option<usize>> {
        let d = self.tower.digits(g, self.depth)?;
        Ok(self.level_of_digits(&d))
    }

    fn level_of_digits(&self, d: &[u64]) -> Option<usize> {
        (1..=self.depth).find(|&i| d[i - 1] == self.tower.identity_digit(i)).map(|i| i - 1)
    }

    fn value_at_level(&self, level: usize, d: &[u64]) -> u8 {
        match level {
            0 => 1,
            _ => match &self.plant[level] {
                Some(h) => u8::from(d[..level] == h[..]),
                None => 0,
            },
        }
    }

    /// `η(g)`, or `None` where the construction has not reached.
    pub fn eval(&self, g: &GroupElement) -> Result<Option<u8>> {
        let d = self.tower.digits(g, self.depth)?;
        Ok(self.level_of_digits(&d).map(|l| self.value_at_level(l, &d)))
    }

    /// Covering level of the element of `D_n` with enumeration index `idx`
    /// (may exceed the construction depth).
    pub fn level_of_index(&self, n: usize, idx: u64) -> usize {
        let mut rem = idx;
        for i in 1..=n {
            let b = self.tower.base(i);
            if rem % b == self.tower.identity_digit(i) {
                return i - 1;
            }
            rem /= b;
        }
        n
    }

    /// `η` on the element of `D_n` with enumeration index `idx`.
    pub fn eval_index(&self, n: usize, idx: u64) -> Option<u8> {
        let level = self.level_of_index(n, idx);
        if level >= self.depth {
            return None;
        }
        let d = self.tower.index_digits(idx, n);
        Some(self.value_at_level(level, &d))
    }

    /// `η|_{D_n}` as a bit-packed window.
    pub fn materialize_window(&self, n: usize, budget: &Budget) -> Result<SymbolWindow> {
        self.tower.check_level(n)?;
        let len = budget.require_window(&format!("window on D_{n}"), self.tower.size(n))?;
        let bases: Vec<u64> = (1..=n).map(|i| self.tower.base(i)).collect();
        let ident: Vec<u64> = (1..=n).map(|i| self.tower.identity_digit(i)).collect();
        let sizes: Vec<u64> = (0..=n).map(|i| self.tower.size_u64(i).unwrap()).collect();
        let plant_idx: Vec<Option<u64>> = (0..=n)
            .map(|l| {
                self.plant.get(l).and_then(|p| p.as_ref()).map(|h| {
                    h.iter().enumerate().map(|(i, &t)| t * sizes[i]).sum::<u64>()
                })
            })
            .collect();
        let depth = self.depth;
        let cell = |idx: u64| -> Option<bool> {
            let mut rem = idx;
            let mut level = n;
            for i in 0..n {
                if rem % bases[i] == ident[i] {
                    level = i;
                    break;
                }
                rem /= bases[i];
            }
            if level >= depth {
                return None;
            }
            Some(match level {
                0 => true,
                l => plant_idx.get(l).copied().flatten().is_some_and(|h| idx % sizes[l] == h),
            })
        };
        let words = len.div_ceil(64) as usize;
        let packed: Vec<(u64, u64)> = (0..words)
            .into_par_iter()
            .map(|w| {
                let start = w as u64 * 64;
                let end = (start + 64).min(len);
                let (mut bits, mut mask) = (0u64, 0u64);
                for idx in start..end {
                    if let Some(v) = cell(idx) {
                        mask |= 1 << (idx - start);
                        if v {
                            bits |= 1 << (idx - start);
                        }
                    }
                }
                (bits, mask)
            })
            .collect();
        let (bits, mask): (Vec<u64>, Vec<u64>) = packed.into_iter().unzip();
        Ok(SymbolWindow::from_parts(n, BitBuf::from_words(bits, len), BitBuf::from_words(mask, len)))
    }

    pub fn to_file(&self) -> SkeletonFile {
        SkeletonFile {
            tower: self.tower.config().clone(),
            depth: self.depth,
            m_of: self.layout.m_of.iter().map(|m| m.to_string()).collect(),
            m_k: self.layout.m_k.clone(),
            h_records: self.records.clone(),
            linking_ok: self.linking.iter().map(|v| v.ok).collect(),
        }
    }

    /// Rebuilds from a saved file and checks the stored records match.
    pub fn from_file(file: &SkeletonFile) -> Result<Self> {
        let sk = Self::from_config(&file.tower, file.depth)?;
        if sk.records != file.h_records {
            return Err(Error::InvalidConfig("stored step records do not match a rebuild".into()));
        }
        Ok(sk)
    }
}

/// Digits of the first element of `J(s)` over slot `slot` of `J(block)`.
fn choose_h(tower: &QuotientTower, block: usize, slot: u64, s: usize) -> Option<Vec<u64>> {
    if block > s {
        return None;
    }
    let mut d = j_element_digits(tower, block, slot);
    for i in block + 1..=s {
        d.push(if tower.identity_digit(i) == 0 { 1 } else { 0 });
    }
    Some(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tower::DomainStyle;

    fn threeadic(style: DomainStyle, depth: usize) -> ToeplitzSkeleton {
        ToeplitzSkeleton::from_config(&TowerConfig::line(vec![3; 10], style), depth).unwrap()
    }

    fn g(x: i64) -> GroupElement {
        GroupElement::scalar(x)
    }

    #[test]
    fn threeadic_records() {
        let sk = threeadic(DomainStyle::NonNegative, 4);
        let recs: Vec<(usize, usize, u64, String)> =
            sk.h_records().iter().map(|r| (r.step, r.block, r.slot, r.h.to_string())).collect();
        assert_eq!(recs, vec![(3, 1, 1, "4".into()), (4, 1, 2, "14".into())]);
        assert_eq!(&sk.layout().m_k[..2], &[2, 5]);
        let deep = threeadic(DomainStyle::NonNegative, 10);
        let hs: Vec<String> = deep.h_records().iter().map(|r| r.h.to_string()).collect();
        assert_eq!(hs, ["4", "14", "121", "365", "1096", "3284"]);
        assert_eq!(deep.layout().m_k, vec![2, 5, 10]);
    }

    #[test]
    fn eval_examples() {
        let sk = threeadic(DomainStyle::NonNegative, 4);
        let vals: Vec<Option<u8>> = [0, 4, 5, 7, 14, 13].iter().map(|&x| sk.eval(&g(x)).unwrap()).collect();
        assert_eq!(vals, vec![Some(1), Some(1), Some(0), Some(0), Some(1), Some(0)]);
        assert_eq!(sk.level_of(&g(6)).unwrap(), Some(0));
        assert_eq!(sk.level_of(&g(19)).unwrap(), Some(1));
        assert_eq!(sk.level_of(&g(14)).unwrap(), Some(3));
        assert_eq!(sk.eval(&g(40)).unwrap(), None);
    }

    #[test]
    fn depth_one_is_gamma_one() {
        let sk = threeadic(DomainStyle::NonNegative, 1);
        assert!(sk.h_records().is_empty());
        assert_eq!(sk.eval(&g(3)).unwrap(), Some(1));
        assert_eq!(sk.eval(&g(1)).unwrap(), None);
    }

    #[test]
    fn windows() {
        let sk = threeadic(DomainStyle::NonNegative, 4);
        let w = sk.materialize_window(2, &Budget::default()).unwrap();
        assert_eq!(w.symbols(), vec![Some(1), Some(0), Some(0), Some(1), Some(1), Some(0), Some(1), Some(0), Some(0)]);
        let w1 = sk.materialize_window(1, &Budget::default()).unwrap();
        assert_eq!(w1.symbols(), vec![Some(1), Some(0), Some(0)]);
        let w4 = sk.materialize_window(4, &Budget::default()).unwrap();
        assert_eq!(w4.restrict(sk.tower(), 2).unwrap(), w);
        assert_eq!(w4.defined().count_ones(), 81 - 16);
    }

    #[test]
    fn linking_per_style() {
        let nn = threeadic(DomainStyle::NonNegative, 5);
        assert_eq!(nn.linking_ok(0), Some(false));
        assert_eq!(nn.linking_ok(1), Some(false));
        let c = threeadic(DomainStyle::Centered, 5);
        assert_eq!(c.linking_ok(0), Some(true));
        assert_eq!(c.linking_ok(1), Some(true));
        let hs: Vec<String> = c.h_records().iter().map(|r| r.h.to_string()).collect();
        assert_eq!(hs, ["-4", "-11"]);
        assert_eq!(threeadic(DomainStyle::Centered, 4).linking_ok(1), None);
    }

    #[test]
    fn subsequence() {
        let sk = threeadic(DomainStyle::NonNegative, 10);
        assert_eq!(sk.subsequence_m(0).unwrap(), 1);
        assert_eq!(sk.subsequence_m(1).unwrap(), 4);
        assert_eq!(sk.subsequence_m(2).unwrap(), 9);
        assert!(sk.subsequence_m(3).is_err());
        assert_eq!(sk.m_levels(9), vec![1, 4, 9]);
    }
}
