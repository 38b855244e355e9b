//! Residually finite group towers `G ⊇ Γ_1 ⊇ Γ_2 ⊇ …` with nested fundamental domains.
//!
//! Every `g ∈ D_n` is written uniquely as `t_n ⋯ t_1` with `t_i ∈ T_i = D_i ∩ Γ_{i-1}`.
//! The digits `t_i` index the transversals; `D_n` is enumerated with the level-`n`
//! digit most significant, so `idx(g) = Σ t_i |D_{i-1}|`.

mod config;
mod finite;
mod quotient;
mod validate;

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use config::{ConfigRatio, DomainStyle, TailSpec, TowerConfig};
pub use finite::{cyclic_table, s3_table};
pub use quotient::Quotient;
pub use validate::{validate_domains, validate_tower};

use crate::{Budget, Error, Result};
use finite::FiniteTower;

/// Element of `G` as an integer tuple. For `ℤ` and `ℤ^d` these are coordinates;
/// for table-defined groups the single coordinate is the element id.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupElement(pub Vec<BigInt>);

impl GroupElement {
    pub fn scalar(x: impl Into<BigInt>) -> Self {
        GroupElement(vec![x.into()])
    }

    pub fn coords(&self) -> &[BigInt] {
        &self.0
    }

    /// Parses `7`, `-3`, `1,2` or `(1,2)`.
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim().trim_start_matches('(').trim_end_matches(')');
        let coords = t
            .split(',')
            .map(|c| c.trim().parse::<BigInt>().map_err(|_| Error::Parse(format!("bad coordinate in {s:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(GroupElement(coords))
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() == 1 {
            write!(f, "{}", self.0[0])
        } else {
            let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
            write!(f, "({})", parts.join(","))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TowerKind {
    IntegerLine,
    IntegerLattice { dim: usize },
    Generic,
}

#[derive(Clone, Debug)]
struct Axis {
    /// `[Γ_{i-1} : Γ_i]` along this axis, stored at `i - 1`.
    index: Vec<u64>,
    /// `N_n` along this axis, n = 0..=depth.
    modulus: Vec<BigInt>,
    /// Smallest coordinate of `D_n`, n = 0..=depth.
    lo: Vec<BigInt>,
}

#[derive(Clone, Debug)]
enum Repr {
    Box { axes: Vec<Axis>, stride: Vec<Vec<u64>> },
    Finite(FiniteTower),
}

/// An immutable tower of finite-index normal subgroups with nested fundamental domains.
#[derive(Clone, Debug)]
pub struct QuotientTower {
    kind: TowerKind,
    style: DomainStyle,
    config: TowerConfig,
    repr: Repr,
    base: Vec<u64>,
    identity_digit: Vec<u64>,
    size: Vec<BigUint>,
    identity_index: Vec<BigUint>,
}

impl QuotientTower {
    pub fn build(config: &TowerConfig) -> Result<Self> {
        match config {
            TowerConfig::Line { indices, domain, .. } => {
                let per_level: Vec<Vec<u64>> = indices.iter().map(|&b| vec![b]).collect();
                Self::build_box(config, TowerKind::IntegerLine, *domain, 1, &per_level)
            }
            TowerConfig::Lattice { dim, indices, domain, .. } => {
                if *dim == 0 {
                    return Err(Error::InvalidConfig("lattice dimension must be positive".into()));
                }
                if let Some(l) = indices.iter().position(|row| row.len() != *dim) {
                    return Err(Error::InvalidConfig(format!("level {} lists {} indices for dim {dim}", l + 1, indices[l].len())));
                }
                Self::build_box(config, TowerKind::IntegerLattice { dim: *dim }, *domain, *dim, indices)
            }
            TowerConfig::Generic { table, chain, .. } => {
                let f = FiniteTower::build(table.clone(), chain)?;
                let base: Vec<u64> = f.transversal.iter().map(|t| t.len() as u64).collect();
                let identity_digit = vec![0; base.len()];
                let mut t = QuotientTower {
                    kind: TowerKind::Generic,
                    style: DomainStyle::NonNegative,
                    config: config.clone(),
                    repr: Repr::Finite(f),
                    base,
                    identity_digit,
                    size: Vec::new(),
                    identity_index: Vec::new(),
                };
                t.fill_sizes();
                Ok(t)
            }
        }
    }

    fn build_box(
        config: &TowerConfig,
        kind: TowerKind,
        style: DomainStyle,
        dim: usize,
        per_level: &[Vec<u64>],
    ) -> Result<Self> {
        if per_level.is_empty() {
            return Err(Error::InvalidConfig("tower needs at least one level".into()));
        }
        for (l, row) in per_level.iter().enumerate() {
            if let Some(&b) = row.iter().find(|&&b| b < 2) {
                return Err(Error::InvalidIndex { level: l + 1, index: b });
            }
        }
        let depth = per_level.len();
        let mut axes = Vec::with_capacity(dim);
        for a in 0..dim {
            let index: Vec<u64> = per_level.iter().map(|row| row[a]).collect();
            let mut modulus = vec![BigInt::one()];
            for (l, &b) in index.iter().enumerate() {
                let n = &modulus[l] * b;
                if style == DomainStyle::Centered && n.is_even() {
                    return Err(Error::ParityError { level: l + 1, modulus: n.to_string() });
                }
                modulus.push(n);
            }
            let lo = modulus
                .iter()
                .map(|n| match style {
                    DomainStyle::NonNegative => BigInt::zero(),
                    DomainStyle::Centered => -((n - 1u8) / 2u8),
                })
                .collect();
            axes.push(Axis { index, modulus, lo });
        }
        let mut stride = Vec::with_capacity(depth);
        let mut base = Vec::with_capacity(depth);
        let mut identity_digit = Vec::with_capacity(depth);
        for row in per_level {
            let mut s = Vec::with_capacity(dim);
            let mut acc = 1u64;
            let mut id = 0u64;
            for &b in row {
                s.push(acc);
                if style == DomainStyle::Centered {
                    id += (b - 1) / 2 * acc;
                }
                acc = acc
                    .checked_mul(b)
                    .ok_or_else(|| Error::InvalidConfig("per-level index exceeds 64 bits".into()))?;
            }
            stride.push(s);
            base.push(acc);
            identity_digit.push(id);
        }
        let mut t = QuotientTower {
            kind,
            style,
            config: config.clone(),
            repr: Repr::Box { axes, stride },
            base,
            identity_digit,
            size: Vec::new(),
            identity_index: Vec::new(),
        };
        t.fill_sizes();
        Ok(t)
    }

    fn fill_sizes(&mut self) {
        let mut size = vec![BigUint::one()];
        let mut id = vec![BigUint::zero()];
        for i in 0..self.base.len() {
            id.push(&id[i] + &size[i] * self.identity_digit[i]);
            size.push(&size[i] * self.base[i]);
        }
        self.size = size;
        self.identity_index = id;
    }

    pub fn config(&self) -> &TowerConfig {
        &self.config
    }

    pub fn kind(&self) -> TowerKind {
        self.kind
    }

    pub fn style(&self) -> DomainStyle {
        self.style
    }

    pub fn tail(&self) -> Option<&TailSpec> {
        self.config.tail()
    }

    /// Number of levels.
    pub fn depth(&self) -> usize {
        self.base.len()
    }

    /// Coordinates per element.
    pub fn dim(&self) -> usize {
        match &self.repr {
            Repr::Box { axes, .. } => axes.len(),
            Repr::Finite(_) => 1,
        }
    }

    pub fn is_abelian(&self) -> bool {
        match &self.repr {
            Repr::Box { .. } => true,
            Repr::Finite(f) => f.abelian,
        }
    }

    /// `|D_n| = [G : Γ_n]`.
    ///
    /// # Panics
    /// If `n > depth`.
    pub fn size(&self, n: usize) -> &BigUint {
        &self.size[n]
    }

    pub fn size_u64(&self, n: usize) -> Option<u64> {
        self.size.get(n).and_then(|s| s.to_u64())
    }

    /// `|T_i| = [Γ_{i-1} : Γ_i]` for `1 ≤ i ≤ depth`.
    pub fn base(&self, i: usize) -> u64 {
        self.base[i - 1]
    }

    /// Digit of the identity in `T_i`.
    pub fn identity_digit(&self, i: usize) -> u64 {
        self.identity_digit[i - 1]
    }

    /// Enumeration index of the identity in `D_n`.
    pub fn identity_index(&self, n: usize) -> &BigUint {
        &self.identity_index[n]
    }

    /// `1/|D_1|`, the head of the series `L`.
    pub fn series_head(&self) -> BigRational {
        BigRational::new(BigInt::one(), BigInt::from(self.base[0]))
    }

    /// `|D_j| / |D_{j+1}|` for `1 ≤ j < depth`.
    pub fn series_term(&self, j: usize) -> BigRational {
        BigRational::new(BigInt::one(), BigInt::from(self.base[j]))
    }

    pub fn check_level(&self, n: usize) -> Result<()> {
        if n > self.depth() {
            Err(Error::DepthExceeded { requested: n, available: self.depth() })
        } else {
            Ok(())
        }
    }

    pub fn check_element(&self, g: &GroupElement) -> Result<()> {
        if g.0.len() != self.dim() {
            return Err(Error::Parse(format!("{g} has {} coordinates, tower needs {}", g.0.len(), self.dim())));
        }
        if let Repr::Finite(f) = &self.repr {
            match g.0[0].to_usize() {
                Some(x) if x < f.order() => {}
                _ => return Err(Error::Parse(format!("{g} is not an element id below {}", f.order()))),
            }
        }
        Ok(())
    }

    fn id_of(g: &GroupElement) -> u32 {
        g.0[0].to_u32().expect("checked element id")
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement(vec![BigInt::zero(); self.dim()])
    }

    pub fn mul(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
        self.check_element(a)?;
        self.check_element(b)?;
        Ok(match &self.repr {
            Repr::Box { .. } => GroupElement(a.0.iter().zip(&b.0).map(|(x, y)| x + y).collect()),
            Repr::Finite(f) => GroupElement::scalar(f.mul(Self::id_of(a), Self::id_of(b))),
        })
    }

    pub fn inv(&self, a: &GroupElement) -> Result<GroupElement> {
        self.check_element(a)?;
        Ok(match &self.repr {
            Repr::Box { .. } => GroupElement(a.0.iter().map(|x| -x).collect()),
            Repr::Finite(f) => GroupElement::scalar(f.inv[Self::id_of(a) as usize]),
        })
    }

    /// Representative in `D_n` of `gΓ_n`.
    pub fn reduce(&self, g: &GroupElement, n: usize) -> Result<GroupElement> {
        self.check_level(n)?;
        self.check_element(g)?;
        Ok(match &self.repr {
            Repr::Box { axes, .. } => GroupElement(
                axes.iter().zip(&g.0).map(|(ax, x)| (x - &ax.lo[n]).mod_floor(&ax.modulus[n]) + &ax.lo[n]).collect(),
            ),
            Repr::Finite(f) => {
                let k = f.rep_index[n][Self::id_of(g) as usize];
                GroupElement::scalar(f.dn[n][k as usize])
            }
        })
    }

    pub fn in_domain(&self, g: &GroupElement, n: usize) -> Result<bool> {
        self.check_level(n)?;
        self.check_element(g)?;
        Ok(match &self.repr {
            Repr::Box { axes, .. } => axes
                .iter()
                .zip(&g.0)
                .all(|(ax, x)| x >= &ax.lo[n] && (x - &ax.lo[n]) < ax.modulus[n]),
            Repr::Finite(f) => {
                let x = Self::id_of(g);
                f.dn[n][f.rep_index[n][x as usize] as usize] == x
            }
        })
    }

    /// `g ∈ Γ_n`.
    pub fn in_subgroup(&self, g: &GroupElement, n: usize) -> Result<bool> {
        Ok(self.reduce(g, n)? == self.identity())
    }

    /// Digits `t_1 … t_n` of the representative of `gΓ_n`.
    pub fn digits(&self, g: &GroupElement, n: usize) -> Result<Vec<u64>> {
        self.check_level(n)?;
        self.check_element(g)?;
        Ok(match &self.repr {
            Repr::Box { axes, stride } => {
                let mut out = vec![0u64; n];
                for (a, (ax, x)) in axes.iter().zip(&g.0).enumerate() {
                    let off = (x - &ax.lo[n]).mod_floor(&ax.modulus[n]);
                    if let Some(mut o) = off.to_u64() {
                        for i in 0..n {
                            let b = ax.index[i];
                            out[i] += (o % b) * stride[i][a];
                            o /= b;
                        }
                    } else {
                        let mut o = off.to_biguint().expect("nonnegative offset");
                        for i in 0..n {
                            let (q, r) = o.div_rem(&BigUint::from(ax.index[i]));
                            out[i] += r.to_u64().expect("digit fits") * stride[i][a];
                            o = q;
                        }
                    }
                }
                out
            }
            Repr::Finite(f) => self.index_digits(f.rep_index[n][Self::id_of(g) as usize] as u64, n),
        })
    }

    /// Mixed-radix digits of an enumeration index of `D_n`.
    pub fn index_digits(&self, mut idx: u64, n: usize) -> Vec<u64> {
        (0..n)
            .map(|i| {
                let b = self.base[i];
                let t = idx % b;
                idx /= b;
                t
            })
            .collect()
    }

    /// Element of `D_{digits.len()}` with the given digits.
    pub fn element_from_digits(&self, digits: &[u64]) -> GroupElement {
        let n = digits.len();
        match &self.repr {
            Repr::Box { axes, stride } => GroupElement(
                axes.iter()
                    .enumerate()
                    .map(|(a, ax)| {
                        let mut off = BigInt::zero();
                        for i in (0..n).rev() {
                            let t = (digits[i] / stride[i][a]) % ax.index[i];
                            off = off * ax.index[i] + t;
                        }
                        off + &ax.lo[n]
                    })
                    .collect(),
            ),
            Repr::Finite(f) => {
                let mut x = 0u32;
                for i in (0..n).rev() {
                    x = f.mul(x, f.transversal[i][digits[i] as usize]);
                }
                GroupElement::scalar(x)
            }
        }
    }

    /// Enumeration index of the representative of `gΓ_n`, as a big integer.
    pub fn coset_index_big(&self, g: &GroupElement, n: usize) -> Result<BigUint> {
        let d = self.digits(g, n)?;
        let mut idx = BigUint::zero();
        for i in (0..n).rev() {
            idx = idx * self.base[i] + d[i];
        }
        Ok(idx)
    }

    pub fn element_at(&self, n: usize, idx: u64) -> Result<GroupElement> {
        self.check_level(n)?;
        if BigUint::from(idx) >= self.size[n] {
            return Err(Error::NotInDomain { element: format!("index {idx}"), level: n });
        }
        Ok(self.element_from_digits(&self.index_digits(idx, n)))
    }

    /// All of `D_n` in enumeration order.
    pub fn enumerate(&self, n: usize, budget: &Budget) -> Result<Vec<GroupElement>> {
        self.check_level(n)?;
        let len = budget.require_enumerable(&format!("D_{n}"), &self.size[n])?;
        Ok((0..len).map(|i| self.element_from_digits(&self.index_digits(i, n))).collect())
    }

    /// Splits `g ∈ D_j` as `v·u` with `v ∈ D_j ∩ Γ_i`, `u ∈ D_i`.
    pub fn tile_decompose(&self, g: &GroupElement, j: usize, i: usize) -> Result<(GroupElement, GroupElement)> {
        self.check_level(j)?;
        if i >= j {
            return Err(Error::Unsupported(format!("tile_decompose needs i < j, got i={i}, j={j}")));
        }
        if !self.in_domain(g, j)? {
            return Err(Error::NotInDomain { element: g.to_string(), level: j });
        }
        let u = self.reduce(g, i)?;
        let v = self.mul(g, &self.inv(&u)?)?;
        Ok((v, u))
    }

    /// Index-space view of `G/Γ_n`.
    pub fn quotient(&self, n: usize) -> Result<Quotient<'_>> {
        Quotient::new(self, n)
    }

    /// Uniform-ish random element: integer coordinates in `[-2^bits, 2^bits]`, or a random id.
    pub fn random_element<R: Rng>(&self, rng: &mut R, bits: u32) -> GroupElement {
        match &self.repr {
            Repr::Box { axes, .. } => {
                let span = 1i128 << bits.min(120);
                GroupElement(axes.iter().map(|_| BigInt::from(rng.gen_range(-span..=span))).collect())
            }
            Repr::Finite(f) => GroupElement::scalar(rng.gen_range(0..f.order() as u32)),
        }
    }

    /// Random element of `Γ_n`.
    pub fn random_in_subgroup<R: Rng>(&self, rng: &mut R, n: usize, bits: u32) -> Result<GroupElement> {
        let g = self.random_element(rng, bits);
        let r = self.reduce(&g, n)?;
        self.mul(&g, &self.inv(&r)?)
    }

    fn axes(&self) -> Option<(&[Axis], &[Vec<u64>])> {
        match &self.repr {
            Repr::Box { axes, stride } => Some((axes, stride)),
            Repr::Finite(_) => None,
        }
    }

    fn finite(&self) -> Option<&FiniteTower> {
        match &self.repr {
            Repr::Finite(f) => Some(f),
            Repr::Box { .. } => None,
        }
    }

    /// Whether some coordinate is negative (used to label centered domains in output).
    pub fn has_negative(&self, g: &GroupElement) -> bool {
        g.0.iter().any(|c| c.is_negative())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(ix: &[u64], style: DomainStyle) -> QuotientTower {
        QuotientTower::build(&TowerConfig::line(ix.to_vec(), style)).unwrap()
    }

    fn g(x: i64) -> GroupElement {
        GroupElement::scalar(x)
    }

    #[test]
    fn sizes() {
        let t = line(&[3, 3, 3], DomainStyle::NonNegative);
        let s: Vec<u64> = (1..=3).map(|n| t.size_u64(n).unwrap()).collect();
        assert_eq!(s, vec![3, 9, 27]);
        let t = line(&[15, 31, 63, 127], DomainStyle::NonNegative);
        let s: Vec<u64> = (1..=4).map(|n| t.size_u64(n).unwrap()).collect();
        assert_eq!(s, vec![15, 465, 29295, 3720465]);
        let t = line(&[2], DomainStyle::NonNegative);
        assert_eq!(t.enumerate(1, &Budget::default()).unwrap(), vec![g(0), g(1)]);
    }

    #[test]
    fn build_errors() {
        assert_eq!(
            QuotientTower::build(&TowerConfig::line(vec![3, 1], DomainStyle::NonNegative)).unwrap_err(),
            Error::InvalidIndex { level: 2, index: 1 }
        );
        assert!(matches!(
            QuotientTower::build(&TowerConfig::line(vec![3, 2], DomainStyle::Centered)),
            Err(Error::ParityError { level: 2, .. })
        ));
    }

    #[test]
    fn reduce_examples() {
        let t = line(&[3, 3, 3], DomainStyle::NonNegative);
        assert_eq!(t.reduce(&g(10), 1).unwrap(), g(1));
        assert_eq!(t.reduce(&g(-1), 2).unwrap(), g(8));
        let c = line(&[3, 3, 3], DomainStyle::Centered);
        assert_eq!(c.reduce(&g(5), 1).unwrap(), g(-1));
        assert!(matches!(t.reduce(&g(1), 4), Err(Error::DepthExceeded { .. })));
    }

    #[test]
    fn tile_examples() {
        let t = line(&[3, 3, 3], DomainStyle::NonNegative);
        assert_eq!(t.tile_decompose(&g(7), 2, 1).unwrap(), (g(6), g(1)));
        assert_eq!(t.tile_decompose(&g(5), 2, 1).unwrap(), (g(3), g(2)));
        assert_eq!(t.tile_decompose(&g(0), 3, 1).unwrap(), (g(0), g(0)));
        assert!(matches!(t.tile_decompose(&g(9), 2, 1), Err(Error::NotInDomain { .. })));
    }

    #[test]
    fn enumeration_order_is_ascending_for_lines() {
        let c = line(&[3, 5], DomainStyle::Centered);
        let all = c.enumerate(2, &Budget::default()).unwrap();
        let expect: Vec<GroupElement> = (-7..=7).map(g).collect();
        assert_eq!(all, expect);
        assert_eq!(c.identity_index(2), &BigUint::from(7u8));
        for (i, e) in all.iter().enumerate() {
            assert_eq!(c.coset_index_big(e, 2).unwrap(), BigUint::from(i));
        }
    }

    #[test]
    fn lattice_round_trip() {
        let t = QuotientTower::build(
            &TowerConfig::from_json(r#"{"kind":"zd","dim":2,"indices":[[3,2],[3,5]],"domain":"nonneg"}"#).unwrap(),
        )
        .unwrap();
        assert_eq!(t.size_u64(2), Some(90));
        let all = t.enumerate(2, &Budget::default()).unwrap();
        let uniq: std::collections::HashSet<_> = all.iter().cloned().collect();
        assert_eq!(uniq.len(), 90);
        for (i, e) in all.iter().enumerate() {
            assert!(t.in_domain(e, 2).unwrap());
            assert_eq!(t.coset_index_big(e, 2).unwrap(), BigUint::from(i));
        }
    }

    #[test]
    fn generic_matches_cyclic_line() {
        let gen = QuotientTower::build(&TowerConfig::Generic {
            table: cyclic_table(27),
            chain: vec![(0..27).step_by(3).collect(), (0..27).step_by(9).collect(), vec![0]],
            tail: None,
        })
        .unwrap();
        let t = line(&[3, 3, 3], DomainStyle::NonNegative);
        for n in 0..=3 {
            assert_eq!(gen.size(n), t.size(n));
            for x in 0..27i64 {
                assert_eq!(gen.digits(&g(x), n).unwrap(), t.digits(&g(x), n).unwrap());
            }
        }
    }

    #[test]
    fn parse_and_display() {
        let e = GroupElement::parse("(1, -2)").unwrap();
        assert_eq!(e.to_string(), "(1,-2)");
        assert_eq!(GroupElement::parse("14").unwrap(), g(14));
        assert!(GroupElement::parse("x").is_err());
    }
}
