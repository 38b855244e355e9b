use std::fmt::Write as _;

use num_traits::ToPrimitive;

use crate::bits::BitBuf;
use crate::tower::{GroupElement, QuotientTower, TowerKind};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"TPZW";
const MAGIC_MASKED: &[u8; 4] = b"TPZM";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WindowFormat {
    Csv,
    Bits,
    Pgm,
}

/// `η` (or a modification of it) on `D_n`, indexed by enumeration order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolWindow {
    level: usize,
    bits: BitBuf,
    defined: BitBuf,
}

impl SymbolWindow {
    pub fn from_parts(level: usize, bits: BitBuf, defined: BitBuf) -> Self {
        assert_eq!(bits.len(), defined.len());
        SymbolWindow { level, bits, defined }
    }

    /// Fully defined window from explicit symbols.
    pub fn from_symbols(level: usize, symbols: &[Option<u8>]) -> Self {
        let mut w = SymbolWindow {
            level,
            bits: BitBuf::zeros(symbols.len() as u64),
            defined: BitBuf::zeros(symbols.len() as u64),
        };
        for (i, s) in symbols.iter().enumerate() {
            w.set(i as u64, *s);
        }
        w
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn len(&self) -> u64 {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &BitBuf {
        &self.bits
    }

    pub fn defined(&self) -> &BitBuf {
        &self.defined
    }

    pub fn is_fully_defined(&self) -> bool {
        self.defined.all()
    }

    #[inline]
    pub fn get(&self, idx: u64) -> Option<u8> {
        if self.defined.get(idx) {
            Some(u8::from(self.bits.get(idx)))
        } else {
            None
        }
    }

    pub fn set(&mut self, idx: u64, v: Option<u8>) {
        self.defined.set(idx, v.is_some());
        self.bits.set(idx, v == Some(1));
    }

    /// Flips a defined cell; used for negative controls.
    pub fn flip(&mut self, idx: u64) {
        let b = self.bits.get(idx);
        self.bits.set(idx, !b);
    }

    pub fn symbols(&self) -> Vec<Option<u8>> {
        (0..self.len()).map(|i| self.get(i)).collect()
    }

    pub fn count_ones(&self) -> u64 {
        self.bits.count_ones()
    }

    /// Restriction to `D_m ⊆ D_n`.
    pub fn restrict(&self, tower: &QuotientTower, m: usize) -> Result<SymbolWindow> {
        if m > self.level {
            return Err(Error::DepthExceeded { requested: m, available: self.level });
        }
        let q = tower.quotient(self.level)?;
        let len = q.sub_size(m);
        let mut out = SymbolWindow { level: m, bits: BitBuf::zeros(len), defined: BitBuf::zeros(len) };
        for j in 0..len {
            out.set(j, self.get(q.lift(j, m)));
        }
        Ok(out)
    }

    /// One row per cell: coordinates then symbol (`?` when undefined).
    pub fn to_csv(&self, tower: &QuotientTower) -> Result<String> {
        let q = tower.quotient(self.level)?;
        let mut out = String::new();
        let cols: Vec<String> = if tower.dim() == 1 {
            vec!["g".into()]
        } else {
            (0..tower.dim()).map(|a| format!("g{a}")).collect()
        };
        writeln!(out, "{},symbol", cols.join(",")).unwrap();
        for i in 0..self.len() {
            let e = q.element(i);
            let coords: Vec<String> = e.coords().iter().map(|c| c.to_string()).collect();
            let sym = self.get(i).map_or("?".to_string(), |s| s.to_string());
            writeln!(out, "{},{sym}", coords.join(",")).unwrap();
        }
        Ok(out)
    }

    pub fn from_csv(tower: &QuotientTower, level: usize, text: &str) -> Result<SymbolWindow> {
        let q = tower.quotient(level)?;
        let len = q.size();
        let mut w = SymbolWindow { level, bits: BitBuf::zeros(len), defined: BitBuf::zeros(len) };
        let mut seen = crate::bits::BitBuf::zeros(len);
        for (ln, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            if parts.len() != tower.dim() + 1 {
                return Err(Error::Parse(format!("line {}: expected {} fields", ln + 1, tower.dim() + 1)));
            }
            let e = GroupElement::parse(&parts[..tower.dim()].join(","))?;
            if !tower.in_domain(&e, level)? {
                return Err(Error::NotInDomain { element: e.to_string(), level });
            }
            let idx = q.index(&e)?;
            let sym = match parts[tower.dim()] {
                "0" => Some(0),
                "1" => Some(1),
                "?" => None,
                s => return Err(Error::Parse(format!("line {}: bad symbol {s:?}", ln + 1))),
            };
            w.set(idx, sym);
            seen.set(idx, true);
        }
        if !seen.all() {
            return Err(Error::Parse(format!("csv covers {} of {len} cells", seen.count_ones())));
        }
        Ok(w)
    }

    /// 16-byte header (magic, level u32 LE, length u64 LE) followed by LSB-first packed bits;
    /// a window with undefined cells uses a second magic and appends the defined-mask.
    pub fn to_bits(&self) -> Vec<u8> {
        let full = self.is_fully_defined();
        let mut out = Vec::with_capacity(16 + 2 * self.len().div_ceil(8) as usize);
        out.extend_from_slice(if full { MAGIC } else { MAGIC_MASKED });
        out.extend_from_slice(&(self.level as u32).to_le_bytes());
        out.extend_from_slice(&self.len().to_le_bytes());
        out.extend(self.bits.to_le_bytes());
        if !full {
            out.extend(self.defined.to_le_bytes());
        }
        out
    }

    pub fn from_bits(bytes: &[u8]) -> Result<SymbolWindow> {
        if bytes.len() < 16 {
            return Err(Error::Parse("bit dump shorter than its header".into()));
        }
        let masked = match &bytes[..4] {
            m if m == MAGIC => false,
            m if m == MAGIC_MASKED => true,
            _ => return Err(Error::Parse("bad magic".into())),
        };
        let level = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let len = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
        let nb = len.div_ceil(8) as usize;
        let body = &bytes[16..];
        let bits = BitBuf::from_le_bytes(body, len).ok_or_else(|| Error::Parse("truncated bits".into()))?;
        let defined = if masked {
            BitBuf::from_le_bytes(body.get(nb..).unwrap_or(&[]), len)
                .ok_or_else(|| Error::Parse("truncated mask".into()))?
        } else {
            BitBuf::ones(len)
        };
        Ok(SymbolWindow { level, bits, defined })
    }

    /// Binary PGM: ones black, zeros white, undefined grey. Lines wrap at `|D_1|·…` so rows
    /// align with coset blocks; lattices of dimension 2 are drawn by coordinates.
    pub fn to_pgm(&self, tower: &QuotientTower) -> Result<Vec<u8>> {
        let shade = |s: Option<u8>| match s {
            Some(1) => 0u8,
            Some(_) => 255u8,
            None => 128u8,
        };
        let (w, h, pixels) = match tower.kind() {
            TowerKind::IntegerLattice { dim: 2 } => {
                let q = tower.quotient(self.level)?;
                let lo: Vec<_> = tower.element_at(self.level, 0)?.coords().to_vec();
                let hi: Vec<_> = tower.element_at(self.level, self.len() - 1)?.coords().to_vec();
                let w = (&hi[0] - &lo[0]).to_u64().unwrap() + 1;
                let h = (&hi[1] - &lo[1]).to_u64().unwrap() + 1;
                let mut px = vec![0u8; (w * h) as usize];
                for i in 0..self.len() {
                    let e = q.element(i);
                    let x = (&e.coords()[0] - &lo[0]).to_u64().unwrap();
                    let y = (&e.coords()[1] - &lo[1]).to_u64().unwrap();
                    px[(y * w + x) as usize] = shade(self.get(i));
                }
                (w, h, px)
            }
            _ => {
                let target = (self.len() as f64).sqrt().ceil() as u64;
                let w = (1..=self.level)
                    .filter_map(|i| tower.size_u64(i))
                    .find(|&s| s >= target)
                    .unwrap_or(self.len().max(1));
                let h = self.len().div_ceil(w);
                let mut px = vec![128u8; (w * h) as usize];
                for i in 0..self.len() {
                    px[i as usize] = shade(self.get(i));
                }
                (w, h, px)
            }
        };
        let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
        out.extend(pixels);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tower::{DomainStyle, TowerConfig};

    fn sample() -> (QuotientTower, SymbolWindow) {
        let t = QuotientTower::build(&TowerConfig::line(vec![3, 3, 3], DomainStyle::Centered)).unwrap();
        let syms: Vec<Option<u8>> = (0..27).map(|i| if i % 5 == 0 { None } else { Some((i % 3 == 0) as u8) }).collect();
        (t, SymbolWindow::from_symbols(3, &syms))
    }

    #[test]
    fn csv_round_trip() {
        let (t, w) = sample();
        let csv = w.to_csv(&t).unwrap();
        assert!(csv.starts_with("g,symbol\n-13,?\n-12,0\n"));
        assert_eq!(SymbolWindow::from_csv(&t, 3, &csv).unwrap(), w);
    }

    #[test]
    fn bits_round_trip() {
        let (_, w) = sample();
        let b = w.to_bits();
        assert_eq!(&b[..4], b"TPZM");
        assert_eq!(SymbolWindow::from_bits(&b).unwrap(), w);
        let full = SymbolWindow::from_symbols(2, &[Some(1), Some(0), Some(0), Some(1), Some(1), Some(0), Some(1), Some(0), Some(0)]);
        let b = full.to_bits();
        assert_eq!(b.len(), 16 + 2);
        assert_eq!(&b[4..8], &2u32.to_le_bytes());
        assert_eq!(&b[8..16], &9u64.to_le_bytes());
        assert_eq!(b[16], 0b0101_1001);
        assert_eq!(SymbolWindow::from_bits(&b).unwrap(), full);
    }

    #[test]
    fn pgm_header() {
        let (t, w) = sample();
        let p = w.to_pgm(&t).unwrap();
        assert!(p.starts_with(b"P5\n9 3\n255\n"));
    }
}
