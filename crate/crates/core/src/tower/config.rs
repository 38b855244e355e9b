use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, Zero};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::scalar::{fraction_string, parse_rational};

/// Shape of the fundamental domains of an integer tower.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum DomainStyle {
    /// `D_n = {0, …, N_n − 1}`.
    #[default]
    #[serde(rename = "nonneg")]
    NonNegative,
    /// `D_n = {−(N_n−1)/2, …, (N_n−1)/2}`; all moduli must be odd.
    #[serde(rename = "centered")]
    Centered,
}

/// A positive rational written in config files as `"p/q"`, a decimal string or a number.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigRatio(pub BigRational);

impl Serialize for ConfigRatio {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&fraction_string(&self.0))
    }
}

impl<'de> Deserialize<'de> for ConfigRatio {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Int(i64),
            Float(f64),
        }
        let r = match Raw::deserialize(d)? {
            Raw::Text(s) => parse_rational(&s).ok_or_else(|| de::Error::custom(format!("bad rational {s:?}")))?,
            Raw::Int(i) => BigRational::from_integer(i.into()),
            Raw::Float(f) => BigRational::from_f64(f).ok_or_else(|| de::Error::custom("non-finite ratio"))?,
        };
        if !r.is_positive() || r.is_zero() {
            return Err(de::Error::custom("ratio must be positive"));
        }
        Ok(ConfigRatio(r))
    }
}

/// Declared behaviour of the series terms `|D_j|/|D_{j+1}|` beyond the last materialized level.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TailSpec {
    /// Every later term is at most `ratio` times its predecessor (`ratio < 1`).
    Geometric { ratio: ConfigRatio },
    /// Every term is at least `min_term`, so the series diverges.
    Divergent { min_term: ConfigRatio },
}

/// JSON description of a tower.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum TowerConfig {
    /// `G = ℤ`, `Γ_n = N_n ℤ`.
    #[serde(rename = "z")]
    Line {
        indices: Vec<u64>,
        #[serde(default)]
        domain: DomainStyle,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tail: Option<TailSpec>,
    },
    /// `G = ℤ^dim` with diagonal subgroups; `indices[level][axis]`.
    #[serde(rename = "zd")]
    Lattice {
        dim: usize,
        indices: Vec<Vec<u64>>,
        #[serde(default)]
        domain: DomainStyle,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tail: Option<TailSpec>,
    },
    /// Finite group given by its Cayley table (element 0 is the identity) and the
    /// normal subgroups `Γ_1 ⊇ … ⊇ Γ_depth = {0}` as element lists.
    #[serde(rename = "generic")]
    Generic {
        table: Vec<Vec<u32>>,
        chain: Vec<Vec<u32>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tail: Option<TailSpec>,
    },
}

impl TowerConfig {
    pub fn line(indices: Vec<u64>, domain: DomainStyle) -> Self {
        TowerConfig::Line { indices, domain, tail: None }
    }

    pub fn with_tail(mut self, t: TailSpec) -> Self {
        match &mut self {
            TowerConfig::Line { tail, .. } | TowerConfig::Lattice { tail, .. } | TowerConfig::Generic { tail, .. } => {
                *tail = Some(t)
            }
        }
        self
    }

    pub fn tail(&self) -> Option<&TailSpec> {
        match self {
            TowerConfig::Line { tail, .. } | TowerConfig::Lattice { tail, .. } | TowerConfig::Generic { tail, .. } => {
                tail.as_ref()
            }
        }
    }

    pub fn from_json(text: &str) -> crate::Result<Self> {
        serde_json::from_str(text).map_err(|e| crate::Error::InvalidConfig(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("tower config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    #[test]
    fn parses_spec_forms() {
        let c = TowerConfig::from_json(r#"{"kind":"z","indices":[15,31,63,127],"domain":"centered"}"#).unwrap();
        assert_eq!(c, TowerConfig::line(vec![15, 31, 63, 127], DomainStyle::Centered));
        let c = TowerConfig::from_json(r#"{"kind":"zd","dim":2,"indices":[[3,3],[3,3]],"domain":"nonneg"}"#).unwrap();
        assert!(matches!(c, TowerConfig::Lattice { dim: 2, .. }));
        let c = TowerConfig::from_json(r#"{"kind":"z","indices":[3]}"#).unwrap();
        assert_eq!(c, TowerConfig::line(vec![3], DomainStyle::NonNegative));
    }

    #[test]
    fn tail_forms() {
        let c = TowerConfig::from_json(r#"{"kind":"z","indices":[3],"tail":{"kind":"geometric","ratio":"1/2"}}"#)
            .unwrap();
        assert_eq!(c.tail(), Some(&TailSpec::Geometric { ratio: ConfigRatio(ratio(1, 2)) }));
        let c = TowerConfig::from_json(r#"{"kind":"z","indices":[3],"tail":{"kind":"divergent","min_term":0.25}}"#)
            .unwrap();
        assert_eq!(c.tail(), Some(&TailSpec::Divergent { min_term: ConfigRatio(ratio(1, 4)) }));
        assert!(TowerConfig::from_json(r#"{"kind":"z","indices":[3],"tail":{"kind":"geometric","ratio":"-1"}}"#)
            .is_err());
        let back = TowerConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
    }
}
