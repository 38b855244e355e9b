//! Named towers.

use num_rational::BigRational;

use crate::tower::{ConfigRatio, DomainStyle, TailSpec, TowerConfig};
use crate::{Error, Result};

pub const NAMES: [&str; 3] = ["threeadic", "threeadic-centered", "irregular-demo"];

/// `ℤ` with `Γ_n = 3^n ℤ` over twelve levels; the series terms are all `1/3`.
pub fn threeadic(domain: DomainStyle) -> TowerConfig {
    TowerConfig::line(vec![3; 12], domain)
        .with_tail(TailSpec::Divergent { min_term: ConfigRatio(BigRational::new(1.into(), 3.into())) })
}

/// `ℤ` with indices `2^{j+3} − 1`, `j = 1..=20`; later terms shrink by at least half.
pub fn irregular_demo() -> TowerConfig {
    let indices = (1..=20u32).map(|j| (1u64 << (j + 3)) - 1).collect();
    TowerConfig::line(indices, DomainStyle::Centered)
        .with_tail(TailSpec::Geometric { ratio: ConfigRatio(BigRational::new(1.into(), 2.into())) })
}

pub fn by_name(name: &str) -> Result<TowerConfig> {
    match name {
        "threeadic" => Ok(threeadic(DomainStyle::NonNegative)),
        "threeadic-centered" => Ok(threeadic(DomainStyle::Centered)),
        "irregular-demo" => Ok(irregular_demo()),
        other => Err(Error::InvalidConfig(format!("unknown preset {other:?}; known: {}", NAMES.join(", ")))),
    }
}
