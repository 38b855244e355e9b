use num_bigint::BigUint;
use num_traits::ToPrimitive;

use crate::{Error, Result};

/// Caps on exhaustive work.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    /// Largest set that may be enumerated element by element.
    pub enumeration: u64,
    /// Largest window, in cells, that may be materialized.
    pub window_cells: u64,
    /// Random samples for checks that cannot be exhaustive.
    pub samples: usize,
    pub seed: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { enumeration: 1 << 22, window_cells: 1 << 30, samples: 10_000, seed: 0x7e0b_11e2 }
    }
}

impl Budget {
    pub fn enumerable(&self, size: &BigUint) -> bool {
        size.to_u64().is_some_and(|s| s <= self.enumeration)
    }

    pub fn require_enumerable(&self, what: &str, size: &BigUint) -> Result<u64> {
        fits(what, size, self.enumeration)
    }

    pub fn require_window(&self, what: &str, size: &BigUint) -> Result<u64> {
        fits(what, size, self.window_cells)
    }
}

fn fits(what: &str, size: &BigUint, cap: u64) -> Result<u64> {
    match size.to_u64() {
        Some(s) if s <= cap => Ok(s),
        _ => Err(Error::BudgetExceeded { what: what.to_string(), size: size.to_string(), budget: cap }),
    }
}
