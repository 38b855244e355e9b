//! Irregular Toeplitz arrays over residually finite group towers.
//!
//! The crate builds the array `η` level by level from a [`QuotientTower`], evaluates it lazily
//! at arbitrary group elements, and checks the finite consequences of its period structure,
//! density, periodic measures and partition algebra with exact arithmetic.

pub mod bits;
mod budget;
mod check;
mod error;
pub mod density;
pub mod factor;
pub mod measures;
pub mod periods;
pub mod presets;
pub mod scalar;
pub mod skeleton;
pub mod tower;
pub mod verify;

pub use budget::Budget;
pub use check::{CheckResult, Status};
pub use error::{Error, Result};
pub use skeleton::{SymbolWindow, ToeplitzSkeleton};
pub use tower::{GroupElement, QuotientTower, TowerConfig};

/// Exact scalar used by every report.
pub type Rational = num_rational::BigRational;

/// Exact density profile.
pub type ExactDensityProfile = density::DensityProfile<Rational>;
/// Floating-point density profile for quick inspection.
pub type DensityProfileF64 = density::DensityProfile<f64>;
