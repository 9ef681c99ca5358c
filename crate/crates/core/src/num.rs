//! Unit-interval arithmetic and a totally ordered `f64` wrapper.
//!
//! All distances and truth values live in `[0,1]`. Comparisons throughout the
//! crate use the absolute tolerance [`TOL`].

use std::fmt;

/// Absolute tolerance for equality and axiom checks on `[0,1]` values.
pub const TOL: f64 = 1e-9;

/// Required agreement between primal and dual transport objectives.
pub const CERT_TOL: f64 = 1e-7;

/// Truncated addition on the unit interval: `min(a + b, 1)`.
#[inline]
pub fn oplus(a: f64, b: f64) -> f64 {
    (a + b).min(1.0)
}

/// Truncated subtraction on the unit interval: `max(a - b, 0)`.
#[inline]
pub fn ominus(a: f64, b: f64) -> f64 {
    (a - b).max(0.0)
}

/// Clamp into `[0,1]`.
#[inline]
pub fn clamp01(a: f64) -> f64 {
    a.clamp(0.0, 1.0)
}

/// An `f64` with the total order given by `f64::total_cmp`, usable as a map
/// key (weights inside values that are themselves keys, numeric parameters of
/// formulas and terms).
#[derive(Debug, Clone, Copy)]
pub struct OrdF64(pub f64);

impl OrdF64 {
    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl PartialEq for OrdF64 {
    fn eq(&self, other: &Self) -> bool {
        self.0.total_cmp(&other.0) == std::cmp::Ordering::Equal
    }
}

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl std::hash::Hash for OrdF64 {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state);
    }
}

impl From<f64> for OrdF64 {
    fn from(v: f64) -> Self {
        OrdF64(v)
    }
}

impl fmt::Display for OrdF64 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
