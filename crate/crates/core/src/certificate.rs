//! Error certificates returned by the approximation operations.

use serde::Serialize;

use crate::info::InfoQuantity;

/// Tolerance used when deciding whether a certificate holds.
pub const CERTIFICATE_TOLERANCE: f64 = 1e-9;

/// A computed divergence next to the bound that is guaranteed to dominate it
/// whenever `preconditions_ok` is true.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Certificate {
    pub divergence: InfoQuantity,
    pub bound: InfoQuantity,
    pub preconditions_ok: bool,
}

impl Certificate {
    pub fn slack(&self) -> f64 {
        self.bound.bits() - self.divergence.bits()
    }

    /// `divergence <= bound + tol`.
    pub fn holds_within(&self, tol: f64) -> bool {
        self.divergence.bits() <= self.bound.bits() + tol
    }

    pub fn holds(&self) -> bool {
        self.holds_within(CERTIFICATE_TOLERANCE)
    }
}
