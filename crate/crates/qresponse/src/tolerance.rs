//! Named tolerance bundles shared by the library tests and the CLI.

/// Thresholds used when deciding whether a check passes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ToleranceProfile {
    /// Exact algebraic identities evaluated in floating point.
    pub identity: f64,
    /// Identities that accumulate rounding over long products (propagators, sums of many lines).
    pub accumulated: f64,
    /// Finite-difference and quadrature comparisons.
    pub numeric: f64,
}

impl ToleranceProfile {
    pub const STRICT: Self = Self { identity: 1e-12, accumulated: 1e-10, numeric: 1e-5 };
    pub const NUMERIC: Self = Self { identity: 1e-8, accumulated: 1e-6, numeric: 1e-4 };

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "strict" => Some(Self::STRICT),
            "numeric" => Some(Self::NUMERIC),
            _ => None,
        }
    }
}

impl Default for ToleranceProfile {
    fn default() -> Self {
        Self::STRICT
    }
}
