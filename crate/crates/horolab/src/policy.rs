//! Numeric tolerances and budgets used across the crate.

/// Central record of tolerances and caps.
///
/// Every operation that needs a threshold reads it from here (or from a
/// caller-provided copy), so a run can be audited by printing one value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericPolicy {
    /// Structural identities (determinants, group laws, domain membership).
    pub structural: f64,
    /// Quadrature convergence.
    pub quadrature: f64,
    /// Off-diagonal Frobenius norm at which Jacobi sweeps stop.
    pub jacobi_offdiag: f64,
    /// Maximum number of Jacobi sweeps.
    pub jacobi_max_sweeps: usize,
    /// Gram eigenvalue threshold for numerical rank.
    pub rank_threshold: f64,
    /// Maximum candidate matrices examined by lattice enumeration.
    pub enumeration_cap: u64,
    /// Maximum steps of fundamental-domain reduction.
    pub reduction_max_steps: usize,
    /// Smallest admissible completing-the-square denominator.
    pub denominator_floor: f64,
    /// Minimum hits for a sublevel fraction to enter a fit.
    pub sublevel_min_hits: u64,
    /// Relative stderr above which a discrepancy point is excluded from a fit.
    pub rate_fit_max_rel_stderr: f64,
    /// Maximum number of samples in a single oscillatory integral.
    pub oscillatory_budget: u64,
}

impl NumericPolicy {
    pub const DEFAULT: NumericPolicy = NumericPolicy {
        structural: 1e-9,
        quadrature: 1e-6,
        jacobi_offdiag: 1e-12,
        jacobi_max_sweeps: 100,
        rank_threshold: 1e-8,
        enumeration_cap: 1_000_000,
        reduction_max_steps: 1_000_000,
        denominator_floor: 1e-3,
        sublevel_min_hits: 100,
        rate_fit_max_rel_stderr: 0.25,
        oscillatory_budget: 50_000_000,
    };
}

impl Default for NumericPolicy {
    fn default() -> Self {
        Self::DEFAULT
    }
}
