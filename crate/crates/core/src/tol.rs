//! Numerical tolerances shared across the toolkit.
//!
//! Every verdict in a report is produced against one of these constants (or
//! a caller override carried in [`Tolerances`]), so reports record the full
//! set alongside their results.

use serde::Serialize;

/// Target normwise relative backward error of the matrix exponential.
pub const EXP_TOL: f64 = 1e-12;
/// Resolvent singularity guard, relative to `max(1, ‖A‖)`.
pub const SPEC_GUARD: f64 = 1e-8;
/// Relative slack for growth-envelope certification.
pub const ENV_TOL: f64 = 1e-6;
/// Relative slack for inequality verdicts.
pub const POWER_TOL: f64 = 1e-8;
/// Truncation target for Neumann series.
pub const SERIES_TOL: f64 = 1e-12;
/// Hard cap on Neumann terms.
pub const NEUMANN_MAX_TERMS: usize = 200;
/// Unit-circle gap tolerance, relative to `max(1, |z|)`.
pub const GAP_TOL: f64 = 1e-8;
/// Convergence threshold for Yosida-distance extrapolants.
pub const YOSIDA_CONV_TOL: f64 = 1e-6;
/// Horizon for the `n₀` search in the stability variant of persistence.
pub const STABILITY_HORIZON: u32 = 64;
/// Doubling cap for the tail-certification horizon (`2^20`).
pub const HORIZON_CAP: f64 = 1_048_576.0;
/// Evaluation budget for the adaptive supremum search.
pub const SUP_BUDGET: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub exp_tol: f64,
    pub spec_guard: f64,
    pub env_tol: f64,
    pub power_tol: f64,
    pub series_tol: f64,
    pub gap_tol: f64,
    pub yosida_conv_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            exp_tol: EXP_TOL,
            spec_guard: SPEC_GUARD,
            env_tol: ENV_TOL,
            power_tol: POWER_TOL,
            series_tol: SERIES_TOL,
            gap_tol: GAP_TOL,
            yosida_conv_tol: YOSIDA_CONV_TOL,
        }
    }
}

impl Tolerances {
    pub fn with_power_tol(mut self, power_tol: f64) -> Self {
        self.power_tol = power_tol;
        self
    }
}
