//! Numerical tolerances shared across modules.

use serde::{Deserialize, Serialize};

/// Tolerance set. Every field can be overridden from a scenario config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Entrywise Hermiticity defect.
    pub herm: f64,
    /// Entrywise unitarity defect.
    pub unit: f64,
    /// Normalization defect for input states.
    pub norm: f64,
    /// Accumulated normalization defect allowed along a trajectory.
    pub norm_budget: f64,
    /// Standard deviations at or below this are treated as zero.
    pub sigma_floor: f64,
    /// Relative tolerance for the tight classification.
    pub tight: f64,
    /// Allowed negative excursion of the inequality residual.
    pub violation: f64,
    /// Central finite-difference step for operators without analytic derivatives.
    pub h_op: f64,
    /// Relative least-squares defect accepted by the span test.
    pub span: f64,
    /// Absolute tolerance of adaptive Simpson quadrature.
    pub quad: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            herm: 1e-12,
            unit: 1e-10,
            norm: 1e-10,
            norm_budget: 1e-8,
            sigma_floor: 1e-9,
            tight: 1e-6,
            violation: 1e-8,
            h_op: 1e-6,
            span: 1e-8,
            quad: 1e-12,
        }
    }
}
