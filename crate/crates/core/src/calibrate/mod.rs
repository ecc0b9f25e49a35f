//! Joint head/flooding likelihood calibration: brute-force search over
//! explicit value lists, Nelder-Mead refinement from the best tuples, and
//! Gauss-Newton residual uncertainty at the optimum.

pub mod brute;
pub mod nelder_mead;
pub mod nll;
pub mod refine;
pub mod uncertainty;

use serde::{Deserialize, Serialize};

use crate::gwflow::QoIBundle;

pub use brute::{brute_force, BruteForceEntry, BruteForceGrid, Constraint, SigmaScan};
pub use nelder_mead::{nelder_mead, Feasibility, NelderMeadOptions, NelderMeadResult, PENALTY};
pub use nll::{nll, nll_terms, sum_squared_residuals, NllConfig, NllTerms};
pub use refine::{best_seeds, refine, CalibrationProblem, RefineOptions, RefinedResult};
pub use uncertainty::{
    gauss_newton_covariance, residual_uncertainty, Covariance, UncertaintyOptions,
    UncertaintyReport,
};

/// What the likelihood needs from one model run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Modelled heads at the observation wells, in well order.
    pub heads: Vec<f64>,
    /// [%]
    pub h_pas: f64,
    pub qoi: Option<QoIBundle>,
}

/// Irrigation recharge rate net of what the rice-field drains send straight
/// back out: `(applied · area - removed) / area`.
pub fn correct_recharge(applied: f64, rice_area: f64, rice_drain_q: f64) -> f64 {
    if rice_area <= 0.0 {
        return applied;
    }
    (applied * rice_area - rice_drain_q) / rice_area
}
