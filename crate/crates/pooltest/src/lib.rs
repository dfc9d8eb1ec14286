//! Variable-pool-size group testing: batch design, maximum-likelihood
//! prevalence estimation, and seeded Monte Carlo accuracy evaluation.
//!
//! Pool (group) testing runs one assay on a mixture of several samples; the
//! assay is positive if any constituent sample is. A batch that mixes pool
//! sizes geometrically — from single-sample tests up to very large pools —
//! estimates the infection prevalence accurately across several orders of
//! magnitude without an initial guess, using only a handful of tests.
//!
//! - [`design`] builds geometric batches and budget-constrained variants.
//! - [`estimator`] recovers the maximum-likelihood prevalence from observed
//!   pool outcomes, by closed form for equal pools and by bisecting the
//!   monotone score equation in general.
//! - [`montecarlo`] measures estimator accuracy (RMSE, relative accuracy
//!   `eta`, empirical confidence intervals) with reproducible seeded sweeps.
//! - [`io`] and [`cli`] provide CSV/JSON formats and the `pooltest` binary.
//!
//! ```
//! use pooltest::design::{logarithmic_design, LogDesignSpec};
//! use pooltest::{estimate_variable_pool, OutcomeVector};
//!
//! // 50 pools, sizes 1..=107, covering prevalences from ~0.01 to 1.
//! let design = logarithmic_design(&LogDesignSpec::new(1, 1.1, 50).unwrap()).unwrap();
//! assert_eq!(design.max_size(), 107);
//!
//! // Estimate prevalence from a recorded outcome pattern.
//! let outcomes = OutcomeVector::new(design.sizes().iter().map(|&n| n >= 20).collect());
//! let estimate = estimate_variable_pool(&design, &outcomes, 1e-10).unwrap();
//! assert!(estimate.p_hat > 0.01 && estimate.p_hat < 0.1);
//! ```

pub mod cli;
pub mod design;
pub mod error;
pub mod estimator;
pub mod io;
pub mod montecarlo;

pub use error::Error;
pub use estimator::{
    estimate_constant_pool, estimate_variable_pool, log_likelihood, pool_negative_probability,
    score, OutcomeVector, PoolDesign, PrevalenceEstimate, DEFAULT_TOLERANCE,
};
