//! Construction of pool-size batches.
//!
//! A batch estimates well near prevalences around one over its pool sizes,
//! so covering a wide range means spreading sizes geometrically:
//! `N_i = round(n0 * q^i)` for `i = 0..T-1`. The spacing `q` trades
//! measurement range against accuracy; [`solve_budget_q`] picks the largest
//! spacing whose total sample count still fits a budget.

use crate::error::Error;
use crate::estimator::PoolDesign;

/// Search resolution for the spacing returned by [`solve_budget_q`].
pub const BUDGET_Q_RESOLUTION: f64 = 1e-6;

/// Parameters of a geometric batch: smallest pool `n0`, spacing `q >= 1`,
/// and number of tests `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDesignSpec {
    n0: u32,
    q: f64,
    t: usize,
}

impl LogDesignSpec {
    pub fn new(n0: u32, q: f64, t: usize) -> Result<Self, Error> {
        if n0 == 0 {
            return Err(Error::ZeroPoolSize);
        }
        if t == 0 {
            return Err(Error::EmptyDesign);
        }
        if !(q.is_finite() && q >= 1.0) {
            return Err(Error::InvalidSpacing(q));
        }
        Ok(Self { n0, q, t })
    }

    pub fn n0(&self) -> u32 {
        self.n0
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn t(&self) -> usize {
        self.t
    }
}

/// Target prevalence range `0 < p_min <= p_max <= 1` a design should cover.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeSpec {
    p_min: f64,
    p_max: f64,
}

impl RangeSpec {
    pub fn new(p_min: f64, p_max: f64) -> Result<Self, Error> {
        if !(p_min > 0.0 && p_min <= p_max && p_max <= 1.0) {
            return Err(Error::InvalidRange { p_min, p_max });
        }
        Ok(Self { p_min, p_max })
    }

    pub fn p_min(&self) -> f64 {
        self.p_min
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }
}

/// A violated coverage condition found by [`validate_range`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RangeViolation {
    /// The smallest pool is not below `1/p_max`: near the top of the range
    /// every pool saturates positive.
    MinPoolTooLarge { min_size: u32, limit: f64 },
    /// The largest pool is not above `1/p_min`: near the bottom of the range
    /// batches come back all negative.
    MaxPoolTooSmall { max_size: u32, limit: f64 },
}

impl std::fmt::Display for RangeViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RangeViolation::MinPoolTooLarge { min_size, limit } => write!(
                f,
                "smallest pool ({min_size}) must be below 1/p_max = {limit:.6}"
            ),
            RangeViolation::MaxPoolTooSmall { max_size, limit } => write!(
                f,
                "largest pool ({max_size}) must be above 1/p_min = {limit:.6}"
            ),
        }
    }
}

/// Outcome of checking a design against a target range.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RangeReport {
    violations: Vec<RangeViolation>,
}

impl RangeReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violations(&self) -> &[RangeViolation] {
        &self.violations
    }
}

/// Nominal (pre-rounding) size of pool `i`; shared by the design builder and
/// the budget solver so both see identical totals.
fn nominal_size(n0: u32, q: f64, i: usize) -> f64 {
    f64::from(n0) * q.powf(i as f64)
}

/// Builds the geometric design `N_i = round(n0 * q^i)`, `i = 0..t-1`.
///
/// Rounding is to the nearest integer with ties away from zero (2.5 rounds
/// to 3), the rule `f64::round` implements; the rule is fixed so that totals
/// are reproducible.
pub fn logarithmic_design(spec: &LogDesignSpec) -> Result<PoolDesign, Error> {
    let sizes = (0..spec.t)
        .map(|i| {
            let size = nominal_size(spec.n0, spec.q, i).round();
            if size > f64::from(u32::MAX) {
                return Err(Error::PoolSizeOverflow {
                    index: i,
                    value: size,
                });
            }
            Ok(size as u32)
        })
        .collect::<Result<Vec<_>, _>>()?;
    PoolDesign::new(sizes)
}

/// Checks that a design can cover `[p_min, p_max]`: the smallest pool must
/// stay below `1/p_max` and the largest pool must exceed `1/p_min`.
pub fn validate_range(design: &PoolDesign, range: &RangeSpec) -> RangeReport {
    let mut violations = Vec::new();
    let p_max_limit = 1.0 / range.p_max;
    if f64::from(design.min_size()) >= p_max_limit {
        violations.push(RangeViolation::MinPoolTooLarge {
            min_size: design.min_size(),
            limit: p_max_limit,
        });
    }
    let p_min_limit = 1.0 / range.p_min;
    if f64::from(design.max_size()) <= p_min_limit {
        violations.push(RangeViolation::MaxPoolTooSmall {
            max_size: design.max_size(),
            limit: p_min_limit,
        });
    }
    RangeReport { violations }
}

/// A budget-constrained design and the spacing that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetSolution {
    pub q: f64,
    pub design: PoolDesign,
}

/// Total sample count of the geometric design, evaluated in floating point.
/// Sizes are exact integers below 2^53, so the sum is exact for any
/// realistic budget.
fn design_total(n0: u32, q: f64, t: usize) -> f64 {
    (0..t).map(|i| nominal_size(n0, q, i).round()).sum()
}

/// Finds the largest spacing `q >= 1` (to within [`BUDGET_Q_RESOLUTION`])
/// whose geometric design consumes at most `budget` samples, and returns it
/// with that design.
///
/// The total is a nondecreasing step function of `q`, so bisection over
/// `[1, budget^{1/(t-1)} + 1]` converges to the feasibility boundary. The
/// returned design never exceeds the budget; with a single test any spacing
/// produces the same batch and `q = 1` is returned.
pub fn solve_budget_q(n0: u32, tests: usize, budget: u64) -> Result<BudgetSolution, Error> {
    if n0 == 0 {
        return Err(Error::ZeroPoolSize);
    }
    if tests == 0 {
        return Err(Error::EmptyDesign);
    }
    let minimum = u64::from(n0) * tests as u64;
    if budget < minimum {
        return Err(Error::InfeasibleBudget { n0, tests, budget });
    }
    if tests == 1 {
        return Ok(BudgetSolution {
            q: 1.0,
            design: PoolDesign::constant(n0, 1)?,
        });
    }

    let budget_f = budget as f64;
    let mut lo = 1.0; // feasible: total(1) = n0 * tests <= budget
    let mut hi = budget_f.powf(1.0 / (tests as f64 - 1.0)) + 1.0; // infeasible: last pool alone exceeds budget
    while hi - lo > BUDGET_Q_RESOLUTION {
        let mid = 0.5 * (lo + hi);
        if design_total(n0, mid, tests) <= budget_f {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let design = logarithmic_design(&LogDesignSpec::new(n0, lo, tests)?)?;
    debug_assert!(design.total_samples() <= budget);
    Ok(BudgetSolution { q: lo, design })
}
