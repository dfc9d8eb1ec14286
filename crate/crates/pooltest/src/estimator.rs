//! Maximum-likelihood prevalence estimation from pool-test outcomes.
//!
//! A pool mixing `n` samples tests negative exactly when all of its samples
//! are negative, which happens with probability `(1-p)^n` when each sample is
//! independently positive with probability `p`. For a batch with pool sizes
//! `N_1..N_T` and binary outcomes `d_1..d_T` the log-likelihood of `p` is
//!
//! ```text
//! l(p) = sum_i  N_i (1 - d_i) ln(1-p)  +  d_i ln(1 - (1-p)^{N_i})
//! ```
//!
//! Setting the derivative of `l` to zero reduces to the score equation
//!
//! ```text
//! sum_i  N_i (1 - d_i / (1 - (1-p)^{N_i}))  =  0
//! ```
//!
//! whose left-hand side is strictly increasing in `p` whenever the outcomes
//! are mixed (at least one positive and one negative pool), so the estimate
//! is the unique root and bisection always converges. All-negative and
//! all-positive batches have no interior root; they estimate 0 and 1. When
//! every pool has the same size `N`, the root has the closed form
//! `1 - (1 - w/T)^{1/N}` with `w` positive pools out of `T`, computed
//! directly by [`estimate_constant_pool`].
//!
//! Powers `(1-p)^n` are evaluated as `exp(n * ln_1p(-p))` so that pools with
//! thousands of samples keep full precision at small prevalences.

use crate::error::Error;

/// Bisection bracket `[EPS, 1-EPS]`. With mixed outcomes the score tends to
/// -inf as `p -> 0+` and to the (positive) negative-pool size sum as
/// `p -> 1-`, so this bracket always straddles the root.
const BRACKET_EPS: f64 = 1e-12;

/// Default bracket-width tolerance for [`estimate_variable_pool`]; far below
/// the statistical error of any realistic batch, at about 40 bisection steps.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// An ordered batch of pool sizes, one entry per test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolDesign {
    sizes: Vec<u32>,
}

impl PoolDesign {
    /// Builds a design from per-test pool sizes. Fails on an empty list or a
    /// zero size.
    pub fn new(sizes: Vec<u32>) -> Result<Self, Error> {
        if sizes.is_empty() {
            return Err(Error::EmptyDesign);
        }
        if sizes.contains(&0) {
            return Err(Error::ZeroPoolSize);
        }
        Ok(Self { sizes })
    }

    /// A design with `tests` pools all of size `size`.
    pub fn constant(size: u32, tests: usize) -> Result<Self, Error> {
        Self::new(vec![size; tests])
    }

    pub fn sizes(&self) -> &[u32] {
        &self.sizes
    }

    /// Number of tests (pools) in the batch.
    pub fn tests(&self) -> usize {
        self.sizes.len()
    }

    /// Total number of individual samples consumed by the batch.
    pub fn total_samples(&self) -> u64 {
        self.sizes.iter().map(|&n| u64::from(n)).sum()
    }

    pub fn min_size(&self) -> u32 {
        *self.sizes.iter().min().expect("designs are never empty")
    }

    pub fn max_size(&self) -> u32 {
        *self.sizes.iter().max().expect("designs are never empty")
    }
}

/// Binary pool results aligned with a [`PoolDesign`]; `true` is a positive
/// pool. Length agreement with the design is checked where the two meet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeVector {
    outcomes: Vec<bool>,
}

impl OutcomeVector {
    pub fn new(outcomes: Vec<bool>) -> Self {
        Self { outcomes }
    }

    /// Parses a compact bitstring such as `"0110"` (1 = positive pool).
    pub fn from_bits(bits: &str) -> Result<Self, Error> {
        bits.chars()
            .enumerate()
            .map(|(position, c)| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                found => Err(Error::InvalidOutcomeBit { found, position }),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Self::new)
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    /// Number of positive pools.
    pub fn positives(&self) -> usize {
        self.outcomes.iter().filter(|&&d| d).count()
    }
}

/// A maximum-likelihood prevalence estimate plus solver diagnostics.
///
/// `at_boundary` is set exactly when `p_hat` is 0 or 1 (all-negative or
/// all-positive outcomes); `residual` is the score-equation value at `p_hat`,
/// 0 by convention at the boundaries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrevalenceEstimate {
    pub p_hat: f64,
    pub at_boundary: bool,
    pub solver_iterations: u32,
    pub residual: f64,
}

impl PrevalenceEstimate {
    fn boundary(p_hat: f64) -> Self {
        Self {
            p_hat,
            at_boundary: true,
            solver_iterations: 0,
            residual: 0.0,
        }
    }
}

/// `(1-p)^n` as `exp(n * ln(1-p))`.
fn pow_one_minus(p: f64, n: f64) -> f64 {
    (n * (-p).ln_1p()).exp()
}

/// `1 - (1-p)^n` without cancellation for small `n*p`.
pub(crate) fn one_minus_pow(p: f64, n: f64) -> f64 {
    -(n * (-p).ln_1p()).exp_m1()
}

/// Probability that a pool of `n` samples tests negative: `(1-p)^n`.
pub fn pool_negative_probability(p: f64, n: u32) -> Result<f64, Error> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    if n == 0 {
        return Err(Error::ZeroPoolSize);
    }
    Ok(pow_one_minus(p, f64::from(n)))
}

fn check_paired(design: &PoolDesign, outcomes: &OutcomeVector) -> Result<(), Error> {
    if design.tests() != outcomes.len() {
        return Err(Error::LengthMismatch {
            pools: design.tests(),
            outcomes: outcomes.len(),
        });
    }
    Ok(())
}

/// Log-likelihood of prevalence `p` for an observed batch.
///
/// Finite for `p` strictly inside (0, 1). At the endpoints the value is
/// returned when it is finite (e.g. all-negative outcomes at `p = 0`) and
/// reported as [`Error::LogLikelihoodDiverges`] when a positive pool forces a
/// `ln(0)` term.
pub fn log_likelihood(design: &PoolDesign, outcomes: &OutcomeVector, p: f64) -> Result<f64, Error> {
    check_paired(design, outcomes)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    let log_q = (-p).ln_1p();
    let mut total = 0.0;
    for (&n, &positive) in design.sizes().iter().zip(outcomes.as_slice()) {
        let n = f64::from(n);
        total += if positive {
            one_minus_pow(p, n).ln()
        } else {
            n * log_q
        };
    }
    if total.is_finite() {
        Ok(total)
    } else {
        Err(Error::LogLikelihoodDiverges { p })
    }
}

/// Left-hand side of the score equation at `p`:
/// `sum_i N_i (1 - d_i / (1 - (1-p)^{N_i}))`.
///
/// Strictly increasing in `p` when the outcomes are mixed; its root is the
/// maximum-likelihood estimate.
pub fn score(design: &PoolDesign, outcomes: &OutcomeVector, p: f64) -> Result<f64, Error> {
    check_paired(design, outcomes)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::ProbabilityNotInterior(p));
    }
    let log_q = (-p).ln_1p();
    let mut total = 0.0;
    for (&n, &positive) in design.sizes().iter().zip(outcomes.as_slice()) {
        let n = f64::from(n);
        total += if positive {
            n * (1.0 - 1.0 / -(n * log_q).exp_m1())
        } else {
            n
        };
    }
    Ok(total)
}

/// Closed-form estimate for a batch of `t` equal pools of size `n` with `w`
/// positives: `1 - (1 - w/t)^{1/n}`.
///
/// `w = 0` and `w = t` return the boundary estimates 0 and 1.
pub fn estimate_constant_pool(n: u32, t: u32, w: u32) -> Result<PrevalenceEstimate, Error> {
    if n == 0 {
        return Err(Error::ZeroPoolSize);
    }
    if t == 0 {
        return Err(Error::EmptyDesign);
    }
    if w > t {
        return Err(Error::TooManyPositives {
            positives: w,
            tests: t,
        });
    }
    if w == 0 {
        return Ok(PrevalenceEstimate::boundary(0.0));
    }
    if w == t {
        return Ok(PrevalenceEstimate::boundary(1.0));
    }
    let n_f = f64::from(n);
    let positive_fraction = f64::from(w) / f64::from(t);
    // 1 - (1 - w/t)^{1/n} = -expm1(ln(1 - w/t) / n)
    let p_hat = -((-positive_fraction).ln_1p() / n_f).exp_m1();
    let residual =
        n_f * f64::from(t - w) + n_f * f64::from(w) * (1.0 - 1.0 / one_minus_pow(p_hat, n_f));
    Ok(PrevalenceEstimate {
        p_hat,
        at_boundary: false,
        solver_iterations: 0,
        residual,
    })
}

/// Outcome counts grouped by pool size. The score only depends on how many
/// pools of each size were positive, so grouping makes each evaluation
/// O(distinct sizes) instead of O(T), and makes the estimate exactly
/// invariant under joint permutations of (sizes, outcomes).
struct GroupedBatch {
    /// (size, negative count, positive count), sorted by size.
    groups: Vec<(f64, f64, f64)>,
}

impl GroupedBatch {
    fn new(design: &PoolDesign, outcomes: &OutcomeVector) -> Self {
        let mut counts = std::collections::BTreeMap::new();
        for (&n, &positive) in design.sizes().iter().zip(outcomes.as_slice()) {
            let entry = counts.entry(n).or_insert((0u64, 0u64));
            if positive {
                entry.1 += 1;
            } else {
                entry.0 += 1;
            }
        }
        let groups = counts
            .into_iter()
            .map(|(n, (neg, pos))| (f64::from(n), neg as f64, pos as f64))
            .collect();
        Self { groups }
    }

    fn score(&self, p: f64) -> f64 {
        let log_q = (-p).ln_1p();
        let mut total = 0.0;
        for &(n, negatives, positives) in &self.groups {
            total += n * negatives;
            if positives > 0.0 {
                let positive_prob = -(n * log_q).exp_m1();
                total += n * positives * (1.0 - 1.0 / positive_prob);
            }
        }
        total
    }
}

/// Maximum-likelihood estimate for arbitrary pool sizes, by bisecting the
/// score equation on `[1e-12, 1 - 1e-12]` until the bracket width is at most
/// `tol`.
///
/// All-negative outcomes return 0 and all-positive outcomes return 1, both
/// flagged `at_boundary`; mixed outcomes always bracket a unique root, so
/// the solver cannot fail to converge.
pub fn estimate_variable_pool(
    design: &PoolDesign,
    outcomes: &OutcomeVector,
    tol: f64,
) -> Result<PrevalenceEstimate, Error> {
    check_paired(design, outcomes)?;
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidTolerance(tol));
    }
    let positives = outcomes.positives();
    if positives == 0 {
        return Ok(PrevalenceEstimate::boundary(0.0));
    }
    if positives == outcomes.len() {
        return Ok(PrevalenceEstimate::boundary(1.0));
    }

    let batch = GroupedBatch::new(design, outcomes);
    let mut lo = BRACKET_EPS;
    let mut hi = 1.0 - BRACKET_EPS;
    let mut iterations = 0u32;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // bracket reached f64 resolution
        }
        if batch.score(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let p_hat = 0.5 * (lo + hi);
    Ok(PrevalenceEstimate {
        p_hat,
        at_boundary: false,
        solver_iterations: iterations,
        residual: batch.score(p_hat),
    })
}
