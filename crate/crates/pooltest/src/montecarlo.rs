//! Seeded Monte Carlo evaluation of estimator accuracy.
//!
//! [`run_sweep`] simulates batches at each true prevalence on a grid,
//! estimates every batch with the maximum-likelihood solver, and summarizes
//! the error as RMSE, the relative accuracy `eta = rmse / p`, and empirical
//! confidence bounds.
//!
//! Reproducibility contract: every (grid point, repetition) pair draws from
//! its own ChaCha8 stream keyed by the sweep seed and the two indices, and
//! per-point statistics are reduced in repetition order. Reports are
//! therefore bit-identical for a given seed regardless of thread count or
//! scheduling; repetitions may run in parallel freely.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Error;
use crate::estimator::{
    estimate_variable_pool, one_minus_pow, OutcomeVector, PoolDesign, DEFAULT_TOLERANCE,
};

/// Generator identity recorded in run manifests.
pub const RNG_ALGORITHM: &str =
    "chacha8 (rand_chacha 0.9); key = le64(seed) || le64(grid_index) || le64(repetition) || \"pooltest\"";

/// Independent generator for one repetition of one grid point. The 256-bit
/// ChaCha key encodes (seed, grid index, repetition), so distinct pairs get
/// distinct streams by construction.
pub fn repetition_rng(seed: u64, grid_index: u64, repetition: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&grid_index.to_le_bytes());
    key[16..24].copy_from_slice(&repetition.to_le_bytes());
    key[24..32].copy_from_slice(b"pooltest");
    ChaCha8Rng::from_seed(key)
}

/// Simulates one batch at true prevalence `p`: pool `i` is positive with
/// probability `1 - (1-p)^{N_i}`, independently. Consumes exactly one
/// uniform draw per pool so streams stay aligned.
pub fn simulate_outcomes<R: Rng + ?Sized>(design: &PoolDesign, p: f64, rng: &mut R) -> OutcomeVector {
    assert!((0.0..=1.0).contains(&p), "prevalence {p} outside [0, 1]");
    let outcomes = design
        .sizes()
        .iter()
        .map(|&n| {
            let positive_prob = one_minus_pow(p, f64::from(n));
            rng.random::<f64>() < positive_prob
        })
        .collect();
    OutcomeVector::new(outcomes)
}

/// Parameters of one accuracy sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub design: PoolDesign,
    /// True prevalences to simulate at; each must lie in (0, 1].
    pub prevalence_grid: Vec<f64>,
    pub repetitions: u32,
    pub seed: u64,
    /// Level of the empirical confidence interval, in (0, 1).
    pub ci_level: f64,
}

impl SweepConfig {
    /// New sweep with the default 95% confidence level.
    pub fn new(
        design: PoolDesign,
        prevalence_grid: Vec<f64>,
        repetitions: u32,
        seed: u64,
    ) -> Result<Self, Error> {
        let config = Self {
            design,
            prevalence_grid,
            repetitions,
            seed,
            ci_level: 0.95,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_ci_level(mut self, ci_level: f64) -> Result<Self, Error> {
        self.ci_level = ci_level;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<(), Error> {
        if self.repetitions == 0 {
            return Err(Error::ZeroRepetitions);
        }
        if self.prevalence_grid.is_empty() {
            return Err(Error::EmptyGrid);
        }
        for &p in &self.prevalence_grid {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::GridValueOutOfRange(p));
            }
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(Error::InvalidConfidenceLevel(self.ci_level));
        }
        Ok(())
    }
}

/// Accuracy summary for one true prevalence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyPoint {
    /// True prevalence the batches were simulated at.
    pub p: f64,
    /// Root mean square error of the estimates.
    pub rmse: f64,
    /// Relative accuracy `rmse / p`; smaller is better.
    pub eta: f64,
    /// Lower empirical quantile of the estimates at the configured level.
    pub ci_low: f64,
    /// Upper empirical quantile of the estimates.
    pub ci_high: f64,
    /// Mean of the estimates.
    pub mean_estimate: f64,
}

/// Per-grid-point accuracy results of one sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyReport {
    pub points: Vec<AccuracyPoint>,
}

/// Runs the sweep: for every grid prevalence, simulates `repetitions`
/// batches, estimates each, and summarizes the error distribution.
/// Deterministic in (config, seed); see the module docs.
pub fn run_sweep(config: &SweepConfig) -> Result<AccuracyReport, Error> {
    config.validate()?;
    let points = config
        .prevalence_grid
        .iter()
        .enumerate()
        .map(|(grid_index, &p)| {
            let estimates: Vec<f64> = (0..config.repetitions)
                .into_par_iter()
                .map(|repetition| {
                    let mut rng =
                        repetition_rng(config.seed, grid_index as u64, u64::from(repetition));
                    let outcomes = simulate_outcomes(&config.design, p, &mut rng);
                    estimate_variable_pool(&config.design, &outcomes, DEFAULT_TOLERANCE)
                        .expect("simulated outcomes always pair with the design")
                        .p_hat
                })
                .collect();
            summarize_point(p, estimates, config.ci_level)
        })
        .collect();
    Ok(AccuracyReport { points })
}

fn summarize_point(p: f64, mut estimates: Vec<f64>, ci_level: f64) -> AccuracyPoint {
    let n = estimates.len() as f64;
    let mean_estimate = estimates.iter().sum::<f64>() / n;
    let rmse = (estimates.iter().map(|e| (e - p) * (e - p)).sum::<f64>() / n).sqrt();
    estimates.sort_unstable_by(f64::total_cmp);
    let (ci_low, ci_high) = quantile_pair_sorted(&estimates, ci_level);
    AccuracyPoint {
        p,
        rmse,
        eta: rmse / p,
        ci_low,
        ci_high,
        mean_estimate,
    }
}

/// Empirical central interval at the given level: the `(1-level)/2` and
/// `1-(1-level)/2` quantiles, linearly interpolated between order statistics
/// (rank `h = (n-1) * alpha`, the same rule as numpy's default).
pub fn confidence_interval(estimates: &[f64], level: f64) -> Result<(f64, f64), Error> {
    if estimates.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidConfidenceLevel(level));
    }
    let mut sorted = estimates.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    Ok(quantile_pair_sorted(&sorted, level))
}

fn quantile_pair_sorted(sorted: &[f64], level: f64) -> (f64, f64) {
    let tail = 0.5 * (1.0 - level);
    (
        quantile_sorted(sorted, tail),
        quantile_sorted(sorted, 1.0 - tail),
    )
}

fn quantile_sorted(sorted: &[f64], alpha: f64) -> f64 {
    let rank = (sorted.len() - 1) as f64 * alpha;
    let below = rank.floor() as usize;
    let fraction = rank - below as f64;
    if fraction == 0.0 || below + 1 == sorted.len() {
        sorted[below]
    } else {
        sorted[below] + fraction * (sorted[below + 1] - sorted[below])
    }
}

/// Accuracy of the conventional protocol: `samples` individual tests, i.e. a
/// sweep over a design of that many size-1 pools.
pub fn compare_individual_testing(
    samples: u32,
    prevalence_grid: Vec<f64>,
    repetitions: u32,
    seed: u64,
) -> Result<AccuracyReport, Error> {
    let design = PoolDesign::constant(1, samples as usize)?;
    run_sweep(&SweepConfig::new(design, prevalence_grid, repetitions, seed)?)
}

/// `points` log-spaced prevalences from `p_min` to `p_max` inclusive.
pub fn log_spaced_grid(p_min: f64, p_max: f64, points: usize) -> Result<Vec<f64>, Error> {
    if !(p_min > 0.0 && p_min <= p_max && p_max <= 1.0) {
        return Err(Error::InvalidRange { p_min, p_max });
    }
    if points == 0 {
        return Err(Error::EmptyGrid);
    }
    if points == 1 {
        if p_min == p_max {
            return Ok(vec![p_min]);
        }
        return Err(Error::GridTooSmall { p_min, p_max });
    }
    let (log_min, log_max) = (p_min.ln(), p_max.ln());
    let step = (log_max - log_min) / (points - 1) as f64;
    let mut grid: Vec<f64> = (0..points)
        .map(|i| (log_min + step * i as f64).exp())
        .collect();
    grid[0] = p_min;
    grid[points - 1] = p_max;
    Ok(grid)
}

/// Grid size for a density of `per_decade` points per factor of ten, ends
/// included; the default density is 30.
pub fn points_for_decades(p_min: f64, p_max: f64, per_decade: f64) -> Result<usize, Error> {
    if !(p_min > 0.0 && p_min <= p_max && p_max <= 1.0) {
        return Err(Error::InvalidRange { p_min, p_max });
    }
    if !(per_decade > 0.0 && per_decade.is_finite()) {
        return Err(Error::InvalidPointsPerDecade(per_decade));
    }
    if p_min == p_max {
        return Ok(1);
    }
    let decades = (p_max / p_min).log10();
    Ok(((per_decade * decades).round() as usize).max(1) + 1)
}
