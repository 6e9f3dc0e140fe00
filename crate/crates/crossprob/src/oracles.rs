//! Independent slow references: the classical binomial recursion for
//! the empirical CDF and Monte Carlo estimators for both processes.
//!
//! The binomial recursion works directly on the conditional (ECDF)
//! law, stepping with `Binomial(n - l, (t_{i+1} - t_i) / (1 - t_i))`
//! kernels. It shares no arithmetic with the engine: it runs entirely
//! in log domain with log-sum-exp accumulation, so it cross-checks
//! both the propagation and the scale bookkeeping.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::boundaries::{Band, BoundaryPair, CheckpointSchedule};
use crate::engine::NoncrossingResult;
use crate::error::{Error, Result};
use crate::special::ln_factorial;

/// Exact ECDF non-crossing probability by the binomial recursion.
///
/// `O(n^3)` worst case and deliberately simple; no FFT acceleration.
pub fn ecdf_noncrossing_binomial_recursion(bp: &BoundaryPair) -> Result<NoncrossingResult> {
    let n = bp.n();
    let schedule = bp.compile_schedule();
    let checkpoints = schedule.len();
    let zero = |_: usize| {
        Ok(NoncrossingResult {
            probability: 0.0,
            log_probability: f64::NEG_INFINITY,
            checkpoints,
        })
    };

    if !schedule.initial_band().contains(0) {
        return zero(0);
    }

    // ln k! for k = 0..=n, shared by every binomial pmf below.
    let ln_fact: Vec<f64> = (0..=n).map(ln_factorial).collect();
    let ln_binom = |m: u64, j: u64| -> f64 {
        ln_fact[m as usize] - ln_fact[j as usize] - ln_fact[(m - j) as usize]
    };

    // log R over the dense state range [0, n].
    let width = n as usize + 1;
    let mut log_r = vec![f64::NEG_INFINITY; width];
    log_r[0] = 0.0;
    let mut band_prev = Band::new(0, 0);
    let mut t_prev = 0.0f64;
    let mut terms: Vec<f64> = Vec::with_capacity(width);

    for (&t, &raw_band) in schedule.times().iter().zip(schedule.bands()) {
        let band = raw_band.clipped(n as i64);
        if band.is_empty() {
            return zero(0);
        }
        // Success probability of one remaining sample landing in
        // (t_prev, t], given it is beyond t_prev.
        let p = if 1.0 - t_prev > 0.0 {
            ((t - t_prev) / (1.0 - t_prev)).min(1.0)
        } else {
            1.0
        };
        let (ln_p, ln_q) = (p.ln(), (1.0 - p).ln());

        let mut next = vec![f64::NEG_INFINITY; width];
        for m in band.lo..=band.hi {
            let m = m as u64;
            terms.clear();
            let mut max_term = f64::NEG_INFINITY;
            let lo = band_prev.lo.max(0) as u64;
            let hi = (band_prev.hi.min(m as i64)).max(-1);
            if hi < 0 {
                continue;
            }
            for l in lo..=hi as u64 {
                let prev = log_r[l as usize];
                if prev == f64::NEG_INFINITY {
                    continue;
                }
                let remaining = n - l;
                let jump = m - l;
                // ln P(Binomial(remaining, p) = jump)
                let ln_pmf = if p >= 1.0 {
                    if jump == remaining {
                        0.0
                    } else {
                        f64::NEG_INFINITY
                    }
                } else if p <= 0.0 {
                    if jump == 0 {
                        0.0
                    } else {
                        f64::NEG_INFINITY
                    }
                } else {
                    ln_binom(remaining, jump)
                        + jump as f64 * ln_p
                        + (remaining - jump) as f64 * ln_q
                };
                let term = prev + ln_pmf;
                if term > max_term {
                    max_term = term;
                }
                terms.push(term);
            }
            if max_term > f64::NEG_INFINITY {
                let sum: f64 = terms.iter().map(|&x| (x - max_term).exp()).sum();
                next[m as usize] = max_term + sum.ln();
            }
        }
        log_r = next;
        band_prev = band;
        t_prev = t;
    }

    let log_p = log_r[n as usize];
    Ok(NoncrossingResult {
        probability: log_p.exp(),
        log_probability: log_p,
        checkpoints,
    })
}

/// A Monte Carlo estimate with its binomial standard error and the
/// exact reproducibility identity (seed plus generator construction).
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloResult {
    pub estimate: f64,
    pub trials: u64,
    pub std_error: f64,
    pub seed: u64,
    pub generator: &'static str,
}

/// Every trial draws from its own ChaCha12 stream keyed by a SplitMix64
/// mix of (seed, trial index), so results are identical regardless of
/// how trials are scheduled across threads.
const GENERATOR_ID: &str = "chacha12(splitmix64(seed, trial))";

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(splitmix64(seed ^ splitmix64(trial.wrapping_add(1))))
}

fn mc_result(successes: u64, trials: u64, seed: u64) -> MonteCarloResult {
    let estimate = successes as f64 / trials as f64;
    MonteCarloResult {
        estimate,
        trials,
        std_error: (estimate * (1.0 - estimate) / trials as f64).sqrt(),
        seed,
        generator: GENERATOR_ID,
    }
}

/// Does a path with jumps at `jumps` (unsorted uniforms) satisfy every
/// checkpoint band? Counting per checkpoint interval avoids sorting.
fn path_ok(schedule: &CheckpointSchedule, jumps: &[f64], counts: &mut Vec<u64>) -> bool {
    let times = schedule.times();
    counts.clear();
    counts.resize(times.len() + 1, 0);
    let mut zero_count = 0u64;
    for &u in jumps {
        if u == 0.0 {
            zero_count += 1;
        }
        // First checkpoint with t_k >= u: the sample counts from there on.
        let idx = times.partition_point(|&tk| tk < u);
        counts[idx] += 1;
    }
    if !schedule.initial_band().contains(zero_count as i64) {
        return false;
    }
    let mut running = 0u64;
    for (k, &band) in schedule.bands().iter().enumerate() {
        running += counts[k];
        if !band.contains(running as i64) {
            return false;
        }
    }
    true
}

/// Monte Carlo estimate of the ECDF non-crossing probability:
/// `trials` samples of n sorted uniforms, checked at checkpoints only.
pub fn monte_carlo_ecdf(bp: &BoundaryPair, trials: u64, seed: u64) -> Result<MonteCarloResult> {
    if trials == 0 {
        return Err(Error::input("at least one trial required"));
    }
    let n = bp.n();
    let schedule = bp.compile_schedule();
    if schedule.has_empty_band() {
        return Ok(mc_result(0, trials, seed));
    }
    let successes: u64 = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let jumps: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let mut counts = Vec::new();
            u64::from(path_ok(&schedule, &jumps, &mut counts))
        })
        .sum();
    Ok(mc_result(successes, trials, seed))
}

/// Monte Carlo estimate for the Poisson process: unconditional (the
/// jump count is Poisson(n)) or conditional on exactly `k` jumps,
/// which by the order-statistics property are sorted uniforms.
pub fn monte_carlo_poisson(
    bp: &BoundaryPair,
    k_conditioning: Option<u64>,
    trials: u64,
    seed: u64,
) -> Result<MonteCarloResult> {
    if trials == 0 {
        return Err(Error::input("at least one trial required"));
    }
    let n = bp.n();
    let schedule = bp.compile_schedule();
    if schedule.has_empty_band() {
        return Ok(mc_result(0, trials, seed));
    }
    let poisson = Poisson::new(n as f64)
        .map_err(|e| Error::input(format!("invalid Poisson intensity: {e}")))?;
    let successes: u64 = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let count = match k_conditioning {
                Some(k) => k,
                None => poisson.sample(&mut rng) as u64,
            };
            let jumps: Vec<f64> = (0..count).map(|_| rng.random::<f64>()).collect();
            let mut counts = Vec::new();
            u64::from(path_ok(&schedule, &jumps, &mut counts))
        })
        .sum();
    Ok(mc_result(successes, trials, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{ecdf_noncrossing, EngineOptions};

    #[test]
    fn recursion_no_constraints_is_one() {
        for n in [1u64, 4, 17] {
            let bp = BoundaryPair::unconstrained(n);
            let r = ecdf_noncrossing_binomial_recursion(&bp).unwrap();
            assert!((r.probability - 1.0).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn recursion_single_sample_closed_form() {
        // Two-sided band of half-width 0.75 around the diagonal.
        let bp = BoundaryPair::new(1, vec![0.75], 0, vec![0.25]).unwrap();
        let r = ecdf_noncrossing_binomial_recursion(&bp).unwrap();
        assert!((r.probability - 0.5).abs() < 1e-13, "{}", r.probability);
    }

    #[test]
    fn recursion_matches_engine_on_mixed_boundaries() {
        // Cap reaches n by time 1, so the ECDF law is not trivially zero.
        let bp = BoundaryPair::new(
            10,
            vec![0.15, 0.3, 0.3, 0.72],
            6,
            vec![0.25, 0.5, 0.8, 0.9],
        )
        .unwrap();
        let oracle = ecdf_noncrossing_binomial_recursion(&bp).unwrap();
        let engine = ecdf_noncrossing(&bp, &EngineOptions::default()).unwrap();
        let rel = (oracle.log_probability - engine.log_probability).abs();
        assert!(
            rel < 1e-11,
            "oracle {} vs engine {}",
            oracle.log_probability,
            engine.log_probability
        );
    }

    #[test]
    fn recursion_empty_band_is_zero() {
        let bp = BoundaryPair::new(4, vec![0.1, 0.1], 1, vec![]).unwrap();
        let r = ecdf_noncrossing_binomial_recursion(&bp).unwrap();
        assert_eq!(r.probability, 0.0);
    }

    #[test]
    fn recursion_over_demanding_lower_boundary_is_zero() {
        // More required jumps than samples: a > n.
        let bp = BoundaryPair::new(2, vec![0.2, 0.4, 0.6], 90, vec![]).unwrap();
        let r = ecdf_noncrossing_binomial_recursion(&bp).unwrap();
        assert_eq!(r.probability, 0.0);
    }

    #[test]
    fn mc_no_constraints_is_exactly_one() {
        let bp = BoundaryPair::unconstrained(5);
        let r = monte_carlo_ecdf(&bp, 2000, 7).unwrap();
        assert_eq!(r.estimate, 1.0);
        assert_eq!(r.std_error, 0.0);
        let r = monte_carlo_poisson(&bp, Some(9), 2000, 7).unwrap();
        assert_eq!(r.estimate, 1.0);
    }

    #[test]
    fn mc_empty_band_is_exactly_zero() {
        let bp = BoundaryPair::new(3, vec![0.5, 0.5, 0.5, 0.5], 2, vec![]).unwrap();
        let r = monte_carlo_ecdf(&bp, 1000, 3).unwrap();
        assert_eq!(r.estimate, 0.0);
    }

    #[test]
    fn mc_ecdf_single_sample_closed_form() {
        let bp = BoundaryPair::new(1, vec![0.75], 0, vec![0.25]).unwrap();
        let r = monte_carlo_ecdf(&bp, 1_000_000, 42).unwrap();
        assert!(
            (r.estimate - 0.5).abs() <= 3.0 * 0.0005,
            "estimate {}",
            r.estimate
        );
        assert!((r.std_error - 0.0005).abs() < 5e-5);
    }

    #[test]
    fn mc_poisson_unconditional_cap_zero() {
        // Cap 0 allows no jumps at all: P = e^{-n}.
        let n = 2u64;
        let bp = BoundaryPair::new(n, vec![], 0, vec![]).unwrap();
        let r = monte_carlo_poisson(&bp, None, 200_000, 11).unwrap();
        let want = (-(n as f64)).exp();
        let sigma = (want * (1.0 - want) / 200_000.0).sqrt();
        assert!(
            (r.estimate - want).abs() <= 4.0 * sigma,
            "estimate {} want {want}",
            r.estimate
        );
    }

    #[test]
    fn mc_poisson_single_lower_crossing_analytic() {
        let n = 2u64;
        let bp = BoundaryPair::new(n, vec![0.5], i64::MAX / 2, vec![]).unwrap();
        let want = 1.0 - (-1.0f64).exp();
        let r = monte_carlo_poisson(&bp, None, 200_000, 19).unwrap();
        let sigma = (want * (1.0 - want) / 200_000.0).sqrt();
        assert!(
            (r.estimate - want).abs() <= 4.0 * sigma,
            "estimate {} want {want}",
            r.estimate
        );
    }

    #[test]
    fn mc_is_deterministic_for_a_seed() {
        let bp = BoundaryPair::new(6, vec![0.3, 0.6], 3, vec![0.4, 0.5, 0.7]).unwrap();
        let a = monte_carlo_ecdf(&bp, 50_000, 123).unwrap();
        let b = monte_carlo_ecdf(&bp, 50_000, 123).unwrap();
        assert_eq!(a, b);
        let c = monte_carlo_ecdf(&bp, 50_000, 124).unwrap();
        assert_ne!(a.estimate, c.estimate);
    }

    #[test]
    fn mc_agrees_with_engine_on_moderate_case() {
        let bp = BoundaryPair::new(12, vec![0.2, 0.45, 0.7], 3, vec![0.35, 0.75]).unwrap();
        let exact = ecdf_noncrossing(&bp, &EngineOptions::default()).unwrap();
        let mc = monte_carlo_ecdf(&bp, 200_000, 5).unwrap();
        let sigma = (exact.probability * (1.0 - exact.probability) / 200_000.0).sqrt();
        assert!(
            (mc.estimate - exact.probability).abs() <= 4.0 * sigma,
            "mc {} exact {}",
            mc.estimate,
            exact.probability
        );
    }
}
