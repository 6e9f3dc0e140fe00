//! Shared helpers for the integration suites: seeded random boundary
//! pairs in the styles the library meets in practice, and log-domain
//! comparison utilities.

#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crossprob::boundaries::BoundaryPair;
use crossprob::gof::{StatisticKind, StatisticSpec};

pub fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// A random boundary pair with n in `2..=n_max`. Styles rotate through
/// calibrated two-sided bands, loose random steps, and one-sided
/// shapes; demands are kept mild (no single step asks for an extreme
/// jump), matching the statistic-derived boundaries the library is
/// built for.
pub fn random_pair(rng: &mut ChaCha12Rng, n_max: u64) -> BoundaryPair {
    let n = rng.random_range(2..=n_max);
    match rng.random_range(0..4u32) {
        0 => ks_style(rng, n),
        1 => stepped(rng, n),
        2 => one_sided_lower(rng, n),
        _ => one_sided_upper(rng, n),
    }
}

/// Boundaries inverted from a two-sided KS threshold: the realistic
/// goodness-of-fit shape.
pub fn ks_style(rng: &mut ChaCha12Rng, n: u64) -> BoundaryPair {
    let t = rng.random_range(0.45..2.4);
    StatisticSpec::new(StatisticKind::KsTwoSided, n)
        .unwrap()
        .boundaries_from_threshold(t)
        .unwrap()
}

/// Random mild step boundaries around the diagonal.
pub fn stepped(rng: &mut ChaCha12Rng, n: u64) -> BoundaryPair {
    let slack = rng.random_range(1..=(n / 4).max(2)) as f64;
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for i in 1..=n {
        // Lower crossing for level i somewhat after the diagonal time,
        // upper rise somewhat before it.
        let lo_t = (i as f64 + slack + rng.random_range(0.0..slack)) / n as f64;
        if lo_t < 1.0 {
            lower.push(lo_t);
        }
        let up_t = (i as f64 - slack - rng.random_range(0.0..slack)) / n as f64;
        if up_t > 0.0 {
            upper.push(up_t);
        }
    }
    lower.sort_by(|a, b| a.partial_cmp(b).unwrap());
    upper.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let c0 = (n as i64 - upper.len() as i64).max(0);
    BoundaryPair::new(n, lower, c0, upper).unwrap()
}

/// Only a lower boundary: the path must climb through a random set of
/// levels in time.
pub fn one_sided_lower(rng: &mut ChaCha12Rng, n: u64) -> BoundaryPair {
    let count = rng.random_range(1..=n);
    let mut lower: Vec<f64> = (0..count)
        .map(|_| rng.random_range(0.0..1.0f64))
        .collect();
    lower.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // Spread the demands out: level i must only be reached after its
    // own quantile-ish time, scaled to stay satisfiable most runs.
    for (i, t) in lower.iter_mut().enumerate() {
        *t = (*t * (i as f64 + 1.0) / count as f64).min(1.0);
    }
    lower.sort_by(|a, b| a.partial_cmp(b).unwrap());
    BoundaryPair::new(n, lower, i64::MAX / 2, vec![]).unwrap()
}

/// Only an upper boundary: a cap that starts low and rises back to at
/// least n, so the ECDF law is not trivially zero.
pub fn one_sided_upper(rng: &mut ChaCha12Rng, n: u64) -> BoundaryPair {
    let c0 = rng.random_range(0..=(n / 2).max(1)) as i64;
    let rises = (n as i64 - c0) as u64 + rng.random_range(0..3);
    let mut upper: Vec<f64> = (0..rises)
        .map(|_| rng.random_range(0.0f64..1.0).powf(0.8))
        .collect();
    upper.retain(|&t| t > 0.0);
    upper.sort_by(|a, b| a.partial_cmp(b).unwrap());
    BoundaryPair::new(n, vec![], c0, upper).unwrap()
}

/// Absolute difference of two log probabilities; 0 when both are
/// exactly zero probability, infinite when only one is.
pub fn log_diff(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY && b == f64::NEG_INFINITY {
        0.0
    } else {
        (a - b).abs()
    }
}
