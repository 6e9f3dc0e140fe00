//! Timing harness and scaling-law fits for the propagation methods.
//!
//! Measurements time the two reference configurations whose growth
//! exponents are the claims worth checking: the FFT method with
//! full-length transforms (`~ n^2 log n` over a full schedule) and the
//! dense direct recursion (`~ n^3`). Wall time, single-threaded,
//! median over repeats with one discarded warm-up run. The adaptive
//! band-limited path is faster than both on narrow boundaries, which
//! is exactly why it is not the curve to fit an exponent to.

use std::time::Instant;

use crate::boundaries::BoundaryPair;
use crate::engine::{ecdf_noncrossing, EngineOptions, Method};
use crate::error::{Error, Result};

/// One timed method run on one boundary pair.
#[derive(Debug, Clone, Copy)]
pub struct TimedRun {
    pub median_wall_ms: f64,
    pub probability: f64,
    pub log_probability: f64,
    pub checkpoints: usize,
}

fn bench_options(method: Method) -> EngineOptions {
    EngineOptions {
        method,
        // Full-length transforms: the benchmarked FFT configuration
        // keeps the paper-style fixed padding instead of band-limiting.
        force_full_fft: matches!(method, Method::Fft),
        ..Default::default()
    }
}

/// Median wall time of the ECDF non-crossing computation under the
/// given method, with one warm-up run excluded. `repeats >= 3`.
pub fn time_method(bp: &BoundaryPair, method: Method, repeats: usize) -> Result<TimedRun> {
    if repeats < 3 {
        return Err(Error::input("at least 3 repeats required"));
    }
    let opts = bench_options(method);
    let warm = ecdf_noncrossing(bp, &opts)?;
    let mut times_ms = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let start = Instant::now();
        let r = ecdf_noncrossing(bp, &opts)?;
        let elapsed = start.elapsed().as_secs_f64() * 1e3;
        times_ms.push(elapsed.max(1e-6));
        if r.log_probability != warm.log_probability {
            return Err(Error::numerical(
                "non-deterministic result across repeated runs",
            ));
        }
    }
    times_ms.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = times_ms[times_ms.len() / 2];
    Ok(TimedRun {
        median_wall_ms: median,
        probability: warm.probability,
        log_probability: warm.log_probability,
        checkpoints: warm.checkpoints,
    })
}

/// Least-squares fit of `log(time)` against `log(n)`.
#[derive(Debug, Clone)]
pub struct ScalingFit {
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Fit a power law to `(n, median wall time)` points. Needs at least 3
/// points and more than one distinct n.
pub fn fit_scaling(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(Error::input("scaling fit needs at least 3 points"));
    }
    if points
        .iter()
        .any(|&(n, t)| !(n > 0.0) || !(t > 0.0) || !n.is_finite() || !t.is_finite())
    {
        return Err(Error::input("scaling fit needs positive finite points"));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(n, t)| (n.ln(), t.ln())).collect();
    let m = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::input("scaling fit needs more than one distinct n"));
    }
    let sxy: f64 = logs
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(ScalingFit {
        points: points.to_vec(),
        slope,
        intercept,
        r_squared,
    })
}
