//! Checkpoint propagation of the joint "still inside the boundaries"
//! state distribution, and the non-crossing probability readouts.
//!
//! Starting from unit mass on state 0 at time 0, each consecutive pair
//! of checkpoints contributes a Poisson kernel of intensity
//! `n * (t_{i+1} - t_i)`; states outside the allowed band at `t_{i+1}`
//! are zeroed. The terminal vector holds `Q(1, m)`: the probability of
//! never leaving the bands while ending in state `m`.
//!
//! Two methods compute the same recursion:
//!
//! * `Fft` — band-limited truncated convolutions, switching to direct
//!   sums below a width crossover. Worst case `O(n^2 log n)` over a
//!   full schedule, much less when the boundaries are close.
//! * `Direct` — the classical dense recursion over the whole state
//!   range, each entry an explicit sum: `O(n^3)` over a full schedule.
//!   It is deliberately literal; it doubles as a structurally
//!   different cross-check and as the reference baseline for scaling
//!   benchmarks.
//!
//! Everything is carried with explicit log scale factors; the single
//! `exp` happens at the public API boundary.

use crate::boundaries::{Band, BoundaryPair, CheckpointSchedule};
use crate::convolution::{
    kernel_tail_len, next_fast_len, poisson_kernel, renormalize, truncated_convolve, ConvolveMode,
    OutBand, ScaledProbVector, DEFAULT_CROSSOVER,
};
use crate::error::{Error, Result};
use crate::special::ln_poisson_pmf;

/// Which propagation implementation to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Fft,
    Direct,
}

#[derive(Debug, Clone, Copy)]
pub struct EngineOptions {
    pub method: Method,
    /// Force full-width, full-length FFT steps sized from the whole
    /// state range instead of the active band. Probabilities are
    /// unchanged; only the work per step grows. Useful for
    /// benchmarking against the band-limited path.
    pub force_full_fft: bool,
    /// Band width at or below which the adaptive path uses direct
    /// sums instead of an FFT.
    pub crossover: usize,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            method: Method::Fft,
            force_full_fft: false,
            crossover: DEFAULT_CROSSOVER,
        }
    }
}

impl EngineOptions {
    pub fn with_method(method: Method) -> Self {
        EngineOptions {
            method,
            ..Default::default()
        }
    }
}

/// Outcome of a propagation run.
#[derive(Debug, Clone)]
pub struct PropagationResult {
    final_vector: ScaledProbVector,
    steps: usize,
    work_profile: Vec<usize>,
}

impl PropagationResult {
    fn zero(steps: usize, work_profile: Vec<usize>) -> Self {
        PropagationResult {
            final_vector: ScaledProbVector::zero(),
            steps,
            work_profile,
        }
    }

    /// `Q(1, m)` for m in the terminal band, log-scaled.
    pub fn final_vector(&self) -> &ScaledProbVector {
        &self.final_vector
    }

    /// `ln Q(1, k)`, or `-inf` when the state carries no mass.
    pub fn log_prob_terminal(&self, k: u64) -> f64 {
        self.final_vector.log_value(k as i64)
    }

    /// `ln` of the total terminal mass.
    pub fn log_total(&self) -> f64 {
        self.final_vector.log_total()
    }

    pub fn is_zero(&self) -> bool {
        self.final_vector.is_zero()
    }

    /// Number of convolution steps performed.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Per-step work metric: the transform size for FFT steps, the
    /// multiply-add count for direct ones.
    pub fn work_profile(&self) -> &[usize] {
        &self.work_profile
    }
}

/// States above `n + 12 sqrt(n) + 40` hold less than ~1e-17 of the
/// mass of any admissible path distribution; dense storage stops there
/// when no tighter cap applies.
fn natural_state_bound(n: u64) -> i64 {
    let nf = n as f64;
    (nf + 12.0 * nf.sqrt() + 40.0).ceil() as i64
}

fn effective_band(band: Band, state_cap: Option<i64>) -> Band {
    match state_cap {
        Some(cap) => band.clipped(cap),
        None => Band::new(band.lo.max(0), band.hi),
    }
}

/// Propagate the full (uncapped) state distribution through the
/// schedule.
pub fn propagate(
    n: u64,
    schedule: &CheckpointSchedule,
    opts: &EngineOptions,
) -> Result<PropagationResult> {
    propagate_capped(n, schedule, opts, None)
}

/// Propagation with an optional hard state cap. Capping at `k` is
/// exact for any terminal readout at or below `k`: the path is
/// monotone, so states above the cap can never return.
pub(crate) fn propagate_capped(
    n: u64,
    schedule: &CheckpointSchedule,
    opts: &EngineOptions,
    state_cap: Option<i64>,
) -> Result<PropagationResult> {
    if !effective_band(schedule.initial_band(), state_cap).contains(0) {
        return Ok(PropagationResult::zero(0, Vec::new()));
    }
    match opts.method {
        Method::Direct => propagate_dense(n, schedule, state_cap, false),
        Method::Fft => {
            if opts.force_full_fft {
                propagate_dense(n, schedule, state_cap, true)
            } else {
                propagate_banded(n, schedule, opts.crossover, state_cap)
            }
        }
    }
}

/// Band-limited propagation; each step's support is the allowed band
/// intersected with the reachable range.
fn propagate_banded(
    n: u64,
    schedule: &CheckpointSchedule,
    crossover: usize,
    state_cap: Option<i64>,
) -> Result<PropagationResult> {
    let mut q = ScaledProbVector::point_mass(0);
    let mut work = Vec::with_capacity(schedule.len());
    let mut t_prev = 0.0f64;
    let mode = ConvolveMode::Adaptive { crossover };

    for (step, (&t, &band)) in schedule.times().iter().zip(schedule.bands()).enumerate() {
        let band = effective_band(band, state_cap);
        if band.is_empty() {
            return Ok(PropagationResult::zero(step, work));
        }
        let lambda = n as f64 * (t - t_prev);
        let tail = kernel_tail_len(lambda);
        let out_lo = band.lo.max(q.offset());
        let out_hi = band.hi.min(q.offset() + q.len() as i64 - 1 + tail as i64 - 1);
        if out_lo > out_hi {
            // Either every surviving state already exceeds the cap, or
            // the band demands a jump beyond the kernel tail cutoff.
            return Ok(PropagationResult::zero(step, work));
        }
        let klen = tail.min((out_hi - q.offset()) as usize + 1);
        let kernel = poisson_kernel(lambda, klen)?;
        let out_len = (out_hi - out_lo + 1) as usize;
        work.push(if out_len > crossover && klen > 1 {
            next_fast_len(q.len() + klen - 1)
        } else {
            out_len * klen.min(q.len())
        });
        q = truncated_convolve(
            &q,
            &kernel,
            OutBand {
                lo: out_lo,
                hi: out_hi,
            },
            mode,
        )?;
        if q.is_zero() {
            return Ok(PropagationResult::zero(step + 1, work));
        }
        t_prev = t;
    }
    Ok(PropagationResult {
        final_vector: q,
        steps: schedule.len(),
        work_profile: work,
    })
}

/// Dense propagation over the whole state range `[0, cap]`.
///
/// With `full_fft` unset this is the literal direct recursion: each
/// allowed entry is an explicit sum over every lower state. With
/// `full_fft` set, each step is one full-width FFT convolution sized
/// from the whole range (the kernel is zero-padded to full length so
/// the transform size never shrinks with the band).
fn propagate_dense(
    n: u64,
    schedule: &CheckpointSchedule,
    state_cap: Option<i64>,
    full_fft: bool,
) -> Result<PropagationResult> {
    let terminal_hi = schedule.bands().last().map(|b| b.hi).unwrap_or(0);
    let cap = natural_state_bound(n)
        .min(terminal_hi)
        .min(state_cap.unwrap_or(i64::MAX));
    if cap < 0 {
        return Ok(PropagationResult::zero(0, Vec::new()));
    }
    let width = cap as usize + 1;

    let mut values = vec![0.0f64; width];
    values[0] = 1.0;
    let mut log_scale = 0.0f64;
    let mut work = Vec::with_capacity(schedule.len());
    let mut t_prev = 0.0f64;

    for (step, (&t, &band)) in schedule.times().iter().zip(schedule.bands()).enumerate() {
        let band = effective_band(band, state_cap).clipped(cap);
        if band.is_empty() {
            return Ok(PropagationResult::zero(step, work));
        }
        let lambda = n as f64 * (t - t_prev);
        let kernel = poisson_kernel(lambda, width)?;

        let next = if full_fft {
            let q = ScaledProbVector::new(0, values, log_scale);
            work.push(next_fast_len(2 * width - 1));
            let mut r = truncated_convolve(
                &q,
                &kernel,
                OutBand { lo: 0, hi: cap },
                ConvolveMode::ForceFft,
            )?;
            r = zero_outside_band(r, band, width);
            r
        } else {
            let mut out = vec![0.0f64; width];
            let mut macs = 0usize;
            for m in band.lo as usize..=band.hi as usize {
                let mut acc = 0.0;
                for (l, &ql) in values.iter().enumerate().take(m + 1) {
                    acc += ql * kernel.values()[m - l];
                }
                macs += m + 1;
                out[m] = acc;
            }
            work.push(macs);
            renormalize(ScaledProbVector::new(
                0,
                out,
                log_scale + kernel.log_scale(),
            ))
        };
        if next.is_zero() {
            return Ok(PropagationResult::zero(step + 1, work));
        }
        debug_assert_eq!(next.offset(), 0);
        values = next.values().to_vec();
        values.resize(width, 0.0);
        log_scale = next.log_scale();
        t_prev = t;
    }
    Ok(PropagationResult {
        final_vector: renormalize(ScaledProbVector::new(0, values, log_scale)),
        steps: schedule.len(),
        work_profile: work,
    })
}

/// Zero entries outside the band and restore dense `[0, width)` form.
fn zero_outside_band(v: ScaledProbVector, band: Band, width: usize) -> ScaledProbVector {
    let mut dense = vec![0.0f64; width];
    for (i, &x) in v.values().iter().enumerate() {
        let m = v.offset() + i as i64;
        if band.contains(m) && (m as usize) < width {
            dense[m as usize] = x;
        }
    }
    renormalize(ScaledProbVector::new(0, dense, v.log_scale()))
}

/// A non-crossing probability together with its natural log, which
/// stays meaningful long after the linear value underflows.
#[derive(Debug, Clone, Copy)]
pub struct NoncrossingResult {
    pub probability: f64,
    pub log_probability: f64,
    /// Number of checkpoints in the compiled schedule.
    pub checkpoints: usize,
}

/// Convert a log probability to the reported pair, with the sanity
/// check that it does not meaningfully exceed 1.
fn finish(log_p: f64, checkpoints: usize) -> Result<NoncrossingResult> {
    let p = log_p.exp();
    if p > 1.0 + 1e-9 {
        return Err(Error::numerical(format!(
            "probability {p} exceeds 1 beyond tolerance"
        )));
    }
    if p >= 1.0 {
        return Ok(NoncrossingResult {
            probability: 1.0,
            log_probability: 0.0,
            checkpoints,
        });
    }
    Ok(NoncrossingResult {
        probability: p,
        log_probability: log_p,
        checkpoints,
    })
}

/// `P(forall t: path stays within the bands)` for the Poisson process
/// of intensity `n`: the total terminal mass.
pub fn poisson_noncrossing_unconditional(
    bp: &BoundaryPair,
    opts: &EngineOptions,
) -> Result<NoncrossingResult> {
    let schedule = bp.compile_schedule();
    let r = propagate_capped(bp.n(), &schedule, opts, None)?;
    finish(r.log_total(), schedule.len())
}

/// `P(forall t: path stays within the bands | xi_n(1) = k)`, computed
/// as `Q(1, k) / P(Poisson(n) = k)` in log domain.
pub fn poisson_noncrossing_conditional(
    bp: &BoundaryPair,
    k: u64,
    opts: &EngineOptions,
) -> Result<NoncrossingResult> {
    let schedule = bp.compile_schedule();
    let r = propagate_capped(bp.n(), &schedule, opts, Some(k as i64))?;
    let log_q = r.log_prob_terminal(k);
    let log_pmf = ln_poisson_pmf(bp.n() as f64, k);
    finish(log_q - log_pmf, schedule.len())
}

/// Non-crossing probability of the scaled empirical CDF of `n` uniform
/// samples: the conditional Poisson probability at `k = n`.
pub fn ecdf_noncrossing(bp: &BoundaryPair, opts: &EngineOptions) -> Result<NoncrossingResult> {
    poisson_noncrossing_conditional(bp, bp.n(), opts)
}
