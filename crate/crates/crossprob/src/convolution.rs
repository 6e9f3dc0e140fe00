//! Truncated linear convolution of probability vectors with Poisson
//! kernels.
//!
//! Each propagation step multiplies the current state distribution by
//! a Poisson transition kernel and keeps only an allowed band of
//! output states. For wide bands the convolution runs through a
//! zero-padded real FFT (circular convolution theorem); for narrow
//! bands an exact direct double loop wins. Both paths agree to
//! around 1e-12 relative.
//!
//! All vectors carry a base-e log scale factor so that repeated
//! convolutions never underflow: the true probability of state `m` is
//! `values[m - offset] * exp(log_scale)`.

use std::cell::RefCell;

use realfft::num_complex::Complex;
use realfft::RealFftPlanner;

use crate::error::{Error, Result};
use crate::special::ln_poisson_pmf;

/// Per-step kernel truncation: the kernel is cut where the neglected
/// right tail is provably below this fraction of the kernel mass. Each
/// propagation step therefore underestimates the true probability by
/// at most this much, relatively.
pub const KERNEL_TAIL_EPSILON: f64 = 1e-17;

/// A non-negative vector over a contiguous range of integer states,
/// with an explicit log scale factor.
///
/// Normalization policy: after construction through [`renormalize`],
/// the maximum entry lies in `[0.5, 2]`, or the vector is the
/// canonical zero (empty values), which flags an exactly-zero
/// downstream probability.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledProbVector {
    offset: i64,
    values: Vec<f64>,
    log_scale: f64,
}

impl ScaledProbVector {
    pub fn new(offset: i64, values: Vec<f64>, log_scale: f64) -> Self {
        debug_assert!(offset >= 0);
        ScaledProbVector {
            offset,
            values,
            log_scale,
        }
    }

    /// The canonical exactly-zero vector.
    pub fn zero() -> Self {
        ScaledProbVector {
            offset: 0,
            values: Vec::new(),
            log_scale: f64::NEG_INFINITY,
        }
    }

    /// Unit mass on a single state.
    pub fn point_mass(state: i64) -> Self {
        ScaledProbVector {
            offset: state,
            values: vec![1.0],
            log_scale: 0.0,
        }
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// True when the vector carries no mass at all.
    pub fn is_zero(&self) -> bool {
        self.values.is_empty() || self.values.iter().all(|&v| v == 0.0)
    }

    /// Reconstructed probability of state `m`.
    pub fn reconstructed(&self, m: i64) -> f64 {
        self.log_value(m).exp()
    }

    /// `ln` of the probability of state `m`, or `-inf`.
    pub fn log_value(&self, m: i64) -> f64 {
        if m < self.offset {
            return f64::NEG_INFINITY;
        }
        let idx = (m - self.offset) as usize;
        match self.values.get(idx) {
            Some(&v) if v > 0.0 => v.ln() + self.log_scale,
            _ => f64::NEG_INFINITY,
        }
    }

    /// `ln` of the total mass.
    pub fn log_total(&self) -> f64 {
        let sum: f64 = self.values.iter().sum();
        if sum > 0.0 {
            sum.ln() + self.log_scale
        } else {
            f64::NEG_INFINITY
        }
    }

    /// Reconstructed total mass.
    pub fn total_mass(&self) -> f64 {
        self.log_total().exp()
    }
}

/// Point masses of a Poisson(lambda) variable on `0..len`, with its
/// own log scale (the mode is seeded in log domain for large lambda,
/// where `e^{-lambda}` alone would underflow everything).
#[derive(Debug, Clone)]
pub struct PoissonKernel {
    lambda: f64,
    values: Vec<f64>,
    log_scale: f64,
}

impl PoissonKernel {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Reconstructed pmf entry at k.
    pub fn reconstructed(&self, k: usize) -> f64 {
        match self.values.get(k) {
            Some(&v) => v * self.log_scale.exp(),
            None => 0.0,
        }
    }
}

/// Threshold above which the kernel is seeded in log domain instead of
/// through the forward recurrence from `e^{-lambda}`.
const LOG_SEED_LAMBDA: f64 = 700.0;

/// Poisson(lambda) pmf truncated to `length` entries.
///
/// For moderate lambda this is the stable forward recurrence
/// `p_0 = e^{-lambda}`, `p_{k+1} = p_k * lambda / (k + 1)`. Past
/// `lambda = 700` the recurrence is seeded at the mode in log domain
/// and run outward with exact ratio updates.
pub fn poisson_kernel(lambda: f64, length: usize) -> Result<PoissonKernel> {
    if !(lambda >= 0.0) {
        return Err(Error::input(format!("negative or NaN lambda: {lambda}")));
    }
    if length == 0 {
        return Err(Error::input("kernel length must be positive"));
    }
    let mut values = vec![0.0f64; length];
    let log_scale;
    if lambda <= LOG_SEED_LAMBDA {
        log_scale = 0.0;
        values[0] = (-lambda).exp();
        for k in 1..length {
            values[k] = values[k - 1] * lambda / k as f64;
        }
    } else {
        let mode = (lambda.floor() as usize).min(length - 1);
        log_scale = ln_poisson_pmf(lambda, mode as u64);
        values[mode] = 1.0;
        for k in (0..mode).rev() {
            values[k] = values[k + 1] * (k + 1) as f64 / lambda;
        }
        for k in mode + 1..length {
            values[k] = values[k - 1] * lambda / k as f64;
        }
    }
    Ok(PoissonKernel {
        lambda,
        values,
        log_scale,
    })
}

/// Length at which the Poisson(lambda) right tail beyond the kernel is
/// provably below [`KERNEL_TAIL_EPSILON`] of the total mass.
pub fn kernel_tail_len(lambda: f64) -> usize {
    if lambda <= 0.0 {
        return 1;
    }
    if lambda <= LOG_SEED_LAMBDA {
        // Walk the recurrence; past the mode the tail is dominated by a
        // geometric series with ratio lambda / (k + 1).
        let mut p = (-lambda).exp();
        let mut k = 0usize;
        loop {
            if k as f64 >= lambda {
                let ratio = lambda / (k + 2) as f64;
                let tail_bound = p * ratio / (1.0 - ratio);
                if tail_bound < KERNEL_TAIL_EPSILON {
                    return k + 1;
                }
            }
            k += 1;
            p *= lambda / k as f64;
            if k > 4000 {
                return k;
            }
        }
    } else {
        // Bennett-style bound: 12 standard deviations past the mean
        // leaves far less than 1e-17 of the mass for lambda > 700.
        (lambda + 12.0 * lambda.sqrt() + 40.0).ceil() as usize
    }
}

/// How a convolution step chooses its implementation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvolveMode {
    /// Direct double loop at or below the band-width crossover, FFT above.
    Adaptive { crossover: usize },
    /// Always the FFT path, regardless of band width.
    ForceFft,
}

/// Default band-width crossover between the direct and FFT paths.
pub const DEFAULT_CROSSOVER: usize = 64;

impl Default for ConvolveMode {
    fn default() -> Self {
        ConvolveMode::Adaptive {
            crossover: DEFAULT_CROSSOVER,
        }
    }
}

/// Inclusive output band of a truncated convolution.
#[derive(Debug, Clone, Copy)]
pub struct OutBand {
    pub lo: i64,
    pub hi: i64,
}

/// Truncated linear convolution: returns `r` with
/// `r[m] = sum_l q[l] * kernel[m - l]` for `m` in the output band,
/// zero implied elsewhere. Kernel entries past its truncated length
/// are treated as zero.
///
/// States never decrease, so `band.lo >= q.offset()` is required.
pub fn truncated_convolve(
    q: &ScaledProbVector,
    kernel: &PoissonKernel,
    band: OutBand,
    mode: ConvolveMode,
) -> Result<ScaledProbVector> {
    if band.lo > band.hi {
        return Ok(ScaledProbVector::zero());
    }
    if q.is_zero() {
        return Ok(ScaledProbVector::zero());
    }
    if band.lo < q.offset() {
        return Err(Error::input(format!(
            "output band starts at {} below the input offset {}",
            band.lo,
            q.offset()
        )));
    }
    if !q.values().iter().all(|v| v.is_finite()) || !q.log_scale().is_finite() {
        return Err(Error::input("non-finite input vector"));
    }

    // Reachable output range given the truncated kernel.
    let reach_hi = q.offset() + (q.len() as i64 - 1) + (kernel.len() as i64 - 1);
    let out_lo = band.lo;
    let out_hi = band.hi.min(reach_hi);
    if out_lo > out_hi {
        return Ok(ScaledProbVector::zero());
    }
    let out_len = (out_hi - out_lo + 1) as usize;

    let use_fft = match mode {
        ConvolveMode::ForceFft => true,
        ConvolveMode::Adaptive { crossover } => out_len > crossover && kernel.len() > 1,
    };

    let lo_rel = (out_lo - q.offset()) as usize;
    let out_values = if use_fft {
        let full = fft_convolve(q.values(), kernel.values())?;
        // Inverse-transform noise can leave small negatives; clamp the
        // harmless ones, reject anything that signals real trouble.
        // Noise scales with the whole convolution, not the extracted
        // band, so the threshold anchors at the full output maximum.
        let full_max = full.iter().cloned().fold(0.0f64, f64::max);
        let floor = -1e-10 * full_max.max(f64::MIN_POSITIVE);
        let mut out = full[lo_rel..lo_rel + out_len].to_vec();
        for v in &mut out {
            if *v < 0.0 {
                if *v < floor {
                    return Err(Error::numerical(format!(
                        "FFT convolution produced a negative value {} (output max {})",
                        *v, full_max
                    )));
                }
                *v = 0.0;
            }
        }
        out
    } else {
        direct_convolve(q.values(), kernel.values(), lo_rel, out_len)
    };

    let raw = ScaledProbVector::new(out_lo, out_values, q.log_scale() + kernel.log_scale());
    Ok(renormalize(raw))
}

/// Exact double-loop truncated convolution; `lo_rel` is the first
/// output index relative to the input's offset.
fn direct_convolve(q: &[f64], kernel: &[f64], lo_rel: usize, out_len: usize) -> Vec<f64> {
    let mut out = vec![0.0f64; out_len];
    for (j, slot) in out.iter_mut().enumerate() {
        let m = lo_rel + j;
        let l_min = (m + 1).saturating_sub(kernel.len());
        let l_max = m.min(q.len() - 1);
        let mut acc = 0.0;
        for l in l_min..=l_max {
            acc += q[l] * kernel[m - l];
        }
        *slot = acc;
    }
    out
}

/// Rescale so the maximum entry lies in `[0.5, 2]`, folding the factor
/// into the log scale. All-zero vectors collapse to the canonical zero.
pub fn renormalize(q: ScaledProbVector) -> ScaledProbVector {
    let max = q.values().iter().cloned().fold(0.0f64, f64::max);
    if max == 0.0 {
        return ScaledProbVector::zero();
    }
    if (0.5..=2.0).contains(&max) {
        return q;
    }
    let ScaledProbVector {
        offset,
        mut values,
        log_scale,
    } = q;
    // True division: the maximum lands on exactly 1.
    for v in &mut values {
        *v /= max;
    }
    ScaledProbVector::new(offset, values, log_scale + max.ln())
}

thread_local! {
    static PLANNER: RefCell<RealFftPlanner<f64>> = RefCell::new(RealFftPlanner::new());
}

/// Smallest transform size of the form `2^a` or `3 * 2^a` at or above n.
pub fn next_fast_len(n: usize) -> usize {
    if n <= 2 {
        return 2;
    }
    let mut p = 2usize;
    loop {
        if p >= n {
            return p;
        }
        let q = p + (p >> 1);
        if q >= n {
            return q;
        }
        p <<= 1;
    }
}

/// Full linear convolution via zero-padded real FFT. The plan cache is
/// per-thread, keyed by transform length inside the planner.
fn fft_convolve(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let lin_len = a.len() + b.len() - 1;
    let size = next_fast_len(lin_len);
    PLANNER.with(|planner| {
        let mut planner = planner.borrow_mut();
        let r2c = planner.plan_fft_forward(size);
        let c2r = planner.plan_fft_inverse(size);

        let mut buf_a = vec![0.0f64; size];
        buf_a[..a.len()].copy_from_slice(a);
        let mut spec_a = vec![Complex::default(); size / 2 + 1];
        r2c.process(&mut buf_a, &mut spec_a)
            .map_err(|e| Error::numerical(format!("forward FFT failed: {e}")))?;

        let mut buf_b = vec![0.0f64; size];
        buf_b[..b.len()].copy_from_slice(b);
        let mut spec_b = vec![Complex::default(); size / 2 + 1];
        r2c.process(&mut buf_b, &mut spec_b)
            .map_err(|e| Error::numerical(format!("forward FFT failed: {e}")))?;

        for (sa, sb) in spec_a.iter_mut().zip(&spec_b) {
            *sa *= sb;
        }

        let mut out = vec![0.0f64; size];
        c2r.process(&mut spec_a, &mut out)
            .map_err(|e| Error::numerical(format!("inverse FFT failed: {e}")))?;
        let scale = 1.0 / size as f64;
        out.truncate(lin_len);
        for v in &mut out {
            *v *= scale;
        }
        Ok(out)
    })
}
