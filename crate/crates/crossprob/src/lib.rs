//! Exact boundary non-crossing probabilities for Poisson processes and
//! the uniform empirical CDF.
//!
//! Given monotone step boundaries `g(t) < h(t)` on `[0, 1]`, encoded by
//! their integer-crossing times, this crate computes
//!
//! * `P(forall t: g(t) < xi_n(t) < h(t))` for a homogeneous Poisson
//!   process `xi_n` of intensity `n`, unconditionally or conditioned on
//!   the terminal count `xi_n(1) = k`, and
//! * the equivalent probability for the scaled empirical CDF
//!   `n F_n(t)` of `n` uniform samples, which is the conditional
//!   Poisson probability at `k = n`.
//!
//! The core is a checkpoint propagation of the state distribution,
//! where each step is a truncated linear convolution with a Poisson
//! kernel. Convolutions run either through a band-limited real FFT
//! (`O(n^2 log n)` worst case over a full schedule) or as the classical
//! dense recursion (`O(n^3)`), which doubles as a cross-check. Slow
//! reference oracles (a binomial recursion on the empirical CDF and
//! Monte Carlo samplers) validate both. A goodness-of-fit layer turns
//! supremum-type statistics (Kolmogorov-Smirnov, Berk-Jones, Higher
//! Criticism) into boundary pairs and exact p-values.
//!
//! All probability vectors carry an explicit natural-log scale factor,
//! so propagation stays finite far past the range where the raw
//! probabilities underflow `f64`.

pub mod bench;
pub mod boundaries;
pub mod convolution;
pub mod engine;
mod error;
pub mod gof;
pub mod oracles;
mod special;

pub use error::{Error, Result};
