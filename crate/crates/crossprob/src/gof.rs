//! Goodness-of-fit front end: supremum-type statistics on transformed
//! samples, threshold inversion into boundary pairs, and exact
//! p-values through the engine.
//!
//! A statistic is built from per-index families `r_i` (increasing in
//! the order statistic) and `s_i` (decreasing): `T < t` exactly when
//! `s_i^{-1}(t) < u_(i) < r_i^{-1}(t)` for every i, which is a
//! two-sided boundary condition on the scaled empirical CDF. The
//! p-value of `T = t` is one minus that non-crossing probability.
//!
//! Threshold inversions are clipped to `[0, 1]`. For the upper-limit
//! family a value below 0 is an impossible demand (probability zero),
//! above 1 a vacuous one; for the lower-limit family it is the other
//! way around. Both ends land on the right behavior through the clip.
//!
//! The Berk-Jones families are realized through regularized
//! incomplete-beta tail levels of `u_(i) ~ Beta(i, n-i+1)`:
//! `s_i(u) = -ln I_u(i, n-i+1)` and `r_i(u)` the same on the upper
//! tail. Higher Criticism is the one-sided standardized family
//! `s_i(u) = sqrt(n) (i/n - u) / sqrt(u(1-u))`, inverted through its
//! quadratic.

use std::fmt;
use std::str::FromStr;

use crate::boundaries::BoundaryPair;
use crate::engine::{ecdf_noncrossing, EngineOptions, Method};
use crate::error::{Error, Result};
use crate::special::{beta_reg, beta_reg_inv};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatisticKind {
    KsTwoSided,
    KsPlus,
    KsMinus,
    BerkJonesTwoSided,
    BerkJonesOneSided,
    HigherCriticism,
}

impl StatisticKind {
    pub const ALL: [StatisticKind; 6] = [
        StatisticKind::KsTwoSided,
        StatisticKind::KsPlus,
        StatisticKind::KsMinus,
        StatisticKind::BerkJonesTwoSided,
        StatisticKind::BerkJonesOneSided,
        StatisticKind::HigherCriticism,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            StatisticKind::KsTwoSided => "ks_two_sided",
            StatisticKind::KsPlus => "ks_plus",
            StatisticKind::KsMinus => "ks_minus",
            StatisticKind::BerkJonesTwoSided => "berk_jones_two_sided",
            StatisticKind::BerkJonesOneSided => "berk_jones_one_sided",
            StatisticKind::HigherCriticism => "higher_criticism",
        }
    }

    fn has_upper_family(&self) -> bool {
        matches!(
            self,
            StatisticKind::KsTwoSided | StatisticKind::KsMinus | StatisticKind::BerkJonesTwoSided
        )
    }

    fn has_lower_family(&self) -> bool {
        !matches!(self, StatisticKind::KsMinus)
    }
}

impl fmt::Display for StatisticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StatisticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StatisticKind::ALL
            .iter()
            .find(|k| k.name() == s)
            .copied()
            .ok_or_else(|| {
                Error::input(format!(
                    "unknown statistic {s:?}; expected one of: {}",
                    StatisticKind::ALL.map(|k| k.name()).join(", ")
                ))
            })
    }
}

/// A statistic bound to a sample count, with its threshold-inversion
/// functions.
#[derive(Debug, Clone, Copy)]
pub struct StatisticSpec {
    kind: StatisticKind,
    n: u64,
}

impl StatisticSpec {
    pub fn new(kind: StatisticKind, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::input("sample count must be at least 1"));
        }
        Ok(StatisticSpec { kind, n })
    }

    pub fn kind(&self) -> StatisticKind {
        self.kind
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Evaluate the statistic on sorted, unit-interval samples (the
    /// probability integral transform is the caller's job).
    pub fn compute_statistic(&self, u_sorted: &[f64]) -> Result<f64> {
        let n = self.n;
        if u_sorted.len() != n as usize {
            return Err(Error::input(format!(
                "expected {} samples, got {}",
                n,
                u_sorted.len()
            )));
        }
        let mut prev = 0.0f64;
        for &u in u_sorted {
            if !(0.0..=1.0).contains(&u) {
                return Err(Error::input(format!("sample {u} outside [0, 1]")));
            }
            if u < prev {
                return Err(Error::input("samples not sorted"));
            }
            prev = u;
        }
        let nf = n as f64;
        let sqrt_n = nf.sqrt();
        let mut max = f64::NEG_INFINITY;
        for (idx, &u) in u_sorted.iter().enumerate() {
            let i = idx as u64 + 1;
            let fi = i as f64;
            if self.kind.has_upper_family() {
                let r = match self.kind {
                    StatisticKind::KsTwoSided | StatisticKind::KsMinus => {
                        sqrt_n * (u - (fi - 1.0) / nf)
                    }
                    StatisticKind::BerkJonesTwoSided => {
                        // Upper beta tail of u_(i), computed through the
                        // symmetric lower tail to avoid cancellation.
                        -beta_reg(nf - fi + 1.0, fi, 1.0 - u).ln()
                    }
                    _ => unreachable!(),
                };
                max = max.max(r);
            }
            if self.kind.has_lower_family() {
                let s = match self.kind {
                    StatisticKind::KsTwoSided | StatisticKind::KsPlus => sqrt_n * (fi / nf - u),
                    StatisticKind::BerkJonesTwoSided | StatisticKind::BerkJonesOneSided => {
                        -beta_reg(fi, nf - fi + 1.0, u).ln()
                    }
                    StatisticKind::HigherCriticism => hc_term(nf, fi, u),
                    _ => unreachable!(),
                };
                max = max.max(s);
            }
        }
        Ok(max)
    }

    /// `r_i^{-1}(t)`: the exclusive upper limit on `u_(i)` below which
    /// the increasing family stays under t. `None` when the statistic
    /// has no upper-limit family. Clipped to `[0, 1]`.
    pub fn invert_upper(&self, i: u64, t: f64) -> Option<f64> {
        debug_assert!((1..=self.n).contains(&i));
        if !self.kind.has_upper_family() {
            return None;
        }
        let nf = self.n as f64;
        let fi = i as f64;
        let v = match self.kind {
            StatisticKind::KsTwoSided | StatisticKind::KsMinus => {
                (fi - 1.0) / nf + t / nf.sqrt()
            }
            StatisticKind::BerkJonesTwoSided => {
                // I_u(i, n-i+1) = 1 - e^{-t}; solve through the
                // complementary tail for accuracy near 1.
                1.0 - beta_reg_inv(nf - fi + 1.0, fi, (-t).exp())
            }
            _ => unreachable!(),
        };
        Some(clip_unit(v))
    }

    /// `s_i^{-1}(t)`: the exclusive lower limit on `u_(i)`. `None` when
    /// the statistic has no lower-limit family. Clipped to `[0, 1]`.
    pub fn invert_lower(&self, i: u64, t: f64) -> Option<f64> {
        debug_assert!((1..=self.n).contains(&i));
        if !self.kind.has_lower_family() {
            return None;
        }
        let nf = self.n as f64;
        let fi = i as f64;
        let v = match self.kind {
            StatisticKind::KsTwoSided | StatisticKind::KsPlus => fi / nf - t / nf.sqrt(),
            StatisticKind::BerkJonesTwoSided | StatisticKind::BerkJonesOneSided => {
                beta_reg_inv(fi, nf - fi + 1.0, (-t).exp())
            }
            StatisticKind::HigherCriticism => hc_invert(nf, fi, t),
            _ => unreachable!(),
        };
        Some(clip_unit(v))
    }

    /// Boundary pair whose non-crossing event is exactly `T < t`.
    ///
    /// The upper limits `r_i^{-1}(t)` become lower path crossings (the
    /// path must have climbed past i); the lower limits `s_i^{-1}(t)`
    /// become the cap: at most `i - 1` states at the instant the i-th
    /// limit is reached, one more afterwards. Values clipped at 0 on
    /// the lower-limit side fold into the initial cap. Thresholds
    /// outside the achievable range produce an empty-band or
    /// unconstrained pair, never an error.
    pub fn boundaries_from_threshold(&self, t: f64) -> Result<BoundaryPair> {
        if t.is_nan() {
            return Err(Error::input("threshold is NaN"));
        }
        let n = self.n;
        let mut lower: Vec<f64> = (1..=n).filter_map(|i| self.invert_upper(i, t)).collect();
        lower.sort_by(|a, b| a.partial_cmp(b).unwrap());

        let (initial_cap, upper) = if self.kind.has_lower_family() {
            let mut cap = 0i64;
            let mut upper = Vec::with_capacity(n as usize);
            for i in 1..=n {
                let v = self.invert_lower(i, t).expect("lower family present");
                if v <= 0.0 {
                    cap += 1;
                } else {
                    upper.push(v);
                }
            }
            upper.sort_by(|a, b| a.partial_cmp(b).unwrap());
            (cap, upper)
        } else {
            (n as i64, Vec::new())
        };
        BoundaryPair::new(n, lower, initial_cap, upper)
    }

    /// Exact p-value of `T = t`: one minus the non-crossing
    /// probability of the inverted boundaries.
    pub fn pvalue(&self, t: f64, opts: &EngineOptions) -> Result<PValueReport> {
        let bp = self.boundaries_from_threshold(t)?;
        let nc = ecdf_noncrossing(&bp, opts)?;
        Ok(PValueReport {
            statistic: t,
            p_value: (1.0 - nc.probability).clamp(0.0, 1.0),
            n: self.n,
            lower_crossings: bp.lower_crossings().len(),
            upper_crossings: bp.upper_crossings().len(),
            checkpoints: nc.checkpoints,
            method: opts.method,
        })
    }

    /// The threshold whose p-value equals `alpha`, by bisection. The
    /// p-value is non-increasing in t; a violation beyond numerical
    /// slack is reported as a failure.
    pub fn critical_value(&self, alpha: f64, opts: &EngineOptions) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::input(format!("alpha {alpha} outside (0, 1)")));
        }
        let pv = |t: f64| -> Result<f64> { Ok(self.pvalue(t, opts)?.p_value) };

        let mut lo = 0.0f64;
        let mut hi = 1.0f64;
        let mut p_hi = pv(hi)?;
        let mut guard = 0;
        while p_hi > alpha {
            hi *= 2.0;
            p_hi = pv(hi)?;
            guard += 1;
            if guard > 80 {
                return Err(Error::numerical("no upper bracket for critical value"));
            }
        }
        let mut p_lo = pv(lo)?;
        let mut step = 1.0;
        guard = 0;
        while p_lo < alpha {
            lo -= step;
            step *= 2.0;
            p_lo = pv(lo)?;
            guard += 1;
            if guard > 80 {
                return Err(Error::numerical("no lower bracket for critical value"));
            }
        }

        for _ in 0..200 {
            if hi - lo <= 1e-10 * hi.abs().max(lo.abs()).max(1e-8) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let p_mid = pv(mid)?;
            if p_mid > p_lo + 1e-9 || p_mid < p_hi - 1e-9 {
                return Err(Error::numerical(
                    "p-value is not monotone in the threshold",
                ));
            }
            if p_mid >= alpha {
                lo = mid;
                p_lo = p_mid;
            } else {
                hi = mid;
                p_hi = p_mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

fn clip_unit(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// Higher Criticism term `sqrt(n) (i/n - u) / sqrt(u (1 - u))` with
/// the u -> 0, 1 limits pinned.
fn hc_term(nf: f64, fi: f64, u: f64) -> f64 {
    if u <= 0.0 {
        return f64::INFINITY;
    }
    if u >= 1.0 {
        return if fi == nf { 0.0 } else { f64::NEG_INFINITY };
    }
    nf.sqrt() * (fi / nf - u) / (u * (1.0 - u)).sqrt()
}

/// Solve `sqrt(n) (a - u) / sqrt(u(1-u)) = t` for u with `a = i/n`,
/// picking the branch that makes the solution decreasing in t. The
/// quadratic's other root is used through the product-of-roots form
/// when subtraction would cancel.
fn hc_invert(nf: f64, fi: f64, t: f64) -> f64 {
    let a = fi / nf;
    if a >= 1.0 && t < 0.0 {
        // s_n never goes negative; the demand is unsatisfiable.
        return 1.0;
    }
    let disc_sqrt = (4.0 * a * nf * (1.0 - a) + t * t).sqrt();
    let denom = 2.0 * (nf + t * t);
    if t <= 0.0 {
        (2.0 * a * nf + t * t - t * disc_sqrt) / denom
    } else {
        let u_plus = (2.0 * a * nf + t * t + t * disc_sqrt) / denom;
        nf * a * a / ((nf + t * t) * u_plus)
    }
}

/// Report produced by [`StatisticSpec::pvalue`].
#[derive(Debug, Clone, Copy)]
pub struct PValueReport {
    /// The threshold the p-value was evaluated at.
    pub statistic: f64,
    pub p_value: f64,
    pub n: u64,
    /// Count of lower path crossings in the inverted boundary pair.
    pub lower_crossings: usize,
    /// Count of upper cap rises in the inverted boundary pair.
    pub upper_crossings: usize,
    /// Checkpoints in the compiled schedule.
    pub checkpoints: usize,
    pub method: Method,
}

/// Parse a whitespace-separated samples file.
pub fn parse_samples(text: &str) -> Result<Vec<f64>> {
    text.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|e| Error::input(format!("bad sample {tok:?}: {e}")))
        })
        .collect()
}
