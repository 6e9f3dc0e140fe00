//! Step boundaries encoded by integer-crossing times, and their
//! compilation into a checkpoint schedule.
//!
//! A monotone path only has to be checked against monotone step
//! boundaries at finitely many times: the times where a boundary
//! crosses an integer level, plus the terminal time 1. This module
//! owns that reduction.
//!
//! Conventions (the inputs are integer bands, not continuous
//! functions; callers converting continuous boundaries must honor
//! these):
//!
//! * A lower crossing at time `l_i` means the path must satisfy
//!   `xi(t) >= i` for all `t >= l_i` — active at the crossing time
//!   itself.
//! * An upper crossing at time `u_j` means the cap rises to
//!   `c0 + j` for all `t > u_j` — the *old* cap still binds at the
//!   crossing instant. This mirrors the asymmetry of first-passage
//!   (infimum) versus last-passage (supremum) crossing times for the
//!   two sides.
//!
//! Times compare by exact floating-point equality; no epsilon merging.

use crate::error::{Error, Result};

/// An inclusive integer interval of allowed states; empty when
/// `lo > hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Band {
    pub lo: i64,
    pub hi: i64,
}

impl Band {
    pub fn new(lo: i64, hi: i64) -> Self {
        Band { lo, hi }
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    /// Number of states in the band (0 if empty).
    pub fn width(&self) -> usize {
        if self.is_empty() {
            0
        } else {
            (self.hi - self.lo + 1) as usize
        }
    }

    pub fn contains(&self, m: i64) -> bool {
        self.lo <= m && m <= self.hi
    }

    /// Intersection with `[0, cap]`.
    pub fn clipped(&self, cap: i64) -> Band {
        Band::new(self.lo.max(0), self.hi.min(cap))
    }
}

/// Monotone step boundaries for a counting path on `[0, 1]`.
///
/// `n` is the process intensity (or sample count in ECDF mode). The
/// lower boundary is the list of times from which the path must have
/// reached 1, 2, 3, …; the upper boundary is an initial cap `c0` plus
/// the times after which the cap exceeds `c0`, `c0 + 1`, ….
///
/// Inconsistent demands (for example more required jumps than the cap
/// allows at some time) are legal inputs; they make the non-crossing
/// probability exactly zero rather than an error. A negative `c0` is
/// accepted on the same basis.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPair {
    n: u64,
    lower: Vec<f64>,
    initial_cap: i64,
    upper: Vec<f64>,
}

fn check_crossing_list(name: &str, times: &[f64]) -> Result<()> {
    let mut prev = 0.0f64;
    for &t in times {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::input(format!(
                "{name} crossing time {t} outside [0, 1]"
            )));
        }
        if t < prev {
            return Err(Error::input(format!("{name} crossing times not sorted")));
        }
        prev = t;
    }
    Ok(())
}

impl BoundaryPair {
    pub fn new(n: u64, lower: Vec<f64>, initial_cap: i64, upper: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::input("intensity n must be at least 1"));
        }
        check_crossing_list("lower", &lower)?;
        check_crossing_list("upper", &upper)?;
        Ok(BoundaryPair {
            n,
            lower,
            initial_cap,
            upper,
        })
    }

    /// Boundaries with no constraints besides the terminal checkpoint:
    /// the cap is set high enough to never bind.
    pub fn unconstrained(n: u64) -> Self {
        BoundaryPair {
            n,
            lower: Vec::new(),
            initial_cap: i64::MAX / 2,
            upper: Vec::new(),
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn lower_crossings(&self) -> &[f64] {
        &self.lower
    }

    pub fn initial_cap(&self) -> i64 {
        self.initial_cap
    }

    pub fn upper_crossings(&self) -> &[f64] {
        &self.upper
    }

    /// The allowed band at an arbitrary time, from the counting
    /// semantics: `low(t) = #{l_i <= t}`, `high(t) = c0 + #{u_j < t}`.
    pub fn band_at(&self, t: f64) -> Band {
        let lo = self.lower.partition_point(|&x| x <= t) as i64;
        let hi = self.initial_cap + self.upper.partition_point(|&x| x < t) as i64;
        Band::new(lo, hi)
    }

    /// Compile into the checkpoint schedule: the sorted, deduplicated
    /// positive crossing times with 1 appended, each carrying its
    /// allowed band, plus the band at time 0.
    pub fn compile_schedule(&self) -> CheckpointSchedule {
        let mut times: Vec<f64> = self
            .lower
            .iter()
            .chain(self.upper.iter())
            .copied()
            .filter(|&t| t > 0.0)
            .collect();
        times.push(1.0);
        times.sort_by(|a, b| a.partial_cmp(b).expect("crossing times are finite"));
        times.dedup();
        let bands: Vec<Band> = times.iter().map(|&t| self.band_at(t)).collect();
        CheckpointSchedule {
            initial_band: self.band_at(0.0),
            times,
            bands,
        }
    }

    /// Parse the plain-text boundary file format:
    ///
    /// ```text
    /// # comment lines are ignored
    /// <n>
    /// <lower crossing times, whitespace-separated; may be empty>
    /// <initial cap c0>
    /// <upper crossing times, whitespace-separated; may be empty>
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text
            .lines()
            .filter(|l| !l.trim_start().starts_with('#'))
            .collect();
        if lines.len() < 4 {
            return Err(Error::input(format!(
                "boundary file needs 4 data lines (n, lower, cap, upper), found {}",
                lines.len()
            )));
        }
        for extra in &lines[4..] {
            if !extra.trim().is_empty() {
                return Err(Error::input("boundary file has trailing data"));
            }
        }
        let n: u64 = lines[0]
            .trim()
            .parse()
            .map_err(|e| Error::input(format!("bad n: {e}")))?;
        let lower = parse_times(lines[1])?;
        let initial_cap: i64 = lines[2]
            .trim()
            .parse()
            .map_err(|e| Error::input(format!("bad initial cap: {e}")))?;
        let upper = parse_times(lines[3])?;
        BoundaryPair::new(n, lower, initial_cap, upper)
    }
}

fn parse_times(line: &str) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|e| Error::input(format!("bad crossing time {tok:?}: {e}")))
        })
        .collect()
}

/// The compiled constraint set: strictly increasing times
/// `t_1 < … < t_N = 1`, one allowed band per time, and the band at
/// time 0 (where the path starts in state 0).
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointSchedule {
    initial_band: Band,
    times: Vec<f64>,
    bands: Vec<Band>,
}

impl CheckpointSchedule {
    /// Build a schedule directly. Times must be finite, strictly
    /// increasing within `(0, 1]` and end at exactly 1; band edges must
    /// be non-decreasing.
    pub fn from_parts(initial_band: Band, times: Vec<f64>, bands: Vec<Band>) -> Result<Self> {
        if times.is_empty() || *times.last().unwrap() != 1.0 {
            return Err(Error::input("schedule must end at time 1"));
        }
        if times.len() != bands.len() {
            return Err(Error::input("one band per checkpoint required"));
        }
        let mut prev_t = 0.0;
        let mut prev_band = initial_band;
        for (&t, &b) in times.iter().zip(&bands) {
            if !(t > prev_t && t <= 1.0) {
                return Err(Error::input("checkpoint times must be strictly increasing in (0, 1]"));
            }
            if b.lo < prev_band.lo || b.hi < prev_band.hi {
                return Err(Error::input("band edges must be non-decreasing"));
            }
            prev_t = t;
            prev_band = b;
        }
        Ok(CheckpointSchedule {
            initial_band,
            times,
            bands,
        })
    }

    pub fn initial_band(&self) -> Band {
        self.initial_band
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    /// Number of checkpoints N.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Band widths per checkpoint (0 for an empty band). The engine
    /// uses this to choose between direct and FFT convolution.
    pub fn band_width_profile(&self) -> Vec<usize> {
        self.bands.iter().map(|b| b.width()).collect()
    }

    /// True if any band (including the initial one) is empty, which
    /// forces every downstream probability to zero.
    pub fn has_empty_band(&self) -> bool {
        self.initial_band.is_empty() || self.bands.iter().any(|b| b.is_empty())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unconstrained_pair_compiles_to_terminal_checkpoint() {
        let bp = BoundaryPair::new(5, vec![], 10, vec![]).unwrap();
        let s = bp.compile_schedule();
        assert_eq!(s.times(), &[1.0]);
        assert_eq!(s.bands(), &[Band::new(0, 10)]);
        assert_eq!(s.initial_band(), Band::new(0, 10));
        assert_eq!(s.band_width_profile(), vec![11]);
    }

    #[test]
    fn mixed_crossings_produce_merged_schedule() {
        let bp = BoundaryPair::new(5, vec![0.3, 0.7], 2, vec![0.5]).unwrap();
        let s = bp.compile_schedule();
        assert_eq!(s.times(), &[0.3, 0.5, 0.7, 1.0]);
        // low counts crossings at-or-before t; the cap rise at 0.5
        // only applies after 0.5.
        assert_eq!(
            s.bands(),
            &[
                Band::new(1, 2),
                Band::new(1, 2),
                Band::new(2, 3),
                Band::new(2, 3),
            ]
        );
        assert_eq!(s.band_width_profile(), vec![2, 2, 2, 2]);
        assert!(!s.has_empty_band());
    }

    #[test]
    fn triple_jump_gives_empty_band() {
        let bp = BoundaryPair::new(5, vec![0.2, 0.2, 0.2], 1, vec![]).unwrap();
        let s = bp.compile_schedule();
        assert_eq!(s.times(), &[0.2, 1.0]);
        assert_eq!(s.bands()[0], Band::new(3, 1));
        assert!(s.bands()[0].is_empty());
        assert_eq!(s.band_width_profile(), vec![0, 0]);
        assert!(s.has_empty_band());
    }

    #[test]
    fn lower_crossing_at_zero_empties_initial_band() {
        let bp = BoundaryPair::new(3, vec![0.0], 5, vec![]).unwrap();
        let s = bp.compile_schedule();
        // xi(0) = 0 can never satisfy xi(0) >= 1.
        assert_eq!(s.initial_band(), Band::new(1, 5));
        assert!(!s.initial_band().contains(0));
        // time 0 itself is not a checkpoint; the initial band covers it.
        assert_eq!(s.times(), &[1.0]);
    }

    #[test]
    fn upper_crossing_at_zero_raises_later_caps_only() {
        let bp = BoundaryPair::new(3, vec![], 0, vec![0.0, 0.4]).unwrap();
        let s = bp.compile_schedule();
        assert_eq!(s.initial_band(), Band::new(0, 0));
        assert_eq!(s.times(), &[0.4, 1.0]);
        // At 0.4 the rise from u=0.0 is in effect, the one at 0.4 not yet.
        assert_eq!(s.bands(), &[Band::new(0, 1), Band::new(0, 2)]);
    }

    #[test]
    fn negative_cap_accepted_and_empty() {
        let bp = BoundaryPair::new(2, vec![], -1, vec![]).unwrap();
        let s = bp.compile_schedule();
        assert!(s.initial_band().is_empty());
        assert!(s.has_empty_band());
    }

    #[test]
    fn crossing_at_one_deduplicates_with_terminal() {
        let bp = BoundaryPair::new(4, vec![0.5, 1.0], 9, vec![]).unwrap();
        let s = bp.compile_schedule();
        assert_eq!(s.times(), &[0.5, 1.0]);
        assert_eq!(s.bands()[1], Band::new(2, 9));
    }

    #[test]
    fn rejects_unsorted_and_out_of_range() {
        assert!(BoundaryPair::new(3, vec![0.5, 0.2], 1, vec![]).is_err());
        assert!(BoundaryPair::new(3, vec![1.5], 1, vec![]).is_err());
        assert!(BoundaryPair::new(3, vec![-0.1], 1, vec![]).is_err());
        assert!(BoundaryPair::new(3, vec![f64::NAN], 1, vec![]).is_err());
        assert!(BoundaryPair::new(0, vec![], 1, vec![]).is_err());
    }

    #[test]
    fn caps_above_n_are_inert_but_legal() {
        let bp = BoundaryPair::new(2, vec![], 100, vec![0.5]).unwrap();
        let s = bp.compile_schedule();
        assert_eq!(s.bands(), &[Band::new(0, 100), Band::new(0, 101)]);
    }

    #[test]
    fn more_lower_crossings_than_n_accepted() {
        // a > n is legal; the ECDF query will simply be zero.
        let bp = BoundaryPair::new(2, vec![0.1, 0.2, 0.3, 0.4], 10, vec![]).unwrap();
        let s = bp.compile_schedule();
        assert_eq!(s.bands().last().unwrap().lo, 4);
    }

    #[test]
    fn band_edges_are_monotone() {
        let bp = BoundaryPair::new(
            7,
            vec![0.1, 0.1, 0.35, 0.62, 0.62, 0.9],
            1,
            vec![0.05, 0.3, 0.3, 0.77],
        )
        .unwrap();
        let s = bp.compile_schedule();
        assert!(s.len() <= 6 + 4 + 1);
        let mut prev = s.initial_band();
        for b in s.bands() {
            assert!(b.lo >= prev.lo && b.hi >= prev.hi);
            prev = *b;
        }
    }

    #[test]
    fn schedule_from_parts_validates() {
        let ib = Band::new(0, 3);
        assert!(CheckpointSchedule::from_parts(ib, vec![0.5, 1.0], vec![Band::new(0, 3); 2]).is_ok());
        // missing terminal time
        assert!(CheckpointSchedule::from_parts(ib, vec![0.5], vec![Band::new(0, 3)]).is_err());
        // non-increasing times
        assert!(CheckpointSchedule::from_parts(
            ib,
            vec![0.5, 0.5, 1.0],
            vec![Band::new(0, 3); 3]
        )
        .is_err());
        // shrinking band edge
        assert!(CheckpointSchedule::from_parts(
            ib,
            vec![0.5, 1.0],
            vec![Band::new(0, 2), Band::new(0, 1)]
        )
        .is_err());
    }

    #[test]
    fn parse_round_trip() {
        let text = "# two-sided example\n5\n0.3 0.7\n2\n0.5\n";
        let bp = BoundaryPair::parse(text).unwrap();
        assert_eq!(bp.n(), 5);
        assert_eq!(bp.lower_crossings(), &[0.3, 0.7]);
        assert_eq!(bp.initial_cap(), 2);
        assert_eq!(bp.upper_crossings(), &[0.5]);
    }

    #[test]
    fn parse_empty_crossing_lines() {
        let text = "3\n\n0\n\n";
        let bp = BoundaryPair::parse(text).unwrap();
        assert!(bp.lower_crossings().is_empty());
        assert!(bp.upper_crossings().is_empty());
        assert_eq!(bp.initial_cap(), 0);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(BoundaryPair::parse("").is_err());
        assert!(BoundaryPair::parse("5\n0.1\n2\n").is_err());
        assert!(BoundaryPair::parse("x\n\n0\n\n").is_err());
        assert!(BoundaryPair::parse("3\n0.1 zebra\n0\n\n").is_err());
        assert!(BoundaryPair::parse("3\n\n0\n\n0.9\n").is_err());
        assert!(BoundaryPair::parse("3\n0.5 0.1\n0\n\n").is_err());
    }

    #[test]
    fn parse_tolerates_comments_and_trailing_blanks() {
        let text = "# header\n4\n# mid comment\n0.25\n1\n0.5 0.75\n\n  \n";
        let bp = BoundaryPair::parse(text).unwrap();
        assert_eq!(bp.n(), 4);
        assert_eq!(bp.upper_crossings(), &[0.5, 0.75]);
    }
}
