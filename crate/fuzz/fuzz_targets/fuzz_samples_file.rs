#![no_main]

use libfuzzer_sys::fuzz_target;

use crossprob::gof::{parse_samples, StatisticKind, StatisticSpec};

// Samples files are untrusted input: neither parsing nor statistic
// evaluation may panic, and accepted inputs must yield a finite-or-
// infinite (never NaN) statistic for every statistic family.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(mut samples) = parse_samples(text) else {
        return;
    };
    if samples.is_empty() || samples.len() > 64 {
        return;
    }
    samples.sort_by(|a, b| a.total_cmp(b));
    let n = samples.len() as u64;
    for kind in StatisticKind::ALL {
        let spec = StatisticSpec::new(kind, n).unwrap();
        let Ok(t) = spec.compute_statistic(&samples) else {
            // Out-of-range or NaN samples are rejected, not a panic.
            continue;
        };
        assert!(!t.is_nan(), "{kind}: NaN statistic from {samples:?}");
        // A threshold derived from real samples must invert into a
        // valid boundary pair.
        if t.is_finite() {
            let bp = spec.boundaries_from_threshold(t).unwrap();
            assert_eq!(bp.n(), n);
        }
    }
});
