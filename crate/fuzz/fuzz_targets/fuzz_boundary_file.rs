#![no_main]

use libfuzzer_sys::fuzz_target;

use crossprob::boundaries::BoundaryPair;

// Boundary files are untrusted input: parsing must never panic, and
// anything accepted must compile into a schedule whose invariants hold.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(bp) = BoundaryPair::parse(text) else {
        return;
    };
    let schedule = bp.compile_schedule();
    let times = schedule.times();
    assert_eq!(times.last(), Some(&1.0));
    assert!(times.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(schedule.bands().len(), times.len());
    assert!(
        times.len() <= bp.lower_crossings().len() + bp.upper_crossings().len() + 1,
        "schedule longer than crossing count plus terminal"
    );
    let mut prev = schedule.initial_band();
    for b in schedule.bands() {
        assert!(b.lo >= prev.lo && b.hi >= prev.hi, "band edges must not shrink");
        prev = *b;
    }
    let profile = schedule.band_width_profile();
    for (b, w) in schedule.bands().iter().zip(profile) {
        assert_eq!(b.width(), w);
    }
});
