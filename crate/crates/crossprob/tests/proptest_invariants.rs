//! Property tests for the convolution layer and schedule compilation.

use proptest::collection::vec;
use proptest::prelude::*;

use crossprob::boundaries::BoundaryPair;
use crossprob::convolution::{
    kernel_tail_len, poisson_kernel, renormalize, truncated_convolve, ConvolveMode, OutBand,
    ScaledProbVector,
};

fn prob_values() -> impl Strategy<Value = Vec<f64>> {
    vec(0.0f64..1.0, 1..512)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The FFT and direct convolution paths agree to 1e-12 relative on
    /// every band entry, across band widths up to 512.
    #[test]
    fn fft_matches_direct(
        values in prob_values(),
        lambda in 0.0f64..80.0,
        offset in 0i64..20,
        lo_shift in 0i64..32,
        width in 1i64..512,
    ) {
        let q = renormalize(ScaledProbVector::new(offset, values, -2.0));
        prop_assume!(!q.is_zero());
        let klen = kernel_tail_len(lambda);
        let kernel = poisson_kernel(lambda, klen).unwrap();
        let band = OutBand { lo: offset + lo_shift, hi: offset + lo_shift + width };
        let fft = truncated_convolve(&q, &kernel, band, ConvolveMode::ForceFft).unwrap();
        let direct = truncated_convolve(
            &q,
            &kernel,
            band,
            ConvolveMode::Adaptive { crossover: usize::MAX },
        )
        .unwrap();
        // Compare on the full convolution's mass scale: transform
        // rounding noise is absolute at that scale, so every entry must
        // agree within 1e-12 of it, and entries carrying a meaningful
        // share of the mass must also agree to 1e-12 relative.
        let anchor = q.log_total();
        for m in band.lo..=band.hi {
            let a = (fft.log_value(m) - anchor).exp();
            let b = (direct.log_value(m) - anchor).exp();
            prop_assert!((a - b).abs() <= 1e-12, "m={}: {} vs {}", m, a, b);
            if b > 1e-3 {
                prop_assert!((a / b - 1.0).abs() <= 1e-12, "m={}: {} vs {}", m, a, b);
            }
        }
    }

    /// Convolving over the full reachable range conserves mass:
    /// total out = total in * kernel mass.
    #[test]
    fn mass_is_conserved(
        values in prob_values(),
        lambda in 0.0f64..200.0,
    ) {
        let q = renormalize(ScaledProbVector::new(0, values, -1.0));
        prop_assume!(!q.is_zero());
        let klen = kernel_tail_len(lambda);
        let kernel = poisson_kernel(lambda, klen).unwrap();
        let hi = (q.len() + klen) as i64;
        let r = truncated_convolve(&q, &kernel, OutBand { lo: 0, hi }, ConvolveMode::default())
            .unwrap();
        let kernel_mass: f64 = kernel.values().iter().sum::<f64>() * kernel.log_scale().exp();
        let want = q.log_total() + kernel_mass.ln();
        let got = r.log_total();
        prop_assert!((got - want).abs() < 1e-12, "{} vs {}", got, want);
    }

    /// Kernel entries obey the Poisson ratio recurrence wherever both
    /// neighbours are comfortably above underflow.
    #[test]
    fn kernel_ratio_invariant(lambda in 0.001f64..3000.0) {
        let len = kernel_tail_len(lambda);
        let k = poisson_kernel(lambda, len).unwrap();
        for i in 0..len - 1 {
            let (a, b) = (k.values()[i], k.values()[i + 1]);
            if a > 1e-290 && b > 1e-290 {
                let want = lambda / (i + 1) as f64;
                prop_assert!(
                    ((b / a) - want).abs() <= 1e-12 * want.max(1e-12),
                    "i={} lambda={}", i, lambda
                );
            }
        }
    }

    /// Compiled schedules keep their structural invariants for
    /// arbitrary valid crossing lists.
    #[test]
    fn compiled_schedules_are_well_formed(
        mut lower in vec(0.0f64..=1.0, 0..40),
        mut upper in vec(0.0f64..=1.0, 0..40),
        cap in -2i64..40,
        n in 1u64..200,
    ) {
        lower.sort_by(|a, b| a.partial_cmp(b).unwrap());
        upper.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let a = lower.len();
        let b = upper.len();
        let bp = BoundaryPair::new(n, lower, cap, upper).unwrap();
        let s = bp.compile_schedule();
        prop_assert!(s.len() <= a + b + 1);
        prop_assert_eq!(*s.times().last().unwrap(), 1.0);
        for w in s.times().windows(2) {
            prop_assert!(w[0] < w[1]);
        }
        let mut prev = s.initial_band();
        for (&t, band) in s.times().iter().zip(s.bands()) {
            prop_assert!(band.lo >= prev.lo);
            prop_assert!(band.hi >= prev.hi);
            // The stored band is exactly the counting definition.
            prop_assert_eq!(*band, bp.band_at(t));
            prev = *band;
        }
    }
}
