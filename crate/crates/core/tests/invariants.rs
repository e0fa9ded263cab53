use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use pulsetone::pattern::{canonicalize, Pattern};
use pulsetone::spectrum::{comb_response, tone_spectrum, CombStage};
use pulsetone::timing::{check_timing, ClockStyle, CellTiming, TimingNetConfig};

fn pattern(min: usize, max: usize) -> impl Strategy<Value = Pattern> {
    proptest::collection::vec(any::<bool>(), min..=max).prop_map(|b| Pattern::new(b).unwrap())
}

fn magnitudes(p: &Pattern) -> Vec<f64> {
    tone_spectrum(p, 10.0).unwrap().amplitudes.iter().map(|c| c.norm()).collect()
}

fn assert_close(a: &[f64], b: &[f64], rel: f64) -> Result<(), TestCaseError> {
    let scale = a.iter().chain(b).cloned().fold(1.0, f64::max);
    for (x, y) in a.iter().zip(b) {
        prop_assert!((x - y).abs() <= rel * scale, "{x} vs {y}");
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn magnitude_spectrum_invariances(p in pattern(4, 16), r in 0usize..16) {
        let base = magnitudes(&p);
        assert_close(&base, &magnitudes(&p.rotate_left(r)), 1e-12)?;
        assert_close(&base, &magnitudes(&p.reversed()), 1e-12)?;

        let n = p.n_bits();
        let dual = tone_spectrum(&p.dual(), 10.0).unwrap();
        let orig = tone_spectrum(&p, 10.0).unwrap();
        assert_close(&base[1..], &magnitudes(&p.dual())[1..], 1e-12)?;
        prop_assert!((dual.amplitudes[0].re - (n as f64 - orig.amplitudes[0].re)).abs() < 1e-12);
    }

    #[test]
    fn parseval(p in pattern(1, 24)) {
        let total: f64 = tone_spectrum(&p, 3.0).unwrap().powers().iter().sum();
        let want = (p.n_bits() * p.set_bits()) as f64;
        prop_assert!((total - want).abs() <= 1e-12 * want.max(1.0));
    }

    #[test]
    fn amplitudes_are_the_dft(p in pattern(1, 16)) {
        let n = p.n_bits();
        let s = tone_spectrum(&p, 10.0).unwrap();
        for k in 0..n {
            let mut c = Complex64::new(0.0, 0.0);
            for i in 0..n {
                if p.bits()[i] {
                    c += Complex64::from_polar(1.0, -2.0 * PI * (k * i) as f64 / n as f64);
                }
            }
            prop_assert!((c - s.amplitudes[k]).norm() < 1e-12 * n as f64);
        }
    }

    #[test]
    fn canonical_is_idempotent_on_orbits(p in pattern(1, 20), r in 0usize..20) {
        let c = canonicalize(&p);
        prop_assert_eq!(canonicalize(&c), c.clone());
        prop_assert_eq!(canonicalize(&p.rotate_left(r)), c.clone());
        prop_assert_eq!(canonicalize(&p.reversed()), c);
    }

    #[test]
    fn distance_set_sums_to_length(p in pattern(1, 32)) {
        match p.distance_set() {
            Ok(d) => {
                prop_assert_eq!(d.total(), p.n_bits());
                prop_assert_eq!(d.len(), p.set_bits());
                prop_assert_eq!(Pattern::from_distances(d.as_slice()).unwrap().canonical(), p.canonical());
            }
            Err(_) => prop_assert!(p.is_silent()),
        }
    }

    #[test]
    fn dual_is_an_involution(p in pattern(1, 32)) {
        prop_assert_eq!(p.dual().dual(), p.clone());
        prop_assert_eq!(p.set_bits() + p.dual().set_bits(), p.n_bits());
    }

    #[test]
    fn feedforward_response_is_periodic_in_delay(
        f in 0.1f64..20.0, tau in 0.0f64..2.0, m in 1u32..4, alpha in 0.0f64..2.0,
    ) {
        let a = comb_response(&CombStage::feedforward(tau, alpha).unwrap(), f).unwrap();
        let b = comb_response(&CombStage::feedforward(tau + m as f64 / f, alpha).unwrap(), f).unwrap();
        prop_assert!((a - b).norm() < 1e-9);
    }

    #[test]
    fn loop_skew_telescopes(arrivals in proptest::collection::vec(0.0f64..500.0, 1..64)) {
        let cfg = TimingNetConfig::with_arrivals(ClockStyle::BinaryTree, arrivals, 10.0, CellTiming::default()).unwrap();
        let report = check_timing(&cfg);
        prop_assert_eq!(report.total_skew, 0.0);
        prop_assert_eq!(report.per_cell_skew.iter().sum::<f64>(), 0.0);
    }
}
