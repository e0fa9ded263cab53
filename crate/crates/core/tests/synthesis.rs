use proptest::prelude::*;
use pulsetone::pattern::Pattern;
use pulsetone::spectrum::CombStage;
use pulsetone::synth::{
    avg_power, comb_apply_events, default_dead_time, event_times, pulse_shape, render, EventSequence, JitterModel,
    Timebase, PHI0_MV_PS,
};

fn p(s: &str) -> Pattern {
    Pattern::parse(s).unwrap()
}

#[test]
fn single_pulse_area_is_one_flux_quantum() {
    for v_c in [0.25, 0.5, 1.0, 2.0, 4.0, 8.0] {
        let shape = pulse_shape(v_c).unwrap();
        let ev = EventSequence { timestamps: vec![0.1], duration: 0.2, f_clk: 10.0, meta: String::new() };
        // 0.05 ps steps resolve even the narrowest pulse.
        let w = render(&ev, &shape, 20_000.0, Timebase::Even).unwrap();
        let area_mv_ps = w.integral(0.0, 0.2) * 1e3;
        assert!((area_mv_ps / PHI0_MV_PS - 1.0).abs() < 1e-6, "v_c={v_c}: {area_mv_ps}");
    }
}

#[test]
fn average_power_matches_integrated_waveform() {
    let pat = p("10011001");
    for v_c in [0.5, 1.0, 2.0, 4.0] {
        let shape = pulse_shape(v_c).unwrap();
        let ev = event_times(&pat, 10.0, 3.4, &JitterModel::none()).unwrap();
        let w = render(&ev, &shape, 10_000.0, Timebase::Even).unwrap();
        // Four whole register periods, starting between clock slots.
        let measured = w.mean_power(0.05, 3.25);
        let model = avg_power(&pat, &shape, 10.0, shape.amplitude * shape.amplitude);
        assert!((measured / model - 1.0).abs() < 0.02, "v_c={v_c}: {measured} vs {model}");
    }
}

#[test]
fn doubling_duration_keeps_average_power() {
    let pat = p("10011001");
    let shape = pulse_shape(1.0).unwrap();
    let short = event_times(&pat, 10.0, 4.0, &JitterModel::none()).unwrap();
    let long = event_times(&pat, 10.0, 8.0, &JitterModel::none()).unwrap();
    assert!(long.len().abs_diff(2 * short.len()) <= 1);
    let ws = render(&short, &shape, 2000.0, Timebase::Even).unwrap();
    let wl = render(&long, &shape, 2000.0, Timebase::Even).unwrap();
    let (ps, pl) = (ws.mean_power(0.05, 3.25), wl.mean_power(0.05, 6.45));
    assert!((ps / pl - 1.0).abs() < 1e-6);
}

#[test]
fn jitter_rms_matches_sigma() {
    let pat = p("11111111");
    let jitter = JitterModel::new(2.0, 42).unwrap();
    let ideal = event_times(&pat, 10.0, 1000.0, &JitterModel::none()).unwrap();
    let noisy = event_times(&pat, 10.0, 1000.0, &jitter).unwrap();
    assert_eq!(ideal.len(), 10_000);
    assert_eq!(noisy.len(), ideal.len());
    let ms: f64 = ideal
        .timestamps
        .iter()
        .zip(&noisy.timestamps)
        .map(|(a, b)| ((b - a) * 1e3).powi(2))
        .sum::<f64>()
        / ideal.len() as f64;
    let rms = ms.sqrt();
    assert!((rms / 2.0 - 1.0).abs() < 0.1, "rms {rms} ps");

    let again = event_times(&pat, 10.0, 1000.0, &jitter).unwrap();
    assert_eq!(again, noisy);
    let zero = event_times(&pat, 10.0, 1000.0, &JitterModel::new(0.0, 42).unwrap()).unwrap();
    assert_eq!(zero.timestamps, ideal.timestamps);
}

#[test]
fn event_comb_with_half_period_delay_interleaves() {
    let ev = event_times(&p("10000000"), 10.0, 4.0, &JitterModel::none()).unwrap();
    let dead = default_dead_time(&pulse_shape(1.0).unwrap());
    let out = comb_apply_events(&ev, &CombStage::unity(0.4).unwrap(), dead).unwrap();
    assert_eq!(out.len(), 10);
    for (i, t) in out.timestamps.iter().enumerate() {
        assert!((t - 0.4 * i as f64).abs() < 1e-12);
    }
}

fn bits(min: usize, max: usize) -> impl Strategy<Value = Pattern> {
    proptest::collection::vec(any::<bool>(), min..=max).prop_map(|b| Pattern::new(b).unwrap())
}

proptest! {
    #[test]
    fn event_count_formula(pat in bits(1, 16), ticks in 1u64..400, f_clk in 1.0f64..50.0) {
        // Duration strictly between clock slots, so exactly `ticks` slots fit.
        let duration = (ticks as f64 - 0.5) / f_clk;
        let ev = event_times(&pat, f_clk, duration, &JitterModel::none()).unwrap();
        let n = pat.n_bits() as u64;
        let full = ticks / n;
        let rem = (ticks % n) as usize;
        let expected = full as usize * pat.set_bits() + pat.bits()[..rem].iter().filter(|&&b| b).count();
        prop_assert_eq!(ev.len(), expected);
    }

    #[test]
    fn zero_delay_comb_is_idempotent(pat in bits(1, 12), dead in 0.0001f64..0.05) {
        let ev = event_times(&pat, 10.0, 3.0, &JitterModel::none()).unwrap();
        let stage = CombStage::unity(0.0).unwrap();
        let once = comb_apply_events(&ev, &stage, dead).unwrap();
        let twice = comb_apply_events(&once, &stage, dead).unwrap();
        prop_assert_eq!(once.timestamps, twice.timestamps);
    }
}
