//! Lomb–Scargle spectral estimation for (possibly unevenly) sampled
//! waveforms, PSD conversion and tone peak/bandwidth measurement.

use std::cmp::Ordering;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synth::Waveform;

/// Default frequency-grid oversampling relative to `1 / duration`.
pub const DEFAULT_OVERSAMPLE: f64 = 8.0;

// Phasor recurrences are re-seeded from sin/cos this often.
const RESYNC_EVERY: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumKind {
    /// Lomb–Scargle power, mV².
    PowerSpectrum,
    /// Power divided by `f_res * n_samples`, mV²/Hz.
    Psd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Periodogram {
    /// GHz, strictly increasing.
    pub frequencies: Vec<f64>,
    pub power: Vec<f64>,
    pub kind: SpectrumKind,
    pub n_samples: usize,
    /// Frequency resolution `1 / span` of the input, Hz.
    pub f_res: f64,
}

impl Periodogram {
    /// Trapezoidal area under the curve between `f0` and `f1` (GHz). For a
    /// PSD the integration variable is taken in Hz, giving mV².
    pub fn area(&self, f0: f64, f1: f64) -> f64 {
        let scale = match self.kind {
            SpectrumKind::Psd => 1e9,
            SpectrumKind::PowerSpectrum => 1.0,
        };
        let lo = self.frequencies.partition_point(|&f| f < f0);
        let hi = self.frequencies.partition_point(|&f| f <= f1);
        (lo + 1..hi)
            .map(|i| 0.5 * (self.power[i] + self.power[i - 1]) * (self.frequencies[i] - self.frequencies[i - 1]))
            .sum::<f64>()
            * scale
    }

    /// Largest value within `[f - halfwidth, f + halfwidth]`.
    pub fn max_near(&self, f: f64, halfwidth: f64) -> Option<(f64, f64)> {
        let lo = self.frequencies.partition_point(|&x| x < f - halfwidth);
        let hi = self.frequencies.partition_point(|&x| x <= f + halfwidth);
        (lo..hi)
            .map(|i| (self.frequencies[i], self.power[i]))
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// Evaluation frequencies. Uniform grids take a faster phasor-recurrence
/// path in [`lomb_scargle`].
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyGrid {
    freqs: Vec<f64>,
    uniform: Option<(f64, f64)>,
}

impl FrequencyGrid {
    pub fn uniform(start: f64, step: f64, count: usize) -> Result<Self> {
        if !(start > 0.0 && step > 0.0 && count > 0) {
            return Err(Error::InvalidArgument("grid needs start > 0, step > 0, count > 0".into()));
        }
        let freqs = (0..count).map(|i| start + i as f64 * step).collect();
        Ok(Self { freqs, uniform: Some((start, step)) })
    }

    /// Grid `df, 2 df, ... <= f_max` with `df = 1 / (oversample * duration)`.
    pub fn for_duration(duration: f64, f_max: f64, oversample: f64) -> Result<Self> {
        if !(duration > 0.0 && oversample > 0.0) {
            return Err(Error::InvalidArgument("duration and oversample must be positive".into()));
        }
        let df = 1.0 / (oversample * duration);
        let count = (f_max / df + 1e-9).floor() as usize;
        Self::uniform(df, df, count)
    }

    /// Uniform grid with spacing `step` covering `[lo, hi]`, aligned to
    /// multiples of `step`.
    pub fn window(lo: f64, hi: f64, step: f64) -> Result<Self> {
        let first = (lo / step).ceil().max(1.0);
        let last = (hi / step).floor();
        if last < first {
            return Err(Error::InvalidArgument("empty frequency window".into()));
        }
        Self::uniform(first * step, step, (last - first) as usize + 1)
    }

    pub fn from_frequencies(freqs: Vec<f64>) -> Result<Self> {
        if freqs.is_empty() || freqs[0] <= 0.0 || freqs.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(Ordering::Greater)) {
            return Err(Error::InvalidArgument("frequencies must be positive and strictly increasing".into()));
        }
        Ok(Self { freqs, uniform: None })
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.freqs
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }
}

/// Classical (unnormalized) Lomb–Scargle power with the per-frequency time
/// offset `tau`:
///
/// `P(f) = 1/2 [ (sum y cos w(t-tau))^2 / sum cos^2 w(t-tau)
///             + (sum y sin w(t-tau))^2 / sum sin^2 w(t-tau) ]`
///
/// with `y` mean-subtracted. On an even timebase this equals
/// `|sum y exp(-j w t)|^2 / n` at the Fourier frequencies. Frequencies must
/// not exceed half the mean sampling rate.
pub fn lomb_scargle(w: &Waveform, grid: &FrequencyGrid) -> Result<Periodogram> {
    let n = w.len();
    if n < 2 {
        return Err(Error::DegenerateInput("fewer than two samples".into()));
    }
    let mean = w.voltages.iter().sum::<f64>() / n as f64;
    let y: Vec<f64> = w.voltages.iter().map(|v| v - mean).collect();
    let variance = y.iter().map(|v| v * v).sum::<f64>();
    if variance.partial_cmp(&0.0) != Some(Ordering::Greater) {
        return Err(Error::DegenerateInput("constant waveform".into()));
    }
    let span = w.span();
    let nyquist = 0.5 * (n - 1) as f64 / span;
    if let Some(&f_max) = grid.freqs.last() {
        if f_max > nyquist * (1.0 + 1e-9) {
            return Err(Error::InvalidArgument(format!(
                "grid reaches {f_max} GHz, above the mean-rate Nyquist limit {nyquist} GHz"
            )));
        }
    }
    // Centre the time axis; the estimate is shift-invariant and the phases
    // stay small.
    let t_mid = 0.5 * (w.times[0] + w.times[n - 1]);
    let t: Vec<f64> = w.times.iter().map(|x| x - t_mid).collect();

    let sums = match grid.uniform {
        Some((start, step)) => uniform_sums(&t, &y, start, step, grid.len()),
        None => grid.freqs.iter().map(|&f| direct_sums(&t, &y, f)).collect(),
    };
    let half_n = 0.5 * n as f64;
    let power = sums
        .into_iter()
        .map(|s| {
            let r = s.c2.hypot(s.s2);
            // cos/sin of w tau from tan(2 w tau) = S2 / C2.
            let (sin_wt, cos_wt) = (0.5 * s.s2.atan2(s.c2)).sin_cos();
            let yc = s.yc * cos_wt + s.ys * sin_wt;
            let ys = s.ys * cos_wt - s.yc * sin_wt;
            let cc = half_n + 0.5 * r;
            let ss = half_n - 0.5 * r;
            let tiny = 1e-12 * n as f64;
            let cos_term = if cc > tiny { yc * yc / cc } else { 0.0 };
            let sin_term = if ss > tiny { ys * ys / ss } else { 0.0 };
            0.5 * (cos_term + sin_term)
        })
        .collect();

    Ok(Periodogram {
        frequencies: grid.freqs.clone(),
        power,
        kind: SpectrumKind::PowerSpectrum,
        n_samples: n,
        f_res: 1.0 / (span * 1e-9),
    })
}

#[derive(Clone, Copy, Default)]
struct TrigSums {
    yc: f64,
    ys: f64,
    c2: f64,
    s2: f64,
}

fn direct_sums(t: &[f64], y: &[f64], f: f64) -> TrigSums {
    let omega = 2.0 * PI * f;
    let mut s = TrigSums::default();
    for (&ti, &yi) in t.iter().zip(y) {
        let (sn, cs) = (omega * ti).sin_cos();
        s.yc += yi * cs;
        s.ys += yi * sn;
        s.c2 += cs * cs - sn * sn;
        s.s2 += 2.0 * sn * cs;
    }
    s
}

fn uniform_sums(t: &[f64], y: &[f64], start: f64, step: f64, count: usize) -> Vec<TrigSums> {
    let mut out = vec![TrigSums::default(); count];
    for (&ti, &yi) in t.iter().zip(y) {
        let (dsn, dcs) = (2.0 * PI * step * ti).sin_cos();
        let (mut sn, mut cs) = (0.0, 1.0);
        for (j, acc) in out.iter_mut().enumerate() {
            if j % RESYNC_EVERY == 0 {
                (sn, cs) = (2.0 * PI * (start + j as f64 * step) * ti).sin_cos();
            }
            acc.yc += yi * cs;
            acc.ys += yi * sn;
            acc.c2 += cs * cs - sn * sn;
            acc.s2 += 2.0 * sn * cs;
            (sn, cs) = (sn * dcs + cs * dsn, cs * dcs - sn * dsn);
        }
    }
    out
}

/// Power spectrum to PSD: divide by `f_res * n_samples`.
pub fn to_psd(pg: &Periodogram) -> Result<Periodogram> {
    if pg.kind == SpectrumKind::Psd {
        return Err(Error::AlreadyPsd);
    }
    let denom = pg.f_res * pg.n_samples as f64;
    Ok(Periodogram {
        power: pg.power.iter().map(|p| p / denom).collect(),
        kind: SpectrumKind::Psd,
        ..pg.clone()
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToneMetrics {
    /// Peak frequency, GHz.
    pub center: f64,
    pub peak_power: f64,
    /// Full width at half maximum, GHz.
    pub fwhm: f64,
}

/// Peak and full width at half maximum of the tone near `f0`. The peak is
/// searched in `[f0 - window/2, f0 + window/2]` and must be a strict local
/// maximum; half-maximum crossings are linearly interpolated.
pub fn tone_metrics(pg: &Periodogram, f0: f64, window: f64) -> Result<ToneMetrics> {
    let f = &pg.frequencies;
    let p = &pg.power;
    let lo = f.partition_point(|&x| x < f0 - 0.5 * window);
    let hi = f.partition_point(|&x| x <= f0 + 0.5 * window);
    let peak = (lo..hi)
        .max_by(|&a, &b| p[a].total_cmp(&p[b]))
        .ok_or(Error::NoPeak(f0))?;
    let interior = peak > 0 && peak + 1 < f.len();
    if !interior || !(p[peak] > p[peak - 1] && p[peak] > p[peak + 1]) || p[peak].partial_cmp(&0.0) != Some(Ordering::Greater) {
        return Err(Error::NoPeak(f0));
    }
    let half = 0.5 * p[peak];

    let mut l = peak;
    while l > 0 && p[l] > half {
        l -= 1;
    }
    let mut r = peak;
    while r + 1 < f.len() && p[r] > half {
        r += 1;
    }
    if p[l] > half || p[r] > half {
        return Err(Error::NoPeak(f0));
    }
    let cross = |a: usize, b: usize| f[a] + (half - p[a]) / (p[b] - p[a]) * (f[b] - f[a]);
    let left = cross(l, l + 1);
    let right = cross(r - 1, r);
    Ok(ToneMetrics { center: f[peak], peak_power: p[peak], fwhm: right - left })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(freq: f64, rate: f64, n: usize) -> Waveform {
        let times: Vec<f64> = (0..n).map(|i| i as f64 / rate).collect();
        let v = times.iter().map(|t| (2.0 * PI * freq * t).sin()).collect();
        Waveform::new(times, v, true).unwrap()
    }

    #[test]
    fn sine_peak_dominates() {
        let w = sine(2.5, 100.0, 2000);
        let grid = FrequencyGrid::for_duration(w.span(), 20.0, DEFAULT_OVERSAMPLE).unwrap();
        let pg = lomb_scargle(&w, &grid).unwrap();
        let (imax, pmax) = pg.power.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        let step = grid.frequencies()[1] - grid.frequencies()[0];
        assert!((pg.frequencies[imax] - 2.5).abs() < step);
        let mut sorted = pg.power.clone();
        sorted.sort_by(f64::total_cmp);
        let median = sorted[sorted.len() / 2];
        assert!(10.0 * (pmax / median).log10() >= 20.0);
    }

    #[test]
    fn uniform_and_direct_paths_agree() {
        let w = sine(3.3, 50.0, 777);
        let grid = FrequencyGrid::uniform(0.05, 0.0371, 600).unwrap();
        let fast = lomb_scargle(&w, &grid).unwrap();
        let direct = FrequencyGrid::from_frequencies(grid.frequencies().to_vec()).unwrap();
        let slow = lomb_scargle(&w, &direct).unwrap();
        let scale = slow.power.iter().cloned().fold(0.0, f64::max);
        for (a, b) in fast.power.iter().zip(&slow.power) {
            assert!((a - b).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn even_sampling_matches_classical_periodogram() {
        let rate = 40.0;
        let n = 400;
        let times: Vec<f64> = (0..n).map(|i| i as f64 / rate).collect();
        let v: Vec<f64> = times.iter().map(|t| (2.0 * PI * 3.0 * t).cos() + 0.3 * (2.0 * PI * 7.1 * t).sin()).collect();
        let w = Waveform::new(times.clone(), v.clone(), true).unwrap();
        let mean = v.iter().sum::<f64>() / n as f64;
        // Fourier frequencies m * rate / n, away from 0 and Nyquist.
        let freqs: Vec<f64> = (1..n / 2).map(|m| m as f64 * rate / n as f64).collect();
        let pg = lomb_scargle(&w, &FrequencyGrid::from_frequencies(freqs.clone()).unwrap()).unwrap();
        for (f, got) in freqs.iter().zip(&pg.power) {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, x) in times.iter().zip(&v) {
                re += (x - mean) * (2.0 * PI * f * t).cos();
                im -= (x - mean) * (2.0 * PI * f * t).sin();
            }
            let classical = (re * re + im * im) / n as f64;
            assert!((got - classical).abs() <= 1e-9 * (1.0 + classical), "{f}: {got} vs {classical}");
        }
    }

    #[test]
    fn degenerate_inputs() {
        let flat = Waveform::new(vec![0.0, 1.0, 2.0], vec![1.0; 3], true).unwrap();
        let grid = FrequencyGrid::uniform(0.1, 0.1, 3).unwrap();
        assert!(matches!(lomb_scargle(&flat, &grid), Err(Error::DegenerateInput(_))));
        let one = Waveform::new(vec![0.0], vec![1.0], true).unwrap();
        assert!(matches!(lomb_scargle(&one, &grid), Err(Error::DegenerateInput(_))));
        let w = sine(1.0, 10.0, 100);
        let too_high = FrequencyGrid::uniform(1.0, 1.0, 10).unwrap();
        assert!(lomb_scargle(&w, &too_high).is_err());
    }

    #[test]
    fn psd_divides_by_resolution_and_count() {
        let w = sine(2.0, 100.0, 1000);
        let pg = lomb_scargle(&w, &FrequencyGrid::uniform(0.5, 0.05, 100).unwrap()).unwrap();
        let psd = to_psd(&pg).unwrap();
        let denom = pg.f_res * pg.n_samples as f64;
        for (a, b) in psd.power.iter().zip(&pg.power) {
            assert_eq!(*a, b / denom);
        }
        assert!(matches!(to_psd(&psd), Err(Error::AlreadyPsd)));
    }

    #[test]
    fn tone_metrics_of_sine() {
        let w = sine(2.5, 100.0, 1000); // 10 ns
        let grid = FrequencyGrid::window(2.0, 3.0, 1.0 / (8.0 * w.span())).unwrap();
        let pg = lomb_scargle(&w, &grid).unwrap();
        let m = tone_metrics(&pg, 2.5, 0.4).unwrap();
        assert!((m.center - 2.5).abs() < 0.02);
        // Rectangular window: FWHM ~ 0.886 / T.
        assert!((m.fwhm - 0.886 / w.span()).abs() < 0.01, "{}", m.fwhm);
        assert!(matches!(tone_metrics(&pg, 5.0, 0.1), Err(Error::NoPeak(_))));
    }
}
