//! Finite pulse trains: event timestamps, SFQ pulse shapes, sampled
//! waveforms and event-level comb filtering.
//!
//! Units: time in ns, frequency in GHz, pulse width in ps, voltage in mV.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pattern::Pattern;
use crate::spectrum::{CombKind, CombStage};

/// Magnetic flux quantum in mV·ps.
pub const PHI0_MV_PS: f64 = 2.067_833_848;

/// One unit of dimensionless characteristic voltage, in mV.
pub const VC_UNIT_MV: f64 = 0.287;

/// Default sampling rate (GHz) for 10 GHz studies: 1 ps steps.
pub const DEFAULT_SAMPLE_RATE: f64 = 1000.0;

const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_4; // 2 sqrt(2 ln 2)

/// Gaussian SFQ pulse with area fixed at one flux quantum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseShape {
    /// Characteristic voltage `I_c R_N` in units of [`VC_UNIT_MV`].
    pub v_c: f64,
    /// Peak voltage, mV.
    pub amplitude: f64,
    /// Full width at half maximum, ps.
    pub width: f64,
    /// Time-integrated voltage, mV·ps.
    pub area: f64,
}

impl PulseShape {
    /// Pulse for characteristic voltage `v_c`: FWHM `Phi0 / (2 V_c)`.
    pub fn new(v_c: f64) -> Result<Self> {
        if !(v_c > 0.0 && v_c.is_finite()) {
            return Err(Error::InvalidArgument(format!("v_c must be positive, got {v_c}")));
        }
        let width = PHI0_MV_PS / (2.0 * v_c * VC_UNIT_MV);
        let sigma = width / FWHM_PER_SIGMA;
        let amplitude = PHI0_MV_PS / (sigma * (2.0 * std::f64::consts::PI).sqrt());
        Ok(Self { v_c, amplitude, width, area: PHI0_MV_PS })
    }

    /// Pulse whose power-equivalent width ([`Self::equivalent_width`]) is
    /// `width_ps`.
    pub fn from_equivalent_width(width_ps: f64) -> Result<Self> {
        if !(width_ps > 0.0 && width_ps.is_finite()) {
            return Err(Error::InvalidArgument(format!("width must be positive, got {width_ps}")));
        }
        let fwhm = width_ps * FWHM_PER_SIGMA / std::f64::consts::PI.sqrt();
        Self::new(PHI0_MV_PS / (2.0 * VC_UNIT_MV * fwhm))
    }

    /// Gaussian standard deviation, ps.
    pub fn sigma(&self) -> f64 {
        self.width / FWHM_PER_SIGMA
    }

    /// `integral V^2 dt / V_peak^2` in ps: the width of a rectangular pulse
    /// with the same peak and energy. This is the pulse width that makes the
    /// duty-cycle power formula exact.
    pub fn equivalent_width(&self) -> f64 {
        self.sigma() * std::f64::consts::PI.sqrt()
    }

    /// Voltage (mV) at `dt` ns from the pulse centre.
    pub fn eval(&self, dt: f64) -> f64 {
        let x = dt * 1e3 / self.sigma();
        self.amplitude * (-0.5 * x * x).exp()
    }

    /// Half-width (ns) beyond which the pulse is below 1e-14 of its peak.
    pub fn support(&self) -> f64 {
        8.0 * self.sigma() * 1e-3
    }
}

pub fn pulse_shape(v_c: f64) -> Result<PulseShape> {
    PulseShape::new(v_c)
}

/// Independent Gaussian timing error per clock edge.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JitterModel {
    /// RMS jitter, ps.
    pub sigma: f64,
    pub seed: u64,
}

impl JitterModel {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("jitter sigma must be >= 0, got {sigma}")));
        }
        Ok(Self { sigma, seed })
    }

    pub fn none() -> Self {
        Self { sigma: 0.0, seed: 0 }
    }

    /// Deterministic sampler of per-edge offsets in ns; `None` when sigma is 0.
    pub(crate) fn sampler(&self) -> Option<JitterSampler> {
        (self.sigma > 0.0).then(|| JitterSampler {
            rng: ChaCha8Rng::seed_from_u64(self.seed),
            normal: Normal::new(0.0, self.sigma * 1e-3).expect("sigma validated"),
        })
    }
}

impl Default for JitterModel {
    fn default() -> Self {
        Self::none()
    }
}

pub(crate) struct JitterSampler {
    rng: ChaCha8Rng,
    normal: Normal<f64>,
}

impl JitterSampler {
    pub(crate) fn draw(&mut self) -> f64 {
        self.normal.sample(&mut self.rng)
    }
}

/// Timestamps of emitted pulses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventSequence {
    /// Sorted pulse times, ns.
    pub timestamps: Vec<f64>,
    /// Train length, ns.
    pub duration: f64,
    /// Clock frequency, GHz.
    pub f_clk: f64,
    pub meta: String,
}

impl EventSequence {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }
}

/// One event at `(k + m N) / f_clk` (plus jitter) for every set bit `k` and
/// cycle `m` whose ideal time is below `duration`.
pub fn event_times(p: &Pattern, f_clk: f64, duration: f64, jitter: &JitterModel) -> Result<EventSequence> {
    if !(f_clk > 0.0 && f_clk.is_finite()) {
        return Err(Error::InvalidArgument(format!("f_clk must be positive, got {f_clk}")));
    }
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::InvalidArgument(format!("duration must be positive, got {duration}")));
    }
    let mut sampler = jitter.sampler();
    let mut timestamps = Vec::new();
    let mut tick: u64 = 0;
    loop {
        let t = tick as f64 / f_clk;
        if t >= duration {
            break;
        }
        if p.bit((tick % p.n_bits() as u64) as usize) {
            let offset = sampler.as_mut().map_or(0.0, JitterSampler::draw);
            timestamps.push((t + offset).clamp(0.0, duration));
        }
        tick += 1;
    }
    if jitter.sigma > 0.0 {
        timestamps.sort_by(f64::total_cmp);
    }
    Ok(EventSequence {
        timestamps,
        duration,
        f_clk,
        meta: format!("pattern {p} at {f_clk} GHz, jitter {} ps (seed {})", jitter.sigma, jitter.seed),
    })
}

/// Sampling instants for [`render`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Timebase {
    Even,
    /// Each instant is displaced by a uniform draw in
    /// `[-spread/2, spread/2)` sample periods; `spread < 1` keeps the
    /// instants ordered.
    Uneven { seed: u64, spread: f64 },
}

/// Sampled voltage trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    /// Strictly increasing sample times, ns.
    pub times: Vec<f64>,
    /// Voltage at each sample, mV.
    pub voltages: Vec<f64>,
    pub evenly_sampled: bool,
}

impl Waveform {
    pub fn new(times: Vec<f64>, voltages: Vec<f64>, evenly_sampled: bool) -> Result<Self> {
        if times.len() != voltages.len() {
            return Err(Error::InvalidArgument("times and voltages differ in length".into()));
        }
        if times.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
            return Err(Error::InvalidArgument("sample times must be strictly increasing".into()));
        }
        Ok(Self { times, voltages, evenly_sampled })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.voltages.iter().copied())
    }

    /// Time between first and last sample, ns.
    pub fn span(&self) -> f64 {
        match (self.times.first(), self.times.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// Trapezoidal integral of `g(V)` over samples with `t0 <= t <= t1`.
    fn trapezoid(&self, t0: f64, t1: f64, g: impl Fn(f64) -> f64) -> f64 {
        let lo = self.times.partition_point(|&t| t < t0);
        let hi = self.times.partition_point(|&t| t <= t1);
        (lo + 1..hi)
            .map(|i| 0.5 * (g(self.voltages[i]) + g(self.voltages[i - 1])) * (self.times[i] - self.times[i - 1]))
            .sum()
    }

    /// `integral V dt` over `[t0, t1]`, mV·ns.
    pub fn integral(&self, t0: f64, t1: f64) -> f64 {
        self.trapezoid(t0, t1, |v| v)
    }

    /// Time-averaged `V^2` over `[t0, t1]`, mV².
    pub fn mean_power(&self, t0: f64, t1: f64) -> f64 {
        self.trapezoid(t0, t1, |v| v * v) / (t1 - t0)
    }
}

/// Sum of pulses centred on each event, sampled on `[0, duration)` at
/// `sample_rate` GHz. Choose `sample_rate` above twice the highest frequency
/// of interest and at least `2 / sigma` so the pulse is resolved.
pub fn render(events: &EventSequence, shape: &PulseShape, sample_rate: f64, timebase: Timebase) -> Result<Waveform> {
    if !(sample_rate > 0.0 && sample_rate.is_finite()) {
        return Err(Error::InvalidArgument(format!("sample rate must be positive, got {sample_rate}")));
    }
    let dt = 1.0 / sample_rate;
    let n = (events.duration * sample_rate).ceil() as usize;
    let mut times: Vec<f64> = (0..n).map(|i| i as f64 * dt).take_while(|&t| t < events.duration).collect();

    let evenly_sampled = match timebase {
        Timebase::Even => true,
        Timebase::Uneven { seed, spread } => {
            if !(0.0..1.0).contains(&spread) {
                return Err(Error::InvalidArgument(format!("spread must be in [0, 1), got {spread}")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for t in times.iter_mut() {
                *t += (rng.random::<f64>() - 0.5) * spread * dt;
            }
            false
        }
    };
    if times.len() < 2 {
        return Err(Error::InvalidArgument("duration shorter than two samples".into()));
    }

    let support = shape.support();
    let ts = &events.timestamps;
    let voltages = times
        .iter()
        .map(|&t| {
            let first = ts.partition_point(|&e| e < t - support);
            ts[first..].iter().take_while(|&&e| e <= t + support).map(|&e| shape.eval(t - e)).sum()
        })
        .collect();
    Waveform::new(std::mem::take(&mut times), voltages, evenly_sampled)
}

/// Default merge dead time for a pulse shape: one FWHM, in ns.
pub fn default_dead_time(shape: &PulseShape) -> f64 {
    shape.width * 1e-3
}

/// Event-level feedforward comb: the union of the train and a copy delayed
/// by `stage.delay`, observed over the same window. SFQ pulses merge rather
/// than add, so any event closer than `dead_time` to the previously kept one
/// is dropped. `alpha` scales pulse amplitude and has no timing effect.
pub fn comb_apply_events(events: &EventSequence, stage: &CombStage, dead_time: f64) -> Result<EventSequence> {
    if stage.kind == CombKind::Feedback {
        return Err(Error::NotEventRepresentable);
    }
    if !(dead_time >= 0.0 && dead_time.is_finite()) {
        return Err(Error::InvalidArgument(format!("dead time must be >= 0, got {dead_time}")));
    }
    let delayed = events
        .timestamps
        .iter()
        .map(|&t| t + stage.delay)
        .take_while(|&t| t < events.duration);
    let mut all: Vec<f64> = events.timestamps.iter().copied().chain(delayed).collect();
    all.sort_by(f64::total_cmp);

    let mut merged: Vec<f64> = Vec::with_capacity(all.len());
    for t in all {
        match merged.last() {
            Some(&last) if t - last < dead_time || t == last => {}
            _ => merged.push(t),
        }
    }
    Ok(EventSequence {
        timestamps: merged,
        duration: events.duration,
        f_clk: events.f_clk,
        meta: format!("{}; comb delay {} ns", events.meta, stage.delay),
    })
}

/// Time-domain average power `P_peak * (width / T_clk) * (n / N)`, with the
/// width taken as the pulse's power-equivalent width.
pub fn avg_power(p: &Pattern, shape: &PulseShape, f_clk: f64, p_peak: f64) -> f64 {
    let t_clk_ps = 1e3 / f_clk;
    p_peak * (shape.equivalent_width() / t_clk_ps) * (p.set_bits() as f64 / p.n_bits() as f64)
}
