//! Spectral modelling of SFQ pulse trains from circular shift registers.
//!
//! * [`pattern`]: CSR patterns, canonical forms and spectrally unique
//!   enumeration.
//! * [`spectrum`]: closed-form tone spectra and comb-filter responses.
//! * [`synth`]: pulse timestamps, pulse shapes and sampled waveforms.
//! * [`estimator`]: Lomb–Scargle periodograms, PSD and tone metrics.
//! * [`tuner`]: delay sweeps and optimization for a feedforward comb.
//! * [`timing`]: clock-network skew checks and a discrete-event CSR model.
//!
//! Units: GHz, ns, mV, with pulse widths and cell delays in ps.

pub mod error;
pub mod estimator;
pub mod io;
pub mod pattern;
pub mod spectrum;
pub mod synth;
pub mod timing;
pub mod tuner;

pub use error::{Error, Result};
pub use estimator::{lomb_scargle, to_psd, tone_metrics, FrequencyGrid, Periodogram, SpectrumKind, ToneMetrics};
pub use pattern::{
    canonicalize, count_bounds, distance_set, dual, enumerate_unique, spectral_signature, spectrally_equivalent,
    CountBounds, DistanceSet, EquivalenceClass, Pattern,
};
pub use spectrum::{apply_comb, comb_response, modulation, tone_spectrum, CombKind, CombStage, ToneSpectrum};
pub use synth::{
    avg_power, comb_apply_events, event_times, pulse_shape, render, EventSequence, JitterModel, PulseShape, Timebase,
    Waveform,
};
pub use timing::{
    build_network, check_timing, simulate_csr, simulate_pattern, splitter_count, CellTiming, ClockStyle, CsrOp,
    LoopState, TimingNetConfig, TimingReport,
};
pub use tuner::{optimize_delay, sweep_delay, DelayOptimum, Objective, SweepResult};
