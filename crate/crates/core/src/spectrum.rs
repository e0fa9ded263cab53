//! Closed-form spectra of ideal (Dirac) CSR pulse trains and comb-filter
//! responses.
//!
//! A register of N bits clocked at `f_clk` emits a periodic train with period
//! `N / f_clk`. Its spectrum is a line comb with spacing `f_clk / N`, scaled by
//! `1 / (N T)` and weighted by the modulation function
//! `c(f) = sum_k S_k exp(-2 pi j f k T)`. On the tone grid `c` is the DFT of
//! the bit sequence, and it repeats with period `f_clk`.
//!
//! Frequencies are in GHz and times in ns throughout.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pattern::Pattern;

/// `c(f) = sum_k S_k exp(-2 pi j f k T)`.
pub fn modulation(p: &Pattern, f: f64, period: f64) -> Complex64 {
    p.set_positions()
        .map(|k| Complex64::from_polar(1.0, -2.0 * PI * f * k as f64 * period))
        .sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToneSpectrum {
    pub f_clk: f64,
    pub n_bits: usize,
    /// `c_k` for tone `k` at `k * f_clk / N`, one period `k = 0..N-1`.
    pub amplitudes: Vec<Complex64>,
}

impl ToneSpectrum {
    pub fn spacing(&self) -> f64 {
        self.f_clk / self.n_bits as f64
    }

    /// Line-comb prefactor `1 / (N T) = f_clk / N`.
    pub fn scale(&self) -> f64 {
        self.spacing()
    }

    pub fn frequency(&self, k: usize) -> f64 {
        k as f64 * self.spacing()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n_bits).map(|k| self.frequency(k)).collect()
    }

    pub fn powers(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|c| c.norm_sqr()).collect()
    }

    /// Tone index for `f`, folded into one period. Fails if `f` is not a
    /// multiple of the grid spacing (relative tolerance 1e-9).
    pub fn tone_index(&self, f: f64) -> Result<usize> {
        tone_index(f, self.f_clk, self.n_bits)
    }

    /// Amplitude at any grid frequency, using the `f_clk` periodicity.
    pub fn amplitude_at(&self, f: f64) -> Result<Complex64> {
        Ok(self.amplitudes[self.tone_index(f)?])
    }

    pub fn power_at(&self, f: f64) -> Result<f64> {
        Ok(self.amplitude_at(f)?.norm_sqr())
    }
}

pub(crate) fn tone_index(f: f64, f_clk: f64, n_bits: usize) -> Result<usize> {
    let spacing = f_clk / n_bits as f64;
    let pos = f / spacing;
    let nearest = pos.round();
    if !f.is_finite() || (pos - nearest).abs() > 1e-9 * pos.abs().max(1.0) {
        return Err(Error::OffGrid(f, spacing));
    }
    Ok((nearest as i64).rem_euclid(n_bits as i64) as usize)
}

/// Tone amplitudes `c_k = c(k f_clk / N)` with `T = 1 / f_clk`.
pub fn tone_spectrum(p: &Pattern, f_clk: f64) -> Result<ToneSpectrum> {
    if !(f_clk > 0.0 && f_clk.is_finite()) {
        return Err(Error::InvalidArgument(format!("f_clk must be positive, got {f_clk}")));
    }
    let n = p.n_bits();
    // f k T = k i / N exactly on the grid; reduce the index product mod N so
    // zero tones cancel to rounding level.
    let amplitudes = (0..n)
        .map(|k| {
            p.set_positions()
                .map(|i| Complex64::from_polar(1.0, -2.0 * PI * ((k * i) % n) as f64 / n as f64))
                .sum()
        })
        .collect();
    Ok(ToneSpectrum { f_clk, n_bits: n, amplitudes })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CombKind {
    Feedforward,
    Feedback,
}

/// One comb stage: `y(t) = x(t) + alpha x(t - tau)` (feedforward) or
/// `y(t) = x(t) + alpha y(t - tau)` (feedback).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombStage {
    /// Delay in ns.
    pub delay: f64,
    pub alpha: f64,
    pub kind: CombKind,
}

impl CombStage {
    pub fn new(kind: CombKind, delay: f64, alpha: f64) -> Result<Self> {
        if !(delay >= 0.0 && delay.is_finite()) {
            return Err(Error::InvalidArgument(format!("comb delay must be >= 0, got {delay}")));
        }
        if !alpha.is_finite() {
            return Err(Error::InvalidArgument("comb alpha must be finite".into()));
        }
        Ok(Self { delay, alpha, kind })
    }

    /// Feedforward stage; `alpha = 1` is the RSFQ unity-scaling merge.
    pub fn feedforward(delay: f64, alpha: f64) -> Result<Self> {
        Self::new(CombKind::Feedforward, delay, alpha)
    }

    pub fn feedback(delay: f64, alpha: f64) -> Result<Self> {
        Self::new(CombKind::Feedback, delay, alpha)
    }

    pub fn unity(delay: f64) -> Result<Self> {
        Self::feedforward(delay, 1.0)
    }
}

/// Frequency response of a single stage at `f`.
pub fn comb_response(stage: &CombStage, f: f64) -> Result<Complex64> {
    let rot = Complex64::from_polar(stage.alpha, -2.0 * PI * f * stage.delay);
    match stage.kind {
        CombKind::Feedforward => Ok(1.0 + rot),
        CombKind::Feedback => {
            if stage.alpha.abs() >= 1.0 {
                return Err(Error::UnstableFeedback(stage.alpha.abs()));
            }
            Ok(1.0 / (1.0 - rot))
        }
    }
}

/// Multiplies each tone by the product of the stage responses at its
/// frequency. Stages compose multiplicatively; an empty list is the identity.
pub fn apply_comb(s: &ToneSpectrum, stages: &[CombStage]) -> Result<ToneSpectrum> {
    let mut out = s.clone();
    for stage in stages {
        for (k, c) in out.amplitudes.iter_mut().enumerate() {
            *c *= comb_response(stage, s.frequency(k))?;
        }
    }
    Ok(out)
}
