//! Delay sweeps and delay optimization for a single unity-scaling
//! feedforward comb stage behind the CSR.
//!
//! After the stage, the tone at `f` has power `|c(f)|^2 |1 + exp(-2 pi j f tau)|^2`.
//! Separation between two tones is measured on amplitudes, `| |A1| - |A2| |`,
//! so that the largest separation falls exactly on a null of the weaker
//! tone.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pattern::Pattern;
use crate::spectrum::{comb_response, tone_spectrum, CombStage, ToneSpectrum};

/// Default number of sweep points over `[0, tau_max]`.
pub const DEFAULT_STEPS: usize = 1000;

/// Relative tolerance under which two refined optima count as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

const GOLDEN_ITERATIONS: usize = 200;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// ns.
    pub delays: Vec<f64>,
    /// Target frequencies in request order, GHz.
    pub targets: Vec<f64>,
    /// `tone_powers[i][j]`: power of `targets[i]` at `delays[j]`.
    pub tone_powers: Vec<Vec<f64>>,
    /// Amplitude separation of the first two targets; present when exactly
    /// two targets are swept.
    pub separation: Option<Vec<f64>>,
    /// Grid points nearest to a multiple of the clock period. There the
    /// delayed SFQ pulses coincide with clock slots and merge instead of
    /// adding, so the analytic value does not describe the hardware.
    pub degenerate: Vec<bool>,
}

impl SweepResult {
    pub fn powers_for(&self, f: f64) -> Option<&[f64]> {
        self.targets
            .iter()
            .position(|&t| (t - f).abs() <= 1e-9 * f.abs().max(1.0))
            .map(|i| self.tone_powers[i].as_slice())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Objective {
    Suppress { f: f64 },
    Amplify { f: f64 },
    MaxSeparation { f1: f64, f2: f64 },
    MinSeparation { f1: f64, f2: f64 },
}

impl Objective {
    fn targets(&self) -> Vec<f64> {
        match *self {
            Objective::Suppress { f } | Objective::Amplify { f } => vec![f],
            Objective::MaxSeparation { f1, f2 } | Objective::MinSeparation { f1, f2 } => vec![f1, f2],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DelayOptimum {
    /// ns.
    pub delay: f64,
    /// Objective value in natural units: tone power for suppress/amplify,
    /// amplitude separation otherwise.
    pub value: f64,
    /// The optimum sits on a multiple of the clock period.
    pub degenerate: bool,
}

/// Tone power after a unity feedforward stage of delay `tau`.
fn filtered_power(base: &ToneSpectrum, f: f64, tau: f64) -> f64 {
    let stage = CombStage { delay: tau, alpha: 1.0, kind: crate::spectrum::CombKind::Feedforward };
    let h = comb_response(&stage, f).expect("feedforward response is total");
    base.power_at(f).expect("target validated on grid") * h.norm_sqr()
}

fn separation(base: &ToneSpectrum, f1: f64, f2: f64, tau: f64) -> f64 {
    (filtered_power(base, f1, tau).sqrt() - filtered_power(base, f2, tau).sqrt()).abs()
}

fn is_degenerate(tau: f64, f_clk: f64, tol: f64) -> bool {
    let cycles = tau * f_clk;
    (cycles - cycles.round()).abs() <= tol * f_clk
}

fn validate_range(tau_max: f64, steps: usize) -> Result<()> {
    if !(tau_max > 0.0 && tau_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("tau_max must be positive, got {tau_max}")));
    }
    if steps < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 sweep steps, got {steps}")));
    }
    Ok(())
}

fn grid(tau_max: f64, steps: usize) -> Vec<f64> {
    (0..steps).map(|i| tau_max * i as f64 / (steps - 1) as f64).collect()
}

/// Default sweep range: one CSR period, `N / f_clk`.
pub fn default_tau_max(p: &Pattern, f_clk: f64) -> f64 {
    p.n_bits() as f64 / f_clk
}

/// Analytic tone powers for `steps` delays evenly spaced over `[0, tau_max]`.
pub fn sweep_delay(p: &Pattern, f_clk: f64, tau_max: f64, steps: usize, targets: &[f64]) -> Result<SweepResult> {
    validate_range(tau_max, steps)?;
    if targets.is_empty() {
        return Err(Error::InvalidArgument("no target frequencies".into()));
    }
    let base = tone_spectrum(p, f_clk)?;
    for &f in targets {
        base.tone_index(f)?;
    }
    let delays = grid(tau_max, steps);
    let tone_powers: Vec<Vec<f64>> = targets
        .iter()
        .map(|&f| delays.iter().map(|&tau| filtered_power(&base, f, tau)).collect())
        .collect();
    let separation = (targets.len() == 2).then(|| {
        tone_powers[0]
            .iter()
            .zip(&tone_powers[1])
            .map(|(a, b)| (a.sqrt() - b.sqrt()).abs())
            .collect()
    });
    let half_step = 0.5 * tau_max / (steps - 1) as f64;
    let degenerate = delays.iter().map(|&tau| is_degenerate(tau, f_clk, half_step)).collect();
    Ok(SweepResult { delays, targets: targets.to_vec(), tone_powers, separation, degenerate })
}

/// Maximizes `score` on `[a, b]` by golden-section search and returns the
/// best point seen (including the bracket ends).
fn golden_max(score: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut best = [(a, score(a)), (b, score(b))]
        .into_iter()
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .unwrap();
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = score(x1);
    let mut f2 = score(x2);
    for _ in 0..GOLDEN_ITERATIONS {
        if b - a <= f64::EPSILON * b.abs().max(1e-12) {
            break;
        }
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = score(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = score(x2);
        }
        for cand in [(x1, f1), (x2, f2)] {
            if cand.1 > best.1 || (cand.1 == best.1 && cand.0 < best.0) {
                best = cand;
            }
        }
    }
    best
}

/// Best delay in `[0, tau_max]`: a [`DEFAULT_STEPS`]-point sweep, then
/// golden-section refinement around every local optimum of the sweep. The
/// smallest delay among optima tied within [`TIE_TOLERANCE`] wins.
pub fn optimize_delay(p: &Pattern, f_clk: f64, objective: &Objective, tau_max: f64) -> Result<DelayOptimum> {
    validate_range(tau_max, DEFAULT_STEPS)?;
    let base = tone_spectrum(p, f_clk)?;
    let targets = objective.targets();
    for &f in &targets {
        base.tone_index(f)?;
    }
    let base_powers: Vec<f64> = targets.iter().map(|&f| base.power_at(f).unwrap()).collect();
    let scale = base_powers.iter().cloned().fold(0.0, f64::max);
    let floor = 1e-12 * (p.n_bits() * p.n_bits()) as f64;
    if scale <= floor {
        return Err(Error::UndefinedObjective("target tones are zero for every delay".into()));
    }

    // Internally always maximized.
    let score = |tau: f64| -> f64 {
        match *objective {
            Objective::Suppress { f } => -filtered_power(&base, f, tau),
            Objective::Amplify { f } => filtered_power(&base, f, tau),
            Objective::MaxSeparation { f1, f2 } => separation(&base, f1, f2, tau),
            Objective::MinSeparation { f1, f2 } => -separation(&base, f1, f2, tau),
        }
    };

    let delays = grid(tau_max, DEFAULT_STEPS);
    let scores: Vec<f64> = delays.iter().map(|&t| score(t)).collect();
    let last = scores.len() - 1;
    let mut refined: Vec<(f64, f64)> = Vec::new();
    for i in 0..=last {
        let left_ok = i == 0 || scores[i] >= scores[i - 1];
        let right_ok = i == last || scores[i] >= scores[i + 1];
        if !(left_ok && right_ok) {
            continue;
        }
        let a = delays[i.saturating_sub(1)];
        let b = delays[(i + 1).min(last)];
        refined.push((delays[i], scores[i]));
        refined.push(golden_max(&score, a, b));
    }

    let best = refined.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let tol = TIE_TOLERANCE * scale.max(best.abs());
    let (delay, s) = refined
        .into_iter()
        .filter(|r| r.1 >= best - tol)
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("sweep grid has at least one local optimum");

    let value = match objective {
        Objective::Suppress { .. } | Objective::MinSeparation { .. } => -s,
        _ => s,
    };
    let step = tau_max / (DEFAULT_STEPS - 1) as f64;
    Ok(DelayOptimum { delay, value, degenerate: is_degenerate(delay, f_clk, 1e-9 * step) })
}
