//! Python bindings for the pulsetone core.
//!
//! Input errors raise `ValueError`; physically impossible requests (unstable
//! feedback, timing violations, undefined objectives) raise `RuntimeError`.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use pulsetone::estimator::{self, FrequencyGrid};
use pulsetone::pattern;
use pulsetone::spectrum::{self, CombKind, CombStage};
use pulsetone::synth::{self, JitterModel, Timebase, Waveform};
use pulsetone::timing::{self, CellTiming, ClockStyle};
use pulsetone::tuner::{self, Objective};
use pulsetone::Error;

fn to_py(err: Error) -> PyErr {
    match err {
        Error::UnstableFeedback(_)
        | Error::RaceViolation(_)
        | Error::NotEventRepresentable
        | Error::UndefinedObjective(_)
        | Error::DegenerateInput(_)
        | Error::NoPeak(_)
        | Error::WriteInReadMode => PyRuntimeError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

fn parse(text: &str) -> PyResult<pattern::Pattern> {
    pattern::Pattern::parse(text).map_err(to_py)
}

/// A CSR bit pattern; cell 0 is the first character.
#[pyclass(name = "Pattern", frozen, eq, hash, str, skip_from_py_object)]
#[derive(Clone, PartialEq, Eq, Hash)]
struct PyPattern(pattern::Pattern);

impl std::fmt::Display for PyPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

#[pymethods]
impl PyPattern {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        parse(text).map(Self)
    }

    #[staticmethod]
    fn from_distances(distances: Vec<usize>) -> PyResult<Self> {
        pattern::Pattern::from_distances(&distances).map(Self).map_err(to_py)
    }

    #[getter]
    fn bits(&self) -> Vec<bool> {
        self.0.bits().to_vec()
    }

    #[getter]
    fn n_bits(&self) -> usize {
        self.0.n_bits()
    }

    #[getter]
    fn set_bits(&self) -> usize {
        self.0.set_bits()
    }

    fn canonical(&self) -> Self {
        Self(self.0.canonical())
    }

    fn dual(&self) -> Self {
        Self(self.0.dual())
    }

    fn reversed(&self) -> Self {
        Self(self.0.reversed())
    }

    fn rotate_left(&self, r: usize) -> Self {
        Self(self.0.rotate_left(r))
    }

    fn distance_set(&self) -> PyResult<Vec<usize>> {
        self.0.distance_set().map(|d| d.as_slice().to_vec()).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Pattern('{}')", self.0)
    }
}

fn pattern_arg(obj: &Bound<'_, PyAny>) -> PyResult<pattern::Pattern> {
    if let Ok(p) = obj.cast::<PyPattern>() {
        return Ok(p.get().0.clone());
    }
    parse(&obj.extract::<String>()?)
}

#[pyfunction]
#[pyo3(signature = (a, b, rel_tol = pattern::DEFAULT_REL_TOL))]
fn spectrally_equivalent(a: &Bound<'_, PyAny>, b: &Bound<'_, PyAny>, rel_tol: f64) -> PyResult<bool> {
    pattern::spectrally_equivalent(&pattern_arg(a)?, &pattern_arg(b)?, rel_tol).map_err(to_py)
}

/// Spectrally unique classes as dicts with `canonical`, `set_bits`,
/// `distance_set`, `members` and `signature`.
#[pyfunction]
fn enumerate_unique(py: Python<'_>, n: usize) -> PyResult<Vec<Bound<'_, PyDict>>> {
    let classes = pattern::enumerate_unique(n).map_err(to_py)?;
    classes
        .iter()
        .map(|c| {
            let d = PyDict::new(py);
            d.set_item("canonical", c.canonical.to_string())?;
            d.set_item("set_bits", c.set_bits())?;
            d.set_item("distance_set", c.distance_set().as_slice().to_vec())?;
            d.set_item("members", c.members.iter().map(|m| m.to_string()).collect::<Vec<_>>())?;
            d.set_item("signature", c.spectral_signature.clone())?;
            Ok(d)
        })
        .collect()
}

/// `(lower, upper)` bounds on the class count.
#[pyfunction]
fn count_bounds(n: usize) -> PyResult<(u64, u64)> {
    let b = pattern::count_bounds(n).map_err(to_py)?;
    Ok((b.lower, b.upper))
}

fn comb_stage(delay: f64, alpha: f64, kind: &str) -> PyResult<CombStage> {
    let kind = match kind {
        "feedforward" | "ff" => CombKind::Feedforward,
        "feedback" | "fb" => CombKind::Feedback,
        other => return Err(PyValueError::new_err(format!("unknown comb kind '{other}'"))),
    };
    CombStage::new(kind, delay, alpha).map_err(to_py)
}

/// Tone frequencies (GHz) and complex amplitudes over one period, after the
/// given `(delay_ns, alpha)` feedforward stages.
#[pyfunction]
#[pyo3(signature = (pattern, f_clk, combs = Vec::new()))]
fn tone_spectrum(pattern: &Bound<'_, PyAny>, f_clk: f64, combs: Vec<(f64, f64)>) -> PyResult<(Vec<f64>, Vec<Complex64>)> {
    let stages = combs.iter().map(|&(d, a)| comb_stage(d, a, "feedforward")).collect::<PyResult<Vec<_>>>()?;
    let s = spectrum::tone_spectrum(&pattern_arg(pattern)?, f_clk).map_err(to_py)?;
    let s = spectrum::apply_comb(&s, &stages).map_err(to_py)?;
    Ok((s.frequencies(), s.amplitudes))
}

#[pyfunction]
#[pyo3(signature = (f, delay, alpha = 1.0, kind = "feedforward"))]
fn comb_response(f: f64, delay: f64, alpha: f64, kind: &str) -> PyResult<Complex64> {
    spectrum::comb_response(&comb_stage(delay, alpha, kind)?, f).map_err(to_py)
}

/// Pulse timestamps (ns).
#[pyfunction]
#[pyo3(signature = (pattern, f_clk, duration, jitter_ps = 0.0, seed = 0))]
fn event_times(pattern: &Bound<'_, PyAny>, f_clk: f64, duration: f64, jitter_ps: f64, seed: u64) -> PyResult<Vec<f64>> {
    let jitter = JitterModel::new(jitter_ps, seed).map_err(to_py)?;
    let ev = synth::event_times(&pattern_arg(pattern)?, f_clk, duration, &jitter).map_err(to_py)?;
    Ok(ev.timestamps)
}

/// Rendered waveform `(times_ns, voltages_mV)`.
#[pyfunction]
#[pyo3(signature = (pattern, f_clk, duration, v_c = 1.0, jitter_ps = 0.0, sample_rate = synth::DEFAULT_SAMPLE_RATE, uneven = None, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn render(
    pattern: &Bound<'_, PyAny>,
    f_clk: f64,
    duration: f64,
    v_c: f64,
    jitter_ps: f64,
    sample_rate: f64,
    uneven: Option<f64>,
    seed: u64,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let jitter = JitterModel::new(jitter_ps, seed).map_err(to_py)?;
    let ev = synth::event_times(&pattern_arg(pattern)?, f_clk, duration, &jitter).map_err(to_py)?;
    let timebase = match uneven {
        Some(spread) => Timebase::Uneven { seed: seed.wrapping_add(1), spread },
        None => Timebase::Even,
    };
    let w = synth::render(&ev, &synth::pulse_shape(v_c).map_err(to_py)?, sample_rate, timebase).map_err(to_py)?;
    Ok((w.times, w.voltages))
}

/// Time-domain average power (mV²) with the pulse's own peak power.
#[pyfunction]
fn avg_power(pattern: &Bound<'_, PyAny>, f_clk: f64, v_c: f64) -> PyResult<f64> {
    let shape = synth::pulse_shape(v_c).map_err(to_py)?;
    Ok(synth::avg_power(&pattern_arg(pattern)?, &shape, f_clk, shape.amplitude * shape.amplitude))
}

/// Lomb–Scargle power at `frequencies` (GHz); `psd=True` converts to mV²/Hz.
#[pyfunction]
#[pyo3(signature = (times, voltages, frequencies, psd = false))]
fn lomb_scargle(times: Vec<f64>, voltages: Vec<f64>, frequencies: Vec<f64>, psd: bool) -> PyResult<Vec<f64>> {
    let w = Waveform::new(times, voltages, false).map_err(to_py)?;
    let grid = FrequencyGrid::from_frequencies(frequencies).map_err(to_py)?;
    let mut pg = estimator::lomb_scargle(&w, &grid).map_err(to_py)?;
    if psd {
        pg = estimator::to_psd(&pg).map_err(to_py)?;
    }
    Ok(pg.power)
}

/// `(center_GHz, peak_power, fwhm_GHz)` of the tone near `f0`.
#[pyfunction]
fn tone_metrics(frequencies: Vec<f64>, power: Vec<f64>, f0: f64, window: f64) -> PyResult<(f64, f64, f64)> {
    if frequencies.len() != power.len() {
        return Err(PyValueError::new_err("frequencies and power differ in length"));
    }
    let pg = estimator::Periodogram {
        frequencies,
        power,
        kind: estimator::SpectrumKind::PowerSpectrum,
        n_samples: 0,
        f_res: 0.0,
    };
    let m = estimator::tone_metrics(&pg, f0, window).map_err(to_py)?;
    Ok((m.center, m.peak_power, m.fwhm))
}

/// Best comb delay. `objective` is one of suppress, amplify,
/// max-separation, min-separation. Returns `(delay_ns, value, degenerate)`.
#[pyfunction]
#[pyo3(signature = (pattern, f_clk, objective, f1, f2 = None, tau_max = None))]
fn optimize_delay(
    pattern: &Bound<'_, PyAny>,
    f_clk: f64,
    objective: &str,
    f1: f64,
    f2: Option<f64>,
    tau_max: Option<f64>,
) -> PyResult<(f64, f64, bool)> {
    let p = pattern_arg(pattern)?;
    let need_f2 = || f2.ok_or_else(|| PyValueError::new_err("separation objectives need f2"));
    let obj = match objective {
        "suppress" => Objective::Suppress { f: f1 },
        "amplify" => Objective::Amplify { f: f1 },
        "max-separation" | "max_separation" => Objective::MaxSeparation { f1, f2: need_f2()? },
        "min-separation" | "min_separation" => Objective::MinSeparation { f1, f2: need_f2()? },
        other => return Err(PyValueError::new_err(format!("unknown objective '{other}'"))),
    };
    let tau_max = tau_max.unwrap_or_else(|| tuner::default_tau_max(&p, f_clk));
    let o = tuner::optimize_delay(&p, f_clk, &obj, tau_max).map_err(to_py)?;
    Ok((o.delay, o.value, o.degenerate))
}

/// `(delays_ns, powers)` with one power list per target.
#[pyfunction]
#[pyo3(signature = (pattern, f_clk, targets, tau_max = None, steps = tuner::DEFAULT_STEPS))]
fn sweep_delay(
    pattern: &Bound<'_, PyAny>,
    f_clk: f64,
    targets: Vec<f64>,
    tau_max: Option<f64>,
    steps: usize,
) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
    let p = pattern_arg(pattern)?;
    let tau_max = tau_max.unwrap_or_else(|| tuner::default_tau_max(&p, f_clk));
    let s = tuner::sweep_delay(&p, f_clk, tau_max, steps, &targets).map_err(to_py)?;
    Ok((s.delays, s.tone_powers))
}

fn network(n_bits: usize, style: &str, f_clk: f64) -> PyResult<timing::TimingNetConfig> {
    let style = match style {
        "symmetric" => ClockStyle::Symmetric,
        "binary-tree" | "binary_tree" => ClockStyle::BinaryTree,
        other => return Err(PyValueError::new_err(format!("unknown clock style '{other}'"))),
    };
    timing::build_network(n_bits, style, f_clk, CellTiming::default()).map_err(to_py)
}

/// Timing report as a dict: per-cell skew, total skew, violations, ok.
#[pyfunction]
fn check_timing<'py>(py: Python<'py>, n_bits: usize, style: &str, f_clk: f64) -> PyResult<Bound<'py, PyDict>> {
    let r = timing::check_timing(&network(n_bits, style, f_clk)?);
    let d = PyDict::new(py);
    d.set_item("per_cell_skew", r.per_cell_skew)?;
    d.set_item("total_skew", r.total_skew)?;
    d.set_item("race_violations", r.race_violations.iter().map(|v| (v.cell, v.slack)).collect::<Vec<_>>())?;
    d.set_item("setup_violations", r.setup_violations.iter().map(|v| (v.cell, v.slack)).collect::<Vec<_>>())?;
    d.set_item("ok", r.ok)?;
    Ok(d)
}

/// Output pulse times (ns) of a simulated CSR loaded with `pattern`.
#[pyfunction]
#[pyo3(signature = (pattern, style, f_clk, duration, jitter_ps = 0.0, seed = 0))]
fn simulate_csr(
    pattern: &Bound<'_, PyAny>,
    style: &str,
    f_clk: f64,
    duration: f64,
    jitter_ps: f64,
    seed: u64,
) -> PyResult<Vec<f64>> {
    let p = pattern_arg(pattern)?;
    let cfg = network(p.n_bits(), style, f_clk)?;
    let jitter = JitterModel::new(jitter_ps, seed).map_err(to_py)?;
    Ok(timing::simulate_pattern(&cfg, &p, duration, &jitter).map_err(to_py)?.timestamps)
}

#[pyfunction]
fn splitter_count(style: &str, n_bits: usize) -> PyResult<usize> {
    let cfg = network(2, style, 1.0)?;
    Ok(timing::splitter_count(cfg.style, n_bits))
}

#[pymodule]
#[pyo3(name = "pulsetone")]
fn pulsetone_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPattern>()?;
    m.add_function(wrap_pyfunction!(spectrally_equivalent, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_unique, m)?)?;
    m.add_function(wrap_pyfunction!(count_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(tone_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(comb_response, m)?)?;
    m.add_function(wrap_pyfunction!(event_times, m)?)?;
    m.add_function(wrap_pyfunction!(render, m)?)?;
    m.add_function(wrap_pyfunction!(avg_power, m)?)?;
    m.add_function(wrap_pyfunction!(lomb_scargle, m)?)?;
    m.add_function(wrap_pyfunction!(tone_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_delay, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_delay, m)?)?;
    m.add_function(wrap_pyfunction!(check_timing, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_csr, m)?)?;
    m.add_function(wrap_pyfunction!(splitter_count, m)?)?;
    Ok(())
}
