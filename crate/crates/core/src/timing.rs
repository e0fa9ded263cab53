//! Timing-level model of the CSR and its clock distribution.
//!
//! Cells are delay elements: a DFF stores a data pulse and releases it
//! `clk_to_q` after its clock arrives; the pulse reaches the next cell
//! `data_delay` later. Cell `i` feeds cell `i + 1`, and cell `N - 1` feeds
//! cell 0 through an NDRO that opens the loop for writing.
//!
//! Clock-arrival times are quantized to 1/1024 ps. All arrivals, skews and
//! their sums are then exact in `f64`, so the loop skew telescopes to
//! exactly zero.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pattern::Pattern;
use crate::synth::{EventSequence, JitterModel, JitterSampler};

const TIME_QUANTUM_PS: f64 = 1.0 / 1024.0;

fn quantize(t_ps: f64) -> f64 {
    (t_ps / TIME_QUANTUM_PS).round() * TIME_QUANTUM_PS
}

/// Cell timing parameters, ps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellTiming {
    #[serde(rename = "setup_ps")]
    pub setup: f64,
    #[serde(rename = "hold_ps")]
    pub hold: f64,
    #[serde(rename = "clk_to_q_ps")]
    pub clk_to_q: f64,
    #[serde(rename = "data_delay_ps")]
    pub data_delay: f64,
}

impl Default for CellTiming {
    fn default() -> Self {
        Self { setup: 2.0, hold: 2.0, clk_to_q: 5.0, data_delay: 8.0 }
    }
}

impl CellTiming {
    fn validate(&self) -> Result<()> {
        let all = [self.setup, self.hold, self.clk_to_q, self.data_delay];
        if all.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument("cell timing values must be finite and >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClockStyle {
    /// First N/2 cells clocked in concurrent flow, last N/2 in counter flow.
    Symmetric,
    /// Equal arrival at every cell.
    BinaryTree,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimingNetConfig {
    pub n_bits: usize,
    pub style: ClockStyle,
    /// Clock arrival per cell, ps.
    pub clock_arrivals: Vec<f64>,
    /// GHz.
    pub f_clk: f64,
    pub cell: CellTiming,
}

impl TimingNetConfig {
    pub fn period_ps(&self) -> f64 {
        1e3 / self.f_clk
    }

    /// Config with explicit clock arrivals (quantized to the internal grid).
    pub fn with_arrivals(style: ClockStyle, clock_arrivals: Vec<f64>, f_clk: f64, cell: CellTiming) -> Result<Self> {
        if clock_arrivals.is_empty() {
            return Err(Error::InvalidArgument("need at least one cell".into()));
        }
        if clock_arrivals.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err(Error::InvalidArgument("clock arrivals must be finite and >= 0".into()));
        }
        if !(f_clk > 0.0 && f_clk.is_finite()) {
            return Err(Error::InvalidArgument(format!("f_clk must be positive, got {f_clk}")));
        }
        cell.validate()?;
        Ok(Self {
            n_bits: clock_arrivals.len(),
            style,
            clock_arrivals: clock_arrivals.into_iter().map(quantize).collect(),
            f_clk,
            cell,
        })
    }
}

/// Default per-stage clock delay for symmetric clocking: half the data delay.
pub fn default_stage_delay(cell: &CellTiming) -> f64 {
    0.5 * cell.data_delay
}

/// Clock network with the default per-stage delay.
pub fn build_network(n: usize, style: ClockStyle, f_clk: f64, cell: CellTiming) -> Result<TimingNetConfig> {
    build_network_with_stage_delay(n, style, f_clk, cell, default_stage_delay(&cell))
}

/// Binary tree: all arrivals zero. Symmetric: arrivals rise by `stage_delay`
/// along the concurrent half and fall back along the counter-flow half, so
/// the concurrent skews are `-stage_delay`, the counter-flow ones
/// `+stage_delay`, and the two junction cells see zero skew.
pub fn build_network_with_stage_delay(
    n: usize,
    style: ClockStyle,
    f_clk: f64,
    cell: CellTiming,
    stage_delay: f64,
) -> Result<TimingNetConfig> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one cell".into()));
    }
    if !(stage_delay >= 0.0 && stage_delay.is_finite()) {
        return Err(Error::InvalidArgument("stage delay must be finite and >= 0".into()));
    }
    let arrivals = match style {
        ClockStyle::BinaryTree => vec![0.0; n],
        ClockStyle::Symmetric => {
            if !n.is_multiple_of(2) {
                return Err(Error::InvalidArgument(format!("symmetric clocking needs even N, got {n}")));
            }
            let half = n / 2;
            let step = quantize(stage_delay);
            (0..half)
                .map(|i| i as f64 * step)
                .chain((0..half).map(|j| (half - 1 - j) as f64 * step))
                .collect()
        }
    };
    TimingNetConfig::with_arrivals(style, arrivals, f_clk, cell)
}

/// Splitters in the clock tree: `N - 1` for a binary tree, `N / 2` for the
/// symmetric network (which uses 3-way splitters).
pub fn splitter_count(style: ClockStyle, n: usize) -> usize {
    match style {
        ClockStyle::BinaryTree => n.saturating_sub(1),
        ClockStyle::Symmetric => n / 2,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub cell: usize,
    /// Negative or zero margin, ps.
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    /// `t_i - t_{i+1}` (cyclic), ps.
    pub per_cell_skew: Vec<f64>,
    pub total_skew: f64,
    /// Hold (race) failures: `skew + data_delay <= hold`.
    pub race_violations: Vec<Violation>,
    /// Setup failures: `T - skew - clk_to_q - data_delay - setup < 0`.
    pub setup_violations: Vec<Violation>,
    pub ok: bool,
}

/// Per-cell skew, race and setup checks. The race check uses the data delay
/// alone (minimum path); the setup check adds `clk_to_q` (maximum path).
pub fn check_timing(cfg: &TimingNetConfig) -> TimingReport {
    let n = cfg.clock_arrivals.len();
    let t = &cfg.clock_arrivals;
    let per_cell_skew: Vec<f64> = (0..n).map(|i| t[i] - t[(i + 1) % n]).collect();
    let total_skew: f64 = per_cell_skew.iter().sum();
    let c = &cfg.cell;
    let period = cfg.period_ps();

    let mut race_violations = Vec::new();
    let mut setup_violations = Vec::new();
    for (i, &skew) in per_cell_skew.iter().enumerate() {
        let hold_slack = skew + c.data_delay - c.hold;
        if hold_slack <= 0.0 {
            race_violations.push(Violation { cell: i, slack: hold_slack });
        }
        let setup_slack = period - skew - c.clk_to_q - c.data_delay - c.setup;
        if setup_slack < 0.0 {
            setup_violations.push(Violation { cell: i, slack: setup_slack });
        }
    }
    let ok = total_skew == 0.0 && race_violations.is_empty() && setup_violations.is_empty();
    TimingReport { per_cell_skew, total_skew, race_violations, setup_violations, ok }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoopState {
    /// Write mode (NDRO SET = 0).
    Open,
    /// Read mode (NDRO SET = 1): the last cell feeds the first.
    Closed,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum CsrOp {
    /// Shift one bit in through the data input; one clock tick.
    Write(bool),
    SetLoop(LoopState),
    /// Clock the register for this many ns, recording output pulses.
    Run(f64),
}

impl CsrOp {
    /// Serial load of `p`: open loop, write `S_0 .. S_{N-1}`, close loop. After
    /// this the output cell holds `S_0`.
    pub fn load(p: &Pattern) -> Vec<CsrOp> {
        std::iter::once(CsrOp::SetLoop(LoopState::Open))
            .chain(p.bits().iter().map(|&b| CsrOp::Write(b)))
            .chain(std::iter::once(CsrOp::SetLoop(LoopState::Closed)))
            .collect()
    }
}

#[derive(Clone, Copy, Debug)]
enum SimEvent {
    Clock { cell: usize, tick: u64 },
    Data { cell: usize },
}

#[derive(Clone, Copy, Debug)]
struct Scheduled {
    time: f64,
    seq: u64,
    event: SimEvent,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    // Reversed: BinaryHeap pops the earliest event first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Csr<'a> {
    cfg: &'a TimingNetConfig,
    stored: Vec<bool>,
    loop_state: LoopState,
    queue: BinaryHeap<Scheduled>,
    seq: u64,
    tick: u64,
}

impl<'a> Csr<'a> {
    fn new(cfg: &'a TimingNetConfig) -> Self {
        Self {
            cfg,
            stored: vec![false; cfg.n_bits],
            loop_state: LoopState::Open,
            queue: BinaryHeap::new(),
            seq: 0,
            tick: 0,
        }
    }

    fn schedule(&mut self, time: f64, event: SimEvent) {
        self.seq += 1;
        self.queue.push(Scheduled { time, seq: self.seq, event });
    }

    fn tick_start(&self, tick: u64) -> f64 {
        tick as f64 * self.cfg.period_ps()
    }

    /// Schedules one clock tick and processes every event earlier than the
    /// first clock of the following tick. Ticks on which the output cell
    /// released a pulse are appended to `emitted`.
    fn step(&mut self, input: Option<bool>, emitted: &mut Vec<u64>) {
        let n = self.cfg.n_bits;
        let tick = self.tick;
        let start = self.tick_start(tick);
        for cell in 0..n {
            self.schedule(start + self.cfg.clock_arrivals[cell], SimEvent::Clock { cell, tick });
        }
        if input == Some(true) {
            // The input driver is timed like the loop-closing path.
            let t = start + self.cfg.clock_arrivals[n - 1] + self.cfg.cell.clk_to_q + self.cfg.cell.data_delay;
            self.schedule(t, SimEvent::Data { cell: 0 });
        }
        let min_arrival = self.cfg.clock_arrivals.iter().cloned().fold(f64::INFINITY, f64::min);
        self.process_until(self.tick_start(tick + 1) + min_arrival, emitted);
        self.tick += 1;
    }

    fn process_until(&mut self, horizon: f64, emitted: &mut Vec<u64>) {
        let n = self.cfg.n_bits;
        while self.queue.peek().is_some_and(|e| e.time < horizon) {
            let ev = self.queue.pop().expect("peeked");
            match ev.event {
                SimEvent::Clock { cell, tick } => {
                    if std::mem::take(&mut self.stored[cell]) {
                        let arrive = ev.time + self.cfg.cell.clk_to_q + self.cfg.cell.data_delay;
                        if cell + 1 < n {
                            self.schedule(arrive, SimEvent::Data { cell: cell + 1 });
                        } else {
                            emitted.push(tick);
                            if self.loop_state == LoopState::Closed {
                                self.schedule(arrive, SimEvent::Data { cell: 0 });
                            }
                        }
                    }
                }
                SimEvent::Data { cell } => self.stored[cell] = true,
            }
        }
    }
}

/// Discrete-event simulation of the CSR under a sequence of operations.
///
/// The register starts empty with the loop open. Output pulses (releases of
/// the last cell) are recorded only during `Run` operations; timestamps are
/// measured from the start of the first run and include the output latency
/// `t_{N-1} + clk_to_q`. Jitter perturbs each output edge independently.
pub fn simulate_csr(cfg: &TimingNetConfig, ops: &[CsrOp], jitter: &JitterModel) -> Result<EventSequence> {
    let report = check_timing(cfg);
    if !report.ok {
        return Err(Error::RaceViolation(Box::new(report)));
    }
    let latency = (cfg.clock_arrivals[cfg.n_bits - 1] + cfg.cell.clk_to_q) * 1e-3;
    let mut csr = Csr::new(cfg);
    let mut emitted = Vec::new();
    // Global tick -> index within the concatenated run phases.
    let mut run_index: Vec<Option<u64>> = Vec::new();
    let mut run_ticks: u64 = 0;
    let mut run_time = 0.0;

    for op in ops {
        match *op {
            CsrOp::SetLoop(state) => csr.loop_state = state,
            CsrOp::Write(bit) => {
                if csr.loop_state == LoopState::Closed {
                    return Err(Error::WriteInReadMode);
                }
                run_index.push(None);
                csr.step(Some(bit), &mut emitted);
            }
            CsrOp::Run(duration) => {
                if !(duration > 0.0 && duration.is_finite()) {
                    return Err(Error::InvalidArgument(format!("run duration must be positive, got {duration}")));
                }
                let mut local: u64 = 0;
                while (local as f64) / cfg.f_clk < duration {
                    run_index.push(Some(run_ticks));
                    csr.step(None, &mut emitted);
                    local += 1;
                    run_ticks += 1;
                }
                run_time += duration;
            }
        }
    }
    csr.process_until(f64::INFINITY, &mut emitted);

    let mut sampler: Option<JitterSampler> = jitter.sampler();
    let mut timestamps = Vec::new();
    for tick in emitted {
        if let Some(j) = run_index[tick as usize] {
            let t = j as f64 / cfg.f_clk + latency;
            let offset = sampler.as_mut().map_or(0.0, JitterSampler::draw);
            timestamps.push((t + offset).max(0.0));
        }
    }
    if jitter.sigma > 0.0 {
        timestamps.sort_by(f64::total_cmp);
    }
    let duration = run_time + latency.max(0.0);
    for t in timestamps.iter_mut() {
        *t = t.min(duration);
    }
    Ok(EventSequence {
        timestamps,
        duration,
        f_clk: cfg.f_clk,
        meta: format!("csr simulation, {} bits, {:?} clocking", cfg.n_bits, cfg.style),
    })
}

/// Loads `p`, closes the loop and runs for `duration` ns.
pub fn simulate_pattern(cfg: &TimingNetConfig, p: &Pattern, duration: f64, jitter: &JitterModel) -> Result<EventSequence> {
    if p.n_bits() != cfg.n_bits {
        return Err(Error::LengthMismatch(p.n_bits(), cfg.n_bits));
    }
    let mut ops = CsrOp::load(p);
    ops.push(CsrOp::Run(duration));
    simulate_csr(cfg, &ops, jitter)
}

/// On-disk clock-network description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingConfigFile {
    pub n_bits: usize,
    pub style: ClockStyle,
    #[serde(rename = "f_clk_GHz")]
    pub f_clk_ghz: f64,
    pub cell: CellTiming,
    /// Per-stage clock delay for symmetric clocking, ps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clock_stage_delay_ps: Option<f64>,
    /// Explicit per-cell arrivals, ps; overrides the style's schedule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clock_arrivals_ps: Option<Vec<f64>>,
}

impl TimingConfigFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("timing config: {e}")))
    }

    pub fn to_network(&self) -> Result<TimingNetConfig> {
        if let Some(arrivals) = &self.clock_arrivals_ps {
            if arrivals.len() != self.n_bits {
                return Err(Error::InvalidArgument(format!(
                    "{} clock arrivals for {} cells",
                    arrivals.len(),
                    self.n_bits
                )));
            }
            return TimingNetConfig::with_arrivals(self.style, arrivals.clone(), self.f_clk_ghz, self.cell);
        }
        let stage = self.clock_stage_delay_ps.unwrap_or_else(|| default_stage_delay(&self.cell));
        build_network_with_stage_delay(self.n_bits, self.style, self.f_clk_ghz, self.cell, stage)
    }
}
