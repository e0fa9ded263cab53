use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use pulsetone::estimator::{self, FrequencyGrid, DEFAULT_OVERSAMPLE};
use pulsetone::io::{self, Format, Table};
use pulsetone::pattern::{self, Pattern};
use pulsetone::spectrum::{self, CombKind, CombStage};
use pulsetone::synth::{self, JitterModel, Timebase, DEFAULT_SAMPLE_RATE};
use pulsetone::timing::{self, TimingConfigFile};
use pulsetone::tuner::{self, Objective, DEFAULT_STEPS};
use pulsetone::Error;

const EXIT_USAGE: u8 = 2;
const EXIT_DOMAIN: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "pulsetone", version, about = "Spectra of SFQ pulse trains from circular shift registers")]
struct Cli {
    /// Write result files into this directory instead of printing to stdout.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,

    /// Seed for jitter and uneven sampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Enumerate spectrally unique patterns of an N-bit register.
    Patterns {
        n: usize,
        /// Also report lower/upper bounds on the class count.
        #[arg(long)]
        bounds: bool,
    },
    /// Analytic tone spectrum of a pattern, optionally through comb stages.
    Spectrum {
        pattern: String,
        /// Clock frequency, GHz.
        f_clk: f64,
        /// Comb stage `TAU[,ALPHA[,feedback]]` (delay in ns); repeatable,
        /// applied in order.
        #[arg(long = "comb", value_name = "TAU[,ALPHA]")]
        combs: Vec<String>,
    },
    /// Render a finite pulse train and optionally estimate its spectrum.
    Synth {
        pattern: String,
        /// Clock frequency, GHz.
        f_clk: f64,
        /// Train length, ns.
        duration: f64,
        /// Characteristic voltage in units of 0.287 mV.
        #[arg(long, default_value_t = 1.0)]
        vc: f64,
        /// RMS timing jitter per pulse, ps.
        #[arg(long, default_value_t = 0.0)]
        jitter: f64,
        /// Sampling rate, GHz.
        #[arg(long, default_value_t = DEFAULT_SAMPLE_RATE)]
        sample_rate: f64,
        /// Randomly displace sample instants by up to this fraction of a
        /// sample period.
        #[arg(long, value_name = "SPREAD")]
        uneven: Option<f64>,
        /// Lomb–Scargle periodogram, PSD and tone metrics.
        #[arg(long)]
        estimate: bool,
        /// Highest estimated frequency, GHz (default 1.1 f_clk).
        #[arg(long)]
        f_max: Option<f64>,
        /// Frequency-grid oversampling relative to 1/duration.
        #[arg(long, default_value_t = DEFAULT_OVERSAMPLE)]
        oversample: f64,
    },
    /// Sweep and optimize the delay of a unity feedforward comb.
    Tune {
        pattern: String,
        /// Clock frequency, GHz.
        f_clk: f64,
        #[arg(value_enum)]
        objective: ObjectiveArg,
        /// One target frequency (suppress, amplify) or two (separations), GHz.
        #[arg(required = true, num_args = 1..=2)]
        targets: Vec<f64>,
        /// Upper end of the delay range, ns (default N / f_clk).
        #[arg(long)]
        tau_max: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_STEPS)]
        steps: usize,
    },
    /// Clock-network timing check and optional CSR simulation.
    Timing {
        /// JSON network description.
        config: PathBuf,
        /// Load PATTERN and run for DURATION ns.
        #[arg(long, num_args = 2, value_names = ["PATTERN", "DURATION"])]
        simulate: Option<Vec<String>>,
        /// RMS output jitter for the simulation, ps.
        #[arg(long, default_value_t = 0.0)]
        jitter: f64,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ObjectiveArg {
    Suppress,
    Amplify,
    MaxSeparation,
    MinSeparation,
}

/// Destination for results: files under `--out`, or stdout for the primary
/// result only.
struct Sink {
    dir: Option<PathBuf>,
    format: Format,
}

impl Sink {
    fn new(dir: Option<PathBuf>, format: Format) -> anyhow::Result<Self> {
        if let Some(d) = &dir {
            std::fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
        }
        Ok(Self { dir, format })
    }

    fn write(&self, path: &Path, contents: &str) -> anyhow::Result<()> {
        std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
    }

    fn table(&self, stem: &str, table: &Table, primary: bool) -> anyhow::Result<()> {
        let text = table.render(self.format);
        match &self.dir {
            Some(d) => self.write(&d.join(format!("{stem}.{}", self.format.extension())), &text),
            None if primary => {
                print!("{text}");
                Ok(())
            }
            None => Ok(()),
        }
    }

    fn json<T: Serialize>(&self, stem: &str, value: &T, primary: bool) -> anyhow::Result<()> {
        let text = io::to_json(value);
        match &self.dir {
            Some(d) => self.write(&d.join(format!("{stem}.json")), &text),
            None if primary => {
                print!("{text}");
                Ok(())
            }
            None => Ok(()),
        }
    }
}

fn parse_pattern(text: &str) -> anyhow::Result<Pattern> {
    Ok(Pattern::parse(text)?)
}

fn parse_comb(text: &str) -> anyhow::Result<CombStage> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let num = |s: &str| s.parse::<f64>().with_context(|| format!("bad number '{s}' in --comb {text}"));
    let (delay, alpha, kind) = match parts.as_slice() {
        [tau] => (num(tau)?, 1.0, CombKind::Feedforward),
        [tau, alpha] => (num(tau)?, num(alpha)?, CombKind::Feedforward),
        [tau, alpha, kind] => {
            let kind = match *kind {
                "ff" | "feedforward" => CombKind::Feedforward,
                "fb" | "feedback" => CombKind::Feedback,
                other => bail!("unknown comb kind '{other}'"),
            };
            (num(tau)?, num(alpha)?, kind)
        }
        _ => bail!("--comb expects TAU[,ALPHA[,KIND]], got '{text}'"),
    };
    Ok(CombStage::new(kind, delay, alpha)?)
}

fn cmd_patterns(sink: &Sink, n: usize, bounds: bool) -> anyhow::Result<()> {
    let classes = pattern::enumerate_unique(n)?;
    sink.table(&format!("patterns_{n}"), &io::catalog_table(&classes), true)?;
    eprintln!("{} spectrally unique classes for N = {n}", classes.len());
    if bounds {
        let b = pattern::count_bounds(n)?;
        eprintln!("bounds: lower={} upper={}", b.lower, b.upper);
        sink.json(&format!("bounds_{n}"), &json!({ "n_bits": n, "count": classes.len(), "lower": b.lower, "upper": b.upper }), false)?;
    }
    Ok(())
}

fn cmd_spectrum(sink: &Sink, pattern: &str, f_clk: f64, combs: &[String]) -> anyhow::Result<()> {
    let p = parse_pattern(pattern)?;
    let stages = combs.iter().map(|c| parse_comb(c)).collect::<anyhow::Result<Vec<_>>>()?;
    let s = spectrum::apply_comb(&spectrum::tone_spectrum(&p, f_clk)?, &stages)?;
    sink.table("spectrum", &io::spectrum_table(&s), true)
}

#[allow(clippy::too_many_arguments)]
fn cmd_synth(
    sink: &Sink,
    seed: u64,
    pattern: &str,
    f_clk: f64,
    duration: f64,
    vc: f64,
    jitter: f64,
    sample_rate: f64,
    uneven: Option<f64>,
    estimate: bool,
    f_max: Option<f64>,
    oversample: f64,
) -> anyhow::Result<()> {
    let p = parse_pattern(pattern)?;
    let shape = synth::pulse_shape(vc)?;
    let events = synth::event_times(&p, f_clk, duration, &JitterModel::new(jitter, seed)?)?;
    let timebase = match uneven {
        Some(spread) => Timebase::Uneven { seed: seed.wrapping_add(1), spread },
        None => Timebase::Even,
    };
    let wave = synth::render(&events, &shape, sample_rate, timebase)?;
    sink.table("events", &io::events_table(&events), !estimate)?;
    sink.table("waveform", &io::waveform_table(&wave), false)?;
    let power = synth::avg_power(&p, &shape, f_clk, shape.amplitude * shape.amplitude);
    eprintln!(
        "{} pulses, {} samples, average power {power:.6e} mV^2 (FWHM {:.3} ps, peak {:.4} mV)",
        events.len(),
        wave.len(),
        shape.width,
        shape.amplitude
    );
    if !estimate {
        return Ok(());
    }

    let nyquist = 0.5 * (wave.len() - 1) as f64 / wave.span();
    let f_max = f_max.unwrap_or(1.1 * f_clk).min(nyquist);
    let grid = FrequencyGrid::for_duration(duration, f_max, oversample)?;
    let pg = estimator::lomb_scargle(&wave, &grid)?;
    let psd = estimator::to_psd(&pg)?;
    sink.table("periodogram", &io::periodogram_table(&pg), false)?;
    sink.json("periodogram.meta", &json!({ "kind": pg.kind, "n_samples": pg.n_samples, "f_res": pg.f_res }), false)?;
    sink.table("psd", &io::periodogram_table(&psd), false)?;
    sink.json("psd.meta", &json!({ "kind": psd.kind, "n_samples": psd.n_samples, "f_res": psd.f_res }), false)?;

    // Metrics for every tone the delta model predicts inside the grid.
    let analytic = spectrum::tone_spectrum(&p, f_clk)?;
    let spacing = analytic.spacing();
    let max_power = analytic.powers().iter().cloned().fold(0.0, f64::max);
    let mut tones = Vec::new();
    let mut k = 1;
    while k as f64 * spacing <= f_max {
        let f = k as f64 * spacing;
        if analytic.power_at(f)? > 1e-9 * max_power {
            match estimator::tone_metrics(&pg, f, spacing) {
                Ok(m) => tones.push(json!({
                    "tone_GHz": f,
                    "center_GHz": m.center,
                    "peak_power": m.peak_power,
                    "fwhm_GHz": m.fwhm,
                    "shift_MHz": (m.center - f) * 1e3,
                })),
                Err(Error::NoPeak(_)) => tones.push(json!({ "tone_GHz": f, "peak": null })),
                Err(e) => return Err(e.into()),
            }
        }
        k += 1;
    }
    let summary = json!({
        "pattern": p.to_string(),
        "f_clk_GHz": f_clk,
        "duration_ns": duration,
        "v_c": vc,
        "jitter_ps": jitter,
        "seed": seed,
        "avg_power_mV2": power,
        "tones": tones,
    });
    sink.json("metrics", &summary, true)
}

fn cmd_tune(
    sink: &Sink,
    pattern: &str,
    f_clk: f64,
    objective: ObjectiveArg,
    targets: &[f64],
    tau_max: Option<f64>,
    steps: usize,
) -> anyhow::Result<()> {
    let p = parse_pattern(pattern)?;
    let objective = match (objective, targets) {
        (ObjectiveArg::Suppress, &[f]) => Objective::Suppress { f },
        (ObjectiveArg::Amplify, &[f]) => Objective::Amplify { f },
        (ObjectiveArg::MaxSeparation, &[f1, f2]) => Objective::MaxSeparation { f1, f2 },
        (ObjectiveArg::MinSeparation, &[f1, f2]) => Objective::MinSeparation { f1, f2 },
        (ObjectiveArg::Suppress | ObjectiveArg::Amplify, _) => {
            return Err(Error::InvalidArgument("suppress/amplify take one frequency".into()).into())
        }
        _ => return Err(Error::InvalidArgument("separation objectives take two frequencies".into()).into()),
    };
    let tau_max = tau_max.unwrap_or_else(|| tuner::default_tau_max(&p, f_clk));
    let sweep = tuner::sweep_delay(&p, f_clk, tau_max, steps, targets)?;
    let opt = tuner::optimize_delay(&p, f_clk, &objective, tau_max)?;
    sink.table("sweep", &io::sweep_table(&sweep), false)?;
    let summary = json!({
        "pattern": p.to_string(),
        "f_clk_GHz": f_clk,
        "objective": objective,
        "tau_max_ns": tau_max,
        "delay_ns": opt.delay,
        "value": opt.value,
        "degenerate": opt.degenerate,
    });
    sink.json("optimum", &summary, true)
}

fn cmd_timing(sink: &Sink, seed: u64, config: &Path, simulate: Option<&[String]>, jitter: f64) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let cfg = TimingConfigFile::from_json(&text)?.to_network()?;
    let report = timing::check_timing(&cfg);
    match sink.format {
        Format::Json => sink.json("timing_report", &report, simulate.is_none())?,
        Format::Csv => {
            sink.table("timing_report", &io::timing_table(&cfg, &report), simulate.is_none())?;
            sink.json("timing_report", &report, false)?;
        }
    }
    eprintln!(
        "total skew {} ps, {} hold and {} setup violation(s), splitters {}",
        report.total_skew,
        report.race_violations.len(),
        report.setup_violations.len(),
        timing::splitter_count(cfg.style, cfg.n_bits)
    );
    let Some([pattern, duration]) = simulate else {
        return Ok(());
    };
    let p = parse_pattern(pattern)?;
    let duration: f64 = duration.parse().with_context(|| format!("bad duration '{duration}'"))?;
    let events = timing::simulate_pattern(&cfg, &p, duration, &JitterModel::new(jitter, seed)?)?;
    sink.table("csr_events", &io::events_table(&events), true)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let sink = Sink::new(cli.out, cli.format.into())?;
    match cli.command {
        Command::Patterns { n, bounds } => cmd_patterns(&sink, n, bounds),
        Command::Spectrum { pattern, f_clk, combs } => cmd_spectrum(&sink, &pattern, f_clk, &combs),
        Command::Synth { pattern, f_clk, duration, vc, jitter, sample_rate, uneven, estimate, f_max, oversample } => {
            cmd_synth(
                &sink, cli.seed, &pattern, f_clk, duration, vc, jitter, sample_rate, uneven, estimate, f_max, oversample,
            )
        }
        Command::Tune { pattern, f_clk, objective, targets, tau_max, steps } => {
            cmd_tune(&sink, &pattern, f_clk, objective, &targets, tau_max, steps)
        }
        Command::Timing { config, simulate, jitter } => {
            cmd_timing(&sink, cli.seed, &config, simulate.as_deref(), jitter)
        }
    }
}

/// Domain failures (the input was well formed but the physics says no) exit
/// with 3; everything else is a usage or input error.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(
            Error::UnstableFeedback(_)
            | Error::RaceViolation(_)
            | Error::NotEventRepresentable
            | Error::UndefinedObjective(_)
            | Error::DegenerateInput(_)
            | Error::NoSetBits
            | Error::NoPeak(_)
            | Error::WriteInReadMode,
        ) => EXIT_DOMAIN,
        _ => EXIT_USAGE,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if let Some(Error::RaceViolation(report)) = err.downcast_ref::<Error>() {
                eprintln!("{}", io::to_json(report).trim_end());
            }
            ExitCode::from(exit_code(&err))
        }
    }
}
