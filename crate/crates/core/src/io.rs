//! Tabular export of results as CSV or JSON.
//!
//! Every result type converts to a [`Table`] of named numeric or text
//! columns. CSV output has one header row; JSON output is an array of
//! row objects.

use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::estimator::Periodogram;
use crate::pattern::EquivalenceClass;
use crate::spectrum::ToneSpectrum;
use crate::synth::{EventSequence, Waveform};
use crate::timing::{TimingNetConfig, TimingReport};
use crate::tuner::SweepResult;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            let fields = row.iter().map(|v| match v {
                // Lists become one space-separated field.
                Value::Array(items) => items.iter().map(scalar).collect::<Vec<_>>().join(" "),
                other => scalar(other),
            });
            w.write_record(fields).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("fields are utf-8")
    }

    pub fn to_json_value(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = self.columns.iter().cloned().zip(row.iter().cloned()).collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("table values serialize")
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => {
                let mut s = self.to_json();
                s.push('\n');
                s
            }
        }
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

// Non-finite floats have no JSON form; they become null.
fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

pub fn spectrum_table(s: &ToneSpectrum) -> Table {
    let mut t = Table::new(["frequency_GHz", "re", "im", "power"]);
    for (k, c) in s.amplitudes.iter().enumerate() {
        t.push(vec![num(s.frequency(k)), num(c.re), num(c.im), num(c.norm_sqr())]);
    }
    t
}

pub fn events_table(e: &EventSequence) -> Table {
    let mut t = Table::new(["time_ns"]);
    for &ts in &e.timestamps {
        t.push(vec![num(ts)]);
    }
    t
}

pub fn waveform_table(w: &Waveform) -> Table {
    let mut t = Table::new(["time_ns", "voltage_mV"]);
    for (ts, v) in w.samples() {
        t.push(vec![num(ts), num(v)]);
    }
    t
}

pub fn periodogram_table(pg: &Periodogram) -> Table {
    let mut t = Table::new(["frequency_GHz", "power"]);
    for (f, p) in pg.frequencies.iter().zip(&pg.power) {
        t.push(vec![num(*f), num(*p)]);
    }
    t
}

pub fn sweep_table(s: &SweepResult) -> Table {
    let mut columns = vec!["delay_ns".to_string()];
    columns.extend(s.targets.iter().map(|f| format!("power_{f}GHz")));
    if s.separation.is_some() {
        columns.push("separation".into());
    }
    columns.push("degenerate".into());
    let mut t = Table::new(columns);
    for (j, &d) in s.delays.iter().enumerate() {
        let mut row = vec![num(d)];
        row.extend(s.tone_powers.iter().map(|p| num(p[j])));
        if let Some(sep) = &s.separation {
            row.push(num(sep[j]));
        }
        row.push(Value::Bool(s.degenerate[j]));
        t.push(row);
    }
    t
}

/// One row per class: canonical pattern, set bits, distance set, member
/// count and normalized tone-power signature.
pub fn catalog_table(classes: &[EquivalenceClass]) -> Table {
    let mut t = Table::new(["canonical", "set_bits", "distance_set", "members", "signature"]);
    for c in classes {
        t.push(vec![
            Value::String(c.canonical.to_string()),
            Value::from(c.set_bits()),
            Value::from(c.distance_set().as_slice().to_vec()),
            Value::from(c.members.len()),
            Value::Array(c.spectral_signature.iter().map(|&x| num(x)).collect()),
        ]);
    }
    t
}

/// Per-cell view of a timing report.
pub fn timing_table(cfg: &TimingNetConfig, report: &TimingReport) -> Table {
    let mut t = Table::new(["cell", "clock_arrival_ps", "skew_ps", "hold_slack_ps", "setup_slack_ps"]);
    let c = &cfg.cell;
    for (i, &skew) in report.per_cell_skew.iter().enumerate() {
        t.push(vec![
            Value::from(i),
            num(cfg.clock_arrivals[i]),
            num(skew),
            num(skew + c.data_delay - c.hold),
            num(cfg.period_ps() - skew - c.clk_to_q - c.data_delay - c.setup),
        ]);
    }
    t
}

/// Pretty JSON for any serializable result.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("result types serialize");
    s.push('\n');
    s
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::InvalidArgument(format!("writing {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::Pattern;
    use crate::spectrum::tone_spectrum;

    #[test]
    fn spectrum_csv_layout() {
        let s = tone_spectrum(&Pattern::parse("10011001").unwrap(), 10.0).unwrap();
        let csv = spectrum_table(&s).to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "frequency_GHz,re,im,power");
        assert_eq!(lines.len(), 9);
        assert!(lines[1].starts_with("0.0,4.0"));
    }

    #[test]
    fn json_rows_are_objects() {
        let mut t = Table::new(["a", "b"]);
        t.push(vec![num(1.5), Value::String("x,y".into())]);
        let v: Value = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(v[0]["a"], 1.5);
        assert_eq!(v[0]["b"], "x,y");
        assert_eq!(t.to_csv(), "a,b\n1.5,\"x,y\"\n");
        assert_eq!(num(f64::NAN), Value::Null);

        let mut lists = Table::new(["d"]);
        lists.push(vec![Value::from(vec![1, 3, 1, 3])]);
        assert_eq!(lists.to_csv(), "d\n1 3 1 3\n");
    }
}
