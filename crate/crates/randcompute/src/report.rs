//! Artifact serialization: canonical float text, JSON reports, and the CSV
//! emitters used by the command-line tools and examples.
//!
//! Every float that reaches a file goes through the same 12-significant-digit
//! formatter, so identical runs produce byte-identical artifacts.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};

use crate::engine::Metrics;
use crate::experiments::{LatencyReport, StabilityProbe};

/// Render a float with 12 significant digits, trimming trailing zeros
/// (plain decimal in a wide magnitude window, scientific outside it).
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_nan() {
        return "NaN".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    if (-5..12).contains(&mag) {
        let decimals = (11 - mag).max(0) as usize;
        let s = format!("{x:.decimals$}");
        let trimmed = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.')
        } else {
            &s
        };
        if trimmed == "-0" {
            "0".to_string()
        } else {
            trimmed.to_string()
        }
    } else {
        let s = format!("{x:.11e}");
        let (mantissa, exp) = s.split_once('e').expect("scientific format");
        let mantissa = if mantissa.contains('.') {
            mantissa.trim_end_matches('0').trim_end_matches('.')
        } else {
            mantissa
        };
        format!("{mantissa}e{exp}")
    }
}

/// Pretty JSON formatter that routes floats through [`sig12`].
struct CanonicalFormatter<'a> {
    inner: PrettyFormatter<'a>,
}

impl CanonicalFormatter<'_> {
    fn new() -> Self {
        CanonicalFormatter {
            inner: PrettyFormatter::new(),
        }
    }
}

impl Formatter for CanonicalFormatter<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(sig12(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        writer.write_all(sig12(value as f64).as_bytes())
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

/// Serialize with canonical float formatting (pretty, trailing newline).
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, CanonicalFormatter::new());
    value.serialize(&mut ser).expect("in-memory serialization");
    let mut s = String::from_utf8(out).expect("serde_json emits utf-8");
    s.push('\n');
    s
}

/// Compact single-line variant (used for hashing canonical configs).
pub fn to_compact_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, CompactFormatter);
    value.serialize(&mut ser).expect("in-memory serialization");
    String::from_utf8(out).expect("serde_json emits utf-8")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    fs::write(path, to_canonical_json(value))
}

/// Provenance line prepended to every CSV.
#[derive(Debug, Clone)]
pub struct CsvMeta {
    /// first 16 hex chars of the canonical config digest
    pub config_hash: String,
    pub seed: u64,
}

impl CsvMeta {
    fn header_line(&self) -> String {
        format!("# config_hash={} seed={}\n", self.config_hash, self.seed)
    }
}

fn opt_u64(v: Option<u64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Per-round events: `round,appearance_slot_max,completion_slot`, one row per
/// generated round, plus a trailing summary comment.
pub fn round_events_csv(meta: &CsvMeta, metrics: &Metrics) -> String {
    let mut out = meta.header_line();
    out.push_str("round,appearance_slot_max,completion_slot\n");
    for (round, ev) in &metrics.round_events {
        out.push_str(&format!(
            "{round},{},{}\n",
            opt_u64(ev.appearance_max()),
            opt_u64(ev.completion)
        ));
    }
    out.push_str(&format!(
        "# summary slots_run={} rounds_completed={} completed_prefix={} c_hat={}\n",
        metrics.slots_run,
        metrics.rounds_completed,
        metrics.completed_prefix,
        sig12(metrics.c_hat)
    ));
    out
}

pub fn write_round_events_csv(path: &Path, meta: &CsvMeta, metrics: &Metrics) -> io::Result<()> {
    fs::write(path, round_events_csv(meta, metrics))
}

/// Consumed-trace audit rows: `round,slot,value,trace`.
pub fn audit_csv(meta: &CsvMeta, metrics: &Metrics) -> String {
    let mut out = meta.header_line();
    out.push_str("round,slot,value,trace\n");
    for rec in &metrics.consumed {
        out.push_str(&format!(
            "{},{},{},{}\n",
            rec.round, rec.slot, rec.value, rec.trace
        ));
    }
    out
}

pub fn write_audit_csv(path: &Path, meta: &CsvMeta, metrics: &Metrics) -> io::Result<()> {
    fs::write(path, audit_csv(meta, metrics))
}

/// Stability sweep rows: `beta,seed,verdict,slope,max_queue,c_hat`.
pub fn sweep_csv(meta: &CsvMeta, probes: &[StabilityProbe]) -> String {
    let mut out = meta.header_line();
    out.push_str("beta,seed,verdict,slope,max_queue,c_hat\n");
    for probe in probes {
        for r in &probe.replicas {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                sig12(probe.beta),
                r.seed,
                r.verdict,
                sig12(r.slope),
                r.max_queue,
                sig12(r.c_hat)
            ));
        }
    }
    out
}

pub fn write_sweep_csv(path: &Path, meta: &CsvMeta, probes: &[StabilityProbe]) -> io::Result<()> {
    fs::write(path, sweep_csv(meta, probes))
}

/// Latency rows: `replica,ell,tau_app,tau_fK,tau_bar`.
pub fn latency_csv(meta: &CsvMeta, report: &LatencyReport) -> String {
    let mut out = meta.header_line();
    out.push_str("replica,ell,tau_app,tau_fK,tau_bar\n");
    for r in &report.replicas {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.replica,
            r.ell,
            r.tau_app,
            r.tau_fk,
            sig12(r.tau_bar)
        ));
    }
    out.push_str(&format!(
        "# summary mean_tau_bar={} mean_sojourn={} mean_c_hat={} mean_implied_b={}\n",
        sig12(report.mean_tau_bar),
        sig12(report.mean_sojourn),
        sig12(report.mean_c_hat),
        sig12(report.mean_implied_b)
    ));
    out
}

pub fn write_latency_csv(path: &Path, meta: &CsvMeta, report: &LatencyReport) -> io::Result<()> {
    fs::write(path, latency_csv(meta, report))
}

/// Write with a final newline guard (all emitters end in one already).
pub fn write_text(path: &Path, text: &str) -> io::Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())
}
