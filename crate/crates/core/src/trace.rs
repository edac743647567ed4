//! Simulation traces: in-memory record, CSV persistence and re-validation.
//!
//! The CSV layout is `#`-prefixed metadata lines, then the header
//! `step,time,max_norm,energy,energy_delta`, then one row per step (row 0 is
//! the initial state) with floats printed to 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::certificate::{BoundMode, StepBounds};
use crate::error::{Error, Result};
use crate::integrator::{ENERGY_SLACK, MBP_SLACK};
use crate::spatial::State;

pub const HEADER: &str = "step,time,max_norm,energy,energy_delta";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub step: usize,
    pub time: f64,
    pub max_norm: f64,
    pub energy: f64,
    /// `energy - previous energy`; zero on row 0.
    pub energy_delta: f64,
    /// Largest max-norm over the stages of this step. Not persisted.
    #[serde(skip)]
    pub stage_max_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceMeta {
    pub scheme: String,
    pub epsilon: f64,
    pub n: usize,
    pub h: f64,
    pub tau: f64,
    pub tau_choice: String,
    pub t_final: f64,
    pub ic: String,
    pub bound_mode: BoundMode,
    pub bounds: Option<StepBounds>,
    pub lambda_min: Option<f64>,
    pub ssp_ratio: Option<f64>,
    pub mbp_certified: Option<bool>,
    pub energy_certified: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct SimulationTrace {
    pub meta: TraceMeta,
    pub rows: Vec<TraceRow>,
    /// Monitor breaches that did not abort the run.
    pub warnings: Vec<String>,
    pub final_state: State,
}

impl SimulationTrace {
    pub fn max_stage_norm(&self) -> f64 {
        self.rows.iter().map(|r| r.stage_max_norm).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let m = &self.meta;
        let mut out = String::new();
        let opt = |v: Option<f64>| v.map_or_else(|| "none".to_owned(), |x| format!("{x:.16e}"));
        let _ = writeln!(out, "# scheme: {}", m.scheme);
        let _ = writeln!(out, "# epsilon: {:.16e}", m.epsilon);
        let _ = writeln!(out, "# n: {}", m.n);
        let _ = writeln!(out, "# h: {:.16e}", m.h);
        let _ = writeln!(out, "# tau: {:.16e}", m.tau);
        let _ = writeln!(out, "# tau_choice: {}", m.tau_choice);
        let _ = writeln!(out, "# t_final: {:.16e}", m.t_final);
        let _ = writeln!(out, "# ic: {}", m.ic);
        let _ = writeln!(
            out,
            "# bound_mode: {}",
            match m.bound_mode {
                BoundMode::Safe => "safe",
                BoundMode::Relaxed => "relaxed",
            }
        );
        if let Some(b) = &m.bounds {
            let _ = writeln!(out, "# tau0: {:.16e}", b.tau0);
            let _ = writeln!(out, "# tau_ssp: {}", opt(b.tau_ssp));
            let _ = writeln!(out, "# tau_energy: {}", opt(b.tau_energy));
        }
        let _ = writeln!(out, "# lambda_min: {}", opt(m.lambda_min));
        let _ = writeln!(out, "# ssp_ratio: {}", opt(m.ssp_ratio));
        let flag = |b: Option<bool>| b.map_or("unknown", |b| if b { "true" } else { "false" });
        let _ = writeln!(out, "# mbp_certified: {}", flag(m.mbp_certified));
        let _ = writeln!(out, "# energy_certified: {}", flag(m.energy_certified));
        let _ = writeln!(out, "# max_stage_norm: {:.16e}", self.max_stage_norm());
        out.push_str(HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.step, r.time, r.max_norm, r.energy, r.energy_delta
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// A trace read back from CSV.
#[derive(Debug, Clone)]
pub struct ParsedTrace {
    pub meta: Vec<(String, String)>,
    pub rows: Vec<TraceRow>,
}

pub fn parse_trace_csv(text: &str) -> Result<ParsedTrace> {
    let mut meta = Vec::new();
    let mut rows = Vec::new();
    let mut seen_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((k, v)) = comment.split_once(':') {
                meta.push((k.trim().to_owned(), v.trim().to_owned()));
            }
            continue;
        }
        if !seen_header {
            if line != HEADER {
                return Err(Error::Parse(format!("line {lineno}: expected header {HEADER:?}")));
            }
            seen_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Parse(format!(
                "line {lineno}: expected 5 fields, found {}",
                fields.len()
            )));
        }
        let num = |i: usize| -> Result<f64> {
            fields[i]
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("line {lineno}: bad number {:?}", fields[i])))
        };
        let step = fields[0]
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::Parse(format!("line {lineno}: bad step {:?}", fields[0])))?;
        let max_norm = num(2)?;
        rows.push(TraceRow {
            step,
            time: num(1)?,
            max_norm,
            energy: num(3)?,
            energy_delta: num(4)?,
            stage_max_norm: max_norm,
        });
    }
    if !seen_header {
        return Err(Error::Parse("no header line".into()));
    }
    if rows.is_empty() {
        return Err(Error::Parse("trace has no rows".into()));
    }
    Ok(ParsedTrace { meta, rows })
}

pub fn read_trace_csv(path: &Path) -> Result<ParsedTrace> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trace_csv(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceVerdict {
    pub rows: usize,
    pub worst_max_norm: f64,
    pub worst_max_norm_step: usize,
    /// `None` for a trace holding only the initial row.
    pub worst_energy_delta: Option<f64>,
    pub worst_energy_delta_step: Option<usize>,
    pub first_mbp_failure: Option<usize>,
    pub first_energy_failure: Option<usize>,
}

impl TraceVerdict {
    pub fn mbp_pass(&self) -> bool {
        self.first_mbp_failure.is_none()
    }

    pub fn energy_pass(&self) -> bool {
        self.first_energy_failure.is_none()
    }

    pub fn pass(&self) -> bool {
        self.mbp_pass() && self.energy_pass()
    }
}

/// Re-validates the step monitors from recorded rows: `max_norm <= 1 + 1e-14`
/// on every row and `energy_delta <= 1e-12` on every step after the first.
pub fn check_trace(rows: &[TraceRow]) -> Result<TraceVerdict> {
    if rows.is_empty() {
        return Err(Error::Parse("trace has no rows".into()));
    }
    for (idx, pair) in rows.windows(2).enumerate() {
        if pair[1].step != pair[0].step + 1 {
            return Err(Error::Parse(format!(
                "row {}: step {} does not follow {}",
                idx + 1,
                pair[1].step,
                pair[0].step
            )));
        }
        if !(pair[1].time > pair[0].time) {
            return Err(Error::Parse(format!(
                "row {}: time {} is not after {}",
                idx + 1,
                pair[1].time,
                pair[0].time
            )));
        }
    }
    let mut v = TraceVerdict {
        rows: rows.len(),
        worst_max_norm: f64::NEG_INFINITY,
        worst_max_norm_step: rows[0].step,
        worst_energy_delta: None,
        worst_energy_delta_step: None,
        first_mbp_failure: None,
        first_energy_failure: None,
    };
    for (idx, r) in rows.iter().enumerate() {
        let norm = r.max_norm.max(r.stage_max_norm);
        if norm > v.worst_max_norm || norm.is_nan() {
            v.worst_max_norm = norm;
            v.worst_max_norm_step = r.step;
        }
        if !(norm <= 1.0 + MBP_SLACK) && v.first_mbp_failure.is_none() {
            v.first_mbp_failure = Some(r.step);
        }
        if idx == 0 {
            continue;
        }
        if v.worst_energy_delta.is_none_or(|w| r.energy_delta > w) || r.energy_delta.is_nan() {
            v.worst_energy_delta = Some(r.energy_delta);
            v.worst_energy_delta_step = Some(r.step);
        }
        if !(r.energy_delta <= ENERGY_SLACK) && v.first_energy_failure.is_none() {
            v.first_energy_failure = Some(r.step);
        }
    }
    Ok(v)
}
