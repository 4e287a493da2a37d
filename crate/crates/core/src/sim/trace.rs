use std::io::Write;

use serde::Serialize;

use super::fit::DecayFit;
use super::Variant;
use crate::matops::vec_inf_norm;

/// One row per sampling step, or per actuation step in the deadbeat loop.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub s: usize,
    pub k: usize,
    pub x: Vec<f64>,
    pub xhat: Vec<f64>,
    pub u: Vec<f64>,
    pub y: Vec<f64>,
    /// Index sent on this row, if a sample was taken.
    pub q_index: Option<u64>,
    /// Quantized output the controller currently holds.
    pub q: Vec<f64>,
    pub e: f64,
    pub ex: f64,
    pub sampled: bool,
    pub h: bool,
    pub ack: bool,
}

/// Worst observed ratio of each checked quantity to its bound; at most 1 means it held.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct InvariantReport {
    /// `‖q − y_s‖∞ / (σ E)` between samples.
    pub trigger: f64,
    /// `‖y − ŷ‖∞ / E` at samples.
    pub frame: f64,
    /// `Eˣ` against its closed-form envelope at samples.
    pub range: f64,
    /// Weighted estimation error against the range recursion; only with invariant checks on.
    pub error: Option<f64>,
    /// Largest `‖Cx̂‖∞` the deadbeat controller held at a sample, where the encoder assumes 0.
    pub center_offset: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct SimTrace {
    pub variant: Variant,
    pub nx: usize,
    pub nu: usize,
    pub ny: usize,
    pub e_in: f64,
    pub rows: Vec<TraceRow>,
    pub sample_times: Vec<usize>,
    pub attacks: Vec<bool>,
    pub effective_hits: Vec<usize>,
    pub report: InvariantReport,
}

impl SimTrace {
    /// `‖x_s‖∞` at the start of every sampling step.
    pub fn state_norms(&self) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.k == 0)
            .map(|r| vec_inf_norm(&r.x))
            .collect()
    }

    pub fn sample_count(&self) -> usize {
        self.sample_times.len()
    }

    pub fn header(&self) -> String {
        let mut cols = vec!["s".to_string(), "k".to_string()];
        let vec_cols = |cols: &mut Vec<String>, name: &str, n: usize| {
            cols.extend((0..n).map(|i| format!("{name}{i}")));
        };
        vec_cols(&mut cols, "x", self.nx);
        vec_cols(&mut cols, "xhat", self.nx);
        vec_cols(&mut cols, "u", self.nu);
        vec_cols(&mut cols, "y", self.ny);
        cols.push("q_index".into());
        vec_cols(&mut cols, "q", self.ny);
        for c in ["E", "Ex", "sampled", "h", "ack"] {
            cols.push(c.into());
        }
        cols.join(",")
    }

    /// CSV with shortest round-trip floats.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "{}", self.header())?;
        let mut line = String::new();
        for r in &self.rows {
            line.clear();
            line.push_str(&format!("{},{}", r.s, r.k));
            for v in r.x.iter().chain(&r.xhat).chain(&r.u).chain(&r.y) {
                line.push_str(&format!(",{v:?}"));
            }
            match r.q_index {
                Some(i) => line.push_str(&format!(",{i}")),
                None => line.push(','),
            }
            for v in &r.q {
                line.push_str(&format!(",{v:?}"));
            }
            line.push_str(&format!(
                ",{:?},{:?},{},{},{}",
                r.e, r.ex, r.sampled as u8, r.h as u8, r.ack as u8
            ));
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii csv")
    }
}

/// Per-run key figures, written as JSON next to the trace.
#[derive(Clone, Debug, Serialize)]
pub struct SimSummary {
    pub variant: Variant,
    pub horizon: usize,
    pub samples: usize,
    pub attacks: usize,
    pub effective_attacks: usize,
    pub initial_norm: f64,
    pub final_norm: f64,
    pub fit: Option<DecayFit>,
    pub fit_error: Option<String>,
    pub sigma: f64,
    pub sigma_effective: f64,
    pub alpha: f64,
    pub rate: f64,
    pub overshoot: f64,
    pub omega1: f64,
    pub omega_a: f64,
    pub dos_bound: f64,
    pub invariants: InvariantReport,
}
