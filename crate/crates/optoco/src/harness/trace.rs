//! Run traces: one CSV row per round plus a JSON sidecar carrying the
//! config, calibrated constants, comparator, and report.
//!
//! Floats are serialized with 17 significant digits (`{:.16e}`), which
//! round-trips 64-bit values exactly; identical runs therefore produce
//! byte-identical files.

use serde::{Deserialize, Serialize};

use super::{HarnessError, RunConfig};
use crate::environments::DeclaredBounds;
use crate::harness::report::ReportRow;
use crate::oracle::ComparatorResult;

pub const TRACE_HEADER: &str = "t,loss,g,g_plus,regret,ccv,q,eta,eps_f,eps_g,err_f,err_g";

/// One round of a run: played loss and violation, cumulative metrics, the
/// step size, and the per-round prediction errors with their running sums.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub loss: f64,
    pub g: f64,
    pub g_plus: f64,
    /// Cumulative regret against the comparator chosen after the run.
    pub regret: f64,
    pub ccv: f64,
    /// Queue value entering round `t` (before the dual update).
    pub q: f64,
    pub eta: f64,
    pub eps_f: f64,
    pub eps_g: f64,
    pub err_f: f64,
    pub err_g: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunTrace {
    pub rows: Vec<TraceRow>,
}

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

impl RunTrace {
    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(self.rows.len() * 200 + 64);
        out.push_str(TRACE_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.t.to_string());
            for v in [
                r.loss, r.g, r.g_plus, r.regret, r.ccv, r.q, r.eta, r.eps_f, r.eps_g, r.err_f,
                r.err_g,
            ] {
                out.push(',');
                out.push_str(&format_float(v));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv_str(s: &str) -> Result<RunTrace, HarnessError> {
        let mut lines = s.lines();
        match lines.next() {
            Some(h) if h == TRACE_HEADER => {}
            other => {
                return Err(HarnessError::Trace {
                    message: format!("unexpected header: {other:?}"),
                })
            }
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 12 {
                return Err(HarnessError::Trace {
                    message: format!("line {}: expected 12 fields, got {}", i + 2, fields.len()),
                });
            }
            let t: usize = fields[0].parse().map_err(|e| HarnessError::Trace {
                message: format!("line {}: bad round index: {e}", i + 2),
            })?;
            let mut vals = [0.0f64; 11];
            for (k, f) in fields[1..].iter().enumerate() {
                vals[k] = f.parse().map_err(|e| HarnessError::Trace {
                    message: format!("line {}: bad float {f:?}: {e}", i + 2),
                })?;
            }
            rows.push(TraceRow {
                t,
                loss: vals[0],
                g: vals[1],
                g_plus: vals[2],
                regret: vals[3],
                ccv: vals[4],
                q: vals[5],
                eta: vals[6],
                eps_f: vals[7],
                eps_g: vals[8],
                err_f: vals[9],
                err_g: vals[10],
            });
        }
        Ok(RunTrace { rows })
    }
}

/// Final cumulative metrics of a run.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct Totals {
    pub regret: f64,
    pub ccv: f64,
    pub err_f: f64,
    pub err_g: f64,
}

/// One doubling epoch: its multiplier and the metrics it measured.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EpochSummary {
    pub start: usize,
    pub len: usize,
    pub lambda: f64,
    pub ccv: f64,
    pub final_q: f64,
    pub err_f: f64,
    pub err_g: f64,
}

/// Structured companion of a trace: everything needed to re-derive the
/// verification report from the CSV alone.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Sidecar {
    pub config: RunConfig,
    pub seed: u64,
    pub beta: f64,
    pub bregman_radius: f64,
    pub declared: DeclaredBounds,
    pub smoothness_f: f64,
    pub lambda: Option<f64>,
    pub lambda_self_consistent: Option<bool>,
    /// Inner-learner contract constant `C` (constrained runs).
    pub regret_constant: Option<f64>,
    pub psi_f: Option<f64>,
    pub psi_g: Option<f64>,
    pub comparator: Option<ComparatorResult>,
    pub best_expert: Option<usize>,
    pub final_q: f64,
    /// Running maximum of declared gradient-Lipschitz constants at the end
    /// of the run (the adaptive bound consumes it).
    pub final_lipschitz: f64,
    pub totals: Totals,
    pub epochs: Option<Vec<EpochSummary>>,
    pub report: Vec<ReportRow>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: usize) -> TraceRow {
        TraceRow {
            t,
            loss: 0.1 * t as f64,
            g: -0.5,
            g_plus: 0.0,
            regret: 0.3,
            ccv: 0.0,
            q: 0.0,
            eta: 0.25,
            eps_f: 1.0 / 3.0,
            eps_g: 0.0,
            err_f: t as f64 / 3.0,
            err_g: 0.0,
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let trace = RunTrace { rows: (1..=5).map(row).collect() };
        let s = trace.to_csv_string();
        let back = RunTrace::from_csv_str(&s).unwrap();
        assert_eq!(trace, back);
        // Byte-for-byte stable on re-serialization.
        assert_eq!(s, back.to_csv_string());
    }

    #[test]
    fn seventeen_digit_floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, std::f64::consts::PI, 1e-300, -7.25e17] {
            let s = format_float(x);
            let y: f64 = s.parse().unwrap();
            assert_eq!(x.to_bits(), y.to_bits(), "{s}");
        }
    }

    #[test]
    fn malformed_traces_are_rejected() {
        assert!(RunTrace::from_csv_str("nonsense\n1,2").is_err());
        let short = format!("{TRACE_HEADER}\n1,2,3\n");
        assert!(RunTrace::from_csv_str(&short).is_err());
        let bad_float = format!("{TRACE_HEADER}\n1,a,0,0,0,0,0,0,0,0,0,0\n");
        assert!(RunTrace::from_csv_str(&bad_float).is_err());
    }
}
