//! Output records.
//!
//! Every command writes one JSON object
//! `{version, command, inputs_digest, results}` with sorted keys. Floats are
//! printed with 17 significant digits (`1.2345678901234567e-3`) so equal
//! runs produce equal bytes; `+inf` is the string `"+inf"`. The `results`
//! payload of each command is one of the `*Result` types below and parses
//! back with `serde_json`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::cost::{GapReport, ObjectiveTerms};
use crate::equilibrium::{DampingAnalysis, EquilibriumResult, RefinementRow};
use crate::extended::Extended;
use crate::kernels::{KernelParams, PdReport};
use crate::market_sim::SimulationReport;
use crate::strategy::StrategyRecord;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub version: String,
    pub command: String,
    pub inputs_digest: String,
    pub results: T,
}

/// SHA-256 of the config bytes followed by the seed override, if any.
pub fn inputs_digest(config: &[u8], seed_override: Option<u64>) -> String {
    let mut h = Sha256::new();
    h.update(config);
    if let Some(s) = seed_override {
        h.update(b"\nseed=");
        h.update(s.to_string().as_bytes());
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdEntry {
    /// `n` of the shifted surrogate `G(t + 1/n)`; `None` for the kernel itself.
    pub surrogate_n: Option<u64>,
    #[serde(flatten)]
    pub report: PdReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelCheckResult {
    pub kernel: KernelParams,
    pub times: Vec<f64>,
    pub checks: Vec<PdEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub trader: usize,
    pub randomized: bool,
    #[serde(flatten)]
    pub terms: ObjectiveTerms,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostResult {
    pub traders: Vec<CostRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub trader: usize,
    #[serde(flatten)]
    pub gap: GapReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerandomizeResult {
    pub traders: Vec<GapRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub runs: usize,
    pub alpha: f64,
    pub converged_runs: usize,
    /// Largest max-norm distance between a restart's limit and the KKT profile.
    pub max_deviation: f64,
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumRecord {
    pub profile: Vec<StrategyRecord>,
    pub multipliers: Vec<Option<f64>>,
    pub foc_residual: f64,
    pub min_pivot: f64,
    pub br_verified: bool,
    pub suboptimality: Vec<Extended>,
    pub objectives: Vec<Extended>,
    pub damping: DampingAnalysis,
    pub restarts: Option<RestartSummary>,
}

impl EquilibriumRecord {
    pub fn new(eq: &EquilibriumResult, damping: DampingAnalysis, restarts: Option<RestartSummary>) -> Self {
        Self {
            profile: eq.profile.iter().map(StrategyRecord::from).collect(),
            multipliers: eq.multipliers.clone(),
            foc_residual: eq.foc_residual,
            min_pivot: eq.min_pivot,
            br_verified: eq.br_verified,
            suboptimality: eq.suboptimality.clone(),
            objectives: eq.objectives.clone(),
            damping,
            restarts,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefineResult {
    pub rows: Vec<RefinementRow>,
}

pub type SimulateResult = SimulationReport;

/// Pretty JSON with sorted keys and 17-digit floats.
pub fn to_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    Ok(out)
}

fn write_value(out: &mut String, v: &Value, depth: usize) {
    let pad = |out: &mut String, d: usize| out.push_str(&"  ".repeat(d));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&format_float(n.as_f64().unwrap_or(f64::NAN)));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (k, item) in items.iter().enumerate() {
                pad(out, depth + 1);
                write_value(out, item, depth + 1);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            // serde_json's default map is ordered by key
            out.push_str("{\n");
            for (k, (key, item)) in map.iter().enumerate() {
                pad(out, depth + 1);
                out.push_str(&Value::String(key.clone()).to_string());
                out.push_str(": ");
                write_value(out, item, depth + 1);
                out.push_str(if k + 1 < map.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push('}');
        }
    }
}

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn ext(x: Extended) -> String {
    match x {
        Extended::Finite(v) => format_float(v),
        Extended::PosInfinity => "+inf".into(),
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

/// Plot-ready CSV rendering of a result.
pub trait Table {
    fn to_csv(&self) -> String;
}

impl Table for KernelCheckResult {
    fn to_csv(&self) -> String {
        let mut s = String::from("surrogate_n,form,dimension,min_pivot,is_strictly_pd\n");
        for c in &self.checks {
            let form = serde_json::to_value(c.report.form).ok();
            let form = form.as_ref().and_then(Value::as_str).unwrap_or("");
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                c.surrogate_n.map(|n| n.to_string()).unwrap_or_default(),
                form,
                c.report.dimension,
                format_float(c.report.min_pivot),
                c.report.is_strictly_pd
            );
        }
        s
    }
}

impl Table for CostResult {
    fn to_csv(&self) -> String {
        let mut s = String::from("trader,randomized,self_impact,cross_impact,additional,total\n");
        for r in &self.traders {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.trader,
                r.randomized,
                format_float(r.terms.self_impact),
                format_float(r.terms.cross_impact),
                ext(r.terms.additional),
                ext(r.terms.total)
            );
        }
        s
    }
}

impl Table for DerandomizeResult {
    fn to_csv(&self) -> String {
        let mut s = String::from("trader,j_randomized,j_derandomized,gap,predicted_kernel_gap,strict\n");
        for r in &self.traders {
            let g = &r.gap;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                r.trader,
                ext(g.j_randomized),
                ext(g.j_derandomized),
                ext(g.gap),
                format_float(g.predicted_kernel_gap),
                g.strict
            );
        }
        s
    }
}

impl Table for EquilibriumRecord {
    /// One row per grid time and trader: the block at the time and the rate
    /// on the following cell.
    fn to_csv(&self) -> String {
        let mut s = String::from("trader,k,time,block,rate,inventory_after\n");
        for (i, x) in self.profile.iter().enumerate() {
            let mut inventory = x.x0;
            for (k, &t) in x.times.iter().enumerate() {
                inventory += x.blocks[k];
                let rate = x.rates.get(k).copied();
                let _ = writeln!(
                    s,
                    "{i},{k},{},{},{},{}",
                    format_float(t),
                    format_float(x.blocks[k]),
                    opt(rate),
                    format_float(inventory)
                );
                if let Some(r) = rate {
                    inventory += r * (x.times[k + 1] - t);
                }
            }
        }
        s
    }
}

impl Table for RefineResult {
    fn to_csv(&self) -> String {
        let n = self.rows.first().map_or(0, |r| r.total_variation.len());
        let mut s = String::from("n");
        for i in 0..n {
            let _ = write!(s, ",tv_{i}");
        }
        for i in 0..n {
            let _ = write!(s, ",objective_{i}");
        }
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.n.to_string());
            for &tv in &r.total_variation {
                let _ = write!(s, ",{}", format_float(tv));
            }
            for &j in &r.objectives {
                let _ = write!(s, ",{}", ext(j));
            }
            s.push('\n');
        }
        s
    }
}

impl Table for SimulationReport {
    fn to_csv(&self) -> String {
        let mut s = String::from("trader,mean,std_error,analytic,z_score\n");
        for (i, t) in self.traders.iter().enumerate() {
            let _ = writeln!(
                s,
                "{i},{},{},{},{}",
                format_float(t.mean),
                format_float(t.std_error),
                format_float(t.analytic),
                opt(t.z_score)
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits_and_reparse() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 1e300, 0.0] {
            let s = format_float(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
            let v: f64 = serde_json::from_str(&s).unwrap();
            assert_eq!(v, x);
        }
    }

    #[test]
    fn keys_are_sorted_and_integers_stay_integral() {
        let v = serde_json::json!({"b": 1, "a": [0.5, "+inf"], "c": {"z": null, "y": true}});
        let text = to_json(&v).unwrap();
        let a = text.find("\"a\"").unwrap();
        let b = text.find("\"b\"").unwrap();
        assert!(a < b);
        assert!(text.contains("\"b\": 1\n") || text.contains("\"b\": 1,"));
        assert!(text.contains("5.0000000000000000e-1"));
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["a"][0], 0.5);
    }

    #[test]
    fn digest_depends_on_seed_override() {
        let a = inputs_digest(b"x", None);
        assert_eq!(a.len(), 64);
        assert_ne!(a, inputs_digest(b"x", Some(1)));
        assert_eq!(a, inputs_digest(b"x", None));
    }
}
