//! Serializable report types and the flat CSV row.

use mmbm_core::bm::{BMKind, BMReport};
use mmbm_core::space::{ValidationReport, Violation};
use mmbm_core::stability::StabilityReport;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BMReportJson {
    pub kind: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub deficit: f64,
    pub status: &'static str,
    pub s: f64,
    pub h: f64,
    #[serde(rename = "N")]
    pub n: Option<f64>,
    #[serde(rename = "K_indices")]
    pub k_indices: Vec<usize>,
    #[serde(rename = "L_indices")]
    pub l_indices: Vec<usize>,
    pub witness_indices: Vec<usize>,
}

impl From<&BMReport> for BMReportJson {
    fn from(r: &BMReport) -> Self {
        BMReportJson {
            kind: match r.kind {
                BMKind::Dimensional => "dimensional",
                BMKind::Multiplicative => "multiplicative",
            },
            lhs: r.lhs,
            rhs: r.rhs,
            deficit: r.deficit,
            status: r.status.name(),
            s: r.s,
            h: r.h,
            n: r.dim,
            k_indices: r.k.to_indices(),
            l_indices: r.l.to_indices(),
            witness_indices: r.witness.to_indices(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationJson {
    pub kind: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub triple: Option<[usize; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationJson {
    pub valid: bool,
    pub points: usize,
    pub triangle_tolerance: f64,
    pub violations: Vec<ViolationJson>,
}

impl ValidationJson {
    pub fn new(points: usize, r: &ValidationReport) -> Self {
        ValidationJson {
            valid: r.is_valid(),
            points,
            triangle_tolerance: r.tolerance,
            violations: r
                .violations
                .iter()
                .map(|v| {
                    let (triple, count) = match v {
                        Violation::Triangle { worst, count, .. } => (Some([worst.0, worst.1, worst.2]), Some(*count)),
                        _ => (None, None),
                    };
                    ViolationJson { kind: v.kind(), message: v.to_string(), triple, count }
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepJson {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityJson {
    #[serde(rename = "K")]
    pub k_name: String,
    #[serde(rename = "L")]
    pub l_name: String,
    pub s: f64,
    #[serde(rename = "N")]
    pub n: f64,
    pub h: f64,
    pub delta: f64,
    pub eps: f64,
    pub markov: f64,
    pub slack: f64,
    pub mass_c0: f64,
    pub mass_c1: f64,
    pub mass_t0: f64,
    pub mass_t1: f64,
    pub mass_coarse_intermediate: f64,
    pub mass_back: f64,
    pub far_mass_0: f64,
    pub far_mass_1: f64,
    pub far_mass_back: f64,
    pub chained_lhs: f64,
    pub chained_rhs: f64,
    pub inclusion: bool,
    pub inclusion_failures: Vec<usize>,
    pub coarse_check: BMReportJson,
    pub t0_indices: Vec<usize>,
    pub t1_indices: Vec<usize>,
    pub back_indices: Vec<usize>,
    pub steps: Vec<StepJson>,
    pub ok: bool,
}

impl StabilityJson {
    pub fn new(k_name: &str, l_name: &str, r: &StabilityReport) -> Self {
        let chained = r.steps.iter().find(|s| s.name == "chained_bound");
        StabilityJson {
            k_name: k_name.to_string(),
            l_name: l_name.to_string(),
            s: r.s,
            n: r.dim,
            h: r.h,
            delta: r.delta,
            eps: r.eps,
            markov: r.markov,
            slack: r.slack,
            mass_c0: r.mass_c0,
            mass_c1: r.mass_c1,
            mass_t0: r.mass_t0,
            mass_t1: r.mass_t1,
            mass_coarse_intermediate: r.mass_coarse_intermediate,
            mass_back: r.mass_back,
            far_mass_0: r.far_mass_0,
            far_mass_1: r.far_mass_1,
            far_mass_back: r.far_mass_back,
            chained_lhs: chained.map_or(f64::NAN, |s| s.lhs),
            chained_rhs: chained.map_or(f64::NAN, |s| s.rhs),
            inclusion: r.inclusion_failures.is_empty(),
            inclusion_failures: r.inclusion_failures.clone(),
            coarse_check: (&r.coarse_check).into(),
            t0_indices: r.t0.to_indices(),
            t1_indices: r.t1.to_indices(),
            back_indices: r.back.to_indices(),
            steps: r.steps.iter().map(|s| StepJson { name: s.name, lhs: s.lhs, rhs: s.rhs, holds: s.holds }).collect(),
            ok: r.ok(),
        }
    }
}

/// One CSV line. `eps` is empty outside the stability replay; `K` and `L`
/// name the compacts (or list indices for ad-hoc pairs).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvRow {
    pub resolution: String,
    pub h: f64,
    pub eps: Option<f64>,
    pub s: f64,
    #[serde(rename = "N")]
    pub n: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub deficit: f64,
    pub status: String,
    #[serde(rename = "K")]
    pub k: String,
    #[serde(rename = "L")]
    pub l: String,
}

impl CsvRow {
    pub fn from_report(resolution: &str, eps: Option<f64>, k: String, l: String, r: &BMReport) -> Self {
        CsvRow {
            resolution: resolution.to_string(),
            h: r.h,
            eps,
            s: r.s,
            n: r.dim,
            lhs: r.lhs,
            rhs: r.rhs,
            deficit: r.deficit,
            status: r.status.name().to_string(),
            k,
            l,
        }
    }
}

pub const CSV_HEADER: [&str; 11] = ["resolution", "h", "eps", "s", "N", "lhs", "rhs", "deficit", "status", "K", "L"];

pub fn indices_label(indices: &[usize]) -> String {
    indices.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn to_csv(rows: &[CsvRow]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(CSV_HEADER)?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}
