//! Report assembly: a JSON document with full certificates and traces, and
//! a CSV summary with one row per (certificate, grid point).
//!
//! Reports are deterministic given the config and seed; the only
//! run-dependent field is the timestamp, which is isolated in the header so
//! consumers can compare reports byte-for-byte after dropping it.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::certify::Certificate;
use crate::error::Result;
use crate::fixedpoint::{LipschitzReport, MetricSample};

#[derive(Clone, Debug, Serialize)]
pub struct ReportHeader {
    pub tool: &'static str,
    pub version: &'static str,
    /// Unix seconds; the single nondeterministic field of a report.
    pub timestamp: u64,
    pub seed: u64,
}

impl ReportHeader {
    pub fn new(seed: u64) -> Self {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        ReportHeader {
            tool: "ulamlab",
            version: env!("CARGO_PKG_VERSION"),
            timestamp,
            seed,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PointRow {
    pub point_id: String,
    pub point: String,
    pub a_value: String,
    pub error: f64,
    pub converged: bool,
    pub iterations: usize,
    /// First successive-iterate distances (f64 view, at most 12 entries).
    pub diff_trace: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MethodReport {
    pub direction: &'static str,
    pub all_converged: bool,
    pub points: Vec<PointRow>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FixedPointReport {
    pub direction: &'static str,
    pub declared_lipschitz: f64,
    pub d_f_jf: f64,
    pub d_f_jf_witness: Option<String>,
    pub apriori_radius: f64,
    pub metric_trace: Vec<MetricSample>,
    pub contraction_declared_ok: bool,
    pub decay_ok: bool,
    pub pointwise_ok: bool,
    pub identity_ok: bool,
    pub all_converged: bool,
    pub points: Vec<PointRow>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AgreementReport {
    /// Max distance between the two methods' A over the grid (f64 view).
    pub max_distance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct FitReport {
    pub family: String,
    pub coefficient: f64,
    pub coefficient_exact: String,
    pub raw_max_ratio: f64,
    pub max_defect: f64,
    pub witness: Option<String>,
    pub samples: usize,
    pub rounded_to_prime_power: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub setting: &'static str,
    pub direction: &'static str,
    pub method: String,
    pub seed: u64,
    pub fit: Option<FitReport>,
    pub direct: Option<MethodReport>,
    pub fixed_point: Option<FixedPointReport>,
    pub agreement: Option<AgreementReport>,
    pub lipschitz: Option<LipschitzReport>,
    pub certificates: Vec<Certificate>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub header: ReportHeader,
    pub experiments: Vec<ExperimentReport>,
    pub all_pass: bool,
}

impl Report {
    pub fn new(seed: u64, experiments: Vec<ExperimentReport>) -> Self {
        let all_pass = experiments.iter().all(|e| e.pass);
        Report { header: ReportHeader::new(seed), experiments, all_pass }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// CSV summary, one row per (certificate, grid point). Columns are
    /// fixed: point_id, setting, theorem_id, error, bound, margin,
    /// converged, iterations.
    pub fn to_csv(&self) -> String {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record([
            "point_id",
            "setting",
            "theorem_id",
            "error",
            "bound",
            "margin",
            "converged",
            "iterations",
        ])
        .expect("csv header");
        for exp in &self.experiments {
            let lookup: std::collections::BTreeMap<&str, (bool, usize)> = exp
                .direct
                .iter()
                .flat_map(|m| m.points.iter())
                .chain(exp.fixed_point.iter().flat_map(|m| m.points.iter()))
                .map(|p| (p.point_id.as_str(), (p.converged, p.iterations)))
                .collect();
            for cert in &exp.certificates {
                let mut stack = vec![cert];
                while let Some(c) = stack.pop() {
                    for pm in &c.points {
                        let (converged, iterations) =
                            lookup.get(pm.id.as_str()).copied().unwrap_or((false, 0));
                        wtr.write_record([
                            pm.id.as_str(),
                            exp.setting,
                            c.theorem.as_str(),
                            &format!("{}", pm.error),
                            &format!("{}", pm.bound),
                            &format!("{}", pm.margin),
                            &format!("{converged}"),
                            &format!("{iterations}"),
                        ])
                        .expect("csv row");
                    }
                    if let Some(rider) = &c.corollary {
                        stack.push(rider);
                    }
                }
            }
        }
        String::from_utf8(wtr.into_inner().expect("csv buffer")).expect("csv utf8")
    }

    /// Write `report.json` and `summary.csv` under `dir`.
    pub fn write(&self, dir: &Path, json_name: &str, csv_name: &str) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let json_path = dir.join(json_name);
        let csv_path = dir.join(csv_name);
        std::fs::write(&json_path, self.to_json())?;
        std::fs::write(&csv_path, self.to_csv())?;
        Ok((json_path, csv_path))
    }

    /// The report with its timestamp field zeroed, for byte comparisons.
    pub fn to_json_without_timestamp(&self) -> String {
        let mut clone = self.clone();
        clone.header.timestamp = 0;
        let mut s = serde_json::to_string_pretty(&clone).expect("report serializes");
        s.push('\n');
        s
    }
}
