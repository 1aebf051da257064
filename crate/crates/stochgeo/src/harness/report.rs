//! Run reports and their JSON / CSV emission.
//!
//! The JSON report is a pure function of the experiment document: field
//! order is fixed by the struct definitions and timing lives in a separate
//! metrics file, so re-running the same document byte-compares equal.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cltlab::{LocalCltReport, SpanEstimate};
use crate::error::Result;

use super::config::{ExperimentConfig, Violation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub notes: Vec<Violation>,
    pub sizes: Vec<SizeReport>,
    pub verdicts: Vec<Verdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeReport {
    pub label: String,
    /// sites for lattice models, points otherwise
    pub scale_units: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_n: Option<f64>,
    pub m_n: f64,
    pub mean: f64,
    pub variance: f64,
    /// `variance / m_n^2`, the series whose stabilisation is checked
    pub var_over_scale: f64,
    /// mean per-replicate integrator error bound (0 for exact functionals)
    pub integration_error_mean: f64,
    pub span: SpanEstimate,
    pub clt: LocalCltReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<DecompositionExtras>,
}

/// Extra per-size facts reported by the exact decomposition harness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionExtras {
    pub var_v: f64,
    pub variance_bound_holds: bool,
    pub ks_y_to_normal: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictStatus {
    Pass,
    Fail,
    OutsideProvedRegime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    /// stable criterion identifier (see README)
    pub criterion: String,
    pub status: VerdictStatus,
    pub detail: String,
}

impl RunReport {
    pub fn any_failure(&self) -> bool {
        self.verdicts.iter().any(|v| v.status == VerdictStatus::Fail)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Wall-clock metrics; intentionally not part of the deterministic report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimingMetrics {
    pub total_seconds: f64,
    pub threads: usize,
    pub per_size_seconds: Vec<f64>,
    pub replicates_per_second: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitFormat {
    Json,
    CsvBundle,
}

/// Write the report (and timing sidecar) under `out_dir`.
pub fn emit_report(
    report: &RunReport,
    timing: &TimingMetrics,
    out_dir: &Path,
    format: EmitFormat,
) -> Result<Vec<std::path::PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();

    let metrics_path = out_dir.join("metrics.json");
    fs::write(&metrics_path, serde_json::to_string_pretty(timing)?)?;
    written.push(metrics_path);

    match format {
        EmitFormat::Json => {
            let path = out_dir.join("report.json");
            fs::write(&path, report.to_json())?;
            written.push(path);
        }
        EmitFormat::CsvBundle => {
            let summary = out_dir.join("summary.csv");
            let mut f = fs::File::create(&summary)?;
            writeln!(
                f,
                "size,mu_hat,sigma2_hat,m_n,b,sup_discrepancy,mc_error,span,verdict"
            )?;
            let overall = if report.any_failure() { "fail" } else { "pass" };
            for s in &report.sizes {
                writeln!(
                    f,
                    "{},{},{},{},{},{},{},{},{}",
                    s.label,
                    s.clt.mu_hat,
                    s.clt.sigma2_hat,
                    s.m_n,
                    s.clt.b,
                    s.clt.sup_discrepancy,
                    s.clt.mc_error,
                    if s.span.h.is_finite() {
                        s.span.h.to_string()
                    } else {
                        "infinity".to_string()
                    },
                    overall,
                )?;
            }
            written.push(summary);

            for s in &report.sizes {
                let path = out_dir.join(format!("pmf_{}.csv", s.label));
                let mut f = fs::File::create(&path)?;
                writeln!(f, "value,count,frequency,gaussian_prediction,discrepancy")?;
                for g in &s.clt.grid {
                    writeln!(
                        f,
                        "{},{},{},{},{}",
                        g.u, g.count, g.mass, g.prediction, g.discrepancy
                    )?;
                }
                written.push(path);
            }
        }
    }
    Ok(written)
}
