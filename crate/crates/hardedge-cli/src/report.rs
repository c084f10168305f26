//! Report and manifest serialization.
//!
//! Every experiment emits the same artifact set into its output directory:
//!
//! * `report.json` — the full typed report: a run manifest (format version,
//!   tool version, master seed, config hash, canonical config), the list of
//!   pairwise distribution comparisons, the self-consistency controls, the
//!   scalar checks, and the overall verdict;
//! * one or more `.csv` tables with the raw per-replica observables, each
//!   stamped with the format version.
//!
//! Reports are byte-identical functions of (config, master seed): structures
//! serialize in fixed field order, collections are `Vec`s filled in
//! deterministic order, floats use the shortest round-trip encoding, and no
//! wall-clock information is recorded.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

/// Version stamp shared by every file the harness writes.
pub const FORMAT_VERSION: u32 = 1;

/// Report I/O failures.
#[derive(Debug, Error)]
pub enum ReportError {
    /// Creating a directory or writing a file failed.
    #[error("cannot write {path}: {source}")]
    Io {
        /// The path being written.
        path: String,
        /// Underlying I/O error.
        source: std::io::Error,
    },
    /// JSON serialization failed (should not happen for these types).
    #[error("cannot serialize report: {0}")]
    Serialize(#[from] serde_json::Error),
}

/// Provenance block included in every report.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    /// Version of the report schema.
    pub format_version: u32,
    /// Name of the producing binary.
    pub tool: &'static str,
    /// Crate version of the producing binary.
    pub tool_version: &'static str,
    /// Which experiment ran.
    pub experiment: String,
    /// Master seed; all streams in the run derive from it.
    pub master_seed: u64,
    /// FNV-1a hash of the canonical resolved config.
    pub config_hash: String,
    /// The canonical resolved config itself, for exact reproduction.
    pub config: String,
}

impl RunManifest {
    /// Build the manifest for an experiment run.
    pub fn new(experiment: &str, cfg: &crate::config::ExperimentConfig) -> Self {
        RunManifest {
            format_version: FORMAT_VERSION,
            tool: "hardedge",
            tool_version: env!("CARGO_PKG_VERSION"),
            experiment: experiment.to_string(),
            master_seed: cfg.master_seed,
            config_hash: cfg.hash(),
            config: cfg.canonical(),
        }
    }
}

/// One pairwise two-sample comparison of an eigenvalue statistic.
#[derive(Debug, Clone, Serialize)]
pub struct KsComparison {
    /// Label of the first sample (ensemble/size or limit operator).
    pub left: String,
    /// Label of the second sample.
    pub right: String,
    /// Which statistic was compared (e.g. `lambda1`).
    pub statistic: String,
    /// Size of the first sample.
    pub left_count: usize,
    /// Size of the second sample.
    pub right_count: usize,
    /// Two-sample KS distance.
    pub distance: f64,
    /// Lower end of the 95% bootstrap band on the distance.
    pub band_low: f64,
    /// Upper end of the 95% bootstrap band.
    pub band_high: f64,
    /// Configured verdict threshold.
    pub threshold: f64,
    /// Whether `distance <= threshold`.
    pub pass: bool,
}

/// A split-half self-consistency control on one sample.
#[derive(Debug, Clone, Serialize)]
pub struct ControlResult {
    /// Label of the controlled sample.
    pub target: String,
    /// Which statistic was split (e.g. `lambda1`).
    pub statistic: String,
    /// KS distance between the two halves.
    pub distance: f64,
    /// Critical value at the configured significance level.
    pub critical: f64,
    /// Whether the halves agree (`distance <= critical`).
    pub pass: bool,
}

/// A scalar check: an observed value against an accepted window.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    /// What was measured.
    pub name: String,
    /// Observed value.
    pub observed: f64,
    /// Predicted value, when the check has one (windows-only checks omit it).
    pub expected: Option<f64>,
    /// Lower edge of the accepted window.
    pub low: f64,
    /// Upper edge of the accepted window.
    pub high: f64,
    /// Whether `low <= observed <= high`.
    pub pass: bool,
}

impl CheckResult {
    /// Build a check from a window, computing the verdict.
    pub fn window(name: impl Into<String>, observed: f64, low: f64, high: f64) -> Self {
        CheckResult {
            name: name.into(),
            observed,
            expected: None,
            low,
            high,
            pass: observed.is_finite() && low <= observed && observed <= high,
        }
    }

    /// Build a check against a prediction with relative tolerance.
    pub fn relative(name: impl Into<String>, observed: f64, expected: f64, rel_tol: f64) -> Self {
        let half_width = expected.abs() * rel_tol;
        let mut check =
            Self::window(name, observed, expected - half_width, expected + half_width);
        check.expected = Some(expected);
        check
    }

    /// Build a check against a prediction with absolute tolerance.
    pub fn absolute(name: impl Into<String>, observed: f64, expected: f64, abs_tol: f64) -> Self {
        let mut check = Self::window(name, observed, expected - abs_tol, expected + abs_tol);
        check.expected = Some(expected);
        check
    }
}

/// The unified experiment report.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    /// Provenance.
    pub manifest: RunManifest,
    /// Pairwise distribution comparisons (universality runs).
    pub comparisons: Vec<KsComparison>,
    /// Split-half controls (universality runs).
    pub controls: Vec<ControlResult>,
    /// Scalar checks (deterministic and moment experiments).
    pub checks: Vec<CheckResult>,
    /// Overall verdict: every comparison, control, and check passed.
    pub pass: bool,
}

impl ExperimentReport {
    /// Assemble a report and compute the overall verdict.
    pub fn new(
        manifest: RunManifest,
        comparisons: Vec<KsComparison>,
        controls: Vec<ControlResult>,
        checks: Vec<CheckResult>,
    ) -> Self {
        let pass = comparisons.iter().all(|c| c.pass)
            && controls.iter().all(|c| c.pass)
            && checks.iter().all(|c| c.pass);
        ExperimentReport { manifest, comparisons, controls, checks, pass }
    }

    /// True when the run is invalidated by a failing self-consistency
    /// control (as opposed to a genuine statistical discrepancy).
    pub fn control_failed(&self) -> bool {
        self.controls.iter().any(|c| !c.pass)
    }

    /// Render a human-readable summary, one line per item.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.comparisons {
            out.push_str(&format!(
                "[{}] KS({} vs {}) {} = {:.4} (band [{:.4}, {:.4}], threshold {})\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.left,
                c.right,
                c.statistic,
                c.distance,
                c.band_low,
                c.band_high,
                c.threshold,
            ));
        }
        for c in &self.controls {
            out.push_str(&format!(
                "[{}] control split-half {} {} = {:.4} (critical {:.4})\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.target,
                c.statistic,
                c.distance,
                c.critical,
            ));
        }
        for c in &self.checks {
            match c.expected {
                Some(e) => out.push_str(&format!(
                    "[{}] {} = {:.6e} (expected {:.6e}, window [{:.6e}, {:.6e}])\n",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.observed,
                    e,
                    c.low,
                    c.high,
                )),
                None => out.push_str(&format!(
                    "[{}] {} = {:.6e} (window [{:.6e}, {:.6e}])\n",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.observed,
                    c.low,
                    c.high,
                )),
            }
        }
        out.push_str(&format!("verdict: {}\n", if self.pass { "PASS" } else { "FAIL" }));
        out
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io { path: path.display().to_string(), source }
}

/// Write the JSON report to `<dir>/report.json` and return the path.
pub fn write_report(dir: &Path, report: &ExperimentReport) -> Result<PathBuf, ReportError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join("report.json");
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    std::fs::write(&path, text).map_err(io_err(&path))?;
    Ok(path)
}

/// Write a CSV table `<dir>/<name>.csv`: a format-version comment, a header,
/// then one row per record with shortest round-trip float encoding.
pub fn write_csv(
    dir: &Path,
    name: &str,
    header: &[&str],
    rows: &[Vec<f64>],
) -> Result<PathBuf, ReportError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join(format!("{name}.csv"));
    let mut buf = Vec::new();
    writeln!(buf, "# format_version = {FORMAT_VERSION}").map_err(io_err(&path))?;
    writeln!(buf, "{}", header.join(",")).map_err(io_err(&path))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
        writeln!(buf, "{}", cells.join(",")).map_err(io_err(&path))?;
    }
    std::fs::write(&path, buf).map_err(io_err(&path))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    fn demo_report() -> ExperimentReport {
        let cfg = ExperimentConfig::from_text("master_seed = 5", &[]).unwrap();
        ExperimentReport::new(
            RunManifest::new("universality", &cfg),
            vec![KsComparison {
                left: "linear-n400".into(),
                right: "quartic-n400".into(),
                statistic: "lambda1".into(),
                left_count: 2000,
                right_count: 2000,
                distance: 0.021,
                band_low: 0.012,
                band_high: 0.043,
                threshold: 0.06,
                pass: true,
            }],
            vec![ControlResult {
                target: "linear-n400".into(),
                statistic: "lambda1".into(),
                distance: 0.02,
                critical: 0.0607,
                pass: true,
            }],
            vec![CheckResult::relative("variance", 0.36, 0.3466, 0.10)],
            )
    }

    #[test]
    fn verdict_aggregates_all_sections() {
        let mut report = demo_report();
        assert!(report.pass, "all-green sections must give PASS");
        report.checks.push(CheckResult::window("bad", 2.0, 0.0, 1.0));
        let rebuilt = ExperimentReport::new(
            report.manifest.clone(),
            report.comparisons.clone(),
            report.controls.clone(),
            report.checks.clone(),
        );
        assert!(!rebuilt.pass, "one failing check must fail the report");
        assert!(!rebuilt.control_failed(), "checks are not controls");
    }

    #[test]
    fn serialization_is_byte_identical_across_calls() {
        let a = serde_json::to_string_pretty(&demo_report()).unwrap();
        let b = serde_json::to_string_pretty(&demo_report()).unwrap();
        assert_eq!(a, b, "reports must serialize deterministically");
        assert!(a.contains("\"format_version\": 1"));
        assert!(a.contains("fnv1a64:"));
    }

    #[test]
    fn csv_is_stamped_and_round_trips_floats() {
        let dir = tempfile::tempdir().expect("tempdir");
        let rows = vec![vec![1.0, 0.1 + 0.2], vec![2.0, 1e-9]];
        let path =
            write_csv(dir.path(), "draws", &["replica", "lambda1"], &rows).expect("write csv");
        let text = std::fs::read_to_string(path).expect("read back");
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# format_version = 1"));
        assert_eq!(lines.next(), Some("replica,lambda1"));
        let row: Vec<f64> =
            lines.next().unwrap().split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(row[1], 0.1 + 0.2, "shortest round-trip encoding must be exact");
    }

    #[test]
    fn check_constructors_compute_verdicts() {
        assert!(CheckResult::relative("x", 1.05, 1.0, 0.10).pass);
        assert!(!CheckResult::relative("x", 1.2, 1.0, 0.10).pass);
        assert!(CheckResult::absolute("x", -0.004, 0.0, 0.005).pass);
        assert!(!CheckResult::window("x", f64::NAN, 0.0, 1.0).pass, "NaN never passes");
        let summary = demo_report().summary();
        assert!(summary.contains("[PASS]"));
        assert!(summary.ends_with("verdict: PASS\n"));
    }
}
