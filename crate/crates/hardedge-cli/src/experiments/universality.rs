//! Hard-edge universality: rescaled smallest eigenvalues collapse onto one
//! law.
//!
//! Every target — each (ensemble, size) pair, plus optionally the limit
//! operator itself — produces `replicas` independent draws of the `k`
//! smallest eigenvalues.  Model draws are rescaled by `n²/(4κ)` with κ from
//! that ensemble's scaling functions; limit-operator draws are already in
//! hard-edge units.  If the universality prediction holds, all targets'
//! per-index marginals agree, so every pairwise two-sample KS distance
//! should sit at the sampling-noise floor.
//!
//! Each target also carries a split-half control: its own draws, split by
//! replica parity, compared at the configured significance level.  A
//! failing control means the run cannot resolve the question (bad mixing,
//! too few replicas) and invalidates the verdict — the caller reports it as
//! a statistical failure rather than letting a broken run masquerade as a
//! discovery.

use std::path::Path;

use hardedge_core::sampler::derive_stream_seed;
use hardedge_core::spectra::{rescale_hard_edge, smallest_eigs};

use crate::config::ExperimentConfig;
use crate::report::{
    write_csv, write_report, ControlResult, ExperimentReport, KsComparison, RunManifest,
};
use crate::runner::STREAM_BLOCK;
use crate::stats::{ks_bootstrap_band, ks_critical, ks_statistic};

use super::{
    build_params, column, ensemble_slug, map_samples, num, sbo_batch, split_halves,
    HarnessError, MIN_DISTRIBUTIONAL_REPLICAS,
};

/// Seed-stream block reserved for bootstrap resampling.
const BOOTSTRAP_BLOCK: u64 = 1_000;

/// Run the universality experiment and write its artifacts.
pub fn run_universality(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    if cfg.replicas < MIN_DISTRIBUTIONAL_REPLICAS {
        return Err(HarnessError::InsufficientReplicas {
            got: cfg.replicas,
            needed: MIN_DISTRIBUTIONAL_REPLICAS,
        });
    }
    if cfg.sbo.enabled && cfg.sbo.replicas < MIN_DISTRIBUTIONAL_REPLICAS {
        return Err(HarnessError::InsufficientReplicas {
            got: cfg.sbo.replicas,
            needed: MIN_DISTRIBUTIONAL_REPLICAS,
        });
    }
    let target_count = cfg.ensembles.len() * cfg.sizes.len() + usize::from(cfg.sbo.enabled);
    if target_count < 2 {
        return Err(HarnessError::Config(crate::config::ConfigError::Invalid {
            key: "ensemble.*".to_string(),
            message: "universality needs at least two targets \
                      (two ensembles/sizes, or one plus sbo.enabled)"
                .to_string(),
        }));
    }
    let k = cfg.eigenvalues;

    // Draw every target's eigenvalue table, one seed-stream block each.
    let mut targets: Vec<(String, Vec<Vec<f64>>)> = Vec::new();
    let mut block = 0u64;
    for g in &cfg.ensembles {
        for &n in &cfg.sizes {
            let params = build_params(g, cfg.beta, cfg.a, n)?;
            let kappa = params.scaling().kappa();
            let rows = map_samples(cfg, g, cfg.beta, n, cfg.replicas, block, |s| {
                let spec = smallest_eigs(&s.x, &s.y, k)
                    .map_err(num(format!("solving the spectrum at n={n}")))?;
                let scaled = rescale_hard_edge(&spec, kappa, n)
                    .map_err(num("rescaling to hard-edge units"))?;
                Ok(scaled.eigenvalues)
            })?;
            targets.push((format!("{}-n{n}", ensemble_slug(g)), rows));
            block += 1;
        }
    }
    if cfg.sbo.enabled {
        let rows = sbo_batch(cfg, cfg.beta, k, block)?;
        targets.push(("limit-operator".to_string(), rows));
    }

    // Controls first (they gate the verdict), then all pairwise distances.
    let mut controls = Vec::new();
    let mut comparisons = Vec::new();
    for j in 0..k {
        let statistic = format!("lambda{}", j + 1);
        for (label, rows) in &targets {
            let col = column(rows, j);
            let (even, odd) = split_halves(&col);
            let distance =
                ks_statistic(&even, &odd).map_err(num("split-half control"))?;
            let critical = ks_critical(even.len(), odd.len(), cfg.thresholds.split_half_level);
            controls.push(ControlResult {
                target: label.clone(),
                statistic: statistic.clone(),
                distance,
                critical,
                pass: distance <= critical,
            });
        }
        let mut ordinal = 0u64;
        for p in 0..targets.len() {
            for q in (p + 1)..targets.len() {
                let a = column(&targets[p].1, j);
                let b = column(&targets[q].1, j);
                let distance =
                    ks_statistic(&a, &b).map_err(num("pairwise comparison"))?;
                let boot_seed = derive_stream_seed(
                    cfg.master_seed,
                    BOOTSTRAP_BLOCK * STREAM_BLOCK + (j as u64) * 10_000 + ordinal,
                );
                let (band_low, band_high) =
                    ks_bootstrap_band(&a, &b, cfg.bootstrap_rounds, boot_seed)
                        .map_err(num("bootstrap band"))?;
                comparisons.push(KsComparison {
                    left: targets[p].0.clone(),
                    right: targets[q].0.clone(),
                    statistic: statistic.clone(),
                    left_count: a.len(),
                    right_count: b.len(),
                    distance,
                    band_low,
                    band_high,
                    threshold: cfg.thresholds.ks,
                    pass: distance <= cfg.thresholds.ks,
                });
                ordinal += 1;
            }
        }
    }

    // Raw draws per target, for re-analysis.
    let out_dir = Path::new(&cfg.output_dir);
    let mut header: Vec<String> = vec!["replica".to_string()];
    for j in 0..k {
        header.push(format!("lambda{}", j + 1));
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    for (label, rows) in &targets {
        let table: Vec<Vec<f64>> = rows
            .iter()
            .enumerate()
            .map(|(r, lams)| {
                let mut row = Vec::with_capacity(k + 1);
                row.push(r as f64);
                row.extend_from_slice(lams);
                row
            })
            .collect();
        write_csv(out_dir, &format!("draws-{label}"), &header_refs, &table)?;
    }

    let report = ExperimentReport::new(
        RunManifest::new("universality", cfg),
        comparisons,
        controls,
        Vec::new(),
    );
    write_report(out_dir, &report)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cfg(dir: &std::path::Path) -> ExperimentConfig {
        let text = format!(
            "experiment = universality\n\
             ensemble.1.potential = [0.5]\n\
             sizes = [60, 80]\n\
             replicas = 150\n\
             sbo.enabled = false\n\
             master_seed = 42\n\
             thresholds.ks = 0.2\n\
             output_dir = {}\n",
            dir.display()
        );
        ExperimentConfig::from_text(&text, &[]).unwrap()
    }

    #[test]
    fn rejects_insufficient_replicas() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_cfg(dir.path());
        cfg.replicas = 1;
        let err = run_universality(&cfg).unwrap_err();
        assert!(
            matches!(err, HarnessError::InsufficientReplicas { got: 1, needed: 100 }),
            "got {err:?}"
        );
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn rejects_a_single_target() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_cfg(dir.path());
        cfg.sizes = vec![60];
        let err = run_universality(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 1, "one ensemble+size without sbo is not comparable");
    }

    #[test]
    fn same_law_at_two_sizes_passes_and_reproduces() {
        // Exact linear sampler at two sizes: both rescaled laws are within
        // O(1/n) of the limit.  At 150 replicas the same-law KS noise floor
        // is ≈ 0.16 (the 5% critical value), so the quick config carries a
        // matching threshold of 0.2; the production default of 0.06 is
        // calibrated for ≥ 2000 replicas.  The report is seed-deterministic.
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_cfg(dir.path());
        let report = run_universality(&cfg).expect("experiment runs");
        assert!(report.pass, "summary:\n{}", report.summary());
        assert_eq!(report.comparisons.len(), 1);
        assert_eq!(report.controls.len(), 2);
        let again = run_universality(&cfg).expect("experiment reruns");
        assert_eq!(
            serde_json::to_string(&report).unwrap(),
            serde_json::to_string(&again).unwrap(),
            "reports must be byte-identical for a fixed config and seed"
        );
        let json = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
        assert!(json.contains("\"experiment\": \"universality\""));
        let csv = std::fs::read_to_string(dir.path().join("draws-g0.5-n60.csv")).unwrap();
        assert!(csv.starts_with("# format_version = 1\nreplica,lambda1\n"));
        assert_eq!(csv.lines().count(), 2 + 150, "one row per replica");
    }

    #[test]
    fn detects_a_distributional_difference() {
        // Different hard-edge exponents (a = 0 vs a = 2) give genuinely
        // different smallest-eigenvalue laws; the comparison must fail even
        // though each target's own split-half control passes.
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_cfg(dir.path());
        cfg.sizes = vec![60];
        cfg.sbo.enabled = false;
        // Two targets: same potential, same size — but we fake the second
        // ensemble by shifting a; easiest route is two sizes with a large
        // a-shift is not expressible per-ensemble, so instead compare the
        // same ensemble against the limit operator of a different exponent
        // by hand: run the batches directly.
        let params = build_params(&[0.5], 2.0, 0.0, 60).unwrap();
        let kappa = params.scaling().kappa();
        let rows_a0 = map_samples(&cfg, &[0.5], 2.0, 60, 150, 0, |s| {
            let spec = smallest_eigs(&s.x, &s.y, 1).map_err(num("spectrum"))?;
            Ok(rescale_hard_edge(&spec, kappa, 60).map_err(num("rescale"))?.eigenvalues)
        })
        .unwrap();
        let mut cfg_a2 = cfg.clone();
        cfg_a2.a = 2.0;
        let params2 = build_params(&[0.5], 2.0, 2.0, 60).unwrap();
        let kappa2 = params2.scaling().kappa();
        let rows_a2 = map_samples(&cfg_a2, &[0.5], 2.0, 60, 150, 1, |s| {
            let spec = smallest_eigs(&s.x, &s.y, 1).map_err(num("spectrum"))?;
            Ok(rescale_hard_edge(&spec, kappa2, 60).map_err(num("rescale"))?.eigenvalues)
        })
        .unwrap();
        let d = ks_statistic(&column(&rows_a0, 0), &column(&rows_a2, 0)).unwrap();
        assert!(
            d > cfg.thresholds.ks,
            "a=0 vs a=2 laws are far apart; KS = {d} should exceed {}",
            cfg.thresholds.ks
        );
    }
}
