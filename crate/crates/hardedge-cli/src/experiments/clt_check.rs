//! Central limit theorem for the log-entries of the sampled model.
//!
//! With `(x°, y°)` the Newton minimizer, the tail sums
//!
//! ```text
//!   S(t) = Σ_{k=⌊nt⌋}^{n} log(X_k / x°_k)  -  Σ_{k=⌊nt⌋}^{n-1} log(Y_k / y°_k)
//! ```
//!
//! converge, as `n → ∞`, to a centered Gaussian field with
//!
//! ```text
//!   Var S(t)        = (1/β) · log(1/θ(t)),
//!   Cov(S(s), S(t)) = (1/β) · log(1/θ(t))        for s < t,
//! ```
//!
//! i.e. a time-changed Brownian motion run backwards from the soft end:
//! increments over disjoint windows are independent, and everything about
//! the field is one scaling function θ and one explicit 1/β.  The
//! experiment replicates S at the configured times and betas and checks
//! mean (as a z-score), variance, normality (KS of the standardized
//! sample), the overlap covariance, increment independence, the vanishing
//! variance at t → 1, and — as an entrywise law-of-large-numbers probe —
//! that `X_{⌊nt⌋}` concentrates at φ(t).

use std::path::Path;

use crate::config::ExperimentConfig;
use crate::report::{write_csv, write_report, CheckResult, ExperimentReport, RunManifest};
use crate::stats::{correlation, covariance, ks_against_normal, mean, variance};

use super::{
    build_params, ensemble_slug, map_samples, newton_profile, num, HarnessError,
    MIN_DISTRIBUTIONAL_REPLICAS,
};

/// Per-replica observables: the tail sums, the soft-end term, the probes.
struct CltRow {
    /// `S(t)` per configured time (ascending).
    sums: Vec<f64>,
    /// `S(1)` — just the last x-term, whose variance must vanish.
    end_sum: f64,
    /// `X_{⌊nt⌋}` per configured time.
    probes: Vec<f64>,
}

/// Run the log-CLT experiment and write its artifacts.
pub fn run_clt_check(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    if cfg.replicas < MIN_DISTRIBUTIONAL_REPLICAS {
        return Err(HarnessError::InsufficientReplicas {
            got: cfg.replicas,
            needed: MIN_DISTRIBUTIONAL_REPLICAS,
        });
    }
    let betas: Vec<f64> =
        if cfg.clt_betas.is_empty() { vec![cfg.beta] } else { cfg.clt_betas.clone() };
    let mut times = cfg.clt_times.clone();
    times.sort_by(|p, q| p.partial_cmp(q).expect("config validated times"));

    let out_dir = Path::new(&cfg.output_dir);
    let mut checks = Vec::new();
    let mut block = 0u64;

    for g in &cfg.ensembles {
        let slug = ensemble_slug(g);
        for &beta in &betas {
            for &n in &cfg.sizes {
                let params = build_params(g, beta, cfg.a, n)?;
                let (x0, y0) = newton_profile(&params)?;
                // 1-based start index per time.
                let starts: Vec<usize> = times
                    .iter()
                    .map(|&t| ((n as f64 * t).floor() as usize).clamp(1, n))
                    .collect();

                let starts_ref = &starts;
                let x0_ref = &x0;
                let y0_ref = &y0;
                let rows: Vec<CltRow> =
                    map_samples(cfg, g, beta, n, cfg.replicas, block, move |s| {
                        // Suffix sums of the centered log-entries.
                        let mut suffix_x = vec![0.0; n + 2];
                        let mut suffix_y = vec![0.0; n + 2];
                        for k in (1..=n).rev() {
                            suffix_x[k] = suffix_x[k + 1] + (s.x[k - 1] / x0_ref[k - 1]).ln();
                            suffix_y[k] = if k < n {
                                suffix_y[k + 1] + (s.y[k - 1] / y0_ref[k - 1]).ln()
                            } else {
                                0.0
                            };
                        }
                        let sums =
                            starts_ref.iter().map(|&k| suffix_x[k] - suffix_y[k]).collect();
                        let probes = starts_ref.iter().map(|&k| s.x[k - 1]).collect();
                        Ok(CltRow { sums, end_sum: suffix_x[n], probes })
                    })?;
                block += 1;

                let replicas = rows.len() as f64;
                let sf = params.scaling();
                for (j, &t) in times.iter().enumerate() {
                    let col: Vec<f64> = rows.iter().map(|r| r.sums[j]).collect();
                    let m = mean(&col).map_err(num("CLT mean"))?;
                    let v = variance(&col).map_err(num("CLT variance"))?;
                    let theta =
                        sf.theta(t).map_err(num(format!("theta({t}) for {slug}")))?;
                    let predicted_var = (1.0 / beta) * (1.0 / theta).ln();
                    let tag = format!("{slug} beta={beta} n={n} t={t}");
                    checks.push(CheckResult::window(
                        format!("clt-mean-z {tag}"),
                        m / (v.sqrt() / replicas.sqrt()),
                        -cfg.thresholds.clt_mean_z,
                        cfg.thresholds.clt_mean_z,
                    ));
                    checks.push(CheckResult::relative(
                        format!("clt-variance {tag}"),
                        v,
                        predicted_var,
                        cfg.thresholds.clt_var_tol,
                    ));
                    let d = ks_against_normal(&col, m, v.sqrt())
                        .map_err(num("CLT normality"))?;
                    checks.push(CheckResult::window(
                        format!("clt-normal-ks {tag}"),
                        d,
                        0.0,
                        cfg.thresholds.clt_ks,
                    ));
                    let probe_col: Vec<f64> = rows.iter().map(|r| r.probes[j]).collect();
                    let probe_mean = mean(&probe_col).map_err(num("probe mean"))?;
                    let phi = sf.phi(t).map_err(num(format!("phi({t}) for {slug}")))?;
                    checks.push(CheckResult::absolute(
                        format!("entry-mean-phi {tag}"),
                        probe_mean,
                        phi,
                        cfg.thresholds.clt_phi_tol,
                    ));
                }

                // Overlap covariance: Cov(S(s), S(t)) = Var S(t) for s < t.
                for i in 0..times.len() {
                    for j in (i + 1)..times.len() {
                        let ci: Vec<f64> = rows.iter().map(|r| r.sums[i]).collect();
                        let cj: Vec<f64> = rows.iter().map(|r| r.sums[j]).collect();
                        let cov = covariance(&ci, &cj).map_err(num("CLT covariance"))?;
                        let theta = sf
                            .theta(times[j])
                            .map_err(num(format!("theta({}) for {slug}", times[j])))?;
                        let predicted = (1.0 / beta) * (1.0 / theta).ln();
                        checks.push(CheckResult::relative(
                            format!(
                                "clt-covariance {slug} beta={beta} n={n} s={} t={}",
                                times[i], times[j]
                            ),
                            cov,
                            predicted,
                            cfg.thresholds.clt_cov_tol,
                        ));
                    }
                }

                // Disjoint increments are independent: the increment between
                // adjacent times must be uncorrelated with the deeper sum.
                for i in 0..times.len().saturating_sub(1) {
                    let inc: Vec<f64> =
                        rows.iter().map(|r| r.sums[i] - r.sums[i + 1]).collect();
                    let tail: Vec<f64> = rows.iter().map(|r| r.sums[i + 1]).collect();
                    let corr = correlation(&inc, &tail).map_err(num("CLT correlation"))?;
                    checks.push(CheckResult::window(
                        format!(
                            "clt-increment-corr {slug} beta={beta} n={n} s={} t={}",
                            times[i],
                            times[i + 1]
                        ),
                        corr,
                        -cfg.thresholds.clt_corr_tol,
                        cfg.thresholds.clt_corr_tol,
                    ));
                }

                // At the soft end the sum is a single term; its variance
                // must be negligible (the field pins to 0 at t = 1).
                let end_col: Vec<f64> = rows.iter().map(|r| r.end_sum).collect();
                let end_var = variance(&end_col).map_err(num("CLT end variance"))?;
                checks.push(CheckResult::window(
                    format!("clt-end-variance {slug} beta={beta} n={n}"),
                    end_var,
                    0.0,
                    cfg.thresholds.clt_end_var_max,
                ));

                // Raw observables for re-analysis.
                let mut header: Vec<String> = vec!["replica".to_string()];
                for &t in &times {
                    header.push(format!("S_t{t}"));
                }
                header.push("S_end".to_string());
                for &t in &times {
                    header.push(format!("X_t{t}"));
                }
                let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
                let table: Vec<Vec<f64>> = rows
                    .iter()
                    .enumerate()
                    .map(|(r, row)| {
                        let mut line = Vec::with_capacity(header.len());
                        line.push(r as f64);
                        line.extend_from_slice(&row.sums);
                        line.push(row.end_sum);
                        line.extend_from_slice(&row.probes);
                        line
                    })
                    .collect();
                write_csv(out_dir, &format!("clt-{slug}-beta{beta}-n{n}"), &header_refs, &table)?;
            }
        }
    }

    let report =
        ExperimentReport::new(RunManifest::new("clt-check", cfg), Vec::new(), Vec::new(), checks);
    write_report(out_dir, &report)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg_with(dir: &std::path::Path, extra: &str) -> ExperimentConfig {
        let text = format!(
            "experiment = clt-check\nsizes = [300]\nreplicas = 800\nmaster_seed = 17\noutput_dir = {}\n{extra}",
            dir.display()
        );
        ExperimentConfig::from_text(&text, &[]).unwrap()
    }

    #[test]
    fn linear_log_sums_are_gaussian_with_the_predicted_field() {
        // β = 2, θ(t) = t: Var S(0.5) → (1/2)·log 2 ≈ 0.3466, S normal,
        // overlaps equal the deeper variance, increments decorrelate.
        let dir = tempfile::tempdir().unwrap();
        let cfg = cfg_with(dir.path(), "");
        let report = run_clt_check(&cfg).expect("runs");
        assert!(report.pass, "summary:\n{}", report.summary());
        let var_check = report
            .checks
            .iter()
            .find(|c| c.name.starts_with("clt-variance") && c.name.contains("t=0.5"))
            .expect("variance check at t = 0.5");
        let predicted = var_check.expected.expect("relative check has a prediction");
        assert!(
            (predicted - 0.5 * (2.0f64).ln()).abs() < 1e-12,
            "β = 2, θ = t ⇒ prediction (1/2)·ln 2, got {predicted}"
        );
    }

    #[test]
    fn beta_list_multiplies_the_check_set() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = cfg_with(dir.path(), "clt.times = [0.5]\n");
        cfg.clt_betas = vec![1.0, 2.0];
        cfg.replicas = 400;
        let report = run_clt_check(&cfg).expect("runs");
        let betas_seen: Vec<bool> = [1.0, 2.0]
            .iter()
            .map(|b| report.checks.iter().any(|c| c.name.contains(&format!("beta={b}"))))
            .collect();
        assert_eq!(betas_seen, vec![true, true], "both betas must be exercised");
        assert!(report.pass, "summary:\n{}", report.summary());
        assert!(dir.path().join("clt-g0.5-beta1-n300.csv").exists());
        assert!(dir.path().join("clt-g0.5-beta2-n300.csv").exists());
    }

    #[test]
    fn rejects_insufficient_replicas() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = cfg_with(dir.path(), "");
        cfg.replicas = 99;
        let err = run_clt_check(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 1, "{err}");
    }
}
