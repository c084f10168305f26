//! Gaussian fluctuation scale of the entries around the minimizer.
//!
//! Centered at the Newton profile, a contiguous block
//! `I = {i₀, …, i₀+L-1}` of entry differences has, to leading order,
//!
//! ```text
//!   Var( Σ_{i∈I} (Xᵢ - x°ᵢ) - (Yᵢ - y°ᵢ) )
//!       ≈  φ(t₀)² θ'(t₀) / θ(t₀) · |I| / (β n),        t₀ = i₀/n,
//! ```
//!
//! because the alternating (x-minus-y) direction is the soft mode of the
//! local Hessian.  The experiment measures the empirical block variance
//! over replicas, checks the ratio to the prediction against the configured
//! window, and cross-checks two structural facts:
//!
//! * doubling β must halve the variance (the prediction is ∝ 1/β);
//! * the prediction's Hessian content is exact in the translation-invariant
//!   comparison model: the block-circulant Hessian at the flat point φ(t)
//!   has the alternating vector as an eigenvector with eigenvalue
//!   `2θ(t)/(φ(t)²θ'(t))`, reproduced here to the configured tolerance by
//!   an independent dense-matrix route.
//!
//! The block length defaults to `n^{1/4}`: long enough to engage the
//! collective mode, short enough that the scaling functions are locally
//! constant.

use std::path::Path;

use hardedge_core::hamiltonian::circulant::{alternating_eigenvalue, circulant_hessian};
use hardedge_core::potential::ValidatedPotential;

use crate::config::ExperimentConfig;
use crate::report::{write_csv, write_report, CheckResult, ExperimentReport, RunManifest};
use crate::stats::variance;

use super::{
    build_params, ensemble_slug, map_samples, newton_profile, num, HarnessError,
    MIN_DISTRIBUTIONAL_REPLICAS,
};

/// Circulant block size for the dense Hessian cross-check: large enough
/// that the wrap-around is irrelevant (the eigenvalue is exactly
/// block-size-independent), small enough to stay instant.
const CIRCULANT_BLOCK: usize = 32;

/// Run the block-variance experiment and write its artifacts.
pub fn run_var_check(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    if cfg.replicas < MIN_DISTRIBUTIONAL_REPLICAS {
        return Err(HarnessError::InsufficientReplicas {
            got: cfg.replicas,
            needed: MIN_DISTRIBUTIONAL_REPLICAS,
        });
    }
    let betas = [cfg.beta, cfg.beta * cfg.var_beta_factor];
    let out_dir = Path::new(&cfg.output_dir);
    let mut checks = Vec::new();
    let mut block = 0u64;

    for g in &cfg.ensembles {
        let slug = ensemble_slug(g);

        for &n in &cfg.sizes {
            // 1-based block [i0, i0+L-1], kept inside the y range (i ≤ n-1).
            let i0 = (((n as f64) * cfg.var_block_center).round() as usize).clamp(1, n - 1);
            let len = ((n as f64).powf(0.25).round() as usize).max(1);
            let i_hi = (i0 + len - 1).min(n - 1);
            let block_len = i_hi - i0 + 1;
            let t0 = i0 as f64 / n as f64;

            let mut empirical = Vec::with_capacity(betas.len());
            for &beta in &betas {
                let params = build_params(g, beta, cfg.a, n)?;
                let (x0, y0) = newton_profile(&params)?;
                let diffs = map_samples(cfg, g, beta, n, cfg.replicas, block, |s| {
                    let mut d = 0.0;
                    for i in i0..=i_hi {
                        d += (s.x[i - 1] - x0[i - 1]) - (s.y[i - 1] - y0[i - 1]);
                    }
                    Ok(d)
                })?;
                block += 1;

                let emp = variance(&diffs).map_err(num("block-variance estimate"))?;
                let sf = params.scaling();
                let ctx = format!("evaluating scaling functions for {slug}");
                let phi = sf.phi(t0).map_err(num(ctx.clone()))?;
                let theta = sf.theta(t0).map_err(num(ctx.clone()))?;
                let theta_d = sf.theta_deriv(t0).map_err(num(ctx.clone()))?;
                let predicted = phi * phi * theta_d / theta * block_len as f64 / (beta * n as f64);
                checks.push(CheckResult::window(
                    format!("block-variance-ratio {slug} beta={beta} n={n}"),
                    emp / predicted,
                    cfg.thresholds.var_ratio_low,
                    cfg.thresholds.var_ratio_high,
                ));
                empirical.push(emp);

                let table: Vec<Vec<f64>> = diffs
                    .iter()
                    .enumerate()
                    .map(|(r, &d)| vec![r as f64, d])
                    .collect();
                write_csv(
                    out_dir,
                    &format!("var-{slug}-beta{beta}-n{n}"),
                    &["replica", "block_diff"],
                    &table,
                )?;
            }

            // The prediction scales as 1/β: the empirical variances' ratio
            // must reproduce the configured β factor.
            checks.push(CheckResult::relative(
                format!("variance-beta-scaling {slug} n={n}"),
                empirical[0] / empirical[1],
                cfg.var_beta_factor,
                cfg.thresholds.var_beta_tol,
            ));
        }

        // Deterministic cross-check of the Hessian content at the block
        // center: dense circulant route vs scaling-function prediction.
        let potential =
            ValidatedPotential::new(g).map_err(num(format!("validating potential {slug}")))?;
        let params = build_params(g, cfg.beta, cfg.a, cfg.sizes[0])?;
        let sf = params.scaling();
        let t = cfg.var_block_center;
        let ctx = format!("evaluating scaling functions for {slug}");
        let phi = sf.phi(t).map_err(num(ctx.clone()))?;
        let theta = sf.theta(t).map_err(num(ctx.clone()))?;
        let theta_d = sf.theta_deriv(t).map_err(num(ctx.clone()))?;
        let h = circulant_hessian(&potential, t, phi, CIRCULANT_BLOCK);
        let (rayleigh, residual) = alternating_eigenvalue(&h);
        let predicted = 2.0 * theta / (phi * phi * theta_d);
        checks.push(CheckResult::relative(
            format!("circulant-identity {slug} t={t}"),
            rayleigh,
            predicted,
            cfg.thresholds.circulant_tol,
        ));
        checks.push(CheckResult::window(
            format!("circulant-residual {slug} t={t}"),
            residual,
            0.0,
            cfg.thresholds.circulant_tol * rayleigh.abs(),
        ));
    }

    let report =
        ExperimentReport::new(RunManifest::new("var-check", cfg), Vec::new(), Vec::new(), checks);
    write_report(out_dir, &report)?;
    Ok(report)
}
