//! The four statistical experiments and their shared machinery.
//!
//! Each experiment consumes a resolved [`ExperimentConfig`], draws whatever
//! randomness it needs from seed streams derived from the master seed, and
//! produces an [`ExperimentReport`] plus CSV tables of the per-replica
//! observables.  Failures split into three classes, mirrored by the process
//! exit codes:
//!
//! * configuration problems (bad inputs, too few replicas) — exit 1;
//! * numerical problems (a solver failed to converge, a grid check
//!   tripped) — exit 2;
//! * statistical problems (a verdict threshold or self-consistency control
//!   failed) — exit 3, decided by the caller from the report.
//!
//! Sampling goes through [`map_samples`], which picks the exact χ-product
//! sampler for the standard linear potential and preconditioned MALA chains
//! otherwise, spreading replicas across independent chains with derived
//! seeds so runs are reproducible at any thread count.

use hardedge_core::hamiltonian::{minimize, MinimizeOptions, ModelParams};
use hardedge_core::sampler::mcmc::{sample_mcmc, ChainConfig};
use hardedge_core::sampler::{sample_exact, BidiagonalSample};
use hardedge_core::spectra::sbo::{grid_self_check, NoisePath, SboGrid, SboMode, SboOperator};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig};
use crate::report::ReportError;
use crate::runner::replica_map;

mod clt_check;
mod mean_check;
mod universality;
mod var_check;

pub use clt_check::run_clt_check;
pub use mean_check::run_mean_check;
pub use universality::run_universality;
pub use var_check::run_var_check;

/// Minimum replicas for a distributional comparison to mean anything.
pub const MIN_DISTRIBUTIONAL_REPLICAS: usize = 100;

/// Draws per Markov chain when the chain count is left on automatic.
const MCMC_DRAWS_PER_CHAIN: usize = 50;

/// Harness-level failure.
#[derive(Debug, Error)]
pub enum HarnessError {
    /// Bad configuration.
    #[error(transparent)]
    Config(#[from] ConfigError),
    /// Too few replicas for a distributional comparison.
    #[error(
        "insufficient replicas: {got} < {needed} (distributional comparisons \
         need at least {needed})"
    )]
    InsufficientReplicas {
        /// Configured replica count.
        got: usize,
        /// Required minimum.
        needed: usize,
    },
    /// A numerical routine failed.
    #[error("numerical failure while {context}: {message}")]
    Numerical {
        /// What the harness was doing.
        context: String,
        /// The underlying error, rendered.
        message: String,
    },
    /// Writing reports or tables failed.
    #[error(transparent)]
    Report(#[from] ReportError),
}

impl HarnessError {
    /// Process exit code class for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::InsufficientReplicas { .. } => 1,
            HarnessError::Numerical { .. } => 2,
            // Output I/O is a configuration problem (bad output_dir).
            HarnessError::Report(_) => 1,
        }
    }
}

/// Adapter: wrap any displayable error as a numerical failure with context.
pub fn num<E: std::fmt::Display>(context: impl Into<String>) -> impl FnOnce(E) -> HarnessError {
    let context = context.into();
    move |e| HarnessError::Numerical { context, message: e.to_string() }
}

/// Filesystem-safe label for a potential coefficient vector, e.g.
/// `g0.5` or `g0.5_0.125`.
pub fn ensemble_slug(g: &[f64]) -> String {
    let body: Vec<String> = g.iter().map(|c| format!("{c}")).collect();
    format!("g{}", body.join("_"))
}

/// Model parameters for one (potential, beta, size) target.
pub fn build_params(g: &[f64], beta: f64, a: f64, n: usize) -> Result<ModelParams, HarnessError> {
    ModelParams::new(g, beta, a, n)
        .map_err(num(format!("validating model {} beta={beta} a={a} n={n}", ensemble_slug(g))))
}

/// The Hamiltonian minimizer for a target, at default tolerances.
///
/// The standard linear potential has the exact χ-mode closed form, so it is
/// used directly; this also covers β = 1, where the minimizer touches the
/// boundary of the positive orthant (`y₁° = 0`) and interior Newton cannot
/// terminate.  General potentials go through the damped Newton solver.
pub fn newton_profile(params: &ModelParams) -> Result<(Vec<f64>, Vec<f64>), HarnessError> {
    if params.potential().is_standard_linear() {
        let (n, beta, a) = (params.n(), params.beta(), params.a());
        if !params.has_minimizer() {
            return Err(HarnessError::Numerical {
                context: format!("minimizer at beta={beta} a={a}"),
                message: "the energy is unbounded below (beta*(1+a) < 1)".to_string(),
            });
        }
        let x = (1..=n).map(|k| ((k as f64 + a - 1.0 / beta) / n as f64).sqrt()).collect();
        let y = (1..n).map(|k| ((k as f64 - 1.0 / beta) / n as f64).sqrt()).collect();
        return Ok((x, y));
    }
    let result = minimize(params, &MinimizeOptions::default()).map_err(num(format!(
        "minimizing the Hamiltonian at n={}",
        params.n()
    )))?;
    Ok((result.x, result.y))
}

/// Reduce `count` independent samples of the model to per-replica summaries.
///
/// The standard linear potential uses the exact χ-product sampler, one
/// derived seed per replica.  Every other potential runs `mcmc.chains`
/// independent MALA chains (default: one chain per 50 replicas), each with
/// its own derived seed, burn-in, and a thinning stride of twice the matrix
/// size unless overridden; the chains' draws are concatenated in chain
/// order and truncated to `count`.
pub fn map_samples<T, F>(
    cfg: &ExperimentConfig,
    g: &[f64],
    beta: f64,
    n: usize,
    count: usize,
    stream_block: u64,
    reduce: F,
) -> Result<Vec<T>, HarnessError>
where
    T: Send,
    F: Fn(&BidiagonalSample) -> Result<T, HarnessError> + Sync,
{
    let params = build_params(g, beta, cfg.a, n)?;
    if params.potential().is_standard_linear() {
        return replica_map(count, cfg.master_seed, stream_block, |r, seed| {
            let sample = sample_exact(&params, seed)
                .map_err(num(format!("drawing exact replica {r} at n={n}")))?;
            reduce(&sample)
        });
    }
    let chains = if cfg.mcmc.chains > 0 {
        cfg.mcmc.chains
    } else {
        count.div_ceil(MCMC_DRAWS_PER_CHAIN)
    };
    let per_chain = count.div_ceil(chains);
    let nested = replica_map(chains, cfg.master_seed, stream_block, |c, seed| {
        let mut chain_cfg = ChainConfig::new(seed);
        if cfg.mcmc.burn_in > 0 {
            chain_cfg.burn_in = Some(cfg.mcmc.burn_in);
        }
        chain_cfg.thin = Some(if cfg.mcmc.thin > 0 { cfg.mcmc.thin } else { 2 * n });
        let samples = sample_mcmc(&params, per_chain, &chain_cfg)
            .map_err(num(format!("running MALA chain {c} at n={n}")))?;
        samples.iter().map(&reduce).collect::<Result<Vec<T>, HarnessError>>()
    })?;
    let mut flat: Vec<T> = nested.into_iter().flatten().collect();
    flat.truncate(count);
    Ok(flat)
}

/// Independent draws of the `k` smallest limit-operator eigenvalues
/// (hard-edge units) at inverse temperature `beta` and exponent `a`.
///
/// The grid passes the zero-noise refinement self-check once up front; each
/// replica then draws its own Gaussian field from a derived seed.
pub fn sbo_batch(
    cfg: &ExperimentConfig,
    beta: f64,
    k: usize,
    stream_block: u64,
) -> Result<Vec<Vec<f64>>, HarnessError> {
    let context = "discretizing the limit operator";
    let grid = SboGrid::standard(cfg.sbo.cells, cfg.sbo.epsilon, beta, cfg.a, SboMode::LaguerreNative)
        .map_err(num(context))?;
    grid_self_check(&grid, None, cfg.thresholds.grid_limit).map_err(num(context))?;
    let times = grid.required_times(None).map_err(num(context))?;
    replica_map(cfg.sbo.replicas, cfg.master_seed, stream_block, |r, seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise =
            NoisePath::draw(&mut rng, &times).map_err(num(format!("noise draw {r}")))?;
        let op = SboOperator::build(&grid, None, &noise)
            .map_err(num(format!("assembling limit operator draw {r}")))?;
        let spectrum = op
            .draw_spectrum(k)
            .map_err(num(format!("solving limit-operator spectrum draw {r}")))?;
        Ok(spectrum.eigenvalues)
    })
}

/// Extract column `j` from replica-major eigenvalue rows.
pub fn column(rows: &[Vec<f64>], j: usize) -> Vec<f64> {
    rows.iter().map(|row| row[j]).collect()
}

/// Split a sample into (even-index, odd-index) halves for a control.
pub fn split_halves(values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut even = Vec::with_capacity(values.len().div_ceil(2));
    let mut odd = Vec::with_capacity(values.len() / 2);
    for (i, &v) in values.iter().enumerate() {
        if i % 2 == 0 {
            even.push(v);
        } else {
            odd.push(v);
        }
    }
    (even, odd)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_partition_the_failure_classes() {
        let config_err = HarnessError::Config(ConfigError::UnknownKey { key: "x".into() });
        assert_eq!(config_err.exit_code(), 1);
        let too_few = HarnessError::InsufficientReplicas { got: 1, needed: 100 };
        assert_eq!(too_few.exit_code(), 1);
        let numeric =
            HarnessError::Numerical { context: "test".into(), message: "boom".into() };
        assert_eq!(numeric.exit_code(), 2);
    }

    #[test]
    fn slug_is_filesystem_safe() {
        assert_eq!(ensemble_slug(&[0.5]), "g0.5");
        assert_eq!(ensemble_slug(&[0.5, 0.125]), "g0.5_0.125");
    }

    #[test]
    fn split_halves_partitions_in_order() {
        let (even, odd) = split_halves(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(even, vec![0.0, 2.0, 4.0]);
        assert_eq!(odd, vec![1.0, 3.0]);
    }

    #[test]
    fn map_samples_exact_route_is_deterministic_and_sized() {
        let cfg = ExperimentConfig::from_text("master_seed = 11", &[]).unwrap();
        let a = map_samples(&cfg, &[0.5], 2.0, 30, 8, 0, |s| Ok(s.x[0])).unwrap();
        let b = map_samples(&cfg, &[0.5], 2.0, 30, 8, 0, |s| Ok(s.x[0])).unwrap();
        assert_eq!(a, b, "same master seed must reproduce the draws");
        assert_eq!(a.len(), 8);
        let c = map_samples(&cfg, &[0.5], 2.0, 30, 8, 1, |s| Ok(s.x[0])).unwrap();
        assert_ne!(a, c, "different stream blocks must differ");
    }

    #[test]
    fn map_samples_mcmc_route_spreads_chains_and_truncates() {
        let mut cfg = ExperimentConfig::from_text("master_seed = 3", &[]).unwrap();
        cfg.mcmc.chains = 2;
        cfg.mcmc.burn_in = 40;
        cfg.mcmc.thin = 3;
        let vals = map_samples(&cfg, &[0.5, 0.125], 2.0, 12, 5, 0, |s| Ok(s.y[0])).unwrap();
        assert_eq!(vals.len(), 5, "2 chains x 3 draws truncate to 5");
        assert!(vals.iter().all(|v| v.is_finite() && *v > 0.0));
    }
}
