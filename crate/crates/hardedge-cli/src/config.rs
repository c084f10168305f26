//! Experiment configuration: a flat `key = value` text format.
//!
//! The grammar is deliberately small so that configs stay reviewable and
//! diffable:
//!
//! ```text
//! # comment; blank lines ignored
//! experiment = universality
//! beta = 2.0
//! sizes = [400, 800]
//! ensemble.1.potential = [0.5]
//! ensemble.2.potential = [0.5, 0.125]
//! thresholds.ks = 0.06
//! ```
//!
//! One assignment per line; values are integers, decimals, booleans,
//! bracketed numeric arrays, or bare strings.  Dotted keys group related
//! settings but the namespace stays flat.  Unknown keys are rejected (a typo
//! in a threshold name must fail loudly, not silently fall back to a
//! default).
//!
//! Every statistical threshold and tolerance used by the experiments lives
//! here, never in the experiment code, so a report can always be traced back
//! to the exact acceptance bands that produced its verdicts.  The resolved
//! configuration (defaults filled in, overrides applied) has a canonical
//! text form; its FNV-1a hash is stamped into every report so byte-identical
//! reports imply identical effective settings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

/// Configuration errors: anything wrong with the inputs rather than the math.
#[derive(Debug, Error)]
pub enum ConfigError {
    /// The config file could not be read.
    #[error("cannot read config {path}: {source}")]
    Io {
        /// Path that failed to open.
        path: String,
        /// Underlying I/O error.
        source: std::io::Error,
    },
    /// A line did not match `key = value`.
    #[error("config line {line}: {message}")]
    Syntax {
        /// 1-based line number.
        line: usize,
        /// What went wrong.
        message: String,
    },
    /// The key is not one the harness understands.
    #[error("unknown config key `{key}` (check spelling; unknown keys are rejected)")]
    UnknownKey {
        /// The offending key.
        key: String,
    },
    /// The value could not be coerced to the declared type of the key.
    #[error("config key `{key}` expects {expected}, got `{got}`")]
    WrongType {
        /// The offending key.
        key: String,
        /// Human description of the expected type.
        expected: &'static str,
        /// The raw value text.
        got: String,
    },
    /// The value parsed but is outside the key's domain.
    #[error("config key `{key}` invalid: {message}")]
    Invalid {
        /// The offending key.
        key: String,
        /// Domain violation description.
        message: String,
    },
}

/// A parsed right-hand side.
#[derive(Debug, Clone, PartialEq)]
enum RawValue {
    Int(i64),
    Float(f64),
    Bool(bool),
    Str(String),
    List(Vec<f64>),
}

impl RawValue {
    fn type_name(&self) -> &'static str {
        match self {
            RawValue::Int(_) => "integer",
            RawValue::Float(_) => "decimal",
            RawValue::Bool(_) => "boolean",
            RawValue::Str(_) => "string",
            RawValue::List(_) => "array",
        }
    }
}

fn parse_scalar(token: &str) -> RawValue {
    if let Ok(b) = token.parse::<bool>() {
        return RawValue::Bool(b);
    }
    if let Ok(i) = token.parse::<i64>() {
        return RawValue::Int(i);
    }
    if let Ok(f) = token.parse::<f64>() {
        return RawValue::Float(f);
    }
    RawValue::Str(token.to_string())
}

fn parse_value(text: &str, line: usize) -> Result<RawValue, ConfigError> {
    let t = text.trim();
    if t.is_empty() {
        return Err(ConfigError::Syntax {
            line,
            message: "missing value after `=`".to_string(),
        });
    }
    if let Some(inner) = t.strip_prefix('[') {
        let inner = inner.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
            line,
            message: "array opened with `[` but not closed with `]`".to_string(),
        })?;
        let mut items = Vec::new();
        for piece in inner.split(',') {
            let piece = piece.trim();
            if piece.is_empty() {
                continue; // tolerate trailing comma / empty array
            }
            match parse_scalar(piece) {
                RawValue::Int(i) => items.push(i as f64),
                RawValue::Float(f) => items.push(f),
                other => {
                    return Err(ConfigError::Syntax {
                        line,
                        message: format!(
                            "array elements must be numbers, got {} `{piece}`",
                            other.type_name()
                        ),
                    })
                }
            }
        }
        return Ok(RawValue::List(items));
    }
    // Optional quotes around strings (paths with spaces).
    if let Some(stripped) = t.strip_prefix('"').and_then(|s| s.strip_suffix('"')) {
        return Ok(RawValue::Str(stripped.to_string()));
    }
    Ok(parse_scalar(t))
}

/// Parse config text into a key/value map.
fn parse_text(text: &str) -> Result<BTreeMap<String, RawValue>, ConfigError> {
    let mut map = BTreeMap::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let eq = line.find('=').ok_or_else(|| ConfigError::Syntax {
            line: line_no,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = line[..eq].trim();
        if key.is_empty() {
            return Err(ConfigError::Syntax {
                line: line_no,
                message: "empty key before `=`".to_string(),
            });
        }
        if !key
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '.' || c == '_' || c == '-')
        {
            return Err(ConfigError::Syntax {
                line: line_no,
                message: format!("key `{key}` contains characters outside [A-Za-z0-9._-]"),
            });
        }
        let value = parse_value(&line[eq + 1..], line_no)?;
        map.insert(key.to_string(), value);
    }
    Ok(map)
}

/// Statistical thresholds and tolerances, all config-driven.
#[derive(Debug, Clone, PartialEq)]
pub struct Thresholds {
    /// Pairwise KS verdict threshold for universality comparisons.
    pub ks: f64,
    /// Significance level for split-half self-consistency controls.
    pub split_half_level: f64,
    /// Accepted window for the mean-identity error halving ratio err(n)/err(2n).
    pub mean_rate_low: f64,
    /// Upper end of the halving-ratio window.
    pub mean_rate_high: f64,
    /// Errors below this floor count as exact cancellation (no rate demanded).
    pub mean_noise_floor: f64,
    /// Lower bound of the accepted empirical/predicted block-variance ratio.
    pub var_ratio_low: f64,
    /// Upper bound of the accepted block-variance ratio.
    pub var_ratio_high: f64,
    /// Relative tolerance for the beta-doubling variance halving check.
    pub var_beta_tol: f64,
    /// Absolute tolerance for the circulant alternating-eigenvalue identity.
    pub circulant_tol: f64,
    /// Relative tolerance for the log-CLT variance against its prediction.
    pub clt_var_tol: f64,
    /// KS-to-normal threshold for standardized log-CLT sums.
    pub clt_ks: f64,
    /// Z-score bound for the log-CLT mean (|mean| / (sd/√replicas)).
    pub clt_mean_z: f64,
    /// Relative tolerance for the overlap-covariance structure.
    pub clt_cov_tol: f64,
    /// Absolute bound on the increment/overlap correlation (independence).
    pub clt_corr_tol: f64,
    /// Upper bound on Var of the sum started at the soft end (t = 1).
    pub clt_end_var_max: f64,
    /// Absolute tolerance for the entry-convergence mean check against phi.
    pub clt_phi_tol: f64,
    /// Relative-change limit for the discretization grid self-check.
    pub grid_limit: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            ks: 0.06,
            split_half_level: 0.05,
            mean_rate_low: 1.4,
            mean_rate_high: 2.6,
            mean_noise_floor: 1e-9,
            var_ratio_low: 0.85,
            var_ratio_high: 1.15,
            var_beta_tol: 0.2,
            circulant_tol: 1e-9,
            clt_var_tol: 0.10,
            clt_ks: 0.05,
            clt_mean_z: 4.0,
            clt_cov_tol: 0.15,
            clt_corr_tol: 0.1,
            clt_end_var_max: 0.01,
            clt_phi_tol: 0.02,
            grid_limit: 0.01,
        }
    }
}

/// Limit-operator discretization settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SboConfig {
    /// Whether the universality run includes the limit-operator target.
    pub enabled: bool,
    /// Number of grid cells.
    pub cells: usize,
    /// Left cutoff of the discretization grid.
    pub epsilon: f64,
    /// Number of independent spectrum draws.
    pub replicas: usize,
}

impl Default for SboConfig {
    fn default() -> Self {
        SboConfig { enabled: true, cells: 2000, epsilon: 1e-6, replicas: 2000 }
    }
}

/// Markov-chain sampling knobs (0 means "use the derived default").
#[derive(Debug, Clone, Default, PartialEq)]
pub struct McmcConfig {
    /// Number of independent chains across which replicas are spread
    /// (0: one chain per 50 replicas).
    pub chains: usize,
    /// Burn-in steps per chain (0: sampler default).
    pub burn_in: usize,
    /// Thinning stride between retained draws (0: twice the matrix size).
    pub thin: usize,
}

/// Fully resolved experiment configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Experiment selector (informational; the subcommand decides what runs).
    pub experiment: String,
    /// Inverse-temperature parameter shared by all ensembles in the run.
    pub beta: f64,
    /// Hard-edge exponent parameter shared by all ensembles.
    pub a: f64,
    /// Potential coefficient vectors, one per ensemble, in declaration order.
    pub ensembles: Vec<Vec<f64>>,
    /// Matrix sizes, ascending.
    pub sizes: Vec<usize>,
    /// Replicas per (ensemble, size) target.
    pub replicas: usize,
    /// Number of smallest eigenvalues tracked per draw.
    pub eigenvalues: usize,
    /// Master seed; every stream in the run is derived from it.
    pub master_seed: u64,
    /// Output directory for reports and sample tables.
    pub output_dir: String,
    /// Limit-operator discretization settings.
    pub sbo: SboConfig,
    /// Markov-chain settings for non-linear potentials.
    pub mcmc: McmcConfig,
    /// Lower endpoint for the mean-identity window.
    pub mean_s: f64,
    /// Upper endpoint for the mean-identity window.
    pub mean_t: f64,
    /// Block center (as a fraction of n) for the variance check.
    pub var_block_center: f64,
    /// Factor applied to beta for the variance-scaling cross-check.
    pub var_beta_factor: f64,
    /// Observation times for the log-CLT check.
    pub clt_times: Vec<f64>,
    /// Beta values for the log-CLT check (empty: just `beta`).
    pub clt_betas: Vec<f64>,
    /// Bootstrap resampling rounds for KS uncertainty bands.
    pub bootstrap_rounds: usize,
    /// All statistical thresholds.
    pub thresholds: Thresholds,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: String::new(),
            beta: 2.0,
            a: 0.0,
            ensembles: vec![vec![0.5]],
            sizes: vec![400],
            replicas: 2000,
            eigenvalues: 1,
            master_seed: 0,
            output_dir: "out".to_string(),
            sbo: SboConfig::default(),
            mcmc: McmcConfig::default(),
            mean_s: 0.2,
            mean_t: 0.8,
            var_block_center: 0.5,
            var_beta_factor: 2.0,
            clt_times: vec![0.2, 0.5, 0.8],
            clt_betas: Vec::new(),
            bootstrap_rounds: 200,
            thresholds: Thresholds::default(),
        }
    }
}

fn as_f64(key: &str, v: &RawValue) -> Result<f64, ConfigError> {
    match v {
        RawValue::Int(i) => Ok(*i as f64),
        RawValue::Float(f) => Ok(*f),
        other => Err(ConfigError::WrongType {
            key: key.to_string(),
            expected: "a number",
            got: format!("{other:?}"),
        }),
    }
}

fn as_usize(key: &str, v: &RawValue) -> Result<usize, ConfigError> {
    match v {
        RawValue::Int(i) if *i >= 0 => Ok(*i as usize),
        other => Err(ConfigError::WrongType {
            key: key.to_string(),
            expected: "a non-negative integer",
            got: format!("{other:?}"),
        }),
    }
}

fn as_u64(key: &str, v: &RawValue) -> Result<u64, ConfigError> {
    match v {
        RawValue::Int(i) if *i >= 0 => Ok(*i as u64),
        other => Err(ConfigError::WrongType {
            key: key.to_string(),
            expected: "a non-negative integer",
            got: format!("{other:?}"),
        }),
    }
}

fn as_bool(key: &str, v: &RawValue) -> Result<bool, ConfigError> {
    match v {
        RawValue::Bool(b) => Ok(*b),
        other => Err(ConfigError::WrongType {
            key: key.to_string(),
            expected: "true or false",
            got: format!("{other:?}"),
        }),
    }
}

fn as_str(key: &str, v: &RawValue) -> Result<String, ConfigError> {
    match v {
        RawValue::Str(s) => Ok(s.clone()),
        other => Err(ConfigError::WrongType {
            key: key.to_string(),
            expected: "a string",
            got: format!("{other:?}"),
        }),
    }
}

fn as_list(key: &str, v: &RawValue) -> Result<Vec<f64>, ConfigError> {
    match v {
        RawValue::List(items) => Ok(items.clone()),
        other => Err(ConfigError::WrongType {
            key: key.to_string(),
            expected: "a bracketed array",
            got: format!("{other:?}"),
        }),
    }
}

impl ExperimentConfig {
    /// Load a config file, apply `overrides` (each `key=value`), validate.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_text(&text, overrides)
    }

    /// Parse config text, apply `overrides`, fill defaults, validate.
    pub fn from_text(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut map = parse_text(text)?;
        for (i, ov) in overrides.iter().enumerate() {
            let extra = parse_text(ov).map_err(|e| match e {
                ConfigError::Syntax { message, .. } => ConfigError::Syntax {
                    line: 0,
                    message: format!("--set #{}: {message}", i + 1),
                },
                other => other,
            })?;
            map.extend(extra);
        }
        Self::from_map(map)
    }

    fn from_map(map: BTreeMap<String, RawValue>) -> Result<Self, ConfigError> {
        let mut cfg = ExperimentConfig::default();
        let mut ensembles: BTreeMap<usize, Vec<f64>> = BTreeMap::new();

        for (key, value) in &map {
            // Indexed ensemble keys first: ensemble.<N>.potential = [...]
            if let Some(rest) = key.strip_prefix("ensemble.") {
                let (idx_text, field) =
                    rest.split_once('.').ok_or_else(|| ConfigError::UnknownKey {
                        key: key.clone(),
                    })?;
                if field != "potential" {
                    return Err(ConfigError::UnknownKey { key: key.clone() });
                }
                let idx: usize =
                    idx_text.parse().map_err(|_| ConfigError::UnknownKey { key: key.clone() })?;
                if idx == 0 {
                    return Err(ConfigError::Invalid {
                        key: key.clone(),
                        message: "ensemble indices start at 1".to_string(),
                    });
                }
                ensembles.insert(idx, as_list(key, value)?);
                continue;
            }
            match key.as_str() {
                "experiment" => cfg.experiment = as_str(key, value)?,
                "beta" => cfg.beta = as_f64(key, value)?,
                "a" => cfg.a = as_f64(key, value)?,
                "sizes" => {
                    let raw = as_list(key, value)?;
                    let mut sizes = Vec::with_capacity(raw.len());
                    for r in raw {
                        if r < 1.0 || r.fract() != 0.0 {
                            return Err(ConfigError::Invalid {
                                key: key.clone(),
                                message: format!("sizes must be positive integers, got {r}"),
                            });
                        }
                        sizes.push(r as usize);
                    }
                    cfg.sizes = sizes;
                }
                "replicas" => cfg.replicas = as_usize(key, value)?,
                "eigenvalues" => cfg.eigenvalues = as_usize(key, value)?,
                "master_seed" => cfg.master_seed = as_u64(key, value)?,
                "output_dir" => cfg.output_dir = as_str(key, value)?,
                "sbo.enabled" => cfg.sbo.enabled = as_bool(key, value)?,
                "sbo.cells" => cfg.sbo.cells = as_usize(key, value)?,
                "sbo.epsilon" => cfg.sbo.epsilon = as_f64(key, value)?,
                "sbo.replicas" => cfg.sbo.replicas = as_usize(key, value)?,
                "mcmc.chains" => cfg.mcmc.chains = as_usize(key, value)?,
                "mcmc.burn_in" => cfg.mcmc.burn_in = as_usize(key, value)?,
                "mcmc.thin" => cfg.mcmc.thin = as_usize(key, value)?,
                "mean.s" => cfg.mean_s = as_f64(key, value)?,
                "mean.t" => cfg.mean_t = as_f64(key, value)?,
                "var.block_center" => cfg.var_block_center = as_f64(key, value)?,
                "var.beta_factor" => cfg.var_beta_factor = as_f64(key, value)?,
                "clt.times" => cfg.clt_times = as_list(key, value)?,
                "clt.betas" => cfg.clt_betas = as_list(key, value)?,
                "bootstrap.rounds" => cfg.bootstrap_rounds = as_usize(key, value)?,
                "thresholds.ks" => cfg.thresholds.ks = as_f64(key, value)?,
                "thresholds.split_half_level" => {
                    cfg.thresholds.split_half_level = as_f64(key, value)?
                }
                "thresholds.mean_rate_low" => cfg.thresholds.mean_rate_low = as_f64(key, value)?,
                "thresholds.mean_rate_high" => {
                    cfg.thresholds.mean_rate_high = as_f64(key, value)?
                }
                "thresholds.mean_noise_floor" => {
                    cfg.thresholds.mean_noise_floor = as_f64(key, value)?
                }
                "thresholds.var_ratio_low" => cfg.thresholds.var_ratio_low = as_f64(key, value)?,
                "thresholds.var_ratio_high" => {
                    cfg.thresholds.var_ratio_high = as_f64(key, value)?
                }
                "thresholds.var_beta_tol" => cfg.thresholds.var_beta_tol = as_f64(key, value)?,
                "thresholds.circulant_tol" => cfg.thresholds.circulant_tol = as_f64(key, value)?,
                "thresholds.clt_var_tol" => cfg.thresholds.clt_var_tol = as_f64(key, value)?,
                "thresholds.clt_ks" => cfg.thresholds.clt_ks = as_f64(key, value)?,
                "thresholds.clt_mean_z" => cfg.thresholds.clt_mean_z = as_f64(key, value)?,
                "thresholds.clt_cov_tol" => cfg.thresholds.clt_cov_tol = as_f64(key, value)?,
                "thresholds.clt_corr_tol" => cfg.thresholds.clt_corr_tol = as_f64(key, value)?,
                "thresholds.clt_end_var_max" => {
                    cfg.thresholds.clt_end_var_max = as_f64(key, value)?
                }
                "thresholds.clt_phi_tol" => cfg.thresholds.clt_phi_tol = as_f64(key, value)?,
                "thresholds.grid_limit" => cfg.thresholds.grid_limit = as_f64(key, value)?,
                _ => return Err(ConfigError::UnknownKey { key: key.clone() }),
            }
        }

        if !ensembles.is_empty() {
            // Require consecutive indices from 1 so nothing silently drops.
            let expected: Vec<usize> = (1..=ensembles.len()).collect();
            let got: Vec<usize> = ensembles.keys().copied().collect();
            if got != expected {
                return Err(ConfigError::Invalid {
                    key: "ensemble.*".to_string(),
                    message: format!("indices must be 1..{} consecutively, got {got:?}", got.len()),
                });
            }
            cfg.ensembles = ensembles.into_values().collect();
        }

        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |key: &str, message: String| ConfigError::Invalid {
            key: key.to_string(),
            message,
        };
        if !(self.beta >= 1.0 && self.beta.is_finite()) {
            return Err(invalid("beta", format!("need beta >= 1, got {}", self.beta)));
        }
        if !(self.a > -1.0 && self.a.is_finite()) {
            return Err(invalid("a", format!("need a > -1, got {}", self.a)));
        }
        if self.ensembles.is_empty() {
            return Err(invalid("ensemble.*", "need at least one ensemble".to_string()));
        }
        for (i, g) in self.ensembles.iter().enumerate() {
            if g.is_empty() {
                return Err(invalid(
                    "ensemble.*",
                    format!("ensemble {} has an empty potential", i + 1),
                ));
            }
        }
        if self.sizes.is_empty() {
            return Err(invalid("sizes", "need at least one size".to_string()));
        }
        if self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid(
                "sizes",
                format!("sizes must be strictly ascending, got {:?}", self.sizes),
            ));
        }
        if self.eigenvalues == 0 {
            return Err(invalid("eigenvalues", "need at least one eigenvalue".to_string()));
        }
        if !(self.sbo.epsilon > 0.0 && self.sbo.epsilon < 0.01) {
            return Err(invalid(
                "sbo.epsilon",
                format!("need 0 < epsilon < 0.01, got {}", self.sbo.epsilon),
            ));
        }
        if self.sbo.cells < 8 {
            return Err(invalid("sbo.cells", format!("need >= 8 cells, got {}", self.sbo.cells)));
        }
        for (key, t) in [("mean.s", self.mean_s), ("mean.t", self.mean_t)] {
            if !(t > 0.0 && t < 1.0) {
                return Err(invalid(key, format!("need a time in (0, 1), got {t}")));
            }
        }
        if self.mean_s >= self.mean_t {
            return Err(invalid(
                "mean.s",
                format!("need mean.s < mean.t, got {} >= {}", self.mean_s, self.mean_t),
            ));
        }
        if !(self.var_block_center > 0.0 && self.var_block_center < 1.0) {
            return Err(invalid(
                "var.block_center",
                format!("need a fraction in (0, 1), got {}", self.var_block_center),
            ));
        }
        if self.var_beta_factor <= 1.0 {
            return Err(invalid(
                "var.beta_factor",
                format!("need a factor > 1, got {}", self.var_beta_factor),
            ));
        }
        for &t in &self.clt_times {
            if !(t > 0.0 && t < 1.0) {
                return Err(invalid("clt.times", format!("need times in (0, 1), got {t}")));
            }
        }
        for &b in &self.clt_betas {
            if b < 1.0 {
                return Err(invalid("clt.betas", format!("need beta >= 1, got {b}")));
            }
        }
        if self.bootstrap_rounds < 10 {
            return Err(invalid(
                "bootstrap.rounds",
                format!("need >= 10 rounds for a band, got {}", self.bootstrap_rounds),
            ));
        }
        if !self.experiment.is_empty() {
            const KNOWN: [&str; 4] = ["universality", "mean-check", "var-check", "clt-check"];
            if !KNOWN.contains(&self.experiment.as_str()) {
                return Err(invalid(
                    "experiment",
                    format!("unknown experiment `{}`; known: {KNOWN:?}", self.experiment),
                ));
            }
        }
        Ok(())
    }

    /// Canonical text form of the *resolved* config: sorted `key = value`
    /// lines including every default.  Two configs with the same canonical
    /// form behave identically; its hash is stamped into reports.  The
    /// output directory is deliberately excluded: it controls where files
    /// land, not what is computed, so reruns into different directories
    /// produce byte-identical reports.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        let mut push = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        let fmt_list = |xs: &[f64]| {
            let body: Vec<String> = xs.iter().map(|x| format!("{x:?}")).collect();
            format!("[{}]", body.join(", "))
        };
        push("a", format!("{:?}", self.a));
        push("beta", format!("{:?}", self.beta));
        push("bootstrap.rounds", self.bootstrap_rounds.to_string());
        push("clt.betas", fmt_list(&self.clt_betas));
        push("clt.times", fmt_list(&self.clt_times));
        for (i, g) in self.ensembles.iter().enumerate() {
            push(&format!("ensemble.{}.potential", i + 1), fmt_list(g));
        }
        push("experiment", self.experiment.clone());
        push("mcmc.burn_in", self.mcmc.burn_in.to_string());
        push("mcmc.chains", self.mcmc.chains.to_string());
        push("mcmc.thin", self.mcmc.thin.to_string());
        push("mean.s", format!("{:?}", self.mean_s));
        push("mean.t", format!("{:?}", self.mean_t));
        push("eigenvalues", self.eigenvalues.to_string());
        push("master_seed", self.master_seed.to_string());
        push("replicas", self.replicas.to_string());
        push("sbo.cells", self.sbo.cells.to_string());
        push("sbo.enabled", self.sbo.enabled.to_string());
        push("sbo.epsilon", format!("{:?}", self.sbo.epsilon));
        push("sbo.replicas", self.sbo.replicas.to_string());
        push(
            "sizes",
            format!(
                "[{}]",
                self.sizes.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(", ")
            ),
        );
        let t = &self.thresholds;
        push("thresholds.circulant_tol", format!("{:?}", t.circulant_tol));
        push("thresholds.clt_corr_tol", format!("{:?}", t.clt_corr_tol));
        push("thresholds.clt_cov_tol", format!("{:?}", t.clt_cov_tol));
        push("thresholds.clt_end_var_max", format!("{:?}", t.clt_end_var_max));
        push("thresholds.clt_ks", format!("{:?}", t.clt_ks));
        push("thresholds.clt_mean_z", format!("{:?}", t.clt_mean_z));
        push("thresholds.clt_phi_tol", format!("{:?}", t.clt_phi_tol));
        push("thresholds.clt_var_tol", format!("{:?}", t.clt_var_tol));
        push("thresholds.grid_limit", format!("{:?}", t.grid_limit));
        push("thresholds.ks", format!("{:?}", t.ks));
        push("thresholds.mean_noise_floor", format!("{:?}", t.mean_noise_floor));
        push("thresholds.mean_rate_high", format!("{:?}", t.mean_rate_high));
        push("thresholds.mean_rate_low", format!("{:?}", t.mean_rate_low));
        push("thresholds.split_half_level", format!("{:?}", t.split_half_level));
        push("thresholds.var_beta_tol", format!("{:?}", t.var_beta_tol));
        push("thresholds.var_ratio_high", format!("{:?}", t.var_ratio_high));
        push("thresholds.var_ratio_low", format!("{:?}", t.var_ratio_low));
        push("var.beta_factor", format!("{:?}", self.var_beta_factor));
        push("var.block_center", format!("{:?}", self.var_block_center));
        out
    }

    /// FNV-1a 64-bit hash of the canonical form, rendered as `fnv1a64:<hex>`.
    pub fn hash(&self) -> String {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut h = OFFSET;
        for byte in self.canonical().bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(PRIME);
        }
        format!("fnv1a64:{h:016x}")
    }
}
