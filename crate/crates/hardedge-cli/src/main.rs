//! Command-line front end for the hard-edge bidiagonal laboratory.
//!
//! Exit codes follow a strict contract:
//! * `0` — success (for experiments: every statistical verdict passed);
//! * `1` — configuration error (bad flags, bad config file, bad model
//!   parameters, I/O problems);
//! * `2` — numerical failure (solver breakdown, domain violation,
//!   selftest oracle miss);
//! * `3` — statistical failure (an experiment ran to completion but a
//!   threshold or split-half control did not hold).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use hardedge_cli::config::{ConfigError, ExperimentConfig};
use hardedge_cli::experiments::{
    run_clt_check, run_mean_check, run_universality, run_var_check, HarnessError,
};
use hardedge_cli::report::ExperimentReport;
use hardedge_cli::selftest::run_selftest;
use hardedge_core::hamiltonian::{minimize, HamiltonianError, MinimizeOptions, ModelParams};
use hardedge_core::potential::{ScalingFunctions, ValidatedPotential};
use hardedge_core::sampler::io::{write_sample_csv, SampleSet};
use hardedge_core::sampler::mcmc::{sample_mcmc, ChainConfig};
use hardedge_core::sampler::{derive_stream_seed, sample_exact, BidiagonalSample};
use hardedge_core::spectra::sbo::{grid_self_check, NoisePath, SboGrid, SboMode, SboOperator};
use hardedge_core::spectra::{rescale_hard_edge, smallest_eigs, sturm_eigs, SpectraError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const EXIT_CONFIG: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_STATISTICAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "hardedge",
    version,
    about = "Numerical laboratory for general-β hard-edge bidiagonal ensembles",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the scaling functions φ, θ, θ′ on a uniform grid.
    Phi(PhiArgs),
    /// Solve for the Hamiltonian minimizer with the damped Newton method.
    Minimize(MinimizeArgs),
    /// Draw bidiagonal samples (exact χ route or MALA chain).
    Sample(SampleArgs),
    /// Smallest singular-value spectrum of one sampled bidiagonal matrix.
    Spectrum(SpectrumArgs),
    /// Monte-Carlo spectra of the discretized limit operator.
    Sbo(SboArgs),
    /// Cross-ensemble universality comparison of rescaled eigenvalues.
    Universality(ExperimentArgs),
    /// Deterministic telescoping mean identity across doubled sizes.
    MeanCheck(ExperimentArgs),
    /// Block-sum variance law and circulant Hessian identity.
    VarCheck(ExperimentArgs),
    /// Gaussian log-field checks: variance, covariance, normality.
    CltCheck(ExperimentArgs),
    /// Run the deterministic oracle battery and exit.
    Selftest,
}

#[derive(Args)]
struct PhiArgs {
    /// Potential coefficients g_1,g_2,... (V(x) = Σ g_m x^m).
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true, allow_negative_numbers = true)]
    potential: Vec<f64>,
    /// Number of grid points on [0, 1], endpoints included.
    #[arg(long, default_value_t = 101)]
    grid: usize,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MinimizeArgs {
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true, allow_negative_numbers = true)]
    potential: Vec<f64>,
    #[arg(long, default_value_t = 2.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    a: f64,
    #[arg(long)]
    n: usize,
    /// Relative gradient-norm tolerance for convergence.
    #[arg(long, default_value_t = 1e-10)]
    grad_rtol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SampleMethod {
    /// Exact χ route for the standard linear potential, MALA otherwise.
    Auto,
    /// Independent χ-variate draws (linear potential only).
    Exact,
    /// Metropolis-adjusted Langevin chain.
    Mcmc,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true, allow_negative_numbers = true)]
    potential: Vec<f64>,
    #[arg(long, default_value_t = 2.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    a: f64,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of independent samples to draw.
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, value_enum, default_value_t = SampleMethod::Auto)]
    method: SampleMethod,
    /// Which sample to print when writing CSV output.
    #[arg(long, default_value_t = 0)]
    index: usize,
    /// Output path; `.bin` stores the whole set, anything else writes CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolverChoice {
    /// Matrix-free Krylov iteration on the inverse kernel.
    Krylov,
    /// Bisection on the Sturm count of the tridiagonal form.
    Sturm,
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true, allow_negative_numbers = true)]
    potential: Vec<f64>,
    #[arg(long, default_value_t = 2.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    a: f64,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of smallest eigenvalues to report.
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, value_enum, default_value_t = SampleMethod::Auto)]
    method: SampleMethod,
    #[arg(long, value_enum, default_value_t = SolverChoice::Krylov)]
    solver: SolverChoice,
    /// Rescale to hard-edge units by n²/(4κ).
    #[arg(long, default_value_t = false)]
    rescale: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SboArgs {
    /// Optional potential; when given, the general-coefficient form of the
    /// operator is discretized instead of the native one.
    #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
    potential: Option<Vec<f64>>,
    #[arg(long, default_value_t = 2.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    a: f64,
    /// Number of quadrature cells in the discretization.
    #[arg(long, default_value_t = 2000)]
    cells: usize,
    /// Boundary cutoff ε of the truncated domain [ε, 1].
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    replicas: usize,
    /// Relative error limit for the deterministic grid self-check.
    #[arg(long, default_value_t = 0.01)]
    grid_limit: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Configuration file (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Inline overrides, e.g. `--set replicas = 500` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

/// A command failure carrying its exit class and a message for stderr.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure { code: EXIT_CONFIG, message: message.into() }
    }

    fn numerical(message: impl Into<String>) -> Self {
        Failure { code: EXIT_NUMERICAL, message: message.into() }
    }

    fn statistical(message: impl Into<String>) -> Self {
        Failure { code: EXIT_STATISTICAL, message: message.into() }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::config(e.to_string())
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        Failure { code: e.exit_code() as u8, message: e.to_string() }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes; everything else is a
            // configuration error (clap's own default of 2 would collide
            // with the numerical-failure class).
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    ExitCode::SUCCESS
                }
                _ => {
                    let _ = e.print();
                    ExitCode::from(EXIT_CONFIG)
                }
            };
        }
    };

    let result = match cli.command {
        Command::Phi(args) => cmd_phi(&args),
        Command::Minimize(args) => cmd_minimize(&args),
        Command::Sample(args) => cmd_sample(&args),
        Command::Spectrum(args) => cmd_spectrum(&args),
        Command::Sbo(args) => cmd_sbo(&args),
        Command::Universality(args) => cmd_experiment("universality", &args),
        Command::MeanCheck(args) => cmd_experiment("mean-check", &args),
        Command::VarCheck(args) => cmd_experiment("var-check", &args),
        Command::CltCheck(args) => cmd_experiment("clt-check", &args),
        Command::Selftest => cmd_selftest(),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

/// Write `content` to `path`, or to stdout when no path is given.
fn emit(path: Option<&Path>, content: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, content)
            .map_err(|e| Failure::config(format!("writing {}: {e}", p.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn build_potential(g: &[f64]) -> Result<ValidatedPotential, Failure> {
    ValidatedPotential::new(g).map_err(|e| Failure::config(e.to_string()))
}

fn build_params(g: &[f64], beta: f64, a: f64, n: usize) -> Result<ModelParams, Failure> {
    ModelParams::new(g, beta, a, n).map_err(|e| Failure::config(e.to_string()))
}

fn cmd_phi(args: &PhiArgs) -> Result<(), Failure> {
    if args.grid < 2 {
        return Err(Failure::config("--grid must be at least 2"));
    }
    let pot = build_potential(&args.potential)?;
    let g1 = pot.coeff(1);
    let sf = ScalingFunctions::new(pot).map_err(|e| Failure::numerical(e.to_string()))?;
    let kappa = sf.kappa();
    let mut out = String::new();
    out.push_str("# format_version = 1\n");
    out.push_str(&format!("# kappa = {kappa:?}\n"));
    out.push_str("t,phi,theta,theta_deriv\n");
    for j in 0..args.grid {
        let t = j as f64 / (args.grid - 1) as f64;
        let phi = sf.phi(t).map_err(|e| Failure::numerical(e.to_string()))?;
        let theta = sf.theta(t).map_err(|e| Failure::numerical(e.to_string()))?;
        // θ′ extends continuously to 0 with θ′(0⁺) = 4κ·c₁ = 8κ·g₁.
        let theta_deriv = if j == 0 {
            8.0 * kappa * g1
        } else {
            sf.theta_deriv(t).map_err(|e| Failure::numerical(e.to_string()))?
        };
        out.push_str(&format!("{t:?},{phi:?},{theta:?},{theta_deriv:?}\n"));
    }
    emit(args.out.as_deref(), &out)
}

fn cmd_minimize(args: &MinimizeArgs) -> Result<(), Failure> {
    let params = build_params(&args.potential, args.beta, args.a, args.n)?;
    let opts = MinimizeOptions { grad_rtol: args.grad_rtol, ..MinimizeOptions::default() };
    let result = minimize(&params, &opts).map_err(|e| match e {
        HamiltonianError::NoMinimizer { .. } => Failure::config(e.to_string()),
        other => Failure::numerical(other.to_string()),
    })?;
    let mut out = String::new();
    out.push_str("# format_version = 1\n");
    out.push_str(&format!("# energy = {:?}\n", result.energy));
    out.push_str(&format!("# grad_norm = {:?}\n", result.grad_norm));
    out.push_str(&format!("# iterations = {}\n", result.iterations));
    out.push_str("k,x,y\n");
    for k in 1..=args.n {
        let y = if k < args.n { format!("{:?}", result.y[k - 1]) } else { String::new() };
        out.push_str(&format!("{k},{:?},{y}\n", result.x[k - 1]));
    }
    emit(args.out.as_deref(), &out)
}

/// Draw `count` samples by the requested route.
fn draw_samples(
    params: &ModelParams,
    method: SampleMethod,
    seed: u64,
    count: usize,
) -> Result<Vec<BidiagonalSample>, Failure> {
    let exact_available = params.potential().is_standard_linear();
    let use_exact = match method {
        SampleMethod::Exact => {
            if !exact_available {
                return Err(Failure::config(
                    "--method exact requires the standard linear potential g = [0.5]",
                ));
            }
            true
        }
        SampleMethod::Auto => exact_available,
        SampleMethod::Mcmc => false,
    };
    if use_exact {
        (0..count)
            .map(|i| {
                sample_exact(params, derive_stream_seed(seed, i as u64))
                    .map_err(|e| Failure::numerical(e.to_string()))
            })
            .collect()
    } else {
        let cfg = ChainConfig::new(seed);
        sample_mcmc(params, count, &cfg).map_err(|e| Failure::numerical(e.to_string()))
    }
}

fn cmd_sample(args: &SampleArgs) -> Result<(), Failure> {
    if args.count == 0 {
        return Err(Failure::config("--count must be at least 1"));
    }
    let params = build_params(&args.potential, args.beta, args.a, args.n)?;
    let samples = draw_samples(&params, args.method, args.seed, args.count)?;
    let set = SampleSet {
        n: args.n,
        beta: args.beta,
        a: args.a,
        potential: args.potential.clone(),
        seed: args.seed,
        samples: samples.into_iter().map(|s| (s.x, s.y)).collect(),
    };
    match &args.out {
        Some(path) if path.extension().is_some_and(|e| e == "bin") => set
            .write_path(path)
            .map_err(|e| Failure::config(format!("writing {}: {e}", path.display()))),
        other => {
            if args.index >= set.samples.len() {
                return Err(Failure::config(format!(
                    "--index {} out of range for {} samples",
                    args.index,
                    set.samples.len()
                )));
            }
            let mut buf = Vec::new();
            write_sample_csv(&mut buf, &set, args.index)
                .map_err(|e| Failure::numerical(e.to_string()))?;
            let content = String::from_utf8(buf)
                .map_err(|e| Failure::numerical(format!("CSV encoding: {e}")))?;
            emit(other.as_ref().map(PathBuf::as_path).filter(|p| !p.as_os_str().is_empty()), &content)
        }
    }
}

fn cmd_spectrum(args: &SpectrumArgs) -> Result<(), Failure> {
    let params = build_params(&args.potential, args.beta, args.a, args.n)?;
    let sample = draw_samples(&params, args.method, args.seed, 1)?.remove(0);
    let result = match args.solver {
        SolverChoice::Krylov => smallest_eigs(&sample.x, &sample.y, args.k),
        SolverChoice::Sturm => sturm_eigs(&sample.x, &sample.y, args.k),
    }
    .map_err(|e| match e {
        SpectraError::InvalidRequest { .. } => Failure::config(e.to_string()),
        other => Failure::numerical(other.to_string()),
    })?;
    let result = if args.rescale {
        let pot = build_potential(&args.potential)?;
        let sf = ScalingFunctions::new(pot).map_err(|e| Failure::numerical(e.to_string()))?;
        rescale_hard_edge(&result, sf.kappa(), args.n)
            .map_err(|e| Failure::numerical(e.to_string()))?
    } else {
        result
    };
    let mut out = String::new();
    out.push_str("# format_version = 1\n");
    out.push_str(&format!("# method = {}\n", result.meta.method));
    out.push_str(&format!("# units = {:?}\n", result.units));
    out.push_str(&format!("# rescale_factor = {:?}\n", result.rescale_factor));
    out.push_str("index,eigenvalue\n");
    for (i, lambda) in result.eigenvalues.iter().enumerate() {
        out.push_str(&format!("{},{lambda:?}\n", i + 1));
    }
    emit(args.out.as_deref(), &out)
}

fn cmd_sbo(args: &SboArgs) -> Result<(), Failure> {
    if args.replicas == 0 {
        return Err(Failure::config("--replicas must be at least 1"));
    }
    let scaling = match &args.potential {
        Some(g) => {
            let pot = build_potential(g)?;
            Some(ScalingFunctions::new(pot).map_err(|e| Failure::numerical(e.to_string()))?)
        }
        None => None,
    };
    let mode = if scaling.is_some() { SboMode::General } else { SboMode::LaguerreNative };
    let grid = SboGrid::standard(args.cells, args.epsilon, args.beta, args.a, mode).map_err(|e| {
        match e {
            SpectraError::InvalidRequest { .. } => Failure::config(e.to_string()),
            other => Failure::numerical(other.to_string()),
        }
    })?;
    grid_self_check(&grid, scaling.as_ref(), args.grid_limit)
        .map_err(|e| Failure::numerical(e.to_string()))?;
    let times = grid
        .required_times(scaling.as_ref())
        .map_err(|e| Failure::numerical(e.to_string()))?;
    let mut out = String::new();
    out.push_str("# format_version = 1\n");
    out.push_str(&format!("# cells = {}\n", grid.cells()));
    out.push_str(&format!("# epsilon = {:?}\n", grid.epsilon()));
    out.push_str("replica,");
    out.push_str(
        &(1..=args.k).map(|i| format!("Lambda{i}")).collect::<Vec<_>>().join(","),
    );
    out.push('\n');
    for r in 0..args.replicas {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_stream_seed(args.seed, r as u64));
        let noise = NoisePath::draw(&mut rng, &times)
            .map_err(|e| Failure::numerical(e.to_string()))?;
        let op = SboOperator::build(&grid, scaling.as_ref(), &noise)
            .map_err(|e| Failure::numerical(e.to_string()))?;
        let spectrum =
            op.draw_spectrum(args.k).map_err(|e| Failure::numerical(e.to_string()))?;
        out.push_str(&format!("{r}"));
        for lambda in &spectrum.eigenvalues {
            out.push_str(&format!(",{lambda:?}"));
        }
        out.push('\n');
    }
    emit(args.out.as_deref(), &out)
}

fn cmd_experiment(kind: &'static str, args: &ExperimentArgs) -> Result<(), Failure> {
    let cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path, &args.set)?,
        None => ExperimentConfig::from_text("", &args.set)?,
    };
    if !cfg.experiment.is_empty() && cfg.experiment != kind {
        return Err(Failure::config(format!(
            "config selects experiment `{}` but the `{kind}` command was invoked",
            cfg.experiment
        )));
    }
    let report: ExperimentReport = match kind {
        "universality" => run_universality(&cfg)?,
        "mean-check" => run_mean_check(&cfg)?,
        "var-check" => run_var_check(&cfg)?,
        "clt-check" => run_clt_check(&cfg)?,
        other => return Err(Failure::config(format!("unknown experiment `{other}`"))),
    };
    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(stdout, "{}", report.summary());
    let _ = writeln!(stdout, "report: {}", Path::new(&cfg.output_dir).join("report.json").display());
    if report.pass {
        Ok(())
    } else if report.control_failed() {
        Err(Failure::statistical(
            "split-half control failed: replica halves disagree, so the sampler has not \
             equilibrated at these settings",
        ))
    } else {
        Err(Failure::statistical("one or more statistical checks failed; see report"))
    }
}

fn cmd_selftest() -> Result<(), Failure> {
    let mut stdout = std::io::stdout().lock();
    run_selftest(&mut stdout)?;
    let _ = writeln!(stdout, "selftest: all oracles passed");
    Ok(())
}
