//! Monte-Carlo discretization of the hard-edge limit operator.
//!
//! The limit operator is best handled through its inverse: an integral
//! kernel on `(0,1]²` supported strictly above the diagonal,
//!
//! ```text
//! native:   𝖪(s,t) = (1/√t)·(s/t)^{a/2}·exp[(V(s) − V(t))/√β],
//! general:  K(s,t) = (φ(s)φ(t))^{-1/2}·(θ(s)/θ(t))^{a/2+1/4}
//!                     ·exp[(V(θ(s)) − V(θ(t)))/√β],
//! ```
//!
//! for `s < t`, where `V(t) = ∫_t^1 db_u/√u` is a Gaussian field with
//! independent increments and `Var V(t) = log(1/t)`.  A draw of the
//! spectrum discretizes the kernel on a quadrature grid,
//! `M_ij = kernel(s_i, s_j)·√(w_i w_j)` (zero on and below the diagonal),
//! and inverts the squared singular values: `Λ_i = 1/σ_i²`, ascending.
//!
//! Because the kernel factorizes as `M_ij = u_i·v_j` above the diagonal,
//! the Gram operator `MᵀM` applies in `O(m)` by prefix/suffix scans, and
//! the whole assembly is carried in log-space with a single extracted
//! scale so that extreme values of `a` or deep noise excursions cannot
//! overflow.
//!
//! The two kernel forms are related by the change of variables `u = θ(t)`:
//! `𝖪(θ(s),θ(t))·√(θ′(s)θ′(t)) = 2√κ·K(s,t)`, so coupled discretizations
//! (one Gaussian field read at `s_i` for the native form and at `θ(s_i)`
//! for the general form) have Gram spectra in the exact ratio `4κ`.

use super::lanczos::{self, LanczosOptions, SymOp};
use super::{validate_k, SpectraError, SpectrumMeta, SpectrumResult, Units};
use crate::potential::ScalingFunctions;
use rand::Rng;
use rand_distr::StandardNormal;

/// Which inverse-kernel form a grid discretizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SboMode {
    /// The native hard-edge kernel in the variables where the linear
    /// potential is the identity time change.
    LaguerreNative,
    /// The general-potential limit kernel, written through the scaling
    /// functions `φ` and `θ`.
    General,
}

/// Quadrature grid on `(ε, 1]` for the kernel discretization.
///
/// The standard construction places a quarter of the cells geometrically
/// on `(ε, 0.01]` (resolving the integrable singularity at the origin) and
/// the rest uniformly on `[0.01, 1]`; nodes are cell midpoints and weights
/// are cell widths, so `Σw = 1 − ε`.
#[derive(Clone, Debug)]
pub struct SboGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    epsilon: f64,
    beta: f64,
    a: f64,
    mode: SboMode,
}

/// Default singularity cutoff.
pub const DEFAULT_EPSILON: f64 = 1e-6;

impl SboGrid {
    /// The standard geometric-plus-uniform grid with `cells` cells.
    pub fn standard(
        cells: usize,
        epsilon: f64,
        beta: f64,
        a: f64,
        mode: SboMode,
    ) -> Result<Self, SpectraError> {
        if cells < 8 {
            return Err(SpectraError::InvalidRequest {
                what: format!("grid needs at least 8 cells, got {cells}"),
            });
        }
        if !(epsilon > 0.0 && epsilon < 0.01) {
            return Err(SpectraError::InvalidRequest {
                what: format!("epsilon = {epsilon} outside (0, 0.01)"),
            });
        }
        let geo = cells / 4;
        let uni = cells - geo;
        let mut bounds = Vec::with_capacity(cells + 1);
        let ratio = (0.01 / epsilon).ln();
        for i in 0..=geo {
            bounds.push(epsilon * (ratio * i as f64 / geo as f64).exp());
        }
        for j in 1..=uni {
            bounds.push(0.01 + (1.0 - 0.01) * j as f64 / uni as f64);
        }
        // Pin the interior joint and the right edge exactly.
        bounds[geo] = 0.01;
        bounds[cells] = 1.0;
        Self::from_boundaries(&bounds, beta, a, mode)
    }

    /// Build from explicit cell boundaries (ascending, in `(0, 1]`; the
    /// first boundary is the singularity cutoff).
    pub fn from_boundaries(
        bounds: &[f64],
        beta: f64,
        a: f64,
        mode: SboMode,
    ) -> Result<Self, SpectraError> {
        if bounds.len() < 2 {
            return Err(SpectraError::InvalidRequest {
                what: "grid needs at least one cell".to_string(),
            });
        }
        for (i, pair) in bounds.windows(2).enumerate() {
            if !(pair[0] < pair[1]) {
                return Err(SpectraError::InvalidRequest {
                    what: format!("grid boundaries not strictly ascending at index {i}"),
                });
            }
        }
        if !(bounds[0] > 0.0) || bounds[bounds.len() - 1] > 1.0 {
            return Err(SpectraError::InvalidRequest {
                what: "grid boundaries must lie in (0, 1]".to_string(),
            });
        }
        let nodes: Vec<f64> = bounds.windows(2).map(|p| 0.5 * (p[0] + p[1])).collect();
        let weights: Vec<f64> = bounds.windows(2).map(|p| p[1] - p[0]).collect();
        Self::from_nodes(nodes, weights, bounds[0], beta, a, mode)
    }

    /// Build from explicit nodes and quadrature weights (the general form;
    /// used e.g. for pushforward grids under a time change).
    pub fn from_nodes(
        nodes: Vec<f64>,
        weights: Vec<f64>,
        epsilon: f64,
        beta: f64,
        a: f64,
        mode: SboMode,
    ) -> Result<Self, SpectraError> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(SpectraError::InvalidRequest {
                what: "nodes and weights must be nonempty and equal length".to_string(),
            });
        }
        for (i, pair) in nodes.windows(2).enumerate() {
            if !(pair[0] < pair[1]) {
                return Err(SpectraError::InvalidRequest {
                    what: format!("grid nodes not strictly ascending at index {i}"),
                });
            }
        }
        if !(nodes[0] > 0.0) || nodes[nodes.len() - 1] > 1.0 {
            return Err(SpectraError::InvalidRequest {
                what: "grid nodes must lie in (0, 1]".to_string(),
            });
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(SpectraError::InvalidRequest {
                what: "grid weights must be positive and finite".to_string(),
            });
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(SpectraError::InvalidRequest {
                what: format!("beta = {beta} must be positive"),
            });
        }
        if !(a > -1.0) || !a.is_finite() {
            return Err(SpectraError::InvalidRequest {
                what: format!("a = {a} must exceed -1"),
            });
        }
        Ok(SboGrid {
            nodes,
            weights,
            epsilon,
            beta,
            a,
            mode,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cells(&self) -> usize {
        self.nodes.len()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn mode(&self) -> SboMode {
        self.mode
    }

    /// The same domain with every cell split in half (for refinement
    /// self-checks).  Requires a contiguous cell structure, which every
    /// grid built from boundaries has.
    pub fn refined_double(&self) -> Result<SboGrid, SpectraError> {
        let m = self.nodes.len();
        let mut bounds = Vec::with_capacity(m + 1);
        bounds.push(self.nodes[0] - 0.5 * self.weights[0]);
        for i in 0..m {
            bounds.push(self.nodes[i] + 0.5 * self.weights[i]);
        }
        // Contiguity check: each cell must start where the previous ends.
        for i in 1..m {
            let start = self.nodes[i] - 0.5 * self.weights[i];
            if (start - bounds[i]).abs() > 1e-12 * bounds[i].abs().max(1e-12) {
                return Err(SpectraError::InvalidRequest {
                    what: "refinement requires contiguous cells".to_string(),
                });
            }
        }
        let mut refined = Vec::with_capacity(2 * m + 1);
        for i in 0..m {
            refined.push(bounds[i]);
            refined.push(0.5 * (bounds[i] + bounds[i + 1]));
        }
        refined.push(bounds[m]);
        Self::from_boundaries(&refined, self.beta, self.a, self.mode)
    }

    /// All times at which the Gaussian field must be known to build this
    /// grid's operator: the nodes themselves, plus `θ(node)` in general
    /// mode.  Sorted ascending, deduplicated.
    pub fn required_times(
        &self,
        scaling: Option<&ScalingFunctions>,
    ) -> Result<Vec<f64>, SpectraError> {
        let mut times = self.nodes.clone();
        if self.mode == SboMode::General {
            let sf = scaling.ok_or_else(|| SpectraError::InvalidRequest {
                what: "general mode requires scaling functions".to_string(),
            })?;
            for &t in &self.nodes {
                times.push(sf.theta(t)?);
            }
        }
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        times.dedup();
        Ok(times)
    }
}

/// One realization of the Gaussian field `V(t) = ∫_t^1 db_u/√u`
/// (`Var V(t) = log(1/t)`, independent increments), sampled at a fixed
/// ascending set of times in `(0, 1]`.
///
/// The β-dependence of the kernels enters as an explicit `1/√β` factor at
/// assembly time, so a single field realization couples discretizations
/// across modes and parameters.
#[derive(Clone, Debug)]
pub struct NoisePath {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl NoisePath {
    /// Sample the field at `times` (ascending, in `(0,1]`) by walking the
    /// independent increments downward from `t = 1` where `V(1) = 0`.
    pub fn draw<R: Rng>(rng: &mut R, times: &[f64]) -> Result<NoisePath, SpectraError> {
        for (i, pair) in times.windows(2).enumerate() {
            if !(pair[0] < pair[1]) {
                return Err(SpectraError::InvalidRequest {
                    what: format!("noise times not strictly ascending at index {i}"),
                });
            }
        }
        if times.is_empty() || !(times[0] > 0.0) || times[times.len() - 1] > 1.0 {
            return Err(SpectraError::InvalidRequest {
                what: "noise times must be nonempty and lie in (0, 1]".to_string(),
            });
        }
        let mut values = vec![0.0; times.len()];
        let mut prev_t = 1.0;
        let mut prev_v = 0.0;
        for (i, &t) in times.iter().enumerate().rev() {
            let var = (prev_t / t).ln().max(0.0);
            let z: f64 = rng.sample(StandardNormal);
            let v = prev_v + var.sqrt() * z;
            values[i] = v;
            prev_t = t;
            prev_v = v;
        }
        Ok(NoisePath {
            times: times.to_vec(),
            values,
        })
    }

    /// The zero field (all increments suppressed): the deterministic
    /// control used by grid self-checks.
    pub fn zero() -> NoisePath {
        NoisePath {
            times: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Field value at `t`, which must be one of the sampled times (the
    /// zero path answers everywhere).
    pub fn value(&self, t: f64) -> Result<f64, SpectraError> {
        if self.times.is_empty() {
            return Ok(0.0);
        }
        match self
            .times
            .binary_search_by(|probe| probe.partial_cmp(&t).unwrap())
        {
            Ok(i) => Ok(self.values[i]),
            Err(_) => Err(SpectraError::InvalidRequest {
                what: format!("noise path was not sampled at t = {t:e}"),
            }),
        }
    }

    /// Sorted union of two time sets (for coupling two grids to one field).
    pub fn merge_times(a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(a.len() + b.len());
        out.extend_from_slice(a);
        out.extend_from_slice(b);
        out.sort_by(|x, y| x.partial_cmp(y).unwrap());
        out.dedup();
        out
    }
}

/// A discretized inverse kernel `M_ij = u_i·v_j·1_{i<j}` held in factored,
/// log-stabilized form: `u_i = eu_i·e^{μ_u}`, `v_j = ev_j·e^{μ_v}` with
/// `eu, ev ∈ (0,1]` and `log_scale = μ_u + μ_v`.
#[derive(Clone, Debug)]
pub struct SboOperator {
    eu: Vec<f64>,
    ev: Vec<f64>,
    log_scale: f64,
}

impl SboOperator {
    /// Assemble the operator for one grid and one field realization.
    /// General mode requires the scaling functions; native mode ignores
    /// them.
    pub fn build(
        grid: &SboGrid,
        scaling: Option<&ScalingFunctions>,
        noise: &NoisePath,
    ) -> Result<SboOperator, SpectraError> {
        let m = grid.cells();
        let inv_sqrt_beta = 1.0 / grid.beta.sqrt();
        let mut log_u = Vec::with_capacity(m);
        let mut log_v = Vec::with_capacity(m);
        match grid.mode {
            SboMode::LaguerreNative => {
                for i in 0..m {
                    let s = grid.nodes[i];
                    let w = grid.weights[i];
                    let field = inv_sqrt_beta * noise.value(s)?;
                    let half_log_w = 0.5 * w.ln();
                    log_u.push(0.5 * grid.a * s.ln() + field + half_log_w);
                    log_v.push(-0.5 * (grid.a + 1.0) * s.ln() - field + half_log_w);
                }
            }
            SboMode::General => {
                let sf = scaling.ok_or_else(|| SpectraError::InvalidRequest {
                    what: "general mode requires scaling functions".to_string(),
                })?;
                for i in 0..m {
                    let s = grid.nodes[i];
                    let w = grid.weights[i];
                    let phi = sf.phi(s)?;
                    let theta = sf.theta(s)?;
                    let field = inv_sqrt_beta * noise.value(theta)?;
                    let half_log_w = 0.5 * w.ln();
                    let shape = (0.5 * grid.a + 0.25) * theta.ln() - 0.5 * phi.ln();
                    log_u.push(shape + field + half_log_w);
                    log_v.push(-(0.5 * grid.a + 0.25) * theta.ln() - 0.5 * phi.ln() - field
                        + half_log_w);
                }
            }
        }
        let mu_u = log_u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mu_v = log_v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !mu_u.is_finite() || !mu_v.is_finite() {
            return Err(SpectraError::InvalidRequest {
                what: "kernel factor logs are not finite".to_string(),
            });
        }
        Ok(SboOperator {
            eu: log_u.iter().map(|l| (l - mu_u).exp()).collect(),
            ev: log_v.iter().map(|l| (l - mu_v).exp()).collect(),
            log_scale: mu_u + mu_v,
        })
    }

    /// Number of quadrature nodes.
    pub fn size(&self) -> usize {
        self.eu.len()
    }

    /// Log of the scale factored out of the entries: true entries are
    /// `eu_i·ev_j·exp(log_scale)`.
    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    /// Matrix entry `M_ij` in true units (0 on and below the diagonal).
    /// May overflow to `inf` for extreme noise; tests use it on moderate
    /// realizations.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i >= j || j >= self.eu.len() {
            return 0.0;
        }
        let l = self.eu[i].ln() + self.ev[j].ln() + self.log_scale;
        l.exp()
    }

    /// Squared Hilbert–Schmidt norm `Σ_{i<j} M_ij²` in true units.
    pub fn hs_norm_sq(&self) -> f64 {
        // Suffix sums of ev² give Σ_j>i ev_j² in one scan.
        let m = self.eu.len();
        let mut suffix = 0.0;
        let mut total = 0.0;
        for i in (0..m).rev() {
            total += self.eu[i] * self.eu[i] * suffix;
            suffix += self.ev[i] * self.ev[i];
        }
        total * (2.0 * self.log_scale).exp()
    }

    /// Eigenvalues `Λ = 1/σ²` (ascending) from the `k` largest squared
    /// singular values of this one realization.
    pub fn draw_spectrum(&self, k: usize) -> Result<SpectrumResult, SpectraError> {
        self.draw_spectrum_with(k, &LanczosOptions::default())
    }

    /// As [`draw_spectrum`](Self::draw_spectrum) with explicit solver
    /// options.
    pub fn draw_spectrum_with(
        &self,
        k: usize,
        opts: &LanczosOptions,
    ) -> Result<SpectrumResult, SpectraError> {
        validate_k(k, self.size())?;
        let eig = lanczos::largest_eigs(self, k, opts)?;
        let mut eigenvalues = Vec::with_capacity(k);
        let mut gram = Vec::with_capacity(k);
        for (i, &nu_scaled) in eig.eigenvalues.iter().enumerate() {
            if !(nu_scaled > 0.0) {
                return Err(SpectraError::GramNotPositive {
                    index: i,
                    value: nu_scaled,
                });
            }
            // ν = ν̃·e^{2·log_scale};  Λ = 1/ν, both via logs.
            let log_nu = nu_scaled.ln() + 2.0 * self.log_scale;
            let log_lambda = -log_nu;
            if log_lambda > 709.0 {
                return Err(SpectraError::NonFinite {
                    log_magnitude: log_lambda,
                });
            }
            eigenvalues.push(log_lambda.exp());
            gram.push(if log_nu > 709.0 {
                f64::INFINITY
            } else {
                log_nu.exp()
            });
        }
        // ν descending ⇒ Λ ascending.
        Ok(SpectrumResult {
            eigenvalues,
            rescale_factor: 1.0,
            units: Units::HardEdge,
            meta: SpectrumMeta {
                method: "sbo-monte-carlo".to_string(),
                iterations: eig.applies,
                residuals: eig.residuals,
                warnings: Vec::new(),
                gram_eigenvalues: gram,
            },
        })
    }
}

impl SymOp for SboOperator {
    fn dim(&self) -> usize {
        self.eu.len()
    }

    /// `out = M̃ᵀM̃ x` on the scaled entries (`M̃_ij = eu_i·ev_j·1_{i<j}`):
    /// a suffix scan for `y = M̃x`, then a prefix scan for `M̃ᵀy`.
    fn apply(&self, x: &[f64], out: &mut [f64]) -> Result<(), SpectraError> {
        let m = self.eu.len();
        if x.len() != m || out.len() != m {
            return Err(SpectraError::DimensionMismatch {
                expected: m,
                got: x.len().min(out.len()),
            });
        }
        // y_i = eu_i · Σ_{j>i} ev_j x_j
        let mut suffix = 0.0;
        let mut y = vec![0.0; m];
        for i in (0..m).rev() {
            y[i] = self.eu[i] * suffix;
            suffix += self.ev[i] * x[i];
        }
        // out_j = ev_j · Σ_{i<j} eu_i y_i
        let mut prefix = 0.0;
        for j in 0..m {
            out[j] = self.ev[j] * prefix;
            prefix += self.eu[j] * y[j];
        }
        Ok(())
    }
}

/// Deterministic grid-adequacy check: with the field forced to zero,
/// `Λ₁` on this grid and on the doubled grid must agree to `limit`
/// (relative).  Returns the observed relative change.
pub fn grid_self_check(
    grid: &SboGrid,
    scaling: Option<&ScalingFunctions>,
    limit: f64,
) -> Result<f64, SpectraError> {
    let zero = NoisePath::zero();
    let coarse = SboOperator::build(grid, scaling, &zero)?;
    let fine = SboOperator::build(&grid.refined_double()?, scaling, &zero)?;
    let l1_coarse = coarse.draw_spectrum(1)?.eigenvalues[0];
    let l1_fine = fine.draw_spectrum(1)?.eigenvalues[0];
    let rel_change = (l1_coarse - l1_fine).abs() / l1_fine.abs().max(f64::MIN_POSITIVE);
    if rel_change > limit {
        return Err(SpectraError::GridTooCoarse { rel_change, limit });
    }
    Ok(rel_change)
}

/// One Monte-Carlo draw of the limit spectrum `Λ₁ ≤ … ≤ Λ_k`: validates
/// the grid by the zero-noise refinement check, draws the Gaussian field
/// at the required times, assembles the operator, and inverts the top
/// Gram eigenvalues.
pub fn sbo_spectrum<R: Rng>(
    grid: &SboGrid,
    scaling: Option<&ScalingFunctions>,
    rng: &mut R,
    k: usize,
) -> Result<SpectrumResult, SpectraError> {
    validate_k(k, grid.cells())?;
    grid_self_check(grid, scaling, 0.01)?;
    let times = grid.required_times(scaling)?;
    let noise = NoisePath::draw(rng, &times)?;
    let op = SboOperator::build(grid, scaling, &noise)?;
    op.draw_spectrum(k)
}
