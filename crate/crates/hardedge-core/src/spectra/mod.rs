//! Spectral computations on both sides of the universality statement.
//!
//! For a sampled bidiagonal model `B` the smallest eigenvalues of `BBᵀ`
//! are computed matrix-free through the explicit inverse kernel
//! `K = (B⁻¹)ᵀ` ([`kernel`]): the Gram operator `KᵀK` has eigenvalues
//! `ν_i = 1/λ_i`, so a Krylov iteration for the few *largest* ν recovers
//! the few *smallest* λ without ever forming `BBᵀ` (whose hard-edge
//! eigenvalues are lost to squared conditioning).  A Sturm-bisection
//! solver on the explicit tridiagonal ([`sturm`]) serves as an
//! independent fallback oracle.
//!
//! The limit side is a Monte-Carlo discretization of the hard-edge
//! operator's inverse kernel ([`sbo`]); its eigenvalues `Λ₁ ≤ Λ₂ ≤ …`
//! are the universal law that rescaled matrix eigenvalues converge to.
//!
//! The hard-edge rescaling is `λ ↦ n²λ/(4κ)` ([`rescale_hard_edge`]):
//! under the change of variables `u = θ(t)` the general-potential limit
//! kernel `K` maps to the native hard-edge kernel as
//! `𝖪(θ(s),θ(t))·√(θ′(s)θ′(t)) = 2√κ·K(s,t)` (each point contributes
//! `√(θ′φ/√θ)` = `√(2κJ/(√κ J))` = `√(2√κ)`), so Gram spectra relate by
//! `4κ` and the scaling constant is `1/(4κ)`.  For the linear potential
//! `κ = 1/4` and the factor is exactly `n²`, matching the exact
//! finite-`n` law `n²λ_min ~ Exp(1)` at `β = 2, a = 0`.

pub mod kernel;
pub mod lanczos;
pub mod sbo;
pub mod sturm;

use crate::potential::PotentialError;
use kernel::InverseKernelState;
use lanczos::{LanczosOptions, SymOp};

/// Errors from the spectral solvers.
#[derive(Debug, thiserror::Error)]
pub enum SpectraError {
    /// A stabilized computation produced a value outside f64 range.
    #[error("computation produced a value too large for f64 (log magnitude {log_magnitude:.1})")]
    NonFinite { log_magnitude: f64 },
    /// An input entry violates positivity/finiteness requirements.
    #[error("invalid {kind} entry at index {index}: {value}")]
    InvalidEntry {
        kind: &'static str,
        index: usize,
        value: f64,
    },
    /// Vector length does not match the operator dimension.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    /// A structurally invalid request (k out of range, bad grid, ...).
    #[error("invalid request: {what}")]
    InvalidRequest { what: String },
    /// The Krylov iteration exhausted its budget.
    #[error(
        "Krylov iteration did not converge: {converged} of {requested} eigenvalues \
         at tolerance after {applies} operator applications (worst residual {max_residual:.3e})"
    )]
    NoConvergence {
        requested: usize,
        converged: usize,
        applies: usize,
        max_residual: f64,
    },
    /// The bisection solver refuses matrices beyond its size limit.
    #[error("matrix dimension {n} exceeds the bisection solver limit {max}")]
    TooLarge { n: usize, max: usize },
    /// `rescale_hard_edge` was called on an already-rescaled result.
    #[error("result is already in hard-edge units")]
    DoubleRescale,
    /// Grid refinement moved the smallest eigenvalue by more than allowed.
    #[error(
        "discretization self-check failed: doubling the grid moved Λ₁ by \
         {rel_change:.3e} (limit {limit:.3e})"
    )]
    GridTooCoarse { rel_change: f64, limit: f64 },
    /// A Gram Ritz value came out non-positive (operator numerically
    /// singular at the requested index).
    #[error("Gram eigenvalue {index} is not positive ({value:.3e})")]
    GramNotPositive { index: usize, value: f64 },
    #[error(transparent)]
    Potential(#[from] PotentialError),
}

/// Which scale a [`SpectrumResult`] lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Units {
    /// Raw eigenvalues of `BBᵀ`.
    Matrix,
    /// Hard-edge units: `n²λ/(4κ)`, directly comparable with limit-operator
    /// eigenvalues Λ.
    HardEdge,
}

/// Solver provenance attached to every spectrum.
#[derive(Clone, Debug)]
pub struct SpectrumMeta {
    /// Human-readable solver identifier.
    pub method: String,
    /// Operator applications (Krylov) or shift evaluations (bisection).
    pub iterations: usize,
    /// Final residuals `‖Gu − νu‖/ν` per returned eigenvalue (Krylov only).
    pub residuals: Vec<f64>,
    pub warnings: Vec<String>,
    /// Gram eigenvalues `μ_i` of the n-scaled inverse kernel
    /// (`μ_i = 1/(n²λ_i)`), descending; empty for solvers that do not form
    /// them.
    pub gram_eigenvalues: Vec<f64>,
}

/// Ordered eigenvalues with their scale and provenance.
#[derive(Clone, Debug)]
pub struct SpectrumResult {
    /// Ascending, strictly positive.
    pub eigenvalues: Vec<f64>,
    /// Multiplicative factor already applied (1 for raw matrix units).
    pub rescale_factor: f64,
    pub units: Units,
    pub meta: SpectrumMeta,
}

/// Largest admissible `k` for the eigenvalue front-ends.
pub const MAX_EIGENVALUES: usize = 20;
/// Size limit for the dense-tridiagonal bisection fallback.
pub const STURM_MAX_N: usize = 10_000;

/// The Gram operator `KᵀK` of an inverse kernel, for Krylov iteration.
pub struct GramKernelOp<'a> {
    kernel: &'a InverseKernelState,
    scratch: std::cell::RefCell<Vec<f64>>,
}

impl<'a> GramKernelOp<'a> {
    pub fn new(kernel: &'a InverseKernelState) -> Self {
        GramKernelOp {
            kernel,
            scratch: std::cell::RefCell::new(vec![0.0; kernel.n()]),
        }
    }
}

impl SymOp for GramKernelOp<'_> {
    fn dim(&self) -> usize {
        self.kernel.n()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) -> Result<(), SpectraError> {
        let mut w = self.scratch.borrow_mut();
        self.kernel.apply(v, &mut w)?;
        self.kernel.apply_transpose(&w, out)
    }
}

fn validate_k(k: usize, n: usize) -> Result<(), SpectraError> {
    if k == 0 || k > MAX_EIGENVALUES {
        return Err(SpectraError::InvalidRequest {
            what: format!("k = {k} outside 1..={MAX_EIGENVALUES}"),
        });
    }
    if k > n {
        return Err(SpectraError::InvalidRequest {
            what: format!("requested {k} eigenvalues from dimension {n}"),
        });
    }
    Ok(())
}

/// Infinity norm bound on `T = BBᵀ` from Gershgorin discs.
fn tridiagonal_norm_bound(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let mut hi: f64 = 0.0;
    for i in 0..n {
        let prev = if i > 0 { y[i - 1] } else { 0.0 };
        let diag = x[i] * x[i] + prev * prev;
        let left = if i > 0 { x[i - 1] * y[i - 1] } else { 0.0 };
        let right = if i < n - 1 { x[i] * y[i] } else { 0.0 };
        hi = hi.max(diag + left.abs() + right.abs());
    }
    hi
}

fn conditioning_warning(lambda_min: f64, norm: f64) -> Option<String> {
    if lambda_min < 1e-13 * norm {
        Some(format!(
            "smallest eigenvalue {lambda_min:.3e} is below 1e-13·‖T‖ = {:.3e}; \
             explicitly formed tridiagonals lose relative accuracy at this scale",
            1e-13 * norm
        ))
    } else {
        None
    }
}

/// The `k` smallest eigenvalues of `BBᵀ` by Krylov iteration on the Gram
/// operator of the inverse kernel.  Returns matrix-unit eigenvalues
/// `λ_i = 1/ν_i` (equivalently `1/(n²μ_i)` in terms of the n-scaled kernel)
/// with per-eigenvalue residuals in the metadata.
pub fn smallest_eigs(x: &[f64], y: &[f64], k: usize) -> Result<SpectrumResult, SpectraError> {
    validate_k(k, x.len())?;
    let kernel = InverseKernelState::from_arrays(x, y)?;
    let op = GramKernelOp::new(&kernel);
    let eig = lanczos::largest_eigs(&op, k, &LanczosOptions::default())?;
    let n2 = (x.len() as f64) * (x.len() as f64);
    let mut eigenvalues = Vec::with_capacity(k);
    for (i, &nu) in eig.eigenvalues.iter().enumerate() {
        if !(nu > 0.0) {
            return Err(SpectraError::GramNotPositive {
                index: i,
                value: nu,
            });
        }
        eigenvalues.push(1.0 / nu);
    }
    // ν descending ⇒ λ ascending already.
    let mut warnings = Vec::new();
    if let Some(w) = conditioning_warning(eigenvalues[0], tridiagonal_norm_bound(x, y)) {
        warnings.push(w);
    }
    Ok(SpectrumResult {
        eigenvalues,
        rescale_factor: 1.0,
        units: Units::Matrix,
        meta: SpectrumMeta {
            method: "krylov-inverse-kernel".to_string(),
            iterations: eig.applies,
            residuals: eig.residuals,
            warnings,
            gram_eigenvalues: eig.eigenvalues.iter().map(|&nu| nu / n2).collect(),
        },
    })
}

/// The `k` smallest eigenvalues of `BBᵀ` by Sturm-sequence bisection on the
/// explicitly formed tridiagonal — the fallback oracle for
/// [`smallest_eigs`].
pub fn sturm_eigs(x: &[f64], y: &[f64], k: usize) -> Result<SpectrumResult, SpectraError> {
    let n = x.len();
    if n > STURM_MAX_N {
        return Err(SpectraError::TooLarge {
            n,
            max: STURM_MAX_N,
        });
    }
    validate_k(k, n)?;
    for (i, &v) in x.iter().enumerate() {
        if !(v > 0.0) || !v.is_finite() {
            return Err(SpectraError::InvalidEntry {
                kind: "x",
                index: i,
                value: v,
            });
        }
    }
    for (i, &v) in y.iter().enumerate() {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(SpectraError::InvalidEntry {
                kind: "y",
                index: i,
                value: v,
            });
        }
    }
    let mut diag = Vec::with_capacity(n);
    let mut off = Vec::with_capacity(n.saturating_sub(1));
    for i in 0..n {
        let prev = if i > 0 { y[i - 1] } else { 0.0 };
        diag.push(x[i] * x[i] + prev * prev);
        if i < n - 1 {
            off.push(x[i] * y[i]);
        }
    }
    let (eigenvalues, shifts) = sturm::smallest_by_bisection(&diag, &off, k);
    let mut warnings = Vec::new();
    if let Some(w) = conditioning_warning(eigenvalues[0], tridiagonal_norm_bound(x, y)) {
        warnings.push(w);
    }
    Ok(SpectrumResult {
        eigenvalues,
        rescale_factor: 1.0,
        units: Units::Matrix,
        meta: SpectrumMeta {
            method: "sturm-bisection".to_string(),
            iterations: shifts,
            residuals: Vec::new(),
            warnings,
            gram_eigenvalues: Vec::new(),
        },
    })
}

/// Rescale matrix-unit eigenvalues into hard-edge units: multiply by
/// `n²/(4κ)`, the scale on which the model spectrum converges to the limit
/// operator's.  Refuses to run twice.
pub fn rescale_hard_edge(
    result: &SpectrumResult,
    kappa: f64,
    n: usize,
) -> Result<SpectrumResult, SpectraError> {
    if result.units == Units::HardEdge {
        return Err(SpectraError::DoubleRescale);
    }
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(SpectraError::InvalidRequest {
            what: format!("kappa = {kappa} must be positive"),
        });
    }
    let factor = (n as f64) * (n as f64) / (4.0 * kappa);
    let mut out = result.clone();
    out.eigenvalues.iter_mut().for_each(|v| *v *= factor);
    out.rescale_factor = result.rescale_factor * factor;
    out.units = Units::HardEdge;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo_result() -> SpectrumResult {
        SpectrumResult {
            eigenvalues: vec![0.5, 1.0, 2.0],
            rescale_factor: 1.0,
            units: Units::Matrix,
            meta: SpectrumMeta {
                method: "test".to_string(),
                iterations: 0,
                residuals: Vec::new(),
                warnings: Vec::new(),
                gram_eigenvalues: Vec::new(),
            },
        }
    }

    #[test]
    fn rescale_applies_hard_edge_factor() {
        // Linear potential: κ = 1/4 ⇒ factor n² exactly (the scale on which
        // the exact Laguerre law n²λ_min ~ Exp(1) holds).
        let r = rescale_hard_edge(&demo_result(), 0.25, 10).unwrap();
        assert_eq!(r.rescale_factor, 100.0);
        assert_eq!(r.eigenvalues, vec![50.0, 100.0, 200.0]);
        assert_eq!(r.units, Units::HardEdge);
        // κ = 1/2, n = 10: n²/(4κ) = 50.
        let r2 = rescale_hard_edge(&demo_result(), 0.5, 10).unwrap();
        assert_eq!(r2.rescale_factor, 50.0);
    }

    #[test]
    fn rescale_refuses_to_run_twice() {
        let once = rescale_hard_edge(&demo_result(), 0.25, 10).unwrap();
        assert!(matches!(
            rescale_hard_edge(&once, 0.25, 10),
            Err(SpectraError::DoubleRescale)
        ));
    }

    #[test]
    fn identity_sample_has_unit_spectrum() {
        // X ≡ 1, Y ≡ 0 means B = I: all eigenvalues 1, Gram values 1/n².
        let n = 12;
        let x = vec![1.0; n];
        let y = vec![0.0; n - 1];
        let r = smallest_eigs(&x, &y, 3).unwrap();
        for &l in &r.eigenvalues {
            assert!((l - 1.0).abs() < 1e-10, "identity eigenvalue {l}");
        }
        for &mu in &r.meta.gram_eigenvalues {
            assert!((mu - 1.0 / (n as f64 * n as f64)).abs() < 1e-12);
        }
        let s = sturm_eigs(&x, &y, 3).unwrap();
        for &l in &s.eigenvalues {
            assert!((l - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn solvers_agree_on_a_small_sample() {
        let x = vec![0.9, 1.3, 0.7, 1.1, 0.8, 1.2];
        let y = vec![0.4, 0.9, 0.3, 0.7, 0.5];
        let a = smallest_eigs(&x, &y, 4).unwrap();
        let b = sturm_eigs(&x, &y, 4).unwrap();
        for (la, lb) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!(
                (la - lb).abs() < 1e-8 * lb.max(1e-30),
                "cross-solver mismatch: {la} vs {lb}"
            );
        }
        assert!(a.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        assert!(a.eigenvalues.iter().all(|&l| l > 0.0));
    }

    #[test]
    fn k_validation() {
        let x = vec![1.0; 5];
        let y = vec![0.5; 4];
        assert!(matches!(
            smallest_eigs(&x, &y, 0),
            Err(SpectraError::InvalidRequest { .. })
        ));
        assert!(matches!(
            smallest_eigs(&x, &y, 6),
            Err(SpectraError::InvalidRequest { .. })
        ));
        assert!(matches!(
            sturm_eigs(&vec![1.0; 10_001], &vec![0.0; 10_000], 1),
            Err(SpectraError::TooLarge { .. })
        ));
    }

    #[test]
    fn tiny_eigenvalues_trigger_conditioning_warning() {
        // A sample engineered with one very small diagonal entry: λ_min ≈
        // x_min² is far below ‖T‖.
        let mut x = vec![1.0; 8];
        x[4] = 1e-8;
        let y = vec![0.0; 7];
        let r = sturm_eigs(&x, &y, 1).unwrap();
        assert!(
            !r.meta.warnings.is_empty(),
            "expected a conditioning warning, got none"
        );
    }
}
