//! Potentials and the deterministic scaling functions attached to them.
//!
//! A potential is a polynomial `V(u) = Σ_{m=1}^{d} g_m u^m` acting on the
//! spectrum of `B Bᵀ`.  Admissibility means `x ↦ V(x²)` is uniformly convex
//! on the spectral range; [`ValidatedPotential`] certifies that on a grid and
//! is the only way the rest of the crate accepts coefficients.
//!
//! The equilibrium shape of the bidiagonal model is governed by three
//! deterministic functions of `t ∈ [0, 1]`:
//!
//! * `φ(t)` — the unique positive root of `Σ_m c_m φ^{2m} = t` with
//!   `c_m = m · C(2m, m) · g_m`.  The coarse minimizer of the Gibbs energy
//!   puts both bidiagonal entries at index `k` near `φ(k/n)`.
//! * `J(t) = ∫₀ᵗ du / φ(u)` — the integrated inverse, finite because
//!   `φ(u) ≍ √u` at the origin.
//! * `θ(t) = κ J(t)²` with `κ = J(1)⁻²`, the time change that maps the model
//!   to its hard-edge limit; `θ(1) = 1` by construction and `θ(t) = t` for
//!   the linear potential `V(u) = u/2`.
//!
//! Beyond the leading shape, the first-order (`1/n`) corrections `x₁(t)`,
//! `y₁(t)` are determined by two linear relations in `(a, β)`; they feed the
//! fine starting point used by the Newton minimizer and the MCMC sampler.
//!
//! All quadrature here is composite Gauss–Legendre with a panel-refinement
//! error estimate; results are cached per argument so repeated evaluation
//! (grids, minimizer initialization) stays cheap.

use std::collections::HashMap;
use std::sync::Mutex;

/// Errors from potential validation and scaling-function evaluation.
#[derive(Debug, thiserror::Error)]
pub enum PotentialError {
    /// The coefficient vector was empty.
    #[error("potential has no coefficients")]
    EmptyPotential,
    /// A coefficient was NaN or infinite.
    #[error("potential coefficient {index} is not finite")]
    NonFiniteCoefficient { index: usize },
    /// The grid certificate for uniform convexity of `x ↦ V(x²)` failed.
    #[error(
        "potential is not uniformly convex: min second derivative {margin:.6e} at x = {at:.6e}"
    )]
    NotUniformlyConvex { margin: f64, at: f64 },
    /// Argument outside the closed unit interval.
    #[error("argument t = {t} outside the domain of the scaling functions")]
    OutOfDomain { t: f64 },
    /// Panel refinement disagreed beyond tolerance.
    #[error("quadrature error estimate {estimate:.3e} exceeds tolerance {tolerance:.3e}")]
    QuadratureFailure { estimate: f64, tolerance: f64 },
    /// The bracketing search for a root did not terminate.
    #[error("failed to bracket the root of the scaling equation at t = {t}")]
    BracketFailure { t: f64 },
}

/// Central binomial coefficient `C(2m, m)` as a float (exact for all degrees
/// used in practice).
fn central_binomial(m: usize) -> f64 {
    let mut b = 1.0;
    for i in 1..=m {
        b *= (m + i) as f64 / i as f64;
    }
    b
}

/// A polynomial potential whose composition `x ↦ V(x²)` has been certified
/// uniformly convex on `[0, range_hi]`, a range covering the spectrum of the
/// model at every admissible size.
#[derive(Clone, Debug)]
pub struct ValidatedPotential {
    /// `g[m-1]` is the coefficient of `u^m`.
    g: Vec<f64>,
    /// `c[m-1] = m · C(2m, m) · g_m`, the coefficients of the scaling
    /// equation `s(φ) = Σ c_m φ^{2m}`.
    c: Vec<f64>,
    /// Certified lower bound for `(V(x²))″` on `[0, range_hi]`.
    convexity_margin: f64,
    /// Upper end of the certified range.
    range_hi: f64,
}

const CONVEXITY_GRID: usize = 4097;

impl ValidatedPotential {
    /// Validate a coefficient vector.
    ///
    /// The certified range is chosen automatically as `2(φ(1) + 1)`, which
    /// dominates the spectral support `√λ ≤ 2φ(1)` of the model.  Two grid
    /// certificates are checked on it: positivity of `(V(x²))″` (uniform
    /// convexity) and strict monotonicity of the scaling equation `s(φ)`
    /// (which makes every later bisection globally safe).
    pub fn new(g: &[f64]) -> Result<Self, PotentialError> {
        if g.is_empty() {
            return Err(PotentialError::EmptyPotential);
        }
        for (i, &gi) in g.iter().enumerate() {
            if !gi.is_finite() {
                return Err(PotentialError::NonFiniteCoefficient { index: i });
            }
        }
        let c: Vec<f64> = g
            .iter()
            .enumerate()
            .map(|(i, &gi)| {
                let m = i + 1;
                m as f64 * central_binomial(m) * gi
            })
            .collect();
        if !(c[0] > 0.0) {
            // c₁ = 2 g₁ is the convexity of V(x²) at the origin.
            return Err(PotentialError::NotUniformlyConvex {
                margin: c[0],
                at: 0.0,
            });
        }

        // Provisional φ(1): first crossing of s(φ) = 1 by doubling.
        let eval_s = |phi: f64| -> f64 {
            let p2 = phi * phi;
            let mut s = 0.0;
            for &cm in c.iter().rev() {
                s = s * p2 + cm;
            }
            s * p2
        };
        let mut hi = (1.0 / c[0]).sqrt();
        let mut doublings = 0;
        while eval_s(hi) < 1.0 {
            hi *= 2.0;
            doublings += 1;
            if doublings > 200 || !hi.is_finite() {
                // s is bounded above, so the leading behaviour of V(x²) is
                // concave: not uniformly convex on any admissible range.
                return Err(PotentialError::NotUniformlyConvex {
                    margin: f64::NEG_INFINITY,
                    at: f64::INFINITY,
                });
            }
        }
        let mut lo = 0.0;
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if eval_s(mid) < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let phi1 = 0.5 * (lo + hi);
        let range_hi = 2.0 * (phi1 + 1.0);

        // Certificate 1: (V(x²))″ = Σ 2m(2m-1) g_m x^{2m-2} > 0 on the range.
        let mut margin = f64::INFINITY;
        let mut at = 0.0;
        for i in 0..CONVEXITY_GRID {
            let x = range_hi * i as f64 / (CONVEXITY_GRID - 1) as f64;
            let x2 = x * x;
            let mut w = 0.0;
            for (j, &gj) in g.iter().enumerate().rev() {
                let m = (j + 1) as f64;
                w = w * x2 + 2.0 * m * (2.0 * m - 1.0) * gj;
            }
            if w < margin {
                margin = w;
                at = x;
            }
        }
        if !(margin > 0.0) {
            return Err(PotentialError::NotUniformlyConvex { margin, at });
        }

        // Certificate 2: s′(φ) > 0 up to (just past) φ(1).
        for i in 0..CONVEXITY_GRID {
            let phi = 1.001 * phi1 * i as f64 / (CONVEXITY_GRID - 1) as f64;
            let p2 = phi * phi;
            let mut ds = 0.0;
            for (j, &cj) in c.iter().enumerate().rev() {
                let m = (j + 1) as f64;
                ds = ds * p2 + 2.0 * m * cj;
            }
            // s′(φ) = φ · Σ 2m c_m φ^{2m-2}; positivity of the bracket is the
            // meaningful statement (the φ factor vanishes at 0 trivially).
            if i > 0 && !(ds > 0.0) {
                return Err(PotentialError::NotUniformlyConvex {
                    margin: ds,
                    at: phi,
                });
            }
        }

        Ok(ValidatedPotential {
            g: g.to_vec(),
            c,
            convexity_margin: margin,
            range_hi,
        })
    }

    /// Polynomial degree `d`.
    pub fn degree(&self) -> usize {
        self.g.len()
    }

    /// Coefficient `g_m` (1-based `m`).
    pub fn coeff(&self, m: usize) -> f64 {
        self.g[m - 1]
    }

    /// All coefficients, `g[m-1] = g_m`.
    pub fn coeffs(&self) -> &[f64] {
        &self.g
    }

    /// Certified lower bound of `(V(x²))″` on the validated range.
    pub fn convexity_margin(&self) -> f64 {
        self.convexity_margin
    }

    /// Upper end of the validated range (in units of `x`, not `x²`).
    pub fn range_hi(&self) -> f64 {
        self.range_hi
    }

    /// `V(u)`.
    pub fn eval(&self, u: f64) -> f64 {
        let mut v = 0.0;
        for &gm in self.g.iter().rev() {
            v = v * u + gm;
        }
        v * u
    }

    /// `V′(u)`.
    pub fn eval_deriv(&self, u: f64) -> f64 {
        let mut v = 0.0;
        for (j, &gm) in self.g.iter().enumerate().rev() {
            v = v * u + (j + 1) as f64 * gm;
        }
        v
    }

    /// Whether this is exactly the linear potential `V(u) = u/2` for which
    /// the model factorizes into independent entries.
    pub fn is_standard_linear(&self) -> bool {
        self.g.len() == 1 && self.g[0] == 0.5
    }

    /// `s(φ) = Σ_m c_m φ^{2m}`, the scaling equation's left-hand side.
    pub(crate) fn scaling_s(&self, phi: f64) -> f64 {
        let p2 = phi * phi;
        let mut s = 0.0;
        for &cm in self.c.iter().rev() {
            s = s * p2 + cm;
        }
        s * p2
    }

    /// `s′(φ)`.
    pub(crate) fn scaling_s_deriv(&self, phi: f64) -> f64 {
        let p2 = phi * phi;
        let mut s = 0.0;
        for (j, &cm) in self.c.iter().enumerate().rev() {
            s = s * p2 + 2.0 * (j + 1) as f64 * cm;
        }
        s * phi
    }

    /// `s″(φ)`.
    pub(crate) fn scaling_s_deriv2(&self, phi: f64) -> f64 {
        let p2 = phi * phi;
        let mut s = 0.0;
        for (j, &cm) in self.c.iter().enumerate().rev() {
            let tm = 2.0 * (j + 1) as f64;
            s = s * p2 + tm * (tm - 1.0) * cm;
        }
        s
    }

    /// Scaling-series coefficient `c_m = m · C(2m, m) · g_m` (1-based `m`).
    pub(crate) fn scaling_coeff(&self, m: usize) -> f64 {
        self.c[m - 1]
    }
}

/// First-order corrections to the coarse profile at a fixed time `t`:
/// the fine minimizer sits at `x_k ≈ φ(k/n) + x1(k/n)/n` and
/// `y_k ≈ φ(k/n) + y1(k/n)/n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FineCorrection {
    pub x1: f64,
    pub y1: f64,
}

/// Number of geometric panels used for the full integral `J(t)`.
const J_PANELS: u32 = 12;
/// Relative tolerance demanded of the panel-refinement error estimate.
const QUAD_RTOL: f64 = 1e-10;

/// The deterministic scaling functions `φ`, `J`, `θ` (and `κ`) of one
/// validated potential, with per-argument caching.
pub struct ScalingFunctions {
    potential: ValidatedPotential,
    kappa: f64,
    gl_nodes: Vec<f64>,
    gl_weights: Vec<f64>,
    phi_cache: Mutex<HashMap<u64, f64>>,
    j_cache: Mutex<HashMap<u64, f64>>,
}

impl ScalingFunctions {
    /// Build the scaling functions; computes `κ = J(1)⁻²` up front.
    pub fn new(potential: ValidatedPotential) -> Result<Self, PotentialError> {
        let (gl_nodes, gl_weights) = gauss_legendre(64);
        let mut sf = ScalingFunctions {
            potential,
            kappa: f64::NAN,
            gl_nodes,
            gl_weights,
            phi_cache: Mutex::new(HashMap::new()),
            j_cache: Mutex::new(HashMap::new()),
        };
        let j1 = sf.integral_inv_phi(1.0)?;
        sf.kappa = 1.0 / (j1 * j1);
        Ok(sf)
    }

    pub fn potential(&self) -> &ValidatedPotential {
        &self.potential
    }

    /// The hard-edge coupling constant `κ = J(1)⁻²`; `1/4` for `V(u) = u/2`.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    fn check_domain(t: f64) -> Result<(), PotentialError> {
        if !(0.0..=1.0).contains(&t) || t.is_nan() {
            Err(PotentialError::OutOfDomain { t })
        } else {
            Ok(())
        }
    }

    /// `φ(t)`: the unique positive root of `s(φ) = t` (and `φ(0) = 0`).
    pub fn phi(&self, t: f64) -> Result<f64, PotentialError> {
        Self::check_domain(t)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        if let Some(&v) = self.phi_cache.lock().unwrap().get(&t.to_bits()) {
            return Ok(v);
        }
        let pot = &self.potential;
        // Doubling bracket.  s is certified strictly increasing, so the
        // first crossing is the root.
        let mut hi = (t / pot.scaling_coeff(1)).sqrt();
        let mut doublings = 0;
        while pot.scaling_s(hi) < t {
            hi *= 2.0;
            doublings += 1;
            if doublings > 2000 || !hi.is_finite() {
                return Err(PotentialError::BracketFailure { t });
            }
        }
        let mut lo = 0.0;
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if pot.scaling_s(mid) < t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // Newton polish (kept inside the bracket) for full precision even
        // when the initial bracket was much wider than the root.
        let mut phi = 0.5 * (lo + hi);
        for _ in 0..3 {
            let ds = pot.scaling_s_deriv(phi);
            if ds <= 0.0 {
                break;
            }
            let next = phi - (pot.scaling_s(phi) - t) / ds;
            if next <= lo || next >= hi || !next.is_finite() {
                break;
            }
            phi = next;
        }
        self.phi_cache.lock().unwrap().insert(t.to_bits(), phi);
        Ok(phi)
    }

    /// `(φ′(t), φ″(t))` from the implicit equation:
    /// `φ′ = 1/s′(φ)` and `φ″ = -s″(φ)·φ′³`.  Undefined at `t = 0`.
    pub fn phi_derivs(&self, t: f64) -> Result<(f64, f64), PotentialError> {
        Self::check_domain(t)?;
        if t == 0.0 {
            return Err(PotentialError::OutOfDomain { t });
        }
        let phi = self.phi(t)?;
        let ds = self.potential.scaling_s_deriv(phi);
        let d2s = self.potential.scaling_s_deriv2(phi);
        let d1 = 1.0 / ds;
        Ok((d1, -d2s * d1 * d1 * d1))
    }

    /// Gauss–Legendre quadrature of `f` over `[a, b]` (one panel).
    fn gl_panel<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: &F) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut s = 0.0;
        for (x, w) in self.gl_nodes.iter().zip(&self.gl_weights) {
            s += w * f(mid + half * x);
        }
        s * half
    }

    /// `∫_a^b f` with one panel, plus a split-in-two refinement; returns the
    /// refined value and the disagreement as an error estimate.
    fn gl_panel_refined<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: &F) -> (f64, f64) {
        let coarse = self.gl_panel(a, b, f);
        let mid = 0.5 * (a + b);
        let fine = self.gl_panel(a, mid, f) + self.gl_panel(mid, b, f);
        (fine, (fine - coarse).abs())
    }

    /// The integrand of `J` after the substitution `u = v²`:
    /// `J(t) = ∫₀^{√t} 2v/φ(v²) dv`, whose integrand extends continuously to
    /// `2√c₁` at `v = 0`.
    fn j_integrand(&self, v: f64) -> f64 {
        if v == 0.0 {
            return 2.0 * self.potential.scaling_coeff(1).sqrt();
        }
        // Inside quadrature the argument stays within [0, 1] by construction.
        2.0 * v / self.phi(v * v).expect("quadrature node inside domain")
    }

    /// `J(t) = ∫₀ᵗ du/φ(u)`, evaluated as a composite Gauss–Legendre
    /// quadrature on geometric panels (the substitution `u = v²` removes the
    /// square-root singularity entirely).
    pub fn integral_inv_phi(&self, t: f64) -> Result<f64, PotentialError> {
        Self::check_domain(t)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        if let Some(&v) = self.j_cache.lock().unwrap().get(&t.to_bits()) {
            return Ok(v);
        }
        let top = t.sqrt();
        let f = |v: f64| self.j_integrand(v);
        let mut total = 0.0;
        let mut err = 0.0;
        let mut right = top;
        for p in 0..J_PANELS {
            let left = if p + 1 == J_PANELS {
                0.0
            } else {
                top * 0.5_f64.powi((p + 1) as i32)
            };
            let (v, e) = self.gl_panel_refined(left, right, &f);
            total += v;
            err += e;
            right = left;
        }
        let tol = QUAD_RTOL * total.abs().max(1.0);
        if err > tol {
            return Err(PotentialError::QuadratureFailure {
                estimate: err,
                tolerance: tol,
            });
        }
        self.j_cache.lock().unwrap().insert(t.to_bits(), total);
        Ok(total)
    }

    /// `θ(t) = κ · J(t)²`, the hard-edge time change; `θ(1) = 1` exactly.
    pub fn theta(&self, t: f64) -> Result<f64, PotentialError> {
        let j = self.integral_inv_phi(t)?;
        Ok(self.kappa * j * j)
    }

    /// `θ′(t) = 2 κ J(t) / φ(t)`.  Undefined at `t = 0` (0/0); the limit
    /// `4 κ c₁` exists but is never needed.
    pub fn theta_deriv(&self, t: f64) -> Result<f64, PotentialError> {
        Self::check_domain(t)?;
        if t == 0.0 {
            return Err(PotentialError::OutOfDomain { t });
        }
        let j = self.integral_inv_phi(t)?;
        let phi = self.phi(t)?;
        Ok(2.0 * self.kappa * j / phi)
    }

    /// `φ` and `θ` on a strictly increasing grid in `(0, 1]`, sharing one
    /// incremental quadrature (one refined panel per consecutive pair) so a
    /// grid of thousands of nodes costs the same as a handful of full
    /// evaluations.
    pub fn grid(&self, ts: &[f64]) -> Result<GridScaling, PotentialError> {
        let mut phi = Vec::with_capacity(ts.len());
        let mut theta = Vec::with_capacity(ts.len());
        let mut prev_t: Option<f64> = None;
        let mut j_acc = 0.0;
        let f = |v: f64| self.j_integrand(v);
        for &t in ts {
            Self::check_domain(t)?;
            if let Some(p) = prev_t {
                if t <= p {
                    return Err(PotentialError::OutOfDomain { t });
                }
            }
            let j = match prev_t {
                None => {
                    j_acc = self.integral_inv_phi(t)?;
                    j_acc
                }
                Some(p) => {
                    let (dv, de) = self.gl_panel_refined(p.sqrt(), t.sqrt(), &f);
                    let tol = QUAD_RTOL * j_acc.max(1.0);
                    if de > tol {
                        return Err(PotentialError::QuadratureFailure {
                            estimate: de,
                            tolerance: tol,
                        });
                    }
                    j_acc += dv;
                    j_acc
                }
            };
            self.j_cache.lock().unwrap().insert(t.to_bits(), j);
            phi.push(self.phi(t)?);
            theta.push(self.kappa * j * j);
            prev_t = Some(t);
        }
        Ok(GridScaling { phi, theta })
    }

    /// First-order profile corrections at time `t` for edge exponent `a` and
    /// inverse temperature `β`, from the pair of linear relations
    /// `x1 - y1 = (a + 1/2)/J(t) - φ′(t)/2` and `x1 + y1 = (a - 2/β)·φ′(t)`.
    pub fn fine_correction(
        &self,
        t: f64,
        a: f64,
        beta: f64,
    ) -> Result<FineCorrection, PotentialError> {
        let (dphi, _) = self.phi_derivs(t)?;
        let j = self.integral_inv_phi(t)?;
        let diff = (a + 0.5) / j - 0.5 * dphi;
        let sum = (a - 2.0 / beta) * dphi;
        Ok(FineCorrection {
            x1: 0.5 * (sum + diff),
            y1: 0.5 * (sum - diff),
        })
    }

    /// The fine starting profile `x̂_k = φ(k/n) + x1(k/n)/n` (resp. `ŷ`),
    /// floored at `φ(k/n)/2` so the point stays safely inside the positive
    /// orthant even where the `1/n` correction is comparable to the profile
    /// itself (smallest indices, `a` near `-1`).
    pub fn fine_profile(
        &self,
        n: usize,
        a: f64,
        beta: f64,
    ) -> Result<(Vec<f64>, Vec<f64>), PotentialError> {
        assert!(n >= 1, "profile needs at least one entry");
        let ts: Vec<f64> = (1..=n).map(|k| k as f64 / n as f64).collect();
        let grid = self.grid(&ts)?;
        let nf = n as f64;
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n - 1);
        for (k, &t) in ts.iter().enumerate() {
            let fc = self.fine_correction(t, a, beta)?;
            let p = grid.phi[k];
            let floor = 0.5 * p;
            x.push((p + fc.x1 / nf).max(floor));
            if k + 1 < n {
                y.push((p + fc.y1 / nf).max(floor));
            }
        }
        Ok((x, y))
    }
}

/// `φ` and `θ` evaluated on a shared grid (see [`ScalingFunctions::grid`]).
#[derive(Clone, Debug)]
pub struct GridScaling {
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` via Newton iteration on the
/// Legendre recurrence.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Initial guess (Chebyshev-like).
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre P_n(x) and P_{n-1}(x) by upward recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 1..n {
                let kf = k as f64;
                let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn linear() -> ScalingFunctions {
        ScalingFunctions::new(ValidatedPotential::new(&[0.5]).unwrap()).unwrap()
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        // Degree-15 polynomial is exact for 8 nodes.
        let integral: f64 = x
            .iter()
            .zip(&w)
            .map(|(xi, wi)| wi * (xi.powi(14) + 3.0 * xi.powi(5) - xi.powi(2)))
            .sum();
        let exact = 2.0 / 15.0 - 2.0 / 3.0;
        assert_relative_eq!(integral, exact, max_relative = 1e-13);
        let total: f64 = w.iter().sum();
        assert_relative_eq!(total, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn validation_accepts_the_documented_example() {
        // (V(x²))″ = 1 + 1.5 x² for g = [0.5, 0.125]: margin 1 at x = 0.
        let p = ValidatedPotential::new(&[0.5, 0.125]).unwrap();
        assert!(p.convexity_margin() >= 1.0 - 1e-12);
        assert_eq!(p.degree(), 2);
    }

    #[test]
    fn validation_rejects_bad_potentials() {
        assert!(matches!(
            ValidatedPotential::new(&[]),
            Err(PotentialError::EmptyPotential)
        ));
        assert!(matches!(
            ValidatedPotential::new(&[-1.0]),
            Err(PotentialError::NotUniformlyConvex { .. })
        ));
        // 1 - 2.4 x² goes negative well inside the certified range.
        assert!(matches!(
            ValidatedPotential::new(&[0.5, -0.1]),
            Err(PotentialError::NotUniformlyConvex { .. })
        ));
        assert!(matches!(
            ValidatedPotential::new(&[f64::NAN]),
            Err(PotentialError::NonFiniteCoefficient { index: 0 })
        ));
    }

    #[test]
    fn linear_potential_has_closed_form_scaling_functions() {
        let sf = linear();
        assert_relative_eq!(sf.kappa(), 0.25, max_relative = 1e-12);
        for &t in &[1e-6, 1e-3, 0.1, 0.25, 0.5, 0.9, 1.0] {
            assert_relative_eq!(sf.phi(t).unwrap(), t.sqrt(), max_relative = 1e-12);
            assert_relative_eq!(
                sf.integral_inv_phi(t).unwrap(),
                2.0 * t.sqrt(),
                max_relative = 1e-11
            );
            assert_relative_eq!(sf.theta(t).unwrap(), t, max_relative = 1e-11);
            assert_relative_eq!(sf.theta_deriv(t).unwrap(), 1.0, max_relative = 1e-11);
        }
        let (d1, d2) = sf.phi_derivs(0.25).unwrap();
        assert_relative_eq!(d1, 1.0, max_relative = 1e-12);
        assert_relative_eq!(d2, -2.0, max_relative = 1e-12);
    }

    #[test]
    fn fine_corrections_match_hand_computed_values() {
        let sf = linear();
        // a = 0, β = 2 at t = 1/4: x1 = y1 = -1/2.
        let fc = sf.fine_correction(0.25, 0.0, 2.0).unwrap();
        assert_relative_eq!(fc.x1, -0.5, max_relative = 1e-10);
        assert_relative_eq!(fc.y1, -0.5, max_relative = 1e-10);
        // a = 1, β = 1 at t = 1: x1 = 0, y1 = -1/2.
        let fc = sf.fine_correction(1.0, 1.0, 1.0).unwrap();
        assert!(fc.x1.abs() < 1e-10);
        assert_relative_eq!(fc.y1, -0.5, max_relative = 1e-10);
        // Linear potential closed form x1(t) = (a - 1/β) / (2√t).
        for &(a, beta, t) in &[(2.0, 2.0, 0.7), (-0.5, 4.0, 0.3)] {
            let fc = sf.fine_correction(t, a, beta).unwrap();
            assert_relative_eq!(
                fc.x1,
                (a - 1.0 / beta) / (2.0 * t.sqrt()),
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn fine_profile_floors_at_half_phi() {
        let sf = linear();
        // a near -1 at β = 1 drives the raw correction below φ/2 at small k.
        let (x, y) = sf.fine_profile(50, -0.9, 1.0).unwrap();
        assert_eq!(x.len(), 50);
        assert_eq!(y.len(), 49);
        let phi1 = (1.0 / 50.0_f64).sqrt();
        assert!(x[0] >= 0.5 * phi1 - 1e-15);
        assert!(x.iter().all(|&v| v > 0.0));
        assert!(y.iter().all(|&v| v > 0.0));
        // Raw value without the floor would have been negative or tiny.
        let fc = sf.fine_correction(1.0 / 50.0, -0.9, 1.0).unwrap();
        assert!(phi1 + fc.x1 / 50.0 < 0.5 * phi1);
    }

    #[test]
    fn grid_matches_pointwise_evaluation() {
        let pot = ValidatedPotential::new(&[0.5, 0.125, 0.02]).unwrap();
        let sf = ScalingFunctions::new(pot).unwrap();
        let ts: Vec<f64> = (1..=200).map(|k| k as f64 / 200.0).collect();
        let grid = sf.grid(&ts).unwrap();
        for (k, &t) in ts.iter().enumerate().step_by(17) {
            let sf2 = ScalingFunctions::new(ValidatedPotential::new(&[0.5, 0.125, 0.02]).unwrap())
                .unwrap();
            assert_relative_eq!(grid.phi[k], sf2.phi(t).unwrap(), max_relative = 1e-12);
            assert_relative_eq!(grid.theta[k], sf2.theta(t).unwrap(), max_relative = 1e-9);
        }
        assert_relative_eq!(grid.theta[199], 1.0, max_relative = 1e-12);
    }

    #[test]
    fn theta_is_pinned_to_one_at_the_right_edge() {
        for g in [vec![0.5], vec![0.3, 0.05], vec![0.5, 0.125, 0.02, 0.004]] {
            let sf = ScalingFunctions::new(ValidatedPotential::new(&g).unwrap()).unwrap();
            assert_relative_eq!(sf.theta(1.0).unwrap(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn domain_errors_are_reported() {
        let sf = linear();
        assert!(matches!(
            sf.phi(-0.1),
            Err(PotentialError::OutOfDomain { .. })
        ));
        assert!(matches!(
            sf.phi(1.5),
            Err(PotentialError::OutOfDomain { .. })
        ));
        assert!(matches!(
            sf.phi_derivs(0.0),
            Err(PotentialError::OutOfDomain { .. })
        ));
        assert!(matches!(
            sf.theta_deriv(0.0),
            Err(PotentialError::OutOfDomain { .. })
        ));
        assert_eq!(sf.phi(0.0).unwrap(), 0.0);
        assert_eq!(sf.theta(0.0).unwrap(), 0.0);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn valid_coeffs() -> impl Strategy<Value = Vec<f64>> {
            // Nonnegative higher coefficients with positive g₁ are always
            // admissible; mix in degrees 1 through 4.
            (
                0.05_f64..2.0,
                prop::collection::vec(0.0_f64..0.5, 0..3),
            )
                .prop_map(|(g1, rest)| {
                    let mut g = vec![g1];
                    g.extend(rest);
                    g
                })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn phi_root_residual_and_monotonicity(g in valid_coeffs(), seed in 1_u64..1000) {
                let pot = ValidatedPotential::new(&g).unwrap();
                let sf = ScalingFunctions::new(pot).unwrap();
                let mut prev = 0.0;
                for i in 1..=40_u64 {
                    // Pseudo-random-ish but ordered grid in (0, 1].
                    let t = (i as f64 + (seed % 7) as f64 / 8.0).min(40.0) / 40.0;
                    let phi = sf.phi(t).unwrap();
                    let resid = (sf.potential().scaling_s(phi) - t).abs();
                    prop_assert!(resid <= 1e-10 * t.max(1.0), "residual {resid} at t={t}");
                    prop_assert!(phi > prev, "φ not increasing at t={t}");
                    prev = phi;
                }
            }

            #[test]
            fn phi_derivative_matches_finite_differences(g in valid_coeffs()) {
                let pot = ValidatedPotential::new(&g).unwrap();
                let sf = ScalingFunctions::new(pot).unwrap();
                for &t in &[0.2_f64, 0.5, 0.8] {
                    let h = 1e-6;
                    let fd = (sf.phi(t + h).unwrap() - sf.phi(t - h).unwrap()) / (2.0 * h);
                    let (d1, d2) = sf.phi_derivs(t).unwrap();
                    prop_assert!((fd - d1).abs() <= 1e-6 * d1.abs().max(1e-3));
                    let fd2 = (sf.phi(t + h).unwrap() - 2.0 * sf.phi(t).unwrap()
                        + sf.phi(t - h).unwrap())
                        / (h * h);
                    prop_assert!((fd2 - d2).abs() <= 1e-3 * d2.abs().max(1.0));
                }
            }

            #[test]
            fn small_time_asymptotics_bracket_phi(g in valid_coeffs()) {
                let pot = ValidatedPotential::new(&g).unwrap();
                let c1 = 2.0 * g[0];
                // First-order theory: φ/√(t/c₁) - 1 ≈ -c₂t/(2c₁²); envelope
                // sums the available orders with a 10× safety factor.
                let envelope: f64 = 10.0
                    * (1.0
                        + g.iter().enumerate().skip(1).map(|(j, &gj)| {
                            let m = j + 1;
                            let cm = m as f64 * super::super::central_binomial(m) * gj;
                            cm / c1.powi(m as i32)
                        }).sum::<f64>());
                let sf = ScalingFunctions::new(pot).unwrap();
                for &t in &[1e-6_f64, 1e-4, 1e-2] {
                    let phi = sf.phi(t).unwrap();
                    let leading = (t / c1).sqrt();
                    prop_assert!(
                        (phi / leading - 1.0).abs() <= envelope * t,
                        "φ({t}) = {phi} vs leading {leading} (envelope {envelope})"
                    );
                }
            }

            #[test]
            fn theta_is_a_time_change(g in valid_coeffs()) {
                let pot = ValidatedPotential::new(&g).unwrap();
                let sf = ScalingFunctions::new(pot).unwrap();
                let mut prev = 0.0;
                for i in 1..=20 {
                    let t = i as f64 / 20.0;
                    let th = sf.theta(t).unwrap();
                    prop_assert!(th > prev);
                    prev = th;
                }
                prop_assert!((prev - 1.0).abs() <= 1e-12);
            }
        }
    }
}
