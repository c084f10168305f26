//! Deterministic oracle suite behind `hardedge selftest`.
//!
//! Every oracle pins a piece of the pipeline to an independently derivable
//! value — closed forms, exact enumerations, dual numerical routes — and
//! runs in milliseconds with no randomness beyond fixed seeds.  A failure
//! here means the build's numerics are wrong (exit 2), as opposed to a
//! statistical verdict going the other way (exit 3).

use std::io::Write;

use hardedge_core::hamiltonian::circulant::{alternating_eigenvalue, circulant_hessian};
use hardedge_core::hamiltonian::lattice::{coefficients, enumerate_coefficients, grad_x_via_paths};
use hardedge_core::hamiltonian::{gradient, minimize, MinimizeOptions, ModelParams};
use hardedge_core::potential::{ScalingFunctions, ValidatedPotential};
use hardedge_core::sampler::sample_exact;
use hardedge_core::spectra::kernel::{kernel_apply, InverseKernelState};
use hardedge_core::spectra::sbo::{grid_self_check, NoisePath, SboGrid, SboMode, SboOperator};
use hardedge_core::spectra::{smallest_eigs, sturm_eigs};

use crate::experiments::HarnessError;

/// Frozen κ for the quartic test potential g = [0.5, 0.125], computed by
/// two independent quadrature routes during development.
const QUARTIC_KAPPA: f64 = 0.190_032_397_181_360_78;

/// `j²/4` for the first zero `j ≈ 2.404825557695773` of the Bessel
/// function J₀ — the smallest zero-noise limit eigenvalue at `a = 0`.
const BESSEL_LIMIT_1: f64 = 1.445_796_490_736_696;

type Oracle = (&'static str, fn() -> Result<String, String>);

fn scaling_for(g: &[f64]) -> Result<ScalingFunctions, String> {
    let pot = ValidatedPotential::new(g).map_err(|e| e.to_string())?;
    ScalingFunctions::new(pot).map_err(|e| e.to_string())
}

fn linear_scaling_closed_form() -> Result<String, String> {
    let sf = scaling_for(&[0.5])?;
    if (sf.kappa() - 0.25).abs() > 1e-12 {
        return Err(format!("kappa = {} but the linear closed form is 1/4", sf.kappa()));
    }
    let mut worst = 0.0f64;
    for j in 0..=100 {
        let t = j as f64 / 100.0;
        let phi = sf.phi(t).map_err(|e| e.to_string())?;
        let theta = sf.theta(t).map_err(|e| e.to_string())?;
        worst = worst.max((phi - t.sqrt()).abs()).max((theta - t).abs());
    }
    if worst > 1e-10 {
        return Err(format!("max |phi - sqrt(t)| or |theta - t| = {worst:.3e} > 1e-10"));
    }
    Ok(format!("101-point grid, max deviation {worst:.3e}"))
}

fn quartic_scaling_frozen() -> Result<String, String> {
    let sf = scaling_for(&[0.5, 0.125])?;
    let dk = (sf.kappa() - QUARTIC_KAPPA).abs();
    if dk > 1e-9 {
        return Err(format!("kappa = {:.17} drifted {dk:.3e} from frozen value", sf.kappa()));
    }
    let t1 = sf.theta(1.0).map_err(|e| e.to_string())?;
    if (t1 - 1.0).abs() > 1e-12 {
        return Err(format!("theta(1) = {t1} must be exactly 1"));
    }
    Ok(format!("kappa within {dk:.1e} of frozen value, theta(1) - 1 = {:.1e}", t1 - 1.0))
}

fn lattice_enumeration_matches_closed_form() -> Result<String, String> {
    for m in 1..=5 {
        let closed = coefficients(m).map_err(|e| e.to_string())?;
        let brute = enumerate_coefficients(m).map_err(|e| e.to_string())?;
        if closed != brute {
            return Err(format!("order {m}: closed {closed:?} != enumerated {brute:?}"));
        }
    }
    Ok("orders 1..=5 agree with brute-force path enumeration".to_string())
}

fn path_gradient_matches_matrix_calculus() -> Result<String, String> {
    let n = 12;
    let params = ModelParams::new(&[0.5, 0.125], 2.0, 0.5, n).map_err(|e| e.to_string())?;
    // A deterministic, deliberately non-flat positive point.
    let x: Vec<f64> =
        (1..=n).map(|i| (i as f64 / n as f64).sqrt() * (1.0 + 0.05 * (i as f64).sin())).collect();
    let y: Vec<f64> =
        (1..n).map(|i| (i as f64 / n as f64).sqrt() * (1.0 - 0.04 * (i as f64).cos())).collect();
    let (gx, _) = gradient(&params, &x, &y).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for i in 3..=9 {
        let path = grad_x_via_paths(params.potential(), &x, &y, i).map_err(|e| e.to_string())?;
        // The path route covers the trace part only; add back the log term.
        let analytic = gx[i - 1] + params.log_coeff_x(i) / x[i - 1];
        let scale = analytic.abs().max(1.0);
        worst = worst.max((path - analytic).abs() / scale);
    }
    if worst > 1e-12 {
        return Err(format!("path vs matrix-calculus gradient deviates {worst:.3e} > 1e-12"));
    }
    Ok(format!("bulk sites 3..=9 at n = 12, max relative deviation {worst:.3e}"))
}

fn newton_matches_linear_closed_form() -> Result<String, String> {
    let (n, beta, a) = (100usize, 2.0, 1.5);
    let params = ModelParams::new(&[0.5], beta, a, n).map_err(|e| e.to_string())?;
    let result = minimize(&params, &MinimizeOptions::default()).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for k in 1..=n {
        let x_exact = ((k as f64 + a - 1.0 / beta) / n as f64).sqrt();
        worst = worst.max((result.x[k - 1] - x_exact).abs());
        if k < n {
            let y_exact = ((k as f64 - 1.0 / beta) / n as f64).sqrt();
            worst = worst.max((result.y[k - 1] - y_exact).abs());
        }
    }
    if worst > 1e-10 {
        return Err(format!("Newton profile deviates {worst:.3e} > 1e-10 from closed form"));
    }
    Ok(format!("n = 100, max deviation {worst:.3e} from the chi-mode closed form"))
}

fn circulant_identity_both_potentials() -> Result<String, String> {
    let t = 0.5;
    let mut detail = String::new();
    for g in [&[0.5][..], &[0.5, 0.125][..]] {
        let pot = ValidatedPotential::new(g).map_err(|e| e.to_string())?;
        let sf = scaling_for(g)?;
        let phi = sf.phi(t).map_err(|e| e.to_string())?;
        let predicted = 2.0 * sf.theta(t).map_err(|e| e.to_string())?
            / (phi * phi * sf.theta_deriv(t).map_err(|e| e.to_string())?);
        let (rayleigh, residual) = alternating_eigenvalue(&circulant_hessian(&pot, t, phi, 32));
        if (rayleigh - predicted).abs() > 1e-9 * predicted.abs() {
            return Err(format!(
                "g = {g:?}: alternating eigenvalue {rayleigh:.15} vs predicted {predicted:.15}"
            ));
        }
        if residual > 1e-9 * rayleigh.abs() {
            return Err(format!("g = {g:?}: eigenvector residual {residual:.3e}"));
        }
        detail.push_str(&format!("{:.6} ", rayleigh));
    }
    Ok(format!("2θ/(φ²θ′) reproduced at t = 0.5: {}", detail.trim_end()))
}

fn inverse_kernel_solves_the_transposed_system() -> Result<String, String> {
    // K = (B⁻¹)ᵀ, so Bᵀ(Kv) = v: an independent residual certificate using
    // only the bidiagonal recurrence, across a wide dynamic range.
    let n = 50;
    let x: Vec<f64> = (0..n).map(|i| (2.0 * ((i % 7) as f64 - 3.0) / 3.0).exp()).collect();
    let y: Vec<f64> = (0..n - 1).map(|i| 0.8 * (1.5 * ((i % 5) as f64 - 2.0) / 2.0).exp()).collect();
    let v: Vec<f64> = (0..n).map(|i| ((i * i + 1) as f64).sin()).collect();
    let state = InverseKernelState::from_arrays(&x, &y).map_err(|e| e.to_string())?;
    let kv = kernel_apply(&state, &v, false).map_err(|e| e.to_string())?;
    let vmax = v.iter().fold(0.0f64, |m, &t| m.max(t.abs()));
    let mut worst = 0.0f64;
    for j in 0..n {
        let next = if j + 1 < n { y[j] * kv[j + 1] } else { 0.0 };
        worst = worst.max((x[j] * kv[j] - next - v[j]).abs());
    }
    if worst > 1e-10 * vmax {
        return Err(format!("residual |Bᵀ(Kv) - v|_∞ = {worst:.3e} > 1e-10·|v|_∞"));
    }
    Ok(format!("n = 50, residual {worst:.3e}"))
}

fn krylov_agrees_with_sturm() -> Result<String, String> {
    let params = ModelParams::new(&[0.5], 2.0, 0.0, 300).map_err(|e| e.to_string())?;
    let sample = sample_exact(&params, 0x5e1f).map_err(|e| e.to_string())?;
    let krylov = smallest_eigs(&sample.x, &sample.y, 3).map_err(|e| e.to_string())?;
    let sturm = sturm_eigs(&sample.x, &sample.y, 3).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for (l, s) in krylov.eigenvalues.iter().zip(&sturm.eigenvalues) {
        worst = worst.max((l - s).abs() / s.abs());
    }
    if worst > 1e-8 {
        return Err(format!("Krylov vs Sturm relative gap {worst:.3e} > 1e-8"));
    }
    Ok(format!("three smallest eigenvalues agree to {worst:.3e} at n = 300"))
}

fn zero_noise_limit_hits_the_bessel_zero() -> Result<String, String> {
    let grid =
        SboGrid::standard(300, 1e-6, 2.0, 0.0, SboMode::LaguerreNative).map_err(|e| e.to_string())?;
    grid_self_check(&grid, None, 0.01).map_err(|e| e.to_string())?;
    let op = SboOperator::build(&grid, None, &NoisePath::zero()).map_err(|e| e.to_string())?;
    let spectrum = op.draw_spectrum(1).map_err(|e| e.to_string())?;
    let rel = (spectrum.eigenvalues[0] - BESSEL_LIMIT_1).abs() / BESSEL_LIMIT_1;
    if rel > 0.02 {
        return Err(format!(
            "zero-noise Λ₁ = {} vs j²/4 = {BESSEL_LIMIT_1}: off by {rel:.2e}",
            spectrum.eigenvalues[0]
        ));
    }
    Ok(format!("Λ₁ within {rel:.1e} of j²/4 at 300 cells"))
}

fn pushforward_coupling_is_exact() -> Result<String, String> {
    // Native kernel on the grid (θ(s_i), θ'(s_i)·w_i) equals 2√κ times the
    // general kernel on (s_i, w_i) entry by entry — the change-of-variables
    // constant, certified independently of any discretization error.
    let (beta, a) = (2.0, 0.5);
    let sf = scaling_for(&[0.5, 0.125])?;
    let kappa = sf.kappa();
    let gen = SboGrid::standard(200, 1e-6, beta, a, SboMode::General).map_err(|e| e.to_string())?;
    let mut push_nodes = Vec::with_capacity(gen.cells());
    let mut push_weights = Vec::with_capacity(gen.cells());
    for (&s, &w) in gen.nodes().iter().zip(gen.weights()) {
        push_nodes.push(sf.theta(s).map_err(|e| e.to_string())?);
        push_weights.push(sf.theta_deriv(s).map_err(|e| e.to_string())? * w);
    }
    let native =
        SboGrid::from_nodes(push_nodes, push_weights, gen.epsilon(), beta, a, SboMode::LaguerreNative)
            .map_err(|e| e.to_string())?;
    let zero = NoisePath::zero();
    let op_gen = SboOperator::build(&gen, Some(&sf), &zero).map_err(|e| e.to_string())?;
    let op_nat = SboOperator::build(&native, None, &zero).map_err(|e| e.to_string())?;
    let expected = 2.0 * kappa.sqrt();
    let m = gen.cells();
    let mut worst = 0.0f64;
    for (i, j) in [(0, m / 2), (m / 4, m - 1), (1, 2), (m / 2, m / 2 + 1)] {
        let ratio = op_nat.entry(i, j) / op_gen.entry(i, j);
        worst = worst.max((ratio - expected).abs() / expected);
    }
    if worst > 1e-10 {
        return Err(format!("entry ratio deviates {worst:.3e} from 2√κ"));
    }
    Ok(format!("entry ratio = 2√κ to {worst:.1e} (κ = {kappa:.12})"))
}

/// All oracles, in execution order.
fn oracles() -> Vec<Oracle> {
    vec![
        ("linear-scaling-closed-form", linear_scaling_closed_form),
        ("quartic-scaling-frozen", quartic_scaling_frozen),
        ("lattice-enumeration", lattice_enumeration_matches_closed_form),
        ("path-gradient", path_gradient_matches_matrix_calculus),
        ("newton-linear-closed-form", newton_matches_linear_closed_form),
        ("circulant-identity", circulant_identity_both_potentials),
        ("inverse-kernel-residual", inverse_kernel_solves_the_transposed_system),
        ("krylov-vs-sturm", krylov_agrees_with_sturm),
        ("zero-noise-bessel", zero_noise_limit_hits_the_bessel_zero),
        ("pushforward-coupling", pushforward_coupling_is_exact),
    ]
}

/// Run every oracle, streaming one line each; fail fast on the first miss.
pub fn run_selftest(out: &mut impl Write) -> Result<(), HarnessError> {
    for (name, oracle) in oracles() {
        match oracle() {
            Ok(detail) => {
                writeln!(out, "[ok] {name}: {detail}").map_err(|e| HarnessError::Numerical {
                    context: "writing selftest output".to_string(),
                    message: e.to_string(),
                })?;
            }
            Err(message) => {
                return Err(HarnessError::Numerical {
                    context: format!("selftest oracle `{name}`"),
                    message,
                });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_oracles_pass() {
        let mut buf = Vec::new();
        run_selftest(&mut buf).expect("every deterministic oracle must pass");
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), oracles().len(), "one line per oracle:\n{text}");
        assert!(text.lines().all(|l| l.starts_with("[ok] ")), "{text}");
    }
}
