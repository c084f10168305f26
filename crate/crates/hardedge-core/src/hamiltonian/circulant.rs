//! Block-circulant comparison Hamiltonian.
//!
//! Replacing the bidiagonal matrix by its circulant counterpart `C` (same
//! diagonal `x` and subdiagonal `-y`, plus the wrap-around corner entry)
//! and freezing the log coefficients at a constant `t` gives the
//! translation-invariant energy
//!
//! ```text
//!   F(x, y) = tr V(C Cᵀ) - t · Σ_k (log x_k + log y_k)
//! ```
//!
//! whose Hessian at the flat point `x ≡ y ≡ φ(t)` has the alternating
//! vector `(+1, -1, +1, -1, …)` (in interleaved `x₁, y₁, x₂, y₂, …` order)
//! as an exact eigenvector, with eigenvalue predicted by the scaling
//! functions alone:
//!
//! ```text
//!   λ_alt = 2 θ(t) / (φ(t)² θ′(t)).
//! ```
//!
//! The assembly below is an independent route (dense cyclic matrix
//! calculus) to that number; tests and the acceptance harness compare it
//! against the quadrature/root-finding route on the right-hand side.

use crate::potential::ValidatedPotential;
use nalgebra::DMatrix;

/// Dense Hessian of `F` above at the flat point `x ≡ y ≡ value`, for a
/// circulant block of size `k` (so `2k` interleaved coordinates).
pub fn circulant_hessian(
    potential: &ValidatedPotential,
    log_coeff: f64,
    value: f64,
    k: usize,
) -> DMatrix<f64> {
    assert!(k >= 3, "circulant block needs k ≥ 3");
    assert!(value > 0.0, "flat point must be positive");
    let d = potential.degree();
    let x = vec![value; k];
    let y = vec![value; k];

    // T = C Cᵀ cyclic: T_kk = x_k² + y_{k-1}², T_{k,k+1} = -x_k y_k.
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        let prev = (i + k - 1) % k;
        t[(i, i)] = x[i] * x[i] + y[prev] * y[prev];
        let next = (i + 1) % k;
        t[(i, next)] = -x[i] * y[i];
        t[(next, i)] = -x[i] * y[i];
    }

    // Powers T⁰..T^{d-1} and W = Σ m g_m T^{m-1}.
    let mut powers = Vec::with_capacity(d);
    powers.push(DMatrix::<f64>::identity(k, k));
    for _ in 1..d {
        let next = powers.last().unwrap() * &t;
        powers.push(next);
    }
    let mut w = DMatrix::<f64>::zeros(k, k);
    for m in 1..=d {
        w += &powers[m - 1] * (m as f64 * potential.coeff(m));
    }

    // Sparse supports of ∂T/∂z per coordinate, cyclic indices.
    // Interleaved layout: z[2i] = x_{i+1}, z[2i+1] = y_{i+1}.
    let support = |coord: usize| -> [(usize, usize, f64); 3] {
        let i = coord / 2;
        let next = (i + 1) % k;
        if coord.is_multiple_of(2) {
            [
                (i, i, 2.0 * x[i]),
                (i, next, -y[i]),
                (next, i, -y[i]),
            ]
        } else {
            [
                (next, next, 2.0 * y[i]),
                (i, next, -x[i]),
                (next, i, -x[i]),
            ]
        }
    };

    let dim = 2 * k;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for p in 0..dim {
        let ep = support(p);
        for q in p..dim {
            let eq = support(q);
            let mut v = 0.0;
            for m in 2..=d {
                let gm = m as f64 * potential.coeff(m);
                for j in 0..=m - 2 {
                    let l = m - 2 - j;
                    let mut s = 0.0;
                    for &(rq, cq, vq) in &eq {
                        for &(rp, cp, vp) in &ep {
                            s += vq * vp * powers[j][(cp, rq)] * powers[l][(cq, rp)];
                        }
                    }
                    v += gm * s;
                }
            }
            // tr(W · ∂²T/∂z_p∂z_q): same-index pairs only.
            let (ip, iq) = (p / 2, q / 2);
            if ip == iq {
                let next = (ip + 1) % k;
                match (p % 2, q % 2) {
                    (0, 0) => v += 2.0 * w[(ip, ip)],
                    (1, 1) => v += 2.0 * w[(next, next)],
                    _ => v -= 2.0 * w[(ip, next)],
                }
            }
            if p == q {
                // -t log z ⇒ +t/z² on the diagonal.
                v += log_coeff / (value * value);
            }
            h[(p, q)] = v;
            h[(q, p)] = v;
        }
    }
    h
}

/// The alternating vector `(+1, -1, …)` of dimension `2k`.
pub fn alternating_vector(k: usize) -> Vec<f64> {
    (0..2 * k)
        .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
        .collect()
}

/// Apply the circulant Hessian to the alternating vector and report
/// `(rayleigh, residual_inf)`: the Rayleigh quotient and the largest
/// deviation `|Hv - λv|_∞`.  The residual certifies eigenvector-ness; the
/// quotient is the measured eigenvalue.
pub fn alternating_eigenvalue(h: &DMatrix<f64>) -> (f64, f64) {
    let dim = h.nrows();
    let k = dim / 2;
    let v = alternating_vector(k);
    let mut hv = vec![0.0; dim];
    for i in 0..dim {
        hv[i] = (0..dim).map(|j| h[(i, j)] * v[j]).sum();
    }
    let rayleigh = hv
        .iter()
        .zip(&v)
        .map(|(a, b)| a * b)
        .sum::<f64>()
        / dim as f64;
    let residual = hv
        .iter()
        .zip(&v)
        .map(|(a, b)| (a - rayleigh * b).abs())
        .fold(0.0_f64, f64::max);
    (rayleigh, residual)
}
