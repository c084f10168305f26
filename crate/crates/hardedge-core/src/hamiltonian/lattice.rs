//! Lattice-path expansion of the gradient of `tr V(B Bᵀ)`.
//!
//! Diagonal entries of powers of the Gram matrix admit a combinatorial
//! expansion: `[(B Bᵀ)^m]_{ii}` sums over walks of `2m` alternating steps —
//! odd steps pick an entry of `B` (flat `→` reads `x`, down `↘` reads `y`),
//! even steps pick an entry of `Bᵀ` (flat reads `x`, up `↗` reads `y`) —
//! that start and end at height `0`.  Every `y`-factor appears squared in
//! the trace, so the expansion is sign-free.
//!
//! Differentiating `tr V` in `x_i` turns the closed walks into *rooted*
//! walks: each occurrence of `x_i` across all centers corresponds to one
//! flat step of one path, with the path re-centered so that flat step reads
//! exactly `x_i`.  Summing the constant profile `x ≡ y ≡ φ` over rooted
//! paths produces the coefficient `A_m = Σ_p r(p) = m·C(2m, m)` (with
//! `r(p)` the number of flat steps of `p`), and expanding the profile to
//! first order produces the companion coefficients
//!
//! ```text
//!   B_m = (2m²-2m+1)/(2m-1) · A_m     (weight of the x-correction)
//!   C_m = (2m²-2m)/(2m-1)   · A_m     (weight of the y-correction)
//!   D_m = -(m²-m)/(2m-1)    · A_m     (weight of φ′)
//! ```
//!
//! This module provides the closed forms in exact integer arithmetic, an
//! independent brute-force enumeration of the same four numbers, and the
//! rooted-path evaluation of `∂ tr V/∂x_i` itself for bulk indices — the
//! second, structurally unrelated route to the gradient that the banded
//! matrix calculus in the parent module must reproduce.

use crate::potential::ValidatedPotential;

/// Errors from the combinatorial routines.
#[derive(Debug, thiserror::Error)]
pub enum LatticeError {
    /// Closed forms are served in exact `i128` arithmetic for `m ≤ 20`.
    #[error("coefficient order m = {m} outside supported range 1..={max}")]
    OutOfRange { m: usize, max: usize },
    /// Brute-force enumeration is capped at `m ≤ 6` (C(12,6) = 924 paths).
    #[error("enumeration order m = {m} exceeds the brute-force cap {max}")]
    TooLarge { m: usize, max: usize },
    /// The rooted-path gradient needs `d < i < n-d` so no path truncates.
    #[error("index i = {i} not in the bulk range ({d}, {limit}) for n = {n}")]
    IndexOutOfBulk {
        i: usize,
        d: usize,
        limit: usize,
        n: usize,
    },
}

/// The four path-count coefficients at one order `m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PathCoefficients {
    pub a: i128,
    pub b: i128,
    pub c: i128,
    pub d: i128,
}

const CLOSED_FORM_MAX: usize = 20;
const ENUMERATION_MAX: usize = 6;

/// `C(2m, m)` in exact integer arithmetic.
fn central_binomial_i128(m: usize) -> i128 {
    let mut b: i128 = 1;
    for i in 1..=m as i128 {
        b = b * (m as i128 + i) / i;
    }
    b
}

/// Closed-form coefficients `A_m, B_m, C_m, D_m` in exact arithmetic.
pub fn coefficients(m: usize) -> Result<PathCoefficients, LatticeError> {
    if m == 0 || m > CLOSED_FORM_MAX {
        return Err(LatticeError::OutOfRange {
            m,
            max: CLOSED_FORM_MAX,
        });
    }
    let mi = m as i128;
    let a = mi * central_binomial_i128(m);
    let denom = 2 * mi - 1;
    let b_num = (2 * mi * mi - 2 * mi + 1) * a;
    let c_num = (2 * mi * mi - 2 * mi) * a;
    let d_num = -(mi * mi - mi) * a;
    debug_assert_eq!(b_num % denom, 0, "B_m divisibility");
    debug_assert_eq!(c_num % denom, 0, "C_m divisibility");
    debug_assert_eq!(d_num % denom, 0, "D_m divisibility");
    Ok(PathCoefficients {
        a,
        b: b_num / denom,
        c: c_num / denom,
        d: d_num / denom,
    })
}

/// One step of a path.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Step {
    Flat,
    /// `↘` at odd times, `↗` at even times.
    Move,
}

/// A complete path: step types plus the height *before* each step
/// (`height[0] = 0`; the implicit final height is 0 again).
struct Path {
    steps: Vec<Step>,
    heights: Vec<i64>,
}

/// All paths of length `2m`: odd steps flat/down, even steps flat/up,
/// starting and ending at height zero (heights may dip negative).
fn enumerate_paths(m: usize) -> Vec<Path> {
    let len = 2 * m;
    let mut out = Vec::new();
    let mut steps = Vec::with_capacity(len);
    let mut heights = Vec::with_capacity(len);
    fn rec(
        j: usize,
        len: usize,
        h: i64,
        steps: &mut Vec<Step>,
        heights: &mut Vec<i64>,
        out: &mut Vec<Path>,
    ) {
        if j == len {
            if h == 0 {
                out.push(Path {
                    steps: steps.clone(),
                    heights: heights.clone(),
                });
            }
            return;
        }
        // Pruning: remaining moves must be able to return to zero.
        let remaining = (len - j) as i64;
        if h.abs() > remaining {
            return;
        }
        let odd = j.is_multiple_of(2); // step number j+1 is odd
        for &s in &[Step::Flat, Step::Move] {
            let dh = match (s, odd) {
                (Step::Flat, _) => 0,
                (Step::Move, true) => -1,
                (Step::Move, false) => 1,
            };
            steps.push(s);
            heights.push(h);
            rec(j + 1, len, h + dh, steps, heights, out);
            steps.pop();
            heights.pop();
        }
    }
    rec(0, len, 0, &mut steps, &mut heights, &mut out);
    out
}

/// Brute-force enumeration of the four coefficients by walking every path:
/// `A = Σ r`, `B = Σ r(r-1)`, `C = Σ r(2m-r)` and
/// `D = Σ [r·K - 2m·Σ_{flats} h]`, where `r` counts flat steps, `h` their
/// heights, and `K` sums the *smaller* height across each step (`h-1` for a
/// down step from `h`, otherwise `h`).  The `-2m·h` term re-centers each
/// rooted copy of the path at its chosen flat step.
pub fn enumerate_coefficients(m: usize) -> Result<PathCoefficients, LatticeError> {
    if m == 0 || m > ENUMERATION_MAX {
        return Err(LatticeError::TooLarge {
            m,
            max: ENUMERATION_MAX,
        });
    }
    let len = 2 * m as i128;
    let mut a = 0i128;
    let mut b = 0i128;
    let mut c = 0i128;
    let mut d = 0i128;
    for p in enumerate_paths(m) {
        let mut r = 0i128;
        let mut flat_heights = 0i128;
        let mut k = 0i128;
        for (j, (&s, &h)) in p.steps.iter().zip(&p.heights).enumerate() {
            let odd = j % 2 == 0;
            match s {
                Step::Flat => {
                    r += 1;
                    flat_heights += h as i128;
                    k += h as i128;
                }
                Step::Move => {
                    k += if odd { h as i128 - 1 } else { h as i128 };
                }
            }
        }
        a += r;
        b += r * (r - 1);
        c += r * (len - r);
        d += r * k - len * flat_heights;
    }
    Ok(PathCoefficients { a, b, c, d })
}

/// Number of paths that start with a flat step,
/// `Σ_ℓ C(m-1, ℓ)·C(m, ℓ)`; satisfies `2m·|P̃_m| = A_m`.
pub fn rooted_path_count(m: usize) -> Result<i128, LatticeError> {
    if m == 0 || m > CLOSED_FORM_MAX {
        return Err(LatticeError::OutOfRange {
            m,
            max: CLOSED_FORM_MAX,
        });
    }
    let binom = |n: i128, k: i128| -> i128 {
        if k < 0 || k > n {
            return 0;
        }
        let mut b: i128 = 1;
        for i in 1..=k {
            b = b * (n - k + i) / i;
        }
        b
    };
    Ok((0..=m as i128)
        .map(|l| binom(m as i128 - 1, l) * binom(m as i128, l))
        .sum())
}

/// `∂ tr V(B Bᵀ)/∂x_i` by rooted lattice paths (1-based `i`, strictly in
/// the bulk `d < i < n-d` so no path truncates at the matrix edges).
///
/// For each order `m`, each path, and each flat step of the path, the walk
/// is centered so that flat step reads `x_i`, the remaining `2m-1` factors
/// are read off the profile (`x` at flats, `y` at moves, indices shifted by
/// the walk height), and the products are summed without signs.  This is a
/// complete, independently derived alternative to the banded matrix
/// calculus used by [`super::gradient`].
pub fn grad_x_via_paths(
    potential: &ValidatedPotential,
    x: &[f64],
    y: &[f64],
    i: usize,
) -> Result<f64, LatticeError> {
    let n = x.len();
    let d = potential.degree();
    if d > ENUMERATION_MAX {
        return Err(LatticeError::TooLarge {
            m: d,
            max: ENUMERATION_MAX,
        });
    }
    if i <= d || i + d >= n {
        return Err(LatticeError::IndexOutOfBulk {
            i,
            d,
            limit: n - d,
            n,
        });
    }
    let mut grad = 0.0;
    for m in 1..=d {
        let gm = potential.coeff(m);
        if gm == 0.0 {
            continue;
        }
        let mut sum = 0.0;
        for p in enumerate_paths(m) {
            for (root, (&rs, &rh)) in p.steps.iter().zip(&p.heights).enumerate() {
                if rs != Step::Flat {
                    continue;
                }
                // Center so the flat step at height rh reads x_i: indices
                // are i + (h - rh) for flats, with the usual -1 shift for a
                // down step (it reads y one below its starting height).
                let mut prod = 1.0;
                for (j, (&s, &h)) in p.steps.iter().zip(&p.heights).enumerate() {
                    if j == root {
                        continue; // the differentiated x_i factor
                    }
                    let odd = j % 2 == 0;
                    let rel = (h - rh) as isize;
                    // 1-based profile index of this factor.
                    let idx = (i as isize + rel) as usize;
                    prod *= match (s, odd) {
                        (Step::Flat, _) => x[idx - 1],
                        (Step::Move, true) => y[idx - 2],
                        (Step::Move, false) => y[idx - 1],
                    };
                }
                sum += prod;
            }
        }
        grad += gm * sum;
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{gradient, ModelParams};

    #[test]
    fn closed_forms_match_hand_computed_small_orders() {
        let c1 = coefficients(1).unwrap();
        assert_eq!((c1.a, c1.b, c1.c, c1.d), (2, 2, 0, 0));
        let c2 = coefficients(2).unwrap();
        assert_eq!((c2.a, c2.b, c2.c, c2.d), (12, 20, 16, -8));
        let c3 = coefficients(3).unwrap();
        assert_eq!(c3.a, 60);
    }

    #[test]
    fn enumeration_reproduces_closed_forms() {
        for m in 1..=ENUMERATION_MAX {
            let closed = coefficients(m).unwrap();
            let brute = enumerate_coefficients(m).unwrap();
            assert_eq!(closed, brute, "coefficients disagree at m = {m}");
        }
    }

    #[test]
    fn rooted_count_scales_to_a() {
        for m in 1..=10 {
            let a = coefficients(m).unwrap().a;
            let rooted = rooted_path_count(m).unwrap();
            assert_eq!(2 * m as i128 * rooted, a, "2m·|P̃| ≠ A at m = {m}");
        }
    }

    #[test]
    fn range_errors() {
        assert!(matches!(
            coefficients(21),
            Err(LatticeError::OutOfRange { .. })
        ));
        assert!(matches!(
            coefficients(0),
            Err(LatticeError::OutOfRange { .. })
        ));
        assert!(matches!(
            enumerate_coefficients(7),
            Err(LatticeError::TooLarge { .. })
        ));
    }

    #[test]
    fn path_gradient_matches_banded_gradient_in_the_bulk() {
        // Dual route: rooted-path enumeration vs banded matrix calculus.
        let n = 30;
        let params = ModelParams::new(&[0.4, 0.08, 0.01], 2.0, 0.5, n).unwrap();
        let x: Vec<f64> = (0..n)
            .map(|k| 0.7 + 0.2 * ((3 * k + 1) as f64).sin())
            .collect();
        let y: Vec<f64> = (0..n - 1)
            .map(|k| 0.5 + 0.15 * ((2 * k + 5) as f64).cos())
            .collect();
        let (gx, _) = gradient(&params, &x, &y).unwrap();
        for &i in &[4_usize, 10, 17, 26] {
            let path_grad = grad_x_via_paths(params.potential(), &x, &y, i).unwrap();
            // gx includes the log term; strip it to isolate the trace part.
            let trace_part = gx[i - 1] + params.log_coeff_x(i) / x[i - 1];
            assert!(
                (path_grad - trace_part).abs() <= 1e-12 * trace_part.abs().max(1.0),
                "routes disagree at i = {i}: {path_grad} vs {trace_part}"
            );
        }
    }

    #[test]
    fn path_gradient_at_constant_profile_gives_a_coefficients() {
        // x ≡ y ≡ φ: the rooted-path sum collapses to Σ g_m A_m φ^{2m-1}.
        let pot = ValidatedPotential::new(&[0.5, 0.1]).unwrap();
        let n = 20;
        let phi = 0.8;
        let x = vec![phi; n];
        let y = vec![phi; n - 1];
        let got = grad_x_via_paths(&pot, &x, &y, 10).unwrap();
        let expect: f64 = (1..=2)
            .map(|m| {
                pot.coeff(m) * coefficients(m).unwrap().a as f64 * phi.powi(2 * m as i32 - 1)
            })
            .sum();
        assert!((got - expect).abs() <= 1e-12 * expect.abs());
    }

    #[test]
    fn bulk_bounds_are_enforced() {
        let pot = ValidatedPotential::new(&[0.5, 0.1]).unwrap();
        let x = vec![1.0; 10];
        let y = vec![1.0; 9];
        assert!(matches!(
            grad_x_via_paths(&pot, &x, &y, 2),
            Err(LatticeError::IndexOutOfBulk { .. })
        ));
        assert!(matches!(
            grad_x_via_paths(&pot, &x, &y, 8),
            Err(LatticeError::IndexOutOfBulk { .. })
        ));
        assert!(grad_x_via_paths(&pot, &x, &y, 5).is_ok());
    }
}
