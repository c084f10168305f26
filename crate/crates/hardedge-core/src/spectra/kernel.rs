//! The explicit inverse kernel of the bidiagonal model.
//!
//! For `B` lower bidiagonal (diagonal `x`, subdiagonal `−y`) the inverse is
//! lower triangular with positive entries, and `K = (B⁻¹)ᵀ` is the upper
//! triangular kernel
//!
//! ```text
//! K[i][j] = (1/x_j) · ∏_{k=i..j-1} (y_k / x_k)      for i ≤ j (0-based),
//! ```
//!
//! i.e. `exp(p_j − p_i − log x_j)` with log-prefix `p_j = Σ_{k<j}(log y_k −
//! log x_k)`.  The Gram operator `KᵀK` has eigenvalues `1/λ` for the
//! eigenvalues `λ` of `BBᵀ`, which is how the smallest ones are computed
//! without squaring the hard-edge conditioning.
//!
//! Both applies run in `O(n)` by the ratio recurrences
//!
//! ```text
//! (Kv)_i   = R_i,        R_i = v_i/x_i + (y_i/x_i)·R_{i+1},
//! (Kᵀv)_j  = S_j/x_j,    S_j = v_j + (y_{j-1}/x_{j-1})·S_{j-1},
//! ```
//!
//! with the running sums kept in a mantissa/log-scale representation that
//! renormalizes whenever the running log-magnitude passes ±300, so prefix
//! products spanning hundreds of orders of magnitude neither overflow nor
//! flush to zero.  For well-scaled inputs the representation stays on a
//! pure-arithmetic fast path and the results are bit-identical to the
//! naive recurrence.

use super::SpectraError;

const LN2: f64 = std::f64::consts::LN_2;
/// Renormalization threshold on `|ln s|` (≈ 1e±130 in magnitude).
const RENORM_LOG: f64 = 300.0;
const BAND_HI: f64 = 1e130;
const BAND_LO: f64 = 1e-130;

/// A running value `s·e^c` with `|ln s| ≤ ~300` maintained by
/// renormalization.  `c == 0` marks the exact fast path.
#[derive(Clone, Copy, Debug)]
struct Acc {
    s: f64,
    c: f64,
}

impl Acc {
    fn zero() -> Acc {
        Acc { s: 0.0, c: 0.0 }
    }

    /// Restore `|s| ∈ [1e-130, 1e130]` by moving an exact power of two into
    /// the exponent (the mantissa scaling is lossless).
    fn renorm(&mut self) {
        if self.s == 0.0 {
            self.c = 0.0;
            return;
        }
        let l = self.s.abs().ln();
        if l.abs() > RENORM_LOG {
            let k = self.s.abs().log2().round();
            self.s /= (2f64).powi(k as i32);
            self.c += k * LN2;
        }
    }

    /// `self *= r` for finite `r ≥ 0`.
    fn mul(&mut self, r: f64) {
        if r == 0.0 || self.s == 0.0 {
            *self = Acc::zero();
            return;
        }
        if self.c == 0.0 {
            let p = self.s * r;
            if p.is_finite() && p.abs() <= BAND_HI && p.abs() >= BAND_LO {
                self.s = p;
                return;
            }
        }
        self.c += r.ln();
        self.renorm();
    }

    /// `self *= e^lr` — used when the ratio itself cannot be formed in f64.
    fn mul_log(&mut self, lr: f64) {
        if self.s == 0.0 {
            return;
        }
        self.c += lr;
    }

    /// `self += t` for finite `t`.
    fn add(&mut self, t: f64) {
        if t == 0.0 {
            return;
        }
        if self.c == 0.0 {
            let sum = self.s + t;
            if sum == 0.0 || (sum.is_finite() && sum.abs() <= BAND_HI && sum.abs() >= BAND_LO) {
                self.s = sum;
                return;
            }
        }
        self.add_signed_log(t.signum(), t.abs().ln());
    }

    /// `self += sign·e^l` — the slow path, also used directly when the
    /// term itself cannot be formed in f64.  The exp arguments are bounded
    /// by `ln|s| ≤ ~300` (renorm invariant), so they cannot overflow.
    fn add_signed_log(&mut self, sign: f64, l: f64) {
        if l == f64::NEG_INFINITY {
            return;
        }
        if self.s == 0.0 {
            self.s = sign;
            self.c = l;
            return;
        }
        let lself = self.s.abs().ln() + self.c;
        if lself >= l {
            self.s += sign * (l - self.c).exp();
        } else {
            self.s = self.s * (self.c - l).exp() + sign;
            self.c = l;
        }
        self.renorm();
    }

    /// Extract the value, or report the overflow that plain arithmetic
    /// would have hidden behind `inf`.
    fn value(self) -> Result<f64, SpectraError> {
        if self.c == 0.0 {
            return Ok(self.s);
        }
        if self.s == 0.0 {
            return Ok(0.0);
        }
        let l = self.s.abs().ln() + self.c;
        if l > 709.0 {
            return Err(SpectraError::NonFinite { log_magnitude: l });
        }
        if l < -745.0 {
            return Ok(0.0);
        }
        Ok(self.s.signum() * l.exp())
    }
}

/// Precomputed state for applying `K = (B⁻¹)ᵀ` and its transpose.
#[derive(Clone, Debug)]
pub struct InverseKernelState {
    x: Vec<f64>,
    y: Vec<f64>,
    ln_x: Vec<f64>,
    /// `ln y_k`, `-inf` where `y_k = 0` (the kernel then decouples into
    /// independent blocks, which the recurrences handle exactly).
    ln_y: Vec<f64>,
}

impl InverseKernelState {
    /// Build from bidiagonal entries: `x` strictly positive (length n),
    /// `y` nonnegative (length n−1).
    pub fn from_arrays(x: &[f64], y: &[f64]) -> Result<Self, SpectraError> {
        let n = x.len();
        if n == 0 {
            return Err(SpectraError::InvalidRequest {
                what: "empty diagonal".to_string(),
            });
        }
        if y.len() + 1 != n {
            return Err(SpectraError::DimensionMismatch {
                expected: n - 1,
                got: y.len(),
            });
        }
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
        Ok(InverseKernelState {
            x: x.to_vec(),
            y: y.to_vec(),
            ln_x: x.iter().map(|&v| v.ln()).collect(),
            ln_y: y.iter().map(|&v| v.ln()).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    /// Entry `K[i][j]` (0-based, zero below the diagonal), computed in the
    /// log domain so individual entries are exact to rounding even when
    /// intermediate products would overflow.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i > j || j >= self.n() {
            return 0.0;
        }
        let mut l = -self.ln_x[j];
        for k in i..j {
            if self.y[k] == 0.0 {
                return 0.0;
            }
            l += self.ln_y[k] - self.ln_x[k];
        }
        l.exp()
    }

    /// `out = K v` (upper-triangular action) via the backward ratio
    /// recurrence.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) -> Result<(), SpectraError> {
        let n = self.n();
        if v.len() != n || out.len() != n {
            return Err(SpectraError::DimensionMismatch {
                expected: n,
                got: v.len().min(out.len()),
            });
        }
        let mut r = Acc::zero();
        for i in (0..n).rev() {
            if i + 1 < n {
                let ratio = self.y[i] / self.x[i];
                if ratio.is_finite() {
                    r.mul(ratio);
                } else {
                    r.mul_log(self.ln_y[i] - self.ln_x[i]);
                }
            } else {
                r = Acc::zero();
            }
            if !v[i].is_finite() {
                return Err(SpectraError::InvalidEntry {
                    kind: "v",
                    index: i,
                    value: v[i],
                });
            }
            let t = v[i] / self.x[i];
            if t.is_finite() {
                r.add(t);
            } else {
                // |v_i| / x_i overflowed f64 (tiny diagonal entry); fall
                // back to the log-domain form of the same addition.
                r.add_signed_log(v[i].signum(), v[i].abs().ln() - self.ln_x[i]);
            }
            out[i] = r.value()?;
        }
        Ok(())
    }

    /// `out = Kᵀ v` (lower-triangular action) via the forward ratio
    /// recurrence.
    pub fn apply_transpose(&self, v: &[f64], out: &mut [f64]) -> Result<(), SpectraError> {
        let n = self.n();
        if v.len() != n || out.len() != n {
            return Err(SpectraError::DimensionMismatch {
                expected: n,
                got: v.len().min(out.len()),
            });
        }
        let mut s = Acc::zero();
        for j in 0..n {
            if j > 0 {
                let ratio = self.y[j - 1] / self.x[j - 1];
                if ratio.is_finite() {
                    s.mul(ratio);
                } else {
                    s.mul_log(self.ln_y[j - 1] - self.ln_x[j - 1]);
                }
            }
            if !v[j].is_finite() {
                return Err(SpectraError::InvalidEntry {
                    kind: "v",
                    index: j,
                    value: v[j],
                });
            }
            s.add(v[j]);
            let mut scaled = s;
            let inv = 1.0 / self.x[j];
            if inv.is_finite() {
                scaled.mul(inv);
            } else {
                scaled.mul_log(-self.ln_x[j]);
            }
            out[j] = scaled.value()?;
        }
        Ok(())
    }
}

/// Free-function form: `K v` or `Kᵀ v` according to `transpose`.
pub fn kernel_apply(
    state: &InverseKernelState,
    v: &[f64],
    transpose: bool,
) -> Result<Vec<f64>, SpectraError> {
    let mut out = vec![0.0; state.n()];
    if transpose {
        state.apply_transpose(v, &mut out)?;
    } else {
        state.apply(v, &mut out)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_from_entries(state: &InverseKernelState) -> Vec<Vec<f64>> {
        let n = state.n();
        (0..n)
            .map(|i| (0..n).map(|j| state.entry(i, j)).collect())
            .collect()
    }

    fn dense_apply(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
        m.iter()
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn dense_apply_t(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
        let n = v.len();
        (0..n)
            .map(|j| (0..n).map(|i| m[i][j] * v[i]).sum())
            .collect()
    }

    #[test]
    fn unit_entries_give_counting_kernel() {
        // X ≡ 1, Y ≡ 1: K is upper-triangular of ones; K·(1,1,1) = (3,2,1).
        let state = InverseKernelState::from_arrays(&[1.0, 1.0, 1.0], &[1.0, 1.0]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i <= j { 1.0 } else { 0.0 };
                assert_eq!(state.entry(i, j), expect);
            }
        }
        let out = kernel_apply(&state, &[1.0, 1.0, 1.0], false).unwrap();
        assert_eq!(out, vec![3.0, 2.0, 1.0]);
        let out_t = kernel_apply(&state, &[1.0, 1.0, 1.0], true).unwrap();
        assert_eq!(out_t, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn entries_match_dense_inverse_transpose() {
        // Forward-substitution oracle for B⁻¹ columns, done in plain f64.
        let x = [0.8, 1.4, 0.6, 1.1, 0.9];
        let y = [0.5, 1.2, 0.4, 0.7];
        let state = InverseKernelState::from_arrays(&x, &y).unwrap();
        let n = x.len();
        for j in 0..n {
            // Solve B z = e_j: z_i is column j of B⁻¹ = row j of K... K[j][i]
            let mut z = vec![0.0; n];
            z[j] = 1.0 / x[j];
            for i in j + 1..n {
                z[i] = y[i - 1] * z[i - 1] / x[i];
            }
            for i in 0..n {
                let k_entry = state.entry(j, i);
                let expect = if i >= j { z[i] } else { 0.0 };
                assert!(
                    (k_entry - expect).abs() <= 1e-14 * expect.abs().max(1.0),
                    "entry ({j},{i}): {k_entry} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn applies_match_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 50;
        let x: Vec<f64> = (0..n).map(|_| 0.3 + rng.gen::<f64>()).collect();
        let y: Vec<f64> = (0..n - 1).map(|_| 0.2 + rng.gen::<f64>()).collect();
        let state = InverseKernelState::from_arrays(&x, &y).unwrap();
        let dense = dense_from_entries(&state);
        for _ in 0..5 {
            let v: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
            let got = kernel_apply(&state, &v, false).unwrap();
            let expect = dense_apply(&dense, &v);
            for (g, e) in got.iter().zip(&expect) {
                assert!(
                    (g - e).abs() <= 1e-10 * e.abs().max(1.0),
                    "apply mismatch {g} vs {e}"
                );
            }
            let got_t = kernel_apply(&state, &v, true).unwrap();
            let expect_t = dense_apply_t(&dense, &v);
            for (g, e) in got_t.iter().zip(&expect_t) {
                assert!(
                    (g - e).abs() <= 1e-10 * e.abs().max(1.0),
                    "transpose mismatch {g} vs {e}"
                );
            }
        }
    }

    #[test]
    fn adjoint_identity_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 40;
        let x: Vec<f64> = (0..n).map(|_| 0.4 + rng.gen::<f64>()).collect();
        let y: Vec<f64> = (0..n - 1).map(|_| 0.3 + rng.gen::<f64>()).collect();
        let state = InverseKernelState::from_arrays(&x, &y).unwrap();
        for _ in 0..5 {
            let u: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
            let v: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
            let ku = kernel_apply(&state, &u, false).unwrap();
            let ktv = kernel_apply(&state, &v, true).unwrap();
            let lhs: f64 = ku.iter().zip(&v).map(|(a, b)| a * b).sum();
            let rhs: f64 = u.iter().zip(&ktv).map(|(a, b)| a * b).sum();
            assert!(
                (lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0),
                "⟨Ku,v⟩ = {lhs} vs ⟨u,Kᵀv⟩ = {rhs}"
            );
        }
    }

    #[test]
    fn moderate_log_range_matches_per_entry_oracle() {
        // Ratios e^{±5} in a V shape push entries across ~500 decibans of
        // log-range while every entry stays representable; the recurrences
        // must match the per-entry log oracle to 1e-10 relative.
        let n = 101;
        let x = vec![1.0; n];
        let y: Vec<f64> = (0..n - 1)
            .map(|k| if k >= (n - 1) / 2 { (5.0f64).exp() } else { (-5.0f64).exp() })
            .collect();
        let state = InverseKernelState::from_arrays(&x, &y).unwrap();
        let dense = dense_from_entries(&state);
        let v: Vec<f64> = (0..n).map(|i| ((i * 7 % 13) as f64 - 6.0) / 6.0).collect();
        let got = kernel_apply(&state, &v, false).unwrap();
        let expect = dense_apply(&dense, &v);
        for (i, (g, e)) in got.iter().zip(&expect).enumerate() {
            assert!(
                (g - e).abs() <= 1e-10 * e.abs().max(1e-280),
                "stress apply row {i}: {g} vs {e}"
            );
        }
        let got_t = kernel_apply(&state, &v, true).unwrap();
        let expect_t = dense_apply_t(&dense, &v);
        for (i, (g, e)) in got_t.iter().zip(&expect_t).enumerate() {
            assert!(
                (g - e).abs() <= 1e-10 * e.abs().max(1e-280),
                "stress transpose row {i}: {g} vs {e}"
            );
        }
    }

    #[test]
    fn recovers_through_subnormal_underflow() {
        // Prefix products dip to e^{-800} — far below the smallest
        // subnormal — and climb back to 1.  A plain f64 recurrence flushes
        // the running value to zero inside the dip and reports 0 for every
        // later output; the stabilized accumulator must recover the exact
        // tail values.
        let n = 101;
        let half = 50;
        let x = vec![1.0; n];
        // Seen from the backward (apply) recurrence starting at i = n-1:
        // fifty ratios e^{-16} take R down to e^{-800}, fifty ratios
        // e^{+16} bring it back.
        let y: Vec<f64> = (0..n - 1)
            .map(|k| if k < half { (16.0f64).exp() } else { (-16.0f64).exp() })
            .collect();
        let state = InverseKernelState::from_arrays(&x, &y).unwrap();
        let mut v = vec![0.0; n];
        v[n - 1] = 1.0;
        let got = kernel_apply(&state, &v, false).unwrap();
        // out_i = K(i, n-1) = exp(-16·(n-1-i)) for i ≥ half, and
        // exp(-800 + 16·(half - i)) for i < half.
        for i in 0..n {
            let log_expect = if i >= half {
                -16.0 * (n - 1 - i) as f64
            } else {
                -800.0 + 16.0 * (half - i) as f64
            };
            let expect = log_expect.exp(); // 0.0 below the f64 floor
            assert!(
                (got[i] - expect).abs() <= 1e-10 * expect.abs().max(1e-300),
                "dip apply row {i}: {} vs {expect}",
                got[i]
            );
        }
        assert!((got[0] - 1.0).abs() < 1e-10, "tail must recover, got {}", got[0]);

        // Mirror for the forward (transpose) recurrence: ratios swapped so
        // the dip is hit going upward in index.
        let y_m: Vec<f64> = (0..n - 1)
            .map(|k| if k < half { (-16.0f64).exp() } else { (16.0f64).exp() })
            .collect();
        let state_m = InverseKernelState::from_arrays(&x, &y_m).unwrap();
        let mut u = vec![0.0; n];
        u[0] = 1.0;
        let got_t = kernel_apply(&state_m, &u, true).unwrap();
        for j in 0..n {
            let log_expect = if j <= half {
                -16.0 * j as f64
            } else {
                -800.0 + 16.0 * (j - half) as f64
            };
            let expect = log_expect.exp();
            assert!(
                (got_t[j] - expect).abs() <= 1e-10 * expect.abs().max(1e-300),
                "dip transpose row {j}: {} vs {expect}",
                got_t[j]
            );
        }
        assert!(
            (got_t[n - 1] - 1.0).abs() < 1e-10,
            "transpose tail must recover, got {}",
            got_t[n - 1]
        );
    }

    #[test]
    fn overflow_is_reported_not_hidden() {
        // A long run of ratio e^10 makes K(0, n-1) ≈ e^{1000}: the apply
        // must fail loudly rather than return inf.
        let n = 102;
        let x = vec![1.0; n];
        let y = vec![(10.0f64).exp(); n - 1];
        let state = InverseKernelState::from_arrays(&x, &y).unwrap();
        let v = vec![1.0; n];
        match kernel_apply(&state, &v, true) {
            Err(SpectraError::NonFinite { log_magnitude }) => {
                assert!(log_magnitude > 709.0);
            }
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn zero_y_decouples_blocks() {
        // y_2 = 0 splits the kernel into two independent triangular blocks.
        let x = [1.0, 2.0, 4.0, 0.5, 0.25];
        let y = [1.0, 1.0, 0.0, 1.0];
        let state = InverseKernelState::from_arrays(&x, &y).unwrap();
        assert_eq!(state.entry(0, 3), 0.0);
        assert_eq!(state.entry(2, 4), 0.0);
        assert!(state.entry(3, 4) > 0.0);
        let dense = dense_from_entries(&state);
        let v = vec![1.0, -1.0, 0.5, 2.0, -0.25];
        let got = kernel_apply(&state, &v, false).unwrap();
        let expect = dense_apply(&dense, &v);
        for (g, e) in got.iter().zip(&expect) {
            assert!((g - e).abs() < 1e-12, "{g} vs {e}");
        }
    }

    #[test]
    fn input_validation() {
        assert!(matches!(
            InverseKernelState::from_arrays(&[1.0, -1.0], &[0.5]),
            Err(SpectraError::InvalidEntry { kind: "x", .. })
        ));
        assert!(matches!(
            InverseKernelState::from_arrays(&[1.0, 1.0], &[-0.5]),
            Err(SpectraError::InvalidEntry { kind: "y", .. })
        ));
        assert!(matches!(
            InverseKernelState::from_arrays(&[1.0, 1.0], &[0.5, 0.5]),
            Err(SpectraError::DimensionMismatch { .. })
        ));
        let state = InverseKernelState::from_arrays(&[1.0, 1.0], &[0.5]).unwrap();
        assert!(matches!(
            kernel_apply(&state, &[1.0], false),
            Err(SpectraError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn fast_and_slow_paths_agree_where_both_apply() {
        // Exercise the Acc slow path explicitly by renormalizing mid-range:
        // start an accumulator in slow mode and verify adds agree with
        // plain arithmetic.
        let mut fast = Acc::zero();
        let mut slow = Acc { s: 1e-140, c: 0.0 };
        slow.renorm(); // pushes into (s, c≠0) representation
        slow.mul(1e140); // back to O(1) magnitudes, still slow-path
        fast.add(1.0);
        slow.add(1.0 - 1.0); // no-op to keep states comparable
        let seq = [0.25, -3.5, 12.0, -0.125, 7.75];
        let mut plain = 1.0;
        for &t in &seq {
            fast.add(t);
            slow.add(t);
            plain += t;
        }
        assert_eq!(fast.value().unwrap(), plain);
        assert!((slow.value().unwrap() - plain).abs() < 1e-12 * plain.abs());
    }
}
