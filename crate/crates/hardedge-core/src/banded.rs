//! Symmetric banded matrices.
//!
//! Everything in this crate that touches matrices of size `n` lives inside a
//! narrow band: the tridiagonal `T = B Bᵀ` itself, its powers `T^m` (bandwidth
//! `m`), and the Hessian of the Gibbs energy (bandwidth `2d` in the
//! interleaved coordinate order).  This module provides the one storage type
//! they all share, plus the two kernels the rest of the crate needs:
//! multiplication of a banded matrix by a symmetric tridiagonal one (to build
//! the powers `T, T², …, T^d` in `O(n·d²)` total) and a banded Cholesky
//! factorization with forward/back substitution (the damped-Newton solve).
//!
//! Storage is by diagonals: `bands[b][i]` holds the entry `A[i, i + b]` for
//! offsets `b = 0..=half_bandwidth`.  Only the upper triangle is stored; the
//! matrix is symmetric by construction.

/// A symmetric matrix with entries confined to `|i - j| <= half_bandwidth`.
#[derive(Clone, Debug)]
pub struct SymBanded {
    n: usize,
    half_bandwidth: usize,
    /// `bands[b]` has length `n - b` and holds the diagonal at offset `b`.
    bands: Vec<Vec<f64>>,
}

impl SymBanded {
    /// A zero matrix of size `n` with the given half-bandwidth.
    pub fn zeros(n: usize, half_bandwidth: usize) -> Self {
        assert!(n > 0, "empty banded matrix");
        let hb = half_bandwidth.min(n - 1);
        let bands = (0..=hb).map(|b| vec![0.0; n - b]).collect();
        SymBanded {
            n,
            half_bandwidth: hb,
            bands,
        }
    }

    /// The symmetric tridiagonal matrix with the given diagonal and
    /// subdiagonal (`off.len() == diag.len() - 1`).
    pub fn tridiagonal(diag: &[f64], off: &[f64]) -> Self {
        assert_eq!(off.len() + 1, diag.len(), "band length mismatch");
        let mut t = SymBanded::zeros(diag.len(), if diag.len() > 1 { 1 } else { 0 });
        t.bands[0].copy_from_slice(diag);
        if diag.len() > 1 {
            t.bands[1].copy_from_slice(off);
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn half_bandwidth(&self) -> usize {
        self.half_bandwidth
    }

    /// Entry `A[i, j]`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        let b = hi - lo;
        if b > self.half_bandwidth {
            0.0
        } else {
            self.bands[b][lo]
        }
    }

    /// Set entry `A[i, j]` (and its mirror).  Panics outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        self.bands[hi - lo][lo] = v;
    }

    /// Add `v` to entry `A[i, j]` (and its mirror).  Panics outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        self.bands[hi - lo][lo] += v;
    }

    pub fn trace(&self) -> f64 {
        self.bands[0].iter().sum()
    }

    /// `y = A x` (used by tests and by residual checks; not a hot path).
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for (b, band) in self.bands.iter().enumerate() {
            if b == 0 {
                for i in 0..self.n {
                    y[i] += band[i] * x[i];
                }
            } else {
                for i in 0..self.n - b {
                    y[i] += band[i] * x[i + b];
                    y[i + b] += band[i] * x[i];
                }
            }
        }
        y
    }

    /// Product with a symmetric tridiagonal matrix given by `diag`/`off`.
    ///
    /// The result half-bandwidth grows by one.  Both operands must be
    /// polynomials in the same tridiagonal matrix for the product to be
    /// symmetric; that is the only way this routine is used (building powers
    /// `T^{m+1} = T^m · T`), and it computes the upper triangle of the
    /// product directly.
    pub fn mul_tridiagonal(&self, diag: &[f64], off: &[f64]) -> SymBanded {
        assert_eq!(diag.len(), self.n);
        assert_eq!(off.len() + 1, diag.len());
        let mut out = SymBanded::zeros(self.n, self.half_bandwidth + 1);
        for b in 0..=out.half_bandwidth {
            for i in 0..self.n - b {
                let j = i + b;
                // (A·T)[i, j] = A[i, j-1]·off[j-1] + A[i, j]·diag[j] + A[i, j+1]·off[j]
                let mut s = self.get(i, j) * diag[j];
                if j > 0 {
                    s += self.get(i, j - 1) * off[j - 1];
                }
                if j + 1 < self.n {
                    s += self.get(i, j + 1) * off[j];
                }
                out.bands[b][i] = s;
            }
        }
        out
    }

    /// Powers `[T⁰ᵉ…] = [T, T², …, T^p]` of a symmetric tridiagonal matrix.
    ///
    /// Index `m-1` of the result holds `T^m`.  Total cost `O(n·p²)`.
    pub fn tridiagonal_powers(diag: &[f64], off: &[f64], p: usize) -> Vec<SymBanded> {
        assert!(p >= 1);
        let t = SymBanded::tridiagonal(diag, off);
        let mut powers = Vec::with_capacity(p);
        powers.push(t);
        for _ in 1..p {
            let next = powers.last().unwrap().mul_tridiagonal(diag, off);
            powers.push(next);
        }
        powers
    }

    /// Cholesky factorization `A = L Lᵀ` with `L` lower banded.
    ///
    /// Returns `None` if a pivot is not strictly positive (the matrix is not
    /// positive definite to working precision).
    pub fn cholesky(&self) -> Option<BandedCholesky> {
        let n = self.n;
        let hb = self.half_bandwidth;
        // factor[b][j] holds L[j + b, j] (lower storage by sub-diagonals).
        let mut factor: Vec<Vec<f64>> = (0..=hb).map(|b| vec![0.0; n - b]).collect();
        for j in 0..n {
            // L[j,j]² = A[j,j] - Σ_{k<j} L[j,k]²
            let mut s = self.bands[0][j];
            let kmin = j.saturating_sub(hb);
            for k in kmin..j {
                let l = factor[j - k][k];
                s -= l * l;
            }
            if !(s > 0.0) || !s.is_finite() {
                return None;
            }
            let ljj = s.sqrt();
            factor[0][j] = ljj;
            let imax = (j + hb).min(n - 1);
            for i in j + 1..=imax {
                // L[i,j] = (A[i,j] - Σ_k L[i,k]·L[j,k]) / L[j,j]
                let mut s = self.get(i, j);
                let kmin = i.saturating_sub(hb);
                for k in kmin..j {
                    s -= factor[i - k][k] * factor[j - k][k];
                }
                factor[i - j][j] = s / ljj;
            }
        }
        Some(BandedCholesky { n, hb, factor })
    }
}

/// Lower-banded Cholesky factor of a positive-definite [`SymBanded`] matrix.
pub struct BandedCholesky {
    n: usize,
    hb: usize,
    /// `factor[b][j]` holds `L[j + b, j]`.
    factor: Vec<Vec<f64>>,
}

impl BandedCholesky {
    /// Solve `A x = b` via forward and back substitution.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut y = b.to_vec();
        // L y = b
        for j in 0..self.n {
            y[j] /= self.factor[0][j];
            let imax = (j + self.hb).min(self.n - 1);
            for i in j + 1..=imax {
                y[i] -= self.factor[i - j][j] * y[j];
            }
        }
        // Lᵀ x = y
        for j in (0..self.n).rev() {
            let imax = (j + self.hb).min(self.n - 1);
            for i in j + 1..=imax {
                y[j] -= self.factor[i - j][j] * y[i];
            }
            y[j] /= self.factor[0][j];
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(a: &SymBanded) -> Vec<Vec<f64>> {
        (0..a.dim())
            .map(|i| (0..a.dim()).map(|j| a.get(i, j)).collect())
            .collect()
    }

    #[test]
    fn tridiagonal_powers_match_dense_multiplication() {
        let diag = [2.0, 3.0, 1.0, 4.0, 2.5];
        let off = [-1.0, 0.5, -0.25, 1.5];
        let powers = SymBanded::tridiagonal_powers(&diag, &off, 4);
        let n = diag.len();
        let t = dense(&powers[0]);
        // Dense reference powers.
        let mut ref_pow = t.clone();
        for m in 2..=4 {
            let mut next = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in 0..n {
                    next[i][j] = (0..n).map(|k| ref_pow[i][k] * t[k][j]).sum();
                }
            }
            ref_pow = next;
            let got = dense(&powers[m - 1]);
            for i in 0..n {
                for j in 0..n {
                    assert!(
                        (got[i][j] - ref_pow[i][j]).abs() <= 1e-12 * ref_pow[i][j].abs().max(1.0),
                        "T^{m} entry ({i},{j}): banded {} vs dense {}",
                        got[i][j],
                        ref_pow[i][j]
                    );
                }
            }
        }
    }

    #[test]
    fn banded_entries_vanish_outside_bandwidth() {
        let diag = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let off = [0.5; 5];
        let powers = SymBanded::tridiagonal_powers(&diag, &off, 3);
        // T² has half-bandwidth 2: entries at distance 3 are exactly zero.
        assert_eq!(powers[1].get(0, 3), 0.0);
        assert_eq!(powers[1].half_bandwidth(), 2);
        assert_eq!(powers[2].half_bandwidth(), 3);
    }

    #[test]
    fn cholesky_solves_banded_system() {
        // Diagonally dominant pentadiagonal matrix.
        let n = 40;
        let mut a = SymBanded::zeros(n, 2);
        for i in 0..n {
            a.set(i, i, 4.0 + (i as f64) * 0.1);
            if i + 1 < n {
                a.set(i, i + 1, -1.0);
            }
            if i + 2 < n {
                a.set(i, i + 2, 0.3);
            }
        }
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let chol = a.cholesky().expect("positive definite");
        let x = chol.solve(&b);
        let r = a.matvec(&x);
        for i in 0..n {
            assert!((r[i] - b[i]).abs() < 1e-12, "residual at {i}");
        }
    }

    #[test]
    fn cholesky_rejects_indefinite_matrix() {
        let mut a = SymBanded::zeros(3, 1);
        a.set(0, 0, 1.0);
        a.set(1, 1, -2.0);
        a.set(2, 2, 1.0);
        assert!(a.cholesky().is_none());
    }
}
