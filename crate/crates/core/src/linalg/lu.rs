use num_complex::Complex64;

use super::CMatrix;

/// LU factorization with partial pivoting of a square complex matrix.
///
/// Backs `determinant`, `inverse` and the Frobenius condition estimate.
/// Pivot magnitudes are kept so callers can inspect how close to singular
/// the factorization came.
pub struct LuFactors {
    n: usize,
    /// Combined L (unit lower, below diagonal) and U (upper) factors.
    lu: Vec<Complex64>,
    /// Row permutation applied to the input.
    perm: Vec<usize>,
    /// Sign of the permutation: +1 or -1.
    parity: f64,
    /// |u_kk| encountered at each elimination step, in order.
    pivot_magnitudes: Vec<f64>,
    singular: bool,
}

impl LuFactors {
    pub fn new(m: &CMatrix) -> Self {
        let n = m.dim();
        let mut lu: Vec<Complex64> = m.entries().to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut parity = 1.0;
        let mut pivot_magnitudes = Vec::with_capacity(n);
        let mut singular = false;

        let at = |data: &Vec<Complex64>, r: usize, c: usize| data[r * n + c];

        for k in 0..n {
            // Partial pivoting on column k.
            let mut p = k;
            let mut best = at(&lu, k, k).norm();
            for r in (k + 1)..n {
                let v = at(&lu, r, k).norm();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            pivot_magnitudes.push(best);
            if p != k {
                for c in 0..n {
                    lu.swap(k * n + c, p * n + c);
                }
                perm.swap(k, p);
                parity = -parity;
            }
            let pivot = at(&lu, k, k);
            if best == 0.0 {
                singular = true;
                continue;
            }
            for r in (k + 1)..n {
                let factor = at(&lu, r, k) / pivot;
                lu[r * n + k] = factor;
                for c in (k + 1)..n {
                    let sub = factor * at(&lu, k, c);
                    lu[r * n + c] -= sub;
                }
            }
        }

        LuFactors {
            n,
            lu,
            perm,
            parity,
            pivot_magnitudes,
            singular,
        }
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn pivot_magnitudes(&self) -> &[f64] {
        &self.pivot_magnitudes
    }

    /// `det M = parity * prod(u_kk)`.
    pub fn determinant(&self) -> Complex64 {
        let mut det = Complex64::new(self.parity, 0.0);
        for k in 0..self.n {
            det *= self.lu[k * self.n + k];
        }
        det
    }

    /// Solve `M x = b` using the stored factors. Returns `None` when the
    /// factorization hit an exactly zero pivot.
    pub fn solve(&self, b: &[Complex64]) -> Option<Vec<Complex64>> {
        if self.singular {
            return None;
        }
        let n = self.n;
        assert_eq!(b.len(), n);
        // Apply permutation, then forward substitution (L has unit diagonal).
        let mut x: Vec<Complex64> = (0..n).map(|i| b[self.perm[i]]).collect();
        for r in 1..n {
            let mut acc = x[r];
            for c in 0..r {
                acc -= self.lu[r * n + c] * x[c];
            }
            x[r] = acc;
        }
        // Back substitution on U.
        for r in (0..n).rev() {
            let mut acc = x[r];
            for c in (r + 1)..n {
                acc -= self.lu[r * n + c] * x[c];
            }
            x[r] = acc / self.lu[r * n + r];
        }
        Some(x)
    }

    /// Inverse by solving against the identity columns.
    pub fn inverse(&self) -> Option<CMatrix> {
        let n = self.n;
        let mut inv = CMatrix::zeros(n);
        let mut e = vec![Complex64::ZERO; n];
        for c in 0..n {
            e[c] = Complex64::ONE;
            let col = self.solve(&e)?;
            e[c] = Complex64::ZERO;
            if col.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return None;
            }
            for r in 0..n {
                inv[(r, c)] = col[r];
            }
        }
        Some(inv)
    }
}
