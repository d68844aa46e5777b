use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use super::{LinalgError, HERMITIAN_DEFECT_TOL};

/// Dense complex matrix of dimension `n x n`, stored row-major.
///
/// Entries are checked to be finite on construction from external data;
/// arithmetic between matrices of mismatched dimension panics (that is a
/// programming error, not an input error).
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix({}x{})", self.n, self.n)?;
        for r in 0..self.n {
            let row: Vec<String> = (0..self.n)
                .map(|c| format!("{:+.4e}{:+.4e}i", self[(r, c)].re, self[(r, c)].im))
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl CMatrix {
    /// Zero matrix of dimension `n`.
    pub fn zeros(n: usize) -> Self {
        assert!(n > 0, "matrix dimension must be positive");
        CMatrix {
            n,
            data: vec![Complex64::ZERO; n * n],
        }
    }

    /// Identity matrix of dimension `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex64::ONE;
        }
        m
    }

    /// Build from row-major nested data, validating finiteness.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self, LinalgError> {
        let n = rows.len();
        assert!(n > 0, "matrix dimension must be positive");
        let mut m = Self::zeros(n);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(LinalgError::DimensionMismatch {
                    left: n,
                    right: row.len(),
                });
            }
            for (c, &z) in row.iter().enumerate() {
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(LinalgError::NonFinite { row: r, col: c });
                }
                m[(r, c)] = z;
            }
        }
        Ok(m)
    }

    /// Build by evaluating `f(row, col)` (no finiteness check; internal use).
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(n);
        for r in 0..n {
            for c in 0..n {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    /// Real diagonal matrix with the given entries.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self::from_fn(diag.len(), |r, c| {
            if r == c {
                Complex64::new(diag[r], 0.0)
            } else {
                Complex64::ZERO
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Conjugate transpose `M*`.
    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.n, |r, c| self[(c, r)].conj())
    }

    /// `M + M*` — the Hermitian part in this crate's convention (the full
    /// sum, not the half-sum), exactly Hermitian by construction.
    pub fn hermitian_part(&self) -> HermitianMatrix {
        let s = CMatrix::from_fn(self.n, |r, c| self[(r, c)] + self[(c, r)].conj());
        HermitianMatrix { defect: 0.0, m: s }
    }

    /// Sum of the diagonal entries.
    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    /// Frobenius norm.
    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry modulus.
    pub fn norm_max(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: Complex64) -> CMatrix {
        CMatrix {
            n: self.n,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_re(&self, s: f64) -> CMatrix {
        self.scale(Complex64::new(s, 0.0))
    }

    /// Matrix-vector product `M x`.
    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n, "vector length must match dimension");
        let mut y = vec![Complex64::ZERO; self.n];
        for r in 0..self.n {
            let mut acc = Complex64::ZERO;
            for c in 0..self.n {
                acc += self[(r, c)] * x[c];
            }
            y[r] = acc;
        }
        y
    }

    /// Determinant via LU with partial pivoting; singular matrices give a
    /// result on the order of round-off.
    pub fn determinant(&self) -> Complex64 {
        super::lu::LuFactors::new(self).determinant()
    }

    /// Inverse guarded by a condition-number cap (Frobenius condition
    /// estimate `‖M‖_F ‖M⁻¹‖_F`). Refuses rather than returning garbage:
    /// downstream cone logic must not proceed on an unreliable inverse.
    pub fn inverse(&self, cond_cap: f64) -> Result<CMatrix, LinalgError> {
        let lu = super::lu::LuFactors::new(self);
        let inv = lu.inverse().ok_or(LinalgError::IllConditioned {
            cond: f64::INFINITY,
            cap: cond_cap,
        })?;
        let cond = self.norm_fro() * inv.norm_fro();
        if !cond.is_finite() || cond > cond_cap {
            return Err(LinalgError::IllConditioned { cond, cap: cond_cap });
        }
        Ok(inv)
    }

    /// Condition estimate `‖M‖_F ‖M⁻¹‖_F` (infinite when singular).
    pub fn cond_estimate(&self) -> f64 {
        match super::lu::LuFactors::new(self).inverse() {
            Some(inv) => self.norm_fro() * inv.norm_fro(),
            None => f64::INFINITY,
        }
    }

    /// Flatten column-major into a state vector (the integrator convention
    /// for matrix-valued ODEs).
    pub fn flatten(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.n * self.n);
        for c in 0..self.n {
            for r in 0..self.n {
                out.push(self[(r, c)]);
            }
        }
        out
    }

    /// Rebuild from a column-major state vector.
    pub fn unflatten(n: usize, flat: &[Complex64]) -> CMatrix {
        assert_eq!(flat.len(), n * n, "flattened length must be n^2");
        CMatrix::from_fn(n, |r, c| flat[c * n + r])
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.n + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.n + c]
    }
}

macro_rules! check_dims {
    ($a:expr, $b:expr) => {
        assert_eq!(
            $a.n, $b.n,
            "matrix dimensions must agree ({} vs {})",
            $a.n, $b.n
        );
    };
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        check_dims!(self, rhs);
        CMatrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        check_dims!(self, rhs);
        CMatrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        CMatrix {
            n: self.n,
            data: self.data.iter().map(|a| -a).collect(),
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        check_dims!(self, rhs);
        let n = self.n;
        let mut out = CMatrix::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self[(r, k)];
                if a == Complex64::ZERO {
                    continue;
                }
                for c in 0..n {
                    out[(r, c)] += a * rhs[(k, c)];
                }
            }
        }
        out
    }
}

/// A matrix certified Hermitian. The constructor symmetrizes via
/// `(M + M*)/2` and records the pre-symmetrization defect, so drift from
/// ODE integration cannot silently break the Hermitian preconditions of
/// the eigenvalue solver.
#[derive(Clone, Debug)]
pub struct HermitianMatrix {
    defect: f64,
    m: CMatrix,
}

impl HermitianMatrix {
    /// Symmetrize `M` to `(M + M*)/2`, recording `‖M − M*‖_F` as the defect.
    pub fn symmetrize(m: &CMatrix) -> Self {
        let defect = (m - &m.adjoint()).norm_fro();
        let sym = CMatrix::from_fn(m.dim(), |r, c| (m[(r, c)] + m[(c, r)].conj()).scale(0.5));
        HermitianMatrix { defect, m: sym }
    }

    /// Symmetrize, but fail when the defect exceeds the crate-wide
    /// relative tolerance — the input was not meaningfully Hermitian.
    pub fn try_new(m: &CMatrix) -> Result<Self, LinalgError> {
        let h = Self::symmetrize(m);
        if h.defect <= HERMITIAN_DEFECT_TOL * 1.0f64.max(h.m.norm_fro()) {
            Ok(h)
        } else {
            Err(LinalgError::NotHermitian { defect: h.defect })
        }
    }

    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    /// `‖M − M*‖_F` of the matrix this was built from.
    pub fn defect(&self) -> f64 {
        self.defect
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn norm_fro(&self) -> f64 {
        self.m.norm_fro()
    }

    /// All eigenvalues (ascending) with the residual defect.
    pub fn eigenvalues(&self) -> Result<super::EigenResult, LinalgError> {
        super::eigen::hermitian_eigenvalues(self)
    }

    /// Least eigenvalue.
    pub fn min_eigenvalue(&self) -> Result<f64, LinalgError> {
        Ok(self.eigenvalues()?.min())
    }

    /// Nonnegative definiteness up to `tol` relative to
    /// `max(1, ‖H‖_F)`.
    pub fn is_psd(&self, tol: f64) -> Result<bool, LinalgError> {
        assert!(tol >= 0.0, "tolerance must be nonnegative");
        let lambda = self.min_eigenvalue()?;
        Ok(lambda >= -tol * 1.0f64.max(self.norm_fro()))
    }

    /// Determinant (real for a Hermitian matrix; the imaginary round-off
    /// part is dropped).
    pub fn determinant_re(&self) -> f64 {
        self.m.determinant().re
    }
}

impl std::ops::Index<(usize, usize)> for HermitianMatrix {
    type Output = Complex64;
    fn index(&self, idx: (usize, usize)) -> &Complex64 {
        &self.m[idx]
    }
}
