use num_complex::Complex64;

use super::{CMatrix, HermitianMatrix, LinalgError, EIGEN_ITER_BUDGET};

/// Eigenvalues of a Hermitian matrix, ascending, with the worst residual
/// `‖Hv − λv‖₂` over all computed pairs.
#[derive(Debug, Clone)]
pub struct EigenResult {
    eigenvalues: Vec<f64>,
    defect: f64,
}

impl EigenResult {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    pub fn defect(&self) -> f64 {
        self.defect
    }
}

/// Full Hermitian eigensolve: Householder reduction to a real tridiagonal
/// form followed by implicit QL with shifts, eigenvectors accumulated so
/// the residual defect can be reported.
pub fn hermitian_eigenvalues(h: &HermitianMatrix) -> Result<EigenResult, LinalgError> {
    let a = h.matrix();
    let n = a.dim();

    let (mut d, mut e, mut v) = tridiagonalize(a);
    ql_implicit(&mut d, &mut e, &mut v)?;

    // Sort ascending, carrying eigenvector columns along.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| d[i]).collect();

    let mut defect = 0.0f64;
    for (slot, &col) in order.iter().enumerate() {
        let vec: Vec<Complex64> = (0..n).map(|r| v[(r, col)]).collect();
        let hv = a.mul_vec(&vec);
        let mut res = 0.0;
        for r in 0..n {
            res += (hv[r] - vec[r] * eigenvalues[slot]).norm_sqr();
        }
        defect = defect.max(res.sqrt());
    }

    Ok(EigenResult { eigenvalues, defect })
}

/// Householder reduction of a Hermitian matrix to real symmetric
/// tridiagonal form. Returns the diagonal `d`, the sub-diagonal `e`
/// (length n, last entry zero) and the complex unitary `V` with
/// `A = V T V*`; the sub-diagonal phases are folded into `V` so that `T`
/// is real with nonnegative off-diagonal.
fn tridiagonalize(a: &CMatrix) -> (Vec<f64>, Vec<f64>, CMatrix) {
    let n = a.dim();
    let mut m = a.clone();
    let mut q = CMatrix::identity(n);

    for k in 0..n.saturating_sub(2) {
        let sub = n - (k + 1);
        let tail_sqr: f64 = ((k + 2)..n).map(|r| m[(r, k)].norm_sqr()).sum();
        if tail_sqr == 0.0 {
            continue; // already tridiagonal in this column
        }
        let xnorm = (m[(k + 1, k)].norm_sqr() + tail_sqr).sqrt();
        let x0 = m[(k + 1, k)];
        let phase = if x0 == Complex64::ZERO {
            Complex64::ONE
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * xnorm;

        // Unit Householder vector w with (I - 2ww*) x = alpha e1.
        let mut w: Vec<Complex64> = ((k + 1)..n).map(|r| m[(r, k)]).collect();
        w[0] -= alpha;
        let wnorm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if wnorm == 0.0 {
            continue;
        }
        for z in w.iter_mut() {
            *z /= wnorm;
        }

        m[(k + 1, k)] = alpha;
        m[(k, k + 1)] = alpha.conj();
        for r in (k + 2)..n {
            m[(r, k)] = Complex64::ZERO;
            m[(k, r)] = Complex64::ZERO;
        }

        // Two-sided update of the trailing block: S <- S - w u* - u w*
        // with p = S w, kappa = w* S w, u = 2 (p - kappa w).
        let mut p = vec![Complex64::ZERO; sub];
        for i in 0..sub {
            let mut acc = Complex64::ZERO;
            for j in 0..sub {
                acc += m[(k + 1 + i, k + 1 + j)] * w[j];
            }
            p[i] = acc;
        }
        let kappa: Complex64 = w.iter().zip(&p).map(|(wi, pi)| wi.conj() * pi).sum();
        let u: Vec<Complex64> = p
            .iter()
            .zip(&w)
            .map(|(pi, wi)| (pi - kappa * wi) * 2.0)
            .collect();
        for i in 0..sub {
            for j in 0..sub {
                let delta = w[i] * u[j].conj() + u[i] * w[j].conj();
                m[(k + 1 + i, k + 1 + j)] -= delta;
            }
        }

        // Accumulate the reflection into Q (columns k+1..n).
        for row in 0..n {
            let mut s = Complex64::ZERO;
            for l in 0..sub {
                s += q[(row, k + 1 + l)] * w[l];
            }
            let s2 = s * 2.0;
            for l in 0..sub {
                let sub_term = s2 * w[l].conj();
                q[(row, k + 1 + l)] -= sub_term;
            }
        }
    }

    // Phase-scale so the sub-diagonal becomes real nonnegative, folding
    // the diagonal unitary into Q.
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut scale = Complex64::ONE;
    for k in 0..n {
        d[k] = m[(k, k)].re;
        if k + 1 < n {
            let beta = m[(k + 1, k)];
            let mag = beta.norm();
            e[k] = mag;
            let phase = if mag == 0.0 { Complex64::ONE } else { beta / mag };
            let next_scale = scale * phase;
            for row in 0..n {
                let scaled = q[(row, k + 1)] * next_scale;
                q[(row, k + 1)] = scaled;
            }
            scale = next_scale;
        }
    }

    (d, e, q)
}

/// Implicit QL with Wilkinson-style shifts on a real symmetric tridiagonal
/// matrix, rotations accumulated into the complex column basis `v`.
/// Budget: `EIGEN_ITER_BUDGET` sweeps per eigenvalue (30n total).
fn ql_implicit(d: &mut [f64], e: &mut [f64], v: &mut CMatrix) -> Result<(), LinalgError> {
    let n = d.len();
    if n == 1 {
        return Ok(());
    }
    let mut total_iter = 0usize;

    for l in 0..n {
        let mut iter = 0usize;
        loop {
            // Look for a negligible sub-diagonal element to split at.
            let mut mm = l;
            while mm < n - 1 {
                let dd = d[mm].abs() + d[mm + 1].abs();
                if e[mm].abs() <= f64::EPSILON * dd {
                    break;
                }
                mm += 1;
            }
            if mm == l {
                break;
            }
            iter += 1;
            total_iter += 1;
            if iter > EIGEN_ITER_BUDGET {
                return Err(LinalgError::ConvergenceFailure {
                    iterations: total_iter,
                });
            }

            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            let sign_r = if g >= 0.0 { r.abs() } else { -r.abs() };
            g = d[mm] - d[l] + e[l] / (g + sign_r);
            let mut s = 1.0f64;
            let mut c = 1.0f64;
            let mut p = 0.0f64;
            let mut underflow = false;

            for i in (l..mm).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[mm] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;

                for row in 0..v.dim() {
                    let fv = v[(row, i + 1)];
                    v[(row, i + 1)] = v[(row, i)] * s + fv * c;
                    v[(row, i)] = v[(row, i)] * c - fv * s;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[mm] = 0.0;
        }
    }
    Ok(())
}
