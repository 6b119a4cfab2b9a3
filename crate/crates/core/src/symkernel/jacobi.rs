//! Cyclic Jacobi eigensolver for symmetric matrices.
//!
//! All matrix functions in this crate run through a full symmetric
//! eigendecomposition; dimensions are small (n up to ~10), where Jacobi is
//! both accurate and fast, and the same kernel serves every n so timings
//! scale honestly with dimension.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 64;

/// In-place cyclic Jacobi: `a` is destroyed, `v` receives eigenvectors as
/// columns, `w` the eigenvalues sorted ascending (column `j` of `v` pairs
/// with `w[j]`). `v` must be n-by-n and `w` of length n.
pub(crate) fn eig_into(a: &mut DMatrix<f64>, v: &mut DMatrix<f64>, w: &mut [f64]) -> Result<()> {
    let n = a.nrows();
    debug_assert_eq!(a.ncols(), n);
    debug_assert_eq!(v.nrows(), n);
    debug_assert_eq!(w.len(), n);
    v.fill_with_identity();
    if n == 1 {
        w[0] = a[(0, 0)];
        return Ok(());
    }

    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let tol = f64::EPSILON * scale;

    let mut sweep = 0;
    loop {
        let mut off = 0.0;
        for q in 1..n {
            for p in 0..q {
                off += 2.0 * a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        if sweep == MAX_SWEEPS {
            return Err(Error::NumericFailure(format!(
                "Jacobi eigensolver did not converge in {MAX_SWEEPS} sweeps; input was {a}"
            )));
        }
        sweep += 1;

        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let tau = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (tau - (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // a <- Jᵀ a J with J the (p,q) rotation
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                // v <- v J
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    for i in 0..n {
        w[i] = a[(i, i)];
    }
    // selection sort, ascending; no allocation
    for i in 0..n {
        let mut jmin = i;
        for j in i + 1..n {
            if w[j] < w[jmin] {
                jmin = j;
            }
        }
        if jmin != i {
            w.swap(i, jmin);
            v.swap_columns(i, jmin);
        }
    }
    Ok(())
}

/// Reusable buffers for repeated eigensolves of the same dimension.
pub(crate) struct EigenScratch {
    pub a: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub w: Vec<f64>,
}

impl EigenScratch {
    pub fn new(n: usize) -> Self {
        EigenScratch {
            a: DMatrix::zeros(n, n),
            v: DMatrix::zeros(n, n),
            w: vec![0.0; n],
        }
    }

    /// Factor `m`, leaving eigenvectors in `self.v` and ascending
    /// eigenvalues in `self.w`.
    pub fn factor(&mut self, m: &DMatrix<f64>) -> Result<()> {
        self.a.copy_from(m);
        eig_into(&mut self.a, &mut self.v, &mut self.w)
    }
}

/// out = V diag(f(w)) Vᵀ, built entry by entry on the lower triangle and
/// mirrored, so the result is exactly symmetric.
pub(crate) fn apply_spectral_into(
    v: &DMatrix<f64>,
    fw: &[f64],
    out: &mut DMatrix<f64>,
) {
    let n = v.nrows();
    for i in 0..n {
        for j in 0..=i {
            let mut s = 0.0;
            for k in 0..n {
                s += v[(i, k)] * fw[k] * v[(j, k)];
            }
            out[(i, j)] = s;
            out[(j, i)] = s;
        }
    }
}
