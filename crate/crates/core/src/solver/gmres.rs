//! Restarted GMRES with right preconditioning and an optional diagonal
//! residual weighting.

use crate::error::{Error, Result};
use crate::fem::CsrMatrix;
use crate::scalar::{norm2, Real};

use super::precond::Preconditioner;

#[derive(Debug, Clone, Copy)]
pub struct GmresOptions<T> {
    pub tol: T,
    pub restart: usize,
    pub max_iter: usize,
}

impl<T: Real> Default for GmresOptions<T> {
    fn default() -> Self {
        Self { tol: T::lit(1e-8), restart: 100, max_iter: 2000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresStats<T> {
    pub iterations: usize,
    /// Final weighted residual relative to the weighted right-hand side.
    pub relative_residual: T,
}

/// Solve `A x = b` starting from the given `x`. With `weights = Some(w)` the
/// residual norm minimised and tested is `|diag(w) (b - A x)|`.
pub fn gmres<T: Real>(
    a: &CsrMatrix<T>,
    b: &[T],
    x: &mut [T],
    precond: &dyn Preconditioner<T>,
    weights: Option<&[T]>,
    opts: &GmresOptions<T>,
) -> Result<GmresStats<T>> {
    let n = b.len();
    assert_eq!(a.n_rows(), n);
    assert_eq!(x.len(), n);
    let weigh = |v: &mut [T]| {
        if let Some(w) = weights {
            for (vi, &wi) in v.iter_mut().zip(w) {
                *vi *= wi;
            }
        }
    };
    let mut wb = b.to_vec();
    weigh(&mut wb);
    let bnorm = norm2(&wb);
    if bnorm == T::zero() {
        x.iter_mut().for_each(|v| *v = T::zero());
        return Ok(GmresStats { iterations: 0, relative_residual: T::zero() });
    }
    let m = opts.restart.max(1);
    let mut total = 0usize;
    let mut tmp = vec![T::zero(); n];
    let mut z = vec![T::zero(); n];

    loop {
        // r = W (b - A x)
        a.spmv(x, &mut tmp);
        let mut r: Vec<T> = b.iter().zip(&tmp).map(|(&bi, &ai)| bi - ai).collect();
        weigh(&mut r);
        let beta = norm2(&r);
        if beta <= opts.tol * bnorm {
            return Ok(GmresStats { iterations: total, relative_residual: beta / bnorm });
        }
        if total >= opts.max_iter {
            return Err(Error::LinearSolve { iterations: total, residual: (beta / bnorm).to_f64_lossy() });
        }
        let mut v: Vec<Vec<T>> = Vec::with_capacity(m + 1);
        v.push(r.iter().map(|&ri| ri / beta).collect());
        let mut h = vec![vec![T::zero(); m]; m + 1];
        let mut cs = vec![T::zero(); m];
        let mut sn = vec![T::zero(); m];
        let mut g = vec![T::zero(); m + 1];
        g[0] = beta;
        let mut k_used = 0;
        let mut converged = false;
        for j in 0..m {
            // w = W A M^{-1} v_j
            precond.apply(&v[j], &mut z);
            a.spmv(&z, &mut tmp);
            weigh(&mut tmp);
            let mut w = tmp.clone();
            for (i, vi) in v.iter().enumerate() {
                let hij = vi.iter().zip(&w).map(|(&p, &q)| p * q).sum::<T>();
                h[i][j] = hij;
                for (wk, &vk) in w.iter_mut().zip(vi) {
                    *wk -= hij * vk;
                }
            }
            let hn = norm2(&w);
            h[j + 1][j] = hn;
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let denom = (h[j][j] * h[j][j] + h[j + 1][j] * h[j + 1][j]).sqrt();
            if denom == T::zero() {
                return Err(Error::LinearSolve { iterations: total, residual: (g[j].abs() / bnorm).to_f64_lossy() });
            }
            cs[j] = h[j][j] / denom;
            sn[j] = h[j + 1][j] / denom;
            h[j][j] = denom;
            h[j + 1][j] = T::zero();
            g[j + 1] = -sn[j] * g[j];
            g[j] = cs[j] * g[j];
            total += 1;
            k_used = j + 1;
            if g[j + 1].abs() <= opts.tol * bnorm || hn == T::zero() {
                converged = true;
                break;
            }
            if total >= opts.max_iter {
                break;
            }
            v.push(w.iter().map(|&wi| wi / hn).collect());
        }
        // back substitution and update x += M^{-1} V y
        let mut y = vec![T::zero(); k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for l in i + 1..k_used {
                s -= h[i][l] * y[l];
            }
            y[i] = s / h[i][i];
        }
        let mut dy = vec![T::zero(); n];
        for (l, &yl) in y.iter().enumerate() {
            for (d, &vl) in dy.iter_mut().zip(&v[l]) {
                *d += yl * vl;
            }
        }
        precond.apply(&dy, &mut z);
        for (xi, &zi) in x.iter_mut().zip(&z) {
            *xi += zi;
        }
        if converged {
            a.spmv(x, &mut tmp);
            let mut r: Vec<T> = b.iter().zip(&tmp).map(|(&bi, &ai)| bi - ai).collect();
            weigh(&mut r);
            let rel = norm2(&r) / bnorm;
            // guard against loss of orthogonality: accept a small excess
            if rel <= opts.tol * T::lit(10.0) {
                return Ok(GmresStats { iterations: total, relative_residual: rel });
            }
        }
    }
}
