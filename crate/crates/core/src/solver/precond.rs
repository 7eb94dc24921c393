//! Block-diagonal preconditioners: zero-fill incomplete LU, sparse direct
//! LU, or diagonal scaling per diagonal block.

use std::ops::Range;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};
use crate::fem::CsrMatrix;
use crate::params::PrecondKind;
use crate::scalar::Real;

pub trait Preconditioner<T>: Sync {
    /// `z = M^{-1} r`.
    fn apply(&self, r: &[T], z: &mut [T]);
}

pub struct Identity;

impl<T: Real> Preconditioner<T> for Identity {
    fn apply(&self, r: &[T], z: &mut [T]) {
        z.copy_from_slice(r);
    }
}

#[derive(Debug, Clone)]
pub struct Jacobi<T> {
    inv_diag: Vec<T>,
}

impl<T: Real> Jacobi<T> {
    /// Zero or non-finite diagonal entries are replaced by one.
    pub fn new(a: &CsrMatrix<T>) -> Self {
        let inv_diag = a
            .diagonal()
            .into_iter()
            .map(|d| if d != T::zero() && d.is_finite() { T::one() / d } else { T::one() })
            .collect();
        Self { inv_diag }
    }
}

impl<T: Real> Preconditioner<T> for Jacobi<T> {
    fn apply(&self, r: &[T], z: &mut [T]) {
        for ((zi, &ri), &d) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *zi = ri * d;
        }
    }
}

#[derive(Debug, Clone)]
pub struct Ilu0<T> {
    lu: CsrMatrix<T>,
    diag_pos: Vec<usize>,
}

impl<T: Real> Ilu0<T> {
    pub fn new(a: &CsrMatrix<T>) -> Result<Self> {
        let n = a.n_rows();
        let mut lu = a.clone();
        let row_ptr = lu.row_ptr().to_vec();
        let cols = lu.col_idx().to_vec();
        let mut diag_pos = vec![usize::MAX; n];
        for i in 0..n {
            for k in row_ptr[i]..row_ptr[i + 1] {
                if cols[k] == i {
                    diag_pos[i] = k;
                }
            }
            if diag_pos[i] == usize::MAX {
                return Err(Error::Invalid(format!("ILU(0): row {i} has no diagonal entry")));
            }
        }
        let vals = lu.values_mut();
        let mut where_in_row = vec![usize::MAX; n];
        for i in 0..n {
            for k in row_ptr[i]..row_ptr[i + 1] {
                where_in_row[cols[k]] = k;
            }
            for p in row_ptr[i]..row_ptr[i + 1] {
                let k = cols[p];
                if k >= i {
                    break;
                }
                let pivot = vals[diag_pos[k]];
                let lik = vals[p] / pivot;
                vals[p] = lik;
                for q in diag_pos[k] + 1..row_ptr[k + 1] {
                    let pos = where_in_row[cols[q]];
                    if pos != usize::MAX {
                        let v = vals[q];
                        vals[pos] -= lik * v;
                    }
                }
            }
            let d = vals[diag_pos[i]];
            if d == T::zero() || !d.is_finite() {
                return Err(Error::Invalid(format!("ILU(0): zero pivot in row {i}")));
            }
            for k in row_ptr[i]..row_ptr[i + 1] {
                where_in_row[cols[k]] = usize::MAX;
            }
        }
        Ok(Self { lu, diag_pos })
    }
}

impl<T: Real> Preconditioner<T> for Ilu0<T> {
    fn apply(&self, r: &[T], z: &mut [T]) {
        let n = r.len();
        let rp = self.lu.row_ptr();
        let ci = self.lu.col_idx();
        let v = self.lu.values();
        for i in 0..n {
            let mut s = r[i];
            for k in rp[i]..self.diag_pos[i] {
                s -= v[k] * z[ci[k]];
            }
            z[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in self.diag_pos[i] + 1..rp[i + 1] {
                s -= v[k] * z[ci[k]];
            }
            z[i] = s / v[self.diag_pos[i]];
        }
    }
}

/// Sparse LU with partial pivoting, computed in double precision.
pub struct DirectLu {
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
    n: usize,
}

impl DirectLu {
    pub fn new<T: Real>(a: &CsrMatrix<T>) -> Result<Self> {
        let n = a.n_rows();
        let mut trips = Vec::with_capacity(a.nnz());
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                trips.push(Triplet::new(i, j, v.to_f64_lossy()));
            }
        }
        let m = SparseColMat::<usize, f64>::try_new_from_triplets(n, a.n_cols(), &trips)
            .map_err(|e| Error::Invalid(format!("sparse LU input: {e:?}")))?;
        let lu = m.sp_lu().map_err(|e| Error::Invalid(format!("sparse LU: {e:?}")))?;
        Ok(Self { lu, n })
    }

    pub fn solve<T: Real>(&self, r: &[T], z: &mut [T]) {
        let mut rhs = faer::Mat::<f64>::from_fn(self.n, 1, |i, _| r[i].to_f64_lossy());
        self.lu.solve_in_place(rhs.as_mut());
        for (i, zi) in z.iter_mut().enumerate() {
            *zi = T::lit(rhs[(i, 0)]);
        }
    }
}

pub enum BlockSolver<T> {
    Ilu0(Ilu0<T>),
    Jacobi(Jacobi<T>),
    Direct(DirectLu),
}

impl<T: Real> BlockSolver<T> {
    fn build(block: &CsrMatrix<T>, kind: PrecondKind) -> (Self, bool) {
        let attempt = match kind {
            PrecondKind::Ilu0 => Ilu0::new(block).map(BlockSolver::Ilu0),
            PrecondKind::Direct => DirectLu::new(block).map(BlockSolver::Direct),
            PrecondKind::Jacobi => return (BlockSolver::Jacobi(Jacobi::new(block)), false),
        };
        match attempt {
            Ok(s) => (s, false),
            Err(e) => {
                log::warn!("preconditioner factorization failed ({e}); falling back to Jacobi scaling");
                (BlockSolver::Jacobi(Jacobi::new(block)), true)
            }
        }
    }

    fn apply(&self, r: &[T], z: &mut [T]) {
        match self {
            BlockSolver::Ilu0(p) => p.apply(r, z),
            BlockSolver::Jacobi(p) => p.apply(r, z),
            BlockSolver::Direct(p) => p.solve(r, z),
        }
    }
}

/// `diag(M_1^{-1}, ..., M_k^{-1})` over contiguous diagonal blocks.
pub struct BlockDiagonal<T> {
    blocks: Vec<(Range<usize>, BlockSolver<T>)>,
    fallbacks: usize,
}

impl<T: Real> BlockDiagonal<T> {
    pub fn new(a: &CsrMatrix<T>, ranges: &[Range<usize>], kind: PrecondKind) -> Self {
        let mut fallbacks = 0;
        let blocks = ranges
            .iter()
            .filter(|r| !r.is_empty())
            .map(|r| {
                let (s, fell) = BlockSolver::build(&a.block(r.clone(), r.clone()), kind);
                fallbacks += usize::from(fell);
                (r.clone(), s)
            })
            .collect();
        Self { blocks, fallbacks }
    }

    /// Number of blocks that fell back to diagonal scaling.
    pub fn fallbacks(&self) -> usize {
        self.fallbacks
    }
}

impl<T: Real> Preconditioner<T> for BlockDiagonal<T> {
    fn apply(&self, r: &[T], z: &mut [T]) {
        for (range, s) in &self.blocks {
            s.apply(&r[range.clone()], &mut z[range.clone()]);
        }
    }
}

/// Exact solve of a block lower-triangular system `[[A, 0], [C, D]]`
/// split after `n1` rows, by forward substitution with direct LU blocks.
pub fn solve_block_triangular<T: Real>(a: &CsrMatrix<T>, b: &[T], n1: usize) -> Result<Vec<T>> {
    let n = a.n_rows();
    let mut x = vec![T::zero(); n];
    if n1 > 0 {
        DirectLu::new(&a.block(0..n1, 0..n1))?.solve(&b[..n1], &mut x[..n1]);
    }
    if n1 < n {
        let c = a.block(n1..n, 0..n1);
        let cx = c.mul_vec(&x[..n1]);
        let rhs: Vec<T> = b[n1..].iter().zip(&cx).map(|(&bi, &ci)| bi - ci).collect();
        let (_, tail) = x.split_at_mut(n1);
        DirectLu::new(&a.block(n1..n, n1..n))?.solve(&rhs, tail);
    }
    Ok(x)
}
