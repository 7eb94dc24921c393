//! Compressed sparse row storage.

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    /// Zero matrix with the given sparsity pattern. Column lists are sorted
    /// and deduplicated.
    pub fn from_pattern(n_cols: usize, mut rows: Vec<Vec<usize>>) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        for r in rows.iter_mut() {
            r.sort_unstable();
            r.dedup();
            col_idx.extend_from_slice(r);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        Self { n_rows: rows.len(), n_cols, row_ptr, col_idx, values: vec![T::zero(); nnz] }
    }

    /// Build from triplets; duplicates are summed.
    pub fn from_triplets(n_rows: usize, n_cols: usize, triplets: &[(usize, usize, T)]) -> Self {
        let mut rows = vec![Vec::new(); n_rows];
        for &(i, j, _) in triplets {
            rows[i].push(j);
        }
        let mut m = Self::from_pattern(n_cols, rows);
        for &(i, j, v) in triplets {
            m.add(i, j, v);
        }
        m
    }

    pub fn identity(n: usize) -> Self {
        let trips: Vec<_> = (0..n).map(|i| (i, i, T::one())).collect();
        Self::from_triplets(n, n, &trips)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].binary_search(&j).ok().map(|k| r.start + k)
    }

    /// Add to an entry that must be part of the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let k = self.position(i, j).unwrap_or_else(|| panic!("entry ({i}, {j}) outside sparsity pattern"));
        self.values[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.position(i, j).map_or(T::zero(), |k| self.values[k])
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.n_rows).map(|i| self.get(i, i)).collect()
    }

    pub fn spmv(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.n_cols);
        assert_eq!(y.len(), self.n_rows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = T::zero();
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *yi = s;
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n_rows];
        self.spmv(x, &mut y);
        y
    }

    /// Rows `rows` and columns `cols` as a new matrix with shifted indices.
    pub fn block(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Self {
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for i in rows.clone() {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                if cols.contains(&j) {
                    col_idx.push(j - cols.start);
                    values.push(self.values[k]);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self { n_rows: rows.len(), n_cols: cols.len(), row_ptr, col_idx, values }
    }

    /// Replace row `i` by `d * e_i` and drop column `i` from every other
    /// row, returning the removed column entries `(row, value)`.
    pub fn eliminate_symmetric(&mut self, fixed: &[bool]) -> Vec<Vec<(usize, T)>> {
        assert_eq!(fixed.len(), self.n_rows);
        let mut removed = vec![Vec::new(); self.n_cols];
        for i in 0..self.n_rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                if fixed[i] {
                    if j != i {
                        self.values[k] = T::zero();
                    }
                } else if fixed[j] {
                    removed[j].push((i, self.values[k]));
                    self.values[k] = T::zero();
                }
            }
        }
        removed
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut d = vec![vec![T::zero(); self.n_cols]; self.n_rows];
        for (i, row) in d.iter_mut().enumerate() {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                row[self.col_idx[k]] += self.values[k];
            }
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_and_spmv() {
        let m = CsrMatrix::<f64>::from_triplets(3, 3, &[(0, 0, 2.0), (0, 2, 1.0), (1, 1, 3.0), (2, 0, 1.0), (0, 0, 1.0)]);
        assert_eq!(m.nnz(), 4);
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.mul_vec(&[1.0, 1.0, 1.0]), vec![4.0, 3.0, 1.0]);
        let b = m.block(0..2, 1..3);
        assert_eq!(b.to_dense(), vec![vec![0.0, 1.0], vec![3.0, 0.0]]);
    }

    #[test]
    fn symmetric_elimination() {
        let mut m = CsrMatrix::<f64>::from_triplets(2, 2, &[(0, 0, 4.0), (0, 1, 1.0), (1, 0, 2.0), (1, 1, 5.0)]);
        let removed = m.eliminate_symmetric(&[false, true]);
        assert_eq!(m.to_dense(), vec![vec![4.0, 0.0], vec![0.0, 5.0]]);
        assert_eq!(removed[1], vec![(0, 1.0)]);
    }
}
