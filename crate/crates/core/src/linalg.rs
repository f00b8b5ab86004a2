//! Sparse symmetric matrices on the quotient vertex set, with factorizations
//! delegated to faer.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Symmetric sparse matrix stored in full compressed-column form.
#[derive(Clone, Debug)]
pub struct SparseSym {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

pub enum Factor {
    Lu(faer::sparse::linalg::solvers::Lu<usize, f64>),
    Llt(faer::sparse::linalg::solvers::Llt<usize, f64>),
}

impl Factor {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut rhs = Mat::<f64>::from_fn(b.len(), 1, |i, _| b[i]);
        match self {
            Factor::Lu(f) => f.solve_in_place(rhs.as_mut()),
            Factor::Llt(f) => f.solve_in_place(rhs.as_mut()),
        }
        (0..b.len()).map(|i| rhs[(i, 0)]).collect()
    }
}

impl SparseSym {
    /// Builds from `(row, col, value)` entries; duplicates are summed. Both
    /// triangles must be supplied.
    pub fn from_triplets(n: usize, entries: &[(usize, usize, f64)]) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, f64)> = entries.to_vec();
        sorted.sort_by_key(|&(i, j, _)| (j, i));
        let mut col_ptr = vec![0usize; n + 1];
        let mut row_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for &(i, j, v) in &sorted {
            if i >= n || j >= n {
                return Err(Error::Linear(format!("entry ({i}, {j}) outside {n}×{n}")));
            }
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_idx.push(i);
                values.push(v);
                col_ptr[j + 1] += 1;
                last = Some((i, j));
            }
        }
        for j in 0..n {
            col_ptr[j + 1] += col_ptr[j];
        }
        Ok(SparseSym {
            n,
            col_ptr,
            row_idx,
            values,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates `(row, col, value)` in column order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |j| {
            (self.col_ptr[j]..self.col_ptr[j + 1]).map(move |p| (self.row_idx[p], j, self.values[p]))
        })
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for j in 0..self.n {
            let xj = x[j];
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                y[self.row_idx[p]] += self.values[p] * xj;
            }
        }
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for (i, j, v) in self.entries() {
            if i == j {
                d[i] += v;
            }
        }
        d
    }

    /// `self + diag(d)`.
    pub fn plus_diagonal(&self, d: &[f64]) -> SparseSym {
        let mut out = self.clone();
        let mut seen = vec![false; self.n];
        for j in 0..self.n {
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                if self.row_idx[p] == j {
                    out.values[p] += d[j];
                    seen[j] = true;
                }
            }
        }
        if seen.iter().all(|&s| s) {
            return out;
        }
        let mut entries: Vec<(usize, usize, f64)> = self.entries().collect();
        entries.extend((0..self.n).map(|i| (i, i, d[i])));
        SparseSym::from_triplets(self.n, &entries).expect("indices already validated")
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let triplets: Vec<Triplet<usize, usize, f64>> =
            self.entries().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        SparseColMat::try_new_from_triplets(self.n, self.n, &triplets)
            .map_err(|e| Error::Linear(format!("{e:?}")))
    }

    pub fn lu(&self) -> Result<Factor> {
        let m = self.to_faer()?;
        m.sp_lu()
            .map(Factor::Lu)
            .map_err(|e| Error::Linear(format!("LU failed: {e:?}")))
    }

    /// Cholesky factorization; fails unless the matrix is positive definite.
    pub fn cholesky(&self) -> Result<Factor> {
        let m = self.to_faer()?;
        m.sp_cholesky(Side::Lower)
            .map(Factor::Llt)
            .map_err(|e| Error::Linear(format!("Cholesky failed: {e:?}")))
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.entries() {
            m[(i, j)] += v;
        }
        m
    }

    /// Largest `|A_ij − A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let d = self.to_dense();
        (&d - d.transpose()).abs().max()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize) -> SparseSym {
        let mut e = Vec::new();
        for i in 0..n {
            e.push((i, i, 2.0));
            if i + 1 < n {
                e.push((i, i + 1, -1.0));
                e.push((i + 1, i, -1.0));
            }
        }
        SparseSym::from_triplets(n, &e).unwrap()
    }

    #[test]
    fn solves_match_dense() {
        let a = tridiag(6).plus_diagonal(&[0.1; 6]);
        let b = [1.0, -2.0, 0.5, 0.0, 3.0, 1.0];
        let x_lu = a.lu().unwrap().solve(&b);
        let x_ch = a.cholesky().unwrap().solve(&b);
        let dense = a.to_dense().lu().solve(&nalgebra::DVector::from_column_slice(&b)).unwrap();
        for i in 0..6 {
            assert!((x_lu[i] - dense[i]).abs() < 1e-12);
            assert!((x_ch[i] - dense[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn duplicates_are_summed() {
        let a = SparseSym::from_triplets(2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 1, 1.0)]).unwrap();
        assert_eq!(a.diagonal(), vec![3.0, 1.0]);
        assert_eq!(a.nnz(), 2);
        assert!(SparseSym::from_triplets(2, &[(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = tridiag(4).plus_diagonal(&[-3.0; 4]);
        assert!(a.cholesky().is_err());
    }
}
