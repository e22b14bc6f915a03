//! Compressed sparse row matrices.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Csr<T> {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> Csr<T> {
    /// Assembles from `(row, col, value)` triplets; duplicates are summed in
    /// input order.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, T)]) -> Result<Self> {
        let mut per_row: Vec<Vec<(usize, T)>> = vec![Vec::new(); rows];
        for &(r, c, v) in triplets {
            if r >= rows || c >= cols {
                return Err(Error::Dimension(format!(
                    "entry ({r}, {c}) outside {rows}x{cols} matrix"
                )));
            }
            per_row[r].push((c, v));
        }
        let mut indptr = Vec::with_capacity(rows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in per_row {
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                if indices.len() > *indptr.last().unwrap() && *indices.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Ok(Self {
            rows,
            cols,
            indptr,
            indices,
            values,
        })
    }

    /// Builds directly from per-row `(col, value)` lists sorted by column.
    pub(crate) fn from_sorted_rows(cols: usize, rows: Vec<Vec<(usize, T)>>) -> Self {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        let n = rows.len();
        for row in rows {
            debug_assert!(row.windows(2).all(|w| w[0].0 < w[1].0));
            for (c, v) in row {
                indices.push(c);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Self {
            rows: n,
            cols,
            indptr,
            indices,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![T::one(); n],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> (&[usize], &[T]) {
        let span = self.indptr[r]..self.indptr[r + 1];
        (&self.indices[span.clone()], &self.values[span])
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        let (idx, vals) = self.row(r);
        idx.binary_search(&c).map_or(T::zero(), |k| vals[k])
    }

    pub fn transpose(&self) -> Self {
        let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); self.cols];
        for r in 0..self.rows {
            let (idx, vals) = self.row(r);
            for (&c, &v) in idx.iter().zip(vals) {
                rows[c].push((r, v));
            }
        }
        Self::from_sorted_rows(self.rows, rows)
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows)
            .map(|r| {
                let (idx, vals) = self.row(r);
                idx.iter().zip(vals).fold(T::zero(), |acc, (&c, &v)| acc + v * x[c])
            })
            .collect()
    }

    /// `self · dense`.
    pub fn mul_dense(&self, dense: ArrayView2<'_, T>) -> Result<Array2<T>> {
        if dense.nrows() != self.cols {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} sparse by {}x{} dense",
                self.rows,
                self.cols,
                dense.nrows(),
                dense.ncols()
            )));
        }
        let k = dense.ncols();
        let mut out = Array2::<T>::zeros((self.rows, k));
        for (r, mut out_row) in out.rows_mut().into_iter().enumerate() {
            let (idx, vals) = self.row(r);
            for (&c, &v) in idx.iter().zip(vals) {
                out_row.scaled_add(v, &dense.row(c));
            }
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> Array2<T> {
        let mut out = Array2::zeros((self.rows, self.cols));
        for r in 0..self.rows {
            let (idx, vals) = self.row(r);
            for (&c, &v) in idx.iter().zip(vals) {
                out[[r, c]] = v;
            }
        }
        out
    }

    /// `I − self` for a square matrix.
    pub fn identity_minus(&self) -> Self {
        assert_eq!(self.rows, self.cols, "identity_minus needs a square matrix");
        let rows = (0..self.rows)
            .map(|r| {
                let (idx, vals) = self.row(r);
                let mut row: Vec<(usize, T)> = idx.iter().zip(vals).map(|(&c, &v)| (c, -v)).collect();
                match row.binary_search_by_key(&r, |&(c, _)| c) {
                    Ok(k) => row[k].1 += T::one(),
                    Err(k) => row.insert(k, (r, T::one())),
                }
                row
            })
            .collect();
        Self::from_sorted_rows(self.cols, rows)
    }

    /// Largest `|A(i,j) − A(j,i)|` over stored entries of both triangles.
    pub fn max_asymmetry(&self) -> T {
        let mut worst = T::zero();
        for r in 0..self.rows {
            let (idx, vals) = self.row(r);
            for (&c, &v) in idx.iter().zip(vals) {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst
    }
}
