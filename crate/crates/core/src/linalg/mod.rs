//! Dense row-major matrices of `f64`.
//!
//! Every product in this module sums each output entry over the inner index
//! in ascending order, `acc = 0; acc += x[i][0]*y[0][j]; acc += x[i][1]*y[1][j]; ...`,
//! so results are bit-identical to a naive triple loop and across runs,
//! whatever the number of rayon threads.

mod io;

pub use io::{read_matrices, write_binary, write_text, BINARY_MAGIC};

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Row-major real matrix with explicit shape.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Wraps row-major `data`, checking shape and finiteness.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_shape(rows, cols)?;
        if data.len() != rows * cols {
            return Err(Error::DataLength {
                rows,
                cols,
                len: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        check_shape(rows, cols)?;
        Ok(Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut m = Self::zeros(n, n)?;
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        Ok(m)
    }

    /// Builds a matrix from nested rows; all rows must have the same length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    op: "from_rows",
                    left: (0, cols),
                    right: (i, r.len()),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        check_shape(rows, cols)?;
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data)
    }

    /// Internal constructor for buffers whose shape and finiteness the
    /// caller already guarantees.
    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j));
            }
        }
        Self::from_raw(self.cols, self.rows, data)
    }

    /// Entrywise scaling.
    pub fn scale(&self, c: f64) -> Self {
        Self::from_raw(self.rows, self.cols, self.data.iter().map(|v| v * c).collect())
    }

    /// Returns a copy with rows reordered so that row `i` of the result is
    /// row `perm[i]` of `self`.
    pub fn permute_rows(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.rows {
            return Err(Error::DimensionMismatch {
                op: "permute_rows",
                left: self.shape(),
                right: (perm.len(), 1),
            });
        }
        let mut data = Vec::with_capacity(self.data.len());
        for &p in perm {
            data.extend_from_slice(self.row(p));
        }
        Ok(Self::from_raw(self.rows, self.cols, data))
    }

    /// `self · other`.
    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        matmul(self, other)
    }

    /// `max |m_ij|`.
    pub fn inf_norm(&self) -> f64 {
        inf_norm(self)
    }
}

fn check_shape(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyMatrix { rows, cols });
    }
    Ok(())
}

/// Standard product `x · y`, parallel over output rows.
pub fn matmul(x: &DenseMatrix, y: &DenseMatrix) -> Result<DenseMatrix> {
    if x.cols != y.rows {
        return Err(Error::DimensionMismatch {
            op: "matmul",
            left: x.shape(),
            right: y.shape(),
        });
    }
    let (inner, c) = (x.cols, y.cols);
    let mut out = vec![0.0; x.rows * c];
    out.par_chunks_mut(c).enumerate().for_each(|(i, out_row)| {
        let x_row = x.row(i);
        for k in 0..inner {
            let xik = x_row[k];
            let y_row = y.row(k);
            for (o, &ykj) in out_row.iter_mut().zip(y_row) {
                *o += xik * ykj;
            }
        }
    });
    Ok(DenseMatrix::from_raw(x.rows, c, out))
}

/// `xᵀ · y` without forming the transpose. Each output entry sums over the
/// shared row index in ascending order.
pub fn matmul_tn(x: &DenseMatrix, y: &DenseMatrix) -> Result<DenseMatrix> {
    if x.rows != y.rows {
        return Err(Error::DimensionMismatch {
            op: "matmul_tn",
            left: x.shape(),
            right: y.shape(),
        });
    }
    let (a, c) = (x.cols, y.cols);
    let mut out = vec![0.0; a * c];
    // Row-block parallelism over output rows keeps the per-entry order fixed.
    out.par_chunks_mut(c).enumerate().for_each(|(p, out_row)| {
        for l in 0..x.rows {
            let xlp = x.get(l, p);
            if xlp == 0.0 {
                continue;
            }
            for (o, &ylj) in out_row.iter_mut().zip(y.row(l)) {
                *o += xlp * ylj;
            }
        }
    });
    Ok(DenseMatrix::from_raw(a, c, out))
}

/// `x · yᵀ`: entry `(i, j)` is the dot product of row `i` of `x` and row `j`
/// of `y`.
pub fn matmul_nt(x: &DenseMatrix, y: &DenseMatrix) -> Result<DenseMatrix> {
    if x.cols != y.cols {
        return Err(Error::DimensionMismatch {
            op: "matmul_nt",
            left: x.shape(),
            right: y.shape(),
        });
    }
    let n = y.rows;
    let mut out = vec![0.0; x.rows * n];
    out.par_chunks_mut(n).enumerate().for_each(|(i, out_row)| {
        let xi = x.row(i);
        for (j, o) in out_row.iter_mut().enumerate() {
            *o = dot(xi, y.row(j));
        }
    });
    Ok(DenseMatrix::from_raw(x.rows, n, out))
}

/// `max_{i,j} |m_ij|`.
pub fn inf_norm(m: &DenseMatrix) -> f64 {
    m.data.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Ascending-order dot product.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}
