use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Dense complex matrix stored column-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: format!("{} entries", rows * cols),
                found: format!("{} entries", entries.len()),
            });
        }
        Ok(Self::from_fn(rows, cols, |i, j| entries[i * cols + j]))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    pub fn get(&self, i: usize, j: usize) -> Result<C64> {
        if i >= self.rows {
            return Err(Error::IndexOutOfRange { index: i, len: self.rows });
        }
        if j >= self.cols {
            return Err(Error::IndexOutOfRange { index: j, len: self.cols });
        }
        Ok(self[(i, j)])
    }

    pub fn col(&self, j: usize) -> &[C64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [C64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    /// Mutable access to two distinct columns at once.
    pub fn col_pair_mut(&mut self, p: usize, q: usize) -> (&mut [C64], &mut [C64]) {
        assert!(p < q && q < self.cols);
        let r = self.rows;
        let (head, tail) = self.data.split_at_mut(q * r);
        (&mut head[p * r..(p + 1) * r], &mut tail[..r])
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest entrywise deviation between `self` and its adjoint.
    pub fn hermitian_asymmetry(&self) -> f64 {
        if self.rows != self.cols {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for j in 0..self.cols {
            for i in 0..=j {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Returns `(A + A^H) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    pub fn matmul(&self, rhs: &CMatrix) -> Result<CMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch {
                expected: format!("{} rows on the right", self.cols),
                found: format!("{}x{}", rhs.rows, rhs.cols),
            });
        }
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for j in 0..rhs.cols {
            let out_col = &mut out.data[j * self.rows..(j + 1) * self.rows];
            for k in 0..self.cols {
                let b = rhs[(k, j)];
                if b == C64::new(0.0, 0.0) {
                    continue;
                }
                for (o, a) in out_col.iter_mut().zip(self.col(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Computes `self^H * rhs` without forming the adjoint.
    pub fn adjoint_mul(&self, rhs: &CMatrix) -> Result<CMatrix> {
        if self.rows != rhs.rows {
            return Err(Error::DimensionMismatch {
                expected: format!("{} rows on the right", self.rows),
                found: format!("{}x{}", rhs.rows, rhs.cols),
            });
        }
        Ok(CMatrix::from_fn(self.cols, rhs.cols, |i, j| dot_conj(self.col(i), rhs.col(j))))
    }

    /// Computes `self * self^H`.
    pub fn gram_outer(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.rows, self.rows);
        for k in 0..self.cols {
            let c = self.col(k);
            for j in 0..self.rows {
                let b = c[j].conj();
                for i in 0..self.rows {
                    out.data[j * self.rows + i] += c[i] * b;
                }
            }
        }
        out
    }

    pub fn columns(&self, range: std::ops::Range<usize>) -> CMatrix {
        let r = self.rows;
        CMatrix { rows: r, cols: range.len(), data: self.data[range.start * r..range.end * r].to_vec() }
    }

    pub fn select_columns(&self, idx: &[usize]) -> CMatrix {
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for &j in idx {
            data.extend_from_slice(self.col(j));
        }
        CMatrix { rows: self.rows, cols: idx.len(), data }
    }

    pub fn rows_range(&self, range: std::ops::Range<usize>) -> CMatrix {
        CMatrix::from_fn(range.len(), self.cols, |i, j| self[(range.start + i, j)])
    }

    pub fn vstack(blocks: &[&CMatrix]) -> Result<CMatrix> {
        let cols = blocks.first().map_or(0, |b| b.cols);
        if let Some(b) = blocks.iter().find(|b| b.cols != cols) {
            return Err(Error::DimensionMismatch {
                expected: format!("{cols} columns"),
                found: format!("{} columns", b.cols),
            });
        }
        let rows = blocks.iter().map(|b| b.rows).sum();
        let mut out = CMatrix::zeros(rows, cols);
        let mut r0 = 0;
        for b in blocks {
            for j in 0..cols {
                for i in 0..b.rows {
                    out[(r0 + i, j)] = b[(i, j)];
                }
            }
            r0 += b.rows;
        }
        Ok(out)
    }

    pub fn hstack(blocks: &[&CMatrix]) -> Result<CMatrix> {
        let rows = blocks.first().map_or(0, |b| b.rows);
        if let Some(b) = blocks.iter().find(|b| b.rows != rows) {
            return Err(Error::DimensionMismatch {
                expected: format!("{rows} rows"),
                found: format!("{} rows", b.rows),
            });
        }
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for b in blocks {
            data.extend_from_slice(&b.data);
        }
        Ok(CMatrix { rows, cols, data })
    }

    /// Multiplies column `j` by `s[j]` for every column.
    pub fn scale_columns(&self, s: &[f64]) -> CMatrix {
        assert_eq!(s.len(), self.cols);
        let mut out = self.clone();
        for (j, &sj) in s.iter().enumerate() {
            for z in out.col_mut(j) {
                *z *= sj;
            }
        }
        out
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }
}

/// `sum conj(a_i) * b_i`.
pub fn dot_conj(a: &[C64], b: &[C64]) -> C64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re + x.im * y.im;
        im += x.re * y.im - x.im * y.re;
    }
    C64::new(re, im)
}

pub fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.shape(), rhs.shape(), "shape mismatch in addition");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.shape(), rhs.shape(), "shape mismatch in subtraction");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs).expect("shape mismatch in multiplication")
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, " {:+.4}{:+.4}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
