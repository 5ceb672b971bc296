//! Dense nonnegative matrices.
//!
//! [`NonnegMatrix`] validates its entries once at construction, so every
//! downstream routine can assume finite, nonnegative data. [`StochasticMatrix`]
//! adds the column-sums-to-one constraint used for basis and coefficient
//! matrices in the probabilistic model.

use std::ops::Deref;

use crate::error::{Error, Result};

/// Floor applied to anything that enters a logarithm or a denominator.
pub const EPS: f64 = 1e-12;

/// Column sums of a [`StochasticMatrix`] must be within this of one.
pub const STOCHASTIC_TOL: f64 = 1e-9;

/// Dense row-major matrix with finite, nonnegative entries.
#[derive(Debug, Clone, PartialEq)]
pub struct NonnegMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl NonnegMatrix {
    /// Builds a matrix from row-major data, rejecting negative or non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(idx) = data.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidEntry {
                row: idx / cols.max(1),
                col: idx % cols.max(1),
                value: data[idx],
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::new(n_rows, n_cols, rows.concat())
    }

    /// Builds a `rows x cols` matrix whose column `t` is `columns[t]`.
    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Result<Self> {
        let cols = columns.len();
        if let Some(bad) = columns.iter().find(|c| c.len() != rows) {
            return Err(Error::DimensionMismatch(format!(
                "column of length {} in a matrix with {rows} rows",
                bad.len()
            )));
        }
        let mut data = vec![0.0; rows * cols];
        for (c, column) in columns.iter().enumerate() {
            for (r, v) in column.iter().enumerate() {
                data[r * cols + c] = *v;
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix entry by entry. Panics if `f` returns a negative or non-finite value.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self::new(rows, cols, data).expect("from_fn produced an invalid entry")
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

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    /// All columns as owned vectors, in order.
    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.cols).map(|c| self.column(c)).collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for row in self.data.chunks_exact(self.cols.max(1)) {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        sums
    }

    pub fn transpose(&self) -> Self {
        let mut data = vec![0.0; self.data.len()];
        for r in 0..self.rows {
            for c in 0..self.cols {
                data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &NonnegMatrix) -> Result<NonnegMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let n = other.cols;
        let mut data = vec![0.0; self.rows * n];
        for r in 0..self.rows {
            let out = &mut data[r * n..(r + 1) * n];
            for (k, a) in self.row(r).iter().enumerate() {
                if *a == 0.0 {
                    continue;
                }
                for (o, b) in out.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(NonnegMatrix {
            rows: self.rows,
            cols: n,
            data,
        })
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by a vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok(self
            .data
            .chunks_exact(self.cols.max(1))
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .take(self.rows)
            .collect())
    }

    /// Replaces every entry below `floor` with `floor`.
    pub fn floored(&self, floor: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v.max(floor)).collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.rows,
            self.cols,
            self.data.iter().map(|v| v * factor).collect(),
        )
    }

    /// Divides each column by its sum.
    pub fn normalize_columns(&self) -> Result<StochasticMatrix> {
        let sums = self.column_sums();
        if let Some(col) = sums.iter().position(|s| *s <= 0.0) {
            return Err(Error::ZeroColumn(col));
        }
        let mut data = self.data.clone();
        for row in data.chunks_exact_mut(self.cols.max(1)) {
            for (v, s) in row.iter_mut().zip(&sums) {
                *v /= s;
            }
        }
        Ok(StochasticMatrix {
            inner: NonnegMatrix {
                rows: self.rows,
                cols: self.cols,
                data,
            },
        })
    }

    /// Horizontal concatenation `[self other]`.
    pub fn hconcat(&self, other: &NonnegMatrix) -> Result<NonnegMatrix> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot place {} rows beside {} rows",
                self.rows, other.rows
            )));
        }
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for r in 0..self.rows {
            data.extend_from_slice(self.row(r));
            data.extend_from_slice(other.row(r));
        }
        Ok(NonnegMatrix {
            rows: self.rows,
            cols,
            data,
        })
    }

    /// Block-diagonal matrix `[self 0; 0 other]`.
    pub fn block_diag(&self, other: &NonnegMatrix) -> NonnegMatrix {
        let rows = self.rows + other.rows;
        let cols = self.cols + other.cols;
        let mut m = NonnegMatrix::zeros(rows, cols);
        for r in 0..self.rows {
            m.data[r * cols..r * cols + self.cols].copy_from_slice(self.row(r));
        }
        for r in 0..other.rows {
            let start = (self.rows + r) * cols + self.cols;
            m.data[start..start + other.cols].copy_from_slice(other.row(r));
        }
        m
    }

    /// Splits `[A_1 A_2 ... A_n]` into `n` blocks of `block_cols` columns each.
    pub fn split_columns(&self, block_cols: usize) -> Result<Vec<NonnegMatrix>> {
        if block_cols == 0 || !self.cols.is_multiple_of(block_cols) {
            return Err(Error::DimensionMismatch(format!(
                "{} columns do not split into blocks of {block_cols}",
                self.cols
            )));
        }
        Ok((0..self.cols / block_cols)
            .map(|b| {
                NonnegMatrix::from_fn(self.rows, block_cols, |r, c| {
                    self.get(r, b * block_cols + c)
                })
            })
            .collect())
    }

    /// Horizontal concatenation of equally tall blocks.
    pub fn hconcat_all(blocks: &[NonnegMatrix]) -> Result<NonnegMatrix> {
        let Some(first) = blocks.first() else {
            return Ok(NonnegMatrix::zeros(0, 0));
        };
        blocks[1..]
            .iter()
            .try_fold(first.clone(), |acc, b| acc.hconcat(b))
    }
}

/// Nonnegative matrix whose columns each sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    inner: NonnegMatrix,
}

impl StochasticMatrix {
    /// Wraps a matrix after checking every column sums to one within [`STOCHASTIC_TOL`].
    pub fn new(inner: NonnegMatrix) -> Result<Self> {
        for (col, sum) in inner.column_sums().into_iter().enumerate() {
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::NotStochastic { col, sum });
            }
        }
        Ok(Self { inner })
    }

    /// Builds a column-stochastic matrix from probability-vector columns.
    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Result<Self> {
        Self::new(NonnegMatrix::from_columns(rows, columns)?)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: NonnegMatrix::identity(n),
        }
    }

    pub fn matrix(&self) -> &NonnegMatrix {
        &self.inner
    }

    pub fn into_inner(self) -> NonnegMatrix {
        self.inner
    }

    /// `[self other]`; columns stay stochastic.
    pub fn hconcat(&self, other: &StochasticMatrix) -> Result<StochasticMatrix> {
        Ok(StochasticMatrix {
            inner: self.inner.hconcat(&other.inner)?,
        })
    }
}

impl Deref for StochasticMatrix {
    type Target = NonnegMatrix;

    fn deref(&self) -> &NonnegMatrix {
        &self.inner
    }
}

/// Itakura-Saito divergence summed over all entries.
///
/// `xhat` must be strictly positive. Zero entries in `x` make the divergence
/// infinite, so callers floor `x` with [`EPS`] beforehand.
pub fn is_divergence(x: &NonnegMatrix, xhat: &NonnegMatrix) -> Result<f64> {
    if x.shape() != xhat.shape() {
        return Err(Error::DimensionMismatch(format!(
            "divergence between {:?} and {:?}",
            x.shape(),
            xhat.shape()
        )));
    }
    if let Some(index) = xhat.as_slice().iter().position(|v| *v <= 0.0) {
        return Err(Error::NonPositive {
            index,
            value: xhat.as_slice()[index],
        });
    }
    Ok(x.as_slice()
        .iter()
        .zip(xhat.as_slice())
        .map(|(a, b)| {
            let ratio = a / b;
            ratio - ratio.ln() - 1.0
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(rows: &[&[f64]]) -> NonnegMatrix {
        NonnegMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn rejects_invalid_entries() {
        assert!(matches!(
            NonnegMatrix::new(1, 2, vec![1.0, -0.5]),
            Err(Error::InvalidEntry { col: 1, .. })
        ));
        assert!(NonnegMatrix::new(1, 1, vec![f64::NAN]).is_err());
        assert!(NonnegMatrix::new(1, 1, vec![f64::INFINITY]).is_err());
        assert!(matches!(
            NonnegMatrix::new(2, 2, vec![1.0; 3]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn matmul_examples() {
        let b = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(NonnegMatrix::identity(2).matmul(&b).unwrap(), b);

        let a = m(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let c = m(&[&[0.0, 5.0], &[7.0, 0.0]]);
        assert_eq!(a.matmul(&c).unwrap(), m(&[&[0.0, 5.0], &[0.0, 0.0]]));

        let lhs = NonnegMatrix::zeros(2, 3);
        let rhs = NonnegMatrix::zeros(4, 2);
        assert!(matches!(lhs.matmul(&rhs), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn normalize_columns_examples() {
        let n = m(&[&[2.0], &[2.0]]).normalize_columns().unwrap();
        assert_eq!(n.as_slice(), &[0.5, 0.5]);

        assert_eq!(
            m(&[&[1.0, 0.0], &[3.0, 0.0]]).normalize_columns(),
            Err(Error::ZeroColumn(1))
        );

        let n = m(&[&[1.0, 4.0], &[3.0, 4.0]]).normalize_columns().unwrap();
        assert_eq!(n.as_slice(), &[0.25, 0.5, 0.75, 0.5]);
    }

    #[test]
    fn divergence_examples() {
        let x = m(&[&[2.0]]);
        let xhat = m(&[&[1.0]]);
        let d = is_divergence(&x, &xhat).unwrap();
        assert!((d - (2.0 - 2f64.ln() - 1.0)).abs() < 1e-15);
        assert!((d - 0.306853).abs() < 1e-6);

        let x = m(&[&[0.3, 1.2], &[4.0, 0.01]]);
        assert_eq!(is_divergence(&x, &x).unwrap(), 0.0);

        assert!(matches!(
            is_divergence(&x, &m(&[&[1.0, 0.0], &[1.0, 1.0]])),
            Err(Error::NonPositive { index: 1, .. })
        ));
        assert!(is_divergence(&x, &m(&[&[1.0]])).is_err());
    }

    #[test]
    fn divergence_scale_invariant_example() {
        let x = m(&[&[0.3, 1.2], &[4.0, 0.01]]);
        let xhat = m(&[&[0.5, 0.9], &[2.0, 0.1]]);
        let d = is_divergence(&x, &xhat).unwrap();
        let ds = is_divergence(&x.scaled(3.7).unwrap(), &xhat.scaled(3.7).unwrap()).unwrap();
        assert!((d - ds).abs() < 1e-12);
    }

    #[test]
    fn block_helpers() {
        let a = m(&[&[1.0, 2.0]]);
        let b = m(&[&[3.0]]);
        assert_eq!(a.hconcat(&b).unwrap(), m(&[&[1.0, 2.0, 3.0]]));
        assert_eq!(
            a.block_diag(&b),
            m(&[&[1.0, 2.0, 0.0], &[0.0, 0.0, 3.0]])
        );
        let blocks = m(&[&[1.0, 2.0, 3.0, 4.0]]).split_columns(2).unwrap();
        assert_eq!(blocks, vec![m(&[&[1.0, 2.0]]), m(&[&[3.0, 4.0]])]);
        assert_eq!(
            NonnegMatrix::hconcat_all(&blocks).unwrap(),
            m(&[&[1.0, 2.0, 3.0, 4.0]])
        );
    }

    fn positive_matrix(rows: usize, cols: usize) -> impl Strategy<Value = NonnegMatrix> {
        proptest::collection::vec(1e-3f64..10.0, rows * cols)
            .prop_map(move |d| NonnegMatrix::new(rows, cols, d).unwrap())
    }

    proptest! {
        #[test]
        fn matmul_stays_nonnegative(a in positive_matrix(3, 4), b in positive_matrix(4, 2)) {
            let p = a.matmul(&b).unwrap();
            prop_assert!(p.as_slice().iter().all(|v| *v >= 0.0));
        }

        #[test]
        fn normalization_sums_and_argmax(a in positive_matrix(5, 3)) {
            let n = a.normalize_columns().unwrap();
            for (c, s) in n.column_sums().iter().enumerate() {
                prop_assert!((s - 1.0).abs() < 1e-12);
                let argmax = |col: Vec<f64>| {
                    col.iter().enumerate().fold(0, |best, (i, v)| if *v > col[best] { i } else { best })
                };
                prop_assert_eq!(argmax(a.column(c)), argmax(n.column(c)));
            }
        }

        #[test]
        fn divergence_nonnegative_and_scale_invariant(
            x in positive_matrix(4, 3),
            y in positive_matrix(4, 3),
            c in 0.01f64..100.0,
        ) {
            prop_assert_eq!(is_divergence(&x, &x).unwrap(), 0.0);
            let d = is_divergence(&x, &y).unwrap();
            prop_assert!(d >= 0.0);
            let ds = is_divergence(&x.scaled(c).unwrap(), &y.scaled(c).unwrap()).unwrap();
            prop_assert!((d - ds).abs() <= 1e-10 * d.abs().max(1.0));
        }
    }
}
