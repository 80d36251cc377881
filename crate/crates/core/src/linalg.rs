//! Exact linear algebra over the rationals: row reduction, kernels,
//! particular solutions and subspace membership.
//!
//! Subspaces are stored by the reduced row echelon form of a spanning set,
//! which is unique, so two `Subspace` values are equal exactly when they
//! span the same space.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{is_zero_vector, zero_vector, Rational, Vector};

/// Dense row-major rational matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![Rational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Rational::one());
        }
        m
    }

    /// Builds a matrix from its rows; all rows must have length `cols`.
    pub fn from_rows(cols: usize, rows: Vec<Vector>) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        let n = rows.len();
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch { expected: cols, got: r.len() });
            }
            data.extend(r);
        }
        Ok(Matrix { rows: n, cols, data })
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(rows: usize, cols: &[Vector]) -> Result<Self> {
        let mut m = Matrix::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            if c.len() != rows {
                return Err(Error::DimensionMismatch { expected: rows, got: c.len() });
            }
            for (i, x) in c.iter().enumerate() {
                if !x.is_zero() {
                    m.set(i, j, x.clone());
                }
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: Rational) {
        self.data[i * self.cols + j] = x;
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vector {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vector> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let x = self.get(i, j);
                if !x.is_zero() {
                    t.set(j, i, x.clone());
                }
            }
        }
        t
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn mul_vec(&self, v: &[Rational]) -> Result<Vector> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, got: v.len() });
        }
        let mut out = zero_vector(self.rows);
        for (i, o) in out.iter_mut().enumerate() {
            for (a, x) in self.row(i).iter().zip(v) {
                if !a.is_zero() && !x.is_zero() {
                    *o += a * x;
                }
            }
        }
        Ok(out)
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, got: other.rows });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        let cur = out.get(i, j) + a * b;
                        out.set(i, j, cur);
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn rank(&self) -> usize {
        let mut rows = self.to_rows();
        rref_in_place(&mut rows, self.cols).len()
    }

    /// Inverse of a square matrix, or `None` when singular.
    pub fn inverse(&self) -> Option<Matrix> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let mut rows: Vec<Vector> = (0..n)
            .map(|i| {
                let mut r = self.row(i).to_vec();
                r.extend(crate::rational::unit_vector(n, i));
                r
            })
            .collect();
        let pivots = rref_in_place(&mut rows, 2 * n);
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return None;
        }
        let inv_rows = rows.into_iter().take(n).map(|r| r[n..].to_vec()).collect();
        Matrix::from_rows(n, inv_rows).ok()
    }
}

/// Reduces `rows` to reduced row echelon form in place (restricted to the
/// first `ncols` columns for pivot search) and returns the pivot columns.
/// Nonzero rows come first, in pivot order; zero rows are dropped.
pub fn rref_in_place(rows: &mut Vec<Vector>, ncols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == rows.len() {
            break;
        }
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][c].recip();
        if !inv.is_one() {
            for x in rows[r].iter_mut() {
                if !x.is_zero() {
                    *x *= &inv;
                }
            }
        }
        let support: Vec<usize> =
            (0..rows[r].len()).filter(|&j| !rows[r][j].is_zero()).collect();
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for &j in &support {
                let d = &f * &pivot_row[j];
                row[j] -= d;
            }
        }
        pivots.push(c);
        r += 1;
    }
    rows.truncate(r);
    pivots
}

/// A linear subspace of `Q^n`, stored as the reduced row echelon basis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Subspace {
    ambient_dim: usize,
    #[serde(with = "crate::rational::serde_matrix")]
    basis: Vec<Vector>,
    #[serde(skip)]
    pivots: Vec<usize>,
}

impl Subspace {
    pub fn zero(ambient_dim: usize) -> Self {
        Subspace { ambient_dim, basis: Vec::new(), pivots: Vec::new() }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Subspace::span(ambient_dim, (0..ambient_dim).map(|i| crate::rational::unit_vector(ambient_dim, i)))
            .expect("unit vectors have the ambient length")
    }

    /// The span of `vectors`.
    pub fn span(ambient_dim: usize, vectors: impl IntoIterator<Item = Vector>) -> Result<Self> {
        let mut rows = Vec::new();
        for v in vectors {
            if v.len() != ambient_dim {
                return Err(Error::DimensionMismatch { expected: ambient_dim, got: v.len() });
            }
            if !is_zero_vector(&v) {
                rows.push(v);
            }
        }
        let pivots = rref_in_place(&mut rows, ambient_dim);
        Ok(Subspace { ambient_dim, basis: rows, pivots })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vector] {
        &self.basis
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Remainder of `v` after eliminating the pivot coordinates.
    fn reduce(&self, v: &[Rational]) -> Vector {
        let mut w = v.to_vec();
        for (b, &p) in self.basis.iter().zip(&self.pivots) {
            if w[p].is_zero() {
                continue;
            }
            let f = w[p].clone();
            for (x, y) in w.iter_mut().zip(b) {
                if !y.is_zero() {
                    *x -= &f * y;
                }
            }
        }
        w
    }

    pub fn contains(&self, v: &[Rational]) -> Result<bool> {
        if v.len() != self.ambient_dim {
            return Err(Error::DimensionMismatch { expected: self.ambient_dim, got: v.len() });
        }
        Ok(is_zero_vector(&self.reduce(v)))
    }

    /// Coordinates of `v` in the echelon basis, or `None` if `v` is not in
    /// the subspace.
    pub fn coordinates(&self, v: &[Rational]) -> Result<Option<Vector>> {
        if !self.contains(v)? {
            return Ok(None);
        }
        Ok(Some(self.pivots.iter().map(|&p| v[p].clone()).collect()))
    }

    pub fn contains_subspace(&self, other: &Subspace) -> Result<bool> {
        for b in &other.basis {
            if !self.contains(b)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Sum of two subspaces.
    pub fn join(&self, other: &Subspace) -> Result<Subspace> {
        Subspace::span(self.ambient_dim, self.basis.iter().chain(other.basis.iter()).cloned())
    }
}

impl<'de> Deserialize<'de> for Subspace {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            ambient_dim: usize,
            #[serde(with = "crate::rational::serde_matrix")]
            basis: Vec<Vector>,
        }
        let raw = Raw::deserialize(d)?;
        Subspace::span(raw.ambient_dim, raw.basis).map_err(serde::de::Error::custom)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = crate::rational::serde_matrix::deserialize(d)?;
        let cols = rows.first().map_or(0, Vec::len);
        Matrix::from_rows(cols, rows).map_err(serde::de::Error::custom)
    }
}

impl Serialize for Matrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        crate::rational::serde_matrix::serialize(&self.to_rows(), s)
    }
}

/// Null space of `m`, as a subspace of `Q^cols`.
pub fn kernel(m: &Matrix) -> Subspace {
    let mut rows = m.to_rows();
    let pivots = rref_in_place(&mut rows, m.cols);
    let mut is_pivot = vec![None; m.cols];
    for (i, &p) in pivots.iter().enumerate() {
        is_pivot[p] = Some(i);
    }
    let mut vectors = Vec::new();
    for f in (0..m.cols).filter(|&c| is_pivot[c].is_none()) {
        let mut v = zero_vector(m.cols);
        v[f] = Rational::one();
        for (i, &p) in pivots.iter().enumerate() {
            let x = &rows[i][f];
            if !x.is_zero() {
                v[p] = -x;
            }
        }
        vectors.push(v);
    }
    Subspace::span(m.cols, vectors).expect("kernel vectors have length cols")
}

/// Column space of `m`, as a subspace of `Q^rows`.
pub fn image(m: &Matrix) -> Subspace {
    Subspace::span(m.rows, (0..m.cols).map(|j| m.column(j))).expect("columns have length rows")
}

/// Some `x` with `m x = b`, or `None` when the system is inconsistent.
/// Free variables are set to zero.
pub fn solve(m: &Matrix, b: &[Rational]) -> Result<Option<Vector>> {
    if b.len() != m.rows {
        return Err(Error::DimensionMismatch { expected: m.rows, got: b.len() });
    }
    let mut rows: Vec<Vector> = (0..m.rows)
        .map(|i| {
            let mut r = m.row(i).to_vec();
            r.push(b[i].clone());
            r
        })
        .collect();
    let pivots = rref_in_place(&mut rows, m.cols + 1);
    if pivots.last() == Some(&m.cols) {
        return Ok(None);
    }
    let mut x = zero_vector(m.cols);
    for (row, &p) in rows.iter().zip(&pivots) {
        x[p] = row[m.cols].clone();
    }
    Ok(Some(x))
}

pub fn member(s: &Subspace, v: &[Rational]) -> Result<bool> {
    s.contains(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn mat(rows: &[&[i64]]) -> Matrix {
        let cols = rows[0].len();
        Matrix::from_rows(cols, rows.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect())
            .unwrap()
    }

    fn v(xs: &[i64]) -> Vector {
        xs.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(kernel(&mat(&[&[1, 0], &[0, 0]])), Subspace::span(2, [v(&[0, 1])]).unwrap());
        assert_eq!(kernel(&Matrix::zeros(2, 2)), Subspace::full(2));
        let k = kernel(&mat(&[&[1, 2], &[2, 4]]));
        assert_eq!(k, Subspace::span(2, [v(&[-2, 1])]).unwrap());
        assert_eq!(k.dim(), 1);
    }

    #[test]
    fn solve_examples() {
        assert_eq!(solve(&Matrix::identity(2), &v(&[3, 5])).unwrap(), Some(v(&[3, 5])));
        let m = mat(&[&[1, 2], &[2, 4]]);
        assert_eq!(solve(&m, &v(&[1, 0])).unwrap(), None);
        assert_eq!(solve(&m, &v(&[1, 2])).unwrap(), Some(v(&[1, 0])));
        assert!(matches!(solve(&m, &v(&[1])), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn member_examples() {
        let s = Subspace::span(2, [v(&[1, 0])]).unwrap();
        assert!(member(&s, &v(&[2, 0])).unwrap());
        assert!(!member(&s, &v(&[0, 1])).unwrap());
        let s = Subspace::span(2, [v(&[1, 2])]).unwrap();
        assert!(member(&s, &v(&[2, 4])).unwrap());
        assert!(member(&s, &v(&[1])).is_err());
    }

    #[test]
    fn inverse_roundtrip() {
        let m = mat(&[&[0, 1], &[-1, 0]]);
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv).unwrap(), Matrix::identity(2));
        assert!(mat(&[&[1, 2], &[2, 4]]).inverse().is_none());
    }
}
