//! Small dense vectors and matrices used for per-particle Jacobians.

use std::ops::{Index, IndexMut};

use crate::scalar::Real;

/// Dense row-major matrix. Rows and columns are small (spatial dimension or moment count).
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged matrix rows");
        Self { rows: r, cols: c, data: rows.iter().flatten().copied().collect() }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    /// Outer product `a b^T`.
    pub fn outer(a: &[T], b: &[T]) -> Self {
        let mut m = Self::zeros(a.len(), b.len());
        for (i, &ai) in a.iter().enumerate() {
            for (j, &bj) in b.iter().enumerate() {
                m[(i, j)] = ai * bj;
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `self * v`.
    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `self^T * v`.
    pub fn tr_mul_vec(&self, v: &[T]) -> Vec<T> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![T::zero(); self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn add_assign(&mut self, other: &Self) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn add_scaled(&mut self, s: T, other: &Self) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn scale(&mut self, s: T) {
        for a in &mut self.data {
            *a *= s;
        }
    }

    pub fn scaled(mut self, s: T) -> Self {
        self.scale(s);
        self
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &a| m.max(a.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data.iter().zip(&other.data).fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    /// Induced 2-norm, via power iteration on `A^T A`.
    pub fn spectral_norm(&self) -> T {
        if self.data.iter().all(|a| a.is_zero()) {
            return T::zero();
        }
        let ata = self.transpose().mul(self);
        let mut v = vec![T::one(); self.cols];
        let mut lambda = T::zero();
        for _ in 0..100 {
            let w = ata.mul_vec(&v);
            let n = norm(&w);
            if n.is_zero() {
                break;
            }
            let next = n / norm(&v);
            v = w.into_iter().map(|x| x / n).collect();
            if (next - lambda).abs() <= T::epsilon() * next {
                lambda = next;
                break;
            }
            lambda = next;
        }
        lambda.sqrt()
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// One d-vector per atom, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomField<T> {
    dim: usize,
    values: Vec<T>,
}

impl<T: Real> AtomField<T> {
    pub fn zeros(dim: usize, atoms: usize) -> Self {
        Self { dim, values: vec![T::zero(); dim * atoms] }
    }

    pub fn from_flat(dim: usize, values: Vec<T>) -> Self {
        assert!(dim > 0 && values.len() % dim == 0, "flat field length must be a multiple of dim");
        Self { dim, values }
    }

    pub fn from_fn<F: FnMut(usize) -> Vec<T>>(dim: usize, atoms: usize, mut f: F) -> Self {
        let mut values = Vec::with_capacity(dim * atoms);
        for i in 0..atoms {
            let v = f(i);
            assert_eq!(v.len(), dim);
            values.extend(v);
        }
        Self { dim, values }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn at(&self, i: usize) -> &[T] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn at_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<T> {
        self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = &[T]> + '_ {
        self.values.chunks_exact(self.dim)
    }

    /// `sum_i w_i <self_i, other_i>`.
    pub fn pairing(&self, weights: &[T], other: &Self) -> T {
        self.iter().zip(other.iter()).zip(weights).map(|((a, b), &w)| w * dot(a, b)).sum()
    }

    pub fn add_scaled(&mut self, s: T, other: &Self) {
        axpy(&mut self.values, s, &other.values);
    }

    pub fn scale(&mut self, s: T) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, &a| m.max(a.abs()))
    }

    /// Largest Euclidean distance between corresponding atoms.
    pub fn max_dist(&self, other: &Self) -> T {
        self.iter().zip(other.iter()).fold(T::zero(), |m, (a, b)| m.max(dist(a, b)))
    }
}

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

#[inline]
pub fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + (x - y) * (x - y)).sqrt()
}

#[inline]
pub fn sub<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

#[inline]
pub fn add<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

/// `acc += s * v`.
#[inline]
pub fn axpy<T: Real>(acc: &mut [T], s: T, v: &[T]) {
    for (a, &x) in acc.iter_mut().zip(v) {
        *a += s * x;
    }
}

#[inline]
pub fn scaled<T: Real>(s: T, v: &[T]) -> Vec<T> {
    v.iter().map(|&x| s * x).collect()
}
