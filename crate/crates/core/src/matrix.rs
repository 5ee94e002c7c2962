//! Dense matrices over exact scalar types, plus helpers for `f64`, jets and
//! exact rationals.

use nalgebra::DMatrix;
use num_traits::{One, Signed, Zero};

use crate::scalarfield::{Jet, Rational, Symbolic};

#[derive(Clone, Debug, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T> Mat<T> {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    /// Panics on ragged input.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let r = rows.len();
        let c = rows.first().map(Vec::len).unwrap_or(0);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged matrix rows");
            data.extend(row);
        }
        Mat {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut T {
        assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        *self.get_mut(i, j) = v;
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> Mat<U> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(&mut f).collect(),
        }
    }

    pub fn try_map<U, E>(&self, mut f: impl FnMut(&T) -> Result<U, E>) -> Result<Mat<U>, E> {
        Ok(Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(&mut f).collect::<Result<_, _>>()?,
        })
    }

    /// Entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.data.iter()
    }

    /// Entries with their positions, row-major.
    pub fn indexed(&self) -> impl Iterator<Item = (usize, usize, &T)> {
        let c = self.cols;
        self.data.iter().enumerate().map(move |(k, v)| (k / c, k % c, v))
    }

    pub fn row_vec(&self, i: usize) -> Vec<T>
    where
        T: Clone,
    {
        (0..self.cols).map(|j| self.get(i, j).clone()).collect()
    }

    pub fn transpose(&self) -> Mat<T>
    where
        T: Clone,
    {
        Mat::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn submatrix(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Mat<T>
    where
        T: Clone,
    {
        Mat::from_fn(rows, cols, |i, j| self.get(r0 + i, c0 + j).clone())
    }
}

impl<T: Symbolic> Mat<T> {
    pub fn zeros(rows: usize, cols: usize, nvars: usize) -> Self {
        Mat::from_fn(rows, cols, |_, _| T::zero(nvars))
    }

    pub fn identity(n: usize, nvars: usize) -> Self {
        Mat::from_fn(n, n, |i, j| if i == j { T::one(nvars) } else { T::zero(nvars) })
    }

    /// Variable count shared by the entries (zero for an empty matrix).
    pub fn nvars(&self) -> usize {
        self.data.first().map(T::nvars).unwrap_or(0)
    }

    pub fn add(&self, other: &Mat<T>) -> Mat<T> {
        self.check_same(other);
        Mat::from_fn(self.rows, self.cols, |i, j| self.get(i, j).add(other.get(i, j)))
    }

    pub fn sub(&self, other: &Mat<T>) -> Mat<T> {
        self.check_same(other);
        Mat::from_fn(self.rows, self.cols, |i, j| self.get(i, j).sub(other.get(i, j)))
    }

    pub fn neg(&self) -> Mat<T> {
        self.map(T::neg)
    }

    pub fn scale(&self, c: &Rational) -> Mat<T> {
        self.map(|x| x.scale(c))
    }

    pub fn scale_by(&self, s: &T) -> Mat<T> {
        self.map(|x| x.mul(s))
    }

    pub fn mul(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        let nv = self.nvars().max(other.nvars());
        Mat::from_fn(self.rows, other.cols, |i, j| {
            let mut acc = T::zero(nv);
            for k in 0..self.cols {
                let a = self.get(i, k);
                let b = other.get(k, j);
                if a.is_zero() || b.is_zero() {
                    continue;
                }
                acc = acc.add(&a.mul(b));
            }
            acc
        })
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = T::zero(self.nvars());
                for (k, x) in v.iter().enumerate() {
                    acc = acc.add(&self.get(i, k).mul(x));
                }
                acc
            })
            .collect()
    }

    pub fn pow(&self, k: u32) -> Mat<T> {
        assert!(self.is_square());
        let mut out = Mat::identity(self.rows, self.nvars());
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    pub fn trace(&self) -> T {
        let mut acc = T::zero(self.nvars());
        for i in 0..self.rows.min(self.cols) {
            acc = acc.add(self.get(i, i));
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(T::is_zero)
    }

    /// Entrywise partial derivative.
    pub fn diff(&self, var: usize) -> Mat<T> {
        self.map(|x| x.diff(var))
    }

    pub fn block_diag(blocks: &[Mat<T>], nvars: usize) -> Mat<T> {
        let n: usize = blocks.iter().map(|b| b.rows).sum();
        let m: usize = blocks.iter().map(|b| b.cols).sum();
        let mut out = Mat::zeros(n, m, nvars);
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            for (i, j, v) in b.indexed() {
                out.set(r0 + i, c0 + j, v.clone());
            }
            r0 += b.rows;
            c0 += b.cols;
        }
        out
    }

    /// First nonzero entry, if any.
    pub fn first_nonzero(&self) -> Option<(usize, usize, &T)> {
        self.indexed().find(|(_, _, v)| !v.is_zero())
    }

    pub fn eval_f64(&self, point: &[f64]) -> Option<DMatrix<f64>> {
        let mut out = DMatrix::zeros(self.rows, self.cols);
        for (i, j, v) in self.indexed() {
            out[(i, j)] = v.eval_jet(point).ok()?.value;
        }
        Some(out)
    }

    fn check_same(&self, other: &Mat<T>) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "matrix shape mismatch");
    }
}

/// Values of a jet matrix.
pub fn jet_values(m: &Mat<Jet>) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m.get(i, j).value)
}

/// Partial derivative `l` of a jet matrix.
pub fn jet_partial(m: &Mat<Jet>, l: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m.get(i, j).partials[l])
}

/// Product of jet matrices.
pub fn jet_mul(a: &Mat<Jet>, b: &Mat<Jet>) -> Mat<Jet> {
    assert_eq!(a.cols(), b.rows());
    let nv = a.get(0, 0).nvars();
    Mat::from_fn(a.rows(), b.cols(), |i, j| {
        let mut acc = Jet::constant(0.0, nv);
        for k in 0..a.cols() {
            acc = acc + a.get(i, k) * b.get(k, j);
        }
        acc
    })
}

/// Constant (zero-gradient) jet matrix.
pub fn jet_const(m: &DMatrix<f64>, nvars: usize) -> Mat<Jet> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| Jet::constant(m[(i, j)], nvars))
}

/// Inverse of a square jet matrix by Gauss–Jordan with partial pivoting on
/// values. `None` when a pivot underflows `eps` relative to the largest entry.
pub fn jet_inverse(a: &Mat<Jet>, eps: f64) -> Option<Mat<Jet>> {
    let n = a.rows();
    assert!(a.is_square());
    let nv = if n > 0 { a.get(0, 0).nvars() } else { 0 };
    let scale = a.iter().map(|x| x.value.abs()).fold(0.0, f64::max).max(1e-300);
    let mut m: Vec<Vec<Jet>> = (0..n).map(|i| a.row_vec(i)).collect();
    let mut inv: Vec<Vec<Jet>> = (0..n)
        .map(|i| (0..n).map(|j| Jet::constant(if i == j { 1.0 } else { 0.0 }, nv)).collect())
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| {
            m[x][c].value.abs().partial_cmp(&m[y][c].value.abs()).unwrap()
        })?;
        if m[p][c].value.abs() <= eps * scale {
            return None;
        }
        m.swap(c, p);
        inv.swap(c, p);
        let piv = m[c][c].recip();
        for j in 0..n {
            m[c][j] = &m[c][j] * &piv;
            inv[c][j] = &inv[c][j] * &piv;
        }
        for r in 0..n {
            if r == c {
                continue;
            }
            let f = m[r][c].clone();
            if f.value == 0.0 && f.partials.iter().all(|d| *d == 0.0) {
                continue;
            }
            for j in 0..n {
                m[r][j] = &m[r][j] - &(&f * &m[c][j]);
                inv[r][j] = &inv[r][j] - &(&f * &inv[c][j]);
            }
        }
    }
    Some(Mat::from_rows(inv))
}

/// Exact rank of a rational matrix.
pub fn rank_q(m: &[Vec<Rational>]) -> usize {
    row_echelon_q(m).1.len()
}

/// Reduced row-echelon form and pivot columns.
pub fn row_echelon_q(m: &[Vec<Rational>]) -> (Vec<Vec<Rational>>, Vec<usize>) {
    let mut a: Vec<Vec<Rational>> = m.to_vec();
    let rows = a.len();
    let cols = a.first().map(Vec::len).unwrap_or(0);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let inv = a[r][c].recip();
        for x in a[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in 0..cols {
                    let t = &f * &a[r][j];
                    a[i][j] -= t;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    (a, pivots)
}

/// Basis of the right null space of a rational matrix.
pub fn nullspace_q(m: &[Vec<Rational>], cols: usize) -> Vec<Vec<Rational>> {
    let (rref, pivots) = row_echelon_q(m);
    let mut basis = Vec::new();
    for free in (0..cols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![Rational::zero(); cols];
        v[free] = Rational::one();
        for (r, &pc) in pivots.iter().enumerate() {
            v[pc] = -rref[r][free].clone();
        }
        basis.push(v);
    }
    basis
}

pub fn mul_q(a: &[Vec<Rational>], b: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    let n = a.len();
    let k = b.len();
    let m = b.first().map(Vec::len).unwrap_or(0);
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let mut acc = Rational::zero();
                    for l in 0..k {
                        if !a[i][l].is_zero() && !b[l][j].is_zero() {
                            acc += &a[i][l] * &b[l][j];
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

pub fn identity_q(n: usize) -> Vec<Vec<Rational>> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { Rational::one() } else { Rational::zero() })
                .collect()
        })
        .collect()
}

/// Exact inverse, `None` if singular.
pub fn inverse_q(a: &[Vec<Rational>]) -> Option<Vec<Vec<Rational>>> {
    let n = a.len();
    let aug: Vec<Vec<Rational>> = a
        .iter()
        .zip(identity_q(n))
        .map(|(row, id)| row.iter().cloned().chain(id).collect())
        .collect();
    let (rref, pivots) = row_echelon_q(&aug);
    if pivots.len() < n || pivots[n - 1] != n - 1 {
        return None;
    }
    Some(rref.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// Largest absolute entry of a float matrix.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Largest absolute value among rationals, as a float.
pub fn max_abs_q(xs: &[Rational]) -> f64 {
    xs.iter()
        .map(|x| crate::scalarfield::rational_to_f64(&x.abs()))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalarfield::{rat, Poly};

    #[test]
    fn product_and_trace() {
        let x = Poly::var(2, 0);
        let y = Poly::var(2, 1);
        let a = Mat::from_rows(vec![vec![x.clone(), Poly::one(2)], vec![y.clone(), Poly::zero(2)]]);
        let a2 = a.mul(&a);
        assert_eq!(a2.trace(), &(&x * &x) + &Poly::from_int(2, 2).mul(&y));
    }

    #[test]
    fn rational_nullspace_and_inverse() {
        let m = vec![vec![rat(1), rat(2)], vec![rat(2), rat(4)]];
        assert_eq!(rank_q(&m), 1);
        let ns = nullspace_q(&m, 2);
        assert_eq!(ns, vec![vec![rat(-2), rat(1)]]);
        assert!(inverse_q(&m).is_none());
        let b = vec![vec![rat(2), rat(1)], vec![rat(1), rat(1)]];
        let bi = inverse_q(&b).unwrap();
        assert_eq!(mul_q(&b, &bi), identity_q(2));
    }

    #[test]
    fn jet_inverse_matches_derivative_of_inverse() {
        // A(t) = [[1+t, 0],[0, 2]] at t = 1; d/dt A^{-1}_{00} = -1/(1+t)^2 = -1/4
        let t = Jet::variable(1.0, 1, 0);
        let a = Mat::from_rows(vec![
            vec![t.add_const(1.0), Jet::constant(0.0, 1)],
            vec![Jet::constant(0.0, 1), Jet::constant(2.0, 1)],
        ]);
        let inv = jet_inverse(&a, 1e-14).unwrap();
        assert!((inv.get(0, 0).value - 0.5).abs() < 1e-15);
        assert!((inv.get(0, 0).partials[0] + 0.25).abs() < 1e-15);
    }
}
