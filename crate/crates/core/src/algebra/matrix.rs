//! Dense matrices: a generic container used by the symbolic construction,
//! integer kernels for the remainder forest, and a raw `u64` type for the
//! per-prime hot loop.

use std::ops::{Index, IndexMut};

use rayon::prelude::*;
use rug::Integer;

use super::ring::{PrimeField, Ring};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mat<E> {
    rows: usize,
    cols: usize,
    data: Vec<E>,
}

pub type IntMatrix = Mat<Integer>;

impl<E: Clone> Mat<E> {
    pub fn filled(rows: usize, cols: usize, value: E) -> Self {
        Mat { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> E) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<E>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged rows");
        Mat { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[E] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[E] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<E>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn map<F: Clone>(&self, f: impl FnMut(&E) -> F) -> Mat<F> {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn identity<R: Ring<Elem = E>>(ring: &R, n: usize) -> Self {
        Mat::from_fn(n, n, |i, j| if i == j { ring.one() } else { ring.zero() })
    }

    pub fn mul<R: Ring<Elem = E>>(&self, ring: &R, other: &Mat<E>) -> Mat<E> {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        Mat::from_fn(self.rows, other.cols, |i, j| {
            let mut acc = ring.zero();
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if !ring.is_zero(a) {
                    acc = ring.add(&acc, &ring.mul(a, &other[(k, j)]));
                }
            }
            acc
        })
    }

    pub fn mul_vec<R: Ring<Elem = E>>(&self, ring: &R, v: &[E]) -> Vec<E> {
        assert_eq!(self.cols, v.len(), "dimension mismatch");
        (0..self.rows)
            .map(|i| {
                let mut acc = ring.zero();
                for (a, b) in self.row(i).iter().zip(v) {
                    acc = ring.add(&acc, &ring.mul(a, b));
                }
                acc
            })
            .collect()
    }
}

impl<E> Index<(usize, usize)> for Mat<E> {
    type Output = E;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &E {
        &self.data[i * self.cols + j]
    }
}

impl<E> IndexMut<(usize, usize)> for Mat<E> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut E {
        &mut self.data[i * self.cols + j]
    }
}

impl IntMatrix {
    /// Schoolbook product with fused multiply-add on the big integers.
    pub fn mul_int(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Mat::filled(self.rows, other.cols, Integer::new());
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.cmp0().is_eq() {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * &other[(k, j)];
                }
            }
        }
        out
    }

    /// Strassen-Winograd product for square matrices whose size is a power
    /// of two, recursing while the blocks are larger than `leaf` rows. Worth
    /// it only when the entries are large enough that additions are cheap
    /// next to multiplications.
    pub fn mul_winograd(&self, other: &IntMatrix, leaf: usize) -> IntMatrix {
        let n = self.rows;
        assert!(self.cols == n && other.rows == n && other.cols == n, "square matrices of equal size");
        if n <= leaf.max(1) || n % 2 == 1 {
            return self.mul_int(other);
        }
        let h = n / 2;
        let block = |m: &IntMatrix, bi: usize, bj: usize| {
            IntMatrix::from_fn(h, h, |i, j| m[(bi * h + i, bj * h + j)].clone())
        };
        let zip = |x: &IntMatrix, y: &IntMatrix, sub: bool| {
            IntMatrix::from_fn(h, h, |i, j| {
                if sub {
                    Integer::from(&x[(i, j)] - &y[(i, j)])
                } else {
                    Integer::from(&x[(i, j)] + &y[(i, j)])
                }
            })
        };
        let (a11, a12, a21, a22) = (block(self, 0, 0), block(self, 0, 1), block(self, 1, 0), block(self, 1, 1));
        let (b11, b12, b21, b22) = (block(other, 0, 0), block(other, 0, 1), block(other, 1, 0), block(other, 1, 1));
        let s1 = zip(&a21, &a22, false);
        let s2 = zip(&s1, &a11, true);
        let s3 = zip(&a11, &a21, true);
        let s4 = zip(&a12, &s2, true);
        let t1 = zip(&b12, &b11, true);
        let t2 = zip(&b22, &t1, true);
        let t3 = zip(&b22, &b12, true);
        let t4 = zip(&t2, &b21, true);
        // the seven products are independent
        let pairs = [(&a11, &b11), (&a12, &b21), (&s4, &b22), (&a22, &t4), (&s1, &t1), (&s2, &t2), (&s3, &t3)];
        let mut prods: Vec<IntMatrix> = pairs.par_iter().map(|(x, y)| x.mul_winograd(y, leaf)).collect();
        let p7 = prods.pop().expect("seven products");
        let p6 = prods.pop().expect("seven products");
        let p5 = prods.pop().expect("seven products");
        let p4 = prods.pop().expect("seven products");
        let p3 = prods.pop().expect("seven products");
        let p2 = prods.pop().expect("seven products");
        let p1 = prods.pop().expect("seven products");
        let c11 = zip(&p1, &p2, false);
        let u2 = zip(&p1, &p6, false);
        let u3 = zip(&u2, &p7, false);
        let u4 = zip(&u2, &p5, false);
        let c12 = zip(&u4, &p3, false);
        let c21 = zip(&u3, &p4, true);
        let c22 = zip(&u3, &p5, false);
        IntMatrix::from_fn(n, n, |i, j| {
            let (bi, bj, i, j) = (i / h, j / h, i % h, j % h);
            match (bi, bj) {
                (0, 0) => c11[(i, j)].clone(),
                (0, 1) => c12[(i, j)].clone(),
                (1, 0) => c21[(i, j)].clone(),
                _ => c22[(i, j)].clone(),
            }
        })
    }

    /// Entrywise nonnegative remainder.
    pub fn rem_euc(&self, m: &Integer) -> IntMatrix {
        self.map(|x| rem_euc(x, m))
    }

    pub fn reduce(&self, field: &PrimeField) -> FpMatrix {
        FpMatrix::from_fn(*field, self.rows, self.cols, |i, j| field.reduce_integer(&self[(i, j)]))
    }

    pub fn max_bits(&self) -> u32 {
        self.data.iter().map(|x| x.significant_bits()).max().unwrap_or(0)
    }
}

/// Nonnegative remainder of `x` modulo a positive `m`.
pub fn rem_euc(x: &Integer, m: &Integer) -> Integer {
    let mut r = Integer::from(x % m);
    if r.cmp0().is_lt() {
        r += m;
    }
    r
}

/// Matrix over F_p with raw residues; the type used in all hot loops.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FpMatrix {
    field: PrimeField,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl FpMatrix {
    pub fn zeros(field: PrimeField, rows: usize, cols: usize) -> Self {
        FpMatrix { field, rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(field: PrimeField, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1 % field.p();
        }
        m
    }

    pub fn from_fn(field: PrimeField, rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> u64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j) % field.p());
            }
        }
        FpMatrix { field, rows, cols, data }
    }

    pub fn from_mat(field: PrimeField, m: &Mat<u64>) -> Self {
        Self::from_fn(field, m.rows(), m.cols(), |i, j| m[(i, j)])
    }

    pub fn to_mat(&self) -> Mat<u64> {
        Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)])
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[u64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.field, self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, c: u64) -> Self {
        let f = self.field;
        FpMatrix { data: self.data.iter().map(|&x| f.mulm(x, c)).collect(), ..self.clone() }
    }

    pub fn neg(&self) -> Self {
        let f = self.field;
        FpMatrix { data: self.data.iter().map(|&x| f.negm(x)).collect(), ..self.clone() }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn mul(&self, other: &FpMatrix) -> FpMatrix {
        let mut out = FpMatrix::zeros(self.field, self.rows, other.cols);
        mul_into(self, other, &mut out);
        out
    }

    pub fn mul_vec(&self, v: &[u64]) -> Vec<u64> {
        assert_eq!(self.cols, v.len(), "dimension mismatch");
        (0..self.rows).map(|i| dot(self.field.p(), self.row(i), v.iter().copied())).collect()
    }

    pub fn pow(&self, mut e: u64) -> FpMatrix {
        assert_eq!(self.rows, self.cols);
        let mut base = self.clone();
        let mut acc = FpMatrix::identity(self.field, self.rows);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    pub fn trace(&self) -> u64 {
        (0..self.rows.min(self.cols)).fold(0, |t, i| self.field.addm(t, self[(i, i)]))
    }

    /// Reduced row echelon form in place; returns the pivot columns.
    fn rref(&mut self) -> Vec<usize> {
        let f = self.field;
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(k) = (r..self.rows).find(|&k| self[(k, c)] != 0) else { continue };
            self.swap_rows(k, r);
            let inv = f.inv(self[(r, c)]).unwrap();
            for j in c..self.cols {
                self[(r, j)] = f.mulm(self[(r, j)], inv);
            }
            for i in 0..self.rows {
                let factor = self[(i, c)];
                if i != r && factor != 0 {
                    for j in c..self.cols {
                        let t = f.mulm(factor, self[(r, j)]);
                        self[(i, j)] = f.subm(self[(i, j)], t);
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }

    pub fn rank(&self) -> usize {
        self.clone().rref().len()
    }

    pub fn det(&self) -> u64 {
        assert_eq!(self.rows, self.cols);
        let f = self.field;
        let mut m = self.clone();
        let mut det = 1 % f.p();
        for c in 0..m.cols {
            let Some(k) = (c..m.rows).find(|&k| m[(k, c)] != 0) else { return 0 };
            if k != c {
                m.swap_rows(k, c);
                det = f.negm(det);
            }
            let piv = m[(c, c)];
            det = f.mulm(det, piv);
            let inv = f.inv(piv).unwrap();
            for i in c + 1..m.rows {
                let factor = f.mulm(m[(i, c)], inv);
                if factor != 0 {
                    for j in c..m.cols {
                        let t = f.mulm(factor, m[(c, j)]);
                        m[(i, j)] = f.subm(m[(i, j)], t);
                    }
                }
            }
        }
        det
    }

    pub fn inverse(&self) -> Option<FpMatrix> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut aug = FpMatrix::from_fn(self.field, n, 2 * n, |i, j| {
            if j < n {
                self[(i, j)]
            } else if j - n == i {
                1
            } else {
                0
            }
        });
        let piv = aug.rref();
        if piv.len() < n || piv[n - 1] != n - 1 {
            return None;
        }
        Some(FpMatrix::from_fn(self.field, n, n, |i, j| aug[(i, n + j)]))
    }
}

impl Index<(usize, usize)> for FpMatrix {
    type Output = u64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &u64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for FpMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut u64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Inner product mod p with as few reductions as the size of p allows.
#[inline]
pub fn dot(p: u64, a: &[u64], b: impl Iterator<Item = u64>) -> u64 {
    if p < 1 << 28 && a.len() <= 64 {
        let s: u64 = a.iter().zip(b).map(|(&x, y)| x * y).sum();
        s % p
    } else if p < 1 << 32 {
        let s: u128 = a.iter().zip(b).map(|(&x, y)| (x * y) as u128).sum();
        (s % p as u128) as u64
    } else {
        let f = p as u128;
        a.iter().zip(b).fold(0u64, |acc, (&x, y)| {
            let t = ((x as u128 * y as u128) % f) as u64;
            let s = acc + t;
            if s >= p {
                s - p
            } else {
                s
            }
        })
    }
}

/// `out = a * b`; `out` must already have the right shape.
pub fn mul_into(a: &FpMatrix, b: &FpMatrix, out: &mut FpMatrix) {
    assert_eq!(a.cols, b.rows, "dimension mismatch");
    assert!(out.rows == a.rows && out.cols == b.cols);
    let p = a.field.p();
    let (n, m) = (a.cols, b.cols);
    if p < 1 << 28 && n <= 64 {
        // Row-times-matrix with u64 accumulators: no reduction until the end.
        let mut acc = vec![0u64; m];
        for i in 0..a.rows {
            acc.iter_mut().for_each(|x| *x = 0);
            for k in 0..n {
                let x = a.data[i * n + k];
                if x == 0 {
                    continue;
                }
                let brow = &b.data[k * m..(k + 1) * m];
                for (s, &y) in acc.iter_mut().zip(brow) {
                    *s += x * y;
                }
            }
            for (j, s) in acc.iter().enumerate() {
                out.data[i * m + j] = s % p;
            }
        }
    } else {
        for i in 0..a.rows {
            for j in 0..m {
                out.data[i * m + j] = dot(p, a.row(i), (0..n).map(|k| b.data[k * m + j]));
            }
        }
    }
}
