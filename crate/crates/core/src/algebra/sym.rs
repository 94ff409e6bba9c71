//! Polynomials of total degree at most 2 in the four shift parameters
//! (v0, v1, v2, m), matrices of them, and their univariate specializations.

use rug::Integer;

use super::matrix::{FpMatrix, IntMatrix, Mat};
use super::ring::{IntegerRing, PrimeField, Ring};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    V0,
    V1,
    V2,
    M,
}

impl Var {
    pub const ALL: [Var; 4] = [Var::V0, Var::V1, Var::V2, Var::M];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Number of monomials of degree <= 2 in four variables.
pub const SYM_TERMS: usize = 15;

/// Coefficient layout: `[1, v0, v1, v2, m, then x_a*x_b for a <= b]`.
const fn quad_index(a: usize, b: usize) -> usize {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    const ROW_START: [usize; 4] = [0, 4, 7, 9];
    5 + ROW_START[a] + (b - a)
}

fn quad_pairs() -> [(usize, usize); 10] {
    let mut out = [(0, 0); 10];
    let mut n = 0;
    for a in 0..4 {
        for b in a..4 {
            out[n] = (a, b);
            n += 1;
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymPoly<E> {
    coeffs: [E; SYM_TERMS],
}

impl<E: Clone> SymPoly<E> {
    pub fn zero<R: Ring<Elem = E>>(ring: &R) -> Self {
        SymPoly { coeffs: std::array::from_fn(|_| ring.zero()) }
    }

    pub fn constant<R: Ring<Elem = E>>(ring: &R, c: E) -> Self {
        let mut p = Self::zero(ring);
        p.coeffs[0] = c;
        p
    }

    /// `c0 + sum_k lin[k] * var_k`.
    pub fn linear<R: Ring<Elem = E>>(ring: &R, c0: E, lin: [E; 4]) -> Self {
        let mut p = Self::zero(ring);
        p.coeffs[0] = c0;
        for (k, c) in lin.into_iter().enumerate() {
            p.coeffs[1 + k] = c;
        }
        p
    }

    pub fn coeffs(&self) -> &[E; SYM_TERMS] {
        &self.coeffs
    }

    pub fn constant_term(&self) -> &E {
        &self.coeffs[0]
    }

    pub fn linear_coeff(&self, v: Var) -> &E {
        &self.coeffs[1 + v.index()]
    }

    pub fn quadratic_coeff(&self, a: Var, b: Var) -> &E {
        &self.coeffs[quad_index(a.index(), b.index())]
    }

    pub fn degree<R: Ring<Elem = E>>(&self, ring: &R) -> Option<u32> {
        if self.coeffs[5..].iter().any(|c| !ring.is_zero(c)) {
            Some(2)
        } else if self.coeffs[1..5].iter().any(|c| !ring.is_zero(c)) {
            Some(1)
        } else if !ring.is_zero(&self.coeffs[0]) {
            Some(0)
        } else {
            None
        }
    }

    pub fn is_zero<R: Ring<Elem = E>>(&self, ring: &R) -> bool {
        self.coeffs.iter().all(|c| ring.is_zero(c))
    }

    /// Whether `v` occurs with a nonzero coefficient.
    pub fn involves<R: Ring<Elem = E>>(&self, ring: &R, v: Var) -> bool {
        let k = v.index();
        if !ring.is_zero(&self.coeffs[1 + k]) {
            return true;
        }
        quad_pairs()
            .iter()
            .enumerate()
            .any(|(n, &(a, b))| (a == k || b == k) && !ring.is_zero(&self.coeffs[5 + n]))
    }

    pub fn add<R: Ring<Elem = E>>(&self, ring: &R, other: &Self) -> Self {
        SymPoly { coeffs: std::array::from_fn(|i| ring.add(&self.coeffs[i], &other.coeffs[i])) }
    }

    pub fn scale<R: Ring<Elem = E>>(&self, ring: &R, c: &E) -> Self {
        SymPoly { coeffs: std::array::from_fn(|i| ring.mul(&self.coeffs[i], c)) }
    }

    /// `self += c * other`.
    pub fn add_scaled<R: Ring<Elem = E>>(&mut self, ring: &R, c: &E, other: &Self) {
        if ring.is_zero(c) {
            return;
        }
        for i in 0..SYM_TERMS {
            if !ring.is_zero(&other.coeffs[i]) {
                self.coeffs[i] = ring.add(&self.coeffs[i], &ring.mul(c, &other.coeffs[i]));
            }
        }
    }

    /// `self += a * b`; panics if the product would exceed degree 2.
    pub fn add_product<R: Ring<Elem = E>>(&mut self, ring: &R, a: &Self, b: &Self) {
        let (da, db) = (a.degree(ring), b.degree(ring));
        let (Some(da), Some(db)) = (da, db) else { return };
        assert!(da + db <= 2, "product exceeds degree 2");
        match (da, db) {
            (0, _) => self.add_scaled(ring, &a.coeffs[0], b),
            (_, 0) => self.add_scaled(ring, &b.coeffs[0], a),
            _ => {
                // both of degree exactly 1
                for i in 0..5 {
                    if ring.is_zero(&a.coeffs[i]) {
                        continue;
                    }
                    for j in 0..5 {
                        if ring.is_zero(&b.coeffs[j]) {
                            continue;
                        }
                        let idx = match (i, j) {
                            (0, j) => j,
                            (i, 0) => i,
                            (i, j) => quad_index(i - 1, j - 1),
                        };
                        let t = ring.mul(&a.coeffs[i], &b.coeffs[j]);
                        self.coeffs[idx] = ring.add(&self.coeffs[idx], &t);
                    }
                }
            }
        }
    }

    pub fn mul<R: Ring<Elem = E>>(&self, ring: &R, other: &Self) -> Self {
        let mut out = Self::zero(ring);
        out.add_product(ring, self, other);
        out
    }

    pub fn map<F: Clone>(&self, f: impl Fn(&E) -> F) -> SymPoly<F> {
        SymPoly { coeffs: std::array::from_fn(|i| f(&self.coeffs[i])) }
    }

    pub fn eval<R: Ring<Elem = E>>(&self, ring: &R, x: &[E; 4]) -> E {
        let mut acc = self.coeffs[0].clone();
        for k in 0..4 {
            acc = ring.add(&acc, &ring.mul(&self.coeffs[1 + k], &x[k]));
        }
        for (n, &(a, b)) in quad_pairs().iter().enumerate() {
            let c = &self.coeffs[5 + n];
            if !ring.is_zero(c) {
                acc = ring.add(&acc, &ring.mul(c, &ring.mul(&x[a], &x[b])));
            }
        }
        acc
    }

    /// Substitute `var_k = a_k + b_k t`, giving `[c0, c1, c2]` in `t`.
    pub fn substitute<R: Ring<Elem = E>>(&self, ring: &R, affine: &[(E, E); 4]) -> [E; 3] {
        let mut out = [self.coeffs[0].clone(), ring.zero(), ring.zero()];
        for k in 0..4 {
            let c = &self.coeffs[1 + k];
            out[0] = ring.add(&out[0], &ring.mul(c, &affine[k].0));
            out[1] = ring.add(&out[1], &ring.mul(c, &affine[k].1));
        }
        for (n, &(a, b)) in quad_pairs().iter().enumerate() {
            let c = &self.coeffs[5 + n];
            if ring.is_zero(c) {
                continue;
            }
            let (a0, a1) = &affine[a];
            let (b0, b1) = &affine[b];
            let cross = ring.add(&ring.mul(a0, b1), &ring.mul(a1, b0));
            out[0] = ring.add(&out[0], &ring.mul(c, &ring.mul(a0, b0)));
            out[1] = ring.add(&out[1], &ring.mul(c, &cross));
            out[2] = ring.add(&out[2], &ring.mul(c, &ring.mul(a1, b1)));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymMatrix<E> {
    rows: usize,
    cols: usize,
    entries: Vec<SymPoly<E>>,
}

impl<E: Clone> SymMatrix<E> {
    pub fn zero<R: Ring<Elem = E>>(ring: &R, rows: usize, cols: usize) -> Self {
        SymMatrix { rows, cols, entries: vec![SymPoly::zero(ring); rows * cols] }
    }

    pub fn from_constant<R: Ring<Elem = E>>(ring: &R, m: &Mat<E>) -> Self {
        SymMatrix {
            rows: m.rows(),
            cols: m.cols(),
            entries: m.data().iter().map(|c| SymPoly::constant(ring, c.clone())).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &SymPoly<E> {
        &self.entries[i * self.cols + j]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut SymPoly<E> {
        &mut self.entries[i * self.cols + j]
    }

    pub fn entries(&self) -> &[SymPoly<E>] {
        &self.entries
    }

    pub fn max_degree<R: Ring<Elem = E>>(&self, ring: &R) -> Option<u32> {
        self.entries.iter().filter_map(|e| e.degree(ring)).max()
    }

    /// Rows `sel[0], sel[1], ...` of `self`.
    pub fn select_rows(&self, sel: &[usize]) -> Self {
        let mut entries = Vec::with_capacity(sel.len() * self.cols);
        for &r in sel {
            entries.extend_from_slice(&self.entries[r * self.cols..(r + 1) * self.cols]);
        }
        SymMatrix { rows: sel.len(), cols: self.cols, entries }
    }

    pub fn mul<R: Ring<Elem = E>>(&self, ring: &R, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Self::zero(ring, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero(ring) {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    out.entries[i * other.cols + j].add_product(ring, a, b);
                }
            }
        }
        out
    }

    pub fn left_mul_constant<R: Ring<Elem = E>>(&self, ring: &R, a: &Mat<E>) -> Self {
        assert_eq!(a.cols(), self.rows, "dimension mismatch");
        let mut out = Self::zero(ring, a.rows(), self.cols);
        for i in 0..a.rows() {
            for k in 0..a.cols() {
                let c = &a[(i, k)];
                if ring.is_zero(c) {
                    continue;
                }
                for j in 0..self.cols {
                    out.entries[i * self.cols + j].add_scaled(ring, c, self.get(k, j));
                }
            }
        }
        out
    }

    pub fn map<F: Clone>(&self, f: impl Fn(&E) -> F) -> SymMatrix<F> {
        SymMatrix { rows: self.rows, cols: self.cols, entries: self.entries.iter().map(|e| e.map(&f)).collect() }
    }

    pub fn eval<R: Ring<Elem = E>>(&self, ring: &R, x: &[E; 4]) -> Mat<E> {
        Mat::from_fn(self.rows, self.cols, |i, j| self.get(i, j).eval(ring, x))
    }

    pub fn substitute<R: Ring<Elem = E>>(&self, ring: &R, affine: &[(E, E); 4]) -> UniMatrix<E> {
        UniMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e.substitute(ring, affine)).collect(),
        }
    }
}

/// Values for the shift parameters; `None` marks an unassigned variable.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Assignment {
    pub values: [Option<Integer>; 4],
}

impl Assignment {
    pub fn new(v: [i64; 3], m: i64) -> Self {
        Assignment { values: [Some(v[0].into()), Some(v[1].into()), Some(v[2].into()), Some(m.into())] }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Evaluated {
    Int(IntMatrix),
    Fp(FpMatrix),
}

/// Evaluate an integer symbolic matrix, exactly or mod `p`. A variable that
/// occurs in the matrix but is absent from the assignment is a usage error.
pub fn eval_sym(s: &SymMatrix<Integer>, assignment: &Assignment, modulus: Option<u64>) -> Result<Evaluated> {
    let z = IntegerRing;
    let mut x: [Integer; 4] = Default::default();
    for v in Var::ALL {
        match &assignment.values[v.index()] {
            Some(val) => x[v.index()] = val.clone(),
            None => {
                if s.entries.iter().any(|e| e.involves(&z, v)) {
                    return Err(Error::Usage(format!("variable {v:?} occurs but is unassigned")));
                }
            }
        }
    }
    match modulus {
        None => Ok(Evaluated::Int(s.eval(&z, &x))),
        Some(p) => {
            let f = PrimeField::new(p)?;
            let xm = x.each_ref().map(|v| f.reduce_integer(v));
            let sm = s.map(|c| f.reduce_integer(c));
            Ok(Evaluated::Fp(FpMatrix::from_mat(f, &sm.eval(&f, &xm))))
        }
    }
}

/// Matrix of quadratics in a single variable `t`: entry `[c0, c1, c2]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UniMatrix<E> {
    rows: usize,
    cols: usize,
    entries: Vec<[E; 3]>,
}

impl<E: Clone> UniMatrix<E> {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &[E; 3] {
        &self.entries[i * self.cols + j]
    }

    pub fn entries(&self) -> &[[E; 3]] {
        &self.entries
    }

    pub fn map<F: Clone>(&self, f: impl Fn(&E) -> F) -> UniMatrix<F> {
        UniMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| [f(&e[0]), f(&e[1]), f(&e[2])]).collect(),
        }
    }

    pub fn eval<R: Ring<Elem = E>>(&self, ring: &R, t: &E) -> Mat<E> {
        Mat::from_fn(self.rows, self.cols, |i, j| {
            let [c0, c1, c2] = self.get(i, j);
            ring.add(c0, &ring.mul(t, &ring.add(c1, &ring.mul(t, c2))))
        })
    }
}

impl UniMatrix<u64> {
    pub fn eval_fp(&self, field: PrimeField, t: u64) -> FpMatrix {
        FpMatrix::from_mat(field, &self.eval(&field, &(t % field.p())))
    }
}

/// Successive values `S(t0), S(t0+1), ...` mod p of a quadratic matrix, by
/// second-order finite differences: three additions per entry per step.
pub struct FiniteDiffStream {
    value: FpMatrix,
    d1: Vec<u64>,
    d2: Vec<u64>,
    remaining: usize,
}

impl FiniteDiffStream {
    pub fn new(s: &UniMatrix<u64>, field: PrimeField, t0: u64, n: usize) -> Self {
        let f = field;
        let v0 = s.eval_fp(f, t0);
        let v1 = s.eval_fp(f, t0 + 1);
        let d1 = v0.data().iter().zip(v1.data()).map(|(&a, &b)| f.subm(b, a)).collect();
        let d2 = s.entries.iter().map(|e| f.addm(e[2] % f.p(), e[2] % f.p())).collect();
        FiniteDiffStream { value: v0, d1, d2, remaining: n }
    }

    /// The current value, without advancing.
    pub fn current(&self) -> &FpMatrix {
        &self.value
    }

    /// Move to the next value in place.
    pub fn advance(&mut self) {
        let f = self.value.field();
        for ((v, d1), d2) in self.value.data_mut().iter_mut().zip(self.d1.iter_mut()).zip(&self.d2) {
            *v = f.addm(*v, *d1);
            *d1 = f.addm(*d1, *d2);
        }
    }
}

impl Iterator for FiniteDiffStream {
    type Item = FpMatrix;

    fn next(&mut self) -> Option<FpMatrix> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let out = self.value.clone();
        self.advance();
        Some(out)
    }
}
