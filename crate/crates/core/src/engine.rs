//! Per-prime computation: transport edge data along the line v(t) with the
//! product C_p = M(p-2) ... M(0) and read off the Cartier-Manin matrix.

use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rug::Integer;
use serde::Serialize;

use crate::algebra::matrix::mul_into;
use crate::algebra::{FiniteDiffStream, FpMatrix, IntegerRing, Mat, PrimeField, Ring, UniMatrix};
use crate::curve::{
    bad_prime_multiple, is_smooth_modp, naive_count, nondegenerate_modp, random_good_model, BadPrimeData, CurveModP,
    QuarticCurve,
};
use crate::error::{Error, Result};
use crate::transition::{build_qg, specialize_m, Edge, ShiftFamily, SpecializeMode, B2, D6_LEN, W_DIM};
use crate::algebra::monomial::{lex_monomials, Monomial};
use crate::algebra::poly::Form;

/// Below this bound point counts are done naively; above it the trace mod p
/// determines `a_p` through the Weil bound.
pub const COUNT_BOUND: u64 = 144;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Fallback,
    BadReduction,
    Skipped,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Fallback => "fallback",
            Status::BadReduction => "bad_reduction",
            Status::Skipped => "skipped",
        }
    }
}

/// Which transport to use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Path {
    /// Materialize the 16x16 product C_p and invert it.
    #[default]
    Compressed,
    /// The 28x28 product of the tau matrices, without compression.
    Uncompressed,
    /// Push only the needed vectors through M(t); the middle column comes
    /// from a second pass on the model with x0 and x1 exchanged.
    Streamed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CartierManin {
    pub p: u64,
    pub a: [[u64; 3]; 3],
}

impl CartierManin {
    pub fn field(&self) -> PrimeField {
        PrimeField::new(self.p).expect("prime")
    }

    pub fn matrix(&self) -> FpMatrix {
        FpMatrix::from_fn(self.field(), 3, 3, |i, j| self.a[i][j])
    }

    pub fn trace(&self) -> u64 {
        self.matrix().trace()
    }

    /// `det(I - T A)` mod p, padded to degree 6.
    pub fn lpoly_modp(&self) -> [u64; 7] {
        let f = self.field();
        let a = &self.a;
        let minor = |i: usize, j: usize| f.subm(f.mulm(a[i][i], a[j][j]), f.mulm(a[i][j], a[j][i]));
        let e2 = f.addm(f.addm(minor(0, 1), minor(0, 2)), minor(1, 2));
        let det = self.matrix().det();
        [1 % self.p, f.negm(self.trace()), e2, f.negm(det), 0, 0, 0]
    }

    pub fn rank(&self) -> usize {
        self.matrix().rank()
    }

    /// Rank of `A^3`, the stable rank over a prime field.
    pub fn p_rank(&self) -> usize {
        self.matrix().pow(3).rank()
    }
}

/// Exponents of `f^(p-1)` that make up the matrix, row by row.
pub fn target_exponents(p: u64) -> [[[i64; 3]; 3]; 3] {
    let p = p as i64;
    [
        [[p - 1, p - 1, 2 * p - 2], [2 * p - 1, p - 1, p - 2], [p - 1, 2 * p - 1, p - 2]],
        [[p - 2, p - 1, 2 * p - 1], [2 * p - 2, p - 1, p - 1], [p - 2, 2 * p - 1, p - 1]],
        [[p - 1, p - 2, 2 * p - 1], [2 * p - 1, p - 2, p - 1], [p - 1, 2 * p - 2, p - 1]],
    ]
}

/// Build the matrix from any coefficient lookup on `f^(p-1)`.
pub fn assemble(p: u64, mut coeff: impl FnMut([i64; 3]) -> Option<u64>) -> Result<CartierManin> {
    let t = target_exponents(p);
    let mut a = [[0u64; 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            a[r][c] = coeff(t[r][c])
                .ok_or_else(|| Error::Internal(format!("coefficient at {:?} was not computed", t[r][c])))?;
        }
    }
    Ok(CartierManin { p, a })
}

/// Direct extraction from `f^(p-1)`; only sensible for tiny p.
pub fn cartier_manin_direct(c: &CurveModP) -> CartierManin {
    let f = c.field();
    let p = f.p();
    let power = (0..p - 1).fold(Form::from_coeffs(0, vec![1 % p]), |acc, _| acc.mul(&f, c.form()));
    assemble(p, |e| {
        let m: Monomial = [e[0] as u32, e[1] as u32, e[2] as u32];
        Some(*power.coeff(&m))
    })
    .expect("all targets present")
}

/// The pieces of a shift family needed along the line `v(t)`; everything is
/// specialized in integer mode, so reducing these reduces the family.
#[derive(Clone, Debug)]
pub struct Specialized<E> {
    pub pi: Mat<E>,
    pub m: UniMatrix<E>,
    pub tau: UniMatrix<E>,
    pub psi_w1: Mat<E>,
    pub psi_v1: Mat<E>,
    pub lambda: E,
}

impl<E: Clone> Specialized<E> {
    pub fn from_family<R: Ring<Elem = E>>(fam: &ShiftFamily<R>) -> Self {
        let r = &fam.ring;
        let at = |v: [i64; 3], m: i64| [v[0], v[1], v[2], m].map(|x| r.from_i64(x));
        Specialized {
            pi: fam.pi.clone(),
            m: fam.m.clone(),
            tau: specialize_m(r, &fam.tau, SpecializeMode::Integer),
            psi_w1: fam.psi.eval(r, &at([0, -1, -1], -2)),
            psi_v1: fam.psi.eval(r, &at([-1, 0, -1], -2)),
            lambda: fam.lambda().clone(),
        }
    }
}

/// Data for one prime: everything reduced mod p.
#[derive(Clone, Debug)]
pub struct PrimeData {
    pub field: PrimeField,
    pub pi: FpMatrix,
    pub m: UniMatrix<u64>,
    pub tau: UniMatrix<u64>,
    pub psi_w1: FpMatrix,
    pub psi_v1: FpMatrix,
    pub lambda: u64,
}

impl PrimeData {
    pub fn from_integer(s: &Specialized<Integer>, field: PrimeField) -> Result<Self> {
        let r = |x: &Integer| field.reduce_integer(x);
        let lambda = r(&s.lambda);
        if lambda == 0 {
            return Err(Error::Internal(format!("lambda vanishes mod {}", field.p())));
        }
        Ok(PrimeData {
            field,
            pi: FpMatrix::from_mat(field, &s.pi.map(r)),
            m: s.m.map(r),
            tau: s.tau.map(r),
            psi_w1: FpMatrix::from_mat(field, &s.psi_w1.map(r)),
            psi_v1: FpMatrix::from_mat(field, &s.psi_v1.map(r)),
            lambda,
        })
    }

    pub fn from_field_family(fam: &ShiftFamily<PrimeField>) -> Self {
        let s = Specialized::from_family(fam);
        let field = fam.ring;
        PrimeData {
            field,
            pi: FpMatrix::from_mat(field, &s.pi),
            m: s.m,
            tau: s.tau,
            psi_w1: FpMatrix::from_mat(field, &s.psi_w1),
            psi_v1: FpMatrix::from_mat(field, &s.psi_v1),
            lambda: s.lambda,
        }
    }

    /// Build directly from a model that is nondegenerate mod p.
    pub fn from_model(c: &CurveModP) -> Result<Self> {
        let fam = ShiftFamily::new(c.field(), c.form().clone())?;
        Ok(Self::from_field_family(&fam))
    }
}

/// `C_p = M(p-2) ... M(0)` mod p.
pub fn compute_cp(data: &PrimeData) -> FpMatrix {
    let f = data.field;
    let p = f.p();
    let mut stream = FiniteDiffStream::new(&data.m, f, 0, (p - 1) as usize);
    let mut acc = stream.current().clone();
    let mut tmp = FpMatrix::zeros(f, W_DIM, W_DIM);
    for _ in 1..p - 1 {
        stream.advance();
        mul_into(stream.current(), &acc, &mut tmp);
        std::mem::swap(&mut acc, &mut tmp);
    }
    acc
}

/// `M(p-2) ... M(0) * z` without forming the product.
pub fn transport_vectors(data: &PrimeData, z: &FpMatrix) -> FpMatrix {
    let f = data.field;
    let p = f.p();
    let mut stream = FiniteDiffStream::new(&data.m, f, 0, (p - 1) as usize);
    let mut acc = z.clone();
    let mut tmp = acc.clone();
    for k in 0..p - 1 {
        if k > 0 {
            stream.advance();
        }
        mul_into(stream.current(), &acc, &mut tmp);
        std::mem::swap(&mut acc, &mut tmp);
    }
    acc
}

/// `tau(v(p-2)) ... tau(v(0)) * z`, exploiting the sparsity of tau.
pub fn transport_uncompressed(data: &PrimeData, z: &FpMatrix) -> FpMatrix {
    let f = data.field;
    let p = f.p();
    let n = D6_LEN;
    assert_eq!(z.rows(), n);
    let k = z.cols();
    // nonzero entries with their finite-difference state
    let mut entries: Vec<(usize, usize, u64, u64, u64)> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let e = data.tau.get(i, j);
            if e.iter().any(|&c| c != 0) {
                let v0 = e[0];
                let v1 = f.addm(f.addm(e[0], e[1]), e[2]);
                entries.push((i, j, v0, f.subm(v1, v0), f.addm(e[2], e[2])));
            }
        }
    }
    let mut acc = z.clone();
    let mut next = vec![0u128; n * k];
    let wide = p >= 1 << 32;
    for _ in 0..p - 1 {
        next.iter_mut().for_each(|x| *x = 0);
        for e in entries.iter_mut() {
            let (i, j, v) = (e.0, e.1, e.2);
            if v != 0 {
                let src = acc.row(j);
                let dst = &mut next[i * k..(i + 1) * k];
                for (d, &s) in dst.iter_mut().zip(src) {
                    if wide {
                        *d = (*d + f.mulm(v, s) as u128) % p as u128;
                    } else {
                        *d += (v * s) as u128;
                    }
                }
            }
            e.2 = f.addm(e.2, e.3);
            e.3 = f.addm(e.3, e.4);
        }
        for (dst, src) in acc.data_mut().iter_mut().zip(&next) {
            *dst = (src % p as u128) as u64;
        }
    }
    acc
}

/// Edge data: `f^(p-2)` restricted to `D(w,6)` for the three start points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeData {
    /// `w1 = (0, 2p-1, 2p-1)`, `w2 = (3p-1, 0, p-1)`, `w3 = (0, 3p-1, p-1)`.
    pub g: [Vec<u64>; 3],
}

/// The start points `w1, w2, w3` and targets `v1, v2, v3`.
pub fn start_points(p: u64) -> [[i64; 3]; 3] {
    let p = p as i64;
    [[0, 2 * p - 1, 2 * p - 1], [3 * p - 1, 0, p - 1], [0, 3 * p - 1, p - 1]]
}

pub fn target_points(p: u64) -> [[i64; 3]; 3] {
    let p = p as i64;
    [[p - 1, p, 2 * p - 1], [2 * p, p - 1, p - 1], [p - 1, 2 * p, p - 1]]
}

/// Edge data from power-series coefficients of `1/h(t)^2` along the
/// coordinate lines, computed with powers of the recurrence matrix.
pub fn edge_vectors(c: &CurveModP) -> Result<EdgeData> {
    let f = c.field();
    let p = f.p();
    let e1: Vec<u64> = (0..8).map(|i| u64::from(i == 0)).collect();
    let f040 = c.coeff(&[0, 4, 0]);
    let f031 = c.coeff(&[0, 3, 1]);
    let f400 = c.coeff(&[4, 0, 0]);
    let inv040 = f.inv(f040).ok_or_else(|| Error::Degenerate("corner x1^4 vanishes".into()))?;
    let inv400 = f.inv(f400).ok_or_else(|| Error::Degenerate("corner x0^4 vanishes".into()))?;

    let q = build_qg(c, Edge::X0Zero)?;
    let qp1 = q.pow(p - 1);
    let low = qp1.mul_vec(&e1); // c_{p-1-j}
    let high = q.pow(p).mul_vec(&low); // c_{2p-1-j}
    let q2 = build_qg(c, Edge::X1Zero)?;
    let low2 = q2.pow(p - 1).mul_vec(&e1);

    let d6 = lex_monomials(6);
    let mut g = [vec![0u64; D6_LEN], vec![0u64; D6_LEN], vec![0u64; D6_LEN]];
    for j in 0..=6u32 {
        let jj = j as usize;
        let on_x0_zero = crate::algebra::monomial::position(&[0, 6 - j, j]);
        let on_x1_zero = crate::algebra::monomial::position(&[6 - j, 0, j]);
        let a = f.mulm(high[jj], inv040);
        let b = f.mulm(f031, f.mulm(low[jj], f.mulm(inv040, inv040)));
        g[0][on_x0_zero] = f.addm(a, b);
        g[1][on_x1_zero] = f.mulm(low2[jj], inv400);
        g[2][on_x0_zero] = f.mulm(low[jj], inv040);
    }
    debug_assert_eq!(d6.len(), D6_LEN);
    Ok(EdgeData { g })
}

/// Look-up table of computed `f^(p-1)` coefficients.
#[derive(Default)]
struct Coefficients(Vec<([i64; 3], u64)>);

impl Coefficients {
    /// Record the D_2 block of a compressed vector at target `v`.
    fn add_block(&mut self, v: [i64; 3], block: &[u64], swap: bool) {
        for (s, &val) in lex_monomials(2).monomials().iter().zip(block) {
            let mut e = [v[0] - s[0] as i64, v[1] - s[1] as i64, v[2] - s[2] as i64];
            if swap {
                e.swap(0, 1);
            }
            self.0.push((e, val));
        }
    }

    fn get(&self, e: [i64; 3]) -> Option<u64> {
        self.0.iter().find(|(x, _)| *x == e).map(|&(_, v)| v)
    }
}

fn neg_vec(f: &PrimeField, v: &[u64]) -> Vec<u64> {
    v.iter().map(|&x| f.negm(x)).collect()
}

/// Assemble the matrix from `C_p` and the edge data of the same model.
pub fn cartier_manin_from_cp(c: &CurveModP, pi: &FpMatrix, cp: &FpMatrix) -> Result<CartierManin> {
    let f = c.field();
    let p = f.p();
    let edges = edge_vectors(c)?;
    let x: Vec<Vec<u64>> = edges.g.iter().map(|g| pi.mul_vec(g)).collect();
    let inv = cp.inverse().ok_or_else(|| Error::Internal(format!("C_p is singular mod {p}")))?;
    let y1 = neg_vec(&f, &cp.mul_vec(&x[0]));
    let y2 = neg_vec(&f, &inv.mul_vec(&x[1]));
    let y3 = neg_vec(&f, &cp.mul_vec(&x[2]));
    let v = target_points(p);
    let mut table = Coefficients::default();
    table.add_block(v[0], &y1[..B2], false);
    table.add_block(v[1], &y2[..B2], false);
    table.add_block(v[2], &y3[..B2], false);
    assemble(p, |e| table.get(e))
}

fn stack_columns(field: PrimeField, cols: &[&[u64]]) -> FpMatrix {
    let rows = cols[0].len();
    FpMatrix::from_fn(field, rows, cols.len(), |i, j| cols[j][i])
}

/// The same matrix through the uncompressed 28x28 transport.
pub fn cartier_manin_uncompressed(c: &CurveModP, data: &PrimeData) -> Result<CartierManin> {
    let f = c.field();
    let p = f.p();
    let edges = edge_vectors(c)?;
    // U_p [psi_w1 | g_w1 | g_w3]
    let mut cols: Vec<Vec<u64>> = (0..W_DIM).map(|j| (0..D6_LEN).map(|i| data.psi_w1[(i, j)]).collect()).collect();
    cols.push(edges.g[0].clone());
    cols.push(edges.g[2].clone());
    let refs: Vec<&[u64]> = cols.iter().map(|v| v.as_slice()).collect();
    let z = transport_uncompressed(data, &stack_columns(f, &refs));
    let pz = data.pi.mul(&z);
    let k = FpMatrix::from_fn(f, W_DIM, W_DIM, |i, j| pz[(i, j)]);
    let kinv = k.inverse().ok_or_else(|| Error::Internal(format!("pi U_p psi is singular mod {p}")))?;
    let y1: Vec<u64> = (0..W_DIM).map(|i| f.negm(pz[(i, W_DIM)])).collect();
    let y3: Vec<u64> = (0..W_DIM).map(|i| f.negm(pz[(i, W_DIM + 1)])).collect();
    // C_p^{-1} = -lambda (pi U_p psi_w1)^{-1}, and y2 = -C_p^{-1} x_w2
    let y2: Vec<u64> = kinv.scale(data.lambda).mul_vec(&data.pi.mul_vec(&edges.g[1]));
    let v = target_points(p);
    let mut table = Coefficients::default();
    table.add_block(v[0], &y1[..B2], false);
    table.add_block(v[1], &y2[..B2], false);
    table.add_block(v[2], &y3[..B2], false);
    assemble(p, |e| table.get(e))
}

/// Streamed variant: two vector passes on the model and one on its x0/x1 swap.
pub fn cartier_manin_streamed(c: &CurveModP, data: &PrimeData, swapped: &CurveModP, sdata: &PrimeData) -> Result<CartierManin> {
    let f = c.field();
    let p = f.p();
    let edges = edge_vectors(c)?;
    let sedges = edge_vectors(swapped)?;
    let x1 = data.pi.mul_vec(&edges.g[0]);
    let x3 = data.pi.mul_vec(&edges.g[2]);
    let z = transport_vectors(data, &stack_columns(f, &[&x1, &x3]));
    let sx3 = sdata.pi.mul_vec(&sedges.g[2]);
    let sz = transport_vectors(sdata, &stack_columns(f, &[&sx3]));
    let y1: Vec<u64> = (0..B2).map(|i| f.negm(z[(i, 0)])).collect();
    let y3: Vec<u64> = (0..B2).map(|i| f.negm(z[(i, 1)])).collect();
    let sy3: Vec<u64> = (0..B2).map(|i| f.negm(sz[(i, 0)])).collect();
    let v = target_points(p);
    let mut table = Coefficients::default();
    table.add_block(v[0], &y1, false);
    table.add_block(v[2], &y3, false);
    table.add_block(v[2], &sy3, true);
    assemble(p, |e| table.get(e))
}

/// Compute with a prepared family for a model that is nondegenerate mod p.
pub fn cartier_manin_with(c: &CurveModP, data: &PrimeData, path: Path) -> Result<CartierManin> {
    match path {
        Path::Compressed => cartier_manin_from_cp(c, &data.pi, &compute_cp(data)),
        Path::Uncompressed => cartier_manin_uncompressed(c, data),
        Path::Streamed => {
            let s = c.swap01();
            let sdata = PrimeData::from_model(&s)?;
            cartier_manin_streamed(c, data, &s, &sdata)
        }
    }
}

/// Lift a trace mod p to the unique `a_p` with `|a_p| <= 6 sqrt(p)`; only
/// unique for p > 144.
pub fn lift_trace(p: u64, trace: u64) -> Option<i64> {
    if p <= COUNT_BOUND {
        return None;
    }
    let bound = weil_bound(p);
    let t = trace as i64;
    let pi = p as i64;
    [t, t - pi].into_iter().find(|a| a.abs() <= bound)
}

/// `floor(6 sqrt(p))`.
pub fn weil_bound(p: u64) -> i64 {
    let mut b = (36.0 * p as f64).sqrt() as i64;
    while (b + 1) * (b + 1) <= 36 * p as i64 {
        b += 1;
    }
    while b * b > 36 * p as i64 {
        b -= 1;
    }
    b
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrimeOutcome {
    pub p: u64,
    pub status: Status,
    pub cm: Option<CartierManin>,
    pub a_p: Option<i64>,
    pub count: Option<u64>,
    pub note: Option<String>,
}

impl PrimeOutcome {
    pub fn bad(p: u64) -> Self {
        PrimeOutcome { p, status: Status::BadReduction, cm: None, a_p: None, count: None, note: None }
    }
}

/// Attach `a_p` and the point count, cross-checking the trace for small p.
pub fn finish(c: &CurveModP, cm: CartierManin, status: Status, note: Option<String>) -> Result<PrimeOutcome> {
    let p = c.p();
    let f = c.field();
    let (a_p, count) = if p <= COUNT_BOUND {
        let n = naive_count(c);
        let a = p as i64 + 1 - n as i64;
        if f.reduce_i64(a) != cm.trace() {
            return Err(Error::Internal(format!("trace {} disagrees with point count {n} mod {p}", cm.trace())));
        }
        (Some(a), Some(n))
    } else {
        let a = lift_trace(p, cm.trace());
        (a, a.map(|a| (p as i64 + 1 - a) as u64))
    };
    Ok(PrimeOutcome { p, status, cm: Some(cm), a_p, count, note })
}

#[derive(Clone, Debug)]
pub struct EngineOptions {
    pub path: Path,
    pub seed: u64,
    pub max_model_tries: usize,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions { path: Path::Compressed, seed: 0x5eed, max_model_tries: 200 }
    }
}

/// Conjugate the matrix of a model `f(T y)` back to the model `f`.
fn untransform(cm: &CartierManin, t: &[[u64; 3]; 3]) -> CartierManin {
    let f = cm.field();
    // basis order of the matrix: x2, x0, x1
    let order = [2usize, 0, 1];
    let s = FpMatrix::from_fn(f, 3, 3, |i, j| t[order[i]][order[j]]);
    let sinv = s.inverse().expect("invertible change of variables");
    let a = s.mul(&cm.matrix()).mul(&sinv);
    CartierManin { p: cm.p, a: std::array::from_fn(|i| std::array::from_fn(|j| a[(i, j)])) }
}

/// Per-prime computation for a model over F_p, choosing a fallback when the
/// model itself is degenerate. Returns the matrix of the given model.
pub fn cartier_manin_modp(c: &CurveModP, opts: &EngineOptions) -> Result<PrimeOutcome> {
    let p = c.p();
    if !is_smooth_modp(c) {
        return Ok(PrimeOutcome::bad(p));
    }
    if p == 2 {
        return finish(c, cartier_manin_direct(c), Status::Ok, Some("direct extraction".into()));
    }
    if nondegenerate_modp(c) {
        let data = PrimeData::from_model(c)?;
        return finish(c, cartier_manin_with(c, &data, opts.path)?, Status::Ok, None);
    }
    fallback(c, opts)
}

fn fallback(c: &CurveModP, opts: &EngineOptions) -> Result<PrimeOutcome> {
    let p = c.p();
    if p == 3 {
        return finish(c, cartier_manin_direct(c), Status::Fallback, Some("direct extraction".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ p.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let (model, t) = random_good_model(c, &mut rng, opts.max_model_tries)?;
    let data = PrimeData::from_model(&model)?;
    let cm = untransform(&cartier_manin_with(&model, &data, opts.path)?, &t);
    finish(c, cm, Status::Fallback, Some("random change of variables".into()))
}

/// A curve over Z prepared for per-prime work: the integer family and D.
pub struct CurveEngine {
    curve: QuarticCurve,
    family: ShiftFamily<IntegerRing>,
    specialized: Specialized<Integer>,
    bad: BadPrimeData,
    swapped: OnceLock<Result<Specialized<Integer>>>,
}

impl CurveEngine {
    pub fn new(curve: &QuarticCurve, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let family = match ShiftFamily::from_curve(curve) {
            Ok(f) => f,
            Err(e) => {
                // prefer the message naming the vanishing factor
                bad_prime_multiple(curve, &Integer::from(1), &mut rng)?;
                return Err(e);
            }
        };
        let bad = bad_prime_multiple(curve, family.lambda(), &mut rng)?;
        let specialized = Specialized::from_family(&family);
        Ok(CurveEngine { curve: curve.clone(), family, specialized, bad, swapped: OnceLock::new() })
    }

    pub fn curve(&self) -> &QuarticCurve {
        &self.curve
    }

    pub fn family(&self) -> &ShiftFamily<IntegerRing> {
        &self.family
    }

    pub fn specialized(&self) -> &Specialized<Integer> {
        &self.specialized
    }

    pub fn bad_primes(&self) -> &BadPrimeData {
        &self.bad
    }

    pub fn lambda(&self) -> &Integer {
        self.family.lambda()
    }

    pub fn is_good(&self, p: u64) -> bool {
        self.bad.is_good(p)
    }

    pub fn prime_data(&self, p: u64) -> Result<PrimeData> {
        PrimeData::from_integer(&self.specialized, PrimeField::new(p)?)
    }

    pub fn compute(&self, p: u64, opts: &EngineOptions) -> Result<PrimeOutcome> {
        let c = self.curve.reduce(p)?;
        // p odd and prime to D already forces smoothness
        let good = p > 2 && self.is_good(p);
        if !good && !is_smooth_modp(&c) {
            return Ok(PrimeOutcome::bad(p));
        }
        if p == 2 {
            return finish(&c, cartier_manin_direct(&c), Status::Ok, Some("direct extraction".into()));
        }
        if !good {
            return fallback_or_direct(&c, opts);
        }
        let data = self.prime_data(p)?;
        let cm = match opts.path {
            Path::Streamed => {
                let s = c.swap01();
                let sdata = match self.swapped.get_or_init(|| {
                    ShiftFamily::from_curve(&self.curve.swap01()).map(|f| Specialized::from_family(&f))
                }) {
                    Ok(spec) => PrimeData::from_integer(spec, c.field()).or_else(|_| PrimeData::from_model(&s))?,
                    Err(_) => PrimeData::from_model(&s)?,
                };
                cartier_manin_streamed(&c, &data, &s, &sdata)?
            }
            path => cartier_manin_with(&c, &data, path)?,
        };
        finish(&c, cm, Status::Ok, None)
    }
}

/// Bad-but-smooth primes: the reduced model may still be nondegenerate, in
/// which case a family over F_p is built directly.
fn fallback_or_direct(c: &CurveModP, opts: &EngineOptions) -> Result<PrimeOutcome> {
    if nondegenerate_modp(c) {
        let data = PrimeData::from_model(c)?;
        let cm = cartier_manin_with(c, &data, opts.path)?;
        return finish(c, cm, Status::Fallback, Some("family built over F_p".into()));
    }
    fallback(c, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{cartier_manin_bruteforce, power_coeff_bruteforce};

    fn sample() -> QuarticCurve {
        QuarticCurve::from_i64(&[2, 1, -1, 0, 3, 1, -2, 0, 1, 1, 3, -1, 2, 1, 1]).unwrap()
    }

    #[test]
    fn fermat_matches_bruteforce() {
        let eng = CurveEngine::new(&QuarticCurve::fermat(), 1).unwrap();
        for p in [3u64, 5, 7, 13, 17, 29] {
            let out = eng.compute(p, &EngineOptions::default()).unwrap();
            let c = QuarticCurve::fermat().reduce(p).unwrap();
            assert_eq!(out.cm.unwrap().a, cartier_manin_bruteforce(&c), "p={p}");
            if p % 4 == 3 {
                assert_eq!(out.cm.unwrap().a, [[0; 3]; 3]);
            }
        }
    }

    #[test]
    fn random_curve_all_paths_match_bruteforce() {
        let curve = sample();
        let eng = CurveEngine::new(&curve, 1).unwrap();
        for p in [5u64, 7, 11, 13, 31, 53] {
            let c = curve.reduce(p).unwrap();
            let expected = cartier_manin_bruteforce(&c);
            for path in [Path::Compressed, Path::Uncompressed, Path::Streamed] {
                let opts = EngineOptions { path, ..Default::default() };
                let out = eng.compute(p, &opts).unwrap();
                if out.status == Status::BadReduction {
                    continue;
                }
                assert_eq!(out.cm.unwrap().a, expected, "p={p} path={path:?} status={:?}", out.status);
            }
        }
    }

    #[test]
    fn cp_normalization_against_oracle() {
        let curve = sample();
        let eng = CurveEngine::new(&curve, 1).unwrap();
        let p = 13u64;
        let data = eng.prime_data(p).unwrap();
        let c = curve.reduce(p).unwrap();
        let f = c.field();
        let cp = compute_cp(&data);
        let w1 = start_points(p)[0];
        let v1 = target_points(p)[0];
        let gw = power_coeff_bruteforce(&c, p - 2, w1, 6);
        let gv = power_coeff_bruteforce(&c, p - 2, v1, 6);
        assert_eq!(edge_vectors(&c).unwrap().g[0], gw);
        let lhs = cp.mul_vec(&data.pi.mul_vec(&gw));
        let rhs: Vec<u64> = data.pi.mul_vec(&gv).iter().map(|&x| f.negm(x)).collect();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn fallback_model_is_conjugated_back() {
        // nondegenerate at p, so the fallback can be compared with the direct answer
        let curve = sample();
        let p = 23u64;
        let c = curve.reduce(p).unwrap();
        let expected = cartier_manin_bruteforce(&c);
        for seed in 0..4 {
            let out = fallback(&c, &EngineOptions { seed, ..Default::default() }).unwrap();
            assert_eq!(out.cm.unwrap().a, expected, "seed={seed}");
        }
    }

    #[test]
    fn klein_at_two_is_a_permutation() {
        let out = cartier_manin_modp(&QuarticCurve::klein().reduce(2).unwrap(), &EngineOptions::default()).unwrap();
        assert_eq!(out.cm.unwrap().a, [[0, 1, 0], [0, 0, 1], [1, 0, 0]]);
    }

    #[test]
    fn weil_bound_is_exact_floor() {
        assert_eq!(weil_bound(149), 73);
        assert_eq!(weil_bound(100), 60);
        assert_eq!(lift_trace(149, 148), Some(-1));
        assert_eq!(lift_trace(149, 74), None);
        assert_eq!(lift_trace(101, 3), None);
    }
}
