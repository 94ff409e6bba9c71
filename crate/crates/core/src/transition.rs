//! The shift operators: basis selection, the compression identity, the
//! projection pi, its section psi, the extension step phi/tau and the
//! compressed operator T = pi * tau * psi with its one-parameter
//! specialization M(t).

use rug::Integer;

use crate::algebra::linalg::{adjugate, echelon_pivots, scaled_inverse};
use crate::algebra::monomial::{self, lex_monomials, Monomial};
use crate::algebra::poly::Form;
use crate::algebra::{FpMatrix, IntegerRing, Mat, PrimeField, Ring, SymMatrix, SymPoly, UniMatrix};
use crate::error::{Error, Result};

/// `|B_2|`: every quadric survives, since the Jacobian ideal starts in degree 4.
pub const B2: usize = 6;
/// `|B_6|`.
pub const B6: usize = 10;
/// Dimension of the compressed space.
pub const W_DIM: usize = B2 + B6;
pub const D6_LEN: usize = 28;
pub const D7_LEN: usize = 36;
const GENERATORS: usize = 3 * B2;

/// Extension direction: increase `x_I`, using `x_J` for the second group of
/// equations; the remaining variable is `x_K`.
pub const DIR_I: usize = 0;
pub const DIR_J: usize = 1;
pub const DIR_K: usize = 2;

/// The degree-6 monomials complementing the Jacobian ideal, and the pivots.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasisSelection {
    pub b6: Vec<Monomial>,
    pub pivots: Vec<Monomial>,
}

/// Rows `x^s * x_i dF/dx_i` for `s` in D_2 (outer) and `i` (inner), in D_6
/// coordinates.
pub fn generator_rows<R: Ring>(ring: &R, f: &Form<R::Elem>) -> Vec<Vec<R::Elem>> {
    let euler: Vec<Form<R::Elem>> = (0..3).map(|i| f.euler_partial(ring, i)).collect();
    let mut rows = Vec::with_capacity(GENERATORS);
    for s in lex_monomials(2).monomials() {
        for e in &euler {
            rows.push(e.shift(ring, s).coeffs().to_vec());
        }
    }
    rows
}

/// Greedy pivots at the lex-earliest columns of the generator matrix; `B_6`
/// is the set of non-pivot monomials.
pub fn select_basis<R: Ring>(ring: &R, f: &Form<R::Elem>) -> Result<BasisSelection> {
    let gens = Mat::from_rows(generator_rows(ring, f));
    let pivots = echelon_pivots(ring, &gens);
    if pivots.len() != GENERATORS {
        return Err(Error::Degenerate(format!(
            "Jacobian ideal has rank {} in degree 6, expected {GENERATORS}",
            pivots.len()
        )));
    }
    let d6 = lex_monomials(6);
    let b6 = (0..D6_LEN).filter(|c| !pivots.contains(c)).map(|c| d6.get(c)).collect();
    Ok(BasisSelection { b6, pivots: pivots.iter().map(|&c| d6.get(c)).collect() })
}

/// Solutions of `lambda x^u = sum_i h_{u,i} x_i dF/dx_i + sum_beta c_{u,beta} x^beta`
/// for every `u` in D_6.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Compression<E> {
    pub lambda: E,
    /// `h[u][i][s]`: coefficient of `x^s` in `h_{u,i}`.
    pub h: Vec<[Vec<E>; 3]>,
    /// `c[u][beta]`, `beta` indexing `B_6`.
    pub c: Vec<Vec<E>>,
}

pub fn compression_data<R: Ring>(ring: &R, f: &Form<R::Elem>, basis: &BasisSelection) -> Result<Compression<R::Elem>> {
    let gens = generator_rows(ring, f);
    // columns: the 18 generators, then the basis monomials
    let mx = Mat::from_fn(D6_LEN, D6_LEN, |u, col| {
        if col < GENERATORS {
            gens[col][u].clone()
        } else if monomial::position(&basis.b6[col - GENERATORS]) == u {
            ring.one()
        } else {
            ring.zero()
        }
    });
    let (det, inv, _) =
        scaled_inverse(ring, &mx).ok_or_else(|| Error::Degenerate("compression system is singular".into()))?;
    let g = ring.normalizer(&det, inv.data());
    let lambda = ring.div_exact(&det, &g);
    let sol = inv.map(|x| ring.div_exact(x, &g));
    let h = (0..D6_LEN)
        .map(|u| std::array::from_fn(|i| (0..B2).map(|s| sol[(3 * s + i, u)].clone()).collect()))
        .collect();
    let c = (0..D6_LEN).map(|u| (0..B6).map(|b| sol[(GENERATORS + b, u)].clone()).collect()).collect();
    Ok(Compression { lambda, h, c })
}

/// Projection onto the 16 compressed coordinates: the D_2 block
/// `sum_t F_t G_{v-s-t}` followed by the `B_6` coordinates.
pub fn build_pi<R: Ring>(ring: &R, f: &Form<R::Elem>, basis: &BasisSelection) -> Mat<R::Elem> {
    let mut pi = Mat::filled(W_DIM, D6_LEN, ring.zero());
    let d4 = lex_monomials(4);
    for (s_idx, s) in lex_monomials(2).monomials().iter().enumerate() {
        for (t, ft) in d4.monomials().iter().zip(f.coeffs()) {
            pi[(s_idx, monomial::position(&monomial::add(s, t)))] = ft.clone();
        }
    }
    for (j, beta) in basis.b6.iter().enumerate() {
        pi[(B2 + j, monomial::position(beta))] = ring.one();
    }
    pi
}

/// Section of `pi`, scaled by `(m+1) lambda`.
pub fn build_psi<R: Ring>(ring: &R, comp: &Compression<R::Elem>) -> SymMatrix<R::Elem> {
    let mut psi = SymMatrix::zero(ring, D6_LEN, W_DIM);
    for u in 0..D6_LEN {
        for (s_idx, s) in lex_monomials(2).monomials().iter().enumerate() {
            // sum_i (v_i - s_i) h_{u,i,s}
            let mut c0 = ring.zero();
            let mut lin: [R::Elem; 4] = std::array::from_fn(|_| ring.zero());
            for i in 0..3 {
                let h = &comp.h[u][i][s_idx];
                lin[i] = h.clone();
                c0 = ring.sub(&c0, &ring.mul(&ring.from_i64(s[i] as i64), h));
            }
            *psi.get_mut(u, s_idx) = SymPoly::linear(ring, c0, lin);
        }
        for b in 0..B6 {
            let c = &comp.c[u][b];
            let lin = [ring.zero(), ring.zero(), ring.zero(), c.clone()];
            *psi.get_mut(u, B2 + b) = SymPoly::linear(ring, c.clone(), lin);
        }
    }
    psi
}

/// The 8x8 Sylvester-type system of the extension step, its determinant
/// `theta` and adjugate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SylvesterBlock<E> {
    pub a: Mat<E>,
    pub theta: E,
    pub adj: Mat<E>,
}

fn sylvester_block<R: Ring>(ring: &R, f: &Form<R::Elem>, j: usize, k: usize) -> Result<SylvesterBlock<R::Elem>> {
    let fbar: Vec<R::Elem> = (0..=4u32)
        .map(|b| {
            let mut m = [0u32; 3];
            m[j] = b;
            m[k] = 4 - b;
            f.coeff(&m).clone()
        })
        .collect();
    let mut a = Mat::filled(8, 8, ring.zero());
    for r in 0..4 {
        for b in 0..5 {
            a[(r, r + b)] = fbar[b].clone();
            a[(4 + r, r + b)] = ring.mul(&ring.from_i64(b as i64), &fbar[b]);
        }
    }
    let (theta, adj) = adjugate(ring, &a).ok_or_else(|| Error::Degenerate("extension determinant theta vanishes".into()))?;
    Ok(SylvesterBlock { a, theta, adj })
}

/// `phi`: 36x28, from `G|D(v,6)` to `(v_i+1) theta G|D(v+e_i,7)`.
pub fn build_phi<R: Ring>(
    ring: &R,
    f: &Form<R::Elem>,
    i: usize,
    j: usize,
    k: usize,
) -> Result<(SylvesterBlock<R::Elem>, SymMatrix<R::Elem>)> {
    let syl = sylvester_block(ring, f, j, k)?;
    let mut phi = SymMatrix::zero(ring, D7_LEN, D6_LEN);
    let vi = |c: R::Elem| {
        let mut lin: [R::Elem; 4] = std::array::from_fn(|_| ring.zero());
        lin[i] = c.clone();
        SymPoly::linear(ring, c, lin)
    };
    // rows already determined by G|D(v,6)
    for (row, up) in lex_monomials(7).monomials().iter().enumerate() {
        if up[i] >= 1 {
            let mut u = *up;
            u[i] -= 1;
            *phi.get_mut(row, monomial::position(&u)) = vi(syl.theta.clone());
        }
    }
    // known-side matrix of the linear system, rows indexed by s = a e_j + (3-a) e_k
    let mut msys = SymMatrix::zero(ring, 8, D6_LEN);
    let d4 = lex_monomials(4);
    for a in 0..4u32 {
        let mut s = [0u32; 3];
        s[j] = a;
        s[k] = 3 - a;
        for (t, ft) in d4.monomials().iter().zip(f.coeffs()) {
            if t[i] == 0 || ring.is_zero(ft) {
                continue;
            }
            let mut tp = *t;
            tp[i] -= 1;
            let col = monomial::position(&monomial::add(&s, &tp));
            let ti = ring.from_i64(t[i] as i64);
            let tj = ring.from_i64(t[j] as i64);
            let ti_f = ring.mul(&ti, ft);
            let tj_f = ring.mul(&tj, ft);
            // ((m+1) t_i - (v_i+1)) F_t
            let mut lin: [R::Elem; 4] = std::array::from_fn(|_| ring.zero());
            lin[3] = ti_f.clone();
            lin[i] = ring.neg(ft);
            let first = SymPoly::linear(ring, ring.sub(&ti_f, ft), lin);
            // ((v_j - s_j) t_i - (v_i+1) t_j) F_t
            let mut lin: [R::Elem; 4] = std::array::from_fn(|_| ring.zero());
            lin[j] = ti_f.clone();
            lin[i] = ring.neg(&tj_f);
            let c0 = ring.sub(&ring.neg(&ring.mul(&ring.from_i64(s[j] as i64), &ti_f)), &tj_f);
            let second = SymPoly::linear(ring, c0, lin);
            let e = msys.get_mut(a as usize, col);
            *e = e.add(ring, &first);
            let e = msys.get_mut(4 + a as usize, col);
            *e = e.add(ring, &second);
        }
    }
    let solved = msys.left_mul_constant(ring, &syl.adj);
    for c in 0..8u32 {
        let mut up = [0u32; 3];
        up[j] = c;
        up[k] = 7 - c;
        let row = monomial::position(&up);
        for col in 0..D6_LEN {
            *phi.get_mut(row, col) = solved.get(c as usize, col).clone();
        }
    }
    Ok((syl, phi))
}

/// `tau = P_j phi`: row `u''` of D_6 is row `u'' + e_j` of `phi`.
pub fn build_tau<E: Clone>(phi: &SymMatrix<E>, j: usize) -> SymMatrix<E> {
    let sel: Vec<usize> = lex_monomials(6)
        .monomials()
        .iter()
        .map(|u| monomial::position(&monomial::add(u, &monomial::unit(j))))
        .collect();
    phi.select_rows(&sel)
}

pub fn build_t<R: Ring>(ring: &R, pi: &Mat<R::Elem>, tau: &SymMatrix<R::Elem>, psi: &SymMatrix<R::Elem>) -> SymMatrix<R::Elem> {
    tau.mul(ring, psi).left_mul_constant(ring, pi)
}

/// How `M(t)` is obtained from `T`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpecializeMode {
    /// `v = (t, -1-t, -1)`, `m = -2`: valid over Z for every prime at once.
    Integer,
    /// `v = (t, 2p-1-t, 2p-1)`, `m = p-2`.
    ModP(u64),
}

pub fn specialize_m<R: Ring>(ring: &R, t: &SymMatrix<R::Elem>, mode: SpecializeMode) -> UniMatrix<R::Elem> {
    let (c1, c2, m) = match mode {
        SpecializeMode::Integer => (-1i64, -1i64, -2i64),
        SpecializeMode::ModP(p) => {
            let p = p as i64;
            (2 * p - 1, 2 * p - 1, p - 2)
        }
    };
    let aff = [(0, 1), (c1, -1), (c2, 0), (m, 0)].map(|(a, b)| (ring.from_i64(a), ring.from_i64(b)));
    t.substitute(ring, &aff)
}

/// Which edge of the simplex the power-series data lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Edge {
    /// `h = f(0, 1, t)`.
    X0Zero,
    /// `h = f(1, 0, t)`.
    X1Zero,
}

/// Companion-type matrix of the recurrence satisfied by the coefficients of
/// `a_0 / g`, `g = h^2` of degree 8: first row `-a_i / a_0`, identity below.
/// The first column of `Q^s` is `(c_s, ..., c_{s-7})`.
pub fn build_qg(c: &crate::curve::CurveModP, edge: Edge) -> Result<FpMatrix> {
    let f = c.field();
    let h: Vec<u64> = (0..=4u32)
        .map(|b| match edge {
            Edge::X0Zero => c.coeff(&[0, 4 - b, b]),
            Edge::X1Zero => c.coeff(&[4 - b, 0, b]),
        })
        .collect();
    let mut g = [0u64; 9];
    for a in 0..5 {
        for b in 0..5 {
            g[a + b] = f.addm(g[a + b], f.mulm(h[a], h[b]));
        }
    }
    let inv = f.inv(g[0]).ok_or_else(|| Error::Degenerate("edge series has zero constant term".into()))?;
    Ok(FpMatrix::from_fn(f, 8, 8, |r, col| {
        if r == 0 {
            f.negm(f.mulm(g[col + 1], inv))
        } else {
            u64::from(col + 1 == r)
        }
    }))
}

/// Everything needed to step data along the line `v(t)` for one model.
#[derive(Clone, Debug)]
pub struct ShiftFamily<R: Ring> {
    pub ring: R,
    pub form: Form<R::Elem>,
    pub basis: BasisSelection,
    pub compression: Compression<R::Elem>,
    pub pi: Mat<R::Elem>,
    pub psi: SymMatrix<R::Elem>,
    pub sylvester: SylvesterBlock<R::Elem>,
    pub phi: SymMatrix<R::Elem>,
    pub tau: SymMatrix<R::Elem>,
    pub t: SymMatrix<R::Elem>,
    /// `M(t)` in integer mode.
    pub m: UniMatrix<R::Elem>,
}

impl<R: Ring> ShiftFamily<R> {
    pub fn new(ring: R, form: Form<R::Elem>) -> Result<Self> {
        let basis = select_basis(&ring, &form)?;
        let compression = compression_data(&ring, &form, &basis)?;
        let pi = build_pi(&ring, &form, &basis);
        let psi = build_psi(&ring, &compression);
        let (sylvester, phi) = build_phi(&ring, &form, DIR_I, DIR_J, DIR_K)?;
        let tau = build_tau(&phi, DIR_J);
        let t = build_t(&ring, &pi, &tau, &psi);
        let m = specialize_m(&ring, &t, SpecializeMode::Integer);
        Ok(ShiftFamily { ring, form, basis, compression, pi, psi, sylvester, phi, tau, t, m })
    }

    pub fn lambda(&self) -> &R::Elem {
        &self.compression.lambda
    }

    pub fn theta(&self) -> &R::Elem {
        &self.sylvester.theta
    }

    /// `M(t)` at a specific parameter value in integer mode.
    pub fn m_at(&self, t: &R::Elem) -> Mat<R::Elem> {
        self.m.eval(&self.ring, t)
    }
}

impl ShiftFamily<IntegerRing> {
    pub fn from_curve(c: &crate::curve::QuarticCurve) -> Result<Self> {
        Self::new(IntegerRing, c.form().clone())
    }

    /// Reduction mod p; fails if `lambda` or `theta` vanishes there.
    pub fn reduce(&self, p: u64) -> Result<ShiftFamily<PrimeField>> {
        let f = PrimeField::new(p)?;
        let r = |x: &Integer| f.reduce_integer(x);
        let lambda = r(self.lambda());
        let theta = r(self.theta());
        if lambda == 0 || theta == 0 {
            return Err(Error::Degenerate(format!("integer family does not reduce well at p = {p}")));
        }
        let comp = &self.compression;
        Ok(ShiftFamily {
            ring: f,
            form: self.form.map(r),
            basis: self.basis.clone(),
            compression: Compression {
                lambda,
                h: comp.h.iter().map(|hu| std::array::from_fn(|i| hu[i].iter().map(r).collect())).collect(),
                c: comp.c.iter().map(|cu| cu.iter().map(r).collect()).collect(),
            },
            pi: self.pi.map(r),
            psi: self.psi.map(r),
            sylvester: SylvesterBlock { a: self.sylvester.a.map(r), theta, adj: self.sylvester.adj.map(r) },
            phi: self.phi.map(r),
            tau: self.tau.map(r),
            t: self.t.map(r),
            m: self.m.map(r),
        })
    }
}
