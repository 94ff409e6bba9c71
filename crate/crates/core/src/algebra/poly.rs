//! Ternary forms over a [`Ring`] and dense univariate polynomials over F_p.

use super::monomial::{self, lex_monomials, Monomial};
use super::ring::{PrimeField, Ring};

/// Homogeneous form in x0, x1, x2; coefficients in lex-descending order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Form<E> {
    degree: u32,
    coeffs: Vec<E>,
}

impl<E: Clone> Form<E> {
    pub fn zero<R: Ring<Elem = E>>(ring: &R, degree: u32) -> Self {
        Form { degree, coeffs: vec![ring.zero(); monomial::count(degree)] }
    }

    pub fn from_coeffs(degree: u32, coeffs: Vec<E>) -> Self {
        assert_eq!(coeffs.len(), monomial::count(degree), "coefficient count");
        Form { degree, coeffs }
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn coeffs(&self) -> &[E] {
        &self.coeffs
    }

    pub fn coeff(&self, m: &Monomial) -> &E {
        &self.coeffs[monomial::position(m)]
    }

    pub fn coeff_mut(&mut self, m: &Monomial) -> &mut E {
        &mut self.coeffs[monomial::position(m)]
    }

    pub fn map<F: Clone>(&self, f: impl Fn(&E) -> F) -> Form<F> {
        Form { degree: self.degree, coeffs: self.coeffs.iter().map(f).collect() }
    }

    pub fn add<R: Ring<Elem = E>>(&self, ring: &R, other: &Self) -> Self {
        assert_eq!(self.degree, other.degree);
        Form { degree: self.degree, coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| ring.add(a, b)).collect() }
    }

    pub fn mul<R: Ring<Elem = E>>(&self, ring: &R, other: &Self) -> Self {
        let mut out = Form::zero(ring, self.degree + other.degree);
        let (ba, bb) = (lex_monomials(self.degree), lex_monomials(other.degree));
        for (ma, ca) in ba.monomials().iter().zip(&self.coeffs) {
            if ring.is_zero(ca) {
                continue;
            }
            for (mb, cb) in bb.monomials().iter().zip(&other.coeffs) {
                if ring.is_zero(cb) {
                    continue;
                }
                let k = monomial::position(&monomial::add(ma, mb));
                out.coeffs[k] = ring.add(&out.coeffs[k], &ring.mul(ca, cb));
            }
        }
        out
    }

    /// `x^m * self`.
    pub fn shift<R: Ring<Elem = E>>(&self, ring: &R, m: &Monomial) -> Self {
        let d = m[0] + m[1] + m[2];
        let mut out = Form::zero(ring, self.degree + d);
        for (t, c) in lex_monomials(self.degree).monomials().iter().zip(&self.coeffs) {
            out.coeffs[monomial::position(&monomial::add(t, m))] = c.clone();
        }
        out
    }

    /// Partial derivative with respect to `x_i`.
    pub fn partial<R: Ring<Elem = E>>(&self, ring: &R, i: usize) -> Self {
        assert!(self.degree > 0);
        let mut out = Form::zero(ring, self.degree - 1);
        for (t, c) in lex_monomials(self.degree).monomials().iter().zip(&self.coeffs) {
            if t[i] > 0 {
                let mut s = *t;
                s[i] -= 1;
                out.coeffs[monomial::position(&s)] = ring.mul(&ring.from_i64(t[i] as i64), c);
            }
        }
        out
    }

    /// The Euler-type operator `x_i d/dx_i`, which preserves degree.
    pub fn euler_partial<R: Ring<Elem = E>>(&self, ring: &R, i: usize) -> Self {
        let mut out = Form::zero(ring, self.degree);
        for (k, (t, c)) in lex_monomials(self.degree).monomials().iter().zip(&self.coeffs).enumerate() {
            out.coeffs[k] = ring.mul(&ring.from_i64(t[i] as i64), c);
        }
        out
    }

    /// `f(T y)`, where `x_i = sum_k T[i][k] y_k`.
    pub fn compose_linear<R: Ring<Elem = E>>(&self, ring: &R, t: &[[E; 3]; 3]) -> Self {
        let lin: Vec<Form<E>> = (0..3).map(|i| Form::from_coeffs(1, t[i].to_vec())).collect();
        let mut powers: Vec<Vec<Form<E>>> = Vec::new();
        for l in &lin {
            let mut pw = vec![Form::from_coeffs(0, vec![ring.one()])];
            for k in 1..=self.degree as usize {
                let next = pw[k - 1].mul(ring, l);
                pw.push(next);
            }
            powers.push(pw);
        }
        let mut out = Form::zero(ring, self.degree);
        for (m, c) in lex_monomials(self.degree).monomials().iter().zip(&self.coeffs) {
            if ring.is_zero(c) {
                continue;
            }
            let term = powers[0][m[0] as usize]
                .mul(ring, &powers[1][m[1] as usize])
                .mul(ring, &powers[2][m[2] as usize]);
            for (o, x) in out.coeffs.iter_mut().zip(&term.coeffs) {
                *o = ring.add(o, &ring.mul(c, x));
            }
        }
        out
    }

    /// Coefficients `[a_0, ..., a_d]` of `t^a` in the binary restriction
    /// obtained by setting variable `vary` to `t`, `one` to 1 and the
    /// remaining variable to 0.
    pub fn binary_restriction<R: Ring<Elem = E>>(&self, ring: &R, vary: usize, one: usize) -> Vec<E> {
        let d = self.degree;
        (0..=d)
            .map(|a| {
                let mut m = [0u32; 3];
                m[vary] = a;
                m[one] = d - a;
                let _ = ring;
                self.coeff(&m).clone()
            })
            .collect()
    }
}

/// Dense univariate polynomials over F_p, lowest degree first. The zero
/// polynomial is the empty vector.
pub mod upoly {
    use super::PrimeField;

    pub fn trim(a: &mut Vec<u64>) {
        while a.last() == Some(&0) {
            a.pop();
        }
    }

    pub fn degree(a: &[u64]) -> Option<usize> {
        a.iter().rposition(|&c| c != 0)
    }

    pub fn rem(f: &PrimeField, a: &[u64], g: &[u64]) -> Vec<u64> {
        let dg = degree(g).expect("division by zero polynomial");
        let inv = f.inv(g[dg]).unwrap();
        let mut r = a.to_vec();
        trim(&mut r);
        while r.len() > dg {
            let k = r.len() - 1;
            let c = f.mulm(r[k], inv);
            for i in 0..=dg {
                let t = f.mulm(c, g[i]);
                r[k - dg + i] = f.subm(r[k - dg + i], t);
            }
            trim(&mut r);
        }
        r
    }

    pub fn mul(f: &PrimeField, a: &[u64], b: &[u64]) -> Vec<u64> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut out = vec![0; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                out[i + j] = f.addm(out[i + j], f.mulm(x, y));
            }
        }
        trim(&mut out);
        out
    }

    pub fn mulmod(f: &PrimeField, a: &[u64], b: &[u64], g: &[u64]) -> Vec<u64> {
        rem(f, &mul(f, a, b), g)
    }

    /// `t^e mod g` by repeated squaring.
    pub fn pow_t_mod(f: &PrimeField, e: u64, g: &[u64]) -> Vec<u64> {
        let mut acc = rem(f, &[1], g);
        let mut base = rem(f, &[0, 1], g);
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = mulmod(f, &acc, &base, g);
            }
            base = mulmod(f, &base, &base, g);
            e >>= 1;
        }
        acc
    }

    pub fn gcd(f: &PrimeField, a: &[u64], b: &[u64]) -> Vec<u64> {
        let (mut a, mut b) = (a.to_vec(), b.to_vec());
        trim(&mut a);
        trim(&mut b);
        while !b.is_empty() {
            let r = rem(f, &a, &b);
            a = b;
            b = r;
        }
        a
    }

    /// Number of distinct roots in F_p; the zero polynomial counts `p`.
    pub fn count_roots(f: &PrimeField, g: &[u64]) -> u64 {
        let mut g = g.to_vec();
        trim(&mut g);
        match degree(&g) {
            None => f.p(),
            Some(0) => 0,
            Some(_) => {
                let mut tp = pow_t_mod(f, f.p(), &g);
                tp.resize(tp.len().max(2), 0);
                tp[1] = f.subm(tp[1], 1);
                trim(&mut tp);
                let h = gcd(f, &g, &tp);
                degree(&h).unwrap_or(0) as u64
            }
        }
    }

    pub fn eval(f: &PrimeField, a: &[u64], x: u64) -> u64 {
        a.iter().rev().fold(0, |acc, &c| f.addm(f.mulm(acc, x), c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::ring::IntegerRing;
    use rug::Integer;

    #[test]
    fn root_count_matches_enumeration() {
        let f = PrimeField::new(31).unwrap();
        let polys: Vec<Vec<u64>> = vec![vec![], vec![5], vec![1, 0, 1], vec![30, 0, 1], vec![0, 1, 0, 0, 1], vec![3, 1, 4, 1, 5]];
        for g in polys {
            let direct = (0..31).filter(|&x| upoly::eval(&f, &g, x) == 0).count() as u64;
            assert_eq!(upoly::count_roots(&f, &g), direct, "{g:?}");
        }
    }

    #[test]
    fn composition_respects_evaluation() {
        let z = IntegerRing;
        let coeffs: Vec<Integer> = (0..15).map(|k| Integer::from(k * 3 - 20)).collect();
        let form = Form::from_coeffs(4, coeffs);
        let t = [[1, 2, 0], [0, 1, -1], [3, 0, 1]].map(|r| r.map(Integer::from));
        let g = form.compose_linear(&z, &t);
        let eval = |fm: &Form<Integer>, x: [i64; 3]| {
            lex_monomials(4).monomials().iter().zip(fm.coeffs()).fold(Integer::new(), |acc, (m, c)| {
                acc + c * Integer::from(x[0].pow(m[0]) * x[1].pow(m[1]) * x[2].pow(m[2]))
            })
        };
        let y = [2i64, -1, 3];
        let x = [y[0] + 2 * y[1], y[1] - y[2], 3 * y[0] + y[2]];
        assert_eq!(eval(&g, y), eval(&form, x));
    }

    #[test]
    fn euler_operator_sums_to_degree() {
        let z = IntegerRing;
        let form = Form::from_coeffs(4, (1..=15).map(Integer::from).collect());
        let total = (0..3).fold(Form::zero(&z, 4), |acc, i| acc.add(&z, &form.euler_partial(&z, i)));
        assert_eq!(total, form.map(|c| Integer::from(c * 4)));
        let d0 = form.partial(&z, 0);
        assert_eq!(d0.coeff(&[3, 0, 0]), &4);
    }
}
