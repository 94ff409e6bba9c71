//! Slow reference computations used to validate the engines: polynomial
//! powers by plain expansion, point counts over extension fields, and
//! L-polynomials from point counts.

use crate::curve::CurveModP;
use crate::error::{Error, Result};
use crate::algebra::PrimeField;

/// Largest `q^2` for which points over F_q are enumerated.
pub const ENUMERATION_BUDGET: u64 = 10_000_000;

/// Largest p for which the brute-force expansion of f^(p-1) is offered.
pub const BRUTEFORCE_BOUND: u64 = 500;

/// A ternary form of degree `n` stored as a square array indexed by the
/// exponents of x0 and x1.
#[derive(Clone, Debug)]
struct Dense {
    n: usize,
    c: Vec<u64>,
}

impl Dense {
    fn one(p: u64) -> Self {
        Dense { n: 0, c: vec![1 % p] }
    }

    #[inline]
    fn at(&self, a: usize, b: usize) -> u64 {
        self.c[a * (self.n + 1) + b]
    }

    fn coeff(&self, e: [i64; 3]) -> u64 {
        if e.iter().any(|&x| x < 0) || (e[0] + e[1] + e[2]) as usize != self.n {
            return 0;
        }
        self.at(e[0] as usize, e[1] as usize)
    }
}

fn quartic_terms(c: &CurveModP) -> Vec<(usize, usize, u64)> {
    let mut out = Vec::new();
    for a in 0..=4u32 {
        for b in 0..=4 - a {
            let v = c.coeff(&[a, b, 4 - a - b]);
            if v != 0 {
                out.push((a as usize, b as usize, v));
            }
        }
    }
    out
}

/// `g * f` for a quartic `f` given by its nonzero terms.
fn mul_quartic(g: &Dense, terms: &[(usize, usize, u64)], p: u64) -> Dense {
    let n = g.n + 4;
    let w = n + 1;
    let mut out = vec![0u64; w * w];
    let small = p < 1 << 28;
    for a in 0..=n {
        for b in 0..=n - a {
            let mut acc: u128 = 0;
            let mut acc64: u64 = 0;
            for &(ta, tb, v) in terms {
                if a >= ta && b >= tb && a - ta + b - tb <= g.n {
                    let x = g.at(a - ta, b - tb);
                    if small {
                        acc64 += v * x;
                    } else {
                        acc = (acc + v as u128 * x as u128) % p as u128;
                    }
                }
            }
            out[a * w + b] = if small { acc64 % p } else { acc as u64 };
        }
    }
    Dense { n, c: out }
}

fn mul_dense(x: &Dense, y: &Dense, p: u64) -> Dense {
    let n = x.n + y.n;
    let w = n + 1;
    let mut out = vec![0u128; w * w];
    for a in 0..=x.n {
        for b in 0..=x.n - a {
            let u = x.at(a, b);
            if u == 0 {
                continue;
            }
            for c in 0..=y.n {
                for d in 0..=y.n - c {
                    let k = (a + c) * w + b + d;
                    out[k] = (out[k] + u as u128 * y.at(c, d) as u128) % p as u128;
                }
            }
        }
    }
    Dense { n, c: out.into_iter().map(|v| v as u64).collect() }
}

fn iterated_power(c: &CurveModP, e: u64) -> Dense {
    let p = c.p();
    let terms = quartic_terms(c);
    (0..e).fold(Dense::one(p), |acc, _| mul_quartic(&acc, &terms, p))
}

/// Coefficient of `x^target` in `x * y`.
fn convolve_at(x: &Dense, y: &Dense, target: [i64; 3], p: u64) -> u64 {
    let mut acc: u128 = 0;
    for a in 0..=x.n {
        for b in 0..=x.n - a {
            let u = x.at(a, b);
            if u != 0 {
                let rest = [target[0] - a as i64, target[1] - b as i64, target[2] - (x.n - a - b) as i64];
                acc += u as u128 * y.coeff(rest) as u128;
            }
        }
        acc %= p as u128;
    }
    acc as u64
}

/// Coefficients of `f^e` at the given exponents, by expanding `f^(e/2)`
/// with one quartic multiplication at a time and convolving.
pub fn power_coeffs(c: &CurveModP, e: u64, targets: &[[i64; 3]]) -> Vec<u64> {
    let p = c.p();
    let half = iterated_power(c, e / 2);
    let other = if e % 2 == 0 { half.clone() } else { mul_quartic(&half, &quartic_terms(c), p) };
    targets.iter().map(|&t| convolve_at(&half, &other, t, p)).collect()
}

/// `G_{v-u}` for `u` in D_ell (lex order), `G = f^e`.
pub fn power_coeff_bruteforce(c: &CurveModP, e: u64, v: [i64; 3], ell: u32) -> Vec<u64> {
    let mut targets = Vec::new();
    for a in (0..=ell as i64).rev() {
        for b in (0..=ell as i64 - a).rev() {
            targets.push([v[0] - a, v[1] - b, v[2] - (ell as i64 - a - b)]);
        }
    }
    power_coeffs(c, e, &targets)
}

/// Full expansion of `f^e` by repeated squaring; a second, independent
/// expansion strategy. Returns the coefficient at `target`.
pub fn power_coeff_by_squaring(c: &CurveModP, e: u64, target: [i64; 3]) -> u64 {
    let p = c.p();
    let terms = quartic_terms(c);
    let base = mul_quartic(&Dense::one(p), &terms, p);
    let mut acc = Dense::one(p);
    let mut sq = base;
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_dense(&acc, &sq, p);
        }
        e >>= 1;
        if e > 0 {
            sq = mul_dense(&sq, &sq, p);
        }
    }
    acc.coeff(target)
}

/// Cartier-Manin matrix read from `f^(p-1)`: entry `(r, c)` is the
/// coefficient at `(p-1)(1,1,1) + p a_c - a_r` with `a` running over
/// `x2, x0, x1`.
pub fn cartier_manin_bruteforce(c: &CurveModP) -> [[u64; 3]; 3] {
    let p = c.p() as i64;
    let basis = [[0i64, 0, 1], [1, 0, 0], [0, 1, 0]];
    let mut targets = Vec::new();
    for r in &basis {
        for col in &basis {
            targets.push(std::array::from_fn(|k| p - 1 + p * col[k] - r[k]));
        }
    }
    let v = power_coeffs(c, c.p() - 1, &targets);
    std::array::from_fn(|r| std::array::from_fn(|col| v[3 * r + col]))
}

/// The field F_{p^r} in log representation with Zech logarithms.
struct ExtField {
    q: u64,
    /// `exp[k] = g^k` as a base-p digit encoding.
    zech: Vec<u32>,
    log_of_base: Vec<u32>,
}

const ZERO: u32 = u32::MAX;

impl ExtField {
    fn new(p: u64, r: u32) -> Self {
        let q = p.pow(r);
        let modulus = smallest_irreducible(p, r);
        let f = PrimeField::new(p).unwrap();
        let mul = |x: &[u64], y: &[u64]| -> Vec<u64> {
            let r = r as usize;
            let mut prod = vec![0u64; 2 * r];
            for i in 0..r {
                for j in 0..r {
                    prod[i + j] = f.addm(prod[i + j], f.mulm(x[i], y[j]));
                }
            }
            // reduce by the monic modulus
            for k in (r..2 * r).rev() {
                let top = prod[k];
                if top != 0 {
                    for i in 0..r {
                        prod[k - r + i] = f.subm(prod[k - r + i], f.mulm(top, modulus[i]));
                    }
                }
            }
            prod.truncate(r);
            prod
        };
        let encode = |x: &[u64]| x.iter().rev().fold(0u64, |acc, &d| acc * p + d);
        let order = q - 1;
        let prime_factors: Vec<u64> = {
            let mut n = order;
            let mut out = Vec::new();
            let mut d = 2;
            while d * d <= n {
                if n % d == 0 {
                    out.push(d);
                    while n % d == 0 {
                        n /= d;
                    }
                }
                d += 1;
            }
            if n > 1 {
                out.push(n);
            }
            out
        };
        let decode = |mut x: u64| -> Vec<u64> {
            (0..r)
                .map(|_| {
                    let d = x % p;
                    x /= p;
                    d
                })
                .collect()
        };
        let pow = |base: &[u64], mut e: u64| {
            let mut acc = decode(1);
            let mut b = base.to_vec();
            while e > 0 {
                if e & 1 == 1 {
                    acc = mul(&acc, &b);
                }
                b = mul(&b, &b);
                e >>= 1;
            }
            acc
        };
        let g = (2..q)
            .map(decode)
            .find(|cand| prime_factors.iter().all(|&l| encode(&pow(cand, order / l)) != 1))
            .unwrap_or_else(|| decode(1 % q.max(2)));
        let mut exp = vec![0u64; order as usize];
        let mut log = vec![ZERO; q as usize];
        let mut cur = decode(1);
        for k in 0..order as usize {
            let e = encode(&cur);
            exp[k] = e;
            log[e as usize] = k as u32;
            cur = mul(&cur, &g);
        }
        // 1 + g^k: add 1 to the constant digit
        let zech = (0..order as usize)
            .map(|k| {
                let mut d = decode(exp[k]);
                d[0] = f.addm(d[0], 1);
                log[encode(&d) as usize]
            })
            .collect();
        ExtField { q, zech, log_of_base: log }
    }

    #[inline]
    fn mul(&self, a: u32, b: u32) -> u32 {
        if a == ZERO || b == ZERO {
            return ZERO;
        }
        ((a as u64 + b as u64) % (self.q - 1)) as u32
    }

    #[inline]
    fn add(&self, a: u32, b: u32) -> u32 {
        if a == ZERO {
            return b;
        }
        if b == ZERO {
            return a;
        }
        let n = self.q - 1;
        let d = (b as u64 + n - a as u64) % n;
        let z = self.zech[d as usize];
        if z == ZERO {
            ZERO
        } else {
            ((a as u64 + z as u64) % n) as u32
        }
    }

    /// Log of an element of the prime field.
    fn from_prime(&self, c: u64) -> u32 {
        self.log_of_base[c as usize]
    }

    fn pow(&self, a: u32, e: u32) -> u32 {
        if e == 0 {
            return 0;
        }
        if a == ZERO {
            return ZERO;
        }
        ((a as u64 * e as u64) % (self.q - 1)) as u32
    }
}

/// Lowest-first coefficients of a monic irreducible of degree `r` (without the
/// leading 1), the first in lexicographic order. Degrees up to 3 are tested by
/// absence of roots.
fn smallest_irreducible(p: u64, r: u32) -> Vec<u64> {
    assert!((1..=3).contains(&r), "extension degree must be 1..=3");
    let f = PrimeField::new(p).unwrap();
    let total = p.pow(r);
    for code in 0..total {
        let mut coeffs = Vec::new();
        let mut x = code;
        for _ in 0..r {
            coeffs.push(x % p);
            x /= p;
        }
        if r == 1 {
            return coeffs;
        }
        let has_root = (0..p).any(|t| {
            let mut v = 1 % p;
            for &c in coeffs.iter().rev() {
                v = f.addm(f.mulm(v, t), c);
            }
            v == 0
        });
        if !has_root {
            return coeffs;
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}

/// `#X(F_{p^r})` by enumerating the projective plane.
pub fn count_points_ext(c: &CurveModP, r: u32) -> Result<u64> {
    let p = c.p();
    let q = p
        .checked_pow(r)
        .filter(|q| q.checked_mul(*q).is_some_and(|qq| qq <= ENUMERATION_BUDGET))
        .ok_or_else(|| Error::Usage(format!("enumeration over F_{p}^{r} exceeds the oracle budget")))?;
    let k = ExtField::new(p, r);
    let coef = |m: [u32; 3]| k.from_prime(c.coeff(&m));
    // f(1, y, z) = sum_j z^j * poly_j(y), poly_j(y) = sum_b F_(4-b-j, b, j) y^b
    let mut count = 0u64;
    let elems: Vec<u32> = std::iter::once(ZERO).chain(0..(q - 1) as u32).collect();
    for &y in &elems {
        let pj: Vec<u32> = (0..=4u32)
            .map(|j| (0..=4 - j).fold(ZERO, |acc, b| k.add(acc, k.mul(coef([4 - b - j, b, j]), k.pow(y, b)))))
            .collect();
        for &z in &elems {
            let v = pj.iter().rev().fold(ZERO, |acc, &a| k.add(k.mul(acc, z), a));
            count += u64::from(v == ZERO);
        }
    }
    // f(0, 1, z)
    for &z in &elems {
        let v = (0..=4u32).rev().fold(ZERO, |acc, j| k.add(k.mul(acc, z), coef([0, 4 - j, j])));
        count += u64::from(v == ZERO);
    }
    count += u64::from(c.coeff(&[0, 0, 4]) == 0);
    Ok(count)
}

/// `L_p(T)` from `#X(F_{p^r})`, `r = 1, 2, 3`, via Newton's identities and the
/// functional equation. Coefficients lowest degree first.
pub fn lpoly_from_counts(p: u64, counts: [u64; 3]) -> [i128; 7] {
    let p = p as i128;
    let s: Vec<i128> = (1..=3).map(|r| p.pow(r as u32) + 1 - counts[r - 1] as i128).collect();
    // e_k of the Frobenius eigenvalues: k e_k = sum_{i=1..k} (-1)^(i-1) e_{k-i} s_i
    let mut e = [1i128, 0, 0, 0];
    for k in 1..=3usize {
        let mut acc = 0i128;
        for i in 1..=k {
            let sign = if i % 2 == 1 { 1 } else { -1 };
            acc += sign * e[k - i] * s[i - 1];
        }
        assert_eq!(acc % k as i128, 0, "counts are not consistent with a genus 3 curve");
        e[k] = acc / k as i128;
    }
    let a1 = -e[1];
    let a2 = e[2];
    let a3 = -e[3];
    [1, a1, a2, a3, p * a2, p * p * a1, p * p * p]
}
