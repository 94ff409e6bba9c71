//! Coefficient rings shared by the symbolic construction: the integers and
//! prime fields. Everything above this layer is written once against [`Ring`].

use std::fmt::Debug;

use rug::Integer;

use crate::error::{Error, Result};

pub trait Ring: Clone + Debug + Send + Sync {
    type Elem: Clone + PartialEq + Debug + Send + Sync;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn from_i64(&self, x: i64) -> Self::Elem;
    fn from_integer(&self, x: &Integer) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn is_zero(&self, a: &Self::Elem) -> bool;

    /// `a / b`, where `b` divides `a` (integers) or is a unit (fields).
    /// Panics if the division is not exact: callers only use it where an
    /// algebraic identity guarantees exactness.
    fn div_exact(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;

    /// The factor to strip from a scaled solution `(scale, entries)` so that
    /// the scale becomes canonical: the positive gcd over Z, the scale itself
    /// over a field.
    fn normalizer(&self, scale: &Self::Elem, entries: &[Self::Elem]) -> Self::Elem;

    /// `a*b + c*d`, the inner step of every fraction-free elimination.
    fn mul_sub(&self, a: &Self::Elem, b: &Self::Elem, c: &Self::Elem, d: &Self::Elem) -> Self::Elem {
        self.sub(&self.mul(a, b), &self.mul(c, d))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IntegerRing;

impl Ring for IntegerRing {
    type Elem = Integer;

    fn zero(&self) -> Integer {
        Integer::new()
    }
    fn one(&self) -> Integer {
        Integer::from(1)
    }
    fn from_i64(&self, x: i64) -> Integer {
        Integer::from(x)
    }
    fn from_integer(&self, x: &Integer) -> Integer {
        x.clone()
    }
    fn add(&self, a: &Integer, b: &Integer) -> Integer {
        Integer::from(a + b)
    }
    fn sub(&self, a: &Integer, b: &Integer) -> Integer {
        Integer::from(a - b)
    }
    fn mul(&self, a: &Integer, b: &Integer) -> Integer {
        Integer::from(a * b)
    }
    fn neg(&self, a: &Integer) -> Integer {
        Integer::from(-a)
    }
    fn is_zero(&self, a: &Integer) -> bool {
        a.cmp0() == std::cmp::Ordering::Equal
    }
    fn div_exact(&self, a: &Integer, b: &Integer) -> Integer {
        let (q, r) = a.clone().div_rem(b.clone());
        assert!(r.cmp0().is_eq(), "inexact integer division");
        q
    }
    fn normalizer(&self, scale: &Integer, entries: &[Integer]) -> Integer {
        let mut g = scale.clone().abs();
        for e in entries {
            if g == 1 {
                break;
            }
            g.gcd_mut(e);
        }
        if scale.cmp0().is_lt() {
            g = -g;
        }
        g
    }
    fn mul_sub(&self, a: &Integer, b: &Integer, c: &Integer, d: &Integer) -> Integer {
        let mut r = Integer::from(a * b);
        r -= c * d;
        r
    }
}

/// The prime field F_p for p < 2^62, with residues stored as reduced `u64`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self> {
        if p >= 1 << 62 {
            return Err(Error::Usage(format!("modulus {p} exceeds 2^62")));
        }
        if !is_prime(p) {
            return Err(Error::Usage(format!("{p} is not prime")));
        }
        Ok(PrimeField { p })
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn reduce_i64(&self, x: i64) -> u64 {
        x.rem_euclid(self.p as i64) as u64
    }

    #[inline]
    pub fn reduce_integer(&self, x: &Integer) -> u64 {
        if self.p <= u32::MAX as u64 {
            return x.mod_u(self.p as u32) as u64;
        }
        let m = Integer::from(self.p);
        super::matrix::rem_euc(x, &m).to_u64().expect("residue fits")
    }

    #[inline]
    pub fn addm(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn subm(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline]
    pub fn mulm(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.p as u128) as u64
    }

    #[inline]
    pub fn negm(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    pub fn powm(&self, mut a: u64, mut e: u64) -> u64 {
        let mut r = 1 % self.p;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mulm(r, a);
            }
            a = self.mulm(a, a);
            e >>= 1;
        }
        r
    }

    /// Inverse of a nonzero residue.
    pub fn inv(&self, a: u64) -> Option<u64> {
        if a % self.p == 0 {
            return None;
        }
        let (mut r0, mut r1) = (self.p as i128, a as i128);
        let (mut s0, mut s1) = (0i128, 1i128);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (s0, s1) = (s1, s0 - q * s1);
        }
        Some(s0.rem_euclid(self.p as i128) as u64)
    }

    /// Symmetric lift into (-p/2, p/2].
    pub fn lift_symmetric(&self, a: u64) -> i64 {
        if a > self.p / 2 {
            a as i64 - self.p as i64
        } else {
            a as i64
        }
    }
}

impl Ring for PrimeField {
    type Elem = u64;

    fn zero(&self) -> u64 {
        0
    }
    fn one(&self) -> u64 {
        1 % self.p
    }
    fn from_i64(&self, x: i64) -> u64 {
        self.reduce_i64(x)
    }
    fn from_integer(&self, x: &Integer) -> u64 {
        self.reduce_integer(x)
    }
    fn add(&self, a: &u64, b: &u64) -> u64 {
        self.addm(*a, *b)
    }
    fn sub(&self, a: &u64, b: &u64) -> u64 {
        self.subm(*a, *b)
    }
    fn mul(&self, a: &u64, b: &u64) -> u64 {
        self.mulm(*a, *b)
    }
    fn neg(&self, a: &u64) -> u64 {
        self.negm(*a)
    }
    fn is_zero(&self, a: &u64) -> bool {
        *a == 0
    }
    fn div_exact(&self, a: &u64, b: &u64) -> u64 {
        self.mulm(*a, self.inv(*b).expect("division by zero in F_p"))
    }
    fn normalizer(&self, scale: &u64, _entries: &[u64]) -> u64 {
        *scale
    }
}

/// Deterministic Miller-Rabin for 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % q == 0 {
            return n == q;
        }
    }
    let f = PrimeField { p: n };
    let (mut d, mut s) = (n - 1, 0);
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = f.powm(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = f.mulm(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// All primes `<= n`.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2;
    while i * i <= n {
        if sieve[i] {
            let mut j = i * i;
            while j <= n {
                sieve[j] = false;
                j += i;
            }
        }
        i += 1;
    }
    sieve
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| i as u64)
        .collect()
}
