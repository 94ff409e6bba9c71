//! Exponent triples of fixed degree, in lexicographically descending order
//! with x0 > x1 > x2.

pub type Monomial = [u32; 3];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonomialBasis {
    degree: u32,
    monomials: Vec<Monomial>,
}

impl MonomialBasis {
    pub fn new(degree: u32) -> Self {
        let mut monomials = Vec::with_capacity(count(degree));
        for a in (0..=degree).rev() {
            for b in (0..=degree - a).rev() {
                monomials.push([a, b, degree - a - b]);
            }
        }
        MonomialBasis { degree, monomials }
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn get(&self, i: usize) -> Monomial {
        self.monomials[i]
    }

    /// 0-based position; the 1-based index used in the literature is this plus one.
    pub fn position(&self, m: &Monomial) -> Option<usize> {
        if m[0] + m[1] + m[2] != self.degree {
            return None;
        }
        Some(position(m))
    }
}

/// Number of monomials of degree `d` in three variables.
pub const fn count(d: u32) -> usize {
    ((d + 1) * (d + 2) / 2) as usize
}

/// 0-based lex-descending position of `m` among monomials of its own degree.
#[inline]
pub fn position(m: &Monomial) -> usize {
    let d = m[0] + m[1] + m[2];
    let n = d - m[0];
    (n * (n + 1) / 2 + (n - m[1])) as usize
}

pub fn lex_monomials(degree: u32) -> MonomialBasis {
    MonomialBasis::new(degree)
}

#[inline]
pub fn add(a: &Monomial, b: &Monomial) -> Monomial {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// `a - b` if it stays nonnegative.
#[inline]
pub fn sub(a: &Monomial, b: &Monomial) -> Option<Monomial> {
    if a[0] >= b[0] && a[1] >= b[1] && a[2] >= b[2] {
        Some([a[0] - b[0], a[1] - b[1], a[2] - b[2]])
    } else {
        None
    }
}

#[inline]
pub fn unit(i: usize) -> Monomial {
    let mut e = [0; 3];
    e[i] = 1;
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_and_order() {
        for (d, n) in [(2, 6), (4, 15), (5, 21), (6, 28), (7, 36), (10, 66)] {
            assert_eq!(lex_monomials(d).len(), n);
        }
        let d4 = lex_monomials(4);
        assert_eq!(d4.get(0), [4, 0, 0]);
        assert_eq!(d4.get(1), [3, 1, 0]);
        assert_eq!(d4.get(2), [3, 0, 1]);
        assert_eq!(d4.get(4), [2, 1, 1]);
        assert_eq!(d4.get(14), [0, 0, 4]);
    }

    #[test]
    fn position_inverts_enumeration() {
        for d in 0..12 {
            let b = lex_monomials(d);
            for (i, m) in b.monomials().iter().enumerate() {
                assert_eq!(b.position(m), Some(i));
            }
        }
        assert_eq!(lex_monomials(3).position(&[1, 1, 0]), None);
    }
}
