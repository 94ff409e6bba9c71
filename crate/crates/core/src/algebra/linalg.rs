//! Fraction-free elimination over any [`Ring`]: every division below is exact.

use super::matrix::Mat;
use super::ring::Ring;

/// Bareiss determinant.
pub fn determinant<R: Ring>(ring: &R, a: &Mat<R::Elem>) -> R::Elem {
    assert_eq!(a.rows(), a.cols());
    let n = a.rows();
    let mut m = a.to_rows();
    let mut prev = ring.one();
    let mut negate = false;
    for k in 0..n {
        let Some(r) = (k..n).find(|&r| !ring.is_zero(&m[r][k])) else {
            return ring.zero();
        };
        if r != k {
            m.swap(r, k);
            negate = !negate;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = ring.mul_sub(&m[k][k], &m[i][j], &m[i][k], &m[k][j]);
                m[i][j] = ring.div_exact(&v, &prev);
            }
        }
        prev = m[k][k].clone();
    }
    let det = if n == 0 { ring.one() } else { m[n - 1][n - 1].clone() };
    if negate {
        ring.neg(&det)
    } else {
        det
    }
}

/// Fraction-free Gauss-Jordan on `[A | I]`. Returns `(d, d * A^-1)` where
/// `d = ±det A` is the final pivot, or `None` if `A` is singular.
pub fn scaled_inverse<R: Ring>(ring: &R, a: &Mat<R::Elem>) -> Option<(R::Elem, Mat<R::Elem>, bool)> {
    assert_eq!(a.rows(), a.cols());
    let n = a.rows();
    let w = 2 * n;
    let mut m: Vec<Vec<R::Elem>> = (0..n)
        .map(|i| {
            let mut row = a.row(i).to_vec();
            row.extend((0..n).map(|j| if i == j { ring.one() } else { ring.zero() }));
            row
        })
        .collect();
    let mut prev = ring.one();
    let mut swapped = false;
    for k in 0..n {
        let r = (k..n).find(|&r| !ring.is_zero(&m[r][k]))?;
        if r != k {
            m.swap(r, k);
            swapped = !swapped;
        }
        let pivot_row = m[k].clone();
        let piv = pivot_row[k].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i == k {
                continue;
            }
            let factor = row[k].clone();
            for j in 0..w {
                if j == k {
                    continue;
                }
                let v = ring.mul_sub(&piv, &row[j], &factor, &pivot_row[j]);
                row[j] = ring.div_exact(&v, &prev);
            }
            row[k] = ring.zero();
        }
        prev = piv;
    }
    let inv = Mat::from_fn(n, n, |i, j| m[i][n + j].clone());
    Some((prev, inv, swapped))
}

/// `(det A, adj A)`; `None` when `A` is singular.
pub fn adjugate<R: Ring>(ring: &R, a: &Mat<R::Elem>) -> Option<(R::Elem, Mat<R::Elem>)> {
    let (d, inv, swapped) = scaled_inverse(ring, a)?;
    if swapped {
        Some((ring.neg(&d), inv.map(|x| ring.neg(x))))
    } else {
        Some((d, inv))
    }
}

/// Fraction-free row echelon form with greedy pivots taken at the earliest
/// available column. Returns the pivot columns (their count is the rank).
pub fn echelon_pivots<R: Ring>(ring: &R, a: &Mat<R::Elem>) -> Vec<usize> {
    let (rows, cols) = (a.rows(), a.cols());
    let mut m = a.to_rows();
    let mut prev = ring.one();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(k) = (r..rows).find(|&k| !ring.is_zero(&m[k][c])) else { continue };
        m.swap(k, r);
        for i in r + 1..rows {
            for j in c + 1..cols {
                let v = ring.mul_sub(&m[r][c], &m[i][j], &m[i][c], &m[r][j]);
                m[i][j] = ring.div_exact(&v, &prev);
            }
            m[i][c] = ring.zero();
        }
        prev = m[r][c].clone();
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank<R: Ring>(ring: &R, a: &Mat<R::Elem>) -> usize {
    echelon_pivots(ring, a).len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::ring::{IntegerRing, PrimeField};
    use proptest::prelude::*;
    use rug::Integer;

    fn int_mat(n: usize, v: &[i64]) -> Mat<Integer> {
        Mat::from_fn(n, n, |i, j| Integer::from(v[i * n + j]))
    }

    proptest! {
        #[test]
        fn adjugate_times_matrix_is_det(v in prop::collection::vec(-9i64..=9, 25)) {
            let z = IntegerRing;
            let a = int_mat(5, &v);
            let det = determinant(&z, &a);
            match adjugate(&z, &a) {
                None => prop_assert_eq!(det, 0),
                Some((d, adj)) => {
                    prop_assert_eq!(&d, &det);
                    let prod = adj.mul(&z, &a);
                    let expect = Mat::from_fn(5, 5, |i, j| if i == j { det.clone() } else { Integer::new() });
                    prop_assert_eq!(prod, expect);
                }
            }
        }

        #[test]
        fn echelon_rank_matches_field_rank(v in prop::collection::vec(-2i64..=2, 24)) {
            let z = IntegerRing;
            let a = Mat::from_fn(4, 6, |i, j| Integer::from(v[i * 6 + j]));
            let f = PrimeField::new(1_000_003).unwrap();
            let am = a.map(|x| f.reduce_integer(x));
            prop_assert_eq!(rank(&z, &a), rank(&f, &am));
        }
    }

    #[test]
    fn pivots_skip_dependent_columns() {
        let z = IntegerRing;
        let a = Mat::from_rows(vec![
            vec![1, 2, 0, 1].into_iter().map(Integer::from).collect(),
            vec![2, 4, 1, 0].into_iter().map(Integer::from).collect(),
        ]);
        assert_eq!(echelon_pivots(&z, &a), vec![0, 2]);
    }
}
