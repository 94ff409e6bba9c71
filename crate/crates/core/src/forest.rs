//! Remainder forest: prefix products `P_k = V M_0 M_1 ... M_k` of integer
//! matrices reduced modulo `m_k`, for all `k` at once, in quasi-linear time.
//! The range is cut into `2^kappa` chunks; within a chunk a product tree is
//! built and descended, and a carry matrix crosses from chunk to chunk.

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use rug::Integer;

use crate::algebra::matrix::rem_euc;
use crate::algebra::{primes_up_to, FpMatrix, IntMatrix, PrimeField, UniMatrix};
use crate::engine::{cartier_manin_from_cp, finish, CurveEngine, EngineOptions, PrimeOutcome, Status};
use crate::error::{Error, Result};

/// `floor(2 log2 log2 N)`, at least 0.
pub fn default_kappa(n: u64) -> u32 {
    if n < 4 {
        return 0;
    }
    (2.0 * (n as f64).log2().log2()).floor().max(0.0) as u32
}

/// Entries above this size are multiplied with one task per row.
const PARALLEL_BITS: u32 = 4096;

/// Smaller of the two entry sizes above which Strassen-Winograd pays off.
const WINOGRAD_BITS: u32 = 2000;

fn identity(dim: usize) -> IntMatrix {
    IntMatrix::from_fn(dim, dim, |i, j| Integer::from(u8::from(i == j)))
}

fn mul(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    let bits = a.max_bits().min(b.max_bits());
    let square = a.rows() == a.cols() && a.rows().is_power_of_two() && b.rows() == b.cols() && a.rows() == b.rows();
    if bits >= WINOGRAD_BITS && square {
        // one level per doubling of the entry size, down to 2x2 blocks
        let leaf = if bits >= 4 * WINOGRAD_BITS { 1 } else if bits >= 2 * WINOGRAD_BITS { 2 } else { 4 };
        return a.mul_winograd(b, leaf);
    }
    if rayon::current_num_threads() == 1 || bits < PARALLEL_BITS {
        return a.mul_int(b);
    }
    let rows: Vec<Vec<Integer>> = (0..a.rows())
        .into_par_iter()
        .map(|i| {
            let mut out = vec![Integer::new(); b.cols()];
            for k in 0..a.cols() {
                let x = &a[(i, k)];
                if x.cmp0().is_ne() {
                    for (j, o) in out.iter_mut().enumerate() {
                        *o += x * &b[(k, j)];
                    }
                }
            }
            out
        })
        .collect();
    IntMatrix::from_rows(rows)
}

fn reduce(a: &IntMatrix, m: &Integer) -> IntMatrix {
    if rayon::current_num_threads() == 1 || a.max_bits() < PARALLEL_BITS {
        return a.rem_euc(m);
    }
    let data: Vec<Integer> = a.data().par_iter().map(|x| rem_euc(x, m)).collect();
    IntMatrix::from_fn(a.rows(), a.cols(), |i, j| data[i * a.cols() + j].clone())
}

const PROBE: u32 = u32::MAX - 4;

/// Exact division of every entry by `lambda`. Divisibility is confirmed
/// modulo a word-sized probe; a miss means the construction is broken.
fn strip(a: IntMatrix, lambda: &Integer) -> Result<IntMatrix> {
    let l = lambda.mod_u(PROBE) as u64;
    let mut bad = false;
    let out = a.map(|x| {
        let q = Integer::from(x.div_exact_ref(lambda));
        bad |= q.mod_u(PROBE) as u64 * l % PROBE as u64 != x.mod_u(PROBE) as u64;
        q
    });
    if bad {
        return Err(Error::Internal("product of consecutive matrices is not divisible by lambda".into()));
    }
    Ok(out)
}

struct Node {
    value: IntMatrix,
    /// Number of divisions by lambda already applied to `value`.
    x: u64,
    modulus: Integer,
    lo: usize,
    children: Option<Box<(Node, Node)>>,
}

fn build(lo: usize, leaves: &[IntMatrix], moduli: &[Integer], lambda: Option<&Integer>) -> Result<Node> {
    if leaves.len() == 1 {
        return Ok(Node { value: leaves[0].clone(), x: 0, modulus: moduli[0].clone(), lo, children: None });
    }
    let mid = leaves.len() / 2;
    let (l, r) = rayon::join(
        || build(lo, &leaves[..mid], &moduli[..mid], lambda),
        || build(lo + mid, &leaves[mid..], &moduli[mid..], lambda),
    );
    let (l, r) = (l?, r?);
    let prod = mul(&l.value, &r.value);
    let (value, x) = match lambda {
        Some(lam) => (strip(prod, lam)?, l.x + r.x + 1),
        None => (prod, l.x + r.x),
    };
    let modulus = Integer::from(&l.modulus * &r.modulus);
    Ok(Node { value, x, modulus, lo, children: Some(Box::new((l, r))) })
}

/// `prefix` is (seed times all earlier leaves) / lambda^x, known modulo
/// `node.modulus`. Yields `(k, P_k mod m_k)` with lambda restored.
fn descend(
    node: &Node,
    prefix: &IntMatrix,
    x: u64,
    lambda: Option<&Integer>,
    trivial: bool,
) -> Vec<(usize, IntMatrix)> {
    if node.modulus == 1 && !trivial {
        return Vec::new();
    }
    match &node.children {
        None => {
            let m = &node.modulus;
            let mut pk = prefix.mul_int(&node.value).rem_euc(m);
            if let (Some(lam), true) = (lambda, x > 0) {
                let s = lam.clone().pow_mod(&Integer::from(x), m).expect("nonnegative exponent");
                pk = pk.map(|e| Integer::from(e * &s) % m);
            }
            vec![(node.lo, pk)]
        }
        Some(children) => {
            let (l, r) = (&children.0, &children.1);
            let (mut left, right) = rayon::join(
                || descend(l, &reduce(prefix, &l.modulus), x, lambda, trivial),
                || {
                    if r.modulus == 1 && !trivial {
                        return Vec::new();
                    }
                    let pr = reduce(&mul(prefix, &l.value), &r.modulus);
                    descend(r, &pr, x + l.x, lambda, trivial)
                },
            );
            left.extend(right);
            left
        }
    }
}

/// `P_k = seed M_0 ... M_k mod m_k` for every `k`, entries in `[0, m_k)`.
pub fn remainder_tree(matrices: &[IntMatrix], moduli: &[Integer], seed: &IntMatrix) -> Vec<IntMatrix> {
    assert_eq!(matrices.len(), moduli.len(), "one modulus per matrix");
    if matrices.is_empty() {
        return Vec::new();
    }
    let tree = build(0, matrices, moduli, None).expect("no stripping, no failure");
    descend(&tree, &seed.rem_euc(&tree.modulus), 0, None, true).into_iter().map(|(_, m)| m).collect()
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ForestStats {
    pub chunks: usize,
    /// Largest entry (bits) among chunk products.
    pub max_chunk_bits: u32,
    /// Largest entry (bits) of the carry matrix.
    pub max_carry_bits: u32,
    pub build_time: Duration,
    pub descend_time: Duration,
    pub carry_time: Duration,
}

/// For every `k` with `moduli[k] > 1` deliver `(k, P_k mod m_k)` where
/// `P_k = M_0 ... M_k` and `leaves(lo, hi)` produces `M_lo .. M_{hi-1}`.
/// If `lambda` is given, a product of `j` consecutive leaves must be
/// divisible by `lambda^(j-1)`; tree products are divided as they form and
/// the factor is restored per leaf. Results arrive chunk by chunk in
/// increasing `k`.
pub fn remainder_forest<L, S>(
    leaves: L,
    moduli: &[Integer],
    kappa: u32,
    lambda: Option<&Integer>,
    mut sink: S,
) -> Result<ForestStats>
where
    L: Fn(usize, usize) -> Vec<IntMatrix> + Sync,
    S: FnMut(Vec<(usize, IntMatrix)>) -> Result<()>,
{
    let n = moduli.len();
    let mut stats = ForestStats::default();
    if n == 0 {
        return Ok(stats);
    }
    let chunks = (1usize << kappa.min(30)).min(n);
    let bounds: Vec<usize> = (0..=chunks).map(|c| c * n / chunks).collect();
    let chunk_mod: Vec<Integer> = (0..chunks)
        .into_par_iter()
        .map(|c| moduli[bounds[c]..bounds[c + 1]].iter().fold(Integer::from(1), |acc, m| acc * m))
        .collect();
    // suffix[c] = product of the moduli of chunks c, c+1, ...
    let mut suffix = vec![Integer::from(1); chunks + 1];
    for c in (0..chunks).rev() {
        suffix[c] = Integer::from(&suffix[c + 1] * &chunk_mod[c]);
    }
    stats.chunks = chunks;
    let mut carry: Option<IntMatrix> = None;
    let mut carry_x = 0u64;
    for c in 0..chunks {
        let t0 = Instant::now();
        let (lo, hi) = (bounds[c], bounds[c + 1]);
        let tree = build(lo, &leaves(lo, hi), &moduli[lo..hi], lambda)?;
        stats.build_time += t0.elapsed();
        stats.max_chunk_bits = stats.max_chunk_bits.max(tree.value.max_bits());
        let seed = carry.take().unwrap_or_else(|| identity(tree.value.rows()));
        let last = c + 1 == chunks;
        let ((results, dt), (next, ct)) = rayon::join(
            || {
                let t = Instant::now();
                if chunk_mod[c] == 1 {
                    return (Vec::new(), t.elapsed());
                }
                (descend(&tree, &reduce(&seed, &chunk_mod[c]), carry_x, lambda, false), t.elapsed())
            },
            || {
                let t = Instant::now();
                let next = (!last).then(|| reduce(&mul(&seed, &tree.value), &suffix[c + 1]));
                (next, t.elapsed())
            },
        );
        stats.descend_time += dt;
        stats.carry_time += ct;
        if let Some(next) = &next {
            stats.max_carry_bits = stats.max_carry_bits.max(next.max_bits());
        }
        carry = next;
        carry_x += tree.x;
        sink(results)?;
    }
    Ok(stats)
}

/// Values of a quadratic matrix polynomial at `t0, t0 + step, ...` by
/// finite differences over Z.
pub fn quadratic_values(m: &UniMatrix<Integer>, t0: i64, step: i64, count: usize) -> Vec<IntMatrix> {
    let at = |t: i64| {
        let t = Integer::from(t);
        IntMatrix::from_fn(m.rows(), m.cols(), |i, j| {
            let [c0, c1, c2] = &m.entries()[i * m.cols() + j];
            Integer::from(c2 * &t) * &t + Integer::from(c1 * &t) + c0
        })
    };
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    let (f0, f1, f2) = (at(t0), at(t0 + step), at(t0 + 2 * step));
    let mut d1 = IntMatrix::from_fn(f0.rows(), f0.cols(), |i, j| Integer::from(&f1[(i, j)] - &f0[(i, j)]));
    let d2 = IntMatrix::from_fn(f0.rows(), f0.cols(), |i, j| {
        Integer::from(&f2[(i, j)] - &f1[(i, j)]) - &d1[(i, j)]
    });
    let mut cur = f0;
    for k in 0..count {
        if k > 0 {
            cur = IntMatrix::from_fn(cur.rows(), cur.cols(), |i, j| Integer::from(&cur[(i, j)] + &d1[(i, j)]));
            d1 = IntMatrix::from_fn(d1.rows(), d1.cols(), |i, j| Integer::from(&d1[(i, j)] + &d2[(i, j)]));
        }
        out.push(cur.clone());
    }
    out
}

/// The moduli sequence for bound `n`: index `i` stands for `i + 2`, which
/// is kept when it is an odd prime of good reduction not dividing D.
pub fn moduli(engine: &CurveEngine, n: u64) -> Vec<Integer> {
    let mut m = vec![Integer::from(1); n.saturating_sub(1) as usize];
    for p in primes_up_to(n) {
        if p > 2 && engine.is_good(p) {
            m[(p - 2) as usize] = Integer::from(p);
        }
    }
    m
}

#[derive(Clone, Debug)]
pub struct RangeOptions {
    pub kappa: Option<u32>,
    pub strip_lambda: bool,
    pub engine: EngineOptions,
}

impl Default for RangeOptions {
    fn default() -> Self {
        RangeOptions { kappa: None, strip_lambda: true, engine: EngineOptions::default() }
    }
}

/// Results for every prime `p <= n`, in increasing order. Primes with
/// `p ∤ D` go through the forest; 2 and the divisors of D through the
/// per-prime engine.
pub fn range_cartier_manin<S>(engine: &CurveEngine, n: u64, opts: &RangeOptions, mut sink: S) -> Result<ForestStats>
where
    S: FnMut(PrimeOutcome) -> Result<()>,
{
    let mut pending: VecDeque<u64> =
        primes_up_to(n).into_iter().filter(|&p| p == 2 || !engine.is_good(p)).collect();
    let mut flush = |bound: u64, sink: &mut S| -> Result<()> {
        while let Some(&q) = pending.front().filter(|&&q| q < bound) {
            pending.pop_front();
            sink(engine.compute(q, &opts.engine)?)?;
        }
        Ok(())
    };
    if n < 3 {
        flush(u64::MAX, &mut sink)?;
        return Ok(ForestStats::default());
    }
    let spec = engine.specialized();
    let moduli = moduli(engine, n);
    let kappa = opts.kappa.unwrap_or_else(|| default_kappa(n));
    let lambda = opts.strip_lambda.then(|| engine.lambda());
    // leaf i is M(-2-i)
    let leaves = |lo: usize, hi: usize| quadratic_values(&spec.m, -2 - lo as i64, -1, hi - lo);
    let curve = engine.curve();
    let stats = remainder_forest(leaves, &moduli, kappa, lambda, |batch| {
        let outcomes: Vec<Result<PrimeOutcome>> = batch
            .into_par_iter()
            .map(|(i, cp)| {
                let c = curve.reduce(i as u64 + 2)?;
                let field = c.field();
                let pi = FpMatrix::from_mat(field, &spec.pi.map(|x| field.reduce_integer(x)));
                let cm = cartier_manin_from_cp(&c, &pi, &cp.reduce(&field))?;
                finish(&c, cm, Status::Ok, None)
            })
            .collect();
        for o in outcomes {
            let o = o?;
            flush(o.p, &mut sink)?;
            sink(o)?;
        }
        Ok(())
    })?;
    flush(u64::MAX, &mut sink)?;
    Ok(stats)
}

/// Convenience: C_p for every forest prime up to `n`.
pub fn forest_cp(engine: &CurveEngine, n: u64, kappa: u32, strip_lambda: bool) -> Result<Vec<(u64, FpMatrix)>> {
    let spec = engine.specialized();
    let leaves = |lo: usize, hi: usize| quadratic_values(&spec.m, -2 - lo as i64, -1, hi - lo);
    let mut out = Vec::new();
    remainder_forest(leaves, &moduli(engine, n), kappa, strip_lambda.then(|| engine.lambda()), |batch| {
        for (i, cp) in batch {
            let p = i as u64 + 2;
            out.push((p, cp.reduce(&PrimeField::new(p)?)));
        }
        Ok(())
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{is_prime, IntegerRing};
    use crate::curve::QuarticCurve;
    use crate::engine::compute_cp;

    fn toy_leaf(i: usize) -> IntMatrix {
        let t = i as i64;
        IntMatrix::from_fn(3, 3, |r, c| Integer::from((r as i64 + 1) * t * t - (c as i64) * 7 * t + (r * c) as i64 + 3))
    }

    fn prime_moduli(n: usize) -> Vec<Integer> {
        (0..n).map(|i| Integer::from(if is_prime(i as u64 + 2) { i as u64 + 2 } else { 1 })).collect()
    }

    #[test]
    fn remainder_tree_matches_direct_products() {
        let z = IntegerRing;
        let mats: Vec<IntMatrix> = (0..50).map(|i| toy_leaf(i * 3 + 1)).collect();
        let moduli: Vec<Integer> = (0..50).map(|i| Integer::from(crate::algebra::primes_up_to(300)[i])).collect();
        let seed = IntMatrix::from_fn(3, 3, |i, j| Integer::from(i as i64 - 2 * j as i64 + 5));
        let got = remainder_tree(&mats, &moduli, &seed);
        let mut acc = seed.clone();
        for k in 0..50 {
            acc = acc.mul_int(&mats[k]);
            assert_eq!(got[k], acc.rem_euc(&moduli[k]), "k={k}");
        }
        let ones = vec![Integer::from(1); 7];
        for p in remainder_tree(&mats[..7], &ones, &IntMatrix::identity(&z, 3)) {
            assert!(p.data().iter().all(|e| *e == 0));
        }
        let single = remainder_tree(&mats[..1], &moduli[..1], &seed);
        assert_eq!(single[0], seed.mul_int(&mats[0]).rem_euc(&moduli[0]));
    }

    #[test]
    fn forest_matches_naive_prefix_products() {
        let n = 200;
        let moduli = prime_moduli(n);
        let mut expected = Vec::new();
        let mut acc = IntMatrix::identity(&IntegerRing, 3);
        for (i, m) in moduli.iter().enumerate() {
            acc = acc.mul_int(&toy_leaf(i));
            if *m > 1 {
                expected.push((i, acc.rem_euc(m)));
            }
        }
        for kappa in [0, 1, 3, 5, 9] {
            let mut got = Vec::new();
            remainder_forest(|lo, hi| (lo..hi).map(toy_leaf).collect(), &moduli, kappa, None, |b| {
                got.extend(b);
                Ok(())
            })
            .unwrap();
            assert_eq!(got, expected, "kappa={kappa}");
        }
    }

    #[test]
    fn finite_differences_match_evaluation() {
        let curve = QuarticCurve::fermat();
        let engine = CurveEngine::new(&curve, 1).unwrap();
        let m = &engine.specialized().m;
        let vals = quadratic_values(m, -2, -1, 40);
        for (i, v) in vals.iter().enumerate() {
            assert_eq!(*v, m.eval(&IntegerRing, &Integer::from(-2 - i as i64)));
        }
    }

    #[test]
    fn fermat_forest_matches_per_prime_cp() {
        let engine = CurveEngine::new(&QuarticCurve::fermat(), 1).unwrap();
        let got = forest_cp(&engine, 512, 2, true).unwrap();
        assert!(got.len() > 90);
        for (p, cp) in got {
            assert_eq!(cp, compute_cp(&engine.prime_data(p).unwrap()), "p={p}");
        }
    }

    #[test]
    fn stripping_keeps_cp_and_shrinks_products() {
        let curve = QuarticCurve::from_i64(&[2, 1, -1, 0, 3, 1, -2, 0, 1, 1, 3, -1, 2, 1, 1]).unwrap();
        let engine = CurveEngine::new(&curve, 1).unwrap();
        let a = forest_cp(&engine, 300, 0, false).unwrap();
        let b = forest_cp(&engine, 300, 0, true).unwrap();
        assert_eq!(a, b);
        for (p, cp) in &a {
            assert_eq!(*cp, compute_cp(&engine.prime_data(*p).unwrap()), "p={p}");
        }
        let spec = engine.specialized();
        let leaves = |lo: usize, hi: usize| quadratic_values(&spec.m, -2 - lo as i64, -1, hi - lo);
        let bits = |lam| remainder_forest(leaves, &moduli(&engine, 300), 0, lam, |_| Ok(())).unwrap().max_chunk_bits;
        let (plain, stripped) = (bits(None), bits(Some(engine.lambda())));
        let lam_bits = engine.lambda().significant_bits();
        assert!(plain > stripped + 200 * lam_bits, "{plain} vs {stripped}");
    }

    #[test]
    fn kappa_does_not_change_output() {
        let curve = QuarticCurve::from_i64(&[1, 0, 3, -2, 0, 1, 5, 0, -1, 2, 1, 1, 0, -3, 2]).unwrap();
        let engine = CurveEngine::new(&curve, 1).unwrap();
        let run = |k| {
            let mut v = Vec::new();
            let opts = RangeOptions { kappa: Some(k), ..RangeOptions::default() };
            range_cartier_manin(&engine, 1 << 10, &opts, |o| {
                v.push(o);
                Ok(())
            })
            .unwrap();
            v
        };
        let base = run(0);
        assert_eq!(base.len(), 172);
        assert!(base.windows(2).all(|w| w[0].p < w[1].p));
        for k in [1, 4, 6] {
            assert_eq!(run(k), base, "kappa={k}");
        }
    }

    #[test]
    fn range_matches_engine() {
        let engine = CurveEngine::new(&QuarticCurve::fermat(), 1).unwrap();
        let mut n = 0;
        range_cartier_manin(&engine, 1 << 10, &RangeOptions::default(), |o| {
            let e = engine.compute(o.p, &EngineOptions::default()).unwrap();
            assert_eq!(o, e, "p={}", o.p);
            n += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(n, 172);
    }

    #[test]
    fn default_kappa_values() {
        assert_eq!(default_kappa(1 << 16), 8);
        assert_eq!(default_kappa(1 << 13), 7);
        assert_eq!(default_kappa(2), 0);
    }
}
