//! Plane quartic models over Z and F_p: parsing, nondegeneracy and smoothness
//! tests, the bad-prime multiple D, naive point counts and random models.

use rand::Rng;
use rug::Integer;
use serde::Deserialize;

use crate::algebra::linalg::{determinant, rank};
use crate::algebra::monomial::{self, lex_monomials, Monomial};
use crate::algebra::poly::{upoly, Form};
use crate::algebra::{FpMatrix, IntegerRing, Mat, PrimeField, Ring};
use crate::error::{Error, Result};

pub const NUM_COEFFS: usize = 15;

/// Quartic form over Z; coefficients indexed by degree-4 monomials in lex order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuarticCurve {
    form: Form<Integer>,
}

#[derive(Deserialize)]
struct CurveJson {
    coeffs: Vec<serde_json::Value>,
}

impl QuarticCurve {
    pub fn new(coeffs: Vec<Integer>) -> Result<Self> {
        if coeffs.len() != NUM_COEFFS {
            return Err(Error::Usage(format!("expected {NUM_COEFFS} coefficients, got {}", coeffs.len())));
        }
        if coeffs.iter().all(|c| c.cmp0().is_eq()) {
            return Err(Error::Usage("all coefficients are zero".into()));
        }
        Ok(QuarticCurve { form: Form::from_coeffs(4, coeffs) })
    }

    pub fn from_i64(coeffs: &[i64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&c| Integer::from(c)).collect())
    }

    /// Either whitespace/comma separated integers (`#` starts a comment) or a
    /// JSON object `{"coeffs": [...]}` whose entries are numbers or strings.
    pub fn parse(text: &str) -> Result<Self> {
        let trimmed = text.trim_start();
        if trimmed.starts_with('{') {
            let parsed: CurveJson =
                serde_json::from_str(trimmed).map_err(|e| Error::Usage(format!("invalid curve JSON: {e}")))?;
            let coeffs = parsed
                .coeffs
                .iter()
                .map(|v| match v {
                    serde_json::Value::Number(n) => parse_int(&n.to_string()),
                    serde_json::Value::String(s) => parse_int(s),
                    other => Err(Error::Usage(format!("invalid coefficient {other}"))),
                })
                .collect::<Result<Vec<_>>>()?;
            return Self::new(coeffs);
        }
        let coeffs = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(|l| l.split(|c: char| c.is_whitespace() || c == ','))
            .filter(|tok| !tok.is_empty())
            .map(parse_int)
            .collect::<Result<Vec<_>>>()?;
        Self::new(coeffs)
    }

    /// x0^4 + x1^4 + x2^4.
    pub fn fermat() -> Self {
        let mut c = vec![0i64; NUM_COEFFS];
        for m in [[4, 0, 0], [0, 4, 0], [0, 0, 4]] {
            c[monomial::position(&m)] = 1;
        }
        Self::from_i64(&c).unwrap()
    }

    /// x0^3 x1 + x1^3 x2 + x2^3 x0.
    pub fn klein() -> Self {
        let mut c = vec![0i64; NUM_COEFFS];
        for m in [[3, 1, 0], [0, 3, 1], [1, 0, 3]] {
            c[monomial::position(&m)] = 1;
        }
        Self::from_i64(&c).unwrap()
    }

    pub fn form(&self) -> &Form<Integer> {
        &self.form
    }

    pub fn coeffs(&self) -> &[Integer] {
        self.form.coeffs()
    }

    pub fn coeff(&self, m: &Monomial) -> &Integer {
        self.form.coeff(m)
    }

    pub fn reduce(&self, p: u64) -> Result<CurveModP> {
        let field = PrimeField::new(p)?;
        Ok(CurveModP::new(field, self.form.coeffs().iter().map(|c| field.reduce_integer(c)).collect()))
    }

    /// The model with x0 and x1 exchanged.
    pub fn swap01(&self) -> Self {
        QuarticCurve { form: swap_form(&self.form) }
    }
}

fn swap_form<E: Clone>(form: &Form<E>) -> Form<E> {
    let coeffs =
        lex_monomials(4).monomials().iter().map(|m| form.coeff(&[m[1], m[0], m[2]]).clone()).collect();
    Form::from_coeffs(4, coeffs)
}

fn parse_int(tok: &str) -> Result<Integer> {
    tok.trim().parse::<Integer>().map_err(|_| Error::Usage(format!("invalid integer {tok:?}")))
}

/// Quartic form over F_p.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CurveModP {
    field: PrimeField,
    form: Form<u64>,
}

impl CurveModP {
    pub fn new(field: PrimeField, coeffs: Vec<u64>) -> Self {
        let coeffs = coeffs.into_iter().map(|c| c % field.p()).collect();
        CurveModP { field, form: Form::from_coeffs(4, coeffs) }
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn p(&self) -> u64 {
        self.field.p()
    }

    pub fn form(&self) -> &Form<u64> {
        &self.form
    }

    pub fn coeffs(&self) -> &[u64] {
        self.form.coeffs()
    }

    pub fn coeff(&self, m: &Monomial) -> u64 {
        *self.form.coeff(m)
    }

    pub fn is_zero(&self) -> bool {
        self.form.coeffs().iter().all(|&c| c == 0)
    }

    /// `f(T y)`.
    pub fn transform(&self, t: &[[u64; 3]; 3]) -> Self {
        CurveModP { field: self.field, form: self.form.compose_linear(&self.field, t) }
    }

    pub fn swap01(&self) -> Self {
        CurveModP { field: self.field, form: swap_form(&self.form) }
    }
}

pub const CORNERS: [Monomial; 3] = [[4, 0, 0], [0, 4, 0], [0, 0, 4]];

/// The three coordinate-line restrictions: (variable set to t, variable set to 1).
/// They are f(t,1,0), f(t,0,1), f(0,t,1).
pub const EDGES: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

fn edge_name(k: usize) -> &'static str {
    ["f(t,1,0)", "f(t,0,1)", "f(0,t,1)"][k]
}

/// Discriminant of a binary quartic `sum a_k t^k`, computed as
/// `Res(g, g') / lc(g)` through a 7x7 Sylvester determinant. `None` if the
/// leading coefficient vanishes.
pub fn binary_discriminant<R: Ring>(ring: &R, a: &[R::Elem]) -> Option<R::Elem> {
    assert_eq!(a.len(), 5);
    if ring.is_zero(&a[4]) {
        return None;
    }
    let g: Vec<R::Elem> = a.iter().rev().cloned().collect();
    let dg: Vec<R::Elem> = (1..5).rev().map(|k| ring.mul(&ring.from_i64(k as i64), &a[k])).collect();
    let syl = Mat::from_fn(7, 7, |i, j| {
        let (poly, shift) = if i < 3 { (&g, i) } else { (&dg, i - 3) };
        if j >= shift && j - shift < poly.len() {
            poly[j - shift].clone()
        } else {
            ring.zero()
        }
    });
    Some(ring.div_exact(&determinant(ring, &syl), &a[4]))
}

/// 36x36 degree-7 Macaulay matrix of the partial derivatives of `form`.
/// Row for `alpha` uses the first `i` with `alpha_i >= 3`.
pub fn macaulay_matrix<R: Ring>(ring: &R, form: &Form<R::Elem>) -> Mat<R::Elem> {
    let partials: Vec<Form<R::Elem>> = (0..3).map(|i| form.partial(ring, i)).collect();
    let d7 = lex_monomials(7);
    let rows = d7
        .monomials()
        .iter()
        .map(|alpha| {
            let i = (0..3).find(|&i| alpha[i] >= 3).expect("degree 7 forces some exponent >= 3");
            let mut shift = *alpha;
            shift[i] -= 3;
            partials[i].shift(ring, &shift).coeffs().to_vec()
        })
        .collect();
    Mat::from_rows(rows)
}

/// Rank test for nondegeneracy: the forms `x^a * x_i dF/dx_i`, `a` of degree 6,
/// span all forms of degree 10 exactly when the three Euler partials have no
/// common projective zero.
fn euler_partials_span<R: Ring>(ring: &R, form: &Form<R::Elem>) -> bool {
    let gens: Vec<Form<R::Elem>> = (0..3).map(|i| form.euler_partial(ring, i)).collect();
    spans_degree_10(ring, &gens)
}

fn spans_degree_10<R: Ring>(ring: &R, gens: &[Form<R::Elem>]) -> bool {
    let d6 = lex_monomials(6);
    let mut rows = Vec::with_capacity(gens.len() * d6.len());
    for g in gens {
        for a in d6.monomials() {
            rows.push(g.shift(ring, a).coeffs().to_vec());
        }
    }
    rank(ring, &Mat::from_rows(rows)) == monomial::count(10)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Degeneracy {
    Corner(Monomial),
    Edge(&'static str),
    Ternary,
}

impl std::fmt::Display for Degeneracy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Degeneracy::Corner(m) => write!(f, "corner coefficient of x^{m:?} vanishes"),
            Degeneracy::Edge(name) => write!(f, "discriminant of {name} vanishes"),
            Degeneracy::Ternary => write!(f, "ternary discriminant of the Euler partials vanishes"),
        }
    }
}

/// The first failing nondegeneracy factor of a model over F_p (p odd), if any.
pub fn degeneracy_modp(c: &CurveModP) -> Option<Degeneracy> {
    let f = c.field();
    for m in CORNERS {
        if c.coeff(&m) == 0 {
            return Some(Degeneracy::Corner(m));
        }
    }
    for (k, &(vary, one)) in EDGES.iter().enumerate() {
        let a = c.form().binary_restriction(&f, vary, one);
        if binary_discriminant(&f, &a).is_some_and(|d| d == 0) {
            return Some(Degeneracy::Edge(edge_name(k)));
        }
    }
    if !euler_partials_span(&f, c.form()) {
        return Some(Degeneracy::Ternary);
    }
    None
}

pub fn nondegenerate_modp(c: &CurveModP) -> bool {
    c.p() != 2 && degeneracy_modp(c).is_none()
}

/// Smoothness of `f = 0` over the algebraic closure, valid in every
/// characteristic: `f` and all `x_j df/dx_i` have no common zero iff their
/// multiples span the forms of degree 10.
pub fn is_smooth_modp(c: &CurveModP) -> bool {
    let f = c.field();
    let mut gens = vec![c.form().clone()];
    for i in 0..3 {
        let d = c.form().partial(&f, i);
        for j in 0..3 {
            gens.push(d.shift(&f, &monomial::unit(j)));
        }
    }
    let d6 = lex_monomials(6);
    let rows: Vec<Vec<u64>> = gens.iter().flat_map(|g| d6.monomials().iter().map(|a| g.shift(&f, a).coeffs().to_vec())).collect();
    let width = monomial::count(10);
    FpMatrix::from_fn(f, rows.len(), width, |i, j| rows[i][j]).rank() == width
}

/// Factors of the bad-prime multiple `D = 2 * lambda6 * corners * edge
/// discriminants * R`, where `R` is the Macaulay determinant of the partials.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BadPrimeData {
    pub d: Integer,
    pub factors: Vec<(String, Integer)>,
    /// Number of random unimodular substitutions needed before `R != 0`.
    pub retries: usize,
}

impl BadPrimeData {
    /// Whether `p` is a good prime for the integer family.
    pub fn is_good(&self, p: u64) -> bool {
        match u32::try_from(p) {
            Ok(q) => !self.d.is_divisible_u(q),
            Err(_) => !self.d.is_divisible(&Integer::from(p)),
        }
    }
}

const MACAULAY_RETRIES: usize = 32;

pub fn bad_prime_multiple<G: Rng>(c: &QuarticCurve, lambda6: &Integer, rng: &mut G) -> Result<BadPrimeData> {
    let z = IntegerRing;
    let mut factors = vec![("two".to_string(), Integer::from(2)), ("lambda6".to_string(), lambda6.clone())];
    for m in CORNERS {
        let v = c.coeff(&m).clone();
        if v.cmp0().is_eq() {
            return Err(Error::Degenerate(Degeneracy::Corner(m).to_string()));
        }
        factors.push((format!("corner {m:?}"), v));
    }
    for (k, &(vary, one)) in EDGES.iter().enumerate() {
        let a = c.form().binary_restriction(&z, vary, one);
        let disc = binary_discriminant(&z, &a).expect("corners checked");
        if disc.cmp0().is_eq() {
            return Err(Error::Degenerate(Degeneracy::Edge(edge_name(k)).to_string()));
        }
        factors.push((format!("disc {}", edge_name(k)), disc));
    }
    let mut form = c.form().clone();
    let mut retries = 0;
    let r = loop {
        let r = determinant(&z, &macaulay_matrix(&z, &form));
        if r.cmp0().is_ne() {
            break r;
        }
        if retries == MACAULAY_RETRIES {
            return Err(Error::Degenerate("ternary discriminant vanishes (Macaulay determinant is zero)".into()));
        }
        retries += 1;
        form = form.compose_linear(&z, &random_unimodular(rng));
    };
    factors.push(("macaulay".to_string(), r));
    let d = factors.iter().fold(Integer::from(1), |acc, (_, v)| acc * v);
    Ok(BadPrimeData { d: d.abs(), factors, retries })
}

/// Product of a few elementary integer matrices; determinant 1.
fn random_unimodular<G: Rng>(rng: &mut G) -> [[Integer; 3]; 3] {
    let mut t = [[0i64; 3]; 3];
    for (i, row) in t.iter_mut().enumerate() {
        row[i] = 1;
    }
    for _ in 0..4 {
        let i = rng.gen_range(0..3);
        let j = (i + rng.gen_range(1..3)) % 3;
        let c = rng.gen_range(-2i64..=2);
        for row in t.iter_mut() {
            row[j] += c * row[i];
        }
    }
    t.map(|r| r.map(Integer::from))
}

/// Number of points of `f = 0` in P^2(F_p), by root counting along lines:
/// [1:0:0], then [t:0:1], then [t:1:a] for every `a`.
pub fn naive_count(c: &CurveModP) -> u64 {
    let f = c.field();
    let p = f.p();
    let mut count = u64::from(c.coeff(&[4, 0, 0]) == 0);
    let g: Vec<u64> = (0..=4).map(|k| c.coeff(&[k, 0, 4 - k])).collect();
    count += upoly::count_roots(&f, &g);
    // f(t, 1, a) = sum_k t^k sum_c F_(k, 4-k-c, c) a^c
    let by_k: Vec<Vec<u64>> = (0..=4u32).map(|k| (0..=4 - k).map(|cc| c.coeff(&[k, 4 - k - cc, cc])).collect()).collect();
    for a in 0..p {
        let g: Vec<u64> = by_k.iter().map(|poly| upoly::eval(&f, poly, a)).collect();
        count += upoly::count_roots(&f, &g);
    }
    count
}

/// A model `f(T y)` with `T` random in GL_3(F_p) that is nondegenerate mod p.
pub fn random_good_model<G: Rng>(c: &CurveModP, rng: &mut G, max_tries: usize) -> Result<(CurveModP, [[u64; 3]; 3])> {
    let f = c.field();
    let p = f.p();
    if p <= 3 {
        return Err(Error::Usage(format!("random models need p > 3, got {p}")));
    }
    for _ in 0..max_tries {
        let t: [[u64; 3]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(0..p)));
        let m = crate::algebra::FpMatrix::from_fn(f, 3, 3, |i, j| t[i][j]);
        if m.det() == 0 {
            continue;
        }
        let model = c.transform(&t);
        if nondegenerate_modp(&model) {
            return Ok((model, t));
        }
    }
    Err(Error::Degenerate(format!("no nondegenerate model found mod {p} after {max_tries} tries")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parse_both_formats() {
        let txt = "1 0 0 0 0 0 0 0 0 0 1 0 0 0 1  # fermat";
        assert_eq!(QuarticCurve::parse(txt).unwrap(), QuarticCurve::fermat());
        let js = r#"{"coeffs": [1,0,0,0,0,0,0,0,0,0,"1",0,0,0,1]}"#;
        assert_eq!(QuarticCurve::parse(js).unwrap(), QuarticCurve::fermat());
        assert!(matches!(QuarticCurve::parse("1 2 3"), Err(Error::Usage(_))));
        assert!(matches!(QuarticCurve::parse(&"0 ".repeat(15)), Err(Error::Usage(_))));
    }

    #[test]
    fn fermat_binary_discriminants_are_256() {
        let z = IntegerRing;
        let c = QuarticCurve::fermat();
        for &(vary, one) in &EDGES {
            let a = c.form().binary_restriction(&z, vary, one);
            assert_eq!(binary_discriminant(&z, &a).unwrap(), 256);
        }
        // t^4 - t has a double root at infinity only after homogenizing; check a
        // case with a genuine repeated root: (t-1)^2 (t^2+1)
        let a = [1, -2, 2, -2, 1].map(Integer::from);
        assert_eq!(binary_discriminant(&z, &a).unwrap(), 0);
    }

    #[test]
    fn fermat_macaulay_determinant_is_power_of_two() {
        let z = IntegerRing;
        let r = determinant(&z, &macaulay_matrix(&z, QuarticCurve::fermat().form()));
        assert_eq!(r, Integer::from(1) << 72);
    }

    #[test]
    fn fermat_nondegeneracy_and_smoothness() {
        let c = QuarticCurve::fermat();
        for p in [3u64, 5, 7, 101] {
            let cp = c.reduce(p).unwrap();
            assert!(nondegenerate_modp(&cp), "p={p}");
            assert!(is_smooth_modp(&cp));
        }
        assert!(!is_smooth_modp(&c.reduce(2).unwrap()));
        let k = QuarticCurve::klein();
        assert_eq!(degeneracy_modp(&k.reduce(5).unwrap()), Some(Degeneracy::Corner([4, 0, 0])));
        assert!(is_smooth_modp(&k.reduce(5).unwrap()));
        assert!(!is_smooth_modp(&k.reduce(7).unwrap()));
        assert!(is_smooth_modp(&k.reduce(2).unwrap()));
    }

    #[test]
    fn naive_count_matches_enumeration() {
        let c = QuarticCurve::from_i64(&[1, -2, 3, 0, 5, -1, 2, 0, 7, 1, -3, 4, 0, 2, 6]).unwrap();
        for p in [2u64, 3, 5, 7, 13] {
            let cp = c.reduce(p).unwrap();
            let f = cp.field();
            let eval = |x: [u64; 3]| {
                lex_monomials(4).monomials().iter().zip(cp.coeffs()).fold(0, |acc, (m, &k)| {
                    f.addm(acc, f.mulm(k, f.mulm(f.powm(x[0], m[0] as u64), f.mulm(f.powm(x[1], m[1] as u64), f.powm(x[2], m[2] as u64)))))
                })
            };
            let mut n = 0;
            for x in 0..p {
                for y in 0..p {
                    n += u64::from(eval([x, y, 1]) == 0);
                }
                n += u64::from(eval([x, 1, 0]) == 0);
            }
            n += u64::from(eval([1, 0, 0]) == 0);
            assert_eq!(naive_count(&cp), n, "p={p}");
        }
    }

    #[test]
    fn bad_prime_multiple_of_fermat_is_power_of_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let data = bad_prime_multiple(&QuarticCurve::fermat(), &Integer::from(4), &mut rng).unwrap();
        let d = data.d.clone();
        assert!(d.is_power_of_two());
        assert!(!data.is_good(2) && data.is_good(3));
        assert!(matches!(bad_prime_multiple(&QuarticCurve::klein(), &Integer::from(1), &mut rng), Err(Error::Degenerate(_))));
    }

    #[test]
    fn random_model_of_klein_is_nondegenerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let k = QuarticCurve::klein().reduce(11).unwrap();
        let (model, _) = random_good_model(&k, &mut rng, 100).unwrap();
        assert!(nondegenerate_modp(&model));
        assert_eq!(naive_count(&model), naive_count(&k));
    }
}
