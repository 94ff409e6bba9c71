//! Scalars, matrices, monomials and symbolic shift polynomials.

pub mod linalg;
pub mod matrix;
pub mod monomial;
pub mod poly;
pub mod ring;
pub mod sym;

pub use matrix::{FpMatrix, IntMatrix, Mat};
pub use monomial::{lex_monomials, Monomial, MonomialBasis};
pub use ring::{is_prime, primes_up_to, IntegerRing, PrimeField, Ring};
pub use sym::{eval_sym, Assignment, Evaluated, FiniteDiffStream, SymMatrix, SymPoly, UniMatrix, Var};
