//! Complex linear algebra kernels: banded matrices with partial-pivoting
//! LU, small dense Schur decompositions and a Krylov-Schur eigensolver.

mod band;
mod dense;
mod krylov;

pub use band::{BandLu, BandMatrix, GeneralBand};
pub use dense::{DenseMatrix, Schur};
pub(crate) use krylov::deterministic_vector;
pub use krylov::{krylov_schur, KrylovOptions, LinearOperator, RitzPair};

use num_complex::Complex64;

pub type C64 = Complex64;

#[inline]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    Complex64::new(re, im)
}

pub fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `sum conj(a_i) b_i`
pub fn dot_c(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}
