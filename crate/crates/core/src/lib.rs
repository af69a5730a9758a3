//! Level curves `ln|f(z)| = t` of complex polynomials and a small catalog of
//! entire functions, together with their length functions.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs; IO, file formats and the command line live in the
//! `lemnilab` companion crate.
//!
//! Module map:
//! - [`poly`]: polynomial arithmetic, Aberth root finding, critical data, dilatation.
//! - [`jets`]: truncated Taylor arithmetic and the catalog of analytic functions.
//! - [`operator`]: the operator `w -> 2 g w' + g' w` (`g = f/f'`) and its iterates.
//! - [`tracer`]: continuation of level curves, lengths and contour scalar products.
//! - [`moments`]: derivatives of length functions, Hankel matrices, convexity checks.
//! - [`laurent`]: the exterior map at infinity and the exponential-sum length formula.
//! - [`hyper`]: Gauss hypergeometric function and closed-form lengths.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
pub mod hyper;
pub mod jets;
pub mod laurent;
pub mod moments;
mod ode;
pub mod operator;
pub mod poly;
pub mod tracer;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub use jets::{catalog, Analytic, CatalogFunction, Jet, Zero};
pub use laurent::LaurentModel;
pub use moments::{HankelReport, LengthSample, Method};
pub use operator::Weight;
pub use poly::{ComplexPoly, CriticalData};
pub use tracer::{LevelComponent, LevelSet, TraceOptions, Tracer};

pub(crate) mod prelude {
    #[allow(unused_imports)]
    pub(crate) use num_traits::Float;

    pub(crate) use alloc::vec;
    pub(crate) use alloc::vec::Vec;
    pub(crate) use num_complex::Complex64;

    pub(crate) const TAU: f64 = core::f64::consts::TAU;

    #[inline]
    pub(crate) fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }
}
