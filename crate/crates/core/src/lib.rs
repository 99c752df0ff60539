//! Numerical core for the random displacement Schrödinger operator
//! `H = -Δ + p + Σ_γ q(x - γ - λ ω_γ)`.
//!
//! Everything here is pure computation on owned buffers: finite-difference
//! assembly on tori and Floquet cells, symmetric eigensolvers and inertia
//! counting, band-bottom analysis, certification of the minimizer
//! assumptions, displacement distributions, the reduced lattice models and
//! Monte-Carlo spectral statistics. The crate is `no_std` and only needs
//! `alloc`; file formats, threading and the command line live in the
//! companion `displace` crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments, clippy::needless_range_loop)]
// `num_traits::Float` supplies f64 math without std; once std is linked
// anywhere in the build its inherent methods win and the import goes unused.

#[cfg(test)]
extern crate std;

extern crate alloc;

pub mod assumptions;
pub mod discretize;
pub mod eigensolve;
mod error;
pub mod floquet;
pub mod geometry;
pub mod potentials;
pub mod randomfields;
pub mod reduced;
pub mod sparse;
pub mod spectral_stats;
pub mod torus;

pub use error::{Error, Result};

pub use num_complex::Complex64;

pub(crate) mod vecmath {
    #[allow(unused_imports)]
    use num_traits::Float;

    pub fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    pub fn norm(a: &[f64]) -> f64 {
        dot(a, a).sqrt()
    }

    pub fn dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }
}
