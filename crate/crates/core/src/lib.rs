//! Numerical verification of dimensional Brunn–Minkowski inequalities in
//! Gauss space.
//!
//! The crate builds the Gaussian-source Brenier coupling of two even strongly
//! log-concave laws, evaluates relative entropies along the interpolant
//! `T_t = (1-t)T_0 + tT_1`, and checks the entropic, curvature-strengthened,
//! geometric and functional (Borell–Brascamp–Lieb) inequalities with exact
//! closed forms where they exist and quadrature or Monte Carlo elsewhere.
//!
//! Module map:
//!
//! | module | contents |
//! |--------|----------|
//! | [`gauss`] | power means, `σ^{(t)}(θ)`, SPD square roots, Gaussian relative entropy |
//! | [`distributions`] | even strongly log-concave families, OU smoothing, sampling, 1D CDFs |
//! | [`transport`] | Brenier maps from γ, couplings, interpolants, velocity fields |
//! | [`entropy`] | entropy curves, derivative identities, Bochner and local inequality checks |
//! | [`geometry`] | symmetric bodies, Minkowski combinations, Gaussian measure, variational principle |
//! | [`functional`] | sup-convolutions, BBL checks, Donsker–Varadhan duality |
//!
//! The crate is `no_std` (with `alloc`); the `parallel` feature pulls in `std`
//! and rayon for chunked Monte Carlo.

#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod distributions;
pub mod entropy;
pub mod error;
pub mod functional;
pub mod gauss;
pub mod geometry;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod transport;

pub use error::{Error, Result};
pub use gauss::{ExtReal, SpdMatrix};

/// A numerical value with its Monte Carlo standard error (zero for closed
/// forms and deterministic quadrature).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    pub const fn exact(value: f64) -> Self {
        Self { value, std_error: 0.0 }
    }

    pub const fn new(value: f64, std_error: f64) -> Self {
        Self { value, std_error }
    }
}

/// Outcome of a one-sided numerical check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Verdict {
    Pass,
    Fail,
    /// The sign of the gap is not resolved by the error budget.
    Inconclusive,
}
