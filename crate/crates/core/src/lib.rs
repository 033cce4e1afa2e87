//! Segment processes of retarded, neutral, and jump-diffusion stochastic
//! delay equations.
//!
//! The crate is `no_std` + `alloc`. With the default `std` feature, ensemble
//! computations fan out over a rayon pool; the per-path work and the
//! reduction order are fixed, so results are bitwise identical for any
//! thread count.
//!
//! Module map:
//!
//! * [`paths`]: segments on `[-tau, 0]`, sup norm, modulus of continuity,
//!   time changes and the Skorohod distance bracket.
//! * [`models`]: coefficient bundles and the built-in linear examples.
//! * [`noise`]: counter-keyed random streams.
//! * [`engine`]: Euler-Maruyama stepping, coupled runs, Poisson marks,
//!   segment extraction.
//! * [`rates`]: Halanay and Razumikhin exponents, empirical decay fits.
//! * [`ergodics`]: time averages, mixing gaps, moment/tightness/Kurtz
//!   diagnostics.
//! * [`conditions`]: sampled verification of the dissipativity and
//!   Lipschitz assumptions.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is used on purpose so NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod conditions;
pub mod engine;
pub mod ensemble;
pub mod ergodics;
mod error;
pub mod models;
pub mod noise;
pub mod paths;
pub mod rates;
pub mod stats;

pub use error::{Error, Result};
