//! Spectral functional calculus for discretized Schrödinger operators
//! `H = −Δ + V` and numerical Littlewood-Paley diagnostics: dyadic systems,
//! kernel decay, Peetre and Hardy-Littlewood maximal functions, heat-kernel
//! bounds and Besov / Triebel-Lizorkin norms.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod dyadic;
pub mod error;
pub mod grid;
pub mod maximal;
pub mod operator;
pub mod spaces;
pub mod verify;

pub use error::{Error, Result};
