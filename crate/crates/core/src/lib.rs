//! Executable constructions around variational quantum algorithms:
//! Sylvester expansions of circuit unitaries, the coefficient-matching
//! encoding of sum-of-squares Diophantine polynomials, VQA/QAOA simulators,
//! exact integer polynomial evaluation and joint spectral radius bounds.

#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod encoder;
pub mod error;
pub mod jsr;
pub mod matcore;
pub mod sospoly;
pub mod sylvester;
pub mod vqasim;

pub use error::{Error, Result};
