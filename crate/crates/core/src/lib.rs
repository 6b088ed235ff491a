//! Semigroup method for quantum stochastic operator cocycles on finite
//! truncations of the system and noise spaces.
//!
//! A stochastic generator [`generator::GeneratorMatrix`] determines a family
//! of contraction semigroups [`semigroup::SemigroupFamily`]; products of these
//! along a partition give the cocycle's matrix elements between exponential
//! vectors ([`cocycle`]), and its vacuum expectation is the quantum dynamical
//! semigroup of [`qds`].

pub mod cli;
pub mod cocycle;
pub mod error;
pub mod formats;
pub mod generator;
pub mod models;
pub mod numerics;
pub mod par;
pub mod qds;
pub mod semigroup;

pub use error::{Error, Result};
