//! Partition functions and pressure bounds for weighted tilings of periodic
//! cubic lattices.
//!
//! A tiling here is a partition of the `N = L^d` torus vertices into blocks
//! of a fixed size `n`; blocks are arbitrary vertex subsets, not necessarily
//! connected. Each block is weighted by a positive, symmetric, translation
//! invariant activity normalized so the completions of any fixed vertex sum
//! to one. The crate computes the exact partition function `Z` and pressure
//! `p = ln(Z)/N` by enumeration at desk scale, the constant-activity closed
//! forms, and a ladder of rigorous upper/lower bounds (`Z⁺ ≥ Z′ ≥ Z⁻`) built
//! from a coarse dissection of the lattice into boxes.
//!
//! The crate is `no_std`-compatible (`alloc` required); disable the default
//! `std` feature to use it in that mode. Float kernels fall back to `libm`.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod conditions;
mod error;
pub mod exact;
pub mod ladder;
pub mod lattice;
mod math;
pub mod numerics;
pub mod weighting;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
