//! Framed flow categories of width at most three, modelled by their scores.
//!
//! The crate is `no_std` with `alloc`. It holds the exact linear algebra,
//! the score data model, the move calculus, Baues–Hennes words and the
//! normalization pipeline.

#![no_std]

extern crate alloc;

pub mod linalg;
pub mod moves;
pub mod normalize;
pub mod score;
pub mod words;
