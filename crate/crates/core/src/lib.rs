#![no_std]
// NaN-rejecting guards are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]
extern crate alloc;

pub mod error;
pub mod fft;
pub mod linalg;
pub mod triplets;
pub mod functions;
pub mod generator;
pub mod grid;
pub mod semigroup;
pub mod hjb;
pub mod rng;
pub mod uncertainty_mc;
