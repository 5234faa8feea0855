#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;

pub mod error;
pub mod identity;
pub mod jacobi;
pub mod kernel;
pub mod perturbation;
pub mod quad;
pub mod stieltjes;
