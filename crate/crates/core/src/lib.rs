#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod error;
pub mod garding;
pub mod hessian;
pub mod integrate;
pub mod lelong;
pub mod slicing;
pub mod suite;

pub use catalog::{lookup, Point, TestFunction, C64};
pub use error::{Error, Result};
pub use hessian::{spectrum, HermitianMatrix, Spectrum};
