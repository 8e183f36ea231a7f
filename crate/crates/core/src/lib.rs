// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bump;
pub mod cli;
pub mod config;
pub mod dirichlet;
pub mod error;
pub mod moments;
pub mod multfn;
pub mod ntcore;
pub mod oracle;
pub mod quad;
pub mod resonator;
pub mod sum;

pub use error::{Error, Result};
