#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod experiments;
pub mod hmm;
pub mod io;
pub mod multiple_testing;
pub mod rng;
pub mod simulator;
pub mod statistics;
pub mod twin_tests;

pub use error::{Error, Result};
