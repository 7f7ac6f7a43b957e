//! Simulation drivers, file formats and experiment runners built on
//! `coupled-levy-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod checks;
pub mod error;
pub mod experiment;
pub mod formats;
pub mod parallel;
