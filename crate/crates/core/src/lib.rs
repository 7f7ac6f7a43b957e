//! Cost-optimal Markovian couplings on the real line.
//!
//! The crate builds the anti-monotonic rearrangement (AMR) coupling of a
//! law with a right shift of itself, evaluates the band payoffs
//! `E[(c - |X - Y|)^+]` that generate every bounded convex decreasing payoff,
//! iterates the coupling step by step for random walks, and runs it on the
//! uniformized clock of a compound Poisson process. A transportation simplex
//! provides brute-force ground truth on finite supports.
//!
//! Everything here is `no_std` with `alloc`: the companion `coupled-levy`
//! crate carries file formats, parallel Monte Carlo drivers and the CLI.

#![cfg_attr(not(test), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod baselines;
pub mod chains;
pub mod costs;
pub mod coupling;
mod error;
pub mod levy;
mod math;
pub mod measures;
pub mod oracle;
pub mod quadrature;
pub mod rng;
pub mod stats;

pub use baselines::{baseline_sample, BaselineKind};
pub use chains::{ChainPath, ChainSpec, DifferenceGrid, ShiftCoupler};
pub use costs::{Band, ConcaveCost};
pub use coupling::{CoupleSample, Decomposition, InverseRule};
pub use error::{Error, Result};
pub use levy::{CompoundPoissonSpec, CoupledPath, CouplingKind};
pub use measures::{Atom, Density, Distribution1D, Family, Law, Tabulated, UnimodalityReport};
pub use oracle::TransportPlan;
