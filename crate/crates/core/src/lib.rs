//! Zeroth-order primal-dual learning of ergodic resource-allocation
//! policies for wireless systems.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod channels;
pub mod duality_diag;
pub mod error;
pub mod fixtures;
pub mod harness;
pub mod policy;
pub mod primal_dual;
pub mod problem;
pub mod rng;
pub mod smoothing;
pub mod trace;

pub use error::{Error, Result};
