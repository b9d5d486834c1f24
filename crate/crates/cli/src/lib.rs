//! Experiment harness for the two-block groove problem: configuration,
//! meshing, solver runs, parameter sweeps and the verification suite.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod scenario;
pub mod verify;
