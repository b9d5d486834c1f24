//! Plane-strain finite elements for elastic bodies in unilateral contact
//! through nonlinear Winkler layers, solved by a parallel Robin–Robin domain
//! decomposition iteration and a monolithic semismooth Newton reference.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod contact;
pub mod dd_solver;
pub mod fem2d;
pub mod linsolve;
pub mod model;
