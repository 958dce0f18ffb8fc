//! Bayesian recovery of the initial state of a heat equation from noisy point
//! observations, using a truncated Gaussian series prior on the
//! Dirichlet-Laplacian eigenbasis.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod experiments;
pub mod fem;
pub mod inference;
pub mod mesh;
pub mod prior;
pub mod seed;
