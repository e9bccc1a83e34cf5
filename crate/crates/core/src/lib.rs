//! Projected Langevin sampling over polyhedral constraint sets.
//!
//! The crate implements the constrained Langevin iteration
//! `x_{k+1} = Π_K(x_k − η ∇ₓf(x_k, z_k) + √(2η/β) ŵ_k)` for a polyhedron
//! `K = {x : a_iᵀx ≤ b_i}` and external data `z_k` drawn from an L-mixing
//! stream, together with the machinery needed to check its convergence
//! guarantees empirically:
//!
//! * [`polytope`]: half-space polyhedra, Euclidean projection, normal cones,
//!   Chebyshev centering.
//! * [`skorokhod`]: the discrete Skorokhod map and the constructive
//!   Lipschitz constants for polyhedral reflection.
//! * [`mixing`]: IID, constant and AR(1) data streams with their mixing
//!   descriptors.
//! * [`objective`]: objectives whose gradient is affine in the data, plus
//!   regularity validators.
//! * [`sampler`]: the algorithm and the coupled family of auxiliary
//!   processes driven by one noise realization.
//! * [`constants`]: the contraction metric and the full constant ledger.
//! * [`wasserstein`]: empirical 1-Wasserstein estimators and Gibbs
//!   reference measures.
//! * [`experiments`]: the Monte-Carlo checks (Skorokhod sweep, averaging,
//!   moments, discretization, coupling, Gibbs invariance, rate) as library
//!   calls returning serializable reports.
//! * [`cli`]: configuration files and the experiment commands behind the
//!   `polylangevin` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod constants;
pub mod error;
pub mod experiments;
pub mod mixing;
pub mod objective;
pub mod polytope;
pub mod quadrature;
pub mod rng;
pub mod sampler;
pub mod skorokhod;
pub mod stats;
pub mod wasserstein;

pub use error::{Error, Result};
pub use mixing::{Ar1Stream, MixingDescriptor, StreamSpec};
pub use objective::ObjectiveModel;
pub use polytope::Polyhedron;
pub use sampler::SamplerConfig;
pub use skorokhod::{DiscretePath, SkorokhodConstants};
