//! Deterministic low-rank matrix completion with expander-graph sampling
//! masks.
//!
//! The crate is organized around the pipeline it implements:
//!
//! - [`linalg`]: dense matrices, SVD, norms.
//! - [`graphs`]: sampling masks, the LPS Cayley-graph construction, and
//!   spectral certification of masks.
//! - [`subspace`]: tangent-space projectors and coherence parameters of a
//!   reference low-rank matrix relative to a mask.
//! - [`bounds`]: recovery certificates and dual-certificate constructions.
//! - [`solver`]: nuclear-norm minimization by ADMM with singular value
//!   thresholding.
//! - [`experiments`]: rank-sweep harness for measuring recovery phase
//!   transitions.

pub mod bounds;
pub mod experiments;
pub mod graphs;
pub mod linalg;
pub mod solver;
pub mod subspace;
