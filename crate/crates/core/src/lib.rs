//! A desk-scale laboratory for Bell's theory.
//!
//! The crate simulates EPR-Bohm singlet experiments under pluggable
//! counterfactual models, checks the finite-N Bell identities exactly,
//! evaluates the V3 and V4 (CHSH) inequalities, decides membership in the
//! local correlation polytope, and works out which correlations are even
//! defined under a chosen set of hypotheses.

pub mod error;
pub mod inequalities;
pub mod primitives;
pub mod quantum;
pub mod realism;
pub mod relativity;

pub use error::{Error, Result};
