//! Online mirror descent and its reparameterized gradient-descent twin.
//!
//! The crate provides the building blocks (regularizers, reparameterization
//! maps, domains and projections), the learners, an implicit-regularizer
//! reconstruction, and an experiment harness that measures regret and
//! closeness between the two algorithms.

pub mod domains;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod learners;
pub mod losses;
pub mod reconstruct;
pub mod rng;

pub use domains::{bregman_project, euclid_project, map_domain, Domain, ProjectionResult};
pub use error::{Error, Result};
pub use geometry::{verify_assumption1, GeometryPair, Regularizer, Reparameterization};
