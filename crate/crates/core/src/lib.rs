//! Constrained co-clustering of faces and locations in personal photo
//! collections.
//!
//! Face patches and location patches are clustered by alternating
//! semi-supervised kernel k-means: each side's kernel is augmented with
//! must-link / cannot-link weights and with cross-domain terms derived from
//! the other side's current clustering and from which faces and locations
//! appear in the same photos.

pub mod cli;
pub mod cocluster;
pub mod constraints;
pub mod data;
pub mod error;
pub mod eval;
pub mod geo;
pub mod kernel;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
