//! Geometry of space-time singular sets of mean curvature flow.
//!
//! The crate bundles parabolic metric geometry ([`spacetime`], [`planes`]),
//! Reifenberg and cone diagnostics for space-time point sets
//! ([`reifenberg`], [`cone`]), Gaussian area and density computations
//! ([`gaussian`]), a rotationally symmetric flow simulator with singularity
//! detection ([`flows`]), and generators for the standard example sets
//! ([`synthetic`]).

pub mod cone;
pub mod error;
pub mod flows;
pub mod gaussian;
pub mod io;
pub mod planes;
pub mod reifenberg;
pub mod spacetime;
pub mod svg;
pub mod synthetic;
pub mod vecops;

pub use error::{Error, Result};
pub use planes::TimeSlicePlane;
pub use spacetime::{PointCloud, SpaceTimePoint};
