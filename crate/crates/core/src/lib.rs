//! Three-state contact processes on two-dimensional lattices.
//!
//! The crate covers exact Gillespie simulation of Models A and B, the
//! Poisson graphical representation with a coupling of all `q` at once,
//! density-driven fixed points, cluster and crossing statistics, and an
//! exact CTMC oracle for lattices of up to nine sites.

pub mod ddcp;
pub mod dynamics;
pub mod error;
pub mod graphical;
pub mod harness;
pub mod lattice;
pub mod oracle;
pub mod percolation;
pub mod rng;

pub use error::{Error, Result};
pub use lattice::{
    Configuration, Direction, Geometry, GeometryKind, Model, Neighbor, QParameterization, RateSet,
    SiteState,
};
