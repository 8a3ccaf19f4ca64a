//! Trace-driven simulation of Earth-observation satellites downlinking
//! through a LEO relay constellation.
//!
//! The crate covers the full pipeline: TLE ingestion and orbit propagation
//! ([`tle`], [`sgp4`]), pairwise orbital geometry and density analysis
//! ([`geometry`]), relay selection strategies ([`selection`]), link and route
//! quality estimation ([`quality`]), capacity-constrained session scheduling
//! ([`sched`]), and end-to-end scenario simulation with backlog accounting
//! ([`sim`]).
//!
//! Numeric kernels (vector math, link-budget formulas, quantiles, the
//! assignment solver) are generic over the scalar type through
//! [`num::Scalar`]; the rest of the crate uses the concrete [`Real`] alias.

pub mod assign;
pub mod earth;
pub mod geometry;
pub mod num;
pub mod quality;
pub mod report;
pub mod sched;
pub mod selection;
pub mod sgp4;
pub mod sim;
pub mod time;
pub mod tle;

/// Scalar type used by the concrete simulation pipeline.
pub type Real = f64;

/// Concrete 3-vector used throughout the pipeline (km / km/s).
pub type Vec3d = num::Vec3<Real>;

pub use sgp4::StateVector;
pub use tle::OrbitalElements;
