//! Ballistic-capture trajectory toolkit for the Earth-Moon system.
//!
//! The library builds databases of ballistic captures at the Moon from
//! energy-transition-domain initial conditions in the spatial circular
//! restricted three-body problem, transitions selected captures into an
//! ephemeris-based Earth-Moon-Sun model, and scores them against a reference
//! mission trajectory with an impulsive distance metric.
//!
//! The numerical core (`cr3bp`, `etd`, `elements`, `integrator`, `metric`) is
//! generic over the scalar type; the pipeline layers are concrete `f64`.
//! Concrete aliases for the common types live at the crate root.

pub mod cr3bp;
pub mod database;
pub mod elements;
pub mod ephemeris;
pub mod error;
pub mod etd;
pub mod integrator;
pub mod metric;
pub mod polygon;
pub mod propagation;
pub mod search;
pub mod transition;
pub mod real;
pub mod vec3;

pub use error::{Error, Result};
pub use real::Real;

/// Default scalar for the pipeline layers.
pub type Scalar = f64;

pub type SystemParams = cr3bp::SystemParams<Scalar>;
pub type State6 = cr3bp::State6<Scalar>;
pub type OrbitalElements = elements::OrbitalElements<Scalar>;
pub type EtdPoint = etd::EtdPoint<Scalar>;
pub type EtdIc = etd::EtdIc<Scalar>;
pub type SphereIntersection = etd::SphereIntersection<Scalar>;
pub type DenseTrajectory = integrator::DenseTrajectory<Scalar>;
pub use polygon::{GridPoint, GridSpec, PolyRegion};
