//! Two-dimensional Ginzburg–Landau director fields with a divergence or
//! curl penalty under tangential anchoring: P1 finite elements on
//! star-shaped domains, continuation in eps, vortex detection with
//! interior degrees and boundary half-indices, and numerical checks of
//! the underlying identities.
//!
//! The numerical core is generic over `f32`/`f64` through [`scalar::Scalar`];
//! the aliases below fix `f64`, which is what the command line uses.

pub mod app;
pub mod config;
pub mod diagnostics;
pub mod fields;
pub mod geometry;
pub mod io;
pub mod mesh;
pub mod quadrature;
pub mod scalar;
pub mod solver;
pub mod svg;
pub mod verify;
pub mod vortex;

pub use config::RunConfig;
pub use fields::{BoundaryCondition, EnergyBreakdown, Penalty};
pub use geometry::Shape;
pub use solver::{InitialKind, Method};
pub use vortex::VortexReport;

pub type Vec2 = scalar::Vec2<f64>;
pub type Geometry = geometry::DomainGeometry<f64>;
pub type Mesh = mesh::TriMesh<f64>;
pub type Field = fields::VectorField<f64>;
pub type Params = fields::EnergyParams<f64>;
pub type Schedule = solver::SolveSchedule<f64>;
pub type Trace = solver::SolveTrace<f64>;
