//! Numerical checks of the analytical identities: Pokhozhaev identities,
//! the radial energy functional, the reflection extension and ellipticity
//! of the extended operator.

mod extension;
mod gradcheck;
mod pokhozhaev;
mod polar;
pub mod smooth;

use thiserror::Error;

use crate::geometry::GeometryError;

pub use extension::{
    collar_symmetry_error, extend_field, extension_jump, legendre_hadamard, lh_form, EllipticityCheck,
};
pub use gradcheck::{gradient_check, GradientCheck};
pub use pokhozhaev::{
    check_x_field, energy_density, pokhozhaev_curl, pokhozhaev_div, write_identity_csv, IdentityResult, XFieldCheck,
};
pub use polar::{duality_gap, polar_diagnostics, radial_energy, PolarRecord};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("quadrature needs at least 8 points, got {n}")]
    QuadratureUnderflow { n: usize },
    #[error("ball is neither inside the domain nor centred on its boundary")]
    BallLeavesDomain,
    #[error("ball about a boundary point is not star-shaped from its centre")]
    BallNotStarShaped,
    #[error("circle does not cross the boundary on both sides")]
    ArcNotFound,
    #[error("circle has no points inside the domain")]
    EmptyArc,
    #[error("mesh has no exterior collar")]
    MissingCollar,
    #[error("field has {got} values, mesh domain has {expected}")]
    FieldTooShort { expected: usize, got: usize },
    #[error("|u| = {modulus:.3e} on the annulus")]
    DegenerateOnAnnulus { modulus: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
