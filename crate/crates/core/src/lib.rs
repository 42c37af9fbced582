//! Curvature-weighted Riemannian geometry of conformal classes on closed
//! triangulated surfaces: geodesics, distances and inverse Gauss curvature flow.

pub mod error;
pub mod surface;
pub mod conformal;
pub mod path;
pub mod geodesic;
pub mod oracle;
pub mod flow;
pub mod diagnostics;
pub mod fields;
pub mod digest;

pub use error::{Error, Result};
pub use surface::{CurvatureMode, DiscreteSurface};
