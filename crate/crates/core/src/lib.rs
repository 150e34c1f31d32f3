//! Capillary surfaces in wedge domains.

// `!(x > 0.0)` deliberately rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod angle;
pub mod comparison;
pub mod conditions;
pub mod config;
pub mod exec;
pub mod geometry;
pub mod mesh;
pub mod radial;
pub mod solver;
pub mod torus;

pub use exec::Exec;
pub use geometry::{build_wedge, polar_of, ArcSpec, BoundaryTag, GeometryError, Point, WedgeDomain};
pub use mesh::{generate_mesh, Locator, Mesh, MeshError};
