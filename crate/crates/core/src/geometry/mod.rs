//! Scatterer geometry, triangulation and mesh output.

mod delaunay;
pub mod domain;
pub mod mesh;
pub mod predicates;
pub mod vtk;

pub use domain::{BoundaryPiece, Corner, DomainKind, DomainSpec, GraphProfile, LocalFrame};
pub use mesh::{build_mesh, BoundaryEdge, EdgeLabel, Locator, Mesh2D, MeshStats, Region, DEFAULT_CORNER_GRADING};
