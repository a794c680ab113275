//! Parallel transport of tangent vectors along shortest geodesics on triangle
//! meshes by short-time vector heat diffusion, and the geometry built on top
//! of it: closest-point interpolation, global logarithmic maps, Karcher means,
//! geometric medians, geodesic centroidal Voronoi tessellations and ordered
//! intrinsic landmarks.
//!
//! The typical entry point is [`VectorHeatSolver`], which owns the operator
//! mesh (optionally intrinsic Delaunay), the assembled Laplacians and their
//! prefactorizations, and answers any number of transport, interpolation and
//! log-map queries with backsolves only.

pub mod centers;
pub mod error;
pub mod generators;
pub mod geodesics;
pub mod idt;
pub mod io;
pub mod logmap;
pub mod mesh;
pub mod operators;
pub mod oracles;
pub mod solver;
pub mod vhm;

pub use error::{Error, Result};
pub use mesh::{Geometry, IntrinsicMesh, SurfacePoint, TangentVector};
pub use vhm::{SolverOptions, SourceSet, TransportResult, VectorHeatSolver};
