//! Adaptive all-hexahedral mesh generation from closed triangle surfaces.
//!
//! Pipeline: [`surface`] ingestion, feature-driven [`octree`] refinement with strong
//! balancing, template-based [`dualmesh`] extraction, [`coremesh`] clearance, and the
//! buffer-layer construction plus Jacobian-controlled optimization in [`quality`].
//! [`pipeline`] chains the stages; [`quadtree2d`] is the planar twin of the dual templates.

pub mod coremesh;
pub mod dualmesh;
pub mod error;
pub mod geom;
pub mod octree;
pub mod pipeline;
pub mod quadtree2d;
pub mod quality;
pub mod surface;
pub mod vtk;

pub use error::{HexError, Result};
