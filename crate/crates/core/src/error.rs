use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HexError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path} line {line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("face {0} is not a triangle")]
    NonTriangleFace(usize),
    #[error("triangle {0} is degenerate (repeated vertex index or out of range)")]
    DegenerateTriangle(usize),
    #[error("open boundary edge ({0}, {1}) in triangle {2}")]
    OpenBoundaryEdge(usize, usize, usize),
    #[error("non-manifold edge ({0}, {1}) shared by {2} triangles")]
    NonManifoldEdge(usize, usize, usize),
    #[error("inconsistent orientation across edge ({0}, {1}) at triangle {2}")]
    InconsistentOrientation(usize, usize, usize),
    #[error("duplicate triangle {0}")]
    DuplicateTriangle(usize),
    #[error("empty surface")]
    EmptySurface,
    #[error("triangle {0} has zero area")]
    ZeroAreaTriangle(usize),
    #[error("vertex {0} has vanishing mixed area")]
    VanishingArea(usize),

    #[error("invalid refinement config: {0}")]
    InvalidRefinement(String),
    #[error("surface exceeds the root cube")]
    SurfaceOutsideRoot,
    #[error("octant {0} is not a leaf")]
    NotALeaf(usize),
    #[error(
        "tree is not strongly balanced: leaves {0} (level {1}) and {2} (level {3}) are adjacent"
    )]
    Unbalanced(usize, u8, usize, u8),
    #[error("dual template lookup failed at grid point {0:?}: {1}")]
    TemplateLookup([i64; 3], String),

    #[error("core mesh is empty; increase the maximum refinement level")]
    EmptyCore,
    #[error("buffer clearance failed: {0}")]
    Topology(String),
    #[error("optimizer diverged: {0}")]
    Divergence(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, HexError>;
