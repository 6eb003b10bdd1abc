//! Element quality metrics, buffer-layer construction and the quality optimizer.

pub mod buffer;
pub mod energy;
pub mod metrics;
pub mod optimize;
#[cfg(test)]
pub(crate) mod testing;

pub use buffer::{build_buffer_layer, BufferBinding};
pub use energy::{energy_and_gradient, hex_term, Energy, HexTerm, TermKind};
pub use metrics::{hex_quality_points, HexQuality};
pub use optimize::{
    optimize, smart_laplacian, Layers, Optimized, OptimizerConfig, OptimizerState, PeriodRecord,
};
