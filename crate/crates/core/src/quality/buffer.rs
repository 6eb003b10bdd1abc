//! Buffer layer: one hex per core boundary quad, capped by the closest surface points of its corners.

use std::collections::{BTreeMap, HashMap};

use log::warn;

use crate::dualmesh::{HexMesh, Provenance};
use crate::geom::Vec3;
use crate::surface::TriangleSurface;

/// A core boundary vertex and the surface vertex it was connected to.
#[derive(Debug, Clone, PartialEq)]
pub struct BufferBinding {
    pub core_vertex: usize,
    pub surface_vertex: usize,
    /// Closest surface point `x^s`, refreshed by the optimizer.
    pub point: Vec3,
    /// Triangle holding `point`; the cache used between refreshes.
    pub triangle: usize,
    /// Buffer hexes using this surface vertex.
    pub hexes: Vec<usize>,
}

/// Append the buffer layer to `core`. Buffer hexes follow the core hexes, and the new
/// surface vertices follow the core vertices.
pub fn build_buffer_layer(
    core: &HexMesh,
    surface: &TriangleSurface,
) -> (HexMesh, Vec<BufferBinding>) {
    let mut mesh = core.clone();
    let mut slot: BTreeMap<usize, usize> = BTreeMap::new();
    let mut bindings: Vec<BufferBinding> = Vec::new();
    for (h, f) in core.boundary_faces() {
        let q = core.face(h, f);
        let top = q.map(|x| {
            *slot.entry(x).or_insert_with(|| {
                let cp = surface.closest_point(&core.vertices[x], None);
                mesh.vertices.push(cp.point);
                bindings.push(BufferBinding {
                    core_vertex: x,
                    surface_vertex: mesh.vertices.len() - 1,
                    point: cp.point,
                    triangle: cp.triangle,
                    hexes: Vec::new(),
                });
                bindings.len() - 1
            })
        });
        let id = mesh.hexes.len();
        // the outward core quad faces into the new hex, as a VTK bottom face does
        mesh.hexes.push([
            q[0],
            q[1],
            q[2],
            q[3],
            bindings[top[0]].surface_vertex,
            bindings[top[1]].surface_vertex,
            bindings[top[2]].surface_vertex,
            bindings[top[3]].surface_vertex,
        ]);
        mesh.provenance.push(Provenance::Buffer);
        for b in top {
            bindings[b].hexes.push(id);
        }
    }
    let mut seen: HashMap<[u64; 3], usize> = HashMap::new();
    for b in &bindings {
        if let Some(other) = seen.insert(b.point.map(f64::to_bits).into(), b.core_vertex) {
            warn!(
                "core vertices {other} and {} share the surface point {:?}; kept as distinct vertices",
                b.core_vertex, b.point
            );
        }
    }
    (mesh, bindings)
}
