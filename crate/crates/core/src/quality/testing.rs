//! Fixtures shared by the quality tests.

use crate::dualmesh::{HexMesh, Provenance};
use crate::geom::Vec3;
use crate::surface::shapes::box_mesh;
use crate::surface::TriangleSurface;

use super::buffer::{build_buffer_layer, BufferBinding};

/// An n x n x n block of axis-aligned cubes.
pub fn block(n: usize, origin: Vec3, edge: f64) -> HexMesh {
    let id = |i: usize, j: usize, k: usize| (k * (n + 1) + j) * (n + 1) + i;
    let mut m = HexMesh::default();
    for k in 0..=n {
        for j in 0..=n {
            for i in 0..=n {
                m.vertices
                    .push(origin + Vec3::new(i as f64, j as f64, k as f64) * edge);
            }
        }
    }
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                m.hexes.push([
                    id(i, j, k),
                    id(i + 1, j, k),
                    id(i + 1, j + 1, k),
                    id(i, j + 1, k),
                    id(i, j, k + 1),
                    id(i + 1, j, k + 1),
                    id(i + 1, j + 1, k + 1),
                    id(i, j + 1, k + 1),
                ]);
                m.provenance.push(Provenance::GridDual);
            }
        }
    }
    m
}

/// The box [0,10]^3 with a 4^3 block spanning [1,9]^3 and its buffer layer. The surface keeps
/// its size: the root cube has edge 10/0.9.
pub fn boxed_block() -> (TriangleSurface, HexMesh, Vec<BufferBinding>) {
    let (v, t) = box_mesh(Vec3::zeros(), Vec3::repeat(10.0), 4);
    let s = TriangleSurface::from_raw(v, t, 10.0 / 0.9).unwrap();
    let lo = s.normalization().to_domain(&Vec3::repeat(1.0));
    let hi = s.normalization().to_domain(&Vec3::repeat(9.0));
    let core = block(4, lo, (hi.x - lo.x) / 4.0);
    let (mesh, bindings) = build_buffer_layer(&core, &s);
    (s, mesh, bindings)
}
