//! All-hex dual extraction from a strongly balanced octree.
//!
//! Away from level changes the dual is the usual one: a vertex per leaf center and a hex per
//! grid point shared by 8 leaves. Where a block of leaves meets finer blocks, its leaves
//! are cut by thin sheets parallel to the transition faces; the extra cells supply the dual
//! vertices of the face and edge templates, so every primal vertex of the refined partition
//! is shared by exactly 8 cells and its dual element is a hex.

mod check;
mod extract;
mod transitions;

use std::collections::HashMap;

use crate::geom::Vec3;
use crate::quality::metrics::{hex_quality_points, HexQuality, HEX_FACES};

pub use check::{check_conformity, ConformityReport};
pub use extract::{extract_dual, extract_dual_detailed, DualExtraction, DualParams};
pub use transitions::{detect_transitions, TransitionKind, TransitionRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Provenance {
    GridDual,
    TemplateFace,
    TemplateEdge,
    CornerFill,
    Buffer,
}

impl Provenance {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn name(self) -> &'static str {
        match self {
            Provenance::GridDual => "grid-dual",
            Provenance::TemplateFace => "template-face",
            Provenance::TemplateEdge => "template-edge",
            Provenance::CornerFill => "corner-fill",
            Provenance::Buffer => "buffer",
        }
    }
}

/// Shared-vertex hexahedral mesh in VTK corner order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HexMesh {
    pub vertices: Vec<Vec3>,
    pub hexes: Vec<[usize; 8]>,
    pub provenance: Vec<Provenance>,
}

/// Sorted vertex key of a quad face.
pub fn face_key(q: &[usize; 4]) -> [usize; 4] {
    let mut k = *q;
    k.sort_unstable();
    k
}

impl HexMesh {
    pub fn num_hexes(&self) -> usize {
        self.hexes.len()
    }

    pub fn hex_points(&self, h: usize) -> [Vec3; 8] {
        self.hexes[h].map(|v| self.vertices[v])
    }

    pub fn quality(&self, h: usize) -> HexQuality {
        hex_quality_points(&self.hex_points(h))
    }

    pub fn min_scaled_jacobian(&self) -> f64 {
        (0..self.hexes.len())
            .map(|h| self.quality(h).min_sj)
            .fold(f64::INFINITY, f64::min)
    }

    /// Hexes incident to each vertex.
    pub fn vertex_hexes(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for (h, hex) in self.hexes.iter().enumerate() {
            for &v in hex {
                adj[v].push(h);
            }
        }
        adj
    }

    /// Outward quad of local face `f` of hex `h`.
    pub fn face(&self, h: usize, f: usize) -> [usize; 4] {
        HEX_FACES[f].map(|i| self.hexes[h][i])
    }

    /// Face key -> (hex, local face) occurrences.
    pub fn face_map(&self) -> HashMap<[usize; 4], Vec<(usize, usize)>> {
        let mut m: HashMap<[usize; 4], Vec<(usize, usize)>> = HashMap::new();
        for h in 0..self.hexes.len() {
            for f in 0..6 {
                m.entry(face_key(&self.face(h, f)))
                    .or_default()
                    .push((h, f));
            }
        }
        m
    }

    /// Faces owned by exactly one hex, as (hex, local face), sorted.
    pub fn boundary_faces(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .face_map()
            .into_values()
            .filter(|v| v.len() == 1)
            .map(|v| v[0])
            .collect();
        out.sort_unstable();
        out
    }

    /// Drop hexes flagged in `remove`, then compact unreferenced vertices.
    /// Returns the old-to-new vertex map.
    pub fn remove_hexes(&mut self, remove: &[bool]) -> Vec<Option<usize>> {
        let mut hexes = Vec::with_capacity(self.hexes.len());
        let mut prov = Vec::with_capacity(self.hexes.len());
        for (h, hex) in self.hexes.iter().enumerate() {
            if !remove[h] {
                hexes.push(*hex);
                prov.push(self.provenance[h]);
            }
        }
        let mut map = vec![None; self.vertices.len()];
        let mut verts = Vec::new();
        for hex in &mut hexes {
            for v in hex.iter_mut() {
                let nv = *map[*v].get_or_insert_with(|| {
                    verts.push(self.vertices[*v]);
                    verts.len() - 1
                });
                *v = nv;
            }
        }
        self.vertices = verts;
        self.hexes = hexes;
        self.provenance = prov;
        map
    }

    pub fn count_by_provenance(&self) -> HashMap<Provenance, usize> {
        let mut m = HashMap::new();
        for &p in &self.provenance {
            *m.entry(p).or_default() += 1;
        }
        m
    }
}

#[cfg(test)]
mod tests;
