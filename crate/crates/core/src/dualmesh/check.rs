//! Structural validation of hex meshes: element shape, face sharing, boundary manifoldness.

use std::collections::HashMap;

use super::HexMesh;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConformityReport {
    /// Elements with a repeated vertex.
    pub degenerate_elements: usize,
    /// Quad keys used by more than two hexes.
    pub overshared_faces: usize,
    /// Interior faces whose two owners traverse them in the same direction.
    pub misoriented_faces: usize,
    /// Faces owned by one hex.
    pub boundary_faces: usize,
    /// Boundary faces with a vertex outside `allowed_boundary` (holes or hanging nodes).
    pub interior_boundary_faces: usize,
    /// Boundary edges not shared by exactly two boundary faces.
    pub nonmanifold_boundary_edges: usize,
    /// Hexes whose Jacobian is not positive at some sample.
    pub inverted_elements: usize,
}

impl ConformityReport {
    pub fn is_conforming(&self) -> bool {
        self.degenerate_elements == 0
            && self.overshared_faces == 0
            && self.misoriented_faces == 0
            && self.interior_boundary_faces == 0
            && self.nonmanifold_boundary_edges == 0
    }
}

fn same_cycle_direction(a: &[usize; 4], b: &[usize; 4]) -> bool {
    let i = b.iter().position(|&x| x == a[0]).unwrap();
    b[(i + 1) % 4] == a[1]
}

/// Check face sharing, orientation, and the boundary surface. `allowed_boundary`, when
/// given, marks the vertices that may lie on the mesh boundary.
pub fn check_conformity(mesh: &HexMesh, allowed_boundary: Option<&[bool]>) -> ConformityReport {
    let mut r = ConformityReport::default();
    for hex in &mesh.hexes {
        let mut s = *hex;
        s.sort_unstable();
        if s.windows(2).any(|w| w[0] == w[1]) {
            r.degenerate_elements += 1;
        }
    }
    let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
    for (_, owners) in mesh.face_map() {
        match owners.len() {
            1 => {
                r.boundary_faces += 1;
                let q = mesh.face(owners[0].0, owners[0].1);
                if let Some(ok) = allowed_boundary {
                    if q.iter().any(|&v| !ok[v]) {
                        r.interior_boundary_faces += 1;
                    }
                }
                for k in 0..4 {
                    let (a, b) = (q[k], q[(k + 1) % 4]);
                    *edge_count.entry((a.min(b), a.max(b))).or_default() += 1;
                }
            }
            2 => {
                let a = mesh.face(owners[0].0, owners[0].1);
                let b = mesh.face(owners[1].0, owners[1].1);
                if same_cycle_direction(&a, &b) {
                    r.misoriented_faces += 1;
                }
            }
            _ => r.overshared_faces += 1,
        }
    }
    r.nonmanifold_boundary_edges = edge_count.values().filter(|&&c| c != 2).count();
    r.inverted_elements = (0..mesh.hexes.len())
        .filter(|&h| mesh.quality(h).min_j <= 0.0)
        .count();
    r
}
