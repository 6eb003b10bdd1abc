//! Legacy ASCII VTK output: hexahedral meshes (cell type 12) and octree leaves as voxels.

use std::fmt::Write as _;
use std::path::Path;

use crate::dualmesh::HexMesh;
use crate::error::{HexError, Result};
use crate::geom::Vec3;
use crate::octree::Octree;

pub const VTK_VOXEL: u8 = 11;
pub const VTK_HEXAHEDRON: u8 = 12;

fn header(s: &mut String, title: &str, points: impl Iterator<Item = Vec3>, n: usize) {
    writeln!(s, "# vtk DataFile Version 3.0").unwrap();
    writeln!(s, "{title}").unwrap();
    writeln!(s, "ASCII").unwrap();
    writeln!(s, "DATASET UNSTRUCTURED_GRID").unwrap();
    writeln!(s, "POINTS {n} double").unwrap();
    for p in points {
        writeln!(s, "{} {} {}", p.x, p.y, p.z).unwrap();
    }
}

/// Hex mesh with per-cell `min_sj` and `provenance` (the [`Provenance::code`]) cell data.
/// `map` takes every vertex to output coordinates; quality is evaluated before the map.
///
/// [`Provenance::code`]: crate::dualmesh::Provenance::code
pub fn hex_mesh_vtk(mesh: &HexMesh, map: impl Fn(&Vec3) -> Vec3) -> String {
    let mut s = String::new();
    header(
        &mut s,
        "hexoct hex mesh",
        mesh.vertices.iter().map(&map),
        mesh.vertices.len(),
    );
    let n = mesh.num_hexes();
    writeln!(s, "CELLS {n} {}", 9 * n).unwrap();
    for hex in &mesh.hexes {
        let ids: Vec<String> = hex.iter().map(|v| v.to_string()).collect();
        writeln!(s, "8 {}", ids.join(" ")).unwrap();
    }
    writeln!(s, "CELL_TYPES {n}").unwrap();
    for _ in 0..n {
        writeln!(s, "{VTK_HEXAHEDRON}").unwrap();
    }
    writeln!(s, "CELL_DATA {n}").unwrap();
    writeln!(s, "SCALARS min_sj double 1\nLOOKUP_TABLE default").unwrap();
    for h in 0..n {
        writeln!(s, "{}", mesh.quality(h).min_sj).unwrap();
    }
    writeln!(s, "SCALARS provenance int 1\nLOOKUP_TABLE default").unwrap();
    for p in &mesh.provenance {
        writeln!(s, "{}", p.code()).unwrap();
    }
    s
}

/// Octree leaves as voxels with the leaf level as cell data.
pub fn octree_vtk(tree: &Octree, map: impl Fn(&Vec3) -> Vec3) -> String {
    let leaves = tree.leaves();
    let corners = leaves.iter().flat_map(|&l| {
        let b = tree.cell_box(l);
        // voxel order: x fastest, then y, then z
        (0..8).map(move |k| {
            Vec3::new(
                if k & 1 == 0 { b.min.x } else { b.max.x },
                if k & 2 == 0 { b.min.y } else { b.max.y },
                if k & 4 == 0 { b.min.z } else { b.max.z },
            )
        })
    });
    let n = leaves.len();
    let mut s = String::new();
    header(
        &mut s,
        "hexoct octree leaves",
        corners.map(|p| map(&p)),
        8 * n,
    );
    writeln!(s, "CELLS {n} {}", 9 * n).unwrap();
    for i in 0..n {
        let ids: Vec<String> = (8 * i..8 * i + 8).map(|v| v.to_string()).collect();
        writeln!(s, "8 {}", ids.join(" ")).unwrap();
    }
    writeln!(s, "CELL_TYPES {n}").unwrap();
    for _ in 0..n {
        writeln!(s, "{VTK_VOXEL}").unwrap();
    }
    writeln!(s, "CELL_DATA {n}").unwrap();
    writeln!(s, "SCALARS level int 1\nLOOKUP_TABLE default").unwrap();
    for &l in &leaves {
        writeln!(s, "{}", tree.octant(l).level).unwrap();
    }
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| HexError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dualmesh::Provenance;

    #[test]
    fn unit_cube_file() {
        let mesh = HexMesh {
            vertices: (0..8)
                .map(|k| {
                    Vec3::new(
                        [0., 1., 1., 0.][k % 4],
                        [0., 0., 1., 1.][k % 4],
                        (k / 4) as f64,
                    )
                })
                .collect(),
            hexes: vec![[0, 1, 2, 3, 4, 5, 6, 7]],
            provenance: vec![Provenance::Buffer],
        };
        let text = hex_mesh_vtk(&mesh, |p| p * 2.0);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[4], "POINTS 8 double");
        assert_eq!(lines[11], "2 2 2");
        assert_eq!(lines[13], "CELLS 1 9");
        assert_eq!(lines[14], "8 0 1 2 3 4 5 6 7");
        assert_eq!(lines[16], "12");
        assert_eq!(lines[20], "1");
        assert_eq!(lines[23], Provenance::Buffer.code().to_string());
    }

    #[test]
    fn octree_voxels_carry_levels() {
        let tree = Octree::uniform(4.0, 1);
        let text = octree_vtk(&tree, |p| *p);
        assert!(text.contains("POINTS 64 double"));
        assert!(text.contains("CELLS 8 72"));
        let types: Vec<&str> = text
            .lines()
            .skip_while(|l| !l.starts_with("CELL_TYPES"))
            .skip(1)
            .take(9)
            .collect();
        assert_eq!(types[..8], ["11"; 8]);
        assert_eq!(types[8], "CELL_DATA 8");
        assert!(text.ends_with("1\n1\n1\n1\n1\n1\n1\n1\n"));
    }
}
