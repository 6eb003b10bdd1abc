//! Input triangle surface: ingestion, normalization into the octree root cube,
//! and the geometric queries used by every later stage.

mod grid;
pub mod io;
pub mod shapes;

use std::collections::HashMap;
use std::path::Path;

use log::{info, warn};

use crate::error::{HexError, Result};
use crate::geom::{self, Aabb, Vec3};
pub use grid::TriangleGrid;

/// Root cube edge length used when no refinement configuration is supplied
/// (`2^(base_level + 1)` for the default base level 5).
pub const DEFAULT_ROOT_EDGE: f64 = 64.0;

/// Fraction of the root edge occupied by the longest side of the input bounding box.
const FILL_FRACTION: f64 = 0.9;

/// Affine map from original input coordinates into the root-cube domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    pub scale: f64,
    pub offset: Vec3,
    pub root_edge: f64,
}

impl Normalization {
    pub fn fit(bb: &Aabb, root_edge: f64) -> Self {
        let longest = bb.extent().max().max(f64::MIN_POSITIVE);
        let scale = FILL_FRACTION * root_edge / longest;
        let offset = Vec3::repeat(root_edge * 0.5) - bb.center() * scale;
        Self {
            scale,
            offset,
            root_edge,
        }
    }

    pub fn to_domain(&self, p: &Vec3) -> Vec3 {
        p * self.scale + self.offset
    }

    pub fn to_original(&self, q: &Vec3) -> Vec3 {
        (q - self.offset) / self.scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosestPoint {
    pub point: Vec3,
    pub triangle: usize,
    pub distance: f64,
}

/// Immutable closed manifold triangle surface in normalized domain units.
#[derive(Debug, Clone)]
pub struct TriangleSurface {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    vertex_normals: Vec<Vec3>,
    curvature: Vec<f64>,
    thickness: Vec<f64>,
    vertex_tris: Vec<Vec<usize>>,
    tri_mean_edge: Vec<f64>,
    grid: TriangleGrid,
    normalization: Normalization,
}

/// Load an OBJ/OFF/STL file into the default root cube.
pub fn load_surface(path: &Path) -> Result<TriangleSurface> {
    TriangleSurface::load(path, DEFAULT_ROOT_EDGE)
}

impl TriangleSurface {
    pub fn load(path: &Path, root_edge: f64) -> Result<Self> {
        let raw = io::read_mesh(path)?;
        Self::from_raw(raw.vertices, raw.triangles, root_edge)
    }

    /// Validate a raw indexed mesh and normalize it into `[0, root_edge]^3`.
    pub fn from_raw(
        vertices: Vec<Vec3>,
        triangles: Vec<[usize; 3]>,
        root_edge: f64,
    ) -> Result<Self> {
        if triangles.is_empty() {
            return Err(HexError::EmptySurface);
        }
        validate_closed_manifold(vertices.len(), &triangles)?;
        let (vertices, mut triangles) = compact(vertices, triangles);

        let bb = Aabb::from_points(vertices.iter());
        let normalization = Normalization::fit(&bb, root_edge);
        let vertices: Vec<Vec3> = vertices
            .iter()
            .map(|p| normalization.to_domain(p))
            .collect();

        if enclosed_volume(&vertices, &triangles) < 0.0 {
            info!("input surface is oriented inward; flipping all triangles");
            for t in &mut triangles {
                t.swap(1, 2);
            }
        }

        let mut vertex_tris = vec![Vec::new(); vertices.len()];
        for (ti, t) in triangles.iter().enumerate() {
            for &v in t {
                vertex_tris[v].push(ti);
            }
        }
        let tri_mean_edge: Vec<f64> = triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|i| vertices[i]);
                ((b - a).norm() + (c - b).norm() + (a - c).norm()) / 3.0
            })
            .collect();
        let mean_edge = tri_mean_edge.iter().sum::<f64>() / tri_mean_edge.len() as f64;
        let grid = TriangleGrid::build(&vertices, &triangles, 2.0 * mean_edge);
        let vertex_normals = angle_weighted_normals(&vertices, &triangles);

        let mut surface = Self {
            vertices,
            triangles,
            vertex_normals,
            curvature: Vec::new(),
            thickness: Vec::new(),
            vertex_tris,
            tri_mean_edge,
            grid,
            normalization,
        };
        surface.curvature = (0..surface.vertices.len())
            .map(|v| {
                surface.vertex_curvature(v).unwrap_or_else(|e| {
                    warn!("curvature at vertex {v} undefined ({e}); using 0");
                    0.0
                })
            })
            .collect();
        surface.thickness = (0..surface.vertices.len())
            .map(|v| surface.vertex_thickness(v))
            .collect();
        Ok(surface)
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn vertex_normals(&self) -> &[Vec3] {
        &self.vertex_normals
    }

    /// Cached per-vertex curvature `G`.
    pub fn curvature(&self) -> &[f64] {
        &self.curvature
    }

    /// Cached per-vertex thickness `T` (`f64::INFINITY` when the inward ray escaped).
    pub fn thickness(&self) -> &[f64] {
        &self.thickness
    }

    pub fn normalization(&self) -> &Normalization {
        &self.normalization
    }

    pub fn root_edge(&self) -> f64 {
        self.normalization.root_edge
    }

    pub fn bounding_box(&self) -> Aabb {
        Aabb::from_points(self.vertices.iter())
    }

    pub fn incident_triangles(&self, v: usize) -> &[usize] {
        &self.vertex_tris[v]
    }

    pub fn triangle_mean_edge(&self, t: usize) -> f64 {
        self.tri_mean_edge[t]
    }

    pub fn triangle_points(&self, t: usize) -> [Vec3; 3] {
        self.triangles[t].map(|i| self.vertices[i])
    }

    pub fn grid(&self) -> &TriangleGrid {
        &self.grid
    }

    /// Magnitude of the cotangent-weighted umbrella vector over `4 A_i`.
    pub fn vertex_curvature(&self, v: usize) -> Result<f64> {
        let g = cotangent_curvature(&self.vertices, &self.triangles, &self.vertex_tris[v], v)?;
        let (_, area) = g;
        if area < 1e-12 * self.root_edge() * self.root_edge() {
            return Err(HexError::VanishingArea(v));
        }
        Ok(g.0)
    }

    /// Distance along the inward normal ray to the nearest non-incident triangle.
    pub fn vertex_thickness(&self, v: usize) -> f64 {
        let origin = self.vertices[v];
        let dir = -self.vertex_normals[v];
        let incident = &self.vertex_tris[v];
        let mut best = f64::INFINITY;
        let t_min = 1e-9 * self.root_edge();
        self.grid.walk_ray(&origin, &dir, |cell, t_enter| {
            if t_enter > best {
                return false;
            }
            for &t in self.grid.cell_items(cell) {
                if incident.contains(&t) {
                    continue;
                }
                let [a, b, c] = self.triangle_points(t);
                if let Some(hit) = geom::ray_triangle(&origin, &dir, &a, &b, &c, t_min) {
                    best = best.min(hit.t);
                }
            }
            true
        });
        if best.is_infinite() {
            warn!("thickness ray from vertex {v} found no opposite wall");
        }
        best
    }

    /// True iff any triangle overlaps the closed box.
    pub fn tri_cell_intersect(&self, cell: &Aabb) -> bool {
        let mut hit = false;
        self.grid.for_cells_in_box(cell, |c| {
            if hit {
                return;
            }
            for &t in self.grid.cell_items(c) {
                let [a, b, cc] = self.triangle_points(t);
                if geom::triangle_box_overlap(cell, &a, &b, &cc) {
                    hit = true;
                    return;
                }
            }
        });
        hit
    }

    /// Triangles overlapping `cell`, restricted to `candidates`.
    pub fn triangles_in_box(&self, cell: &Aabb, candidates: &[usize]) -> Vec<usize> {
        candidates
            .iter()
            .copied()
            .filter(|&t| {
                let [a, b, c] = self.triangle_points(t);
                geom::triangle_box_overlap(cell, &a, &b, &c)
            })
            .collect()
    }

    fn closest_on(&self, q: &Vec3, t: usize) -> (f64, Vec3) {
        let [a, b, c] = self.triangle_points(t);
        let p = geom::closest_point_on_triangle(q, &a, &b, &c);
        ((p - q).norm_squared(), p)
    }

    /// Nearest surface point. With a hint triangle only a local box is searched first;
    /// the global search is used whenever the local answer cannot be certified.
    pub fn closest_point(&self, q: &Vec3, hint: Option<usize>) -> ClosestPoint {
        if let Some(h) = hint.filter(|&h| h < self.triangles.len()) {
            let half = 5.0 * self.tri_mean_edge[h];
            let bx = Aabb::new(q - Vec3::repeat(half), q + Vec3::repeat(half));
            let mut best: Option<(f64, usize, Vec3)> = None;
            self.grid.for_cells_in_box(&bx, |c| {
                for &t in self.grid.cell_items(c) {
                    let [a, b, cc] = self.triangle_points(t);
                    if !Aabb::from_points([a, b, cc].iter()).intersects(&bx) {
                        continue;
                    }
                    let (d2, p) = self.closest_on(q, t);
                    if best.is_none_or(|(bd, bt, _)| d2 < bd || (d2 == bd && t < bt)) {
                        best = Some((d2, t, p));
                    }
                }
            });
            if let Some((d2, t, p)) = best {
                // inside the box radius the local minimum is the global one
                if d2.sqrt() <= half {
                    return ClosestPoint {
                        point: p,
                        triangle: t,
                        distance: d2.sqrt(),
                    };
                }
            }
        }
        self.closest_point_global(q)
    }

    fn closest_point_global(&self, q: &Vec3) -> ClosestPoint {
        let dims = self.grid.dims();
        let c0 = self.grid.cell_of(q);
        let gb = self.grid.bounds();
        let cs = self.grid.cell_size();
        let mut best: Option<(f64, usize, Vec3)> = None;
        let max_r = dims.iter().copied().max().unwrap_or(1);
        for r in 0..=max_r {
            let lo = [0, 1, 2].map(|i| c0[i].saturating_sub(r));
            let hi = [0, 1, 2].map(|i| (c0[i] + r).min(dims[i] - 1));
            for k in lo[2]..=hi[2] {
                for j in lo[1]..=hi[1] {
                    for i in lo[0]..=hi[0] {
                        let on_shell = [i, j, k]
                            .iter()
                            .zip(c0.iter())
                            .any(|(&a, &b)| a.abs_diff(b) == r);
                        if !on_shell {
                            continue;
                        }
                        for &t in self.grid.cell_items([i, j, k]) {
                            let (d2, p) = self.closest_on(q, t);
                            if best.is_none_or(|(bd, bt, _)| d2 < bd || (d2 == bd && t < bt)) {
                                best = Some((d2, t, p));
                            }
                        }
                    }
                }
            }
            let covers = (0..3).all(|i| lo[i] == 0 && hi[i] == dims[i] - 1);
            if covers {
                break;
            }
            if let Some((bd, _, _)) = best {
                // distance from q to the nearest unvisited cell
                let mut bound = f64::INFINITY;
                for i in 0..3 {
                    if lo[i] > 0 {
                        let plane = gb.min[i] + lo[i] as f64 * cs;
                        bound = bound.min((q[i] - plane).max(0.0));
                    }
                    if hi[i] < dims[i] - 1 {
                        let plane = gb.min[i] + (hi[i] + 1) as f64 * cs;
                        bound = bound.min((plane - q[i]).max(0.0));
                    }
                }
                if bd.sqrt() <= bound {
                    break;
                }
            }
        }
        let (d2, t, p) = best.expect("surface has triangles");
        ClosestPoint {
            point: p,
            triangle: t,
            distance: d2.sqrt(),
        }
    }

    /// Positive inside, negative outside; magnitude is the closest-point distance.
    pub fn signed_distance(&self, q: &Vec3) -> f64 {
        let d = self.closest_point(q, None).distance;
        if d == 0.0 {
            return 0.0;
        }
        if self.is_inside(q) {
            d
        } else {
            -d
        }
    }

    /// Ray-crossing parity with re-cast on edge/vertex hits.
    pub fn is_inside(&self, q: &Vec3) -> bool {
        for dir in RAY_DIRECTIONS.iter() {
            let dir = Vec3::new(dir[0], dir[1], dir[2]);
            if let Some(count) = self.crossings(q, &dir) {
                return count % 2 == 1;
            }
        }
        warn!("all parity rays were degenerate at {q:?}; using the winding number");
        self.winding_number(q) > 0.5
    }

    fn crossings(&self, q: &Vec3, dir: &Vec3) -> Option<usize> {
        let mut hits: Vec<usize> = Vec::new();
        let mut degenerate = false;
        self.grid.walk_ray(q, dir, |cell, _| {
            for &t in self.grid.cell_items(cell) {
                if hits.contains(&t) {
                    continue;
                }
                let [a, b, c] = self.triangle_points(t);
                if let Some(hit) = geom::ray_triangle(q, dir, &a, &b, &c, 0.0) {
                    if hit.degenerate {
                        degenerate = true;
                        return false;
                    }
                    hits.push(t);
                }
            }
            true
        });
        (!degenerate).then_some(hits.len())
    }

    /// Generalized winding number (1 inside, 0 outside).
    pub fn winding_number(&self, q: &Vec3) -> f64 {
        let total: f64 = (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.triangle_points(t);
                geom::solid_angle(q, &a, &b, &c)
            })
            .sum();
        total / (4.0 * std::f64::consts::PI)
    }
}

/// Ray directions for parity tests; each is a fixed pseudo-random unit vector.
const RAY_DIRECTIONS: [[f64; 3]; 9] = [
    [0.574_017_256_431, 0.612_847_173_019, 0.543_120_451_882],
    [-0.413_602_819_553, 0.720_395_184_287, 0.556_839_110_941],
    [0.698_503_912_475, -0.311_278_440_169, 0.644_380_126_751],
    [0.225_761_087_338, 0.371_054_220_907, -0.900_749_603_311],
    [-0.632_819_401_526, -0.560_371_982_035, 0.534_620_817_244],
    [0.803_416_276_915, 0.497_155_832_613, -0.327_631_519_800],
    [-0.281_403_610_273, -0.859_627_316_482, -0.426_083_705_119],
    [0.491_276_018_305, -0.752_390_164_817, -0.438_657_201_962],
    [-0.907_316_445_128, 0.162_508_395_447, -0.387_804_219_563],
];

/// Cotangent umbrella magnitude over `4 A_mixed`; returns `(G, A_mixed)`.
pub fn cotangent_curvature(
    vertices: &[Vec3],
    triangles: &[[usize; 3]],
    incident: &[usize],
    v: usize,
) -> Result<(f64, f64)> {
    let p = vertices[v];
    let mut umbrella = Vec3::zeros();
    let mut area = 0.0;
    for &t in incident {
        let tri = triangles[t];
        let k = tri
            .iter()
            .position(|&x| x == v)
            .expect("incident triangle contains vertex");
        let j = tri[(k + 1) % 3];
        let l = tri[(k + 2) % 3];
        let (pj, pl) = (vertices[j], vertices[l]);
        let e_ij = pj - p;
        let e_il = pl - p;
        let tri_area = 0.5 * e_ij.cross(&e_il).norm();
        if tri_area <= 0.0 || !tri_area.is_finite() {
            return Err(HexError::ZeroAreaTriangle(t));
        }
        // angle at l is opposite edge (v, j); angle at j is opposite edge (v, l)
        let dot_l = (p - pl).dot(&(pj - pl));
        let dot_j = (p - pj).dot(&(pl - pj));
        let cot_l = dot_l / (2.0 * tri_area);
        let cot_j = dot_j / (2.0 * tri_area);
        umbrella += e_ij * cot_l + e_il * cot_j;

        let dot_v = e_ij.dot(&e_il);
        area += if dot_v < 0.0 {
            tri_area / 2.0
        } else if dot_j < 0.0 || dot_l < 0.0 {
            tri_area / 4.0
        } else {
            (e_ij.norm_squared() * cot_l + e_il.norm_squared() * cot_j) / 8.0
        };
    }
    if area <= 0.0 {
        return Err(HexError::VanishingArea(v));
    }
    Ok((umbrella.norm() / (4.0 * area), area))
}

fn angle_weighted_normals(vertices: &[Vec3], triangles: &[[usize; 3]]) -> Vec<Vec3> {
    let mut normals = vec![Vec3::zeros(); vertices.len()];
    for t in triangles {
        let n = (vertices[t[1]] - vertices[t[0]]).cross(&(vertices[t[2]] - vertices[t[0]]));
        let len = n.norm();
        if len == 0.0 {
            continue;
        }
        let n = n / len;
        for k in 0..3 {
            let a = vertices[t[k]];
            let b = vertices[t[(k + 1) % 3]];
            let c = vertices[t[(k + 2) % 3]];
            let angle = (b - a).angle(&(c - a));
            normals[t[k]] += n * angle;
        }
    }
    for n in &mut normals {
        let len = n.norm();
        if len > 0.0 {
            *n /= len;
        }
    }
    normals
}

fn enclosed_volume(vertices: &[Vec3], triangles: &[[usize; 3]]) -> f64 {
    triangles
        .iter()
        .map(|t| geom::triple(&vertices[t[0]], &vertices[t[1]], &vertices[t[2]]) / 6.0)
        .sum()
}

fn compact(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let mut map = vec![usize::MAX; vertices.len()];
    let mut out = Vec::new();
    for t in &triangles {
        for &v in t {
            if map[v] == usize::MAX {
                map[v] = out.len();
                out.push(vertices[v]);
            }
        }
    }
    let tris = triangles.into_iter().map(|t| t.map(|v| map[v])).collect();
    (out, tris)
}

/// Check that every edge is shared by exactly two consistently oriented triangles.
pub fn validate_closed_manifold(num_vertices: usize, triangles: &[[usize; 3]]) -> Result<()> {
    let mut seen: HashMap<[usize; 3], usize> = HashMap::new();
    for (ti, t) in triangles.iter().enumerate() {
        if t.iter().any(|&v| v >= num_vertices) || t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
            return Err(HexError::DegenerateTriangle(ti));
        }
        let mut key = *t;
        key.sort_unstable();
        if seen.insert(key, ti).is_some() {
            return Err(HexError::DuplicateTriangle(ti));
        }
    }
    let mut edges: HashMap<(usize, usize), Vec<(usize, bool)>> = HashMap::new();
    for (ti, t) in triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            edges
                .entry((a.min(b), a.max(b)))
                .or_default()
                .push((ti, a < b));
        }
    }
    let mut keys: Vec<_> = edges.keys().copied().collect();
    keys.sort_unstable();
    for key in keys {
        let uses = &edges[&key];
        match uses.len() {
            1 => return Err(HexError::OpenBoundaryEdge(key.0, key.1, uses[0].0)),
            2 => {
                if uses[0].1 == uses[1].1 {
                    return Err(HexError::InconsistentOrientation(key.0, key.1, uses[1].0));
                }
            }
            n => return Err(HexError::NonManifoldEdge(key.0, key.1, n)),
        }
    }
    Ok(())
}
