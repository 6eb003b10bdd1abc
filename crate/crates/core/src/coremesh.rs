//! Core mesh: drop hexes outside the surface, then clear the buffer zone until every core
//! boundary vertex admits a valid buffer hex fan.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use log::debug;

use crate::dualmesh::{face_key, HexMesh};
use crate::error::{HexError, Result};
use crate::geom::Vec3;
use crate::quality::metrics::{HEX_EDGES, HEX_FACES};
use crate::surface::TriangleSurface;

/// Fan normals closer than this angle (degrees) count as one direction.
pub const CLASS_ANGLE_DEG: f64 = 20.0;
/// Smallest admissible `min_i n_i . e` for the best buffer direction `e`.
pub const MIN_BUFFER_MARGIN: f64 = 0.1;

/// The exterior rule on the 8 corner signed distances (positive inside).
pub fn exterior_rule(f: &[f64; 8]) -> bool {
    let fmin = f.iter().copied().fold(f64::INFINITY, f64::min);
    let fmax = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    fmin + 0.1 * fmax < 0.0
}

/// Remove hexes flagged by [`exterior_rule`]. Returns the core and the old-to-new vertex map.
pub fn remove_exterior(
    mesh: &HexMesh,
    surface: &TriangleSurface,
) -> Result<(HexMesh, Vec<Option<usize>>)> {
    let f: Vec<f64> = mesh
        .vertices
        .iter()
        .map(|v| surface.signed_distance(v))
        .collect();
    let remove: Vec<bool> = mesh
        .hexes
        .iter()
        .map(|h| exterior_rule(&h.map(|v| f[v])))
        .collect();
    let mut core = mesh.clone();
    let map = core.remove_hexes(&remove);
    debug!(
        "exterior removal: {} of {} hexes removed",
        remove.iter().filter(|&&r| r).count(),
        mesh.num_hexes()
    );
    if core.hexes.is_empty() {
        return Err(HexError::EmptyCore);
    }
    Ok((core, map))
}

/// Merge cyclically adjacent normals of a fan into unit direction classes, in fan order.
pub fn direction_classes(normals: &[Vec3]) -> Vec<Vec3> {
    let cos_tol = CLASS_ANGLE_DEG.to_radians().cos();
    let mut sums: Vec<Vec3> = Vec::new();
    for n in normals {
        match sums.last_mut() {
            Some(s) if s.normalize().dot(n) >= cos_tol => *s += n,
            _ => sums.push(*n),
        }
    }
    if sums.len() > 1 && sums[0].normalize().dot(&sums[sums.len() - 1].normalize()) >= cos_tol {
        let last = sums.pop().unwrap();
        sums[0] += last;
    }
    sums.into_iter().map(|s| s.normalize()).collect()
}

/// The unit direction maximizing `min_i n_i . e`, with that minimum. The optimum is
/// equiangular to one, two or three of the classes, so those candidates are enough.
pub fn best_buffer_direction(classes: &[Vec3]) -> Option<(Vec3, f64)> {
    let score = |e: &Vec3| {
        classes
            .iter()
            .map(|c| c.dot(e))
            .fold(f64::INFINITY, f64::min)
    };
    let mut best: Option<(Vec3, f64)> = None;
    let mut consider = |e: Vec3| {
        let n = e.norm();
        if n > 1e-12 {
            let e = e / n;
            let m = score(&e);
            if best.is_none_or(|(_, b)| m > b) {
                best = Some((e, m));
            }
        }
    };
    let k = classes.len();
    for i in 0..k {
        consider(classes[i]);
        for j in i + 1..k {
            consider(classes[i] + classes[j]);
            for l in j + 1..k {
                let m = nalgebra::Matrix3::from_rows(&[
                    classes[i].transpose(),
                    classes[j].transpose(),
                    classes[l].transpose(),
                ]);
                if let Some(inv) = m.try_inverse() {
                    consider(inv * Vec3::repeat(1.0));
                }
            }
        }
    }
    best
}

/// Largest `min_i n_i . e` over unit directions `e`.
pub fn buffer_margin(classes: &[Vec3]) -> f64 {
    best_buffer_direction(classes).map_or(f64::NEG_INFINITY, |(_, m)| m)
}

/// Classes sorted counterclockwise by azimuth about `e`.
pub fn sort_about(classes: &[Vec3], e: &Vec3) -> Vec<Vec3> {
    let u = e
        .cross(&if e.x.abs() < 0.9 {
            Vec3::x()
        } else {
            Vec3::y()
        })
        .normalize();
    let w = e.cross(&u);
    let mut c = classes.to_vec();
    c.sort_by(|a, b| {
        a.dot(&w)
            .atan2(a.dot(&u))
            .total_cmp(&b.dot(&w).atan2(b.dot(&u)))
    });
    c
}

/// The buffer-clearance restriction on the fan normals of one boundary vertex. Some buffer
/// direction must reach [`MIN_BUFFER_MARGIN`] against every direction class, and with the
/// classes ordered about that direction every triple must have a positive triple product.
pub fn restriction_holds(normals: &[Vec3]) -> bool {
    if normals.iter().any(|n| !n.iter().all(|c| c.is_finite())) {
        return false;
    }
    let c = direction_classes(normals);
    if c.len() < 2 {
        return true;
    }
    let Some((e, margin)) = best_buffer_direction(&c) else {
        return false;
    };
    if margin < MIN_BUFFER_MARGIN {
        return false;
    }
    let c = sort_about(&c, &e);
    let k = c.len();
    for i in 0..k {
        for j in i + 1..k {
            for l in j + 1..k {
                if c[i].cross(&c[j]).dot(&c[l]) <= 0.0 {
                    return false;
                }
            }
        }
    }
    true
}

/// Boundary structure of the live part of a hex mesh.
#[derive(Debug, Clone, Default)]
pub struct CoreClearanceState {
    pub boundary_vertices: BTreeSet<usize>,
    /// Fan normals per boundary vertex in fan order; `None` when the boundary quads around
    /// the vertex do not form one cycle.
    pub fan_normals: BTreeMap<usize, Option<Vec<Vec3>>>,
    /// Boundary faces per hex.
    pub boundary_face_count: Vec<usize>,
    /// Boundary edges not shared by exactly two boundary quads.
    pub nonmanifold_edges: Vec<(usize, usize)>,
}

impl CoreClearanceState {
    pub fn scan(mesh: &HexMesh, alive: &[bool]) -> Self {
        let mut faces: HashMap<[usize; 4], Vec<(usize, usize)>> = HashMap::new();
        for (h, hex) in mesh.hexes.iter().enumerate() {
            if !alive[h] {
                continue;
            }
            for (f, idx) in HEX_FACES.iter().enumerate() {
                faces
                    .entry(face_key(&idx.map(|i| hex[i])))
                    .or_default()
                    .push((h, f));
            }
        }
        let mut s = CoreClearanceState {
            boundary_face_count: vec![0; mesh.hexes.len()],
            ..Default::default()
        };
        // (vertex) -> list of (next, prev) corners of its boundary quads
        let mut around: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
        let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
        for owners in faces.values() {
            if owners.len() != 1 {
                continue;
            }
            let (h, f) = owners[0];
            s.boundary_face_count[h] += 1;
            let q = mesh.face(h, f);
            for i in 0..4 {
                around
                    .entry(q[i])
                    .or_default()
                    .push((q[(i + 1) % 4], q[(i + 3) % 4]));
                let (a, b) = (q[i], q[(i + 1) % 4]);
                *edges.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        s.nonmanifold_edges = edges
            .into_iter()
            .filter(|&(_, c)| c != 2)
            .map(|(e, _)| e)
            .collect();
        s.nonmanifold_edges.sort_unstable();
        for (v, fan) in around {
            s.boundary_vertices.insert(v);
            s.fan_normals.insert(
                v,
                order_fan(&fan).map(|order| {
                    let x = mesh.vertices[v];
                    order
                        .iter()
                        .map(|&i| {
                            let (next, prev) = fan[i];
                            (mesh.vertices[next] - x)
                                .cross(&(mesh.vertices[prev] - x))
                                .normalize()
                        })
                        .collect()
                }),
            );
        }
        s
    }

    pub fn violating_vertices(&self) -> Vec<usize> {
        let mut bad: BTreeSet<usize> = self
            .fan_normals
            .iter()
            .filter(|(_, n)| n.as_ref().is_none_or(|n| !restriction_holds(n)))
            .map(|(&v, _)| v)
            .collect();
        for &(a, b) in &self.nonmanifold_edges {
            bad.insert(a);
            bad.insert(b);
        }
        bad.into_iter().collect()
    }
}

/// Order the quads of a vertex fan so each one's previous corner is the next one's next
/// corner. `None` unless the quads form exactly one cycle.
fn order_fan(fan: &[(usize, usize)]) -> Option<Vec<usize>> {
    let mut by_next: HashMap<usize, usize> = HashMap::new();
    for (i, &(next, _)) in fan.iter().enumerate() {
        if by_next.insert(next, i).is_some() {
            return None;
        }
    }
    let mut order = vec![0];
    let mut cur = 0;
    loop {
        let &nxt = by_next.get(&fan[cur].1)?;
        if nxt == 0 {
            break;
        }
        if order.len() == fan.len() {
            return None;
        }
        order.push(nxt);
        cur = nxt;
    }
    (order.len() == fan.len()).then_some(order)
}

/// Result of the restriction check on a finished core.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RestrictionReport {
    pub boundary_vertices: usize,
    pub violations: Vec<usize>,
    pub nonmanifold_edges: usize,
}

impl RestrictionReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty() && self.nonmanifold_edges == 0
    }
}

pub fn check_restriction(mesh: &HexMesh) -> RestrictionReport {
    let s = CoreClearanceState::scan(mesh, &vec![true; mesh.hexes.len()]);
    RestrictionReport {
        boundary_vertices: s.boundary_vertices.len(),
        violations: s.violating_vertices(),
        nonmanifold_edges: s.nonmanifold_edges.len(),
    }
}

#[derive(Debug, Clone)]
pub struct Clearance {
    pub mesh: HexMesh,
    pub removed: usize,
    /// Removed hexes lying deeper than half their longest edge inside the surface.
    pub deep_removed: usize,
    pub iterations: usize,
}

/// Remove hexes around boundary vertices violating the restriction until none is left.
/// Each pass removes, for every violating vertex, the attached hex with the most boundary
/// faces (lowest index on ties). Hexes lying deeper than half their longest edge inside the
/// surface are only taken when a violating vertex has nothing else attached.
pub fn clear_buffer(mesh: &HexMesh, surface: &TriangleSurface) -> Result<Clearance> {
    let n = mesh.hexes.len();
    let f: Vec<f64> = mesh
        .vertices
        .iter()
        .map(|v| surface.signed_distance(v))
        .collect();
    let protected: Vec<bool> = mesh
        .hexes
        .iter()
        .map(|h| {
            let smax = HEX_EDGES
                .iter()
                .map(|e| (mesh.vertices[h[e[0]]] - mesh.vertices[h[e[1]]]).norm())
                .fold(0.0, f64::max);
            h.iter().all(|&v| f[v] > 0.5 * smax)
        })
        .collect();
    let mut vertex_hexes: Vec<Vec<usize>> = vec![Vec::new(); mesh.vertices.len()];
    for (h, hex) in mesh.hexes.iter().enumerate() {
        for &v in hex {
            vertex_hexes[v].push(h);
        }
    }
    let mut alive = vec![true; n];
    let mut alive_count = n;
    let mut removed = 0;
    let mut iterations = 0;
    let mut deep_removed = 0;
    loop {
        let state = CoreClearanceState::scan(mesh, &alive);
        let bad = state.violating_vertices();
        if bad.is_empty() {
            break;
        }
        iterations += 1;
        if removed > 10 * n {
            return Err(HexError::Topology(format!(
                "{} boundary vertices still violate the restriction after the iteration cap",
                bad.len()
            )));
        }
        let mut batch: BTreeSet<usize> = BTreeSet::new();
        for v in &bad {
            let pick = |shallow: bool| {
                vertex_hexes[*v]
                    .iter()
                    .copied()
                    .filter(|&h| alive[h] && (!shallow || !protected[h]))
                    .max_by_key(|&h| (state.boundary_face_count[h], std::cmp::Reverse(h)))
            };
            if let Some(h) = pick(true).or_else(|| pick(false)) {
                batch.insert(h);
            }
        }
        if batch.is_empty() {
            return Err(HexError::Topology(format!(
                "{} boundary vertices violate the restriction with no hex attached",
                bad.len()
            )));
        }
        for &h in &batch {
            alive[h] = false;
            deep_removed += usize::from(protected[h]);
        }
        alive_count -= batch.len();
        removed += batch.len();
        debug!(
            "clearance pass {iterations}: {} violating vertices, {} hexes removed",
            bad.len(),
            batch.len()
        );
        if alive_count == 0 {
            return Err(HexError::EmptyCore);
        }
    }
    if removed == 0 {
        return Ok(Clearance {
            mesh: mesh.clone(),
            removed,
            deep_removed,
            iterations,
        });
    }
    debug!("buffer clearance removed {removed} hexes ({deep_removed} deep) in {iterations} passes");
    let mut core = mesh.clone();
    core.remove_hexes(&alive.iter().map(|a| !a).collect::<Vec<_>>());
    Ok(Clearance {
        mesh: core,
        removed,
        deep_removed,
        iterations,
    })
}
