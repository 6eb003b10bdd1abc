//! Dual extraction with sheet-refined transition blocks.
//!
//! Block-local coordinates are measured in eighths of a leaf edge, so a block spans
//! `[0, 16]^3` and its leaves `[0, 8]` or `[8, 16]` per axis. For each axis `a` a region
//! `R_a` lives in the middle band `4 < u_a < 12`, inside a sheet of depth `DEPTH[a]` along
//! every fine block face whose normal is not `a`, plus the corner prism of every fine
//! block edge parallel to `a`. Leaves are cut into the connected pieces of equal region
//! membership; each piece is a dual vertex and each primal point shared by 8 distinct
//! pieces is a hex.

use std::collections::HashMap;

use crate::error::{HexError, Result};
use crate::geom::Vec3;
use crate::octree::Octree;

use super::transitions::{node_state, NodeState, TransitionKind, TransitionRecord};
use super::{HexMesh, Provenance};

const DEPTH: [i64; 3] = [1, 2, 3];
const BREAKS: [[i64; 6]; 2] = [[0, 1, 2, 3, 4, 8], [8, 12, 13, 14, 15, 16]];
const NV: usize = 5;

/// Placement of template vertices. A leaf axis is cut into five intervals (three sheets,
/// the band, the rest), listed from the block face inward. A piece sits at the weighted
/// mean of the representative points of the voxels it covers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualParams {
    /// Representative coordinate of each interval, in leaf edges from the block face.
    pub reps: [f64; 5],
    /// Weight of each interval.
    pub weights: [f64; 5],
}

impl DualParams {
    /// Placement at the interval midpoints, weighted by interval length.
    pub fn midpoints() -> Self {
        Self {
            reps: [1.0, 3.0, 5.0, 7.0, 12.0].map(|x| x / 16.0),
            weights: [1.0, 1.0, 1.0, 1.0, 4.0],
        }
    }
}

/// Shipped placement table (version 1). The worst template hex of an axis-aligned,
/// undeformed tree has scaled Jacobian 0.258; it is a face template hex.
impl Default for DualParams {
    fn default() -> Self {
        Self {
            reps: [0.04096, 0.34159, 0.38706, 0.43584, 0.73675],
            weights: [0.86253, 0.59340, 0.93256, 2.13919, 3.42865],
        }
    }
}

/// Fine faces (index `2 axis + high`) and fine edges (index `4 a + e1 + 2 e2`, the edge
/// parallel to `a` at the low/high side `e1`, `e2` along `(a+1)%3`, `(a+2)%3`).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct BlockConfig {
    faces: [bool; 6],
    edges: [bool; 12],
}

impl BlockConfig {
    fn in_region(&self, a: usize, u: [f64; 3]) -> bool {
        if !(u[a] > 4.0 && u[a] < 12.0) {
            return false;
        }
        let d = DEPTH[a] as f64;
        let dist = |axis: usize, high: bool| if high { 16.0 - u[axis] } else { u[axis] };
        for n in (0..3).filter(|&n| n != a) {
            for high in [false, true] {
                if self.faces[2 * n + high as usize] && dist(n, high) < d {
                    return true;
                }
            }
        }
        let (n1, n2) = ((a + 1) % 3, (a + 2) % 3);
        for e1 in [false, true] {
            for e2 in [false, true] {
                if self.edges[4 * a + e1 as usize + 2 * e2 as usize]
                    && dist(n1, e1) < d
                    && dist(n2, e2) < d
                {
                    return true;
                }
            }
        }
        false
    }

    fn membership(&self, u: [f64; 3]) -> u8 {
        (0..3)
            .filter(|&a| self.in_region(a, u))
            .fold(0, |m, a| m | (1 << a))
    }
}

/// Pieces of one leaf: voxel labels, the label of the untouched main piece and the
/// centroid of every piece in block coordinates (leaf edge units).
#[derive(Debug, Clone)]
struct LeafCells {
    labels: [u8; NV * NV * NV],
    main: u8,
    centroids: Vec<Vec3>,
}

fn vox(i: usize, j: usize, k: usize) -> usize {
    (k * NV + j) * NV + i
}

/// Representative coordinate (block leaf edges) and weight of voxel interval `c` of a leaf
/// on side `b` of its block.
fn interval(b: usize, c: usize, g: &DualParams) -> (f64, f64) {
    if b == 0 {
        (g.reps[c], g.weights[c])
    } else {
        (2.0 - g.reps[NV - 1 - c], g.weights[NV - 1 - c])
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn label_leaf(cfg: &BlockConfig, b: [usize; 3], g: &DualParams) -> LeafCells {
    let br = b.map(|x| BREAKS[x]);
    let mut member = [0u8; NV * NV * NV];
    for k in 0..NV {
        for j in 0..NV {
            for i in 0..NV {
                let c = [i, j, k];
                let u = [0, 1, 2].map(|a| 0.5 * (br[a][c[a]] + br[a][c[a] + 1]) as f64);
                member[vox(i, j, k)] = cfg.membership(u);
            }
        }
    }
    let mut parent: Vec<usize> = (0..NV * NV * NV).collect();
    for k in 0..NV {
        for j in 0..NV {
            for i in 0..NV {
                let v = vox(i, j, k);
                let nbrs = [
                    (i + 1 < NV).then(|| vox(i + 1, j, k)),
                    (j + 1 < NV).then(|| vox(i, j + 1, k)),
                    (k + 1 < NV).then(|| vox(i, j, k + 1)),
                ];
                for w in nbrs.into_iter().flatten() {
                    if member[v] == member[w] {
                        let (rv, rw) = (find(&mut parent, v), find(&mut parent, w));
                        if rv != rw {
                            parent[rv.max(rw)] = rv.min(rw);
                        }
                    }
                }
            }
        }
    }
    let mut labels = [0u8; NV * NV * NV];
    let mut root_label: HashMap<usize, u8> = HashMap::new();
    let mut sums: Vec<(Vec3, f64)> = Vec::new();
    for k in 0..NV {
        for j in 0..NV {
            for i in 0..NV {
                let v = vox(i, j, k);
                let r = find(&mut parent, v);
                let next = root_label.len() as u8;
                let l = *root_label.entry(r).or_insert(next);
                if l as usize == sums.len() {
                    sums.push((Vec3::zeros(), 0.0));
                }
                labels[v] = l;
                let iv = [
                    interval(b[0], i, g),
                    interval(b[1], j, g),
                    interval(b[2], k, g),
                ];
                let w = iv[0].1 * iv[1].1 * iv[2].1;
                sums[l as usize].0 += Vec3::new(iv[0].0, iv[1].0, iv[2].0) * w;
                sums[l as usize].1 += w;
            }
        }
    }
    let corner = vox(b[0] * (NV - 1), b[1] * (NV - 1), b[2] * (NV - 1));
    LeafCells {
        labels,
        main: labels[corner],
        centroids: sums.into_iter().map(|(s, v)| s / v).collect(),
    }
}

fn lookup_err(r: &TransitionRecord, msg: &str) -> HexError {
    HexError::TemplateLookup(
        r.anchor,
        format!("{:?} record at level {}: {msg}", r.kind, r.level),
    )
}

fn block_configs(
    tree: &Octree,
    transitions: &[TransitionRecord],
) -> Result<HashMap<usize, BlockConfig>> {
    let mut blocks: HashMap<usize, BlockConfig> = HashMap::new();
    let coarse = |r: &TransitionRecord, lo: [i64; 3]| -> Result<usize> {
        let m = r.level - 1;
        let bs = Octree::lattice_size(m);
        match node_state(tree, m, lo.map(|x| x.div_euclid(bs))) {
            (NodeState::Coarse, Some(id)) => Ok(id),
            _ => Err(lookup_err(r, "coarse side is not a block of leaves")),
        }
    };
    for r in transitions
        .iter()
        .filter(|r| r.kind == TransitionKind::Face)
    {
        let bs = Octree::lattice_size(r.level - 1);
        let mut lo = r.anchor;
        if r.sign > 0 {
            lo[r.axis] -= bs;
        }
        let id = coarse(r, lo)?;
        blocks.entry(id).or_default().faces[2 * r.axis + (r.sign > 0) as usize] = true;
    }
    for r in transitions
        .iter()
        .filter(|r| r.kind != TransitionKind::Face)
    {
        let bs = Octree::lattice_size(r.level - 1);
        let a = r.axis;
        let (n1, n2) = ((a + 1) % 3, (a + 2) % 3);
        let fine = |q1: usize, q2: usize| r.fine_mask & (1 << (q1 + 2 * q2)) != 0;
        for q1 in 0..2 {
            for q2 in 0..2 {
                if fine(q1, q2) {
                    continue;
                }
                let mut lo = r.anchor;
                lo[n1] += (q1 as i64 - 1) * bs;
                lo[n2] += (q2 as i64 - 1) * bs;
                let id = coarse(r, lo)?;
                let cfg = blocks.entry(id).or_default();
                let (e1, e2) = (1 - q1, 1 - q2);
                if fine(1 - q1, q2) && !cfg.faces[2 * n1 + e1]
                    || fine(q1, 1 - q2) && !cfg.faces[2 * n2 + e2]
                {
                    return Err(lookup_err(
                        r,
                        "edge transition without its face transitions",
                    ));
                }
                if fine(1 - q1, 1 - q2) {
                    cfg.edges[4 * a + e1 + 2 * e2] = true;
                }
            }
        }
    }
    Ok(blocks)
}

/// Extraction output plus the bookkeeping the checks need.
#[derive(Debug, Clone)]
pub struct DualExtraction {
    pub mesh: HexMesh,
    /// Leaf owning each dual vertex.
    pub vertex_leaf: Vec<usize>,
    /// Primal lattice point of each hex.
    pub hex_points: Vec<[i64; 3]>,
    /// Transition record each template hex is attributed to.
    pub hex_record: Vec<Option<usize>>,
}

pub fn extract_dual(tree: &Octree, transitions: &[TransitionRecord]) -> Result<HexMesh> {
    Ok(extract_dual_detailed(tree, transitions, &DualParams::default())?.mesh)
}

pub fn extract_dual_detailed(
    tree: &Octree,
    transitions: &[TransitionRecord],
    params: &DualParams,
) -> Result<DualExtraction> {
    let blocks = block_configs(tree, transitions)?;
    let mut cells: HashMap<usize, LeafCells> = HashMap::new();
    let mut block_ids: Vec<&usize> = blocks.keys().collect();
    block_ids.sort();
    for &bid in block_ids {
        let cfg = &blocks[&bid];
        for (k, &leaf) in tree.octant(bid).children.unwrap().iter().enumerate() {
            let lc = label_leaf(cfg, [k & 1, (k >> 1) & 1, (k >> 2) & 1], params);
            if lc.centroids.len() > 1 {
                cells.insert(leaf, lc);
            }
        }
    }

    let ext = Octree::lattice_extent();
    let mut points: Vec<[i64; 3]> = Vec::new();
    for leaf in tree.leaves() {
        let (lo, s) = tree.lattice_box(leaf);
        for c in 0..8 {
            points.push([0, 1, 2].map(|i| lo[i] + ((c >> i) & 1) as i64 * s));
        }
        if cells.contains_key(&leaf) {
            let b = tree.octant(leaf).coord.map(|c| (c & 1) as usize);
            let unit = s / 8;
            let block_lo = [0, 1, 2].map(|i| lo[i] - b[i] as i64 * s);
            for &ti in &BREAKS[b[0]] {
                for &tj in &BREAKS[b[1]] {
                    for &tk in &BREAKS[b[2]] {
                        points.push([
                            block_lo[0] + ti * unit,
                            block_lo[1] + tj * unit,
                            block_lo[2] + tk * unit,
                        ]);
                    }
                }
            }
        }
    }
    points.sort_unstable_by_key(|p| (p[2], p[1], p[0]));
    points.dedup();

    let mut face_claims: HashMap<(u8, usize, [i64; 3]), usize> = HashMap::new();
    let mut edge_claims: HashMap<(u8, usize, [i64; 3]), usize> = HashMap::new();
    for (i, r) in transitions.iter().enumerate() {
        let m = if r.kind == TransitionKind::Face {
            &mut face_claims
        } else {
            &mut edge_claims
        };
        m.insert((r.level, r.axis, r.anchor), i);
    }
    let mut claim_levels: Vec<u8> = transitions.iter().map(|r| r.level).collect();
    claim_levels.sort_unstable();
    claim_levels.dedup();

    let mut mesh = HexMesh::default();
    let mut vertex_leaf = Vec::new();
    let mut hex_points = Vec::new();
    let mut hex_record = Vec::new();
    let mut vid: HashMap<(usize, u8), usize> = HashMap::new();
    const OCTANTS: [[i64; 3]; 8] = [
        [-1, -1, -1],
        [1, -1, -1],
        [1, 1, -1],
        [-1, 1, -1],
        [-1, -1, 1],
        [1, -1, 1],
        [1, 1, 1],
        [-1, 1, 1],
    ];
    'points: for p in points {
        if p.iter().any(|&c| c <= 0 || c >= ext) {
            continue;
        }
        let mut keys = [(0usize, 0u8); 8];
        let mut main = [true; 8];
        for (n, o) in OCTANTS.iter().enumerate() {
            let q = [0, 1, 2].map(|i| if o[i] < 0 { p[i] - 1 } else { p[i] });
            let leaf = tree.locate(q).expect("interior probe");
            keys[n] = match cells.get(&leaf) {
                None => (leaf, 0),
                Some(lc) => {
                    let (lo, s) = tree.lattice_box(leaf);
                    let b = tree.octant(leaf).coord.map(|c| (c & 1) as usize);
                    let unit = s / 8;
                    let mut idx = [0usize; 3];
                    for i in 0..3 {
                        let block_lo = lo[i] - b[i] as i64 * s;
                        let q2 = 2 * (p[i] - block_lo) + o[i];
                        let br = &BREAKS[b[i]];
                        idx[i] = (0..NV)
                            .find(|&j| q2 > 2 * br[j] * unit && q2 < 2 * br[j + 1] * unit)
                            .expect("probe inside leaf");
                    }
                    let l = lc.labels[vox(idx[0], idx[1], idx[2])];
                    main[n] = l == lc.main;
                    (leaf, l)
                }
            };
            for m in 0..n {
                if keys[m] == keys[n] {
                    continue 'points;
                }
            }
        }
        let mut hex = [0usize; 8];
        for n in 0..8 {
            let key = keys[n];
            hex[n] = *vid.entry(key).or_insert_with(|| {
                let leaf = key.0;
                let pos = match cells.get(&leaf) {
                    Some(lc) if key.1 != lc.main => {
                        let o = tree.octant(leaf);
                        let s = tree.edge(o.level);
                        let block_origin = o.origin
                            - Vec3::new(
                                (o.coord[0] & 1) as f64,
                                (o.coord[1] & 1) as f64,
                                (o.coord[2] & 1) as f64,
                            ) * s;
                        block_origin + lc.centroids[key.1 as usize] * s
                    }
                    _ => tree.cell_center(leaf),
                };
                mesh.vertices.push(pos);
                vertex_leaf.push(leaf);
                mesh.vertices.len() - 1
            });
        }
        let level0 = tree.octant(keys[0].0).level;
        let same_level = keys.iter().all(|k| tree.octant(k.0).level == level0);
        let (prov, rec) = if main.iter().all(|&m| m) && same_level {
            (Provenance::GridDual, None)
        } else {
            claim(&p, &claim_levels, &face_claims, &edge_claims)
        };
        hex_record.push(rec);
        mesh.hexes.push(hex);
        mesh.provenance.push(prov);
        hex_points.push(p);
    }
    Ok(DualExtraction {
        mesh,
        vertex_leaf,
        hex_points,
        hex_record,
    })
}

/// Attribute a template hex to the edge or face transition whose neighborhood holds its
/// primal point; anything else is a corner fill.
fn claim(
    p: &[i64; 3],
    levels: &[u8],
    faces: &HashMap<(u8, usize, [i64; 3]), usize>,
    edges: &HashMap<(u8, usize, [i64; 3]), usize>,
) -> (Provenance, Option<usize>) {
    for &k in levels {
        let s = Octree::lattice_size(k);
        let bs = 2 * s;
        let margin = 3 * s / 8;
        let snap = |x: i64| (x + s).div_euclid(bs) * bs;
        let floor = |x: i64| x.div_euclid(bs) * bs;
        let inside = |x: i64| {
            let r = x - floor(x);
            r > margin && r < bs - margin
        };
        for a in 0..3 {
            let (n1, n2) = ((a + 1) % 3, (a + 2) % 3);
            let (c1, c2) = (snap(p[n1]), snap(p[n2]));
            if (p[n1] - c1).abs() <= margin && (p[n2] - c2).abs() <= margin && inside(p[a]) {
                let mut anchor = [0; 3];
                anchor[a] = floor(p[a]);
                anchor[n1] = c1;
                anchor[n2] = c2;
                if let Some(&i) = edges.get(&(k, a, anchor)) {
                    return (Provenance::TemplateEdge, Some(i));
                }
            }
        }
        for n in 0..3 {
            let c = snap(p[n]);
            let (t1, t2) = ((n + 1) % 3, (n + 2) % 3);
            if (p[n] - c).abs() <= margin && inside(p[t1]) && inside(p[t2]) {
                let mut anchor = [0; 3];
                anchor[n] = c;
                anchor[t1] = floor(p[t1]);
                anchor[t2] = floor(p[t2]);
                if let Some(&i) = faces.get(&(k, n, anchor)) {
                    return (Provenance::TemplateFace, Some(i));
                }
            }
        }
    }
    (Provenance::CornerFill, None)
}
