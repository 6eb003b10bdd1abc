//! Feature-adaptive octree over the root cube with strong (2:1 plus pairing) balancing.
//!
//! Octants carry integer lattice coordinates: an octant at level `l` with coordinate `c`
//! spans `[c, c + 1) * 2^(LATTICE_BITS - l)` in lattice units, one lattice unit being
//! `root_edge / 2^LATTICE_BITS`.

use std::collections::{BTreeSet, HashMap};

use log::debug;

use crate::error::{HexError, Result};
use crate::geom::{Aabb, Vec3};
use crate::surface::TriangleSurface;

/// Depth of the integer lattice. Leaves may go to `MAX_LEVEL`; the remaining bits are
/// headroom for the sub-cell probes of the dual extraction.
pub const LATTICE_BITS: u32 = 20;
pub const MAX_LEVEL: u8 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellKind {
    Interior,
    Boundary,
    Exterior,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Octant {
    pub level: u8,
    /// Integer coordinate of the octant at its own level.
    pub coord: [i64; 3],
    /// Min corner in domain units.
    pub origin: Vec3,
    pub children: Option<[usize; 8]>,
    pub parent: Option<usize>,
    pub kind: CellKind,
}

impl Octant {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Adjacency {
    Face,
    Edge,
    Vertex,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementConfig {
    pub curvature_thresholds: Vec<f64>,
    pub thickness_thresholds: Vec<f64>,
    pub base_level: u8,
    pub max_level: u8,
}

impl Default for RefinementConfig {
    fn default() -> Self {
        Self::new(5, 9)
    }
}

impl RefinementConfig {
    /// Thresholds for an arbitrary level range. Entry `l` asks for level `base + l` when the
    /// radius of curvature or the thickness drops below the edge length of that level
    /// (with root edge `2^(base+1)`); for `5..=9` this reproduces the default tables.
    pub fn new(base_level: u8, max_level: u8) -> Self {
        let n = max_level.saturating_sub(base_level) as i32 + 1;
        let span = max_level as i32 - base_level as i32;
        Self {
            curvature_thresholds: (0..n).map(|l| 2f64.powi(l - 1)).collect(),
            thickness_thresholds: (0..n).map(|l| 2f64.powi(span - l)).collect(),
            base_level,
            max_level,
        }
    }

    /// Root edge that makes the threshold tables scale-consistent.
    pub fn root_edge(&self) -> f64 {
        2f64.powi(self.base_level as i32 + 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.base_level > self.max_level {
            return Err(HexError::InvalidRefinement(format!(
                "base level {} above max level {}",
                self.base_level, self.max_level
            )));
        }
        if self.max_level > MAX_LEVEL {
            return Err(HexError::InvalidRefinement(format!(
                "max level {} exceeds {MAX_LEVEL}",
                self.max_level
            )));
        }
        let n = (self.max_level - self.base_level) as usize + 1;
        if self.curvature_thresholds.len() != n || self.thickness_thresholds.len() != n {
            return Err(HexError::InvalidRefinement(format!(
                "expected {n} curvature and thickness thresholds, got {} and {}",
                self.curvature_thresholds.len(),
                self.thickness_thresholds.len()
            )));
        }
        Ok(())
    }

    /// Level demanded by a cell whose vertices have max curvature `g` and min thickness `t`.
    pub fn demanded_level(&self, g: f64, t: f64, root_edge: f64) -> u8 {
        let h_fine = root_edge / 2f64.powi(self.max_level as i32);
        let mut level = self.base_level;
        for l in 0..self.curvature_thresholds.len() {
            if g > self.curvature_thresholds[l] || t < self.thickness_thresholds[l] * h_fine {
                level = self.base_level + l as u8;
            }
        }
        level
    }
}

#[derive(Debug, Clone)]
pub struct Octree {
    octants: Vec<Octant>,
    root: usize,
    root_edge: f64,
    /// Leaf origin in lattice units -> leaf id.
    leaf_index: HashMap<[i64; 3], usize>,
}

/// The 26 neighbor offsets, ordered z-major then y then x.
pub fn neighbor_offsets() -> impl Iterator<Item = [i64; 3]> {
    (-1..=1)
        .flat_map(|z| (-1..=1).flat_map(move |y| (-1..=1).map(move |x| [x, y, z])))
        .filter(|d| *d != [0, 0, 0])
}

impl Octree {
    /// Tree with a single leaf root.
    pub fn new(root_edge: f64) -> Self {
        let root = Octant {
            level: 0,
            coord: [0; 3],
            origin: Vec3::zeros(),
            children: None,
            parent: None,
            kind: CellKind::Interior,
        };
        let mut leaf_index = HashMap::new();
        leaf_index.insert([0; 3], 0);
        Self {
            octants: vec![root],
            root: 0,
            root_edge,
            leaf_index,
        }
    }

    /// Every leaf at `level`.
    pub fn uniform(root_edge: f64, level: u8) -> Self {
        let mut t = Self::new(root_edge);
        for _ in 0..level {
            for leaf in t.leaves() {
                t.subdivide(leaf).unwrap();
            }
        }
        t
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn root_edge(&self) -> f64 {
        self.root_edge
    }

    pub fn octant(&self, id: usize) -> &Octant {
        &self.octants[id]
    }

    pub fn octants(&self) -> &[Octant] {
        &self.octants
    }

    pub fn len(&self) -> usize {
        self.octants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.octants.is_empty()
    }

    pub fn is_leaf(&self, id: usize) -> bool {
        self.octants[id].is_leaf()
    }

    pub fn set_kind(&mut self, id: usize, kind: CellKind) {
        self.octants[id].kind = kind;
    }

    /// Leaf ids in pool order (deterministic for a given construction sequence).
    pub fn leaves(&self) -> Vec<usize> {
        (0..self.octants.len())
            .filter(|&i| self.octants[i].is_leaf())
            .collect()
    }

    pub fn num_leaves(&self) -> usize {
        self.leaf_index.len()
    }

    pub fn max_leaf_level(&self) -> u8 {
        self.leaf_index
            .values()
            .map(|&i| self.octants[i].level)
            .max()
            .unwrap_or(0)
    }

    pub fn min_leaf_level(&self) -> u8 {
        self.leaf_index
            .values()
            .map(|&i| self.octants[i].level)
            .min()
            .unwrap_or(0)
    }

    pub fn edge(&self, level: u8) -> f64 {
        self.root_edge / 2f64.powi(level as i32)
    }

    /// Cell size in lattice units.
    pub fn lattice_size(level: u8) -> i64 {
        1 << (LATTICE_BITS - level as u32)
    }

    pub fn lattice_extent() -> i64 {
        1 << LATTICE_BITS
    }

    /// Lattice min corner and size of an octant.
    pub fn lattice_box(&self, id: usize) -> ([i64; 3], i64) {
        let o = &self.octants[id];
        let s = Self::lattice_size(o.level);
        (o.coord.map(|c| c * s), s)
    }

    pub fn lattice_to_domain(&self, p: [i64; 3]) -> Vec3 {
        let u = self.root_edge / Self::lattice_extent() as f64;
        Vec3::new(p[0] as f64 * u, p[1] as f64 * u, p[2] as f64 * u)
    }

    pub fn cell_box(&self, id: usize) -> Aabb {
        let o = &self.octants[id];
        Aabb::new(o.origin, o.origin + Vec3::repeat(self.edge(o.level)))
    }

    pub fn cell_center(&self, id: usize) -> Vec3 {
        let o = &self.octants[id];
        o.origin + Vec3::repeat(0.5 * self.edge(o.level))
    }

    /// Split a leaf into 8 children (child index bit 0 = x, bit 1 = y, bit 2 = z).
    /// Children inherit the parent's cell kind.
    pub fn subdivide(&mut self, id: usize) -> Result<[usize; 8]> {
        if !self.octants[id].is_leaf() {
            return Err(HexError::NotALeaf(id));
        }
        let p = self.octants[id].clone();
        if p.level >= MAX_LEVEL {
            return Err(HexError::InvalidRefinement(format!(
                "cannot subdivide below level {MAX_LEVEL}"
            )));
        }
        let (lo, s) = self.lattice_box(id);
        self.leaf_index.remove(&lo);
        let half = self.edge(p.level + 1);
        let mut kids = [0usize; 8];
        for (k, kid) in kids.iter_mut().enumerate() {
            let b = [k & 1, (k >> 1) & 1, (k >> 2) & 1].map(|x| x as i64);
            let coord = [0, 1, 2].map(|i| p.coord[i] * 2 + b[i]);
            *kid = self.octants.len();
            self.octants.push(Octant {
                level: p.level + 1,
                coord,
                origin: p.origin + Vec3::new(b[0] as f64, b[1] as f64, b[2] as f64) * half,
                children: None,
                parent: Some(id),
                kind: p.kind,
            });
            self.leaf_index
                .insert([0, 1, 2].map(|i| lo[i] + b[i] * s / 2), *kid);
        }
        self.octants[id].children = Some(kids);
        Ok(kids)
    }

    /// Leaf whose half-open lattice box contains `p`.
    pub fn locate(&self, p: [i64; 3]) -> Option<usize> {
        let n = Self::lattice_extent();
        if p.iter().any(|&c| c < 0 || c >= n) {
            return None;
        }
        let mut id = self.root;
        while let Some(kids) = self.octants[id].children {
            let shift = LATTICE_BITS - self.octants[id].level as u32 - 1;
            let k =
                ((p[0] >> shift) & 1) | (((p[1] >> shift) & 1) << 1) | (((p[2] >> shift) & 1) << 2);
            id = kids[k as usize];
        }
        Some(id)
    }

    /// Deepest octant at level <= `level` containing the level-`level` cell `coord`.
    pub fn descend(&self, level: u8, coord: [i64; 3]) -> Option<usize> {
        let n = 1i64 << level;
        if coord.iter().any(|&c| c < 0 || c >= n) {
            return None;
        }
        let mut id = self.root;
        while self.octants[id].level < level {
            let Some(kids) = self.octants[id].children else {
                break;
            };
            let shift = (level - self.octants[id].level - 1) as u32;
            let k = ((coord[0] >> shift) & 1)
                | (((coord[1] >> shift) & 1) << 1)
                | (((coord[2] >> shift) & 1) << 2);
            id = kids[k as usize];
        }
        Some(id)
    }

    /// The octant at exactly `level` and `coord`, if the tree reaches that deep there.
    pub fn node_at(&self, level: u8, coord: [i64; 3]) -> Option<usize> {
        self.descend(level, coord)
            .filter(|&id| self.octants[id].level == level)
    }

    /// Leaves sharing a face (`Face`), at least an edge (`Edge`) or at least a vertex
    /// (`Vertex`) with `leaf`, sorted by lattice origin (z, y, x).
    pub fn leaf_neighbors(&self, leaf: usize, adjacency: Adjacency) -> Result<Vec<usize>> {
        if !self.is_leaf(leaf) {
            return Err(HexError::NotALeaf(leaf));
        }
        let o = &self.octants[leaf];
        let need = match adjacency {
            Adjacency::Face => 2,
            Adjacency::Edge => 1,
            Adjacency::Vertex => 0,
        };
        let (lo, s) = self.lattice_box(leaf);
        let mut found = BTreeSet::new();
        for d in neighbor_offsets() {
            let nz = d.iter().filter(|&&x| x != 0).count();
            if 3 - nz < need {
                continue;
            }
            let c = [0, 1, 2].map(|i| o.coord[i] + d[i]);
            let Some(n) = self.descend(o.level, c) else {
                continue;
            };
            let mut stack = vec![n];
            while let Some(id) = stack.pop() {
                match self.octants[id].children {
                    Some(kids) => stack.extend(kids),
                    None => {
                        let (nlo, ns) = self.lattice_box(id);
                        if let Some(dim) = contact_dim(lo, s, nlo, ns) {
                            if dim >= need {
                                found.insert((nlo[2], nlo[1], nlo[0], id));
                            }
                        }
                    }
                }
            }
        }
        Ok(found.into_iter().map(|t| t.3).collect())
    }

    /// First adjacent leaf pair (face, edge or vertex contact) whose levels differ by 2 or more.
    pub fn find_unbalanced_pair(&self) -> Option<(usize, usize)> {
        for leaf in self.leaves() {
            let o = &self.octants[leaf];
            for d in neighbor_offsets() {
                let c = [0, 1, 2].map(|i| o.coord[i] + d[i]);
                if let Some(n) = self.descend(o.level, c) {
                    if self.is_leaf(n) && self.octants[n].level + 2 <= o.level {
                        return Some((leaf, n));
                    }
                }
            }
        }
        None
    }

    /// First internal node whose children mix leaves and internal nodes.
    pub fn find_mixed_block(&self) -> Option<usize> {
        (0..self.octants.len()).find(|&i| match self.octants[i].children {
            Some(kids) => {
                let leaves = kids.iter().filter(|&&k| self.is_leaf(k)).count();
                leaves != 0 && leaves != 8
            }
            None => false,
        })
    }

    pub fn is_strongly_balanced(&self) -> bool {
        self.find_unbalanced_pair().is_none() && self.find_mixed_block().is_none()
    }

    /// Sorted (level, coord) of every leaf; equal signatures mean equal trees.
    pub fn leaf_signature(&self) -> Vec<(u8, [i64; 3])> {
        let mut v: Vec<_> = self
            .leaf_index
            .values()
            .map(|&i| (self.octants[i].level, self.octants[i].coord))
            .collect();
        v.sort();
        v
    }

    /// Subdivide leaves until the balancing and pairing rules hold. Returns the number of
    /// subdivisions. Every split performed is forced by the current tree, so the result is
    /// the unique minimal strongly balanced refinement.
    pub fn balance(&mut self) -> usize {
        let mut splits = 0;
        loop {
            let mut todo: BTreeSet<(u8, usize)> = BTreeSet::new();
            for leaf in self.leaves() {
                let o = &self.octants[leaf];
                for d in neighbor_offsets() {
                    let c = [0, 1, 2].map(|i| o.coord[i] + d[i]);
                    if let Some(n) = self.descend(o.level, c) {
                        if self.is_leaf(n) && self.octants[n].level + 2 <= o.level {
                            todo.insert((self.octants[n].level, n));
                        }
                    }
                }
            }
            for i in 0..self.octants.len() {
                if let Some(kids) = self.octants[i].children {
                    let leaves = kids.iter().filter(|&&k| self.is_leaf(k)).count();
                    if leaves != 0 && leaves != 8 {
                        for k in kids {
                            if self.is_leaf(k) {
                                todo.insert((self.octants[k].level, k));
                            }
                        }
                    }
                }
            }
            if todo.is_empty() {
                break;
            }
            // coarsest first; siblings of a split leaf go with it
            let mut batch: BTreeSet<usize> = BTreeSet::new();
            for &(_, id) in &todo {
                batch.insert(id);
                if let Some(p) = self.octants[id].parent {
                    for k in self.octants[p].children.unwrap() {
                        if self.is_leaf(k) {
                            batch.insert(k);
                        }
                    }
                }
            }
            for id in batch {
                self.subdivide(id).expect("balancing splits leaves only");
                splits += 1;
            }
        }
        debug!("balancing performed {splits} subdivisions");
        splits
    }

    /// Classify every leaf against the surface: boundary if a triangle overlaps the cell,
    /// otherwise interior/exterior by the inside test at the cell center.
    pub fn classify_leaves(&mut self, surface: &TriangleSurface) {
        for leaf in self.leaves() {
            let bx = self.cell_box(leaf);
            let kind = if surface.tri_cell_intersect(&bx) {
                CellKind::Boundary
            } else if surface.is_inside(&bx.center()) {
                CellKind::Interior
            } else {
                CellKind::Exterior
            };
            self.octants[leaf].kind = kind;
        }
    }
}

/// Dimension of the contact between two closed lattice boxes (3 = overlap), or None.
fn contact_dim(a: [i64; 3], sa: i64, b: [i64; 3], sb: i64) -> Option<usize> {
    let mut dim = 0;
    for i in 0..3 {
        let lo = a[i].max(b[i]);
        let hi = (a[i] + sa).min(b[i] + sb);
        if lo > hi {
            return None;
        }
        if lo < hi {
            dim += 1;
        }
    }
    Some(dim)
}

/// Max curvature and min thickness over surface vertices inside `bx`; when the box holds
/// no vertex, the vertex of an overlapping triangle nearest the box center stands in.
fn cell_features(surface: &TriangleSurface, bx: &Aabb, tris: &[usize]) -> (f64, f64) {
    let mut g = f64::NEG_INFINITY;
    let mut t = f64::INFINITY;
    let mut any = false;
    let mut nearest: Option<(f64, usize)> = None;
    let c = bx.center();
    for &tri in tris {
        for &v in &surface.triangles()[tri] {
            let p = surface.vertices()[v];
            if bx.contains(&p) {
                any = true;
                g = g.max(surface.curvature()[v]);
                t = t.min(surface.thickness()[v]);
            } else {
                let d = (p - c).norm_squared();
                if nearest.is_none_or(|(bd, bv)| d < bd || (d == bd && v < bv)) {
                    nearest = Some((d, v));
                }
            }
        }
    }
    if !any {
        if let Some((_, v)) = nearest {
            g = surface.curvature()[v];
            t = surface.thickness()[v];
        }
    }
    (g, t)
}

/// Refine the root cube around the surface: every surface-crossing cell reaches
/// `base_level`, and further levels follow the curvature and thickness tables.
pub fn build_initial_octree(surface: &TriangleSurface, cfg: &RefinementConfig) -> Result<Octree> {
    cfg.validate()?;
    let root_edge = surface.root_edge();
    let bb = surface.bounding_box();
    if bb.min.min() < 0.0 || bb.max.max() > root_edge {
        return Err(HexError::SurfaceOutsideRoot);
    }
    let mut tree = Octree::new(root_edge);
    let all: Vec<usize> = (0..surface.triangles().len()).collect();
    let mut stack: Vec<(usize, Vec<usize>)> = vec![(tree.root(), all)];
    while let Some((id, cand)) = stack.pop() {
        let bx = tree.cell_box(id);
        let tris = surface.triangles_in_box(&bx, &cand);
        let level = tree.octant(id).level;
        if tris.is_empty() {
            let kind = if surface.is_inside(&bx.center()) {
                CellKind::Interior
            } else {
                CellKind::Exterior
            };
            tree.set_kind(id, kind);
            continue;
        }
        tree.set_kind(id, CellKind::Boundary);
        let split = if level < cfg.base_level {
            true
        } else if level < cfg.max_level {
            let (g, t) = cell_features(surface, &bx, &tris);
            cfg.demanded_level(g, t, root_edge) > level
        } else {
            false
        };
        if split {
            for k in tree.subdivide(id)? {
                stack.push((k, tris.clone()));
            }
        }
    }
    debug!(
        "initial octree: {} leaves, levels {}..{}",
        tree.num_leaves(),
        tree.min_leaf_level(),
        tree.max_leaf_level()
    );
    Ok(tree)
}

/// Strongly balance a tree (balancing rule over face/edge/vertex contact plus pairing).
pub fn enforce_strong_balance(mut tree: Octree) -> Octree {
    tree.balance();
    tree
}
