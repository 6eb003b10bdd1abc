//! Planar twin of the octree pipeline: strongly balanced quadtrees and their all-quad dual.
//!
//! A hanging node on a transition edge is shared by three leaves, so the plain dual has two
//! triangles per transition edge with a quad between them. The single template replaces
//! that patch by four quads through two new vertices.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector2;

use crate::error::{HexError, Result};
use crate::octree::{LATTICE_BITS, MAX_LEVEL};

pub type Vec2 = Vector2<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct Quadrant {
    pub level: u8,
    pub coord: [i64; 2],
    pub origin: Vec2,
    /// Child index bit 0 = x, bit 1 = y.
    pub children: Option<[usize; 4]>,
    pub parent: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Quadtree {
    quadrants: Vec<Quadrant>,
    root_edge: f64,
}

fn neighbor_offsets() -> impl Iterator<Item = [i64; 2]> {
    (-1..=1)
        .flat_map(|y| (-1..=1).map(move |x| [x, y]))
        .filter(|d| *d != [0, 0])
}

impl Quadtree {
    pub fn new(root_edge: f64) -> Self {
        let root = Quadrant {
            level: 0,
            coord: [0, 0],
            origin: Vec2::zeros(),
            children: None,
            parent: None,
        };
        Self {
            quadrants: vec![root],
            root_edge,
        }
    }

    pub fn uniform(root_edge: f64, level: u8) -> Self {
        let mut t = Self::new(root_edge);
        for _ in 0..level {
            for leaf in t.leaves() {
                t.subdivide(leaf).unwrap();
            }
        }
        t
    }

    pub fn quadrant(&self, id: usize) -> &Quadrant {
        &self.quadrants[id]
    }

    pub fn len(&self) -> usize {
        self.quadrants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quadrants.is_empty()
    }

    pub fn is_leaf(&self, id: usize) -> bool {
        self.quadrants[id].children.is_none()
    }

    pub fn leaves(&self) -> Vec<usize> {
        (0..self.quadrants.len())
            .filter(|&i| self.is_leaf(i))
            .collect()
    }

    pub fn num_leaves(&self) -> usize {
        self.quadrants
            .iter()
            .filter(|q| q.children.is_none())
            .count()
    }

    pub fn edge(&self, level: u8) -> f64 {
        self.root_edge / 2f64.powi(level as i32)
    }

    pub fn lattice_size(level: u8) -> i64 {
        1 << (LATTICE_BITS - level as u32)
    }

    pub fn lattice_extent() -> i64 {
        1 << LATTICE_BITS
    }

    pub fn lattice_box(&self, id: usize) -> ([i64; 2], i64) {
        let q = &self.quadrants[id];
        let s = Self::lattice_size(q.level);
        (q.coord.map(|c| c * s), s)
    }

    pub fn cell_center(&self, id: usize) -> Vec2 {
        let q = &self.quadrants[id];
        q.origin + Vec2::repeat(0.5 * self.edge(q.level))
    }

    pub fn subdivide(&mut self, id: usize) -> Result<[usize; 4]> {
        if !self.is_leaf(id) {
            return Err(HexError::NotALeaf(id));
        }
        let p = self.quadrants[id].clone();
        if p.level >= MAX_LEVEL {
            return Err(HexError::InvalidRefinement(format!(
                "cannot subdivide below level {MAX_LEVEL}"
            )));
        }
        let half = self.edge(p.level + 1);
        let mut kids = [0usize; 4];
        for (k, kid) in kids.iter_mut().enumerate() {
            let b = [(k & 1) as i64, ((k >> 1) & 1) as i64];
            *kid = self.quadrants.len();
            self.quadrants.push(Quadrant {
                level: p.level + 1,
                coord: [p.coord[0] * 2 + b[0], p.coord[1] * 2 + b[1]],
                origin: p.origin + Vec2::new(b[0] as f64, b[1] as f64) * half,
                children: None,
                parent: Some(id),
            });
        }
        self.quadrants[id].children = Some(kids);
        Ok(kids)
    }

    /// Leaf whose half-open lattice box contains `p`.
    pub fn locate(&self, p: [i64; 2]) -> Option<usize> {
        let n = Self::lattice_extent();
        if p.iter().any(|&c| c < 0 || c >= n) {
            return None;
        }
        let mut id = 0;
        while let Some(kids) = self.quadrants[id].children {
            let shift = LATTICE_BITS - self.quadrants[id].level as u32 - 1;
            id = kids[(((p[0] >> shift) & 1) | (((p[1] >> shift) & 1) << 1)) as usize];
        }
        Some(id)
    }

    /// Deepest node at level <= `level` containing the level-`level` cell `coord`.
    pub fn descend(&self, level: u8, coord: [i64; 2]) -> Option<usize> {
        let n = 1i64 << level;
        if coord.iter().any(|&c| c < 0 || c >= n) {
            return None;
        }
        let mut id = 0;
        while self.quadrants[id].level < level {
            let Some(kids) = self.quadrants[id].children else {
                break;
            };
            let shift = (level - self.quadrants[id].level - 1) as u32;
            id = kids[(((coord[0] >> shift) & 1) | (((coord[1] >> shift) & 1) << 1)) as usize];
        }
        Some(id)
    }

    pub fn node_at(&self, level: u8, coord: [i64; 2]) -> Option<usize> {
        self.descend(level, coord)
            .filter(|&id| self.quadrants[id].level == level)
    }

    /// Leaves coarser by two or more levels than an edge- or vertex-adjacent leaf.
    fn too_coarse(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for leaf in self.leaves() {
            let q = &self.quadrants[leaf];
            for d in neighbor_offsets() {
                if let Some(n) = self.descend(q.level, [q.coord[0] + d[0], q.coord[1] + d[1]]) {
                    if self.is_leaf(n) && self.quadrants[n].level + 2 <= q.level {
                        out.push((leaf, n));
                    }
                }
            }
        }
        out
    }

    fn mixed_blocks(&self) -> Vec<usize> {
        (0..self.quadrants.len())
            .filter(|&i| match self.quadrants[i].children {
                Some(kids) => {
                    let leaves = kids.iter().filter(|&&k| self.is_leaf(k)).count();
                    leaves != 0 && leaves != 4
                }
                None => false,
            })
            .collect()
    }

    pub fn is_strongly_balanced(&self) -> bool {
        self.too_coarse().is_empty() && self.mixed_blocks().is_empty()
    }

    fn check_balanced(&self) -> Result<()> {
        let level = |i: usize| self.quadrants[i].level;
        if let Some(&(a, b)) = self.too_coarse().first() {
            return Err(HexError::Unbalanced(a, level(a), b, level(b)));
        }
        if let Some(&p) = self.mixed_blocks().first() {
            let kids = self.quadrants[p].children.unwrap();
            let leaf = *kids.iter().find(|&&k| self.is_leaf(k)).unwrap();
            let inner = *kids.iter().find(|&&k| !self.is_leaf(k)).unwrap();
            return Err(HexError::Unbalanced(leaf, level(leaf), inner, level(inner)));
        }
        Ok(())
    }

    /// Subdivide until the 2:1 rule (edge and vertex contact) and the pairing rule hold.
    /// Returns the number of subdivisions.
    pub fn balance(&mut self) -> usize {
        let mut splits = 0;
        loop {
            let mut batch: BTreeSet<usize> =
                self.too_coarse().into_iter().map(|(_, n)| n).collect();
            for p in self.mixed_blocks() {
                batch.extend(self.quadrants[p].children.unwrap());
            }
            let forced: Vec<usize> = batch.iter().copied().collect();
            for id in forced {
                if let Some(p) = self.quadrants[id].parent {
                    batch.extend(self.quadrants[p].children.unwrap());
                }
            }
            batch.retain(|&id| self.is_leaf(id));
            if batch.is_empty() {
                return splits;
            }
            for id in batch {
                self.subdivide(id).expect("balancing splits leaves only");
                splits += 1;
            }
        }
    }
}

/// Dual of the quadtree before templating: one vertex per leaf, one polygon (quad or
/// triangle) per interior grid point.
#[derive(Debug, Clone)]
pub struct HybridDual2d {
    pub vertices: Vec<Vec2>,
    pub vertex_leaf: Vec<usize>,
    /// Counterclockwise vertex lists.
    pub elements: Vec<Vec<usize>>,
    /// Lattice grid point of each element.
    pub points: Vec<[i64; 2]>,
}

pub fn hybrid_dual_2d(tree: &Quadtree) -> HybridDual2d {
    let ext = Quadtree::lattice_extent();
    let mut pts: BTreeSet<(i64, i64)> = BTreeSet::new();
    for leaf in tree.leaves() {
        let (lo, s) = tree.lattice_box(leaf);
        for c in 0..4 {
            let p = [lo[0] + (c & 1) * s, lo[1] + ((c >> 1) & 1) * s];
            if p.iter().all(|&x| x > 0 && x < ext) {
                pts.insert((p[1], p[0]));
            }
        }
    }
    let mut out = HybridDual2d {
        vertices: Vec::new(),
        vertex_leaf: Vec::new(),
        elements: Vec::new(),
        points: Vec::new(),
    };
    let mut vid: HashMap<usize, usize> = HashMap::new();
    for (y, x) in pts {
        // quadrants around the point, counterclockwise from (-,-)
        let probes = [[x - 1, y - 1], [x, y - 1], [x, y], [x - 1, y]];
        let mut ring: Vec<usize> = Vec::with_capacity(4);
        for p in probes {
            let leaf = tree.locate(p).expect("interior probe");
            if ring.last() != Some(&leaf) && ring.first() != Some(&leaf) {
                ring.push(leaf);
            }
        }
        let element = ring
            .into_iter()
            .map(|leaf| {
                *vid.entry(leaf).or_insert_with(|| {
                    out.vertices.push(tree.cell_center(leaf));
                    out.vertex_leaf.push(leaf);
                    out.vertices.len() - 1
                })
            })
            .collect();
        out.elements.push(element);
        out.points.push([x, y]);
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QuadMesh {
    pub vertices: Vec<Vec2>,
    /// Counterclockwise.
    pub quads: Vec<[usize; 4]>,
    /// Quads produced by the transition template.
    pub templated: Vec<bool>,
}

fn signed_area(pts: &[Vec2]) -> f64 {
    let n = pts.len();
    0.5 * (0..n).map(|i| pts[i].perp(&pts[(i + 1) % n])).sum::<f64>()
}

impl QuadMesh {
    pub fn num_quads(&self) -> usize {
        self.quads.len()
    }

    /// Twice the signed area of the corner triangle at each vertex of quad `q`.
    pub fn corner_areas(&self, q: usize) -> [f64; 4] {
        let v = self.quads[q].map(|i| self.vertices[i]);
        std::array::from_fn(|i| (v[i] - v[(i + 3) % 4]).perp(&(v[(i + 1) % 4] - v[i])))
    }

    /// Undirected edge -> quads using it.
    pub fn edge_map(&self) -> HashMap<(usize, usize), Vec<usize>> {
        let mut m: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (q, quad) in self.quads.iter().enumerate() {
            for i in 0..4 {
                let (a, b) = (quad[i], quad[(i + 1) % 4]);
                m.entry((a.min(b), a.max(b))).or_default().push(q);
            }
        }
        m
    }

    pub fn to_svg(&self) -> String {
        let (mut lo, mut hi) = (Vec2::repeat(f64::INFINITY), Vec2::repeat(f64::NEG_INFINITY));
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        let size = (hi - lo).max().max(f64::MIN_POSITIVE);
        let scale = 800.0 / size;
        let margin = 10.0;
        let (w, h) = (
            (hi.x - lo.x) * scale + 2.0 * margin,
            (hi.y - lo.y) * scale + 2.0 * margin,
        );
        let mut s = String::new();
        writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.2} {h:.2}">"#).unwrap();
        for (q, quad) in self.quads.iter().enumerate() {
            let pts: Vec<String> = quad
                .iter()
                .map(|&i| {
                    let p = self.vertices[i];
                    // flip y so the picture keeps the mesh orientation
                    format!(
                        "{:.3},{:.3}",
                        (p.x - lo.x) * scale + margin,
                        (hi.y - p.y) * scale + margin
                    )
                })
                .collect();
            let fill = if self.templated[q] {
                "#f4c542"
            } else {
                "#cfe3f7"
            };
            writeln!(
                s,
                r#"<polygon points="{}" fill="{fill}" stroke="black" stroke-width="1"/>"#,
                pts.join(" ")
            )
            .unwrap();
        }
        s.push_str("</svg>\n");
        s
    }

    pub fn write_svg(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_svg()).map_err(|source| HexError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// A transition edge: the two coarse leaves on one side and the four fine leaves on the
/// other, both ordered along the edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionEdge2d {
    /// Axis normal to the edge.
    pub axis: usize,
    /// Lattice start point of the edge.
    pub anchor: [i64; 2],
    pub span: i64,
    pub coarse: [usize; 2],
    pub fine: [usize; 4],
}

fn all_leaf_children(tree: &Quadtree, id: usize) -> bool {
    tree.quadrant(id)
        .children
        .is_some_and(|k| k.iter().all(|&c| tree.is_leaf(c)))
}

pub fn detect_transitions_2d(tree: &Quadtree) -> Vec<TransitionEdge2d> {
    let mut out = Vec::new();
    for n in 0..tree.len() {
        if !all_leaf_children(tree, n) {
            continue;
        }
        let q = tree.quadrant(n);
        let (lo, bs) = tree.lattice_box(n);
        for axis in 0..2 {
            let t = 1 - axis;
            for high in [false, true] {
                let mut c = q.coord;
                c[axis] += if high { 1 } else { -1 };
                let Some(nb) = tree.node_at(q.level, c) else {
                    continue;
                };
                if tree.is_leaf(nb) || all_leaf_children(tree, nb) {
                    continue;
                }
                let side = |b: usize| move |k: &usize| (k >> axis) & 1 == b;
                let along = |id: usize| tree.quadrant(id).coord[t];
                let mut coarse: Vec<usize> = tree
                    .quadrant(n)
                    .children
                    .unwrap()
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| side(high as usize)(k))
                    .map(|(_, &id)| id)
                    .collect();
                coarse.sort_by_key(|&id| along(id));
                let mut fine = Vec::new();
                for (k, &mid) in tree.quadrant(nb).children.unwrap().iter().enumerate() {
                    if side(!high as usize)(&k) {
                        for (kk, &leaf) in tree.quadrant(mid).children.unwrap().iter().enumerate() {
                            if side(!high as usize)(&kk) {
                                fine.push(leaf);
                            }
                        }
                    }
                }
                fine.sort_by_key(|&id| along(id));
                let mut anchor = lo;
                if high {
                    anchor[axis] += bs;
                }
                out.push(TransitionEdge2d {
                    axis,
                    anchor,
                    span: bs,
                    coarse: [coarse[0], coarse[1]],
                    fine: [fine[0], fine[1], fine[2], fine[3]],
                });
            }
        }
    }
    out.sort_by_key(|e| (e.axis, e.anchor));
    out
}

/// All-quad dual of a strongly balanced quadtree.
pub fn extract_dual_2d(tree: &Quadtree) -> Result<QuadMesh> {
    tree.check_balanced()?;
    let hybrid = hybrid_dual_2d(tree);
    let at: HashMap<[i64; 2], usize> = hybrid
        .points
        .iter()
        .enumerate()
        .map(|(i, &p)| (p, i))
        .collect();
    let vid: HashMap<usize, usize> = hybrid
        .vertex_leaf
        .iter()
        .enumerate()
        .map(|(v, &l)| (l, v))
        .collect();
    let mut mesh = QuadMesh {
        vertices: hybrid.vertices.clone(),
        ..Default::default()
    };
    let mut replaced = vec![false; hybrid.elements.len()];
    let mut extra = Vec::new();
    for e in detect_transitions_2d(tree) {
        let t = 1 - e.axis;
        let c = e.coarse.map(|l| vid[&l]);
        let f = e.fine.map(|l| vid[&l]);
        for k in 1..4 {
            let mut p = e.anchor;
            p[t] += k * e.span / 4;
            let el = *at.get(&p).ok_or_else(|| {
                HexError::TemplateLookup(
                    [p[0], p[1], 0],
                    "transition point has no dual element".into(),
                )
            })?;
            let expected = if k == 2 { 4 } else { 3 };
            if hybrid.elements[el].len() != expected || replaced[el] {
                return Err(HexError::TemplateLookup(
                    [p[0], p[1], 0],
                    "unexpected dual patch".into(),
                ));
            }
            replaced[el] = true;
        }
        // new vertices at the midpoints of the patch diagonals C1-F3 and C2-F2
        let v = &mesh.vertices;
        let n1 = (v[c[0]] + v[f[2]]) * 0.5;
        let n2 = (v[c[1]] + v[f[1]]) * 0.5;
        mesh.vertices.push(n1);
        mesh.vertices.push(n2);
        let (n1, n2) = (mesh.vertices.len() - 2, mesh.vertices.len() - 1);
        extra.extend([
            [c[0], f[0], f[1], n1],
            [n1, f[1], f[2], n2],
            [n2, f[2], f[3], c[1]],
            [c[0], n1, n2, c[1]],
        ]);
    }
    for (el, verts) in hybrid.elements.iter().enumerate() {
        if replaced[el] {
            continue;
        }
        if verts.len() != 4 {
            let p = hybrid.points[el];
            return Err(HexError::TemplateLookup(
                [p[0], p[1], 0],
                format!("{}-gon outside any transition", verts.len()),
            ));
        }
        mesh.quads.push([verts[0], verts[1], verts[2], verts[3]]);
        mesh.templated.push(false);
    }
    for mut q in extra {
        let pts = q.map(|i| mesh.vertices[i]);
        if signed_area(&pts) < 0.0 {
            q.reverse();
        }
        mesh.quads.push(q);
        mesh.templated.push(true);
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn random_tree(seed: u64) -> Quadtree {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut t = Quadtree::uniform(8.0, 1);
        let p = rng.gen_range(0.1..0.5);
        let max = rng.gen_range(3..6);
        let mut stack = t.leaves();
        while let Some(id) = stack.pop() {
            if t.quadrant(id).level < max && rng.gen_bool(p) {
                stack.extend(t.subdivide(id).unwrap());
            }
        }
        t.balance();
        t
    }

    /// Two side-by-side level-1 blocks of a 2x2 block grid, the right one refined.
    fn one_refined_block() -> Quadtree {
        let mut t = Quadtree::uniform(8.0, 2);
        let b = t.node_at(1, [1, 0]).unwrap();
        for k in t.quadrant(b).children.unwrap() {
            t.subdivide(k).unwrap();
        }
        t
    }

    fn assert_valid(m: &QuadMesh) {
        for q in 0..m.num_quads() {
            let a = m.corner_areas(q);
            assert!(a.iter().all(|&x| x > 0.0), "quad {q} corners {a:?}");
        }
        for (e, qs) in m.edge_map() {
            assert!(qs.len() <= 2, "edge {e:?} in {} quads", qs.len());
        }
        let mut seen = std::collections::HashSet::new();
        for v in &m.vertices {
            assert!(
                seen.insert((v.x.to_bits(), v.y.to_bits())),
                "duplicate vertex {v:?}"
            );
        }
    }

    #[test]
    fn uniform_grid() {
        let t = Quadtree::uniform(4.0, 2);
        assert!(detect_transitions_2d(&t).is_empty());
        let m = extract_dual_2d(&t).unwrap();
        assert_eq!(m.num_quads(), 9);
        assert!(m.templated.iter().all(|&x| !x));
        assert_valid(&m);
    }

    #[test]
    fn single_transition_edge() {
        let t = one_refined_block();
        let h = hybrid_dual_2d(&t);
        let tris = h.elements.iter().filter(|e| e.len() == 3).count();
        // the refined block meets the coarse blocks to its left and above
        let tr = detect_transitions_2d(&t);
        assert_eq!(tr.len(), 2);
        assert_eq!(tris, 2 * tr.len());
        let m = extract_dual_2d(&t).unwrap();
        assert_eq!(m.templated.iter().filter(|&&x| x).count(), 4 * tr.len());
        // each patch of 3 elements becomes 4 quads
        assert_eq!(m.num_quads(), h.elements.len() + tr.len());
        assert_valid(&m);
    }

    #[test]
    fn l_and_diagonal_configurations() {
        for blocks in [vec![[0, 0], [1, 1]], vec![[1, 0], [0, 1]], vec![[1, 1]]] {
            let mut t = Quadtree::uniform(8.0, 2);
            for b in blocks {
                let id = t.node_at(1, b).unwrap();
                for k in t.quadrant(id).children.unwrap() {
                    t.subdivide(k).unwrap();
                }
            }
            assert!(t.is_strongly_balanced());
            let m = extract_dual_2d(&t).unwrap();
            assert_valid(&m);
        }
    }

    #[test]
    fn unbalanced_input_is_rejected() {
        let mut t = Quadtree::uniform(8.0, 1);
        let k = t.subdivide(1).unwrap();
        t.subdivide(k[0]).unwrap();
        assert!(matches!(extract_dual_2d(&t), Err(HexError::Unbalanced(..))));
        t.balance();
        assert!(t.is_strongly_balanced());
        assert!(extract_dual_2d(&t).is_ok());
    }

    #[test]
    fn balance_is_idempotent() {
        let mut t = random_tree(11);
        let n = t.num_leaves();
        assert_eq!(t.balance(), 0);
        assert_eq!(t.num_leaves(), n);
    }

    #[test]
    fn svg_has_one_polygon_per_quad() {
        let m = extract_dual_2d(&one_refined_block()).unwrap();
        let svg = m.to_svg();
        assert_eq!(svg.matches("<polygon").count(), m.num_quads());
        assert!(svg.starts_with("<svg"));
    }

    /// Exhaustive element scan over many random balanced trees.
    #[test]
    fn random_trees_are_all_quad() {
        for seed in 0..1000 {
            let t = random_tree(seed);
            let h = hybrid_dual_2d(&t);
            let tr = detect_transitions_2d(&t);
            let m = extract_dual_2d(&t).unwrap();
            assert_valid(&m);
            assert_eq!(m.num_quads(), h.elements.len() + tr.len(), "seed {seed}");
            // interior edges in 2 quads; edges used once lie on the hull of leaf centers
            let hull: std::collections::HashSet<usize> = h
                .vertex_leaf
                .iter()
                .enumerate()
                .filter(|(_, &l)| {
                    let (lo, s) = t.lattice_box(l);
                    lo.iter().any(|&c| c == 0)
                        || lo.iter().any(|&c| c + s == Quadtree::lattice_extent())
                })
                .map(|(v, _)| v)
                .collect();
            for ((a, b), qs) in m.edge_map() {
                if qs.len() == 1 {
                    assert!(
                        hull.contains(&a) && hull.contains(&b),
                        "seed {seed}: open edge ({a},{b})"
                    );
                }
            }
        }
    }

    proptest! {
        #[test]
        fn untouched_vertices_keep_their_elements(seed in any::<u64>()) {
            let t = random_tree(seed);
            let h = hybrid_dual_2d(&t);
            let m = extract_dual_2d(&t).unwrap();
            let mut touched = vec![false; h.vertices.len()];
            let vid: HashMap<usize, usize> = h.vertex_leaf.iter().enumerate().map(|(v, &l)| (l, v)).collect();
            for e in detect_transitions_2d(&t) {
                for l in e.coarse.iter().chain(&e.fine) {
                    touched[vid[l]] = true;
                }
            }
            let canon = |v: &[usize]| {
                let mut s = v.to_vec();
                s.sort_unstable();
                s
            };
            for v in (0..h.vertices.len()).filter(|&v| !touched[v]) {
                let mut before: Vec<Vec<usize>> = h.elements.iter().filter(|e| e.contains(&v)).map(|e| canon(e)).collect();
                let mut after: Vec<Vec<usize>> = m.quads.iter().filter(|q| q.contains(&v)).map(|q| canon(q)).collect();
                before.sort();
                after.sort();
                prop_assert_eq!(before, after);
            }
        }
    }
}
