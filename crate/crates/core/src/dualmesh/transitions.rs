//! Transition faces and edges between a block of leaves and finer neighbor blocks.

use std::collections::BTreeMap;

use crate::error::{HexError, Result};
use crate::octree::Octree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TransitionKind {
    Face,
    /// One of the four blocks around the edge is fine.
    EdgeB,
    /// Two side-by-side blocks are fine.
    EdgeC,
    /// Three blocks are fine.
    EdgeD,
    /// Two diagonal blocks are fine (four face transitions in a cross).
    EdgeE,
}

impl TransitionKind {
    /// Hexes the template produces.
    pub fn hex_count(self) -> usize {
        match self {
            TransitionKind::Face => 13,
            TransitionKind::EdgeB => 5,
            TransitionKind::EdgeC => 4,
            TransitionKind::EdgeD => 3,
            TransitionKind::EdgeE => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionRecord {
    pub kind: TransitionKind,
    /// Level of the coarse-side leaves; the fine side is one level deeper.
    pub level: u8,
    /// Lattice min corner of the transition face, or lattice start point of the edge.
    pub anchor: [i64; 3],
    /// Face normal axis, or edge direction axis.
    pub axis: usize,
    /// Face: +1 when the fine block lies on the +axis side of the coarse block.
    /// Edge: 0.
    pub sign: i8,
    /// Edge: bit `q1 + 2 q2` set when the block in quadrant (q1, q2) is fine, quadrants
    /// taken along axes (axis+1)%3 and (axis+2)%3, 1 meaning the high side of the edge.
    pub fine_mask: u8,
    /// Leaves touching the face or edge, ascending ids.
    pub leaves: Vec<usize>,
}

impl TransitionRecord {
    /// Edge length (block edge) in lattice units.
    pub fn span(&self) -> i64 {
        2 * Octree::lattice_size(self.level)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum NodeState {
    Outside,
    /// Covered by a leaf coarser than the queried level, or a leaf at that level.
    Leaf,
    /// Internal node whose children are leaves.
    Coarse,
    /// Internal node whose children are internal.
    Fine,
}

pub(crate) fn node_state(tree: &Octree, level: u8, coord: [i64; 3]) -> (NodeState, Option<usize>) {
    match tree.descend(level, coord) {
        None => (NodeState::Outside, None),
        Some(id) => {
            let o = tree.octant(id);
            match o.children {
                _ if o.level < level => (NodeState::Leaf, Some(id)),
                None => (NodeState::Leaf, Some(id)),
                Some(kids) if kids.iter().all(|&k| tree.is_leaf(k)) => {
                    (NodeState::Coarse, Some(id))
                }
                Some(_) => (NodeState::Fine, Some(id)),
            }
        }
    }
}

/// Leaves under `node` whose closed box meets the degenerate box `[lo, hi]` in a set of
/// the same dimension as that box.
fn leaves_touching(tree: &Octree, node: usize, lo: [i64; 3], hi: [i64; 3], out: &mut Vec<usize>) {
    let mut stack = vec![node];
    while let Some(id) = stack.pop() {
        let (blo, s) = tree.lattice_box(id);
        let ok = (0..3).all(|i| {
            let a = blo[i].max(lo[i]);
            let b = (blo[i] + s).min(hi[i]);
            if lo[i] == hi[i] {
                a <= b
            } else {
                a < b
            }
        });
        if !ok {
            continue;
        }
        match tree.octant(id).children {
            Some(kids) => stack.extend(kids),
            None => out.push(id),
        }
    }
}

pub(crate) fn check_strong_balance(tree: &Octree) -> Result<()> {
    if let Some((a, b)) = tree.find_unbalanced_pair() {
        return Err(HexError::Unbalanced(
            a,
            tree.octant(a).level,
            b,
            tree.octant(b).level,
        ));
    }
    if let Some(p) = tree.find_mixed_block() {
        let kids = tree.octant(p).children.unwrap();
        let leaf = *kids.iter().find(|&&k| tree.is_leaf(k)).unwrap();
        let inner = *kids.iter().find(|&&k| !tree.is_leaf(k)).unwrap();
        return Err(HexError::Unbalanced(
            leaf,
            tree.octant(leaf).level,
            inner,
            tree.octant(inner).level,
        ));
    }
    Ok(())
}

/// Every transition face and edge, classified by which neighbor blocks are finer.
/// Edges on the root boundary are skipped.
pub fn detect_transitions(tree: &Octree) -> Result<Vec<TransitionRecord>> {
    check_strong_balance(tree)?;
    let mut faces = Vec::new();
    let mut edges: BTreeMap<(u8, usize, [i64; 3]), TransitionRecord> = BTreeMap::new();
    for n in 0..tree.len() {
        if node_state(tree, tree.octant(n).level, tree.octant(n).coord).0 != NodeState::Coarse
            || tree.octant(n).children.is_none()
        {
            continue;
        }
        let o = tree.octant(n);
        let m = o.level;
        let bs = Octree::lattice_size(m);
        let (lo, _) = tree.lattice_box(n);
        for axis in 0..3 {
            for sign in [-1i64, 1] {
                let mut c = o.coord;
                c[axis] += sign;
                let (st, nb) = node_state(tree, m, c);
                if st != NodeState::Fine {
                    continue;
                }
                let mut flo = lo;
                if sign > 0 {
                    flo[axis] += bs;
                }
                let mut fhi = flo;
                for t in 0..3 {
                    if t != axis {
                        fhi[t] += bs;
                    }
                }
                let mut leaves = Vec::new();
                leaves_touching(tree, n, flo, fhi, &mut leaves);
                leaves_touching(tree, nb.unwrap(), flo, fhi, &mut leaves);
                leaves.sort_unstable();
                faces.push(TransitionRecord {
                    kind: TransitionKind::Face,
                    level: m + 1,
                    anchor: flo,
                    axis,
                    sign: sign as i8,
                    fine_mask: 0,
                    leaves,
                });
            }
        }
        for a in 0..3 {
            let (n1, n2) = ((a + 1) % 3, (a + 2) % 3);
            for e1 in 0..2i64 {
                for e2 in 0..2i64 {
                    // edge at the low (0) or high (1) face of this block along n1 / n2
                    let mut line = o.coord;
                    line[n1] += e1;
                    line[n2] += e2;
                    let key = (m, a, line);
                    if edges.contains_key(&key) {
                        continue;
                    }
                    let mut states = [(NodeState::Outside, None); 4];
                    for q1 in 0..2i64 {
                        for q2 in 0..2i64 {
                            let mut c = line;
                            c[n1] += q1 - 1;
                            c[n2] += q2 - 1;
                            states[(q1 + 2 * q2) as usize] = node_state(tree, m, c);
                        }
                    }
                    if states.iter().any(|s| s.0 == NodeState::Outside) {
                        continue;
                    }
                    let mask = (0..4)
                        .filter(|&i| states[i].0 == NodeState::Fine)
                        .fold(0u8, |acc, i| acc | (1 << i));
                    if mask == 0 || mask == 0xF || states.iter().any(|s| s.0 == NodeState::Leaf) {
                        continue;
                    }
                    let kind = match mask.count_ones() {
                        1 => TransitionKind::EdgeB,
                        3 => TransitionKind::EdgeD,
                        _ if mask == 0b1001 || mask == 0b0110 => TransitionKind::EdgeE,
                        _ => TransitionKind::EdgeC,
                    };
                    let anchor = line.map(|x| x * bs);
                    let mut hi = anchor;
                    hi[a] += bs;
                    let mut leaves = Vec::new();
                    for s in &states {
                        leaves_touching(tree, s.1.unwrap(), anchor, hi, &mut leaves);
                    }
                    leaves.sort_unstable();
                    edges.insert(
                        key,
                        TransitionRecord {
                            kind,
                            level: m + 1,
                            anchor,
                            axis: a,
                            sign: 0,
                            fine_mask: mask,
                            leaves,
                        },
                    );
                }
            }
        }
    }
    faces.sort_by_key(|r| (r.level, r.axis, r.anchor, r.sign));
    let mut out = faces;
    out.extend(edges.into_values());
    Ok(out)
}
