use std::collections::{BTreeMap, HashSet};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};

use super::*;
use crate::error::HexError;
use crate::octree::{enforce_strong_balance, Octree};

/// Uniform level-3 tree (4^3 blocks) with the listed level-2 blocks refined once more.
fn refined(blocks: &[[i64; 3]]) -> Octree {
    let mut t = Octree::uniform(8.0, 3);
    for &b in blocks {
        let id = t.node_at(2, b).unwrap();
        for k in t.octant(id).children.unwrap() {
            t.subdivide(k).unwrap();
        }
    }
    t
}

fn random_tree(seed: u64, max_level: u8) -> Octree {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut t = Octree::uniform(8.0, 2);
    let p = rng.gen_range(0.05..0.3);
    let mut stack = t.leaves();
    while let Some(id) = stack.pop() {
        if t.octant(id).level < max_level && rng.gen_bool(p) {
            stack.extend(t.subdivide(id).unwrap());
        }
    }
    enforce_strong_balance(t)
}

/// Vertices whose leaf touches the root boundary; only these may lie on the mesh boundary.
fn hull_flags(t: &Octree, d: &DualExtraction) -> Vec<bool> {
    let ext = Octree::lattice_extent();
    d.vertex_leaf
        .iter()
        .map(|&l| {
            let (lo, s) = t.lattice_box(l);
            lo.contains(&0) || lo.iter().any(|&c| c + s == ext)
        })
        .collect()
}

fn per_record_counts(d: &DualExtraction, n: usize) -> Vec<usize> {
    let mut c = vec![0; n];
    for r in d.hex_record.iter().flatten() {
        c[*r] += 1;
    }
    c
}

fn kinds(tr: &[TransitionRecord]) -> BTreeMap<TransitionKind, usize> {
    let mut m = BTreeMap::new();
    for r in tr {
        *m.entry(r.kind).or_insert(0) += 1;
    }
    m
}

const CONFIGS: [&[[i64; 3]]; 4] = [
    &[[1, 1, 1]],
    &[[1, 1, 1], [2, 1, 1]],
    &[[1, 1, 1], [2, 1, 1], [1, 2, 1]],
    &[[1, 1, 1], [2, 2, 1]],
];

#[test]
fn uniform_tree_is_the_plain_grid_dual() {
    let t = Octree::uniform(8.0, 3);
    let tr = detect_transitions(&t).unwrap();
    assert!(tr.is_empty());
    let m = extract_dual(&t, &tr).unwrap();
    assert_eq!(m.num_hexes(), 7 * 7 * 7);
    assert_eq!(m.vertices.len(), 8 * 8 * 8);
    assert!(m.provenance.iter().all(|&p| p == Provenance::GridDual));
    for h in 0..m.num_hexes() {
        let q = m.quality(h);
        assert!(q.scaled_jacobians.iter().all(|&s| (s - 1.0).abs() < 1e-12));
    }
    assert!(check_conformity(&m, None).is_conforming());
}

#[test]
fn single_refined_block_transitions() {
    let t = refined(&[[1, 1, 1]]);
    let tr = detect_transitions(&t).unwrap();
    let k = kinds(&tr);
    assert_eq!(k.get(&TransitionKind::Face), Some(&6));
    assert_eq!(k.get(&TransitionKind::EdgeB), Some(&12));
    assert_eq!(k.len(), 2);
    for r in tr.iter().filter(|r| r.kind == TransitionKind::Face) {
        // 4 coarse leaves plus 16 fine leaves share the face
        assert_eq!(r.leaves.len(), 20);
        assert_eq!(r.level, 3);
    }
    for r in tr.iter().filter(|r| r.kind == TransitionKind::EdgeB) {
        assert_eq!(r.fine_mask.count_ones(), 1);
        // 2 coarse leaves in each of 3 blocks, 4 fine ones in the refined block
        assert_eq!(r.leaves.len(), 2 * 3 + 4);
    }
}

#[test]
fn edge_kinds_by_fine_pattern() {
    let edge_kinds = |blocks: &[[i64; 3]]| {
        let tr = detect_transitions(&refined(blocks)).unwrap();
        let mut k = kinds(&tr);
        k.remove(&TransitionKind::Face);
        k
    };
    let pair = edge_kinds(&[[1, 1, 1], [2, 1, 1]]);
    assert_eq!(pair.get(&TransitionKind::EdgeC), Some(&4));
    let ell = edge_kinds(&[[1, 1, 1], [2, 1, 1], [1, 2, 1]]);
    assert_eq!(ell.get(&TransitionKind::EdgeD), Some(&1));
    let cross = edge_kinds(&[[1, 1, 1], [2, 2, 1]]);
    assert_eq!(cross.get(&TransitionKind::EdgeE), Some(&1));
    assert_eq!(cross.get(&TransitionKind::EdgeC), None);
}

#[test]
fn template_hex_counts() {
    for cfg in CONFIGS {
        let t = refined(cfg);
        let tr = detect_transitions(&t).unwrap();
        let d = extract_dual_detailed(&t, &tr, &DualParams::default()).unwrap();
        for (r, n) in tr.iter().zip(per_record_counts(&d, tr.len())) {
            assert_eq!(n, r.kind.hex_count(), "{:?} at {:?}", r.kind, r.anchor);
        }
        let prov = d.mesh.count_by_provenance();
        let templated: usize = tr.iter().map(|r| r.kind.hex_count()).sum();
        let grid = prov.get(&Provenance::GridDual).copied().unwrap_or(0);
        let fill = prov.get(&Provenance::CornerFill).copied().unwrap_or(0);
        assert_eq!(d.mesh.num_hexes(), grid + templated + fill);
    }
}

#[test]
fn single_block_provenance() {
    let t = refined(&[[1, 1, 1]]);
    let tr = detect_transitions(&t).unwrap();
    let m = extract_dual(&t, &tr).unwrap();
    let p = m.count_by_provenance();
    assert_eq!(p[&Provenance::TemplateFace], 6 * 13);
    assert_eq!(p[&Provenance::TemplateEdge], 12 * 5);
    assert_eq!(p[&Provenance::CornerFill], 8);
    assert_eq!(p[&Provenance::GridDual], 343);
}

#[test]
fn configurations_conform() {
    for cfg in CONFIGS {
        let t = refined(cfg);
        let tr = detect_transitions(&t).unwrap();
        let d = extract_dual_detailed(&t, &tr, &DualParams::default()).unwrap();
        let rep = check_conformity(&d.mesh, Some(&hull_flags(&t, &d)));
        assert!(rep.is_conforming(), "{cfg:?}: {rep:?}");
        assert_eq!(rep.inverted_elements, 0);
    }
}

#[test]
fn template_floor() {
    let mut worst = [f64::INFINITY; 5];
    for cfg in CONFIGS {
        let t = refined(cfg);
        let tr = detect_transitions(&t).unwrap();
        let d = extract_dual_detailed(&t, &tr, &DualParams::default()).unwrap();
        for h in 0..d.mesh.num_hexes() {
            if let Some(r) = d.hex_record[h] {
                let k = tr[r].kind as usize;
                worst[k] = worst[k].min(d.mesh.quality(h).min_sj);
            }
        }
    }
    let floor = worst.iter().copied().fold(f64::INFINITY, f64::min);
    assert!((floor - 0.258).abs() < 1e-3, "{worst:?}");
    assert_eq!(floor, worst[TransitionKind::Face as usize]);
}

#[test]
fn midpoint_placement_is_worse() {
    let t = refined(&[[1, 1, 1]]);
    let tr = detect_transitions(&t).unwrap();
    let min_template = |p: &DualParams| {
        let d = extract_dual_detailed(&t, &tr, p).unwrap();
        (0..d.mesh.num_hexes())
            .filter(|&h| d.hex_record[h].is_some())
            .map(|h| d.mesh.quality(h).min_sj)
            .fold(1.0, f64::min)
    };
    let mid = min_template(&DualParams::midpoints());
    assert!(mid > 0.0 && mid < 0.2);
}

#[test]
fn record_order_does_not_matter() {
    let t = refined(&[[1, 1, 1], [2, 2, 1]]);
    let tr = detect_transitions(&t).unwrap();
    let a = extract_dual(&t, &tr).unwrap();
    let mut rev = tr.clone();
    rev.reverse();
    let b = extract_dual(&t, &rev).unwrap();
    assert_eq!(a.vertices, b.vertices);
    assert_eq!(a.hexes, b.hexes);
    assert_eq!(a.provenance, b.provenance);
}

#[test]
fn missing_face_record_is_a_lookup_error() {
    let t = refined(&[[1, 1, 1]]);
    let tr: Vec<_> = detect_transitions(&t)
        .unwrap()
        .into_iter()
        .filter(|r| r.kind != TransitionKind::Face)
        .collect();
    assert!(matches!(
        extract_dual(&t, &tr),
        Err(HexError::TemplateLookup(..))
    ));
}

#[test]
fn unbalanced_tree_is_rejected() {
    let mut t = Octree::uniform(8.0, 2);
    let id = t.node_at(2, [1, 1, 1]).unwrap();
    let kids = t.subdivide(id).unwrap();
    t.subdivide(kids[0]).unwrap();
    assert!(matches!(
        detect_transitions(&t),
        Err(HexError::Unbalanced(..))
    ));
}

#[test]
fn untouched_leaves_keep_the_plain_dual() {
    let t = refined(&[[1, 1, 1]]);
    let tr = detect_transitions(&t).unwrap();
    let d = extract_dual_detailed(&t, &tr, &DualParams::default()).unwrap();
    let touched: HashSet<usize> = tr.iter().flat_map(|r| r.leaves.iter().copied()).collect();
    for (v, &l) in d.vertex_leaf.iter().enumerate() {
        if !touched.contains(&l) {
            assert_eq!(d.mesh.vertices[v], t.cell_center(l));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_trees_give_conforming_valid_meshes(seed in any::<u64>()) {
        let t = random_tree(seed, 4);
        let tr = detect_transitions(&t).unwrap();
        let d = extract_dual_detailed(&t, &tr, &DualParams::default()).unwrap();
        let rep = check_conformity(&d.mesh, Some(&hull_flags(&t, &d)));
        prop_assert!(rep.is_conforming(), "{:?}", rep);
        prop_assert_eq!(rep.inverted_elements, 0);
        for (r, n) in tr.iter().zip(per_record_counts(&d, tr.len())) {
            prop_assert_eq!(n, r.kind.hex_count(), "{:?} at {:?}", r.kind, r.anchor);
        }
        let again = extract_dual(&t, &tr).unwrap();
        prop_assert_eq!(&again.hexes, &d.mesh.hexes);
    }
}
