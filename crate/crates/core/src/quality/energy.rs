//! The buffer-zone energy E = E_GF - E_SJ - E_J and its analytic gradient.

use crate::dualmesh::HexMesh;
use crate::geom::{closest_point_on_triangle, Vec3};
use crate::surface::TriangleSurface;

use super::buffer::BufferBinding;
use super::metrics::{
    hex_quality_points, sample_coefficients, sample_edge_gradients, sample_edges, SAMPLES,
};

/// Two samples closer than this count as tied for the minimum.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Which quality term a hex feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermKind {
    ScaledJacobian,
    Jacobian,
}

/// Contribution of one hex to the quality part of the energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HexTerm {
    pub kind: TermKind,
    /// Achieving sample (lowest index among ties).
    pub sample: usize,
    /// Another sample lies within [`TIE_TOLERANCE`] of the minimum.
    pub tied: bool,
    /// The minimum itself; the energy receives its negative.
    pub value: f64,
    /// Gradient of `value` with respect to the 8 corners.
    pub grad: [Vec3; 8],
}

fn argmin(v: &[f64; SAMPLES]) -> (usize, bool) {
    let mut best = 0;
    for s in 1..SAMPLES {
        if v[s] < v[best] - TIE_TOLERANCE {
            best = s;
        }
    }
    let tied = (0..SAMPLES).any(|s| s != best && (v[s] - v[best]).abs() <= TIE_TOLERANCE);
    (best, tied)
}

/// The switching rule: the Jacobian term for hexes with a negative Jacobian somewhere, the
/// scaled Jacobian term for the remaining hexes below `eps_sj`, nothing otherwise.
pub fn hex_term(p: &[Vec3; 8], eps_sj: f64) -> Option<HexTerm> {
    let q = hex_quality_points(p);
    let (kind, (sample, tied), value) = if q.min_j < 0.0 {
        (TermKind::Jacobian, argmin(&q.jacobians), q.min_j)
    } else if q.min_sj < eps_sj {
        (
            TermKind::ScaledJacobian,
            argmin(&q.scaled_jacobians),
            q.min_sj,
        )
    } else {
        return None;
    };
    let e = sample_edges(p, sample);
    let (dj, dsj) = sample_edge_gradients(&e);
    // a collapsed edge leaves the scaled Jacobian undefined; follow the Jacobian instead
    let de = match kind {
        TermKind::ScaledJacobian if dsj.iter().all(|g| g.iter().all(|c| c.is_finite())) => dsj,
        _ => dj,
    };
    let c = sample_coefficients(sample);
    let mut grad = [Vec3::zeros(); 8];
    for (i, g) in grad.iter_mut().enumerate() {
        for k in 0..3 {
            *g += de[k] * c[k][i];
        }
    }
    Some(HexTerm {
        kind,
        sample,
        tied,
        value,
        grad,
    })
}

/// Energy components. `total = gf - sj - j`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Energy {
    pub gf: f64,
    pub sj: f64,
    pub j: f64,
    /// Hexes feeding the scaled Jacobian term.
    pub m: usize,
    /// Hexes feeding the Jacobian term.
    pub n: usize,
}

impl Energy {
    pub fn total(&self) -> f64 {
        self.gf - self.sj - self.j
    }
}

/// Closest point of `x` on the cached triangle of a binding.
pub fn fit_target(surface: &TriangleSurface, triangle: usize, x: &Vec3) -> Vec3 {
    let [a, b, c] = surface.triangle_points(triangle);
    closest_point_on_triangle(x, &a, &b, &c)
}

/// Energy and its gradient for every mesh vertex. The fitting targets are the closest points
/// on the cached triangles of `bindings`.
pub fn energy_and_gradient(
    mesh: &HexMesh,
    bindings: &[BufferBinding],
    surface: &TriangleSurface,
    eps_sj: f64,
) -> (Energy, Vec<Vec3>) {
    let mut energy = Energy::default();
    let mut grad = vec![Vec3::zeros(); mesh.vertices.len()];
    for b in bindings {
        let x = mesh.vertices[b.surface_vertex];
        let d = x - fit_target(surface, b.triangle, &x);
        energy.gf += d.norm_squared();
        grad[b.surface_vertex] += d * 2.0;
    }
    for (h, hex) in mesh.hexes.iter().enumerate() {
        let Some(t) = hex_term(&mesh.hex_points(h), eps_sj) else {
            continue;
        };
        match t.kind {
            TermKind::ScaledJacobian => {
                energy.sj += t.value;
                energy.m += 1;
            }
            TermKind::Jacobian => {
                energy.j += t.value;
                energy.n += 1;
            }
        }
        for (k, &v) in hex.iter().enumerate() {
            grad[v] -= t.grad[k];
        }
    }
    (energy, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dualmesh::Provenance;
    use crate::surface::shapes::box_mesh;

    fn cube(origin: Vec3) -> [Vec3; 8] {
        [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(1.0, 0.0, 1.0),
            Vec3::new(1.0, 1.0, 1.0),
            Vec3::new(0.0, 1.0, 1.0),
        ]
        .map(|p| p + origin)
    }

    #[test]
    fn switching_rule() {
        let p = cube(Vec3::zeros());
        assert!(hex_term(&p, 0.5).is_none());
        let mut skew = p;
        skew[6] = Vec3::new(0.1, 0.1, 0.05);
        let t = hex_term(&skew, 0.01).unwrap();
        assert_eq!(t.kind, TermKind::Jacobian);
        assert!(t.value < 0.0);
        let mut sheared = p;
        for v in &mut sheared[4..] {
            v.x += 4.0;
        }
        let q = hex_quality_points(&sheared);
        assert!(q.min_j > 0.0 && q.min_sj < 0.3);
        let t = hex_term(&sheared, 0.3).unwrap();
        assert_eq!(t.kind, TermKind::ScaledJacobian);
        assert_eq!(t.value, q.min_sj);
        assert!(hex_term(&sheared, q.min_sj).is_none());
    }

    #[test]
    fn perfect_mesh_has_zero_gradient() {
        let (v, t) = box_mesh(Vec3::zeros(), Vec3::repeat(1.0), 1);
        let s = TriangleSurface::from_raw(v, t, 1.0 / 0.9).unwrap();
        let lo = s.normalization().to_domain(&Vec3::zeros());
        let mesh = HexMesh {
            vertices: cube(lo).to_vec(),
            hexes: vec![[0, 1, 2, 3, 4, 5, 6, 7]],
            provenance: vec![Provenance::Buffer],
        };
        let bindings: Vec<BufferBinding> = (4..8)
            .map(|v| {
                let cp = s.closest_point(&mesh.vertices[v], None);
                BufferBinding {
                    core_vertex: v - 4,
                    surface_vertex: v,
                    point: cp.point,
                    triangle: cp.triangle,
                    hexes: vec![0],
                }
            })
            .collect();
        let (e, g) = energy_and_gradient(&mesh, &bindings, &s, 0.01);
        assert_eq!(e.total(), 0.0);
        assert!(g.iter().all(|g| *g == Vec3::zeros()));

        // lift one top vertex off the top face by d: E = d^2 and the gradient is 2(x - x^s)
        let mut lifted = mesh.clone();
        let d = 0.01;
        lifted.vertices[6].z += d;
        let (e, g) = energy_and_gradient(&lifted, &bindings, &s, 0.01);
        assert!((e.total() - d * d).abs() < 1e-15);
        assert!((g[6] - Vec3::new(0.0, 0.0, 2.0 * d)).norm() < 1e-12);
        assert!(g
            .iter()
            .enumerate()
            .all(|(i, g)| i == 6 || *g == Vec3::zeros()));
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]

        #[test]
        fn gradient_matches_finite_differences(
            jitter in proptest::collection::vec(-0.25f64..0.25, 24),
            eps in 0.3f64..1.0,
        ) {
            let (v, t) = box_mesh(Vec3::zeros(), Vec3::repeat(1.0), 1);
            let s = TriangleSurface::from_raw(v, t, 1.0 / 0.9).unwrap();
            let lo = s.normalization().to_domain(&Vec3::zeros());
            let mut mesh = HexMesh {
                vertices: cube(lo).to_vec(),
                hexes: vec![[0, 1, 2, 3, 4, 5, 6, 7]],
                provenance: vec![Provenance::Buffer],
            };
            for (k, p) in mesh.vertices.iter_mut().enumerate() {
                *p += Vec3::new(jitter[3 * k], jitter[3 * k + 1], jitter[3 * k + 2]);
            }
            let bindings: Vec<BufferBinding> = (4..8)
                .map(|v| {
                    let cp = s.closest_point(&mesh.vertices[v], None);
                    BufferBinding {
                        core_vertex: v - 4,
                        surface_vertex: v,
                        point: cp.point,
                        triangle: cp.triangle,
                        hexes: vec![0],
                    }
                })
                .collect();
            // the minimum must be isolated for E to be differentiable
            let q = mesh.quality(0);
            let vals = if q.min_j < 0.0 { q.jacobians } else { q.scaled_jacobians };
            let mut sorted = vals;
            sorted.sort_by(f64::total_cmp);
            proptest::prop_assume!(sorted[1] - sorted[0] > 1e-3);
            proptest::prop_assume!((q.min_sj - eps).abs() > 1e-3);

            let (_, g) = energy_and_gradient(&mesh, &bindings, &s, eps);
            let h = 1e-6;
            for v in 0..8 {
                for c in 0..3 {
                    let mut plus = mesh.clone();
                    plus.vertices[v][c] += h;
                    let mut minus = mesh.clone();
                    minus.vertices[v][c] -= h;
                    let ep = energy_and_gradient(&plus, &bindings, &s, eps).0.total();
                    let em = energy_and_gradient(&minus, &bindings, &s, eps).0.total();
                    let fd = (ep - em) / (2.0 * h);
                    proptest::prop_assert!(
                        (fd - g[v][c]).abs() < 1e-5 * (1.0 + fd.abs()),
                        "vertex {} axis {}: fd {} analytic {}", v, c, fd, g[v][c]
                    );
                }
            }
        }
    }
}
