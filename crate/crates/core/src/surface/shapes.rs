//! Procedural closed surfaces used for tests, demos and end-to-end checks.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::geom::Vec3;

pub type Mesh = (Vec<Vec3>, Vec<[usize; 3]>);

/// Icosahedron subdivided `level` times and projected onto a sphere.
pub fn icosphere(level: u32, radius: f64, center: Vec3) -> Mesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec3> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|p| Vec3::new(p[0], p[1], p[2]).normalize())
    .collect();
    let mut tris: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, verts: &mut Vec<Vec3>| -> usize {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(tris.len() * 4);
        for [a, b, c] in tris {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        tris = next;
    }
    let verts = verts.into_iter().map(|p| center + p * radius).collect();
    (verts, tris)
}

/// Torus around the z axis with major radius `major` and tube radius `minor`.
pub fn torus(major: f64, minor: f64, nu: usize, nv: usize) -> Mesh {
    let mut verts = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let u = 2.0 * PI * i as f64 / nu as f64;
        for j in 0..nv {
            let v = 2.0 * PI * j as f64 / nv as f64;
            let r = major + minor * v.cos();
            verts.push(Vec3::new(r * u.cos(), r * u.sin(), minor * v.sin()));
        }
    }
    let idx = |i: usize, j: usize| (i % nu) * nv + (j % nv);
    let mut tris = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            tris.push([a, b, c]);
            tris.push([a, c, d]);
        }
    }
    (verts, tris)
}

/// Axis-aligned box with each face split into an `n x n` grid of quads (two triangles each).
pub fn box_mesh(min: Vec3, max: Vec3, n: usize) -> Mesh {
    let n = n.max(1);
    let mut verts: Vec<Vec3> = Vec::new();
    let mut index: HashMap<[usize; 3], usize> = HashMap::new();
    let mut tris = Vec::new();
    let mut vid = |g: [usize; 3], verts: &mut Vec<Vec3>| -> usize {
        *index.entry(g).or_insert_with(|| {
            let f = |k: usize| g[k] as f64 / n as f64;
            verts.push(Vec3::new(
                min.x + (max.x - min.x) * f(0),
                min.y + (max.y - min.y) * f(1),
                min.z + (max.z - min.z) * f(2),
            ));
            verts.len() - 1
        })
    };
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in [0usize, n] {
            for i in 0..n {
                for j in 0..n {
                    let mut q = [[0usize; 3]; 4];
                    for (k, (di, dj)) in [(0, 0), (1, 0), (1, 1), (0, 1)].iter().enumerate() {
                        q[k][axis] = side;
                        q[k][u] = i + di;
                        q[k][v] = j + dj;
                    }
                    let ids = q.map(|g| vid(g, &mut verts));
                    // (u, v, axis) is right-handed, so this winding faces +axis
                    if side == n {
                        tris.push([ids[0], ids[1], ids[2]]);
                        tris.push([ids[0], ids[2], ids[3]]);
                    } else {
                        tris.push([ids[0], ids[2], ids[1]]);
                        tris.push([ids[0], ids[3], ids[2]]);
                    }
                }
            }
        }
    }
    (verts, tris)
}

/// Unit-radius-style sphere with one vertex pulled out into a sharp spike.
pub fn spiked_sphere(level: u32, radius: f64, spike_height: f64) -> Mesh {
    let (mut verts, tris) = icosphere(level, radius, Vec3::zeros());
    let apex = verts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.z.partial_cmp(&b.1.z).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    verts[apex] *= 1.0 + spike_height / radius;
    (verts, tris)
}

/// Genus-0 lobed blob used as a reduced stand-in for scanned organic models.
pub fn blob(level: u32) -> Mesh {
    let (verts, tris) = icosphere(level, 1.0, Vec3::zeros());
    let verts = verts
        .into_iter()
        .map(|p| {
            let (x, y, z) = (p.x, p.y, p.z);
            let r = 1.0 + 0.25 * (2.0 * x).sin() * (1.5 * y).cos() + 0.18 * z * z
                - 0.12 * (3.0 * y).sin() * x;
            Vec3::new(1.15 * x, 0.9 * y, 0.8 * z) * r
        })
        .collect();
    (verts, tris)
}
