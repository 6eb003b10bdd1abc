//! Jacobian and scaled Jacobian of a trilinear hex, sampled at the 8 corners and the body center.

use crate::geom::Vec3;

/// Outgoing edges at each corner, right-handed (VTK hexahedron ordering).
pub const CORNER_EDGES: [[usize; 3]; 8] = [
    [1, 3, 4],
    [2, 0, 5],
    [3, 1, 6],
    [0, 2, 7],
    [7, 5, 0],
    [4, 6, 1],
    [5, 7, 2],
    [6, 4, 3],
];

/// Outward faces (normal by right-hand rule on the listed order).
pub const HEX_FACES: [[usize; 4]; 6] = [
    [0, 3, 2, 1],
    [4, 5, 6, 7],
    [0, 1, 5, 4],
    [2, 3, 7, 6],
    [0, 4, 7, 3],
    [1, 2, 6, 5],
];

pub const HEX_EDGES: [[usize; 2]; 12] = [
    [0, 1],
    [1, 2],
    [2, 3],
    [3, 0],
    [4, 5],
    [5, 6],
    [6, 7],
    [7, 4],
    [0, 4],
    [1, 5],
    [2, 6],
    [3, 7],
];

/// Number of samples: 8 corners then the body center.
pub const SAMPLES: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HexQuality {
    pub jacobians: [f64; SAMPLES],
    pub scaled_jacobians: [f64; SAMPLES],
    pub min_j: f64,
    pub min_sj: f64,
}

/// Coefficients expressing the three sample edge vectors as combinations of the 8 corners.
pub fn sample_coefficients(s: usize) -> [[f64; 8]; 3] {
    let mut c = [[0.0; 8]; 3];
    if s < 8 {
        for (k, &n) in CORNER_EDGES[s].iter().enumerate() {
            c[k][n] += 1.0;
            c[k][s] -= 1.0;
        }
    } else {
        // opposite face-center differences: +x minus -x, +y minus -y, +z minus -z
        let pairs = [
            (HEX_FACES[5], HEX_FACES[4]),
            (HEX_FACES[3], HEX_FACES[2]),
            (HEX_FACES[1], HEX_FACES[0]),
        ];
        for (k, (plus, minus)) in pairs.iter().enumerate() {
            for &v in plus {
                c[k][v] += 0.25;
            }
            for &v in minus {
                c[k][v] -= 0.25;
            }
        }
    }
    c
}

pub fn sample_edges(p: &[Vec3; 8], s: usize) -> [Vec3; 3] {
    if s < 8 {
        CORNER_EDGES[s].map(|n| p[n] - p[s])
    } else {
        let fc = |f: [usize; 4]| (p[f[0]] + p[f[1]] + p[f[2]] + p[f[3]]) * 0.25;
        [
            fc(HEX_FACES[5]) - fc(HEX_FACES[4]),
            fc(HEX_FACES[3]) - fc(HEX_FACES[2]),
            fc(HEX_FACES[1]) - fc(HEX_FACES[0]),
        ]
    }
}

/// Jacobian and scaled Jacobian of one sample; a zero-length edge gives the -1 sentinel.
pub fn sample_quality(e: &[Vec3; 3], scale: f64) -> (f64, f64) {
    let j = e[0].dot(&e[1].cross(&e[2]));
    let l = [e[0].norm(), e[1].norm(), e[2].norm()];
    let tiny = 1e-14 * scale;
    if l.iter().any(|&x| x <= tiny) {
        return (j, -1.0);
    }
    (j, (j / (l[0] * l[1] * l[2])).clamp(-1.0, 1.0))
}

pub fn hex_quality_points(p: &[Vec3; 8]) -> HexQuality {
    let scale = HEX_EDGES
        .iter()
        .map(|e| (p[e[0]] - p[e[1]]).norm())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut jacobians = [0.0; SAMPLES];
    let mut scaled_jacobians = [0.0; SAMPLES];
    for s in 0..SAMPLES {
        let (j, sj) = sample_quality(&sample_edges(p, s), scale);
        jacobians[s] = j;
        scaled_jacobians[s] = sj;
    }
    HexQuality {
        jacobians,
        scaled_jacobians,
        min_j: jacobians.iter().copied().fold(f64::INFINITY, f64::min),
        min_sj: scaled_jacobians
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min),
    }
}

/// Gradient of a sample's J and SJ with respect to its three edge vectors.
pub fn sample_edge_gradients(e: &[Vec3; 3]) -> ([Vec3; 3], [Vec3; 3]) {
    let dj = [e[1].cross(&e[2]), e[2].cross(&e[0]), e[0].cross(&e[1])];
    let j = e[0].dot(&dj[0]);
    let l = [e[0].norm(), e[1].norm(), e[2].norm()];
    let prod = l[0] * l[1] * l[2];
    let sj = j / prod;
    let dsj = [0, 1, 2].map(|k| dj[k] / prod - e[k] * (sj / (l[k] * l[k])));
    (dj, dsj)
}
