//! Uniform-grid triangle index used for closest-point and ray queries.

use crate::geom::{Aabb, Vec3};

#[derive(Debug, Clone)]
pub struct TriangleGrid {
    origin: Vec3,
    cell: f64,
    dims: [usize; 3],
    // CSR layout: cell -> triangle ids
    starts: Vec<usize>,
    items: Vec<usize>,
}

impl TriangleGrid {
    pub fn build(vertices: &[Vec3], triangles: &[[usize; 3]], cell_size: f64) -> Self {
        let mut bb = Aabb::from_points(vertices.iter());
        let pad = cell_size * 0.5;
        bb.min -= Vec3::repeat(pad);
        bb.max += Vec3::repeat(pad);
        let ext = bb.extent();
        let dims = [0, 1, 2].map(|i| ((ext[i] / cell_size).ceil() as usize).clamp(1, 512));
        let cell = (0..3).map(|i| ext[i] / dims[i] as f64).fold(0.0, f64::max);
        let ncell = dims[0] * dims[1] * dims[2];
        let mut grid = Self {
            origin: bb.min,
            cell,
            dims,
            starts: vec![0; ncell + 1],
            items: Vec::new(),
        };

        let ranges: Vec<([usize; 3], [usize; 3])> = triangles
            .iter()
            .map(|t| {
                let tb = Aabb::from_points(t.iter().map(|&i| &vertices[i]));
                (grid.cell_of(&tb.min), grid.cell_of(&tb.max))
            })
            .collect();
        for (lo, hi) in &ranges {
            for k in lo[2]..=hi[2] {
                for j in lo[1]..=hi[1] {
                    for i in lo[0]..=hi[0] {
                        let c = grid.flat([i, j, k]);
                        grid.starts[c + 1] += 1;
                    }
                }
            }
        }
        for c in 0..ncell {
            grid.starts[c + 1] += grid.starts[c];
        }
        let mut fill = grid.starts.clone();
        grid.items = vec![0; grid.starts[ncell]];
        for (t, (lo, hi)) in ranges.iter().enumerate() {
            for k in lo[2]..=hi[2] {
                for j in lo[1]..=hi[1] {
                    for i in lo[0]..=hi[0] {
                        let c = grid.flat([i, j, k]);
                        grid.items[fill[c]] = t;
                        fill[c] += 1;
                    }
                }
            }
        }
        grid
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::new(
            self.origin,
            self.origin
                + Vec3::new(
                    self.dims[0] as f64,
                    self.dims[1] as f64,
                    self.dims[2] as f64,
                ) * self.cell,
        )
    }

    fn flat(&self, c: [usize; 3]) -> usize {
        (c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]
    }

    /// Cell containing `p`, clamped into the grid.
    pub fn cell_of(&self, p: &Vec3) -> [usize; 3] {
        [0, 1, 2].map(|i| {
            let f = ((p[i] - self.origin[i]) / self.cell).floor();
            if f < 0.0 {
                0
            } else {
                (f as usize).min(self.dims[i] - 1)
            }
        })
    }

    pub fn cell_items(&self, c: [usize; 3]) -> &[usize] {
        let f = self.flat(c);
        &self.items[self.starts[f]..self.starts[f + 1]]
    }

    pub fn cell_box(&self, c: [usize; 3]) -> Aabb {
        let lo = self.origin + Vec3::new(c[0] as f64, c[1] as f64, c[2] as f64) * self.cell;
        Aabb::new(lo, lo + Vec3::repeat(self.cell))
    }

    /// Visit every cell overlapping `bx`.
    pub fn for_cells_in_box(&self, bx: &Aabb, mut f: impl FnMut([usize; 3])) {
        if !bx.intersects(&self.bounds()) {
            return;
        }
        let lo = self.cell_of(&bx.min);
        let hi = self.cell_of(&bx.max);
        for k in lo[2]..=hi[2] {
            for j in lo[1]..=hi[1] {
                for i in lo[0]..=hi[0] {
                    f([i, j, k]);
                }
            }
        }
    }

    /// Cells visited by the ray `origin + t dir` (3D DDA), in order, with the entry parameter of each.
    pub fn walk_ray(
        &self,
        origin: &Vec3,
        dir: &Vec3,
        mut visit: impl FnMut([usize; 3], f64) -> bool,
    ) {
        let b = self.bounds();
        // clip ray against the grid box
        let mut t0: f64 = 0.0;
        let mut t1 = f64::INFINITY;
        for i in 0..3 {
            if dir[i].abs() < 1e-300 {
                if origin[i] < b.min[i] || origin[i] > b.max[i] {
                    return;
                }
            } else {
                let a = (b.min[i] - origin[i]) / dir[i];
                let c = (b.max[i] - origin[i]) / dir[i];
                t0 = t0.max(a.min(c));
                t1 = t1.min(a.max(c));
            }
        }
        if t0 > t1 {
            return;
        }
        let start = origin + dir * t0;
        let mut cell = self.cell_of(&start);
        let mut step = [0i64; 3];
        let mut t_max = [f64::INFINITY; 3];
        let mut t_delta = [f64::INFINITY; 3];
        for i in 0..3 {
            if dir[i] > 0.0 {
                step[i] = 1;
                let edge = self.origin[i] + (cell[i] + 1) as f64 * self.cell;
                t_max[i] = (edge - origin[i]) / dir[i];
                t_delta[i] = self.cell / dir[i];
            } else if dir[i] < 0.0 {
                step[i] = -1;
                let edge = self.origin[i] + cell[i] as f64 * self.cell;
                t_max[i] = (edge - origin[i]) / dir[i];
                t_delta[i] = -self.cell / dir[i];
            }
        }
        let mut t_enter = t0;
        loop {
            if !visit(cell, t_enter) {
                return;
            }
            let axis = if t_max[0] <= t_max[1] && t_max[0] <= t_max[2] {
                0
            } else if t_max[1] <= t_max[2] {
                1
            } else {
                2
            };
            let next = cell[axis] as i64 + step[axis];
            if next < 0 || next >= self.dims[axis] as i64 || t_max[axis] > t1 {
                return;
            }
            cell[axis] = next as usize;
            t_enter = t_max[axis];
            t_max[axis] += t_delta[axis];
        }
    }
}
