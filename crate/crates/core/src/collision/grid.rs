//! Uniform grid over axis-aligned boxes. The grid only prunes candidates; every
//! query evaluates exact geometry on the survivors.

use nalgebra::Vector3;

const MAX_CELLS_PER_AXIS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl Aabb {
    pub fn empty() -> Self {
        Self {
            min: Vector3::repeat(f64::INFINITY),
            max: Vector3::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vector3<f64>>) -> Self {
        points.into_iter().fold(Self::empty(), |mut acc, p| {
            acc.min = acc.min.inf(p);
            acc.max = acc.max.sup(p);
            acc
        })
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }

    pub fn extent(&self) -> Vector3<f64> {
        self.max - self.min
    }
}

#[derive(Debug, Clone)]
pub struct UniformGrid {
    origin: Vector3<f64>,
    cell: f64,
    dims: [usize; 3],
    cells: Vec<Vec<u32>>,
}

impl UniformGrid {
    pub fn build(boxes: &[Aabb]) -> Self {
        let bounds = boxes.iter().fold(Aabb::empty(), |acc, b| acc.union(b));
        let extent = bounds.extent();
        let largest = extent.max();
        let per_axis = ((2.0 * boxes.len() as f64).cbrt().round() as usize).clamp(1, MAX_CELLS_PER_AXIS);
        let cell = if largest > 0.0 { largest / per_axis as f64 } else { 1.0 };
        let dims = [0, 1, 2].map(|a| ((extent[a] / cell).ceil() as usize).clamp(1, MAX_CELLS_PER_AXIS));
        let mut grid = Self {
            origin: bounds.min,
            cell,
            dims,
            cells: vec![Vec::new(); dims[0] * dims[1] * dims[2]],
        };
        let pad = 1e-9 * (1.0 + largest);
        for (id, b) in boxes.iter().enumerate() {
            let lo = grid.clamped(&(b.min - Vector3::repeat(pad)));
            let hi = grid.clamped(&(b.max + Vector3::repeat(pad)));
            for x in lo[0]..=hi[0] {
                for y in lo[1]..=hi[1] {
                    for z in lo[2]..=hi[2] {
                        let idx = grid.flat([x, y, z]);
                        grid.cells[idx].push(id as u32);
                    }
                }
            }
        }
        grid
    }

    fn flat(&self, c: [usize; 3]) -> usize {
        (c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]
    }

    fn raw_coord(&self, p: &Vector3<f64>, axis: usize) -> f64 {
        ((p[axis] - self.origin[axis]) / self.cell).floor()
    }

    /// Cell containing `p`, clamped into the grid.
    pub fn clamped(&self, p: &Vector3<f64>) -> [usize; 3] {
        [0, 1, 2].map(|a| {
            let c = self.raw_coord(p, a);
            if c.is_nan() || c < 0.0 {
                0
            } else {
                (c as usize).min(self.dims[a] - 1)
            }
        })
    }

    pub fn items(&self, c: [usize; 3]) -> &[u32] {
        &self.cells[self.flat(c)]
    }

    /// Items whose cells are visited by the ray `origin + t * dir`, `t >= 0`,
    /// sorted and deduplicated. `origin` must lie inside the grid bounds.
    pub fn ray_candidates(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Vec<u32> {
        let mut cell = self.clamped(origin).map(|c| c as i64);
        let mut step = [0i64; 3];
        let mut t_max = [f64::INFINITY; 3];
        let mut t_delta = [f64::INFINITY; 3];
        for a in 0..3 {
            if dir[a] > 0.0 {
                step[a] = 1;
                let boundary = self.origin[a] + (cell[a] + 1) as f64 * self.cell;
                t_max[a] = (boundary - origin[a]) / dir[a];
                t_delta[a] = self.cell / dir[a];
            } else if dir[a] < 0.0 {
                step[a] = -1;
                let boundary = self.origin[a] + cell[a] as f64 * self.cell;
                t_max[a] = (boundary - origin[a]) / dir[a];
                t_delta[a] = -self.cell / dir[a];
            }
        }
        let mut out = Vec::new();
        loop {
            out.extend_from_slice(self.items(cell.map(|c| c as usize)));
            let axis = if t_max[0] <= t_max[1] && t_max[0] <= t_max[2] {
                0
            } else if t_max[1] <= t_max[2] {
                1
            } else {
                2
            };
            if !t_max[axis].is_finite() {
                break;
            }
            cell[axis] += step[axis];
            if cell[axis] < 0 || cell[axis] >= self.dims[axis] as i64 {
                break;
            }
            t_max[axis] += t_delta[axis];
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Exact nearest item under `sq_dist`, ties broken by lowest id. Returns
    /// `None` only for an empty grid.
    pub fn nearest(&self, p: &Vector3<f64>, mut sq_dist: impl FnMut(u32) -> f64) -> Option<(f64, u32)> {
        let center = self.clamped(p).map(|c| c as i64);
        let mut best: Option<(f64, u32)> = None;
        let max_radius = *self.dims.iter().max().unwrap() as i64;
        for r in 0..=max_radius {
            self.for_each_in_shell(center, r, |id| {
                let d = sq_dist(id);
                let better = match best {
                    None => true,
                    Some((bd, bid)) => d < bd || (d == bd && id < bid),
                };
                if better {
                    best = Some((d, id));
                }
            });
            let covered = (0..3).all(|a| center[a] - r <= 0 && center[a] + r >= self.dims[a] as i64 - 1);
            if covered {
                break;
            }
            if let Some((bd, _)) = best {
                let bound = self.uncovered_distance(p, center, r);
                if bound > 0.0 && bd < bound * bound {
                    break;
                }
            }
        }
        best
    }

    /// Lower bound on the distance from `p` to any cell outside the cube of
    /// cells within Chebyshev radius `r` of `center`.
    fn uncovered_distance(&self, p: &Vector3<f64>, center: [i64; 3], r: i64) -> f64 {
        let mut bound = f64::INFINITY;
        for a in 0..3 {
            if center[a] - r > 0 {
                let lo = self.origin[a] + (center[a] - r) as f64 * self.cell;
                bound = bound.min(p[a] - lo);
            }
            if center[a] + r < self.dims[a] as i64 - 1 {
                let hi = self.origin[a] + (center[a] + r + 1) as f64 * self.cell;
                bound = bound.min(hi - p[a]);
            }
        }
        bound
    }

    fn for_each_in_shell(&self, center: [i64; 3], r: i64, mut f: impl FnMut(u32)) {
        let range = |a: usize| (center[a] - r).max(0)..=(center[a] + r).min(self.dims[a] as i64 - 1);
        for z in range(2) {
            for y in range(1) {
                for x in range(0) {
                    let on_shell =
                        (x - center[0]).abs() == r || (y - center[1]).abs() == r || (z - center[2]).abs() == r;
                    if on_shell {
                        for &id in self.items([x as usize, y as usize, z as usize]) {
                            f(id);
                        }
                    }
                }
            }
        }
    }
}
