use crate::geom::Vec3;

/// Uniform voxel grid over droplet cluster centres, rebuilt every frame.
///
/// Each cluster is registered in every cell overlapped by a cube of
/// half-size `inflate` around its centre, so a ray only needs to visit the
/// cells it crosses to find every cluster whose beam footprint it can touch.
#[derive(Debug, Clone)]
pub struct ClusterGrid {
    min: Vec3,
    cell: f64,
    dims: [usize; 3],
    starts: Vec<u32>,
    items: Vec<u32>,
}

const MAX_CELLS: usize = 1 << 22;

impl ClusterGrid {
    pub fn empty() -> Self {
        Self {
            min: Vec3::zeros(),
            cell: 1.0,
            dims: [0, 0, 0],
            starts: vec![0],
            items: Vec::new(),
        }
    }

    pub fn build(centres: &[Vec3], inflate: f64, cell: f64) -> Self {
        if centres.is_empty() {
            return Self::empty();
        }
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for c in centres {
            lo = lo.inf(c);
            hi = hi.sup(c);
        }
        lo -= Vec3::repeat(inflate);
        hi += Vec3::repeat(inflate);

        let mut cell = cell;
        let dims = loop {
            let d = [0, 1, 2].map(|i| (((hi[i] - lo[i]) / cell).ceil() as usize).max(1));
            if d[0] * d[1] * d[2] <= MAX_CELLS {
                break d;
            }
            cell *= 2.0;
        };

        let n_cells = dims[0] * dims[1] * dims[2];
        let range_of = |p: &Vec3| {
            let a = [0, 1, 2].map(|i| Self::axis_index(p[i] - inflate, lo[i], cell, dims[i]));
            let b = [0, 1, 2].map(|i| Self::axis_index(p[i] + inflate, lo[i], cell, dims[i]));
            (a, b)
        };

        let mut counts = vec![0u32; n_cells + 1];
        for p in centres {
            let (a, b) = range_of(p);
            for z in a[2]..=b[2] {
                for y in a[1]..=b[1] {
                    for x in a[0]..=b[0] {
                        counts[(z * dims[1] + y) * dims[0] + x + 1] += 1;
                    }
                }
            }
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let starts = counts;
        let mut cursor = starts.clone();
        let mut items = vec![0u32; *starts.last().unwrap() as usize];
        for (idx, p) in centres.iter().enumerate() {
            let (a, b) = range_of(p);
            for z in a[2]..=b[2] {
                for y in a[1]..=b[1] {
                    for x in a[0]..=b[0] {
                        let c = (z * dims[1] + y) * dims[0] + x;
                        items[cursor[c] as usize] = idx as u32;
                        cursor[c] += 1;
                    }
                }
            }
        }
        Self {
            min: lo,
            cell,
            dims,
            starts,
            items,
        }
    }

    fn axis_index(v: f64, lo: f64, cell: f64, n: usize) -> usize {
        (((v - lo) / cell).floor().max(0.0) as usize).min(n - 1)
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    fn cell_items(&self, x: usize, y: usize, z: usize) -> &[u32] {
        let c = (z * self.dims[1] + y) * self.dims[0] + x;
        &self.items[self.starts[c] as usize..self.starts[c + 1] as usize]
    }

    /// Visit the items of every cell crossed by the segment
    /// `origin + t·dir`, `t ∈ [0, t_max]`, in traversal order. Items may
    /// repeat across cells.
    pub fn traverse(&self, origin: Vec3, dir: Vec3, t_max: f64, mut visit: impl FnMut(u32)) {
        if self.is_empty() || !(t_max > 0.0) {
            return;
        }
        let hi = self.min + Vec3::new(
            self.dims[0] as f64 * self.cell,
            self.dims[1] as f64 * self.cell,
            self.dims[2] as f64 * self.cell,
        );
        let mut t0 = 0.0f64;
        let mut t1 = t_max;
        for i in 0..3 {
            if dir[i].abs() < 1e-15 {
                if origin[i] < self.min[i] || origin[i] > hi[i] {
                    return;
                }
                continue;
            }
            let inv = 1.0 / dir[i];
            let mut a = (self.min[i] - origin[i]) * inv;
            let mut b = (hi[i] - origin[i]) * inv;
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            t0 = t0.max(a);
            t1 = t1.min(b);
            if t0 > t1 {
                return;
            }
        }

        let start = origin + dir * t0;
        let mut idx = [0usize; 3];
        let mut step = [0isize; 3];
        let mut t_next = [f64::INFINITY; 3];
        let mut t_delta = [f64::INFINITY; 3];
        for i in 0..3 {
            idx[i] = Self::axis_index(start[i], self.min[i], self.cell, self.dims[i]);
            if dir[i] > 1e-15 {
                step[i] = 1;
                let boundary = self.min[i] + (idx[i] + 1) as f64 * self.cell;
                t_next[i] = t0 + (boundary - start[i]) / dir[i];
                t_delta[i] = self.cell / dir[i];
            } else if dir[i] < -1e-15 {
                step[i] = -1;
                let boundary = self.min[i] + idx[i] as f64 * self.cell;
                t_next[i] = t0 + (boundary - start[i]) / dir[i];
                t_delta[i] = -self.cell / dir[i];
            }
        }

        loop {
            for &item in self.cell_items(idx[0], idx[1], idx[2]) {
                visit(item);
            }
            let axis = if t_next[0] <= t_next[1] && t_next[0] <= t_next[2] {
                0
            } else if t_next[1] <= t_next[2] {
                1
            } else {
                2
            };
            if t_next[axis] > t1 {
                break;
            }
            let next = idx[axis] as isize + step[axis];
            if next < 0 || next as usize >= self.dims[axis] {
                break;
            }
            idx[axis] = next as usize;
            t_next[axis] += t_delta[axis];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force(centres: &[Vec3], origin: Vec3, dir: Vec3, t_max: f64, radius: f64) -> Vec<u32> {
        centres
            .iter()
            .enumerate()
            .filter(|(_, c)| {
                let t = (*c - origin).dot(&dir);
                if t < 0.0 || t > t_max {
                    return false;
                }
                let perp = ((*c - origin) - dir * t).norm();
                perp <= radius
            })
            .map(|(i, _)| i as u32)
            .collect()
    }

    #[test]
    fn empty_grid_visits_nothing() {
        let g = ClusterGrid::build(&[], 0.1, 1.0);
        let mut n = 0;
        g.traverse(Vec3::zeros(), Vec3::x(), 100.0, |_| n += 1);
        assert_eq!(n, 0);
    }

    proptest! {
        #[test]
        fn traversal_finds_every_cluster_near_the_ray(
            pts in prop::collection::vec((-20.0f64..20.0, -20.0f64..20.0, 0.0f64..4.0), 1..200),
            az in 0.0f64..std::f64::consts::TAU,
            el in -0.4f64..0.1,
        ) {
            let centres: Vec<Vec3> = pts.iter().map(|&(x, y, z)| Vec3::new(x, y, z)).collect();
            let radius = 0.5;
            let grid = ClusterGrid::build(&centres, radius, 1.0);
            let origin = Vec3::new(0.0, 0.0, 2.0);
            let dir = Vec3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin());
            let mut seen = Vec::new();
            grid.traverse(origin, dir, 40.0, |i| seen.push(i));
            seen.sort_unstable();
            seen.dedup();
            for i in brute_force(&centres, origin, dir, 40.0, radius) {
                prop_assert!(seen.binary_search(&i).is_ok(), "missed cluster {}", i);
            }
        }
    }
}
