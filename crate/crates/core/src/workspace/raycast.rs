//! Voxel traversal in the style of Amanatides & Woo.
//!
//! The segment is split at every cell-boundary crossing. Each piece of
//! positive length lies in exactly one cell along the moving axes; along an
//! axis in which the segment does not move and that sits exactly on a cell
//! boundary, the piece touches both neighboring cells and only counts as
//! blocked when all of them are occupied.

use nalgebra::Vector3;

use super::{VoxelGrid, WorldPoint, SNAP_EPS};

impl VoxelGrid {
    /// Walk the segment `a -> b`, calling `visit(t0, t1, blocked)` for every
    /// piece of positive length, with `t` the fraction along the segment.
    /// The walk stops early when `visit` returns `true`.
    pub(crate) fn walk_segment<F>(&self, a: &WorldPoint, b: &WorldPoint, mut visit: F)
    where
        F: FnMut(f64, f64, bool) -> bool,
    {
        let ua = self.to_grid_units(a);
        let ub = self.to_grid_units(b);
        let d = ub - ua;

        let mut idx = [0i64; 3];
        let mut step = [0i64; 3];
        // fixed axes lying on a boundary cover two cell layers
        let mut span = [1i64; 3];
        for k in 0..3 {
            if d[k] > 0.0 {
                step[k] = 1;
                idx[k] = ua[k].floor() as i64;
            } else if d[k] < 0.0 {
                step[k] = -1;
                idx[k] = ua[k].ceil() as i64 - 1;
            } else if ua[k] == ua[k].round() {
                idx[k] = ua[k] as i64 - 1;
                span[k] = 2;
            } else {
                idx[k] = ua[k].floor() as i64;
            }
        }

        let next_crossing = |k: usize, idx: &[i64; 3]| -> f64 {
            match step[k] {
                0 => f64::INFINITY,
                1 => ((idx[k] + 1) as f64 - ua[k]) / d[k],
                _ => (idx[k] as f64 - ua[k]) / d[k],
            }
        };

        let seg_len = d.norm();
        let mut t = 0.0;
        loop {
            let crossings = [next_crossing(0, &idx), next_crossing(1, &idx), next_crossing(2, &idx)];
            let t_next = crossings.iter().cloned().fold(1.0f64, f64::min);
            if (t_next - t) * seg_len > SNAP_EPS {
                let blocked = self.block_occupied(idx, span);
                if visit(t, t_next, blocked) {
                    return;
                }
            }
            if t_next >= 1.0 {
                return;
            }
            for k in 0..3 {
                if crossings[k] <= t_next {
                    idx[k] += step[k];
                }
            }
            t = t_next;
        }
    }

    /// True when every cell of the (up to 2x2x2) block starting at `idx` is occupied.
    fn block_occupied(&self, idx: [i64; 3], span: [i64; 3]) -> bool {
        for dz in 0..span[2] {
            for dy in 0..span[1] {
                for dx in 0..span[0] {
                    if !self.occupied_signed([idx[0] + dx, idx[1] + dy, idx[2] + dz]) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Distance from `p` along unit `dir` to the first occupied cell, capped
    /// at `max_range`. Space outside the grid is treated as open.
    pub(crate) fn ray_distance(&self, p: &WorldPoint, dir: &Vector3<f64>, max_range: f64) -> f64 {
        let reach = self.exit_distance(p, dir).min(max_range);
        if reach <= 0.0 {
            return max_range;
        }
        let end = p + dir * reach;
        let mut hit = None;
        self.walk_segment(p, &end, |t0, _, blocked| {
            if blocked {
                hit = Some(t0 * reach);
            }
            blocked
        });
        hit.unwrap_or(max_range)
    }

    /// Distance from an interior point to the grid boundary along `dir`.
    fn exit_distance(&self, p: &WorldPoint, dir: &Vector3<f64>) -> f64 {
        let lo = self.origin();
        let mut t_exit = f64::INFINITY;
        for k in 0..3 {
            let hi = lo[k] + self.dims()[k] as f64 * self.resolution();
            if dir[k] > 0.0 {
                t_exit = t_exit.min((hi - p[k]) / dir[k]);
            } else if dir[k] < 0.0 {
                t_exit = t_exit.min((lo[k] - p[k]) / dir[k]);
            }
        }
        t_exit.max(0.0)
    }
}
