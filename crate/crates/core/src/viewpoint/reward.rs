use serde::{Deserialize, Serialize};

use super::{Affordance, AffordanceModel, ViewpointError};
use crate::workspace::{Cell, VoxelGrid, WorldPoint};

/// Task position and planar heading (radians, azimuth about +y, 0 along +z).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskPose {
    pub position: [f64; 3],
    pub heading: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RewardField {
    dims: [usize; 3],
    values: Vec<f64>,
    shell: Vec<bool>,
}

impl RewardField {
    pub fn get(&self, grid: &VoxelGrid, c: &Cell) -> f64 {
        debug_assert_eq!(grid.dims(), self.dims);
        self.values[grid.index_of(c)]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Free cells inside the viewpoint shell, in cell order.
    pub fn shell_cells<'a>(&'a self, grid: &'a VoxelGrid) -> impl Iterator<Item = Cell> + 'a {
        (0..self.values.len()).filter(|&i| self.shell[i]).map(|i| grid.cell_at_index(i))
    }

    /// Shell cells with positive reward.
    pub fn rewarding_cells<'a>(&'a self, grid: &'a VoxelGrid) -> impl Iterator<Item = Cell> + 'a {
        self.shell_cells(grid).filter(|c| self.values[grid.index_of(c)] > 0.0)
    }

    /// Multiply every value by `c`; used to check scale behavior downstream.
    pub fn scaled(&self, c: f64) -> RewardField {
        RewardField { dims: self.dims, values: self.values.iter().map(|v| v * c).collect(), shell: self.shell.clone() }
    }
}

/// Project an affordance's manifolds onto the grid. Free cells within one
/// cell of the hemisphere radius, at or above the task height, take the
/// normalized value of the manifold of their nearest viewpoint direction;
/// everything else is 0.
pub fn reward_field(
    models: &[AffordanceModel],
    affordance: Affordance,
    pose: &TaskPose,
    grid: &VoxelGrid,
) -> Result<RewardField, ViewpointError> {
    let model = models
        .iter()
        .find(|m| m.affordance == affordance)
        .ok_or(ViewpointError::MissingAffordance(affordance))?;
    let center = WorldPoint::from(pose.position);
    if !grid.contains_point(&center) {
        return Err(ViewpointError::TaskOutOfBounds(pose.position[0], pose.position[1], pose.position[2]));
    }
    let dirs: Vec<[f64; 3]> = model.viewpoints.iter().map(|v| v.direction(pose.heading)).collect();
    let membership = model.membership();
    let (best, worst) = (model.best_value(), model.worst_value());
    let rho = |v: f64| if worst > best { ((worst - v) / (worst - best)).clamp(0.0, 1.0) } else { 1.0 };

    let res = grid.resolution();
    let mut values = vec![0.0; grid.cell_count()];
    let mut shell = vec![false; grid.cell_count()];
    for c in grid.free_cells() {
        let d = grid.cell_center(&c) - center;
        let r = d.norm();
        if (r - model.radius).abs() > res || d.y < 0.0 || r == 0.0 {
            continue;
        }
        let u = d / r;
        let mut nearest = 0;
        let mut best_dot = f64::NEG_INFINITY;
        for (i, dir) in dirs.iter().enumerate() {
            let dot = u.x * dir[0] + u.y * dir[1] + u.z * dir[2];
            if dot > best_dot {
                best_dot = dot;
                nearest = i;
            }
        }
        let idx = grid.index_of(&c);
        shell[idx] = true;
        values[idx] = rho(model.manifolds[membership[nearest]].value);
    }
    Ok(RewardField { dims: grid.dims(), values, shell })
}
