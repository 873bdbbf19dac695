//! Fixtures shared by the benchmarks.

use tetherplan_core::viewpoint::{load_default_manifolds, reward_field, SamplePoint};
use tetherplan_core::{Affordance, Cell, RewardField, TaskPose, VoxelGrid, WorldPoint};

/// Two full-height boxes in a 24 x 10 x 24 room at 0.25 m, the same layout
/// as the indoor scenario.
pub fn indoor_grid() -> VoxelGrid {
    let mut g = VoxelGrid::new([24, 10, 24], 0.25, WorldPoint::origin()).unwrap();
    g.fill_box(Cell::new(6, 0, 10), Cell::new(11, 9, 13));
    g.fill_box(Cell::new(14, 0, 10), Cell::new(17, 9, 13));
    g
}

pub fn indoor_reel() -> WorldPoint {
    WorldPoint::new(2.25, 0.5, 0.75)
}

pub fn indoor_start() -> Cell {
    Cell::new(9, 2, 3)
}

pub fn indoor_reward(grid: &VoxelGrid) -> RewardField {
    let pose = TaskPose { position: [3.25, 0.25, 4.5], heading: std::f64::consts::PI };
    reward_field(&load_default_manifolds(), Affordance::Manipulability, &pose, grid).unwrap()
}

/// Deterministic spherical samples scattered around a few centers.
pub fn clustered_samples(n: usize) -> Vec<SamplePoint> {
    let centers = [[1.2, 0.3, -2.0, -0.5], [1.8, 1.2, 2.0, 1.5], [1.5, 0.8, 0.0, 0.2]];
    (0..n)
        .map(|i| {
            let c = centers[i % centers.len()];
            let j = (i as f64 * 0.618_033_988_75).fract() - 0.5;
            SamplePoint { r: c[0] + 0.05 * j, theta: c[1] + 0.04 * j, phi: c[2] - 0.06 * j, value: c[3] + 0.1 * j }
        })
        .collect()
}
