//! Voxelized 3-D workspace.
//!
//! A [`VoxelGrid`] is an axis-aligned block of cubic cells. Cell `(0, 0, 0)`
//! has its minimum corner at `origin`; `y` is the vertical axis. Occupancy is
//! a plain boolean per cell and the grid is treated as immutable once it is
//! handed to the planner, so queries can run from many threads at once.

mod io;
mod raycast;

pub use io::{read_binary_grid, read_text_map, write_binary_grid, write_text_map, BINARY_MAGIC};

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// World point, meters.
pub type WorldPoint = Point3<f64>;

/// Default number of isovist rays.
pub const DEFAULT_ISOVIST_RAYS: usize = 64;

/// Default grid resolution (m/cell) used when a map does not state one.
pub const DEFAULT_RESOLUTION: f64 = 0.25;

/// Tolerance, in cell units, for snapping coordinates onto cell boundaries.
pub(crate) const SNAP_EPS: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum WorkspaceError {
    #[error("grid dimensions must be at least 1 in every axis, got {0:?}")]
    InvalidDims([usize; 3]),
    #[error("grid resolution must be positive and finite, got {0}")]
    InvalidResolution(f64),
    #[error("occupancy buffer has {got} cells, expected {expected}")]
    OccupancyLength { expected: usize, got: usize },
    #[error("point ({x}, {y}, {z}) is outside the grid")]
    OutOfBounds { x: f64, y: f64, z: f64 },
    #[error("point ({x}, {y}, {z}) is inside an obstacle")]
    InsideObstacle { x: f64, y: f64, z: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("map format error at line {line}: {message}")]
    TextFormat { line: usize, message: String },
    #[error("binary grid format error: {0}")]
    BinaryFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl WorkspaceError {
    fn out_of_bounds(p: &WorldPoint) -> Self {
        WorkspaceError::OutOfBounds { x: p.x, y: p.y, z: p.z }
    }

    fn inside_obstacle(p: &WorldPoint) -> Self {
        WorkspaceError::InsideObstacle { x: p.x, y: p.y, z: p.z }
    }
}

/// Integer index of a grid cell.
///
/// Ordering is lexicographic on `(x, y, z)`; the planner relies on it for
/// deterministic tie-breaking.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
    pub z: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize, z: usize) -> Self {
        Cell { x, y, z }
    }

    /// Offset between two cells, `other - self`.
    pub fn delta_to(&self, other: &Cell) -> [i64; 3] {
        [
            other.x as i64 - self.x as i64,
            other.y as i64 - self.y as i64,
            other.z as i64 - self.z as i64,
        ]
    }

    /// True when the cells differ by one 26-connected step.
    pub fn is_adjacent(&self, other: &Cell) -> bool {
        let d = self.delta_to(other);
        d != [0, 0, 0] && d.iter().all(|v| v.abs() <= 1)
    }

    pub fn as_array(&self) -> [usize; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[usize; 3]> for Cell {
    fn from(v: [usize; 3]) -> Self {
        Cell::new(v[0], v[1], v[2])
    }
}

/// The 26 neighbor offsets in lexicographic order.
pub const NEIGHBOR_OFFSETS: [[i64; 3]; 26] = {
    let mut out = [[0i64; 3]; 26];
    let mut n = 0;
    let mut dx = -1;
    while dx <= 1 {
        let mut dy = -1;
        while dy <= 1 {
            let mut dz = -1;
            while dz <= 1 {
                if !(dx == 0 && dy == 0 && dz == 0) {
                    out[n] = [dx, dy, dz];
                    n += 1;
                }
                dz += 1;
            }
            dy += 1;
        }
        dx += 1;
    }
    out
};

/// Dense boolean occupancy grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VoxelGrid {
    dims: [usize; 3],
    resolution: f64,
    origin: WorldPoint,
    occupied: Vec<bool>,
    inflation_radius: f64,
}

impl VoxelGrid {
    /// Empty grid.
    pub fn new(dims: [usize; 3], resolution: f64, origin: WorldPoint) -> Result<Self, WorkspaceError> {
        let len = check_shape(dims, resolution)?;
        Ok(VoxelGrid {
            dims,
            resolution,
            origin,
            occupied: vec![false; len],
            inflation_radius: 0.0,
        })
    }

    /// Grid from a row-major (x fastest, then y, then z) occupancy buffer.
    pub fn from_occupancy(
        dims: [usize; 3],
        resolution: f64,
        origin: WorldPoint,
        occupied: Vec<bool>,
    ) -> Result<Self, WorkspaceError> {
        let len = check_shape(dims, resolution)?;
        if occupied.len() != len {
            return Err(WorkspaceError::OccupancyLength { expected: len, got: occupied.len() });
        }
        Ok(VoxelGrid { dims, resolution, origin, occupied, inflation_radius: 0.0 })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> WorldPoint {
        self.origin
    }

    /// Total inflation applied to produce this grid (0 for raw maps).
    pub fn inflation_radius(&self) -> f64 {
        self.inflation_radius
    }

    pub fn cell_count(&self) -> usize {
        self.occupied.len()
    }

    /// Length of the grid's space diagonal, the default query range.
    pub fn diagonal(&self) -> f64 {
        let [nx, ny, nz] = self.dims;
        self.resolution * ((nx * nx + ny * ny + nz * nz) as f64).sqrt()
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occupied
    }

    pub fn index_of(&self, c: &Cell) -> usize {
        c.x + self.dims[0] * (c.y + self.dims[1] * c.z)
    }

    pub fn cell_at_index(&self, i: usize) -> Cell {
        let x = i % self.dims[0];
        let y = (i / self.dims[0]) % self.dims[1];
        let z = i / (self.dims[0] * self.dims[1]);
        Cell::new(x, y, z)
    }

    pub fn in_bounds(&self, c: &Cell) -> bool {
        c.x < self.dims[0] && c.y < self.dims[1] && c.z < self.dims[2]
    }

    /// Occupancy of a signed cell index; anything outside the grid is free.
    pub(crate) fn occupied_signed(&self, i: [i64; 3]) -> bool {
        if i.iter().zip(self.dims.iter()).any(|(&v, &n)| v < 0 || v >= n as i64) {
            return false;
        }
        self.occupied[i[0] as usize + self.dims[0] * (i[1] as usize + self.dims[1] * i[2] as usize)]
    }

    pub fn is_occupied(&self, c: &Cell) -> bool {
        self.in_bounds(c) && self.occupied[self.index_of(c)]
    }

    pub fn is_free(&self, c: &Cell) -> bool {
        self.in_bounds(c) && !self.occupied[self.index_of(c)]
    }

    pub fn set_occupied(&mut self, c: &Cell, value: bool) {
        let i = self.index_of(c);
        self.occupied[i] = value;
    }

    /// Mark the axis-aligned block of cells `[min, max]` (inclusive) occupied.
    pub fn fill_box(&mut self, min: Cell, max: Cell) {
        for z in min.z..=max.z.min(self.dims[2] - 1) {
            for y in min.y..=max.y.min(self.dims[1] - 1) {
                for x in min.x..=max.x.min(self.dims[0] - 1) {
                    self.set_occupied(&Cell::new(x, y, z), true);
                }
            }
        }
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.occupied.len()).map(move |i| self.cell_at_index(i))
    }

    pub fn occupied_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.occupied
            .iter()
            .enumerate()
            .filter(|(_, &o)| o)
            .map(move |(i, _)| self.cell_at_index(i))
    }

    pub fn free_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.occupied
            .iter()
            .enumerate()
            .filter(|(_, &o)| !o)
            .map(move |(i, _)| self.cell_at_index(i))
    }

    /// In-bounds 26-neighbors of `c`, in lexicographic offset order.
    pub fn neighbors(&self, c: &Cell) -> impl Iterator<Item = Cell> + '_ {
        let base = [c.x as i64, c.y as i64, c.z as i64];
        NEIGHBOR_OFFSETS.iter().filter_map(move |d| {
            let n = [base[0] + d[0], base[1] + d[1], base[2] + d[2]];
            if n.iter().zip(self.dims.iter()).all(|(&v, &m)| v >= 0 && v < m as i64) {
                Some(Cell::new(n[0] as usize, n[1] as usize, n[2] as usize))
            } else {
                None
            }
        })
    }

    pub fn cell_center(&self, c: &Cell) -> WorldPoint {
        self.origin
            + Vector3::new(c.x as f64 + 0.5, c.y as f64 + 0.5, c.z as f64 + 0.5) * self.resolution
    }

    /// World position of the lattice vertex `(i, j, k)` (cell corners).
    pub fn vertex_position(&self, v: [i64; 3]) -> WorldPoint {
        self.origin + Vector3::new(v[0] as f64, v[1] as f64, v[2] as f64) * self.resolution
    }

    /// Coordinates of `p` in cell units, snapped onto nearby cell boundaries.
    pub(crate) fn to_grid_units(&self, p: &WorldPoint) -> Vector3<f64> {
        let mut u = (p - self.origin) / self.resolution;
        for k in 0..3 {
            let r = u[k].round();
            if (u[k] - r).abs() < SNAP_EPS {
                u[k] = r;
            }
        }
        u
    }

    pub fn contains_point(&self, p: &WorldPoint) -> bool {
        let u = self.to_grid_units(p);
        (0..3).all(|k| u[k] >= 0.0 && u[k] <= self.dims[k] as f64)
    }

    /// Cell containing `p`. Points on the upper boundary map to the last cell.
    pub fn cell_of(&self, p: &WorldPoint) -> Option<Cell> {
        if !self.contains_point(p) {
            return None;
        }
        let u = self.to_grid_units(p);
        let idx = |k: usize| (u[k].floor() as usize).min(self.dims[k] - 1);
        Some(Cell::new(idx(0), idx(1), idx(2)))
    }

    fn require_in_bounds(&self, p: &WorldPoint) -> Result<(), WorkspaceError> {
        if !p.coords.iter().all(|v| v.is_finite()) || !self.contains_point(p) {
            return Err(WorkspaceError::out_of_bounds(p));
        }
        Ok(())
    }

    fn require_free(&self, p: &WorldPoint) -> Result<(), WorkspaceError> {
        self.require_in_bounds(p)?;
        match self.cell_of(p) {
            Some(c) if !self.is_occupied(&c) => Ok(()),
            _ => Err(WorkspaceError::inside_obstacle(p)),
        }
    }

    /// Copy of the grid with every cell whose center lies within `radius` of
    /// an occupied cell center marked occupied.
    pub fn inflate(&self, radius: f64) -> Result<VoxelGrid, WorkspaceError> {
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(WorkspaceError::InvalidArgument(format!("inflation radius {radius}")));
        }
        let mut out = self.clone();
        out.inflation_radius = self.inflation_radius + radius;
        let reach = (radius / self.resolution + SNAP_EPS).floor() as i64;
        if reach == 0 {
            return Ok(out);
        }
        let limit = (radius / self.resolution).powi(2) + SNAP_EPS;
        let mut stamp = Vec::new();
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                for dz in -reach..=reach {
                    if ((dx * dx + dy * dy + dz * dz) as f64) <= limit {
                        stamp.push([dx, dy, dz]);
                    }
                }
            }
        }
        for c in self.occupied_cells() {
            for d in &stamp {
                let n = [c.x as i64 + d[0], c.y as i64 + d[1], c.z as i64 + d[2]];
                if n.iter().zip(self.dims.iter()).all(|(&v, &m)| v >= 0 && v < m as i64) {
                    let idx = out.index_of(&Cell::new(n[0] as usize, n[1] as usize, n[2] as usize));
                    out.occupied[idx] = true;
                }
            }
        }
        Ok(out)
    }

    /// True iff the segment `a -> b` passes through the interior of no
    /// occupied region. Grazing a face, edge or corner of an obstacle does
    /// not block; running along the seam between two occupied cells does.
    pub fn line_of_sight(&self, a: &WorldPoint, b: &WorldPoint) -> Result<bool, WorkspaceError> {
        self.require_in_bounds(a)?;
        self.require_in_bounds(b)?;
        let mut clear = true;
        self.walk_segment(a, b, |_, _, blocked| {
            if blocked {
                clear = false;
            }
            blocked
        });
        Ok(clear)
    }

    /// Euclidean distance from `p` to the nearest occupied cell center,
    /// capped at `max_range` (returned as-is when the grid has no obstacles).
    pub fn distance_to_obstacle(&self, p: &WorldPoint, max_range: f64) -> Result<f64, WorkspaceError> {
        self.require_free(p)?;
        let home = self.cell_of(p).expect("checked in bounds");
        let home = [home.x as i64, home.y as i64, home.z as i64];
        let max_ring = self
            .dims
            .iter()
            .zip(home.iter())
            .map(|(&n, &h)| h.max(n as i64 - 1 - h))
            .max()
            .unwrap_or(0);
        let mut best = f64::INFINITY;
        for ring in 1..=max_ring {
            // every center in this ring is at least (ring - 0.5) cells away
            if best <= (ring as f64 - 0.5) * self.resolution {
                break;
            }
            for_each_ring_cell(home, ring, self.dims, |c| {
                if self.occupied_signed(c) {
                    let center = self.origin
                        + Vector3::new(c[0] as f64 + 0.5, c[1] as f64 + 0.5, c[2] as f64 + 0.5)
                            * self.resolution;
                    best = best.min((center - p).norm());
                }
            });
        }
        Ok(best.min(max_range))
    }

    /// Mean distance to the first occupied cell over `n_rays` directions
    /// spread over the sphere, each ray capped at `max_range`.
    pub fn isovist_visibility(&self, p: &WorldPoint, n_rays: usize, max_range: f64) -> Result<f64, WorkspaceError> {
        if n_rays == 0 {
            return Err(WorkspaceError::InvalidArgument("isovist needs at least one ray".into()));
        }
        if !(max_range > 0.0) {
            return Err(WorkspaceError::InvalidArgument(format!("max range {max_range}")));
        }
        self.require_free(p)?;
        let total: f64 = sphere_directions(n_rays)
            .iter()
            .map(|dir| self.ray_distance(p, dir, max_range))
            .sum();
        Ok(total / n_rays as f64)
    }

    /// Lattice vertices that lie on the obstacle surface: at least one of the
    /// eight cells sharing the vertex is occupied and at least one is free.
    pub fn surface_vertices(&self) -> Vec<[i64; 3]> {
        let [nx, ny, nz] = self.dims.map(|v| v as i64);
        let mut out = Vec::new();
        for k in 0..=nz {
            for j in 0..=ny {
                for i in 0..=nx {
                    let mut occ = 0;
                    for d in 0..8 {
                        let c = [i - 1 + (d & 1), j - 1 + ((d >> 1) & 1), k - 1 + ((d >> 2) & 1)];
                        if self.occupied_signed(c) {
                            occ += 1;
                        }
                    }
                    if occ > 0 && occ < 8 {
                        out.push([i, j, k]);
                    }
                }
            }
        }
        out
    }
}

fn check_shape(dims: [usize; 3], resolution: f64) -> Result<usize, WorkspaceError> {
    if dims.contains(&0) {
        return Err(WorkspaceError::InvalidDims(dims));
    }
    if !(resolution > 0.0) || !resolution.is_finite() {
        return Err(WorkspaceError::InvalidResolution(resolution));
    }
    Ok(dims[0] * dims[1] * dims[2])
}

/// Visit every in-grid cell at Chebyshev distance exactly `ring` from `home`.
fn for_each_ring_cell(home: [i64; 3], ring: i64, dims: [usize; 3], mut f: impl FnMut([i64; 3])) {
    let lo = |k: usize| (-ring).max(-home[k]);
    let hi = |k: usize| ring.min(dims[k] as i64 - 1 - home[k]);
    for dx in lo(0)..=hi(0) {
        for dy in lo(1)..=hi(1) {
            if dx.abs() == ring || dy.abs() == ring {
                for dz in lo(2)..=hi(2) {
                    f([home[0] + dx, home[1] + dy, home[2] + dz]);
                }
            } else {
                for dz in [-ring, ring] {
                    if dz >= lo(2) && dz <= hi(2) {
                        f([home[0] + dx, home[1] + dy, home[2] + dz]);
                    }
                }
            }
        }
    }
}

/// `n` unit vectors spread over the sphere on a golden-angle spiral.
pub fn sphere_directions(n: usize) -> Vec<Vector3<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let y = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - y * y).max(0.0).sqrt();
            let a = golden * i as f64;
            Vector3::new(r * a.sin(), y, r * a.cos())
        })
        .collect()
}
