//! Tether contact chain.
//!
//! The tether runs from the reel (contact 0) through a stack of contact
//! points where it bends around obstacle edges, then on to the vehicle.
//! Contacts are frozen once placed. A new one is planned when the vehicle
//! leaves line-of-sight of the last contact, and the last one is relaxed as
//! soon as the contact before it sees the vehicle again.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{position_control, KinematicsError, TetherCoords};
use crate::workspace::{VoxelGrid, WorkspaceError, WorldPoint};

#[derive(Debug, Error)]
pub enum TetherError {
    #[error("vehicle coincides with the last contact point")]
    Degenerate,
    #[error("tether entangled near ({x:.3}, {y:.3}, {z:.3}): no obstacle edge vertex can carry a contact")]
    Entanglement { x: f64, y: f64, z: f64 },
    #[error("tether contact required near ({x:.3}, {y:.3}, {z:.3}) but contacts are not allowed")]
    ContactsForbidden { x: f64, y: f64, z: f64 },
    #[error("initial tether segment from the reel to the vehicle is obstructed")]
    ObstructedStart,
    #[error(transparent)]
    Workspace(#[from] WorkspaceError),
}

impl From<KinematicsError> for TetherError {
    fn from(_: KinematicsError) -> Self {
        TetherError::Degenerate
    }
}

/// Reel, contact points and vehicle position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TetherConfig {
    contacts: Vec<WorldPoint>,
    vehicle: WorldPoint,
}

impl TetherConfig {
    /// Straight tether from the reel to the vehicle.
    pub fn new(reel: WorldPoint, vehicle: WorldPoint) -> Self {
        TetherConfig { contacts: vec![reel], vehicle }
    }

    /// Chain with explicit contacts; `contacts[0]` is the reel.
    pub fn with_contacts(contacts: Vec<WorldPoint>, vehicle: WorldPoint) -> Option<Self> {
        if contacts.is_empty() {
            return None;
        }
        Some(TetherConfig { contacts, vehicle })
    }

    pub fn reel(&self) -> WorldPoint {
        self.contacts[0]
    }

    /// All contacts including the reel.
    pub fn contacts(&self) -> &[WorldPoint] {
        &self.contacts
    }

    /// Number of contacts excluding the reel.
    pub fn contact_count(&self) -> usize {
        self.contacts.len() - 1
    }

    pub fn vehicle(&self) -> WorldPoint {
        self.vehicle
    }

    pub fn last_contact(&self) -> WorldPoint {
        *self.contacts.last().expect("chain always holds the reel")
    }

    /// Length wrapped from the reel to the last contact.
    pub fn static_length(&self) -> f64 {
        self.contacts.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    /// Free segment from the last contact to the vehicle.
    pub fn effective_length(&self) -> f64 {
        (self.vehicle - self.last_contact()).norm()
    }

    /// Length, elevation and azimuth of the vehicle seen from the last contact.
    pub fn effective_coords(&self) -> Result<TetherCoords, TetherError> {
        let rel = WorldPoint::from(self.vehicle - self.last_contact());
        match position_control(&rel) {
            Ok(c) => Ok(c),
            Err(KinematicsError::AtOrigin) => Err(TetherError::Degenerate),
            Err(e) => Err(e.into()),
        }
    }

    /// Final position setpoint: effective angles, total deployed length.
    pub fn commanded_coords(&self) -> Result<TetherCoords, TetherError> {
        let eff = self.effective_coords()?;
        Ok(TetherCoords { length: eff.length + self.static_length(), ..eff })
    }

    /// Total deployed length; defined even when the vehicle sits on the last contact.
    pub fn commanded_length(&self) -> f64 {
        self.static_length() + self.effective_length()
    }

    /// Every consecutive chain segment, ending at the vehicle.
    pub fn segments(&self) -> impl Iterator<Item = (WorldPoint, WorldPoint)> + '_ {
        self.contacts
            .iter()
            .cloned()
            .zip(self.contacts.iter().skip(1).cloned().chain(std::iter::once(self.vehicle)))
    }

    /// True when every chain segment has line-of-sight in `grid`.
    pub fn is_taut_feasible(&self, grid: &VoxelGrid) -> Result<bool, WorkspaceError> {
        for (a, b) in self.segments() {
            if !grid.line_of_sight(&a, &b)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Plans and relaxes contacts against one occupancy grid.
///
/// The obstacle-surface vertices are computed once, so a planner can be
/// shared across many replays of the same map.
#[derive(Clone, Debug)]
pub struct ContactPlanner<'g> {
    grid: &'g VoxelGrid,
    surface: Vec<WorldPoint>,
    allow_contacts: bool,
}

const BISECTION_STEPS: usize = 48;

impl<'g> ContactPlanner<'g> {
    pub fn new(grid: &'g VoxelGrid) -> Self {
        let surface = grid.surface_vertices().into_iter().map(|v| grid.vertex_position(v)).collect();
        ContactPlanner { grid, surface, allow_contacts: true }
    }

    /// Forbid contacts: any motion that would need one fails.
    pub fn allow_contacts(mut self, allow: bool) -> Self {
        self.allow_contacts = allow;
        self
    }

    pub fn grid(&self) -> &VoxelGrid {
        self.grid
    }

    /// Straight tether from `reel` to `vehicle`, checked for line-of-sight.
    pub fn start(&self, reel: WorldPoint, vehicle: WorldPoint) -> Result<TetherConfig, TetherError> {
        if !self.grid.line_of_sight(&reel, &vehicle)? {
            return Err(TetherError::ObstructedStart);
        }
        Ok(TetherConfig::new(reel, vehicle))
    }

    /// Move the vehicle to `new_vehicle`, relaxing then planning contacts.
    pub fn update(&self, t: &TetherConfig, new_vehicle: WorldPoint) -> Result<TetherConfig, TetherError> {
        let grid = self.grid;
        let mut contacts = t.contacts.clone();
        while contacts.len() >= 2 && grid.line_of_sight(&contacts[contacts.len() - 2], &new_vehicle)? {
            contacts.pop();
        }
        let last = *contacts.last().unwrap();
        if !grid.line_of_sight(&last, &new_vehicle)? {
            let contact = self.plan_contact(&last, &t.vehicle, &new_vehicle)?;
            contacts.push(contact);
        }
        Ok(TetherConfig { contacts, vehicle: new_vehicle })
    }

    /// Replay a sequence of vehicle positions from `start`.
    pub fn replay(&self, start: &TetherConfig, points: &[WorldPoint]) -> Result<Vec<TetherConfig>, TetherError> {
        let mut out = Vec::with_capacity(points.len());
        let mut cur = start.clone();
        for p in points {
            cur = self.update(&cur, *p)?;
            out.push(cur.clone());
        }
        Ok(out)
    }

    /// Contact for a tether anchored at `anchor` swept from `from` (visible)
    /// to `to` (hidden).
    fn plan_contact(&self, anchor: &WorldPoint, from: &WorldPoint, to: &WorldPoint) -> Result<WorldPoint, TetherError> {
        let grid = self.grid;
        // last visible / first hidden vehicle position along the step
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let along = |s: f64| from + (to - from) * s;
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if grid.line_of_sight(anchor, &along(mid))? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let hidden = along(hi);
        // where the tether leaves the last obstacle it cuts through; for a
        // tether sliding off a face this is the far edge of that face
        let mut graze = None;
        grid.walk_segment(anchor, &hidden, |_, t1, blocked| {
            if blocked {
                graze = Some(anchor + (hidden - anchor) * t1);
            }
            false
        });
        let graze = graze.unwrap_or(hidden);
        if !self.allow_contacts {
            return Err(TetherError::ContactsForbidden { x: graze.x, y: graze.y, z: graze.z });
        }

        let reach = 2.0 * 3f64.sqrt() * grid.resolution();
        let mut candidates: Vec<(f64, f64, WorldPoint)> = self
            .surface
            .iter()
            .filter(|v| (*v - graze).norm() <= reach && (*v - anchor).norm() > 0.0)
            .map(|v| ((v - graze).norm(), (v - anchor).norm() + (to - v).norm(), *v))
            .collect();
        candidates.sort_by(|a, b| {
            a.0.total_cmp(&b.0)
                .then(a.1.total_cmp(&b.1))
                .then_with(|| lex(&a.2, &b.2))
        });
        for (_, _, v) in candidates {
            if (to - v).norm() > 0.0 && grid.line_of_sight(anchor, &v)? && grid.line_of_sight(&v, to)? {
                return Ok(v);
            }
        }
        Err(TetherError::Entanglement { x: graze.x, y: graze.y, z: graze.z })
    }
}

fn lex(a: &WorldPoint, b: &WorldPoint) -> std::cmp::Ordering {
    a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)).then(a.z.total_cmp(&b.z))
}

/// One-shot contact update; builds a [`ContactPlanner`] for `grid`.
pub fn update_contacts(t: &TetherConfig, new_vehicle: WorldPoint, grid: &VoxelGrid) -> Result<TetherConfig, TetherError> {
    ContactPlanner::new(grid).update(t, new_vehicle)
}

/// One line of an exported tether trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    pub vehicle: [f64; 3],
    pub contacts: Vec<[f64; 3]>,
    pub l_sta: f64,
    pub l_eff: f64,
    pub theta_eff: Option<f64>,
    pub phi_eff: Option<f64>,
}

impl TraceRecord {
    pub fn from_config(step: usize, t: &TetherConfig) -> Self {
        let eff = t.effective_coords().ok();
        TraceRecord {
            step,
            vehicle: to_array(&t.vehicle),
            contacts: t.contacts.iter().map(to_array).collect(),
            l_sta: t.static_length(),
            l_eff: t.effective_length(),
            theta_eff: eff.map(|c| c.theta),
            phi_eff: eff.map(|c| c.phi),
        }
    }
}

fn to_array(p: &WorldPoint) -> [f64; 3] {
    [p.x, p.y, p.z]
}

/// Line-delimited JSON trace, one record per configuration.
pub fn write_trace(configs: &[TetherConfig]) -> String {
    let mut out = String::new();
    for (i, t) in configs.iter().enumerate() {
        out.push_str(&serde_json::to_string(&TraceRecord::from_config(i, t)).expect("trace record serializes"));
        out.push('\n');
    }
    out
}
