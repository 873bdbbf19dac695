//! Minimum-risk search and viewpoint selection.
//!
//! Locale and action risks are history-dependent only through the incoming
//! direction, so the search runs over (cell, incoming direction) states with
//! additive `-ln(1 - r)` edge costs. Tether risks depend on the whole path
//! and are evaluated afterwards by replaying the tether along it.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::risk::{aggregate, locale_risks, step_length, traverse_risks, turn_angle, RiskConfig, RiskError, RiskProfile};
use crate::tether::{ContactPlanner, TetherConfig, TetherError};
use crate::viewpoint::RewardField;
use crate::workspace::{Cell, VoxelGrid, WorkspaceError, WorldPoint, NEIGHBOR_OFFSETS};

/// Utility denominator floor, so risk-free paths stay finite.
pub const UTILITY_RISK_FLOOR: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("cell ({}, {}, {}) is outside the grid", .0.x, .0.y, .0.z)]
    OutOfBounds(Cell),
    #[error("cell ({}, {}, {}) is occupied", .0.x, .0.y, .0.z)]
    Occupied(Cell),
    #[error("no path from ({}, {}, {}) to ({}, {}, {})", .start.x, .start.y, .start.z, .goal.x, .goal.y, .goal.z)]
    Unreachable { start: Cell, goal: Cell },
    #[error("no candidate has positive reward")]
    NoRewardingCandidate,
    #[error("no candidate is reachable: {}", format_cells(.0))]
    NoReachableCandidate(Vec<Cell>),
    #[error("no contact-free path to ({}, {}, {})", .0.x, .0.y, .0.z)]
    NoContactFreePath(Cell),
    #[error("densify step must be positive and at most the resolution, got {0}")]
    BadStep(f64),
    #[error("path is not a chain of adjacent free cells")]
    InvalidPath,
    #[error("tether grid differs in shape from the planning grid")]
    GridMismatch,
    #[error(transparent)]
    Tether(#[from] TetherError),
    #[error(transparent)]
    Risk(#[from] RiskError),
    #[error(transparent)]
    Workspace(#[from] WorkspaceError),
}

fn format_cells(cells: &[Cell]) -> String {
    cells.iter().map(|c| format!("({}, {}, {})", c.x, c.y, c.z)).collect::<Vec<_>>().join(", ")
}

/// Heading a state was entered with: an index into [`NEIGHBOR_OFFSETS`],
/// or none at the start.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Incoming {
    Start,
    Direction(u8),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AugmentedState {
    pub cell: Cell,
    pub incoming: Incoming,
}

const DIRS: usize = 27;
const START_DIR: usize = 26;

/// How the reward of a path is collected.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    /// Reward of the goal cell.
    #[default]
    Terminal,
    /// Mean reward over the cells of the path.
    Integrated,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Candidates {
    /// Every shell cell of the reward field with positive reward.
    Auto,
    List(Vec<Cell>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanResult {
    pub path: Vec<Cell>,
    pub waypoints: Vec<WorldPoint>,
    /// Sum of `-ln(1 - r)` over the locale and action risks, as searched.
    pub search_cost: f64,
    /// Per-state risks including tether terms.
    pub profile: RiskProfile,
    pub exact_risk: f64,
    pub reward: f64,
    pub utility: f64,
    /// Tether after every densified vehicle position; the first entry is
    /// the tether at the start cell.
    pub tether: Vec<TetherConfig>,
    /// Index into `tether` of each path cell.
    pub tether_steps: Vec<usize>,
}

impl PlanResult {
    pub fn goal(&self) -> Cell {
        *self.path.last().expect("paths are non-empty")
    }

    /// Tether at the goal.
    pub fn final_tether(&self) -> &TetherConfig {
        self.tether.last().expect("tether trace is non-empty")
    }

    /// Metric path length through cell centers, m.
    pub fn length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }
}

/// Points along the polyline through the centers of `path`, at most `step`
/// apart, including every center.
pub fn densify(grid: &VoxelGrid, path: &[Cell], step: f64) -> Result<Vec<WorldPoint>, PlanError> {
    if !(step > 0.0) || step > grid.resolution() {
        return Err(PlanError::BadStep(step));
    }
    let mut out = Vec::new();
    let Some(first) = path.first() else { return Ok(out) };
    out.push(grid.cell_center(first));
    for w in path.windows(2) {
        let (a, b) = (grid.cell_center(&w[0]), grid.cell_center(&w[1]));
        let n = (((b - a).norm() / step) - 1e-9).ceil().max(1.0) as usize;
        for k in 1..n {
            out.push(a + (b - a) * (k as f64 / n as f64));
        }
        out.push(b);
    }
    Ok(out)
}

/// Best-known way into one augmented state.
#[derive(Clone, Copy)]
struct Label {
    cost: f64,
    length: f64,
    parent: usize,
}

/// Shortest-path tree over augmented states from one start cell.
pub struct SearchTree<'p> {
    planner: &'p Planner<'p>,
    start: Cell,
    labels: Vec<Option<Label>>,
    /// Free cells connected to the start ignoring the contact-free mask;
    /// only kept when contacts are forbidden.
    connected: Option<Vec<bool>>,
}

impl SearchTree<'_> {
    fn cell_of_state(&self, s: usize) -> Cell {
        self.planner.grid.cell_at_index(s / DIRS)
    }

    fn path_to_state(&self, mut s: usize) -> Vec<Cell> {
        let mut rev = vec![self.cell_of_state(s)];
        while let Some(l) = self.labels[s] {
            if l.parent == usize::MAX {
                break;
            }
            s = l.parent;
            rev.push(self.cell_of_state(s));
        }
        rev.reverse();
        rev
    }

    /// Minimum-cost path to `goal` with its search cost, or `None` if the
    /// goal is unreachable.
    pub fn path_to(&self, goal: &Cell) -> Option<(Vec<Cell>, f64)> {
        let grid = self.planner.grid;
        if !grid.in_bounds(goal) {
            return None;
        }
        let base = grid.index_of(goal) * DIRS;
        let mut best: Option<(usize, Label, Vec<Cell>)> = None;
        for s in base..base + DIRS {
            let Some(l) = self.labels[s] else { continue };
            let replace = match &best {
                None => true,
                Some((_, b, bp)) => match key_cmp(&l, b) {
                    Ordering::Less => true,
                    Ordering::Greater => false,
                    Ordering::Equal => self.path_to_state(s) < *bp,
                },
            };
            if replace {
                best = Some((s, l, self.path_to_state(s)));
            }
        }
        best.map(|(_, l, p)| (p, l.cost))
    }

    pub fn start(&self) -> Cell {
        self.start
    }
}

fn key_cmp(a: &Label, b: &Label) -> Ordering {
    a.cost.total_cmp(&b.cost).then(a.length.total_cmp(&b.length))
}

#[derive(PartialEq)]
struct HeapKey(f64, f64, usize);

impl Eq for HeapKey {}

impl PartialOrd for HeapKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.total_cmp(&other.1)).then(self.2.cmp(&other.2))
    }
}

/// Search cost of entering a state: `-ln(1 - r)` summed over its locale and
/// action risks, in that order.
pub fn state_cost(r_obstacle: f64, r_visibility: f64, r_length: f64, r_turn: f64) -> f64 {
    -(1.0 - r_obstacle).ln() - (1.0 - r_visibility).ln() - (1.0 - r_length).ln() - (1.0 - r_turn).ln()
}

/// Planning context for one map, reel and risk configuration. Locale risks
/// of every free cell are computed up front.
pub struct Planner<'g> {
    grid: &'g VoxelGrid,
    risk: RiskConfig,
    reel: WorldPoint,
    tether: ContactPlanner<'g>,
    allow_contacts: bool,
    /// Locale risks per cell; `None` for cells the search may not enter.
    locale: Vec<Option<(f64, f64)>>,
    step: f64,
}

impl<'g> Planner<'g> {
    pub fn new(grid: &'g VoxelGrid, reel: WorldPoint, risk: RiskConfig) -> Result<Self, PlanError> {
        Self::with_options(grid, grid, reel, risk, true)
    }

    /// `grid` is what the vehicle flies through (usually inflated); the
    /// tether is simulated against `tether_grid`, which must have the same
    /// shape. With `allow_contacts` off, the search is confined to cells the
    /// reel can see and any tether contact fails the plan.
    pub fn with_options(
        grid: &'g VoxelGrid,
        tether_grid: &'g VoxelGrid,
        reel: WorldPoint,
        risk: RiskConfig,
        allow_contacts: bool,
    ) -> Result<Self, PlanError> {
        if grid.dims() != tether_grid.dims()
            || grid.resolution() != tether_grid.resolution()
            || grid.origin() != tether_grid.origin()
        {
            return Err(PlanError::GridMismatch);
        }
        let locale = (0..grid.cell_count())
            .into_par_iter()
            .map(|i| {
                let c = grid.cell_at_index(i);
                if grid.is_occupied(&c) {
                    return Ok(None);
                }
                if !allow_contacts && !tether_grid.line_of_sight(&reel, &grid.cell_center(&c))? {
                    return Ok(None);
                }
                locale_risks(grid, &c, &risk).map(Some).map_err(PlanError::from)
            })
            .collect::<Result<Vec<_>, PlanError>>()?;
        Ok(Planner {
            grid,
            tether: ContactPlanner::new(tether_grid).allow_contacts(allow_contacts),
            risk,
            reel,
            allow_contacts,
            locale,
            step: grid.resolution() / 4.0,
        })
    }

    pub fn grid(&self) -> &VoxelGrid {
        self.grid
    }

    pub fn risk_config(&self) -> &RiskConfig {
        &self.risk
    }

    pub fn reel(&self) -> WorldPoint {
        self.reel
    }

    /// Spacing of the vehicle positions used for tether replay.
    pub fn replay_step(&self) -> f64 {
        self.step
    }

    fn check_cell(&self, c: &Cell) -> Result<(), PlanError> {
        if !self.grid.in_bounds(c) {
            return Err(PlanError::OutOfBounds(*c));
        }
        if self.grid.is_occupied(c) {
            return Err(PlanError::Occupied(*c));
        }
        Ok(())
    }

    /// Dijkstra over augmented states from `start` to every reachable state.
    pub fn search_tree(&self, start: &Cell) -> Result<SearchTree<'_>, PlanError> {
        self.check_cell(start)?;
        let grid = self.grid;
        let mut labels: Vec<Option<Label>> = vec![None; grid.cell_count() * DIRS];
        let mut closed = vec![false; labels.len()];
        let tree_path = |labels: &[Option<Label>], mut s: usize| {
            let mut rev = vec![s / DIRS];
            while let Some(l) = labels[s] {
                if l.parent == usize::MAX {
                    break;
                }
                s = l.parent;
                rev.push(s / DIRS);
            }
            rev.reverse();
            rev
        };

        let connected = (!self.allow_contacts).then(|| self.free_component(start));
        let Some((ro, rv)) = self.locale[grid.index_of(start)] else {
            return Ok(SearchTree { planner: self, start: *start, labels, connected });
        };
        let s0 = grid.index_of(start) * DIRS + START_DIR;
        labels[s0] = Some(Label { cost: state_cost(ro, rv, 0.0, 0.0), length: 0.0, parent: usize::MAX });
        let mut heap = BinaryHeap::new();
        heap.push(Reverse(HeapKey(labels[s0].unwrap().cost, 0.0, s0)));

        while let Some(Reverse(HeapKey(cost, length, s))) = heap.pop() {
            if closed[s] {
                continue;
            }
            let l = labels[s].unwrap();
            if l.cost != cost || l.length != length {
                continue;
            }
            closed[s] = true;
            let cur = grid.cell_at_index(s / DIRS);
            let dir = s % DIRS;
            for (d, off) in NEIGHBOR_OFFSETS.iter().enumerate() {
                let n = [cur.x as i64 + off[0], cur.y as i64 + off[1], cur.z as i64 + off[2]];
                if n.iter().zip(grid.dims()).any(|(&v, dim)| v < 0 || v >= dim as i64) {
                    continue;
                }
                let next = Cell::new(n[0] as usize, n[1] as usize, n[2] as usize);
                let Some((ro, rv)) = self.locale[grid.index_of(&next)] else { continue };
                let r_len = self.risk.action_length_risk(step_length(&cur, &next), 1.0);
                let r_turn = if dir == START_DIR {
                    0.0
                } else {
                    let o = NEIGHBOR_OFFSETS[dir];
                    let prev = Cell::new(
                        (cur.x as i64 - o[0]) as usize,
                        (cur.y as i64 - o[1]) as usize,
                        (cur.z as i64 - o[2]) as usize,
                    );
                    self.risk.turn_risk(turn_angle(&prev, &cur, &next))
                };
                let cand = Label {
                    cost: cost + state_cost(ro, rv, r_len, r_turn),
                    length: length + step_length(&cur, &next),
                    parent: s,
                };
                let t = grid.index_of(&next) * DIRS + d;
                if closed[t] {
                    continue;
                }
                let better = match labels[t] {
                    None => true,
                    Some(old) => match key_cmp(&cand, &old) {
                        Ordering::Less => true,
                        Ordering::Greater => false,
                        Ordering::Equal => tree_path(&labels, s) < tree_path(&labels, old.parent),
                    },
                };
                if better {
                    labels[t] = Some(cand);
                    heap.push(Reverse(HeapKey(cand.cost, cand.length, t)));
                }
            }
        }
        Ok(SearchTree { planner: self, start: *start, labels, connected })
    }

    fn free_component(&self, start: &Cell) -> Vec<bool> {
        let grid = self.grid;
        let mut seen = vec![false; grid.cell_count()];
        seen[grid.index_of(start)] = true;
        let mut stack = vec![*start];
        while let Some(c) = stack.pop() {
            for n in grid.neighbors(&c) {
                let i = grid.index_of(&n);
                if !seen[i] && grid.is_free(&n) {
                    seen[i] = true;
                    stack.push(n);
                }
            }
        }
        seen
    }

    /// Minimum-risk path from `start` to `goal`, evaluated exactly.
    pub fn min_risk_search(&self, start: &Cell, goal: &Cell) -> Result<PlanResult, PlanError> {
        self.check_cell(goal)?;
        let tree = self.search_tree(start)?;
        self.plan_from_tree(&tree, goal)
    }

    fn plan_from_tree(&self, tree: &SearchTree<'_>, goal: &Cell) -> Result<PlanResult, PlanError> {
        let Some((path, cost)) = tree.path_to(goal) else {
            // reachable only by leaving the region the reel can see
            if tree.connected.as_ref().is_some_and(|c| c[self.grid.index_of(goal)]) {
                return Err(PlanError::NoContactFreePath(*goal));
            }
            return Err(PlanError::Unreachable { start: tree.start, goal: *goal });
        };
        let mut res = self.evaluate(&path).map_err(|e| match e {
            PlanError::Tether(TetherError::ContactsForbidden { .. }) if !self.allow_contacts => {
                PlanError::NoContactFreePath(*goal)
            }
            other => other,
        })?;
        res.search_cost = cost;
        Ok(res)
    }

    /// Exact risk of a path: locale and action risks per state plus tether
    /// risks from a replay along the densified path.
    pub fn evaluate(&self, path: &[Cell]) -> Result<PlanResult, PlanError> {
        let grid = self.grid;
        if path.is_empty() || path.windows(2).any(|w| !w[0].is_adjacent(&w[1])) {
            return Err(PlanError::InvalidPath);
        }
        for c in path {
            self.check_cell(c)?;
        }
        let waypoints: Vec<WorldPoint> = path.iter().map(|c| grid.cell_center(c)).collect();
        let mut dense = Vec::with_capacity(path.len() * 8);
        let mut tether_steps = Vec::with_capacity(path.len());
        dense.push(waypoints[0]);
        tether_steps.push(0);
        for w in path.windows(2) {
            let seg = densify(grid, w, self.step)?;
            dense.extend_from_slice(&seg[1..]);
            tether_steps.push(dense.len() - 1);
        }
        let start = self.tether.start(self.reel, dense[0])?;
        let mut tether = Vec::with_capacity(dense.len());
        tether.push(start.clone());
        tether.extend(self.tether.replay(&start, &dense[1..])?);

        let mut states = Vec::with_capacity(path.len());
        let mut search_cost = 0.0;
        for (i, c) in path.iter().enumerate() {
            let (ro, rv) = locale_risks(grid, c, &self.risk)?;
            let (rl, rt) = match i {
                0 => (0.0, 0.0),
                1 => (self.risk.action_length_risk(step_length(&path[0], c), 1.0), 0.0),
                _ => (
                    self.risk.action_length_risk(step_length(&path[i - 1], c), 1.0),
                    self.risk.turn_risk(turn_angle(&path[i - 2], &path[i - 1], c)),
                ),
            };
            let (rtl, rcc) = traverse_risks(&tether[tether_steps[i]], &self.risk);
            search_cost += state_cost(ro, rv, rl, rt);
            states.push([ro, rv, rl, rt, rtl, rcc]);
        }
        let profile = RiskProfile::from_states(states)?;
        let exact_risk = profile.total;
        Ok(PlanResult {
            path: path.to_vec(),
            waypoints,
            search_cost,
            exact_risk,
            profile,
            reward: 0.0,
            utility: 0.0,
            tether,
            tether_steps,
        })
    }

    /// Plan to every candidate and pick the best reward-to-risk ratio. Ties
    /// go to lower risk, then the lexicographically smaller goal.
    pub fn select_viewpoint(
        &self,
        start: &Cell,
        reward: &RewardField,
        candidates: &Candidates,
        mode: RewardMode,
    ) -> Result<PlanResult, PlanError> {
        let grid = self.grid;
        let goals: Vec<Cell> = match candidates {
            Candidates::Auto => reward.rewarding_cells(grid).collect(),
            Candidates::List(list) => {
                for c in list {
                    self.check_cell(c)?;
                }
                let mut l = list.clone();
                l.sort();
                l.dedup();
                l
            }
        };
        if !goals.iter().any(|g| reward.get(grid, g) > 0.0) {
            return Err(PlanError::NoRewardingCandidate);
        }
        let tree = self.search_tree(start)?;
        let outcomes: Vec<Result<PlanResult, PlanError>> = goals
            .par_iter()
            .map(|g| {
                let mut r = self.plan_from_tree(&tree, g)?;
                r.reward = match mode {
                    RewardMode::Terminal => reward.get(grid, g),
                    RewardMode::Integrated => {
                        r.path.iter().map(|c| reward.get(grid, c)).sum::<f64>() / r.path.len() as f64
                    }
                };
                r.utility = r.reward / r.exact_risk.max(UTILITY_RISK_FLOOR);
                Ok(r)
            })
            .collect();

        let mut best: Option<PlanResult> = None;
        let mut failures = Vec::new();
        for (g, o) in goals.iter().zip(outcomes) {
            match o {
                Ok(r) => {
                    let better = match &best {
                        None => true,
                        Some(b) => r
                            .utility
                            .total_cmp(&b.utility)
                            .then(b.exact_risk.total_cmp(&r.exact_risk))
                            .then(b.goal().cmp(g))
                            .is_gt(),
                    };
                    if better {
                        best = Some(r);
                    }
                }
                Err(e) => {
                    log::debug!("candidate ({}, {}, {}) rejected: {e}", g.x, g.y, g.z);
                    failures.push((*g, e));
                }
            }
        }
        if let Some(b) = best {
            return Ok(b);
        }
        // report the most specific failure
        if let Some(pos) = failures.iter().position(|(_, e)| matches!(e, PlanError::Tether(TetherError::Entanglement { .. }))) {
            return Err(failures.swap_remove(pos).1);
        }
        if let Some(pos) = failures.iter().position(|(_, e)| matches!(e, PlanError::NoContactFreePath(_))) {
            return Err(failures.swap_remove(pos).1);
        }
        if let Some(pos) = failures.iter().position(|(_, e)| !matches!(e, PlanError::Unreachable { .. })) {
            return Err(failures.swap_remove(pos).1);
        }
        Err(PlanError::NoReachableCandidate(goals))
    }
}

/// Risk of a path's locale and action terms only, as the search sees it.
pub fn depth_two_risk(result: &PlanResult) -> Result<f64, PlanError> {
    let rows: Vec<[f64; 4]> = result.profile.states.iter().map(|s| [s[0], s[1], s[2], s[3]]).collect();
    Ok(aggregate(&rows)?)
}
