//! Path risk as the probability of not finishing the path.
//!
//! A path `s0..sn` fails if any risk element fails at any state. With the
//! elements conditionally independent given the history, the survival
//! probability is the product of the per-state, per-element survival
//! probabilities and the path risk is its complement:
//!
//! ```text
//! risk(P) = 1 - prod_i prod_k (1 - r_k(s0..si))
//! ```
//!
//! Six elements are evaluated, two per history depth: obstacle distance and
//! visibility depend on the state alone, action length and turn on the last
//! two states, tether length and contact count on the whole path so far.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tether::TetherConfig;
use crate::workspace::{Cell, VoxelGrid, WorkspaceError, DEFAULT_ISOVIST_RAYS};

#[derive(Debug, Error)]
pub enum RiskError {
    #[error("risk value {value} for {element} at state {state} is outside [0, 1]")]
    OutOfRange { state: usize, element: String, value: f64 },
    #[error("cells {0:?} and {1:?} are not 26-adjacent")]
    NotAdjacent(Cell, Cell),
    #[error("cell {0:?} is occupied")]
    Occupied(Cell),
    #[error("risk setting `{field}` {reason}")]
    InvalidConfig { field: &'static str, reason: &'static str },
    #[error(transparent)]
    Workspace(#[from] WorkspaceError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskElement {
    ObstacleDistance,
    Visibility,
    ActionLength,
    Turn,
    TetherLength,
    ContactCount,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskCategory {
    Locale,
    Action,
    Traverse,
}

impl RiskElement {
    pub const ALL: [RiskElement; 6] = [
        RiskElement::ObstacleDistance,
        RiskElement::Visibility,
        RiskElement::ActionLength,
        RiskElement::Turn,
        RiskElement::TetherLength,
        RiskElement::ContactCount,
    ];

    pub fn category(self) -> RiskCategory {
        match self {
            RiskElement::ObstacleDistance | RiskElement::Visibility => RiskCategory::Locale,
            RiskElement::ActionLength | RiskElement::Turn => RiskCategory::Action,
            RiskElement::TetherLength | RiskElement::ContactCount => RiskCategory::Traverse,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RiskElement::ObstacleDistance => "obstacle_distance",
            RiskElement::Visibility => "visibility",
            RiskElement::ActionLength => "action_length",
            RiskElement::Turn => "turn",
            RiskElement::TetherLength => "tether_length",
            RiskElement::ContactCount => "contact_count",
        }
    }
}

impl std::fmt::Display for RiskElement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskElementValue {
    pub element: RiskElement,
    pub value: f64,
}

impl RiskElementValue {
    pub fn category(&self) -> RiskCategory {
        self.element.category()
    }
}

/// Maps from raw features to failure probabilities, plus the query
/// settings the locale features need.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RiskConfig {
    /// Peak probability of the exponential locale maps.
    pub r_max: f64,
    /// Obstacle-distance decay length, m.
    pub d0: f64,
    /// Visibility decay length, m.
    pub v0: f64,
    /// Action-length risk per unit (one-cell) step.
    pub c_action: f64,
    /// Turn risk for a full reversal.
    pub c_turn: f64,
    /// Tether-length risk at the length budget.
    pub c_length: f64,
    /// Length budget, m.
    pub length_budget: f64,
    /// Per-contact failure probability.
    pub c_contact: f64,
    /// Every element is clamped to `1 - epsilon`.
    pub epsilon: f64,
    pub isovist_rays: usize,
    /// Locale query range, m; `None` uses the grid diagonal.
    pub max_range: Option<f64>,
}

impl Default for RiskConfig {
    fn default() -> Self {
        RiskConfig {
            r_max: 0.2,
            d0: 1.0,
            v0: 2.0,
            c_action: 0.05,
            c_turn: 0.1,
            c_length: 0.1,
            length_budget: 20.0,
            c_contact: 0.05,
            epsilon: 1e-6,
            isovist_rays: DEFAULT_ISOVIST_RAYS,
            max_range: None,
        }
    }
}

impl RiskConfig {
    /// Rejects settings the risk maps cannot use.
    pub fn validate(&self) -> Result<(), RiskError> {
        let bad = |field, reason| Err(RiskError::InvalidConfig { field, reason });
        for (field, v) in [
            ("r_max", self.r_max),
            ("c_action", self.c_action),
            ("c_turn", self.c_turn),
            ("c_length", self.c_length),
            ("c_contact", self.c_contact),
        ] {
            if !(0.0..1.0).contains(&v) {
                return bad(field, "must lie in [0, 1)");
            }
        }
        for (field, v) in [("d0", self.d0), ("v0", self.v0), ("length_budget", self.length_budget)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(field, "must be positive and finite");
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad("epsilon", "must lie in (0, 1)");
        }
        if self.isovist_rays == 0 {
            return bad("isovist_rays", "must be at least 1");
        }
        if self.max_range.is_some_and(|r| !(r > 0.0 && r.is_finite())) {
            return bad("max_range", "must be positive and finite");
        }
        Ok(())
    }

    fn clamp(&self, r: f64) -> f64 {
        r.clamp(0.0, 1.0 - self.epsilon)
    }

    pub fn obstacle_distance_risk(&self, d: f64) -> f64 {
        self.clamp(self.r_max * (-d / self.d0).exp())
    }

    pub fn visibility_risk(&self, v: f64) -> f64 {
        self.clamp(self.r_max * (-v / self.v0).exp())
    }

    /// `length` and `unit` in meters.
    pub fn action_length_risk(&self, length: f64, unit: f64) -> f64 {
        self.clamp(self.c_action * length / unit)
    }

    /// `angle` in `[0, pi]`.
    pub fn turn_risk(&self, angle: f64) -> f64 {
        self.clamp(self.c_turn * angle / std::f64::consts::PI)
    }

    pub fn tether_length_risk(&self, length: f64) -> f64 {
        self.clamp(self.c_length * (length / self.length_budget).min(1.0))
    }

    pub fn contact_count_risk(&self, contacts: usize) -> f64 {
        self.clamp(1.0 - (1.0 - self.c_contact).powi(contacts as i32))
    }

    pub fn max_range_for(&self, grid: &VoxelGrid) -> f64 {
        self.max_range.unwrap_or_else(|| grid.diagonal())
    }
}

/// Obstacle-distance and visibility risk at a free cell.
pub fn locale_risks(grid: &VoxelGrid, s: &Cell, cfg: &RiskConfig) -> Result<(f64, f64), RiskError> {
    if !grid.is_free(s) {
        return Err(RiskError::Occupied(*s));
    }
    let p = grid.cell_center(s);
    let range = cfg.max_range_for(grid);
    let d = grid.distance_to_obstacle(&p, range)?;
    let v = grid.isovist_visibility(&p, cfg.isovist_rays, range)?;
    Ok((cfg.obstacle_distance_risk(d), cfg.visibility_risk(v)))
}

/// Angle between steps `prev -> cur` and `cur -> next`, rad.
pub fn turn_angle(prev: &Cell, cur: &Cell, next: &Cell) -> f64 {
    let a = prev.delta_to(cur);
    let b = cur.delta_to(next);
    // integer cross and dot products keep parallel steps at exactly 0 and pi
    let dot = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]) as f64;
    let cross = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
    let sin = ((cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]) as f64).sqrt();
    sin.atan2(dot)
}

/// Step length in cells.
pub fn step_length(a: &Cell, b: &Cell) -> f64 {
    let d = a.delta_to(b);
    ((d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) as f64).sqrt()
}

/// Action-length and turn risk of entering `next` from `cur`, having come from `prev`.
pub fn action_risks(prev: &Cell, cur: &Cell, next: &Cell, cfg: &RiskConfig) -> Result<(f64, f64), RiskError> {
    if !prev.is_adjacent(cur) {
        return Err(RiskError::NotAdjacent(*prev, *cur));
    }
    if !cur.is_adjacent(next) {
        return Err(RiskError::NotAdjacent(*cur, *next));
    }
    // lengths are in cells, so the unit step is 1
    Ok((cfg.action_length_risk(step_length(cur, next), 1.0), cfg.turn_risk(turn_angle(prev, cur, next))))
}

/// Action risks for the second state of a path, which has no turn.
pub fn first_action_risks(cur: &Cell, next: &Cell, cfg: &RiskConfig) -> Result<(f64, f64), RiskError> {
    if !cur.is_adjacent(next) {
        return Err(RiskError::NotAdjacent(*cur, *next));
    }
    Ok((cfg.action_length_risk(step_length(cur, next), 1.0), 0.0))
}

/// Tether-length and contact-count risk of a replayed tether.
pub fn traverse_risks(t: &TetherConfig, cfg: &RiskConfig) -> (f64, f64) {
    (cfg.tether_length_risk(t.commanded_length()), cfg.contact_count_risk(t.contact_count()))
}

/// `1 - prod prod (1 - r)` over a per-state, per-element table.
pub fn aggregate<R: AsRef<[f64]>>(profile: &[R]) -> Result<f64, RiskError> {
    let mut survival = 1.0;
    for (i, row) in profile.iter().enumerate() {
        for (k, &r) in row.as_ref().iter().enumerate() {
            if !(0.0..=1.0).contains(&r) {
                let element = RiskElement::ALL.get(k).map_or_else(|| format!("element {k}"), |e| e.to_string());
                return Err(RiskError::OutOfRange { state: i, element, value: r });
            }
            survival *= 1.0 - r;
        }
    }
    Ok(1.0 - survival)
}

/// Per-state risk values of a path, in [`RiskElement::ALL`] order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskProfile {
    pub states: Vec<[f64; 6]>,
    pub total: f64,
}

impl RiskProfile {
    pub fn from_states(states: Vec<[f64; 6]>) -> Result<Self, RiskError> {
        let total = aggregate(&states)?;
        Ok(RiskProfile { states, total })
    }

    /// Survival probability after each state.
    pub fn running_survival(&self) -> Vec<f64> {
        let mut s = 1.0;
        self.states
            .iter()
            .map(|row| {
                for r in row {
                    s *= 1.0 - r;
                }
                s
            })
            .collect()
    }

    pub fn value(&self, state: usize, element: RiskElement) -> RiskElementValue {
        RiskElementValue { element, value: self.states[state][element as usize] }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workspace::WorldPoint;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn categories() {
        use RiskCategory::*;
        let cats: Vec<_> = RiskElement::ALL.iter().map(|e| e.category()).collect();
        assert_eq!(cats, [Locale, Locale, Action, Action, Traverse, Traverse]);
    }

    #[test]
    fn normalizer_values() {
        let cfg = RiskConfig { r_max: 0.5, ..Default::default() };
        assert_relative_eq!(cfg.obstacle_distance_risk(cfg.d0), 0.5 / std::f64::consts::E, epsilon = 1e-15);
        assert_relative_eq!(cfg.obstacle_distance_risk(cfg.d0), 0.18393972058572117, epsilon = 1e-15);
        assert_eq!(cfg.obstacle_distance_risk(0.0), 0.5);
        let cfg = RiskConfig { c_contact: 0.1, ..Default::default() };
        assert_eq!(cfg.contact_count_risk(0), 0.0);
        assert_relative_eq!(cfg.contact_count_risk(1), 0.1, epsilon = 1e-15);
        assert_relative_eq!(cfg.contact_count_risk(2), 0.19, epsilon = 1e-15);
        assert_eq!(cfg.tether_length_risk(1e6), cfg.c_length);
        assert_eq!(RiskConfig { r_max: 3.0, ..Default::default() }.obstacle_distance_risk(0.0), 1.0 - 1e-6);
    }

    #[test]
    fn validation() {
        assert!(RiskConfig::default().validate().is_ok());
        let err = RiskConfig { d0: 0.0, ..Default::default() }.validate().unwrap_err();
        assert!(matches!(err, RiskError::InvalidConfig { field: "d0", .. }));
        assert!(RiskConfig { c_turn: 1.0, ..Default::default() }.validate().is_err());
        assert!(RiskConfig { isovist_rays: 0, ..Default::default() }.validate().is_err());
        assert!(RiskConfig { max_range: Some(f64::NAN), ..Default::default() }.validate().is_err());
    }

    #[test]
    fn turn_examples() {
        let cfg = RiskConfig::default();
        let (a, b, c) = (Cell::new(0, 0, 0), Cell::new(1, 0, 0), Cell::new(2, 0, 0));
        assert_eq!(action_risks(&a, &b, &c, &cfg).unwrap().1, 0.0);
        assert_relative_eq!(action_risks(&a, &b, &a, &cfg).unwrap().1, cfg.c_turn);
        assert_relative_eq!(turn_angle(&a, &b, &Cell::new(1, 1, 0)), PI / 2.0);
        let (d0, d1, d2) = (Cell::new(0, 0, 0), Cell::new(1, 1, 1), Cell::new(2, 2, 2));
        assert_eq!(turn_angle(&d0, &d1, &d2), 0.0);
        assert_eq!(turn_angle(&d0, &d1, &d0), PI);
        assert_relative_eq!(action_risks(&a, &b, &Cell::new(1, 1, 0), &cfg).unwrap().1, cfg.c_turn / 2.0);
        assert_relative_eq!(action_risks(&a, &b, &Cell::new(2, 1, 1), &cfg).unwrap().0, cfg.c_action * 3f64.sqrt());
        assert!(matches!(action_risks(&a, &c, &b, &cfg), Err(RiskError::NotAdjacent(..))));
    }

    #[test]
    fn locale_on_empty_and_occupied() {
        let mut g = VoxelGrid::new([5, 5, 5], 1.0, WorldPoint::origin()).unwrap();
        let cfg = RiskConfig { max_range: Some(1e4), ..Default::default() };
        let (d, v) = locale_risks(&g, &Cell::new(2, 2, 2), &cfg).unwrap();
        assert!(d < 1e-300 && v < 1e-300);
        g.set_occupied(&Cell::new(2, 2, 3), true);
        assert!(matches!(locale_risks(&g, &Cell::new(2, 2, 3), &cfg), Err(RiskError::Occupied(_))));
        let (d, _) = locale_risks(&g, &Cell::new(2, 2, 2), &cfg).unwrap();
        assert_relative_eq!(d, 0.2 * (-1.0f64).exp());
    }

    #[test]
    fn traverse_at_reel() {
        let t = TetherConfig::new(WorldPoint::origin(), WorldPoint::origin());
        assert_eq!(traverse_risks(&t, &RiskConfig::default()), (0.0, 0.0));
    }

    #[test]
    fn aggregate_examples() {
        assert_eq!(aggregate(&[[0.0; 6]; 3]).unwrap(), 0.0);
        assert_eq!(aggregate(&[[0.2, 1.0], [0.0, 0.0]]).unwrap(), 1.0);
        assert_relative_eq!(aggregate(&[[0.1, 0.1], [0.1, 0.1]]).unwrap(), 0.3439, epsilon = 1e-15);
        assert!(matches!(aggregate(&[[0.1, 1.5]]), Err(RiskError::OutOfRange { state: 0, .. })));
        assert!(aggregate(&[[-0.1]]).is_err());
        assert!(aggregate::<[f64; 6]>(&[]).unwrap() == 0.0);
    }

    proptest! {
        #[test]
        fn aggregate_is_monotone(
            rows in prop::collection::vec(prop::array::uniform6(0.0f64..1.0), 1..8),
            bump in 0.0f64..1.0,
            pick in 0usize..48,
        ) {
            let base = aggregate(&rows).unwrap();
            prop_assert!((0.0..=1.0).contains(&base));
            let mut more = rows.clone();
            let (i, k) = ((pick / 6) % rows.len(), pick % 6);
            more[i][k] = more[i][k].max(bump);
            prop_assert!(aggregate(&more).unwrap() >= base);
        }

        #[test]
        fn normalizers_monotone(a in 0.0f64..50.0, b in 0.0f64..50.0) {
            let cfg = RiskConfig::default();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(cfg.obstacle_distance_risk(lo) >= cfg.obstacle_distance_risk(hi));
            prop_assert!(cfg.visibility_risk(lo) >= cfg.visibility_risk(hi));
            prop_assert!(cfg.tether_length_risk(lo) <= cfg.tether_length_risk(hi));
            prop_assert!(cfg.turn_risk(lo.min(PI)) <= cfg.turn_risk(hi.min(PI)));
            prop_assert!(cfg.contact_count_risk(lo as usize) <= cfg.contact_count_risk(hi as usize));
            for r in [cfg.obstacle_distance_risk(lo), cfg.tether_length_risk(hi), cfg.contact_count_risk(hi as usize)] {
                prop_assert!((0.0..=1.0 - cfg.epsilon).contains(&r));
            }
        }
    }
}
