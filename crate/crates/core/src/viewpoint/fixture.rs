//! Published manifold values for the four affordances, laid out on the
//! standard 30-point hemisphere.
//!
//! Only manifold values and a coarse description of where each manifold
//! sits were published, so the viewpoint-to-manifold assignment below is
//! reconstructed from those region descriptions. Every member viewpoint
//! carries its manifold's value.

use super::hemisphere::{sample_hemisphere, HemisphereGroup, Viewpoint, DEFAULT_VIEWPOINT_COUNT, HEMISPHERE_RADIUS};
use super::{Affordance, AffordanceModel, Manifold};

/// Inconsistency thresholds used to cut each affordance's dendrogram.
pub const PUBLISHED_THRESHOLDS: [(Affordance, f64); 4] = [
    (Affordance::Reachability, 1.15),
    (Affordance::Passability, 1.15),
    (Affordance::Manipulability, 1.15),
    (Affordance::Traversability, 1.14),
];

/// Manifold values in rank order, best first.
pub fn published_manifold_values(affordance: Affordance) -> &'static [f64] {
    match affordance {
        Affordance::Reachability => &[-0.49, -0.19, 0.49, 0.6],
        Affordance::Passability => &[-0.46, -0.42, -0.38, -0.3, 0.21, 0.46],
        Affordance::Manipulability => &[-0.15, -0.04, 0.25, 0.36, 0.49, 2.00],
        Affordance::Traversability => &[-0.41, -0.32, -0.31, -0.27, -0.07, 0.01, 0.18, 1.04, 2.6],
    }
}

struct Placement {
    group: HemisphereGroup,
    /// In the higher half of its group by elevation.
    upper: bool,
    /// Rank by azimuth within the group.
    azimuth_rank: usize,
    left: bool,
}

fn placements(vps: &[Viewpoint]) -> Vec<Placement> {
    let mut out: Vec<Placement> = vps
        .iter()
        .map(|v| Placement { group: v.group, upper: false, azimuth_rank: 0, left: v.phi >= 0.0 })
        .collect();
    for g in [HemisphereGroup::Top, HemisphereGroup::Front, HemisphereGroup::Left, HemisphereGroup::Back, HemisphereGroup::Right] {
        let mut idx: Vec<usize> = (0..vps.len()).filter(|&i| vps[i].group == g).collect();
        idx.sort_by(|&a, &b| vps[b].theta.total_cmp(&vps[a].theta));
        let half = idx.len().div_ceil(2);
        for &i in &idx[..half] {
            out[i].upper = true;
        }
        idx.sort_by(|&a, &b| vps[a].phi.total_cmp(&vps[b].phi));
        for (r, &i) in idx.iter().enumerate() {
            out[i].azimuth_rank = r;
        }
    }
    out
}

/// Zero-based manifold rank of a viewpoint.
fn region(affordance: Affordance, p: &Placement) -> usize {
    use HemisphereGroup::*;
    match affordance {
        Affordance::Reachability => match p.group {
            Top | Front => 0,
            Back => 1,
            Left => 2,
            Right => 3,
        },
        Affordance::Passability => match (p.group, p.upper) {
            (Front, true) => 0,
            (Back, true) => 1,
            (Front, false) => 2,
            (Back, false) => 3,
            (Left, _) => 4,
            (Right, _) => 5,
            (Top, _) => {
                if p.left {
                    4
                } else {
                    5
                }
            }
        },
        Affordance::Manipulability => match (p.group, p.upper) {
            (Top, _) if !p.left => 0,
            (Right, true) => 1,
            (Front, false) => 2,
            (Right, false) | (Back, false) => 3,
            (Top, _) | (Left, true) | (Back, true) => 4,
            (Left, false) | (Front, true) => 5,
        },
        Affordance::Traversability => match (p.group, p.upper) {
            (Top, _) => p.azimuth_rank.min(4),
            (Front, _) | (Left, _) => 5,
            (Right, _) => 6,
            (Back, true) => 7,
            (Back, false) => 8,
        },
    }
}

fn build(affordance: Affordance, threshold: f64) -> AffordanceModel {
    let vps = sample_hemisphere(HEMISPHERE_RADIUS, DEFAULT_VIEWPOINT_COUNT).expect("30 viewpoints");
    let values = published_manifold_values(affordance);
    let mut members = vec![Vec::new(); values.len()];
    for (i, p) in placements(&vps).iter().enumerate() {
        members[region(affordance, p)].push(i);
    }
    let manifolds = members
        .into_iter()
        .zip(values)
        .enumerate()
        .map(|(r, (members, &value))| Manifold { members, value, rank: r + 1 })
        .collect();
    AffordanceModel { affordance, radius: HEMISPHERE_RADIUS, inconsistency_threshold: threshold, viewpoints: vps, manifolds }
}

/// Manifold models for all four affordances with the published values.
pub fn load_default_manifolds() -> Vec<AffordanceModel> {
    PUBLISHED_THRESHOLDS.iter().map(|&(a, t)| build(a, t)).collect()
}
