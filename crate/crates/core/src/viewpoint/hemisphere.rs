use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::ViewpointError;
use crate::kinematics::normalize_azimuth;

/// Radius of the task-centered viewpoint hemisphere, in meters.
pub const HEMISPHERE_RADIUS: f64 = 1.5;
pub const DEFAULT_VIEWPOINT_COUNT: usize = 30;

/// Coarse region of the hemisphere a viewpoint falls in, relative to the
/// task heading. Left is positive azimuth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum HemisphereGroup {
    Top,
    Front,
    Left,
    Back,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Viewpoint {
    pub index: usize,
    pub r: f64,
    /// Elevation above the task's horizontal plane.
    pub theta: f64,
    /// Azimuth relative to the task heading, in (-pi, pi].
    pub phi: f64,
    pub group: HemisphereGroup,
}

impl Viewpoint {
    /// Offset from the task position for a task heading `heading`.
    pub fn offset(&self, heading: f64) -> [f64; 3] {
        let az = heading + self.phi;
        let (st, ct) = self.theta.sin_cos();
        [self.r * ct * az.sin(), self.r * st, self.r * ct * az.cos()]
    }

    pub fn direction(&self, heading: f64) -> [f64; 3] {
        let o = self.offset(heading);
        [o[0] / self.r, o[1] / self.r, o[2] / self.r]
    }
}

/// Deterministic spiral sampling of the upper hemisphere. Heights are
/// uniform in `sin(elevation)` and azimuths advance by the golden angle.
///
/// The highest fifth forms the top group; the rest is split into equal
/// front, left, back and right sectors by relative azimuth.
pub fn sample_hemisphere(radius: f64, n: usize) -> Result<Vec<Viewpoint>, ViewpointError> {
    if n < 5 {
        return Err(ViewpointError::TooFewViewpoints { min: 5, got: n });
    }
    let golden = PI * (3.0 - 5f64.sqrt());
    let mut vps: Vec<Viewpoint> = (0..n)
        .map(|i| Viewpoint {
            index: i,
            r: radius,
            theta: ((i as f64 + 0.5) / n as f64).asin(),
            phi: normalize_azimuth(i as f64 * golden),
            group: HemisphereGroup::Top,
        })
        .collect();

    let sizes: Vec<usize> = (0..5).map(|g| n / 5 + usize::from(g < n % 5)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| vps[b].theta.total_cmp(&vps[a].theta).then(a.cmp(&b)));
    let mut rest = order.split_off(sizes[0]);
    // sector key starts at the front sector's right edge and sweeps left
    let key = |v: &Viewpoint| (v.phi + PI / 4.0).rem_euclid(2.0 * PI);
    rest.sort_by(|&a, &b| key(&vps[a]).total_cmp(&key(&vps[b])).then(a.cmp(&b)));
    let sectors = [HemisphereGroup::Front, HemisphereGroup::Left, HemisphereGroup::Back, HemisphereGroup::Right];
    let mut at = 0;
    for (g, &size) in sectors.iter().zip(&sizes[1..]) {
        for &i in &rest[at..at + size] {
            vps[i].group = *g;
        }
        at += size;
    }
    Ok(vps)
}
