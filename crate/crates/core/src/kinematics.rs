//! Tether spherical coordinates.
//!
//! The tether reel is the origin and `y` points up. A straight taut tether
//! of length `L`, elevation `theta` and azimuth `phi` puts the vehicle at
//!
//! ```text
//! x = L cos(theta) sin(phi)
//! y = L sin(theta)
//! z = L cos(theta) cos(phi)
//! ```
//!
//! Catenary sag is not modeled; [`LocalizationModel`] is the hook for a
//! sag-corrected map.

use nalgebra::{Matrix3, Point3, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

pub type CartesianPoint = Point3<f64>;

/// Default singularity threshold on `|cos(theta)|`.
pub const EPS_SINGULAR_COS: f64 = 1e-6;
/// Default singularity threshold on tether length, meters.
pub const EPS_SINGULAR_LENGTH: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum KinematicsError {
    #[error("position coincides with the tether origin; azimuth is undefined")]
    AtOrigin,
    #[error("singular configuration: {quantity} = {value:e} is below {threshold:e}")]
    Singular { quantity: &'static str, value: f64, threshold: f64 },
    #[error("camera and point of interest coincide")]
    CoincidentTarget,
    #[error("non-finite input")]
    NonFinite,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TetherCoords {
    /// Tether length, m.
    pub length: f64,
    /// Elevation in `[-pi/2, pi/2]`, rad.
    pub theta: f64,
    /// Azimuth in `(-pi, pi]`, rad.
    pub phi: f64,
}

impl TetherCoords {
    pub fn new(length: f64, theta: f64, phi: f64) -> Self {
        TetherCoords { length, theta, phi }
    }

    /// Straight up or down: the azimuth carries no information.
    pub fn is_polar(&self) -> bool {
        self.theta.abs() == FRAC_PI_2
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TetherRates {
    pub length_rate: f64,
    pub theta_rate: f64,
    pub phi_rate: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GimbalCommand {
    pub yaw: f64,
    pub pitch: f64,
    /// Always zero: the camera is held level.
    pub roll: f64,
}

/// Map from tether sensing to vehicle position.
pub trait LocalizationModel {
    fn localize(&self, c: &TetherCoords) -> CartesianPoint;
}

/// Taut, straight tether.
#[derive(Clone, Copy, Debug, Default)]
pub struct StraightTether;

impl LocalizationModel for StraightTether {
    fn localize(&self, c: &TetherCoords) -> CartesianPoint {
        localize(c)
    }
}

pub fn localize(c: &TetherCoords) -> CartesianPoint {
    let (st, ct) = c.theta.sin_cos();
    let (sp, cp) = c.phi.sin_cos();
    CartesianPoint::new(c.length * ct * sp, c.length * st, c.length * ct * cp)
}

/// Tether setpoint reaching `p` from the origin.
///
/// Points straight above or below the origin get `phi = 0`; check
/// [`TetherCoords::is_polar`] to detect them.
pub fn position_control(p: &CartesianPoint) -> Result<TetherCoords, KinematicsError> {
    if !p.coords.iter().all(|v| v.is_finite()) {
        return Err(KinematicsError::NonFinite);
    }
    let length = p.coords.norm();
    if length == 0.0 {
        return Err(KinematicsError::AtOrigin);
    }
    let theta = (p.y / length).clamp(-1.0, 1.0).asin();
    let phi = if p.x == 0.0 && p.z == 0.0 {
        0.0
    } else {
        normalize_azimuth(p.x.atan2(p.z))
    };
    Ok(TetherCoords { length, theta, phi })
}

/// Wrap an angle into (-pi, pi].
pub fn normalize_azimuth(phi: f64) -> f64 {
    if phi > -PI && phi <= PI {
        return phi;
    }
    let w = phi.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// `d(x, y, z) / d(L, theta, phi)`.
pub fn jacobian(c: &TetherCoords) -> Matrix3<f64> {
    let l = c.length;
    let (st, ct) = c.theta.sin_cos();
    let (sp, cp) = c.phi.sin_cos();
    Matrix3::new(
        ct * sp, -l * st * sp, l * ct * cp,
        st, l * ct, 0.0,
        ct * cp, -l * st * cp, -l * ct * sp,
    )
}

#[derive(Clone, Copy, Debug)]
pub struct SingularityThresholds {
    pub cos_theta: f64,
    pub length: f64,
}

impl Default for SingularityThresholds {
    fn default() -> Self {
        SingularityThresholds { cos_theta: EPS_SINGULAR_COS, length: EPS_SINGULAR_LENGTH }
    }
}

/// Tether rates producing Cartesian velocity `v` at configuration `c`.
pub fn velocity_control(c: &TetherCoords, v: &Vector3<f64>) -> Result<TetherRates, KinematicsError> {
    velocity_control_with(c, v, SingularityThresholds::default())
}

pub fn velocity_control_with(
    c: &TetherCoords,
    v: &Vector3<f64>,
    eps: SingularityThresholds,
) -> Result<TetherRates, KinematicsError> {
    let (st, ct) = c.theta.sin_cos();
    if c.length.abs() <= eps.length {
        return Err(KinematicsError::Singular { quantity: "L", value: c.length, threshold: eps.length });
    }
    if ct.abs() <= eps.cos_theta {
        return Err(KinematicsError::Singular { quantity: "cos(theta)", value: ct, threshold: eps.cos_theta });
    }
    let (sp, cp) = c.phi.sin_cos();
    // Jacobian columns are orthogonal with norms 1, L and L cos(theta).
    let radial = Vector3::new(ct * sp, st, ct * cp);
    let elevation = Vector3::new(-st * sp, ct, -st * cp);
    let azimuth = Vector3::new(cp, 0.0, -sp);
    Ok(TetherRates {
        length_rate: radial.dot(v),
        theta_rate: elevation.dot(v) / c.length,
        phi_rate: azimuth.dot(v) / (c.length * ct),
    })
}

/// Yaw and pitch pointing a level camera at `poi`.
pub fn point_camera(uav: &CartesianPoint, poi: &CartesianPoint) -> Result<GimbalCommand, KinematicsError> {
    let d = poi - uav;
    let n = d.norm();
    if !n.is_finite() {
        return Err(KinematicsError::NonFinite);
    }
    if n == 0.0 {
        return Err(KinematicsError::CoincidentTarget);
    }
    let yaw = if d.x == 0.0 && d.z == 0.0 { 0.0 } else { normalize_azimuth(d.x.atan2(d.z)) };
    Ok(GimbalCommand { yaw, pitch: (d.y / n).clamp(-1.0, 1.0).asin(), roll: 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_4;

    fn close(a: &CartesianPoint, b: &CartesianPoint, eps: f64) {
        assert!((a - b).norm() < eps, "{a:?} vs {b:?}");
    }

    #[test]
    fn localize_examples() {
        close(&localize(&TetherCoords::new(1.0, 0.0, 0.0)), &CartesianPoint::new(0.0, 0.0, 1.0), 1e-15);
        close(&localize(&TetherCoords::new(2.0, FRAC_PI_2, 0.0)), &CartesianPoint::new(0.0, 2.0, 0.0), 1e-15);
        close(
            &localize(&TetherCoords::new(2f64.sqrt(), 0.0, FRAC_PI_4)),
            &CartesianPoint::new(1.0, 0.0, 1.0),
            1e-15,
        );
    }

    #[test]
    fn position_control_examples() {
        let c = position_control(&CartesianPoint::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!(c, TetherCoords::new(1.0, 0.0, 0.0));
        let c = position_control(&CartesianPoint::new(1.0, 0.0, 1.0)).unwrap();
        assert_relative_eq!(c.length, 2f64.sqrt());
        assert_relative_eq!(c.phi, FRAC_PI_4);
        let p = CartesianPoint::new(3.0, 4.0, 0.0);
        let c = position_control(&p).unwrap();
        assert_relative_eq!(c.length, 5.0);
        assert_relative_eq!(c.theta, 0.8f64.asin());
        assert_relative_eq!(c.phi, FRAC_PI_2);
        close(&localize(&c), &p, 1e-12);
    }

    #[test]
    fn position_control_degenerate() {
        assert_eq!(position_control(&CartesianPoint::origin()), Err(KinematicsError::AtOrigin));
        let c = position_control(&CartesianPoint::new(0.0, -3.0, -0.0)).unwrap();
        assert_eq!(c.phi, 0.0);
        assert!(c.is_polar());
    }

    #[test]
    fn azimuth_range_is_half_open() {
        let c = position_control(&CartesianPoint::new(-0.0, 0.0, -1.0)).unwrap();
        assert_eq!(c.phi, PI);
    }

    #[test]
    fn jacobian_at_zero() {
        let j = jacobian(&TetherCoords::new(1.0, 0.0, 0.0));
        assert_eq!(j, Matrix3::new(0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0));
        let j = jacobian(&TetherCoords::new(2.0, FRAC_PI_2, 0.3));
        assert!(j.determinant().abs() < 1e-12);
    }

    #[test]
    fn velocity_control_examples() {
        let c = TetherCoords::new(1.0, 0.0, 0.0);
        let r = velocity_control(&c, &Vector3::zeros()).unwrap();
        assert_eq!((r.length_rate, r.theta_rate, r.phi_rate), (0.0, 0.0, 0.0));
        let r = velocity_control(&c, &Vector3::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!((r.length_rate, r.theta_rate, r.phi_rate), (1.0, 0.0, 0.0));
    }

    #[test]
    fn velocity_control_singular() {
        let v = Vector3::new(1.0, 0.0, 0.0);
        let e = velocity_control(&TetherCoords::new(1.0, FRAC_PI_2, 0.0), &v).unwrap_err();
        assert!(matches!(e, KinematicsError::Singular { quantity: "cos(theta)", .. }));
        let e = velocity_control(&TetherCoords::new(0.0, 0.1, 0.0), &v).unwrap_err();
        assert!(matches!(e, KinematicsError::Singular { quantity: "L", .. }));
    }

    #[test]
    fn camera_examples() {
        let uav = CartesianPoint::new(1.0, 2.0, 3.0);
        let g = point_camera(&uav, &(uav - Vector3::new(0.0, 1.0, 0.0))).unwrap();
        assert_relative_eq!(g.pitch, -FRAC_PI_2);
        assert_eq!(g.roll, 0.0);
        let g = point_camera(&uav, &(uav + Vector3::new(0.0, 0.0, 1.0))).unwrap();
        assert_eq!((g.yaw, g.pitch), (0.0, 0.0));
        // unit-vector oracle: direction (1,1,0)/sqrt2 is 45 deg up, pointing along +x
        let g = point_camera(&uav, &(uav + Vector3::new(1.0, 1.0, 0.0))).unwrap();
        assert_relative_eq!(g.yaw, FRAC_PI_2, epsilon = 1e-15);
        assert_relative_eq!(g.pitch, FRAC_PI_4, epsilon = 1e-15);
        assert_eq!(point_camera(&uav, &uav), Err(KinematicsError::CoincidentTarget));
    }

    fn coords() -> impl Strategy<Value = TetherCoords> {
        let lim = FRAC_PI_2 - 1e-3;
        (1e-3f64..50.0, -lim..lim, -PI + 1e-9..=PI).prop_map(|(l, t, p)| TetherCoords::new(l, t, p))
    }

    proptest! {
        #[test]
        fn round_trip(c in coords()) {
            let back = position_control(&localize(&c)).unwrap();
            prop_assert!((back.length - c.length).abs() < 1e-9);
            prop_assert!((back.theta - c.theta).abs() < 1e-9);
            prop_assert!((back.phi - c.phi).abs() < 1e-9);
        }

        #[test]
        fn localize_preserves_norm(c in coords()) {
            prop_assert!((localize(&c).coords.norm() - c.length).abs() <= 1e-12 * c.length.max(1.0));
        }

        #[test]
        fn velocity_inverts_jacobian(c in coords(), v in prop::array::uniform3(-5.0f64..5.0)) {
            let v = Vector3::from(v);
            let r = velocity_control(&c, &v).unwrap();
            let back = jacobian(&c) * Vector3::new(r.length_rate, r.theta_rate, r.phi_rate);
            prop_assert!((back - v).norm() < 1e-9);
        }
    }
}
