//! Rigid poses and quaternion helpers.
//!
//! Quaternions are stored and serialized as (w, x, y, z); the world frame is right-handed
//! with +z up.

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, VALIDATION_TAG};

pub type Vec3 = Vector3<f64>;
pub type Quat = UnitQuaternion<f64>;

/// Accepted deviation of a raw input quaternion's norm from 1 before it is rejected.
pub const UNIT_INPUT_TOL: f64 = 1e-6;

/// Build a unit quaternion from (w, x, y, z), rejecting inputs that are not unit length.
///
/// Inputs within 1e-12 of unit norm are kept bit-for-bit so that a serialize/parse
/// round trip is exact; anything else inside [`UNIT_INPUT_TOL`] is renormalized.
pub fn quat_from_wxyz(wxyz: [f64; 4]) -> Result<Quat> {
    let q = Quaternion::new(wxyz[0], wxyz[1], wxyz[2], wxyz[3]);
    let n2 = q.norm_squared();
    if !n2.is_finite() || (n2.sqrt() - 1.0).abs() > UNIT_INPUT_TOL {
        return Err(Error::validation(format!(
            "quaternion {wxyz:?} is not unit length (norm {})",
            n2.sqrt()
        )));
    }
    if (n2 - 1.0).abs() <= 1e-12 {
        Ok(UnitQuaternion::new_unchecked(q))
    } else {
        Ok(UnitQuaternion::new_normalize(q))
    }
}

pub fn quat_to_wxyz(q: &Quat) -> [f64; 4] {
    [q.w, q.i, q.j, q.k]
}

/// Spherical linear interpolation between two quaternions along the shortest arc.
///
/// Both inputs must be unit length (within [`UNIT_INPUT_TOL`]) and `u` must lie in [0, 1].
pub fn slerp(q0: &Quaternion<f64>, q1: &Quaternion<f64>, u: f64) -> Result<Quat> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::validation(format!("slerp parameter {u} outside [0, 1]")));
    }
    let a = quat_from_wxyz([q0.w, q0.i, q0.j, q0.k])?;
    let b = quat_from_wxyz([q1.w, q1.i, q1.j, q1.k])?;
    Ok(slerp_unit(&a, &b, u))
}

/// Unchecked variant of [`slerp`] for values already known to be unit quaternions.
pub fn slerp_unit(a: &Quat, b: &Quat, u: f64) -> Quat {
    let qa = a.quaternion();
    let mut qb = *b.quaternion();
    let mut dot = qa.dot(&qb);
    if dot < 0.0 {
        qb = -qb;
        dot = -dot;
    }
    let q = if dot > 1.0 - 1e-12 {
        qa * (1.0 - u) + qb * u
    } else {
        let theta = dot.min(1.0).acos();
        let s = theta.sin();
        qa * (((1.0 - u) * theta).sin() / s) + qb * ((u * theta).sin() / s)
    };
    UnitQuaternion::new_normalize(q)
}

/// Rotation angle between two orientations, in [0, pi].
///
/// Evaluated as 2 asin(|vec(a^-1 b)|), which stays accurate near identity and treats
/// q and -q as the same rotation.
pub fn geodesic(a: &Quat, b: &Quat) -> f64 {
    if a.coords == b.coords || a.coords == -b.coords {
        return 0.0;
    }
    let rel = a.inverse() * b;
    let v = rel.quaternion().imag().norm();
    2.0 * v.min(1.0).asin()
}

/// Rotation vector (axis * angle) of `q`, taking the short way round.
pub fn quat_log(q: &Quat) -> Vec3 {
    let q = if q.w < 0.0 {
        UnitQuaternion::new_unchecked(-q.into_inner())
    } else {
        *q
    };
    let v = q.quaternion().imag();
    let s = v.norm();
    if s < 1e-15 {
        return v * 2.0;
    }
    let angle = 2.0 * s.atan2(q.w);
    v * (angle / s)
}

pub fn quat_exp(rotvec: &Vec3) -> Quat {
    UnitQuaternion::from_scaled_axis(*rotvec)
}

/// Position plus orientation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PoseWire", into = "PoseWire")]
pub struct Pose {
    pub position: Vec3,
    pub orientation: Quat,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseWire {
    p: [f64; 3],
    q: [f64; 4],
}

impl TryFrom<PoseWire> for Pose {
    type Error = String;

    fn try_from(w: PoseWire) -> std::result::Result<Self, String> {
        if w.p.iter().any(|x| !x.is_finite()) {
            return Err(format!("{VALIDATION_TAG}non-finite position {:?}", w.p));
        }
        let orientation = quat_from_wxyz(w.q).map_err(|e| format!("{VALIDATION_TAG}{e}"))?;
        Ok(Pose {
            position: Vec3::from(w.p),
            orientation,
        })
    }
}

impl From<Pose> for PoseWire {
    fn from(p: Pose) -> Self {
        PoseWire {
            p: p.position.into(),
            q: quat_to_wxyz(&p.orientation),
        }
    }
}

impl Default for Pose {
    fn default() -> Self {
        Pose::identity()
    }
}

impl Pose {
    pub fn new(position: Vec3, orientation: Quat) -> Self {
        Pose {
            position,
            orientation,
        }
    }

    pub fn identity() -> Self {
        Pose::new(Vec3::zeros(), Quat::identity())
    }

    pub fn from_position(position: Vec3) -> Self {
        Pose::new(position, Quat::identity())
    }

    /// `self ∘ other`: apply `other` expressed in `self`'s frame.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            position: self.position + self.orientation * other.position,
            orientation: self.orientation * other.orientation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let inv = self.orientation.inverse();
        Pose {
            position: -(inv * self.position),
            orientation: inv,
        }
    }

    /// Transform of `other` relative to `self`, i.e. `self⁻¹ ∘ other`.
    pub fn relative_to(&self, other: &Pose) -> Pose {
        self.inverse().compose(other)
    }

    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.position + self.orientation * p
    }

    pub fn inverse_transform_point(&self, p: &Vec3) -> Vec3 {
        self.orientation.inverse() * (p - self.position)
    }

    /// Translation distance plus geodesic angle, used for tolerance checks.
    pub fn distance(&self, other: &Pose) -> (f64, f64) {
        (
            (self.position - other.position).norm(),
            geodesic(&self.orientation, &other.orientation),
        )
    }

    pub fn interpolate(&self, other: &Pose, u: f64) -> Pose {
        Pose {
            position: self.position.lerp(&other.position, u),
            orientation: slerp_unit(&self.orientation, &other.orientation, u),
        }
    }
}

/// Linear and angular velocity pair.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Twist {
    pub linear: Vec3,
    pub angular: Vec3,
}
