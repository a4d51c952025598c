//! Primitive object geometry: signed distance, closest surface point and surface normals.
//!
//! All local-frame queries use the object's own frame: boxes are centred with edges along the
//! axes, cylinders are centred with their axis along local z.

use serde::{Deserialize, Serialize};

use crate::ballistic::SimParams;
use crate::error::{Error, Result};
use crate::geometry::{Pose, Vec3};

/// Points closer to the surface than this are treated as already on it.
pub const ON_SURFACE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Geometry {
    Sphere { radius: f64 },
    /// Full edge lengths along local x, y, z.
    Box { size: [f64; 3] },
    Cylinder { radius: f64, height: f64 },
}

impl Geometry {
    pub fn validate(&self) -> Result<()> {
        let dims: Vec<f64> = match self {
            Geometry::Sphere { radius } => vec![*radius],
            Geometry::Box { size } => size.to_vec(),
            Geometry::Cylinder { radius, height } => vec![*radius, *height],
        };
        if dims.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::validation(format!("geometry dimensions must be positive: {self:?}")));
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> Geometry {
        match *self {
            Geometry::Sphere { radius } => Geometry::Sphere { radius: radius * s },
            Geometry::Box { size } => Geometry::Box {
                size: [size[0] * s, size[1] * s, size[2] * s],
            },
            Geometry::Cylinder { radius, height } => Geometry::Cylinder {
                radius: radius * s,
                height: height * s,
            },
        }
    }

    /// Largest bounding dimension, used to make torques commensurate with forces.
    pub fn characteristic_length(&self) -> f64 {
        match *self {
            Geometry::Sphere { radius } => 2.0 * radius,
            Geometry::Box { size } => size[0].max(size[1]).max(size[2]),
            Geometry::Cylinder { radius, height } => (2.0 * radius).max(height),
        }
    }

    /// Signed distance from a local-frame point to the surface (negative inside).
    pub fn signed_distance_local(&self, p: &Vec3) -> f64 {
        match *self {
            Geometry::Sphere { radius } => p.norm() - radius,
            Geometry::Box { size } => {
                let q = p.abs() - Vec3::from(size) * 0.5;
                let outside = q.map(|x| x.max(0.0)).norm();
                outside + q.max().min(0.0)
            }
            Geometry::Cylinder { radius, height } => {
                let d = [p.xy().norm() - radius, p.z.abs() - 0.5 * height];
                let outside = (d[0].max(0.0).powi(2) + d[1].max(0.0).powi(2)).sqrt();
                outside + d[0].max(d[1]).min(0.0)
            }
        }
    }

    /// Nearest surface point to a local-frame point.
    ///
    /// Interior points on a medial singularity (sphere centre, equidistant box faces,
    /// cylinder axis) resolve deterministically toward +x.
    pub fn closest_surface_point_local(&self, p: &Vec3) -> Vec3 {
        match *self {
            Geometry::Sphere { radius } => {
                let n = p.norm();
                if n < 1e-15 {
                    Vec3::new(radius, 0.0, 0.0)
                } else {
                    p * (radius / n)
                }
            }
            Geometry::Box { size } => {
                let h = Vec3::from(size) * 0.5;
                let inside = (0..3).all(|i| p[i].abs() <= h[i]);
                if !inside {
                    return Vec3::from_fn(|i, _| p[i].clamp(-h[i], h[i]));
                }
                // Face order +x, -x, +y, -y, +z, -z; strict < keeps the earliest on ties.
                let mut best = (f64::INFINITY, 0usize, 1.0f64);
                for axis in 0..3 {
                    for sign in [1.0, -1.0] {
                        let d = h[axis] - sign * p[axis];
                        if d < best.0 {
                            best = (d, axis, sign);
                        }
                    }
                }
                let mut out = *p;
                out[best.1] = best.2 * h[best.1];
                out
            }
            Geometry::Cylinder { radius, height } => {
                let hh = 0.5 * height;
                let rho = p.xy().norm();
                let radial = if rho < 1e-15 {
                    Vec3::x()
                } else {
                    Vec3::new(p.x / rho, p.y / rho, 0.0)
                };
                let inside = rho <= radius && p.z.abs() <= hh;
                if !inside {
                    let r = rho.min(radius);
                    let z = p.z.clamp(-hh, hh);
                    return radial * r + Vec3::z() * z;
                }
                let d_side = radius - rho;
                let d_cap = hh - p.z.abs();
                if d_side <= d_cap {
                    radial * radius + Vec3::z() * p.z
                } else {
                    let sign = if p.z >= 0.0 { 1.0 } else { -1.0 };
                    Vec3::new(p.x, p.y, sign * hh)
                }
            }
        }
    }

    /// Inward unit normal at (or nearest to) a local-frame surface point.
    pub fn inward_normal_local(&self, p: &Vec3) -> Vec3 {
        match *self {
            Geometry::Sphere { .. } => {
                let n = p.norm();
                if n < 1e-15 {
                    -Vec3::x()
                } else {
                    -p / n
                }
            }
            Geometry::Box { size } => {
                let h = Vec3::from(size) * 0.5;
                let mut best = (f64::NEG_INFINITY, 0usize);
                for axis in 0..3 {
                    let ratio = p[axis].abs() / h[axis];
                    if ratio > best.0 {
                        best = (ratio, axis);
                    }
                }
                let mut n = Vec3::zeros();
                n[best.1] = if p[best.1] >= 0.0 { -1.0 } else { 1.0 };
                n
            }
            Geometry::Cylinder { radius, height } => {
                let rho = p.xy().norm();
                let side_ratio = rho / radius;
                let cap_ratio = p.z.abs() / (0.5 * height);
                if side_ratio >= cap_ratio {
                    if rho < 1e-15 {
                        -Vec3::x()
                    } else {
                        -Vec3::new(p.x / rho, p.y / rho, 0.0)
                    }
                } else if p.z >= 0.0 {
                    -Vec3::z()
                } else {
                    Vec3::z()
                }
            }
        }
    }

    /// World-frame height of the lowest surface point when placed at `pose`.
    pub fn lowest_point(&self, pose: &Pose) -> f64 {
        let z = pose.position.z;
        match *self {
            Geometry::Sphere { radius } => z - radius,
            Geometry::Box { size } => {
                let r = pose.orientation.to_rotation_matrix();
                let m = r.matrix();
                z - (0..3).map(|j| m[(2, j)].abs() * 0.5 * size[j]).sum::<f64>()
            }
            Geometry::Cylinder { radius, height } => {
                let axis = pose.orientation * Vec3::z();
                let az = axis.z.abs().min(1.0);
                z - 0.5 * height * az - radius * (1.0 - az * az).sqrt()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub geometry: Geometry,
    pub mass: f64,
    #[serde(default)]
    pub sim: SimParams,
}

impl ObjectSpec {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(Error::validation(format!("object mass must be positive, got {}", self.mass)));
        }
        self.sim.validate()
    }

    pub fn signed_distance(&self, object_pose: &Pose, world_point: &Vec3) -> f64 {
        self.geometry
            .signed_distance_local(&object_pose.inverse_transform_point(world_point))
    }
}
