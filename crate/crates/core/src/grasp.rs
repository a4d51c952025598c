//! Friction-cone force closure and contact projection for primitive objects.
//!
//! Closure is decided on the 6-D wrench set generated by linearized friction cones. The set is
//! in force closure iff the origin is interior to its convex hull, which holds iff the hull
//! reaches a positive distance along each of the twelve signed coordinate axes. Each such
//! reach is one small linear program.
//!
//! Contacts are soft fingers: besides the Coulomb cone each contact resists torsion about its
//! normal up to `mu * patch_radius` per unit normal force. With `patch_radius = 0` this is the
//! plain point-contact model, under which two contacts can never resist torsion about the line
//! joining them.

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::Vector6;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Pose, Vec3};
use crate::motion::AnchorSpec;
use crate::shape::{ObjectSpec, ON_SURFACE_TOL};

pub type Wrench = Vector6<f64>;

/// Reach along a probe must exceed this for closure.
pub const CLOSURE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Contact {
    /// Contact location in the object frame (m).
    pub point: Vec3,
    /// Inward unit surface normal in the object frame.
    pub normal: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactSet {
    pub contacts: Vec<Contact>,
    pub friction_mu: f64,
    pub cone_edges: usize,
    /// Length used to scale torques; 1 when absent.
    #[serde(default = "one")]
    pub characteristic_length: f64,
    /// Radius of the contact patch giving torsional friction (m).
    #[serde(default = "default_patch_radius")]
    pub patch_radius: f64,
}

/// Palm-sized contact patch.
pub const DEFAULT_PATCH_RADIUS: f64 = 0.03;

fn one() -> f64 {
    1.0
}

fn default_patch_radius() -> f64 {
    DEFAULT_PATCH_RADIUS
}

impl ContactSet {
    pub fn validate(&self) -> Result<()> {
        if self.contacts.is_empty() {
            return Err(Error::validation("contact set is empty"));
        }
        if !(self.friction_mu >= 0.0 && self.friction_mu.is_finite()) {
            return Err(Error::validation(format!("friction_mu must be >= 0, got {}", self.friction_mu)));
        }
        if !(self.characteristic_length > 0.0 && self.characteristic_length.is_finite()) {
            return Err(Error::validation("characteristic_length must be positive"));
        }
        if !(self.patch_radius >= 0.0 && self.patch_radius.is_finite()) {
            return Err(Error::validation("patch_radius must be >= 0"));
        }
        for (i, c) in self.contacts.iter().enumerate() {
            if (c.normal.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::validation(format!("contact {i} normal is not unit length")));
            }
            if c.point.iter().any(|x| !x.is_finite()) {
                return Err(Error::validation(format!("contact {i} point is not finite")));
            }
        }
        if self.cone_edges < 3 && self.friction_mu > 0.0 {
            return Err(Error::validation("friction cone needs at least 3 edges"));
        }
        Ok(())
    }

    /// Apply a rigid transform to every contact point and normal.
    pub fn transformed(&self, pose: &Pose) -> ContactSet {
        ContactSet {
            contacts: self
                .contacts
                .iter()
                .map(|c| Contact {
                    point: pose.transform_point(&c.point),
                    normal: pose.orientation * c.normal,
                })
                .collect(),
            ..self.clone()
        }
    }
}

/// Unit force directions on the boundary of the friction cone around `normal`.
///
/// Edges sit at half-angle atan(mu), evenly spaced in azimuth. The azimuth origin is the
/// normal's component-wise most orthogonal world axis, so the layout is deterministic.
pub fn friction_cone_discretize(normal: &Vec3, mu: f64, m_edges: usize) -> Result<Vec<Vec3>> {
    if (normal.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::validation("cone normal must be unit length"));
    }
    if mu < 0.0 || !mu.is_finite() {
        return Err(Error::validation(format!("friction coefficient must be >= 0, got {mu}")));
    }
    if mu > 0.0 && m_edges < 3 {
        return Err(Error::validation(format!(
            "a friction cone needs at least 3 edges, got {m_edges}"
        )));
    }
    if mu == 0.0 {
        return Ok(vec![*normal; m_edges.max(1)]);
    }
    let (t1, t2) = tangent_basis(normal);
    let half = mu.atan();
    let (c, s) = (half.cos(), half.sin());
    Ok((0..m_edges)
        .map(|k| {
            let phi = std::f64::consts::TAU * k as f64 / m_edges as f64;
            (normal * c + (t1 * phi.cos() + t2 * phi.sin()) * s).normalize()
        })
        .collect())
}

fn tangent_basis(n: &Vec3) -> (Vec3, Vec3) {
    let a = n.abs();
    let seed = if a.x <= a.y && a.x <= a.z {
        Vec3::x()
    } else if a.y <= a.z {
        Vec3::y()
    } else {
        Vec3::z()
    };
    let t1 = (seed - n * n.dot(&seed)).normalize();
    (t1, n.cross(&t1))
}

/// All scaled contact wrenches (force; torque / L) of a contact set.
///
/// Per contact: one generator per cone edge, plus the pure normal force with maximal
/// positive and negative torsion when the contact has a friction patch.
pub fn contact_wrenches(set: &ContactSet) -> Result<Vec<Wrench>> {
    let l = set.characteristic_length;
    let torsion = set.friction_mu * set.patch_radius;
    let mut out = Vec::new();
    let mut push = |f: Vec3, tau: Vec3| out.push(Wrench::new(f.x, f.y, f.z, tau.x / l, tau.y / l, tau.z / l));
    for c in &set.contacts {
        for f in friction_cone_discretize(&c.normal, set.friction_mu, set.cone_edges)? {
            push(f, c.point.cross(&f));
        }
        if torsion > 0.0 {
            let base = c.point.cross(&c.normal);
            push(c.normal, base + c.normal * torsion);
            push(c.normal, base - c.normal * torsion);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosureResult {
    pub closure: bool,
    /// Smallest reach of the wrench hull along the signed axis probes; <= 0 without closure.
    pub margin: f64,
}

/// Largest `s` with `s * dir` inside the convex hull of `wrenches`; `None` if the probe line
/// misses the hull.
fn probe_reach(wrenches: &[Wrench], dir: &Wrench) -> Result<Option<f64>> {
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let alphas: Vec<_> = wrenches.iter().map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect();
    let s = lp.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    for row in 0..6 {
        let mut terms: Vec<_> = alphas
            .iter()
            .zip(wrenches)
            .filter(|(_, w)| w[row] != 0.0)
            .map(|(&a, w)| (a, w[row]))
            .collect();
        if dir[row] != 0.0 {
            terms.push((s, -dir[row]));
        }
        lp.add_constraint(terms.as_slice(), ComparisonOp::Eq, 0.0);
    }
    let sum: Vec<_> = alphas.iter().map(|&a| (a, 1.0)).collect();
    lp.add_constraint(sum.as_slice(), ComparisonOp::Eq, 1.0);
    match lp.solve() {
        Ok(microlp::SolveOutcome::Solution(sol)) => Ok(Some(sol.var_value(s))),
        Ok(microlp::SolveOutcome::Interrupted(_)) => Err(Error::Lp("solve interrupted".into())),
        Err(microlp::Error::Infeasible) => Ok(None),
        Err(e) => Err(Error::Lp(e.to_string())),
    }
}

/// Decide force closure of a contact set by linear programming.
pub fn force_closure_test(set: &ContactSet) -> Result<ClosureResult> {
    set.validate()?;
    let wrenches = contact_wrenches(set)?;
    let mut margin = f64::INFINITY;
    let mut closure = true;
    for axis in 0..6 {
        for sign in [1.0, -1.0] {
            let mut dir = Wrench::zeros();
            dir[axis] = sign;
            match probe_reach(&wrenches, &dir)? {
                Some(r) => {
                    margin = margin.min(r);
                    if r <= CLOSURE_EPS {
                        closure = false;
                    }
                }
                None => {
                    closure = false;
                    margin = margin.min(0.0);
                }
            }
        }
    }
    if !closure {
        margin = margin.min(0.0);
    }
    Ok(ClosureResult { closure, margin })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub adjusted_points: Vec<Vec3>,
    /// Mean world-frame correction applied to the points.
    pub offset: Vec3,
}

/// Move world-frame points onto the object surface.
pub fn project_contacts_to_surface(points: &[Vec3], object_pose: &Pose, spec: &ObjectSpec) -> Projection {
    let mut adjusted = Vec::with_capacity(points.len());
    let mut offset = Vec3::zeros();
    for p in points {
        let local = object_pose.inverse_transform_point(p);
        if spec.geometry.signed_distance_local(&local).abs() <= ON_SURFACE_TOL {
            adjusted.push(*p);
            continue;
        }
        let q = object_pose.transform_point(&spec.geometry.closest_surface_point_local(&local));
        offset += q - p;
        adjusted.push(q);
    }
    if !points.is_empty() {
        offset /= points.len() as f64;
    }
    Projection {
        adjusted_points: adjusted,
        offset,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosureReport {
    pub frame: usize,
    pub closure: bool,
    pub margin: f64,
    pub num_contacts: usize,
    pub mean_offset: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinedFrame {
    pub keypoints: Vec<Pose>,
    pub contacts: ContactSet,
    pub report: ClosureReport,
}

/// Grasp refinement settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraspConfig {
    pub enabled: bool,
    /// Keypoints projected onto the surface; the anchor's keypoints when empty.
    pub contact_keypoints: Vec<String>,
    /// Keypoints carried along rigidly by the mean correction.
    pub follower_keypoints: Vec<String>,
    pub friction_mu: f64,
    pub cone_edges: usize,
    pub patch_radius: f64,
}

impl Default for GraspConfig {
    fn default() -> Self {
        GraspConfig {
            enabled: true,
            contact_keypoints: Vec::new(),
            follower_keypoints: Vec::new(),
            friction_mu: 0.5,
            cone_edges: 8,
            patch_radius: DEFAULT_PATCH_RADIUS,
        }
    }
}

impl GraspConfig {
    pub fn contact_names(&self, anchor: &AnchorSpec) -> Vec<String> {
        if self.contact_keypoints.is_empty() {
            anchor.keypoint_names.clone()
        } else {
            self.contact_keypoints.clone()
        }
    }
}

/// Project contact keypoints onto the object, carry followers by the mean correction and
/// test closure of the resulting contacts.
pub fn refine_contact_frame(
    frame_index: usize,
    keypoints: &[Pose],
    object_pose: &Pose,
    spec: &ObjectSpec,
    contact_idx: &[usize],
    follower_idx: &[usize],
    cfg: &GraspConfig,
) -> Result<RefinedFrame> {
    let pts: Vec<Vec3> = contact_idx.iter().map(|&i| keypoints[i].position).collect();
    let proj = project_contacts_to_surface(&pts, object_pose, spec);
    let mut out = keypoints.to_vec();
    for (&i, p) in contact_idx.iter().zip(&proj.adjusted_points) {
        out[i].position = *p;
    }
    for &i in follower_idx {
        if !contact_idx.contains(&i) {
            out[i].position += proj.offset;
        }
    }
    let contacts = proj
        .adjusted_points
        .iter()
        .map(|p| {
            let local = object_pose.inverse_transform_point(p);
            Contact {
                point: local,
                normal: spec.geometry.inward_normal_local(&local),
            }
        })
        .collect();
    let set = ContactSet {
        contacts,
        friction_mu: cfg.friction_mu,
        cone_edges: cfg.cone_edges,
        characteristic_length: spec.geometry.characteristic_length(),
        patch_radius: cfg.patch_radius,
    };
    let res = force_closure_test(&set)?;
    Ok(RefinedFrame {
        keypoints: out,
        report: ClosureReport {
            frame: frame_index,
            closure: res.closure,
            margin: res.margin,
            num_contacts: set.contacts.len(),
            mean_offset: proj.offset,
        },
        contacts: set,
    })
}
