//! Interaction-clip synthesis.
//!
//! A clip is split into a pre-contact flight, a contact phase and a post-contact flight. During
//! contact the object rides rigidly on the anchor frame through a fixed relative transform φ.
//! The flights are produced by the ballistic simulator: forward from the release state, and
//! backward from the catch state for the pre-contact part.
//!
//! Order of operations in [`rebuild`]:
//! 1. propagate the object over the contact phase from the stored anchor series;
//! 2. project contact keypoints onto the object surface and test closure, frame by frame
//!    (frames strictly inside a blend window are skipped since blending replaces them);
//! 3. blend the body across the phase boundaries;
//! 4. simulate the flights from the boundary states;
//! 5. annotate the contact graph on the final body motion and assemble.
//!
//! The anchor series stored in a clip is the one used for propagation. Blending and
//! refinement move body keypoints afterwards, so an anchor re-derived from the final motion
//! can differ from it near the boundaries.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::ballistic::{simulate_frames_forward, simulate_frames_reverse, BodyState};
use crate::error::{Error, Result};
use crate::geometry::{slerp_unit, Pose, Quat, Vec3};
use crate::grasp::{refine_contact_frame, ClosureReport, GraspConfig};
use crate::motion::{
    derive_anchor_trajectory, finite_difference_velocities, AnchorSpec, FrameWire, MotionClip, MotionFrame,
    MotionWire, PoseSeries,
};
use crate::shape::ObjectSpec;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_CONTACT_THRESHOLD: f64 = 0.02;
pub const DEFAULT_VELOCITY_TOLERANCE: f64 = 0.05;
/// Allowed deviation of anchor⁻¹ ∘ object from φ during contact (m and rad).
pub const PHI_TOLERANCE: f64 = 1e-9;
/// Allowed mismatch between a flight's boundary pose and the contact-phase pose there.
pub const STITCH_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseAnnotation {
    /// First contact frame.
    pub t_s: usize,
    /// Last contact frame.
    pub t_e: usize,
    pub anchor: AnchorSpec,
    #[serde(default)]
    pub blend_window_k: usize,
}

impl PhaseAnnotation {
    pub fn validate(&self, clip_len: usize) -> Result<()> {
        self.anchor.validate()?;
        if self.t_s > self.t_e {
            return Err(Error::validation(format!(
                "contact start t_s = {} is after contact end t_e = {}",
                self.t_s, self.t_e
            )));
        }
        if self.t_e >= clip_len {
            return Err(Error::validation(format!(
                "contact end t_e = {} is outside a clip of {clip_len} frames",
                self.t_e
            )));
        }
        let room = self.t_s.min(clip_len - 1 - self.t_e);
        if self.blend_window_k > room {
            return Err(Error::validation(format!(
                "blend window k = {} exceeds the {room} frames available at the phase boundaries",
                self.blend_window_k
            )));
        }
        Ok(())
    }
}

/// Half-open frame ranges of the three phases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseRanges {
    pub pre: Range<usize>,
    pub contact: Range<usize>,
    pub post: Range<usize>,
}

pub fn segment_phases(annotation: &PhaseAnnotation, clip_len: usize) -> Result<PhaseRanges> {
    annotation.validate(clip_len)?;
    Ok(PhaseRanges {
        pre: 0..annotation.t_s,
        contact: annotation.t_s..annotation.t_e + 1,
        post: annotation.t_e + 1..clip_len,
    })
}

/// Anchor-to-object transform φ.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RelativeTransform(pub Pose);

impl RelativeTransform {
    pub fn new(translation: Vec3, rotation: Quat) -> Self {
        RelativeTransform(Pose::new(translation, rotation))
    }

    pub fn translation(&self) -> Vec3 {
        self.0.position
    }

    pub fn rotation(&self) -> Quat {
        self.0.orientation
    }

    /// Object pose carried by `anchor`.
    pub fn apply(&self, anchor: &Pose) -> Pose {
        anchor.compose(&self.0)
    }

    /// Larger of the translation and rotation deviation of `anchor⁻¹ ∘ object` from φ.
    pub fn deviation(&self, anchor: &Pose, object: &Pose) -> f64 {
        let (dp, dr) = anchor.relative_to(object).distance(&self.0);
        dp.max(dr)
    }
}

/// φ with `object_at_ts = anchor_at_ts ∘ φ`.
pub fn estimate_relative_pose(anchor_at_ts: &Pose, object_at_ts: &Pose) -> RelativeTransform {
    RelativeTransform(anchor_at_ts.relative_to(object_at_ts))
}

/// Object poses `anchor[i] ∘ φ` over `range`, with finite-difference velocities.
///
/// Differences are taken over the anchor-carried pose including one frame on either side of
/// the range when available, so the boundary velocities are central estimates.
pub fn propagate_contact_trajectory(
    anchor: &PoseSeries,
    phi: &RelativeTransform,
    range: Range<usize>,
) -> Result<PoseSeries> {
    if range.is_empty() || range.end > anchor.len() {
        return Err(Error::validation(format!(
            "contact range {range:?} does not fit an anchor series of {} frames",
            anchor.len()
        )));
    }
    let lo = range.start.saturating_sub(1);
    let hi = (range.end + 1).min(anchor.len());
    let carried = PoseSeries::new(anchor.fps, anchor.poses[lo..hi].iter().map(|a| phi.apply(a)).collect());
    let carried = if carried.len() >= 2 {
        finite_difference_velocities(&carried)?
    } else {
        PoseSeries {
            velocities: Some(vec![Default::default(); carried.len()]),
            ..carried
        }
    };
    let off = range.start - lo;
    Ok(carried.slice(off..off + range.len()))
}

// Interpolation that returns an endpoint unchanged when both endpoints agree.
fn lerp_exact(a: f64, b: f64, u: f64) -> f64 {
    if a == b {
        a
    } else {
        a + (b - a) * u
    }
}

fn blend_pose(a: &Pose, b: &Pose, u: f64) -> Pose {
    let position = Vec3::new(
        lerp_exact(a.position.x, b.position.x, u),
        lerp_exact(a.position.y, b.position.y, u),
        lerp_exact(a.position.z, b.position.z, u),
    );
    let orientation = if a.orientation == b.orientation {
        a.orientation
    } else {
        slerp_unit(&a.orientation, &b.orientation, u)
    };
    Pose::new(position, orientation)
}

fn blend_frame(a: &MotionFrame, b: &MotionFrame, u: f64) -> MotionFrame {
    let lerp_vec = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| lerp_exact(*p, *q, u)).collect();
    MotionFrame {
        root: blend_pose(&a.root, &b.root, u),
        joints: lerp_vec(&a.joints, &b.joints),
        keypoints: a
            .keypoints
            .iter()
            .zip(&b.keypoints)
            .map(|(p, q)| blend_pose(p, q, u))
            .collect(),
        joint_velocities: match (&a.joint_velocities, &b.joint_velocities) {
            (Some(x), Some(y)) => Some(lerp_vec(x, y)),
            _ => None,
        },
    }
}

/// Replace the frames strictly inside `[b - k, b + k]` around each phase boundary by an
/// interpolation between the two window end frames.
pub fn blend_transitions(motion: &MotionClip, phases: &PhaseAnnotation) -> Result<MotionClip> {
    phases.validate(motion.len())?;
    let k = phases.blend_window_k;
    let mut out = motion.clone();
    if k == 0 {
        return Ok(out);
    }
    for b in [phases.t_s, phases.t_e] {
        let (lo, hi) = (b - k, b + k);
        let (a, z) = (out.frames[lo].clone(), out.frames[hi].clone());
        for i in lo + 1..hi {
            let u = (i - lo) as f64 / (hi - lo) as f64;
            out.frames[i] = blend_frame(&a, &z, u);
        }
    }
    Ok(out)
}

/// Per-frame binary contact vector: entry j is 1 when key body j is within `threshold` of the
/// object surface (or inside it).
pub fn annotate_contact_graph(
    motion: &MotionClip,
    object_poses: &[Pose],
    spec: &ObjectSpec,
    key_bodies: &[String],
    threshold: f64,
) -> Result<Vec<Vec<u8>>> {
    if !(threshold.is_finite() && threshold >= 0.0) {
        return Err(Error::validation(format!("contact threshold must be non-negative, got {threshold}")));
    }
    if object_poses.len() != motion.len() {
        return Err(Error::Dimension {
            context: "object poses vs motion frames",
            expected: motion.len(),
            actual: object_poses.len(),
        });
    }
    let idx = motion.keypoint_indices(key_bodies)?;
    Ok(motion
        .frames
        .iter()
        .zip(object_poses)
        .map(|(f, pose)| {
            idx.iter()
                .map(|&j| u8::from(spec.signed_distance(pose, &f.keypoints[j].position) <= threshold))
                .collect()
        })
        .collect())
}

/// How the flight on one side of the contact phase is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlightMode {
    /// Free flight under gravity and drag.
    #[default]
    Ballistic,
    /// Object held at the boundary pose, at rest.
    Static,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlightConfig {
    pub mode: FlightMode,
    /// Added to the contact-phase velocity at the boundary before simulating.
    pub velocity_offset: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSettings {
    /// Key bodies tracked by the contact graph.
    pub contact_bodies: Vec<String>,
    pub contact_threshold: f64,
    pub grasp: GraspConfig,
    pub pre: FlightConfig,
    pub post: FlightConfig,
    /// Boundary velocity jump above which a warning is recorded (m/s).
    pub velocity_tolerance: f64,
}

impl Default for SynthSettings {
    fn default() -> Self {
        SynthSettings {
            contact_bodies: Vec::new(),
            contact_threshold: DEFAULT_CONTACT_THRESHOLD,
            grasp: GraspConfig::default(),
            pre: FlightConfig::default(),
            post: FlightConfig::default(),
            velocity_tolerance: DEFAULT_VELOCITY_TOLERANCE,
        }
    }
}

impl SynthSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.contact_threshold.is_finite() && self.contact_threshold >= 0.0) {
            return Err(Error::validation("contact_threshold must be non-negative"));
        }
        if !(self.velocity_tolerance.is_finite() && self.velocity_tolerance >= 0.0) {
            return Err(Error::validation("velocity_tolerance must be non-negative"));
        }
        let g = &self.grasp;
        if !(g.friction_mu.is_finite() && g.friction_mu >= 0.0) {
            return Err(Error::validation("grasp friction_mu must be non-negative"));
        }
        if !(g.patch_radius.is_finite() && g.patch_radius >= 0.0) {
            return Err(Error::validation("grasp patch_radius must be non-negative"));
        }
        if g.friction_mu > 0.0 && g.cone_edges < 3 {
            return Err(Error::validation("grasp cone_edges must be at least 3"));
        }
        for f in [&self.pre, &self.post] {
            if f.velocity_offset.iter().any(|x| !x.is_finite()) {
                return Err(Error::validation("velocity_offset must be finite"));
            }
        }
        Ok(())
    }
}

/// Source of φ: given directly, or measured from the object pose at contact start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RelativeSource {
    Explicit(RelativeTransform),
    ObjectAtContactStart(Pose),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub phases: PhaseAnnotation,
    pub object: ObjectSpec,
    pub relative: RelativeSource,
    #[serde(default)]
    pub settings: SynthSettings,
}

/// One augmentation step, with everything needed to replay it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum AppliedTransform {
    ScaleObject {
        s: f64,
    },
    TransformContact {
        translation: Vec3,
        scale: f64,
    },
    RandomizeVelocity {
        seed: u64,
        index: u64,
        pre_delta: Vec3,
        post_delta: Vec3,
    },
    MocapDropout {
        seed: u64,
        p_loss: f64,
        mean_burst_len: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryJumps {
    pub pre: Option<f64>,
    pub post: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub clip_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
    #[serde(default)]
    pub transforms: Vec<AppliedTransform>,
    /// Largest deviation of anchor⁻¹ ∘ object from φ over the contact phase.
    pub max_phi_error: f64,
    pub boundary_velocity_jumps: BoundaryJumps,
    #[serde(default)]
    pub warnings: Vec<String>,
    #[serde(default)]
    pub caveats: Vec<String>,
}

impl Provenance {
    pub fn root(clip_id: &str) -> Self {
        Provenance {
            clip_id: clip_id.to_string(),
            ..Default::default()
        }
    }
}

/// Object observation as seen through a lossy tracker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectObservation {
    pub poses: Vec<Pose>,
    pub lost: Vec<bool>,
}

/// Motion plus synchronized object trajectory, contact graph and synthesis record.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionClip {
    pub motion: MotionClip,
    pub object: Vec<BodyState>,
    /// Anchor series used to carry the object during contact.
    pub anchor: Vec<Pose>,
    pub relative_transform: RelativeTransform,
    pub contact_graph: Vec<Vec<u8>>,
    pub phases: PhaseAnnotation,
    pub object_spec: ObjectSpec,
    pub settings: SynthSettings,
    pub grasp_reports: Vec<ClosureReport>,
    pub object_observation: Option<ObjectObservation>,
    pub provenance: Provenance,
}

impl InteractionClip {
    pub fn len(&self) -> usize {
        self.motion.len()
    }

    pub fn is_empty(&self) -> bool {
        self.motion.is_empty()
    }

    pub fn object_poses(&self) -> Vec<Pose> {
        self.object.iter().map(|s| s.pose).collect()
    }

    pub fn phase_ranges(&self) -> PhaseRanges {
        PhaseRanges {
            pre: 0..self.phases.t_s,
            contact: self.phases.t_s..self.phases.t_e + 1,
            post: self.phases.t_e + 1..self.len(),
        }
    }

    /// Largest φ deviation over the contact phase.
    pub fn phi_error(&self) -> f64 {
        self.phase_ranges()
            .contact
            .map(|i| self.relative_transform.deviation(&self.anchor[i], &self.object[i].pose))
            .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        self.motion.validate()?;
        self.object_spec.validate()?;
        self.settings.validate()?;
        let n = self.len();
        self.phases.validate(n)?;
        for (context, len) in [
            ("object frames", self.object.len()),
            ("anchor frames", self.anchor.len()),
            ("contact graph frames", self.contact_graph.len()),
        ] {
            if len != n {
                return Err(Error::Dimension {
                    context,
                    expected: n,
                    actual: len,
                });
            }
        }
        let j = self.settings.contact_bodies.len();
        for (i, row) in self.contact_graph.iter().enumerate() {
            if row.len() != j {
                return Err(Error::validation(format!(
                    "contact graph frame {i} has {} entries, expected {j}",
                    row.len()
                )));
            }
            if row.iter().any(|&x| x > 1) {
                return Err(Error::validation(format!("contact graph frame {i} has a non-binary entry")));
            }
        }
        self.motion.keypoint_indices(&self.settings.contact_bodies)?;
        if let Some(obs) = &self.object_observation {
            if obs.poses.len() != n || obs.lost.len() != n {
                return Err(Error::validation("object observation length differs from the clip"));
            }
        }
        let err = self.phi_error();
        if !(err <= PHI_TOLERANCE) {
            return Err(Error::validation(format!(
                "anchor-relative object transform deviates from phi by {err:.3e} during contact"
            )));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClipWire {
    schema_version: u32,
    fps: f64,
    joint_names: Vec<String>,
    keypoint_names: Vec<String>,
    frames: Vec<FrameWire>,
    object: Vec<BodyState>,
    anchor: Vec<Pose>,
    relative_transform: RelativeTransform,
    contact_graph: Vec<Vec<u8>>,
    phases: PhaseAnnotation,
    object_spec: ObjectSpec,
    synthesis: SynthSettings,
    grasp_reports: Vec<ClosureReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    object_observation: Option<ObjectObservation>,
    provenance: Provenance,
}

impl Serialize for InteractionClip {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let m = MotionWire::from_clip(&self.motion);
        ClipWire {
            schema_version: SCHEMA_VERSION,
            fps: m.fps,
            joint_names: m.joint_names,
            keypoint_names: m.keypoint_names,
            frames: m.frames,
            object: self.object.clone(),
            anchor: self.anchor.clone(),
            relative_transform: self.relative_transform,
            contact_graph: self.contact_graph.clone(),
            phases: self.phases.clone(),
            object_spec: self.object_spec,
            synthesis: self.settings.clone(),
            grasp_reports: self.grasp_reports.clone(),
            object_observation: self.object_observation.clone(),
            provenance: self.provenance.clone(),
        }
        .serialize(s)
    }
}

impl InteractionClip {
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let w: ClipWire = serde_json::from_slice(bytes)?;
        if w.schema_version != SCHEMA_VERSION {
            return Err(Error::validation(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                w.schema_version
            )));
        }
        let motion = MotionWire {
            fps: w.fps,
            joint_names: w.joint_names,
            keypoint_names: w.keypoint_names,
            frames: w.frames,
        }
        .into_clip()?;
        let clip = InteractionClip {
            motion,
            object: w.object,
            anchor: w.anchor,
            relative_transform: w.relative_transform,
            contact_graph: w.contact_graph,
            phases: w.phases,
            object_spec: w.object_spec,
            settings: w.synthesis,
            grasp_reports: w.grasp_reports,
            object_observation: w.object_observation,
            provenance: w.provenance,
        };
        clip.validate()?;
        Ok(clip)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("interaction clip serialization is infallible")
    }
}

/// Everything [`assemble_interaction_clip`] stitches together.
///
/// `pre` holds `t_s + 1` states ending with the flight's own state at `t_s`; `post` holds
/// `len - t_e` states starting with its state at `t_e`. The boundary states are checked
/// against the contact phase and then dropped.
#[derive(Debug, Clone)]
pub struct ClipParts {
    pub motion: MotionClip,
    pub anchor: Vec<Pose>,
    pub phi: RelativeTransform,
    pub phases: PhaseAnnotation,
    pub object_spec: ObjectSpec,
    pub settings: SynthSettings,
    pub contact: PoseSeries,
    pub pre: Vec<BodyState>,
    pub post: Vec<BodyState>,
    pub grasp_reports: Vec<ClosureReport>,
    pub provenance: Provenance,
}

fn boundary_jump(flight: &BodyState, contact_pose: &Pose, contact_vel: &Vec3, which: &str) -> Result<f64> {
    let d = (flight.pose.position - contact_pose.position).norm();
    if !(d <= STITCH_TOLERANCE) {
        return Err(Error::validation(format!(
            "{which} flight boundary pose is {d:.3e} m from the contact phase"
        )));
    }
    Ok((flight.lin_vel - contact_vel).norm())
}

pub fn assemble_interaction_clip(parts: ClipParts) -> Result<InteractionClip> {
    let ClipParts {
        motion,
        anchor,
        phi,
        phases,
        object_spec,
        settings,
        contact,
        pre,
        post,
        grasp_reports,
        mut provenance,
    } = parts;
    let n = motion.len();
    let r = segment_phases(&phases, n)?;
    for (context, expected, actual) in [
        ("anchor frames", n, anchor.len()),
        ("contact segment", r.contact.len(), contact.len()),
        ("pre-contact segment", r.pre.len() + 1, pre.len()),
        ("post-contact segment", r.post.len() + 1, post.len()),
    ] {
        if expected != actual {
            return Err(Error::Dimension {
                context,
                expected,
                actual,
            });
        }
    }
    let vel = contact
        .velocities
        .clone()
        .ok_or_else(|| Error::validation("contact segment has no velocities"))?;
    let last = contact.len() - 1;

    let mut jumps = BoundaryJumps::default();
    if !r.pre.is_empty() {
        jumps.pre = Some(boundary_jump(&pre[r.pre.len()], &contact.poses[0], &vel[0].linear, "pre-contact")?);
    }
    if !r.post.is_empty() {
        jumps.post = Some(boundary_jump(&post[0], &contact.poses[last], &vel[last].linear, "post-contact")?);
    }

    let mut object = Vec::with_capacity(n);
    object.extend_from_slice(&pre[..r.pre.len()]);
    object.extend(contact.poses.iter().zip(&vel).map(|(p, v)| BodyState {
        pose: *p,
        lin_vel: v.linear,
        ang_vel: v.angular,
    }));
    object.extend_from_slice(&post[1..]);

    let poses: Vec<Pose> = object.iter().map(|s| s.pose).collect();
    let contact_graph = annotate_contact_graph(
        &motion,
        &poses,
        &object_spec,
        &settings.contact_bodies,
        settings.contact_threshold,
    )?;

    let mut warnings = Vec::new();
    let lost = grasp_reports.iter().filter(|g| !g.closure).count();
    if lost > 0 {
        warnings.push(format!(
            "grasp lacks force closure at {lost} of {} contact frames",
            grasp_reports.len()
        ));
    }
    for (side, j) in [("pre-contact", jumps.pre), ("post-contact", jumps.post)] {
        if let Some(j) = j {
            if j > settings.velocity_tolerance {
                warnings.push(format!(
                    "{side} boundary velocity jump {j:.4} m/s exceeds tolerance {} m/s",
                    settings.velocity_tolerance
                ));
            }
        }
    }
    provenance.warnings = warnings;
    provenance.boundary_velocity_jumps = jumps;

    let mut clip = InteractionClip {
        motion,
        object,
        anchor,
        relative_transform: phi,
        contact_graph,
        phases,
        object_spec,
        settings,
        grasp_reports,
        object_observation: None,
        provenance,
    };
    clip.provenance.max_phi_error = clip.phi_error();
    clip.validate()?;
    Ok(clip)
}

fn flight(
    mode: FlightMode,
    boundary: &BodyState,
    spec: &ObjectSpec,
    frame_dt: f64,
    n_frames: usize,
    reverse: bool,
) -> Result<Vec<BodyState>> {
    match mode {
        FlightMode::Static => Ok(vec![BodyState::at_rest(boundary.pose); n_frames + 1]),
        FlightMode::Ballistic if reverse => simulate_frames_reverse(boundary, &spec.sim, frame_dt, n_frames),
        FlightMode::Ballistic => Ok(simulate_frames_forward(boundary, &spec.sim, frame_dt, n_frames)),
    }
}

/// Synthesize a clip from a body motion, an anchor series and φ.
///
/// Augmentations call this with modified inputs; [`synthesize`] derives the anchor first.
pub fn rebuild(
    motion: &MotionClip,
    anchor: &[Pose],
    phi: &RelativeTransform,
    phases: &PhaseAnnotation,
    spec: &ObjectSpec,
    settings: &SynthSettings,
    provenance: Provenance,
) -> Result<InteractionClip> {
    motion.validate()?;
    spec.validate()?;
    settings.validate()?;
    let r = segment_phases(phases, motion.len())?;
    if anchor.len() != motion.len() {
        return Err(Error::Dimension {
            context: "anchor frames",
            expected: motion.len(),
            actual: anchor.len(),
        });
    }
    let anchor_series = PoseSeries::new(motion.fps, anchor.to_vec());
    let contact = propagate_contact_trajectory(&anchor_series, phi, r.contact.clone())?;

    let mut body = motion.clone();
    let mut reports = Vec::new();
    if settings.grasp.enabled {
        let cidx = motion.keypoint_indices(&settings.grasp.contact_names(&phases.anchor))?;
        let fidx = motion.keypoint_indices(&settings.grasp.follower_keypoints)?;
        let k = phases.blend_window_k;
        let blended = |i: usize| {
            k > 0 && ((i + k > phases.t_s && i < phases.t_s + k) || (i + k > phases.t_e && i < phases.t_e + k))
        };
        for (c, i) in r.contact.clone().enumerate() {
            // Blending overwrites these frames, so refining them would leave no trace.
            if blended(i) {
                continue;
            }
            let refined = refine_contact_frame(
                i,
                &body.frames[i].keypoints,
                &contact.poses[c],
                spec,
                &cidx,
                &fidx,
                &settings.grasp,
            )?;
            body.frames[i].keypoints = refined.keypoints;
            reports.push(refined.report);
        }
    }
    let body = blend_transitions(&body, phases)?;

    let vel = contact.velocities.as_ref().expect("propagation fills velocities");
    let dt = motion.dt();
    let start = BodyState {
        pose: contact.poses[0],
        lin_vel: vel[0].linear + settings.pre.velocity_offset,
        ang_vel: vel[0].angular,
    };
    let last = contact.len() - 1;
    let end = BodyState {
        pose: contact.poses[last],
        lin_vel: vel[last].linear + settings.post.velocity_offset,
        ang_vel: vel[last].angular,
    };
    let pre = if r.pre.is_empty() {
        vec![start]
    } else {
        flight(settings.pre.mode, &start, spec, dt, r.pre.len(), true)?
    };
    let post = if r.post.is_empty() {
        vec![end]
    } else {
        flight(settings.post.mode, &end, spec, dt, r.post.len(), false)?
    };

    assemble_interaction_clip(ClipParts {
        motion: body,
        anchor: anchor.to_vec(),
        phi: *phi,
        phases: phases.clone(),
        object_spec: *spec,
        settings: settings.clone(),
        contact,
        pre,
        post,
        grasp_reports: reports,
        provenance,
    })
}

/// Full pipeline from a retargeted motion clip.
pub fn synthesize(motion: &MotionClip, cfg: &SynthConfig, clip_id: &str) -> Result<InteractionClip> {
    motion.validate()?;
    cfg.phases.validate(motion.len())?;
    cfg.object.validate()?;
    cfg.settings.validate()?;
    let anchor = derive_anchor_trajectory(motion, &cfg.phases.anchor)?;
    let phi = match cfg.relative {
        RelativeSource::Explicit(phi) => phi,
        RelativeSource::ObjectAtContactStart(obj) => estimate_relative_pose(&anchor.poses[cfg.phases.t_s], &obj),
    };
    rebuild(
        motion,
        &anchor.poses,
        &phi,
        &cfg.phases,
        &cfg.object,
        &cfg.settings,
        Provenance::root(clip_id),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::shape::Geometry;
    use approx::assert_relative_eq;
    use nalgebra::UnitQuaternion;
    use proptest::prelude::*;

    fn annotation(t_s: usize, t_e: usize, k: usize) -> PhaseAnnotation {
        PhaseAnnotation {
            t_s,
            t_e,
            anchor: AnchorSpec::midpoint("left_palm", "right_palm"),
            blend_window_k: k,
        }
    }

    #[test]
    fn phases_cover_the_clip() {
        let r = segment_phases(&annotation(10, 20, 0), 30).unwrap();
        assert_eq!((r.pre, r.contact, r.post), (0..10, 10..21, 21..30));
        let all = segment_phases(&annotation(0, 29, 0), 30).unwrap();
        assert!(all.pre.is_empty() && all.post.is_empty());
        assert!(segment_phases(&annotation(10, 30, 0), 30).is_err());
        assert!(segment_phases(&annotation(12, 11, 0), 30).is_err());
        assert!(segment_phases(&annotation(3, 20, 4), 30).is_err());
    }

    #[test]
    fn relative_pose_examples() {
        let p = Pose::new(Vec3::new(0.3, -1.0, 2.0), UnitQuaternion::from_euler_angles(0.1, 0.2, 0.3));
        let phi = estimate_relative_pose(&p, &p);
        assert!(phi.translation().norm() < 1e-15 && phi.rotation().angle() < 1e-7);

        let phi = estimate_relative_pose(&Pose::identity(), &Pose::from_position(Vec3::new(0.0, 0.0, 0.1)));
        assert_eq!(phi.translation(), Vec3::new(0.0, 0.0, 0.1));

        let rz = UnitQuaternion::from_euler_angles(0.0, 0.0, std::f64::consts::FRAC_PI_2);
        let anchor = Pose::new(Vec3::new(1.0, 0.0, 1.0), rz);
        let object = Pose::from_position(Vec3::new(1.0, 0.0, 1.2));
        let phi = estimate_relative_pose(&anchor, &object);
        // Oracle: rotate the world offset into the anchor frame by hand.
        let expected = rz.inverse() * Vec3::new(0.0, 0.0, 0.2);
        assert!((phi.translation() - expected).norm() < 1e-15);
        assert!((phi.translation() - Vec3::new(0.0, 0.0, 0.2)).norm() < 1e-15);
        assert!(phi.apply(&anchor).distance(&object).0 < 1e-15);
    }

    #[test]
    fn propagation_examples() {
        let moving = PoseSeries::new(
            100.0,
            (0..11).map(|i| Pose::from_position(Vec3::new(i as f64 * 0.01, 0.0, 1.0))).collect(),
        );
        let same = propagate_contact_trajectory(&moving, &RelativeTransform::default(), 0..11).unwrap();
        assert_eq!(same.poses, moving.poses);

        let phi = RelativeTransform::new(Vec3::new(0.0, 0.0, 0.1), Quat::identity());
        let obj = propagate_contact_trajectory(&moving, &phi, 2..9).unwrap();
        for (k, (p, v)) in obj.poses.iter().zip(obj.velocities.as_ref().unwrap()).enumerate() {
            let a = moving.poses[k + 2].position;
            assert!((p.position - (a + Vec3::new(0.0, 0.0, 0.1))).norm() < 1e-15);
            assert_relative_eq!(v.linear.x, 1.0, epsilon = 1e-9);
        }

        let still = PoseSeries::new(30.0, vec![Pose::from_position(Vec3::new(1.0, 2.0, 3.0)); 5]);
        let obj = propagate_contact_trajectory(&still, &phi, 0..5).unwrap();
        assert!(obj.velocities.unwrap().iter().all(|v| v.linear == Vec3::zeros()));
        assert!(obj.poses.iter().all(|p| p.position == Vec3::new(1.0, 2.0, 3.1)));
    }

    #[test]
    fn zero_window_and_constant_clip_are_untouched() {
        let clip = fixtures::constant_clip(30);
        assert_eq!(blend_transitions(&clip, &annotation(10, 20, 0)).unwrap(), clip);
        assert_eq!(blend_transitions(&clip, &annotation(10, 20, 4)).unwrap(), clip);
    }

    #[test]
    fn step_is_spread_over_the_window() {
        let mut clip = fixtures::constant_clip(30);
        for f in &mut clip.frames[10..] {
            f.root.position.z += 0.2;
            for k in &mut f.keypoints {
                k.position.z += 0.2;
            }
        }
        let out = blend_transitions(&clip, &annotation(10, 20, 4)).unwrap();
        let max_jump = out
            .frames
            .windows(2)
            .map(|w| (w[1].root.position - w[0].root.position).norm())
            .fold(0.0, f64::max);
        assert!(max_jump <= 0.2 / 8.0 + 1e-12, "{max_jump}");
        for i in (0..=6).chain(14..30) {
            assert_eq!(out.frames[i], clip.frames[i]);
        }
    }

    #[test]
    fn contact_annotation_examples() {
        let mut clip = fixtures::constant_clip(3);
        let spec = ObjectSpec {
            geometry: Geometry::Sphere { radius: 0.12 },
            mass: 0.6,
            sim: Default::default(),
        };
        let names = vec!["left_palm".to_string()];
        let li = clip.keypoint_index("left_palm").unwrap();
        let centre = Vec3::new(0.5, 0.0, 1.0);
        clip.frames[0].keypoints[li].position = centre;
        clip.frames[1].keypoints[li].position = centre + Vec3::new(1.0, 0.0, 0.0);
        clip.frames[2].keypoints[li].position = centre + Vec3::new(0.13, 0.0, 0.0);
        let poses = vec![Pose::from_position(centre); 3];
        let g = annotate_contact_graph(&clip, &poses, &spec, &names, 0.02).unwrap();
        assert_eq!(g, vec![vec![1], vec![0], vec![1]]);
    }

    #[test]
    fn all_contact_clip_follows_anchor() {
        let motion = fixtures::carry_clip(40);
        let mut cfg = fixtures::carry_config(0, 39, 0);
        cfg.settings.grasp.enabled = false;
        let clip = synthesize(&motion, &cfg, "all").unwrap();
        let anchor = derive_anchor_trajectory(&motion, &cfg.phases.anchor).unwrap();
        for i in 0..40 {
            let want = clip.relative_transform.apply(&anchor.poses[i]);
            assert!(want.distance(&clip.object[i].pose).0 < 1e-12);
        }
    }

    #[test]
    fn reverse_flight_meets_contact_start() {
        let motion = fixtures::catch_clip(60);
        let cfg = fixtures::catch_config(12, 40, 3);
        let clip = synthesize(&motion, &cfg, "catch").unwrap();
        let contact_start = clip.relative_transform.apply(&clip.anchor[12]);
        assert!(clip.object[12].pose.distance(&contact_start).0 < 1e-6);
        // Re-flying the last pre-contact frame forward lands on the contact start.
        let next = crate::ballistic::simulate_frames_forward(&clip.object[11], &clip.object_spec.sim, motion.dt(), 1);
        assert!((next[1].pose.position - contact_start.position).norm() < 1e-6);
        assert!(clip.phi_error() <= PHI_TOLERANCE);
    }

    #[test]
    fn mismatched_segments_are_rejected() {
        let motion = fixtures::catch_clip(60);
        let cfg = fixtures::catch_config(12, 40, 3);
        let clip = synthesize(&motion, &cfg, "catch").unwrap();
        let anchor = PoseSeries::new(motion.fps, clip.anchor.clone());
        let contact = propagate_contact_trajectory(&anchor, &clip.relative_transform, 12..41).unwrap();
        let parts = ClipParts {
            motion: clip.motion.clone(),
            anchor: clip.anchor.clone(),
            phi: clip.relative_transform,
            phases: clip.phases.clone(),
            object_spec: clip.object_spec,
            settings: clip.settings.clone(),
            contact,
            pre: clip.object[..5].to_vec(),
            post: clip.object[40..].to_vec(),
            grasp_reports: vec![],
            provenance: Provenance::root("x"),
        };
        assert!(matches!(assemble_interaction_clip(parts), Err(Error::Dimension { .. })));
    }

    #[test]
    fn json_round_trip_is_byte_identical() {
        let motion = fixtures::catch_clip(50);
        let clip = synthesize(&motion, &fixtures::catch_config(10, 35, 2), "rt").unwrap();
        let a = clip.to_json();
        let parsed = InteractionClip::from_json(a.as_bytes()).unwrap();
        assert_eq!(parsed, clip);
        assert_eq!(parsed.to_json(), a);
    }

    #[test]
    fn wrong_schema_version_is_a_validation_error() {
        let motion = fixtures::catch_clip(50);
        let clip = synthesize(&motion, &fixtures::catch_config(10, 35, 2), "v").unwrap();
        let s = clip.to_json().replacen("\"schema_version\": 1", "\"schema_version\": 7", 1);
        assert!(matches!(InteractionClip::from_json(s.as_bytes()), Err(Error::Validation(_))));
    }

    #[test]
    fn tampered_object_breaks_phi_invariance() {
        let motion = fixtures::catch_clip(50);
        let mut clip = synthesize(&motion, &fixtures::catch_config(10, 35, 2), "t").unwrap();
        clip.object[30].pose.position.x += 1e-6;
        assert!(clip.validate().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn phi_invariance_holds_for_random_clips(seed in any::<u64>(), t_s in 5usize..20, span in 0usize..15, k in 0usize..5) {
            let motion = fixtures::random_clip(seed, 50);
            let t_e = t_s + span;
            let k = k.min(t_s).min(49 - t_e);
            let cfg = fixtures::random_config(seed, t_s, t_e, k);
            let clip = synthesize(&motion, &cfg, "p").unwrap();
            prop_assert!(clip.phi_error() <= PHI_TOLERANCE);
        }

        #[test]
        fn blending_only_touches_windows(seed in any::<u64>(), t_s in 5usize..20, span in 0usize..15, k in 1usize..5) {
            let motion = fixtures::random_clip(seed, 50);
            let t_e = t_s + span;
            // Idempotence needs the two windows to be disjoint.
            let k = k.min(t_s).min(49 - t_e).min(span / 2);
            if k == 0 {
                return Ok(());
            }
            let a = annotation(t_s, t_e, k);
            let once = blend_transitions(&motion, &a).unwrap();
            for i in 0..50 {
                let inside = (i > t_s - k && i < t_s + k) || (i > t_e - k && i < t_e + k);
                if !inside {
                    prop_assert_eq!(&once.frames[i], &motion.frames[i]);
                }
            }
            let twice = blend_transitions(&once, &a).unwrap();
            for (x, y) in once.frames.iter().zip(&twice.frames) {
                prop_assert!((x.root.position - y.root.position).norm() < 1e-12);
                for (p, q) in x.keypoints.iter().zip(&y.keypoints) {
                    prop_assert!(p.distance(q).0 < 1e-12 && p.distance(q).1 < 1e-7);
                }
            }
        }
    }
}
