//! Trainer-agnostic ingredients: distillation loss, disturbed initialization, interaction
//! termination, domain randomization and observation assembly.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{quat_to_wxyz, Pose, Quat, Vec3};
use crate::reward::RolloutFrame;
use crate::rng::{derive_seed, stream, symmetric, uniform};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianPolicyOutput {
    pub mean: Vec<f64>,
    pub diag_std: Vec<f64>,
}

impl GaussianPolicyOutput {
    pub fn new(mean: Vec<f64>, diag_std: Vec<f64>) -> Result<Self> {
        let out = GaussianPolicyOutput { mean, diag_std };
        out.validate()?;
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mean.len() != self.diag_std.len() {
            return Err(Error::Dimension {
                context: "policy std",
                expected: self.mean.len(),
                actual: self.diag_std.len(),
            });
        }
        if self.diag_std.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::validation("policy std must be strictly positive"));
        }
        Ok(())
    }
}

/// Squared distance between the student and teacher means. Standard deviations do not enter.
pub fn bc_loss(student: &GaussianPolicyOutput, teacher: &GaussianPolicyOutput) -> Result<f64> {
    if student.mean.len() != teacher.mean.len() {
        return Err(Error::Dimension {
            context: "teacher action",
            expected: student.mean.len(),
            actual: teacher.mean.len(),
        });
    }
    Ok(student.mean.iter().zip(&teacher.mean).map(|(a, b)| (a - b) * (a - b)).sum())
}

/// Half-widths of the uniform start-state perturbations.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DisturbConfig {
    /// Yaw perturbation of the root (rad).
    pub root_rot_range: f64,
    /// Horizontal root displacement per axis (m).
    pub root_pos_range: f64,
    pub joint_range: f64,
    pub object_pos_range: f64,
    /// Per-axis roll/pitch/yaw perturbation of the object (rad).
    pub object_rot_range: f64,
}

impl DisturbConfig {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.root_rot_range,
            self.root_pos_range,
            self.joint_range,
            self.object_pos_range,
            self.object_rot_range,
        ];
        if all.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
            return Err(Error::validation("disturbance ranges must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitState {
    pub root: Pose,
    pub joints: Vec<f64>,
    pub object: Pose,
}

fn rotate(q: &Quat, roll: f64, pitch: f64, yaw: f64) -> Quat {
    if roll == 0.0 && pitch == 0.0 && yaw == 0.0 {
        *q
    } else {
        Quat::from_euler_angles(roll, pitch, yaw) * q
    }
}

/// Uniform perturbation of a nominal start state. Draw order: root yaw, root x, y, each
/// joint, object x, y, z, object roll, pitch, yaw.
pub fn sample_disturbed_init(nominal: &InitState, cfg: &DisturbConfig, seed: u64) -> Result<InitState> {
    cfg.validate()?;
    let mut rng = stream(derive_seed(seed, "disturbed_init"), 0);
    let yaw = symmetric(&mut rng, cfg.root_rot_range);
    let dx = symmetric(&mut rng, cfg.root_pos_range);
    let dy = symmetric(&mut rng, cfg.root_pos_range);
    let joints = nominal
        .joints
        .iter()
        .map(|q| q + symmetric(&mut rng, cfg.joint_range))
        .collect();
    let op = Vec3::from_fn(|_, _| symmetric(&mut rng, cfg.object_pos_range));
    let (r, p, y) = (
        symmetric(&mut rng, cfg.object_rot_range),
        symmetric(&mut rng, cfg.object_rot_range),
        symmetric(&mut rng, cfg.object_rot_range),
    );
    Ok(InitState {
        root: Pose::new(
            nominal.root.position + Vec3::new(dx, dy, 0.0),
            rotate(&nominal.root.orientation, 0.0, 0.0, yaw),
        ),
        joints,
        object: Pose::new(nominal.object.position + op, rotate(&nominal.object.orientation, r, p, y)),
    })
}

/// Deviation of the anchor-to-object vector from its reference.
pub fn relative_position_error(anchor: &Vec3, object: &Vec3, ref_anchor: &Vec3, ref_object: &Vec3) -> f64 {
    ((object - anchor) - (ref_object - ref_anchor)).norm()
}

/// True only while the reference is in contact, the relative error exceeds the threshold and
/// `draw` (uniform in [0, 1)) falls below `p_terminate`.
pub fn interaction_termination_check(
    rel_error: f64,
    threshold: f64,
    p_terminate: f64,
    in_contact_ref: bool,
    draw: f64,
) -> bool {
    in_contact_ref && rel_error > threshold && draw < p_terminate
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl From<[f64; 2]> for Range {
    fn from(a: [f64; 2]) -> Self {
        Range { lo: a[0], hi: a[1] }
    }
}

impl From<Range> for [f64; 2] {
    fn from(r: Range) -> Self {
        [r.lo, r.hi]
    }
}

impl Range {
    pub const fn exact(v: f64) -> Self {
        Range { lo: v, hi: v }
    }

    fn check(&self, name: &str, min: f64) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi && self.lo >= min) {
            return Err(Error::validation(format!(
                "range `{name}` must be ordered and at least {min}, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        uniform(rng, self.lo, self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForceSchedule {
    /// Force magnitude (N).
    pub magnitude: Range,
    /// Pulse duration (s).
    pub duration: Range,
    /// Gap between the end of one pulse and the start of the next (s).
    pub interval: Range,
    /// Episode length the schedule must cover (s).
    pub episode_length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DRConfig {
    pub object_scale: Range,
    /// Object mass (kg).
    pub mass: Range,
    pub restitution: Range,
    pub friction: Range,
    /// Per-axis robot centre-of-mass offset half-width (m).
    pub com_offset: f64,
    pub perception_noise_std: f64,
    #[serde(default)]
    pub force: Option<ForceSchedule>,
}

impl Default for DRConfig {
    fn default() -> Self {
        DRConfig {
            object_scale: Range::exact(1.0),
            mass: Range::exact(1.0),
            restitution: Range::exact(0.5),
            friction: Range::exact(1.0),
            com_offset: 0.0,
            perception_noise_std: 0.0,
            force: None,
        }
    }
}

impl DRConfig {
    pub fn validate(&self) -> Result<()> {
        self.object_scale.check("object_scale", f64::MIN_POSITIVE)?;
        self.mass.check("mass", f64::MIN_POSITIVE)?;
        self.restitution.check("restitution", 0.0)?;
        if self.restitution.hi > 1.0 {
            return Err(Error::validation("restitution must not exceed 1"));
        }
        self.friction.check("friction", 0.0)?;
        if !(self.com_offset >= 0.0 && self.perception_noise_std >= 0.0) {
            return Err(Error::validation("com_offset and perception_noise_std must be non-negative"));
        }
        if let Some(f) = &self.force {
            f.magnitude.check("force.magnitude", 0.0)?;
            f.duration.check("force.duration", 0.0)?;
            f.interval.check("force.interval", 0.0)?;
            if f.interval.lo + f.duration.lo <= 0.0 {
                return Err(Error::validation("force interval plus duration must have a positive lower bound"));
            }
            if !(f.episode_length >= 0.0 && f.episode_length.is_finite()) {
                return Err(Error::validation("force episode_length must be non-negative"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForcePulse {
    pub start: f64,
    pub duration: f64,
    pub force: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DRSample {
    pub object_scale: f64,
    pub mass: f64,
    pub restitution: f64,
    pub friction: f64,
    pub com_offset: Vec3,
    pub perception_noise_std: f64,
    pub forces: Vec<ForcePulse>,
}

/// One draw per physical parameter, then pulses until the episode is covered. Each pulse
/// starts one interval after the previous one ended and pushes in a uniformly random direction.
pub fn sample_domain_randomization(cfg: &DRConfig, seed: u64) -> Result<DRSample> {
    cfg.validate()?;
    let mut rng = stream(derive_seed(seed, "domain_randomization"), 0);
    let object_scale = cfg.object_scale.draw(&mut rng);
    let mass = cfg.mass.draw(&mut rng);
    let restitution = cfg.restitution.draw(&mut rng);
    let friction = cfg.friction.draw(&mut rng);
    let com_offset = Vec3::from_fn(|_, _| symmetric(&mut rng, cfg.com_offset));
    let mut forces = Vec::new();
    if let Some(f) = &cfg.force {
        let mut frng = stream(derive_seed(seed, "external_force"), 0);
        let mut t = 0.0;
        loop {
            let start = t + f.interval.draw(&mut frng);
            if start >= f.episode_length {
                break;
            }
            let duration = f.duration.draw(&mut frng);
            let magnitude = f.magnitude.draw(&mut frng);
            let z = uniform(&mut frng, -1.0, 1.0);
            let az = uniform(&mut frng, 0.0, std::f64::consts::TAU);
            let s = (1.0 - z * z).sqrt();
            forces.push(ForcePulse {
                start,
                duration,
                force: magnitude * Vec3::new(s * az.cos(), s * az.sin(), z),
            });
            t = start + duration;
        }
    }
    Ok(DRSample {
        object_scale,
        mass,
        restitution,
        friction,
        com_offset,
        perception_noise_std: cfg.perception_noise_std,
        forces,
    })
}

/// Observation toggles. Positions and rotations of bodies, objects and targets are expressed
/// in the frame of the first keypoint (the root).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObservationConfig {
    pub base_ang_vel: bool,
    pub projected_gravity: bool,
    pub dof_pos: bool,
    pub dof_vel: bool,
    pub last_action: bool,
    pub pd_error: bool,
    /// Privileged.
    pub ref_body_pos: bool,
    /// Privileged.
    pub delta_body_pos: bool,
    pub object_pos: bool,
    pub object_rot: bool,
    pub target_pos: bool,
    pub target_rot: bool,
    /// Size of the skill one-hot; 0 disables it.
    pub skill_count: usize,
    /// Past frames of proprioception appended after the current terms.
    pub history_depth: usize,
    pub student: bool,
}

impl ObservationConfig {
    pub fn teacher() -> Self {
        ObservationConfig {
            base_ang_vel: true,
            projected_gravity: true,
            dof_pos: true,
            dof_vel: true,
            last_action: true,
            pd_error: true,
            ref_body_pos: true,
            delta_body_pos: true,
            object_pos: true,
            object_rot: true,
            target_pos: false,
            target_rot: false,
            skill_count: 0,
            history_depth: 0,
            student: false,
        }
    }

    pub fn student() -> Self {
        ObservationConfig {
            ref_body_pos: false,
            delta_body_pos: false,
            history_depth: 5,
            student: true,
            ..ObservationConfig::teacher()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.student && (self.ref_body_pos || self.delta_body_pos) {
            return Err(Error::validation(
                "student observations cannot include privileged reference body terms",
            ));
        }
        Ok(())
    }
}

/// Inputs that are not part of the simulated frame itself.
#[derive(Debug, Clone, Copy, Default)]
pub struct ObservationInputs<'a> {
    pub reference: Option<&'a RolloutFrame>,
    pub target: Option<Pose>,
    pub skill: Option<usize>,
    /// Past frames, oldest first.
    pub history: &'a [RolloutFrame],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutEntry {
    pub name: String,
    pub offset: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub values: Vec<f64>,
    pub layout: Vec<LayoutEntry>,
}

impl Observation {
    fn push(&mut self, name: impl Into<String>, values: impl IntoIterator<Item = f64>) {
        let offset = self.values.len();
        self.values.extend(values);
        self.layout.push(LayoutEntry {
            name: name.into(),
            offset,
            len: self.values.len() - offset,
        });
    }

    pub fn slice(&self, name: &str) -> Option<&[f64]> {
        self.layout
            .iter()
            .find(|e| e.name == name)
            .map(|e| &self.values[e.offset..e.offset + e.len])
    }
}

fn root(frame: &RolloutFrame) -> Result<Pose> {
    frame
        .keypoints
        .first()
        .copied()
        .ok_or_else(|| Error::validation("observation needs at least one keypoint for the root frame"))
}

fn proprio(obs: &mut Observation, f: &RolloutFrame, cfg: &ObservationConfig, prefix: &str) -> Result<()> {
    if cfg.base_ang_vel {
        obs.push(format!("{prefix}base_ang_vel"), f.base_ang_vel.iter().copied());
    }
    if cfg.projected_gravity {
        obs.push(format!("{prefix}projected_gravity"), f.projected_gravity.iter().copied());
    }
    if cfg.dof_pos {
        obs.push(format!("{prefix}dof_pos"), f.dof_pos.iter().copied());
    }
    if cfg.dof_vel {
        obs.push(format!("{prefix}dof_vel"), f.dof_vel.iter().copied());
    }
    if cfg.last_action {
        obs.push(format!("{prefix}last_action"), f.action.iter().copied());
    }
    if cfg.pd_error {
        let target = f
            .q_target
            .as_ref()
            .ok_or_else(|| Error::validation("pd_error observation needs q_target"))?;
        if target.len() != f.dof_pos.len() {
            return Err(Error::Dimension {
                context: "q_target",
                expected: f.dof_pos.len(),
                actual: target.len(),
            });
        }
        obs.push(format!("{prefix}pd_error"), target.iter().zip(&f.dof_pos).map(|(t, q)| t - q));
    }
    Ok(())
}

/// Flat observation in the fixed order: base angular velocity, projected gravity, dof
/// positions, dof velocities, last action, PD error, reference body positions, delta body
/// positions, object position, object rotation (wxyz), target position, target rotation,
/// skill one-hot, then proprioceptive history from the most recent past frame backwards.
pub fn build_observation(frame: &RolloutFrame, inputs: &ObservationInputs, cfg: &ObservationConfig) -> Result<Observation> {
    cfg.validate()?;
    if cfg.history_depth > inputs.history.len() {
        return Err(Error::validation(format!(
            "history depth {} exceeds the {} buffered frames",
            cfg.history_depth,
            inputs.history.len()
        )));
    }
    let mut obs = Observation {
        values: Vec::new(),
        layout: Vec::new(),
    };
    proprio(&mut obs, frame, cfg, "")?;
    let base = root(frame)?;
    if cfg.ref_body_pos || cfg.delta_body_pos {
        let r = inputs
            .reference
            .ok_or_else(|| Error::validation("privileged body observations need a reference frame"))?;
        if r.keypoints.len() != frame.keypoints.len() {
            return Err(Error::Dimension {
                context: "reference keypoints",
                expected: frame.keypoints.len(),
                actual: r.keypoints.len(),
            });
        }
        let inv = base.orientation.inverse();
        if cfg.ref_body_pos {
            let v: Vec<f64> = r
                .keypoints
                .iter()
                .flat_map(|k| base.inverse_transform_point(&k.position).iter().copied().collect::<Vec<_>>())
                .collect();
            obs.push("ref_body_pos", v);
        }
        if cfg.delta_body_pos {
            let v: Vec<f64> = r
                .keypoints
                .iter()
                .zip(&frame.keypoints)
                .flat_map(|(a, b)| (inv * (a.position - b.position)).iter().copied().collect::<Vec<_>>())
                .collect();
            obs.push("delta_body_pos", v);
        }
    }
    let local = base.inverse().compose(&frame.object);
    if cfg.object_pos {
        obs.push("object_pos", local.position.iter().copied());
    }
    if cfg.object_rot {
        obs.push("object_rot", quat_to_wxyz(&local.orientation));
    }
    if cfg.target_pos || cfg.target_rot {
        let t = inputs
            .target
            .ok_or_else(|| Error::validation("target observations need a target pose"))?;
        let lt = base.inverse().compose(&t);
        if cfg.target_pos {
            obs.push("target_pos", lt.position.iter().copied());
        }
        if cfg.target_rot {
            obs.push("target_rot", quat_to_wxyz(&lt.orientation));
        }
    }
    if cfg.skill_count > 0 {
        let s = inputs
            .skill
            .filter(|s| *s < cfg.skill_count)
            .ok_or_else(|| Error::validation("skill label missing or out of range"))?;
        obs.push("skill", (0..cfg.skill_count).map(|i| if i == s { 1.0 } else { 0.0 }));
    }
    for d in 0..cfg.history_depth {
        let past = &inputs.history[inputs.history.len() - 1 - d];
        proprio(&mut obs, past, cfg, &format!("history_{}/", d + 1))?;
    }
    Ok(obs)
}
