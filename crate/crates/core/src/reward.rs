//! Interaction-imitation reward: body, object, relative-motion and contact-graph tracking
//! terms plus regularization penalties.
//!
//! Tracking terms have the form `γ exp(-λ e)`. Per-term errors are means over keypoints or
//! joints so that λ does not depend on how many are tracked. The contact term is
//! `exp(-Σ λ_j |s_j - ŝ_j|)` with an implicit scale of 1. Penalties are signed (≤ 0) and are
//! summed into the total alongside the tracking terms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{geodesic, Pose, Vec3};
use crate::motion::{differentiate, finite_difference_velocities};
use crate::synth::InteractionClip;

/// `γ exp(-λ e)`.
pub fn exp_kernel(error: f64, gamma: f64, lambda: f64) -> Result<f64> {
    if !(error >= 0.0) {
        return Err(Error::validation(format!("tracking error must be non-negative, got {error}")));
    }
    Ok(gamma * (-lambda * error).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermWeight {
    #[serde(default = "yes")]
    pub enabled: bool,
    #[serde(default = "one")]
    pub gamma: f64,
    pub lambda: f64,
}

fn yes() -> bool {
    true
}

fn one() -> f64 {
    1.0
}

impl TermWeight {
    pub const fn new(lambda: f64) -> Self {
        TermWeight {
            enabled: true,
            gamma: 1.0,
            lambda,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContactWeight {
    pub enabled: bool,
    /// λ per contact edge; an empty list means 1 for every edge.
    pub lambda: Vec<f64>,
}

impl Default for ContactWeight {
    fn default() -> Self {
        ContactWeight {
            enabled: true,
            lambda: Vec::new(),
        }
    }
}

/// Penalty coefficients, all applied with a negative sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegCoeffs {
    pub torque: f64,
    pub action_rate: f64,
    pub dof_limit: f64,
    pub torque_limit: f64,
    pub waist: f64,
    pub feet_orientation: f64,
    pub feet_slippage: f64,
    pub termination: f64,
}

impl Default for RegCoeffs {
    fn default() -> Self {
        RegCoeffs {
            torque: 1e-5,
            action_rate: 0.01,
            dof_limit: 1.0,
            torque_limit: 0.01,
            waist: 0.1,
            feet_orientation: 0.5,
            feet_slippage: 0.1,
            termination: 10.0,
        }
    }
}

/// Shipped defaults are a starting point only; none of these values are published settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardWeights {
    pub p: TermWeight,
    pub r: TermWeight,
    pub d: TermWeight,
    pub v: TermWeight,
    pub rv: TermWeight,
    pub dv: TermWeight,
    pub op: TermWeight,
    pub or: TermWeight,
    pub rel_p: TermWeight,
    pub rel_r: TermWeight,
    pub contact: ContactWeight,
    pub reg: RegCoeffs,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights {
            p: TermWeight::new(5.0),
            r: TermWeight::new(2.0),
            d: TermWeight::new(1.0),
            v: TermWeight::new(0.5),
            rv: TermWeight::new(0.1),
            dv: TermWeight::new(0.05),
            op: TermWeight::new(5.0),
            or: TermWeight::new(2.0),
            rel_p: TermWeight::new(5.0),
            rel_r: TermWeight::new(1.0),
            contact: ContactWeight::default(),
            reg: RegCoeffs::default(),
        }
    }
}

impl RewardWeights {
    fn tracking(&self) -> [(&'static str, &TermWeight); 10] {
        [
            ("p", &self.p),
            ("r", &self.r),
            ("d", &self.d),
            ("v", &self.v),
            ("rv", &self.rv),
            ("dv", &self.dv),
            ("op", &self.op),
            ("or", &self.or),
            ("rel_p", &self.rel_p),
            ("rel_r", &self.rel_r),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, w) in self.tracking() {
            if !(w.gamma >= 0.0 && w.lambda >= 0.0 && w.gamma.is_finite() && w.lambda.is_finite()) {
                return Err(Error::validation(format!("reward term `{name}`: γ and λ must be non-negative")));
            }
        }
        if self.contact.lambda.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
            return Err(Error::validation("contact λ must be non-negative"));
        }
        let r = &self.reg;
        let all = [
            r.torque,
            r.action_rate,
            r.dof_limit,
            r.torque_limit,
            r.waist,
            r.feet_orientation,
            r.feet_slippage,
            r.termination,
        ];
        if all.iter().any(|c| !(*c >= 0.0 && c.is_finite())) {
            return Err(Error::validation("regularization coefficients must be non-negative"));
        }
        Ok(())
    }

    /// Total of a perfect, penalty-free frame: Σ γ over enabled tracking terms, plus 1 for the
    /// contact term. The injected AMP channel is not included.
    pub fn max_total(&self) -> f64 {
        let mut t = 0.0;
        for (_, w) in self.tracking() {
            if w.enabled {
                t += w.gamma;
            }
        }
        if self.contact.enabled {
            t += 1.0;
        }
        t
    }
}

/// Symmetric limits, and the body groups some penalties refer to.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegLimits {
    /// |q_j| limit per joint.
    pub dof: Option<Vec<f64>>,
    /// |τ_j| limit per joint.
    pub torque: Option<Vec<f64>>,
    /// Joint indices penalized by the waist term.
    pub waist_joints: Vec<usize>,
    /// Keypoint indices of the feet, aligned with `RolloutFrame::foot_contact`.
    pub feet: Vec<usize>,
}

/// Everything a simulated policy step exposes. Reference frames use the same layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RolloutFrame {
    pub keypoints: Vec<Pose>,
    pub keypoint_lin_vel: Vec<Vec3>,
    pub keypoint_ang_vel: Vec<Vec3>,
    pub dof_pos: Vec<f64>,
    pub dof_vel: Vec<f64>,
    pub object: Pose,
    #[serde(default)]
    pub object_lin_vel: Vec3,
    #[serde(default)]
    pub object_ang_vel: Vec3,
    #[serde(default)]
    pub torques: Vec<f64>,
    #[serde(default)]
    pub action: Vec<f64>,
    /// Simulated contact graph.
    #[serde(default)]
    pub contact: Vec<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub foot_contact: Option<Vec<bool>>,
    /// Externally supplied adversarial-prior reward.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amp: Option<f64>,
    #[serde(default)]
    pub terminated: bool,
    #[serde(default)]
    pub base_ang_vel: Vec3,
    #[serde(default = "gravity_down")]
    pub projected_gravity: Vec3,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_target: Option<Vec<f64>>,
}

fn gravity_down() -> Vec3 {
    -Vec3::z()
}

pub type Terms = Vec<(&'static str, f64)>;

fn same_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::Dimension {
            context,
            expected,
            actual,
        });
    }
    Ok(())
}

fn mean<I: Iterator<Item = f64>>(it: I) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

fn push(terms: &mut Terms, name: &'static str, w: &TermWeight, error: f64) -> Result<()> {
    if w.enabled {
        terms.push((name, exp_kernel(error, w.gamma, w.lambda)?));
    }
    Ok(())
}

/// Body position, rotation, joint and velocity tracking terms, then the AMP channel.
pub fn body_reward(frame: &RolloutFrame, reference: &RolloutFrame, w: &RewardWeights) -> Result<Terms> {
    let k = reference.keypoints.len();
    same_len("keypoints", k, frame.keypoints.len())?;
    same_len("keypoint linear velocities", k, frame.keypoint_lin_vel.len())?;
    same_len("keypoint angular velocities", k, frame.keypoint_ang_vel.len())?;
    same_len("reference keypoint linear velocities", k, reference.keypoint_lin_vel.len())?;
    same_len("reference keypoint angular velocities", k, reference.keypoint_ang_vel.len())?;
    let n = reference.dof_pos.len();
    same_len("dof positions", n, frame.dof_pos.len())?;
    same_len("dof velocities", n, frame.dof_vel.len())?;
    same_len("reference dof velocities", n, reference.dof_vel.len())?;

    let pairs = || frame.keypoints.iter().zip(&reference.keypoints);
    let e_p = mean(pairs().map(|(a, b)| (a.position - b.position).norm()));
    let e_r = mean(pairs().map(|(a, b)| geodesic(&a.orientation, &b.orientation)));
    let e_d = mean(frame.dof_pos.iter().zip(&reference.dof_pos).map(|(a, b)| (a - b).abs()));
    let e_v = mean(frame.keypoint_lin_vel.iter().zip(&reference.keypoint_lin_vel).map(|(a, b)| (a - b).norm()));
    let e_rv = mean(frame.keypoint_ang_vel.iter().zip(&reference.keypoint_ang_vel).map(|(a, b)| (a - b).norm()));
    let e_dv = mean(frame.dof_vel.iter().zip(&reference.dof_vel).map(|(a, b)| (a - b).abs()));

    let mut t = Terms::new();
    push(&mut t, "p", &w.p, e_p)?;
    push(&mut t, "r", &w.r, e_r)?;
    push(&mut t, "d", &w.d, e_d)?;
    push(&mut t, "v", &w.v, e_v)?;
    push(&mut t, "rv", &w.rv, e_rv)?;
    push(&mut t, "dv", &w.dv, e_dv)?;
    t.push(("amp", frame.amp.unwrap_or(0.0)));
    Ok(t)
}

pub fn object_reward(frame: &RolloutFrame, reference: &RolloutFrame, w: &RewardWeights) -> Result<Terms> {
    let mut t = Terms::new();
    push(&mut t, "op", &w.op, (frame.object.position - reference.object.position).norm())?;
    push(&mut t, "or", &w.or, geodesic(&frame.object.orientation, &reference.object.orientation))?;
    Ok(t)
}

/// Relative errors: stacked L2 norm of keypoint-minus-object vectors, and the summed geodesic
/// between `R_obj R_k⁻¹` and its reference, over `keypoints` (all keypoints when empty).
pub fn relative_errors(frame: &RolloutFrame, reference: &RolloutFrame, keypoints: &[usize]) -> Result<(f64, f64)> {
    same_len("keypoints", reference.keypoints.len(), frame.keypoints.len())?;
    let all: Vec<usize>;
    let set = if keypoints.is_empty() {
        all = (0..frame.keypoints.len()).collect();
        &all
    } else {
        keypoints
    };
    let mut sq = 0.0;
    let mut rot = 0.0;
    for &k in set {
        let (a, b) = match (frame.keypoints.get(k), reference.keypoints.get(k)) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::validation(format!("relative keypoint index {k} out of range"))),
        };
        let u = a.position - frame.object.position;
        let u_ref = b.position - reference.object.position;
        sq += (u - u_ref).norm_squared();
        let r = frame.object.orientation * a.orientation.inverse();
        let r_ref = reference.object.orientation * b.orientation.inverse();
        rot += geodesic(&r, &r_ref);
    }
    Ok((sq.sqrt(), rot))
}

pub fn relative_reward(
    frame: &RolloutFrame,
    reference: &RolloutFrame,
    w: &RewardWeights,
    keypoints: &[usize],
) -> Result<Terms> {
    let (e_p, e_r) = relative_errors(frame, reference, keypoints)?;
    let mut t = Terms::new();
    push(&mut t, "rel_p", &w.rel_p, e_p)?;
    push(&mut t, "rel_r", &w.rel_r, e_r)?;
    Ok(t)
}

/// `exp(-Σ λ_j |s_j - ŝ_j|)` over binary contact vectors.
pub fn contact_reward(s_cg: &[u8], ref_cg: &[u8], lambda: &[f64]) -> Result<f64> {
    same_len("contact graph", ref_cg.len(), s_cg.len())?;
    same_len("contact λ", ref_cg.len(), lambda.len())?;
    if s_cg.iter().chain(ref_cg).any(|&x| x > 1) {
        return Err(Error::validation("contact graph entries must be 0 or 1"));
    }
    let e: f64 = s_cg
        .iter()
        .zip(ref_cg)
        .zip(lambda)
        .map(|((a, b), l)| l * f64::from(a.abs_diff(*b)))
        .sum();
    Ok((-e).exp())
}

fn excess_sq(x: &[f64], limit: &[f64]) -> f64 {
    x.iter()
        .zip(limit)
        .map(|(v, l)| {
            let e = (v.abs() - l.abs()).max(0.0);
            e * e
        })
        .sum()
}

/// Signed penalties. `prev_action` is the previous step's action (the current one when absent).
pub fn regularization_penalties(
    frame: &RolloutFrame,
    prev_action: Option<&[f64]>,
    limits: &RegLimits,
    c: &RegCoeffs,
) -> Result<Terms> {
    let n = frame.dof_pos.len();
    if !frame.torques.is_empty() {
        same_len("torques", n, frame.torques.len())?;
    }
    let tau_sq: f64 = frame.torques.iter().map(|t| t * t).sum();
    let rate: f64 = match prev_action {
        Some(p) => {
            same_len("previous action", frame.action.len(), p.len())?;
            frame.action.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum()
        }
        None => 0.0,
    };
    let dof = match &limits.dof {
        Some(l) => {
            same_len("dof limits", n, l.len())?;
            excess_sq(&frame.dof_pos, l)
        }
        None => 0.0,
    };
    let torque_lim = match &limits.torque {
        Some(l) if !frame.torques.is_empty() => {
            same_len("torque limits", n, l.len())?;
            excess_sq(&frame.torques, l)
        }
        _ => 0.0,
    };
    let mut waist = 0.0;
    for &j in &limits.waist_joints {
        let q = frame
            .dof_pos
            .get(j)
            .ok_or_else(|| Error::validation(format!("waist joint index {j} out of range")))?;
        waist += q * q;
    }
    let (mut tilt, mut slip) = (0.0, 0.0);
    if let Some(flags) = &frame.foot_contact {
        same_len("foot contact flags", limits.feet.len(), flags.len())?;
        for (&k, &on) in limits.feet.iter().zip(flags) {
            let foot = frame
                .keypoints
                .get(k)
                .ok_or_else(|| Error::validation(format!("foot keypoint index {k} out of range")))?;
            let up = foot.orientation * Vec3::z();
            let angle = up.z.clamp(-1.0, 1.0).acos();
            tilt += angle * angle;
            if on {
                slip += frame.keypoint_lin_vel[k].norm_squared();
            }
        }
    }
    // Subtracting from +0 keeps zero penalties from printing as -0.
    let neg = |x: f64| 0.0 - x;
    Ok(vec![
        ("reg_torque", neg(c.torque * tau_sq)),
        ("reg_action_rate", neg(c.action_rate * rate)),
        ("reg_dof_limit", neg(c.dof_limit * dof)),
        ("reg_torque_limit", neg(c.torque_limit * torque_lim)),
        ("reg_waist", neg(c.waist * waist)),
        ("reg_feet_orientation", neg(c.feet_orientation * tilt)),
        ("reg_feet_slippage", neg(c.feet_slippage * slip)),
        ("reg_termination", if frame.terminated { neg(c.termination) } else { 0.0 }),
    ])
}

/// One scored frame: every term in canonical order plus their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardRow {
    pub terms: Terms,
    pub total: f64,
}

impl RewardRow {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }
}

/// Which keypoints the relative terms use, plus penalty limits.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoringContext {
    pub relative_keypoints: Vec<usize>,
    pub limits: RegLimits,
}

pub fn total_reward(
    frame: &RolloutFrame,
    reference: &RolloutFrame,
    prev_action: Option<&[f64]>,
    w: &RewardWeights,
    ctx: &ScoringContext,
) -> Result<RewardRow> {
    let mut terms = body_reward(frame, reference, w)?;
    terms.extend(object_reward(frame, reference, w)?);
    terms.extend(relative_reward(frame, reference, w, &ctx.relative_keypoints)?);
    if w.contact.enabled {
        let lambda = if w.contact.lambda.is_empty() {
            vec![1.0; reference.contact.len()]
        } else {
            w.contact.lambda.clone()
        };
        terms.push(("cg", contact_reward(&frame.contact, &reference.contact, &lambda)?));
    }
    terms.extend(regularization_penalties(frame, prev_action, &ctx.limits, &w.reg)?);
    let total = terms.iter().map(|(_, v)| v).sum();
    Ok(RewardRow { terms, total })
}

/// Per-frame rows plus column means.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardReport {
    pub rows: Vec<RewardRow>,
}

impl RewardReport {
    pub fn term_names(&self) -> Vec<&'static str> {
        self.rows
            .first()
            .map(|r| r.terms.iter().map(|(n, _)| *n).collect())
            .unwrap_or_default()
    }

    pub fn mean_total(&self) -> f64 {
        mean(self.rows.iter().map(|r| r.total))
    }

    pub fn mean_terms(&self) -> Terms {
        let names = self.term_names();
        names
            .iter()
            .enumerate()
            .map(|(i, n)| (*n, mean(self.rows.iter().map(|r| r.terms[i].1))))
            .collect()
    }

    /// CSV with a `frame` column, one column per term and a final `total` column.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["frame".to_string()];
        header.extend(self.term_names().iter().map(|s| s.to_string()));
        header.push("total".into());
        w.write_record(&header).map_err(Error::from)?;
        for (i, r) in self.rows.iter().enumerate() {
            let mut rec = vec![i.to_string()];
            rec.extend(r.terms.iter().map(|(_, v)| v.to_string()));
            rec.push(r.total.to_string());
            w.write_record(&rec).map_err(Error::from)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Numerical(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// A simulated episode, with per-frame arrays aligned to the header names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rollout {
    pub schema_version: u32,
    pub fps: f64,
    pub keypoint_names: Vec<String>,
    pub joint_names: Vec<String>,
    #[serde(default)]
    pub contact_bodies: Vec<String>,
    pub frames: Vec<RolloutFrame>,
}

impl Rollout {
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let r: Rollout = serde_json::from_slice(bytes)?;
        r.validate()?;
        Ok(r)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("rollout serialization is infallible")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != crate::synth::SCHEMA_VERSION {
            return Err(Error::validation(format!(
                "unsupported rollout schema_version {}",
                self.schema_version
            )));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::validation("rollout fps must be positive"));
        }
        if self.frames.is_empty() {
            return Err(Error::validation("rollout has no frames"));
        }
        let (k, n, j) = (self.keypoint_names.len(), self.joint_names.len(), self.contact_bodies.len());
        for (i, f) in self.frames.iter().enumerate() {
            let bad = f.keypoints.len() != k
                || f.keypoint_lin_vel.len() != k
                || f.keypoint_ang_vel.len() != k
                || f.dof_pos.len() != n
                || f.dof_vel.len() != n
                || (!f.torques.is_empty() && f.torques.len() != n)
                || f.contact.len() != j;
            if bad {
                return Err(Error::validation(format!(
                    "rollout frame {i} does not match the header ({k} keypoints, {n} joints, {j} contact bodies)"
                )));
            }
        }
        Ok(())
    }

    /// The reference clip as a perfect rollout: zero torques and actions, contact graph as
    /// annotated, velocities by finite differences.
    pub fn from_clip(clip: &InteractionClip) -> Result<Self> {
        let m = &clip.motion;
        let n = m.len();
        let mut kp_vel = vec![Vec::with_capacity(m.keypoint_names.len()); n];
        for k in 0..m.keypoint_names.len() {
            let s = finite_difference_velocities(&m.keypoint_series(k))?;
            for (i, v) in s.velocities.expect("filled").into_iter().enumerate() {
                kp_vel[i].push(v);
            }
        }
        let dof_vel = if m.frames.iter().all(|f| f.joint_velocities.is_some()) {
            m.frames.iter().map(|f| f.joint_velocities.clone().expect("checked")).collect()
        } else {
            let rows: Vec<Vec<f64>> = m.frames.iter().map(|f| f.joints.clone()).collect();
            differentiate(&rows, m.dt())
        };
        let frames = (0..n)
            .map(|i| RolloutFrame {
                keypoints: m.frames[i].keypoints.clone(),
                keypoint_lin_vel: kp_vel[i].iter().map(|t| t.linear).collect(),
                keypoint_ang_vel: kp_vel[i].iter().map(|t| t.angular).collect(),
                dof_pos: m.frames[i].joints.clone(),
                dof_vel: dof_vel[i].clone(),
                object: clip.object[i].pose,
                object_lin_vel: clip.object[i].lin_vel,
                object_ang_vel: clip.object[i].ang_vel,
                torques: vec![0.0; m.joint_names.len()],
                action: vec![0.0; m.joint_names.len()],
                contact: clip.contact_graph[i].clone(),
                foot_contact: None,
                amp: None,
                terminated: false,
                base_ang_vel: Vec3::zeros(),
                projected_gravity: gravity_down(),
                q_target: Some(m.frames[i].joints.clone()),
            })
            .collect();
        Ok(Rollout {
            schema_version: crate::synth::SCHEMA_VERSION,
            fps: m.fps,
            keypoint_names: m.keypoint_names.clone(),
            joint_names: m.joint_names.clone(),
            contact_bodies: clip.settings.contact_bodies.clone(),
            frames,
        })
    }
}

/// Reward configuration file: weights plus name-based selections resolved against a rollout.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardConfig {
    pub weights: RewardWeights,
    pub relative_keypoints: Vec<String>,
    pub waist_joints: Vec<String>,
    pub feet: Vec<String>,
    pub dof_limits: Option<Vec<f64>>,
    pub torque_limits: Option<Vec<f64>>,
}

impl RewardConfig {
    pub fn context(&self, rollout: &Rollout) -> Result<ScoringContext> {
        let find = |names: &[String], pool: &[String], what: &str| -> Result<Vec<usize>> {
            names
                .iter()
                .map(|n| {
                    pool.iter()
                        .position(|p| p == n)
                        .ok_or_else(|| Error::validation(format!("unknown {what} `{n}`")))
                })
                .collect()
        };
        Ok(ScoringContext {
            relative_keypoints: find(&self.relative_keypoints, &rollout.keypoint_names, "keypoint")?,
            limits: RegLimits {
                dof: self.dof_limits.clone(),
                torque: self.torque_limits.clone(),
                waist_joints: find(&self.waist_joints, &rollout.joint_names, "joint")?,
                feet: find(&self.feet, &rollout.keypoint_names, "keypoint")?,
            },
        })
    }
}

/// Reorder reference arrays to the rollout's keypoint and joint names.
fn align(reference: &Rollout, rollout: &Rollout) -> Result<Vec<RolloutFrame>> {
    let kidx = rollout
        .keypoint_names
        .iter()
        .map(|n| {
            reference
                .keypoint_names
                .iter()
                .position(|r| r == n)
                .ok_or_else(|| Error::MissingKeypoint { name: n.clone(), frame: 0 })
        })
        .collect::<Result<Vec<_>>>()?;
    let jidx = rollout
        .joint_names
        .iter()
        .map(|n| {
            reference
                .joint_names
                .iter()
                .position(|r| r == n)
                .ok_or_else(|| Error::validation(format!("reference has no joint `{n}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    let cidx = rollout
        .contact_bodies
        .iter()
        .map(|n| {
            reference
                .contact_bodies
                .iter()
                .position(|r| r == n)
                .ok_or_else(|| Error::validation(format!("reference has no contact body `{n}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(reference
        .frames
        .iter()
        .map(|f| RolloutFrame {
            keypoints: kidx.iter().map(|&i| f.keypoints[i]).collect(),
            keypoint_lin_vel: kidx.iter().map(|&i| f.keypoint_lin_vel[i]).collect(),
            keypoint_ang_vel: kidx.iter().map(|&i| f.keypoint_ang_vel[i]).collect(),
            dof_pos: jidx.iter().map(|&i| f.dof_pos[i]).collect(),
            dof_vel: jidx.iter().map(|&i| f.dof_vel[i]).collect(),
            contact: cidx.iter().map(|&i| f.contact[i]).collect(),
            ..f.clone()
        })
        .collect())
}

/// Score every rollout frame against the reference frame with the same index.
pub fn score_rollout(rollout: &Rollout, reference: &Rollout, cfg: &RewardConfig) -> Result<RewardReport> {
    rollout.validate()?;
    reference.validate()?;
    cfg.weights.validate()?;
    if rollout.frames.len() > reference.frames.len() {
        return Err(Error::validation(format!(
            "rollout has {} frames but the reference only {}",
            rollout.frames.len(),
            reference.frames.len()
        )));
    }
    let refs = align(reference, rollout)?;
    let ctx = cfg.context(rollout)?;
    let mut rows = Vec::with_capacity(rollout.frames.len());
    for (i, f) in rollout.frames.iter().enumerate() {
        let prev = if i > 0 {
            Some(rollout.frames[i - 1].action.as_slice())
        } else {
            None
        };
        rows.push(total_reward(f, &refs[i], prev, &cfg.weights, &ctx)?);
    }
    Ok(RewardReport { rows })
}
