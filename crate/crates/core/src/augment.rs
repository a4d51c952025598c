//! Augmentations of synthesized clips: object scaling, contact-path transforms, initial
//! velocity randomization and simulated tracker dropout, plus the generalization samplers.
//!
//! Every operation returns a new clip with the step appended to its provenance, and
//! [`replay`] reapplies a recorded sequence of steps to the original clip.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Pose, Vec3};
use crate::motion::PoseSeries;
use crate::rng::{derive_seed, stream, symmetric, uniform};
use crate::synth::{rebuild, AppliedTransform, FlightMode, InteractionClip, ObjectObservation, RelativeTransform};

/// Caveat attached whenever the body is moved to follow a transformed object path.
pub const KEYPOINT_WARP_CAVEAT: &str =
    "body follows the transformed contact path by a rigid keypoint offset; joint angles are not re-solved";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DropoutModel {
    /// Long-run fraction of lost frames.
    pub p_loss: f64,
    /// Mean length of a loss burst, in frames.
    pub mean_burst_len: f64,
}

impl DropoutModel {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_loss) {
            return Err(Error::validation(format!("p_loss must lie in [0, 1], got {}", self.p_loss)));
        }
        if !(self.mean_burst_len.is_finite() && self.mean_burst_len >= 1.0) {
            return Err(Error::validation(format!(
                "mean_burst_len must be at least 1 frame, got {}",
                self.mean_burst_len
            )));
        }
        Ok(())
    }

    /// (enter-loss, leave-loss) transition probabilities of the two-state chain.
    ///
    /// The stationary loss fraction is `a / (a + b)`; with `b = 1 / mean_burst_len` this equals
    /// `p_loss` as long as `a = p b / (1 - p)` does not exceed 1.
    pub fn transition_probabilities(&self) -> (f64, f64) {
        if self.p_loss >= 1.0 {
            return (1.0, 0.0);
        }
        let b = 1.0 / self.mean_burst_len;
        let a = (self.p_loss * b / (1.0 - self.p_loss)).min(1.0);
        (a, b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AugmentationConfig {
    pub geometry_scale_range: [f64; 2],
    /// Per-axis half-width of the contact-path translation (m).
    pub contact_translation_range: [f64; 3],
    pub contact_scale_range: [f64; 2],
    /// Per-axis half-width of the initial velocity perturbation (m/s).
    pub velocity_perturbation: [f64; 3],
    pub mocap_dropout: Option<DropoutModel>,
    pub seed: u64,
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        AugmentationConfig {
            geometry_scale_range: [1.0, 1.0],
            contact_translation_range: [0.0; 3],
            contact_scale_range: [1.0, 1.0],
            velocity_perturbation: [0.0; 3],
            mocap_dropout: None,
            seed: 0,
        }
    }
}

impl AugmentationConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, [lo, hi]) in [
            ("geometry_scale_range", self.geometry_scale_range),
            ("contact_scale_range", self.contact_scale_range),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
                return Err(Error::validation(format!(
                    "{name} must be an ordered positive range, got [{lo}, {hi}]"
                )));
            }
        }
        for (name, r) in [
            ("contact_translation_range", self.contact_translation_range),
            ("velocity_perturbation", self.velocity_perturbation),
        ] {
            if r.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(Error::validation(format!("{name} entries must be non-negative")));
            }
        }
        if let Some(m) = &self.mocap_dropout {
            m.validate()?;
        }
        Ok(())
    }
}

/// Which augmentation axes a batch applies, in this fixed order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AugmentAxes {
    pub scale_object: bool,
    pub transform_contact: bool,
    pub randomize_velocity: bool,
    pub mocap_dropout: bool,
}

impl Default for AugmentAxes {
    fn default() -> Self {
        AugmentAxes {
            scale_object: true,
            transform_contact: true,
            randomize_velocity: true,
            mocap_dropout: true,
        }
    }
}

fn with_transform(clip: &InteractionClip, t: AppliedTransform) -> crate::synth::Provenance {
    let mut p = clip.provenance.clone();
    p.transforms.push(t);
    p
}

/// Scale the object by `s` about its own origin and re-synthesize around it.
pub fn scale_object(clip: &InteractionClip, s: f64) -> Result<InteractionClip> {
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::validation(format!("object scale must be positive, got {s}")));
    }
    let mut spec = clip.object_spec;
    spec.geometry = spec.geometry.scaled(s);
    let phi = RelativeTransform::new(clip.relative_transform.translation() * s, clip.relative_transform.rotation());
    rebuild(
        &clip.motion,
        &clip.anchor,
        &phi,
        &clip.phases,
        &spec,
        &clip.settings,
        with_transform(clip, AppliedTransform::ScaleObject { s }),
    )
}

/// Move the contact-phase anchor path by `x -> x + (s - 1)(x - x̄) + translation` and carry
/// the body along.
///
/// Every keypoint and the root shift by the anchor's displacement; the shift ramps linearly to
/// zero over the blend windows outside the contact phase.
pub fn transform_contact_trajectory(clip: &InteractionClip, translation: Vec3, s: f64) -> Result<InteractionClip> {
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::validation(format!("contact path scale must be positive, got {s}")));
    }
    if translation.iter().any(|x| !x.is_finite()) {
        return Err(Error::validation("contact path translation must be finite"));
    }
    let r = clip.phase_ranges();
    let n = clip.len();
    let k = clip.phases.blend_window_k;
    let centroid = r.contact.clone().map(|i| clip.anchor[i].position).sum::<Vec3>() / r.contact.len() as f64;

    let mut anchor = clip.anchor.clone();
    let mut delta = vec![Vec3::zeros(); n];
    for i in r.contact.clone() {
        let x = clip.anchor[i].position;
        let moved = x + (x - centroid) * (s - 1.0) + translation;
        delta[i] = moved - x;
        anchor[i].position = moved;
    }
    let (t_s, t_e) = (clip.phases.t_s, clip.phases.t_e);
    for j in 1..=k {
        let w = (k - j) as f64 / k as f64;
        delta[t_s - j] = delta[t_s] * w;
        delta[t_e + j] = delta[t_e] * w;
        anchor[t_s - j].position += delta[t_s - j];
        anchor[t_e + j].position += delta[t_e + j];
    }

    let ground = clip.object_spec.sim.ground_height;
    for i in r.contact.clone() {
        let z = clip.relative_transform.apply(&anchor[i]).position.z;
        if z < ground {
            return Err(Error::validation(format!(
                "transformed contact path puts the object below the ground at frame {i} (z = {z:.4})"
            )));
        }
    }

    let mut motion = clip.motion.clone();
    for (f, d) in motion.frames.iter_mut().zip(&delta) {
        if *d == Vec3::zeros() {
            continue;
        }
        f.root.position += d;
        for kp in &mut f.keypoints {
            kp.position += d;
        }
    }

    let mut prov = with_transform(clip, AppliedTransform::TransformContact { translation, scale: s });
    if !prov.caveats.iter().any(|c| c == KEYPOINT_WARP_CAVEAT) {
        prov.caveats.push(KEYPOINT_WARP_CAVEAT.to_string());
    }
    rebuild(
        &motion,
        &anchor,
        &clip.relative_transform,
        &clip.phases,
        &clip.object_spec,
        &clip.settings,
        prov,
    )
}

fn has_flight(clip: &InteractionClip) -> Result<()> {
    let r = clip.phase_ranges();
    if r.pre.is_empty() && r.post.is_empty() {
        return Err(Error::validation(
            "velocity randomization needs a non-contact phase, but the clip is all contact",
        ));
    }
    Ok(())
}

/// Re-simulate the flights with the boundary velocities shifted by the given deltas.
///
/// Deltas for a side without a ballistic flight are ignored and recorded as zero.
pub fn apply_velocity_deltas(
    clip: &InteractionClip,
    pre_delta: Vec3,
    post_delta: Vec3,
    seed: u64,
    index: u64,
) -> Result<InteractionClip> {
    has_flight(clip)?;
    let r = clip.phase_ranges();
    let live = |empty: bool, mode: FlightMode, d: Vec3| {
        if !empty && mode == FlightMode::Ballistic {
            d
        } else {
            Vec3::zeros()
        }
    };
    let pre_delta = live(r.pre.is_empty(), clip.settings.pre.mode, pre_delta);
    let post_delta = live(r.post.is_empty(), clip.settings.post.mode, post_delta);
    let mut settings = clip.settings.clone();
    settings.pre.velocity_offset += pre_delta;
    settings.post.velocity_offset += post_delta;
    rebuild(
        &clip.motion,
        &clip.anchor,
        &clip.relative_transform,
        &clip.phases,
        &clip.object_spec,
        &settings,
        with_transform(
            clip,
            AppliedTransform::RandomizeVelocity {
                seed,
                index,
                pre_delta,
                post_delta,
            },
        ),
    )
}

/// Per-axis uniform velocity deltas (pre, post) for item `index`.
pub fn draw_velocity_deltas(perturbation: &[f64; 3], seed: u64, index: u64) -> (Vec3, Vec3) {
    let mut rng = stream(seed, index);
    let mut draw = || Vec3::from_fn(|i, _| symmetric(&mut rng, perturbation[i]));
    let pre = draw();
    let post = draw();
    (pre, post)
}

/// `n` variants of `clip` whose flight start velocities are perturbed uniformly per axis.
pub fn randomize_initial_velocity(clip: &InteractionClip, perturbation: &[f64; 3], seed: u64, n: usize) -> Result<Vec<InteractionClip>> {
    has_flight(clip)?;
    if perturbation.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::validation("velocity perturbation ranges must be non-negative"));
    }
    (0..n as u64)
        .map(|i| {
            let (pre, post) = draw_velocity_deltas(perturbation, seed, i);
            apply_velocity_deltas(clip, pre, post, seed, i)
        })
        .collect()
}

/// Degrade an object observation with bursty frame loss.
///
/// Returns the observed series (lost frames hold the last valid pose) and the loss mask.
/// Frame 0 is always observed.
pub fn simulate_mocap_dropout(obs: &PoseSeries, model: &DropoutModel, seed: u64) -> Result<(PoseSeries, Vec<bool>)> {
    model.validate()?;
    let n = obs.len();
    let mut lost = vec![false; n];
    let mut poses = obs.poses.clone();
    if model.p_loss > 0.0 {
        let (a, b) = model.transition_probabilities();
        let mut rng = stream(seed, 0);
        let mut in_loss = false;
        for i in 1..n {
            let u: f64 = rng.random();
            in_loss = if in_loss { u >= b } else { u < a };
            lost[i] = in_loss;
            if in_loss {
                poses[i] = poses[i - 1];
            }
        }
    }
    Ok((PoseSeries::new(obs.fps, poses), lost))
}

/// Attach a degraded copy of the object trajectory as the clip's observation channel.
pub fn apply_mocap_dropout(clip: &InteractionClip, model: &DropoutModel, seed: u64) -> Result<InteractionClip> {
    let series = PoseSeries::new(clip.motion.fps, clip.object_poses());
    let (observed, lost) = simulate_mocap_dropout(&series, model, seed)?;
    let mut out = clip.clone();
    out.object_observation = Some(ObjectObservation {
        poses: observed.poses,
        lost,
    });
    out.provenance.transforms.push(AppliedTransform::MocapDropout {
        seed,
        p_loss: model.p_loss,
        mean_burst_len: model.mean_burst_len,
    });
    Ok(out)
}

/// Reapply one recorded step.
pub fn apply_transform(clip: &InteractionClip, t: &AppliedTransform) -> Result<InteractionClip> {
    match *t {
        AppliedTransform::ScaleObject { s } => scale_object(clip, s),
        AppliedTransform::TransformContact { translation, scale } => transform_contact_trajectory(clip, translation, scale),
        AppliedTransform::RandomizeVelocity {
            seed,
            index,
            pre_delta,
            post_delta,
        } => apply_velocity_deltas(clip, pre_delta, post_delta, seed, index),
        AppliedTransform::MocapDropout {
            seed,
            p_loss,
            mean_burst_len,
        } => apply_mocap_dropout(clip, &DropoutModel { p_loss, mean_burst_len }, seed),
    }
}

/// Reapply a recorded sequence of steps to `root`.
pub fn replay(root: &InteractionClip, transforms: &[AppliedTransform]) -> Result<InteractionClip> {
    transforms.iter().try_fold(root.clone(), |c, t| apply_transform(&c, t))
}

/// Item `index` of a batch: each enabled axis draws from its own derived seed.
pub fn augment_one(clip: &InteractionClip, cfg: &AugmentationConfig, axes: &AugmentAxes, index: u64) -> Result<InteractionClip> {
    cfg.validate()?;
    let mut out = clip.clone();
    if axes.scale_object {
        let mut rng = stream(derive_seed(cfg.seed, "geometry_scale"), index);
        let [lo, hi] = cfg.geometry_scale_range;
        out = scale_object(&out, uniform(&mut rng, lo, hi))?;
    }
    if axes.transform_contact {
        let mut rng = stream(derive_seed(cfg.seed, "contact_transform"), index);
        let t = Vec3::from_fn(|i, _| symmetric(&mut rng, cfg.contact_translation_range[i]));
        let [lo, hi] = cfg.contact_scale_range;
        out = transform_contact_trajectory(&out, t, uniform(&mut rng, lo, hi))?;
    }
    if axes.randomize_velocity {
        let seed = derive_seed(cfg.seed, "initial_velocity");
        let (pre, post) = draw_velocity_deltas(&cfg.velocity_perturbation, seed, index);
        out = apply_velocity_deltas(&out, pre, post, seed, index)?;
    }
    if axes.mocap_dropout {
        if let Some(model) = &cfg.mocap_dropout {
            let seed = derive_seed(derive_seed(cfg.seed, "mocap_dropout"), &index.to_string());
            out = apply_mocap_dropout(&out, model, seed)?;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    CatchShot,
    Badminton,
    Cargo,
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "catch_shot" => Ok(Task::CatchShot),
            "badminton" => Ok(Task::Badminton),
            "cargo" => Ok(Task::Cargo),
            other => Err(Error::validation(format!(
                "unknown task `{other}` (expected catch_shot, badminton or cargo)"
            ))),
        }
    }
}

/// Half-width of the uniform initial-position perturbation for thrown objects (m).
pub const THROWN_OFFSET_RANGE: f64 = 0.3;
/// Radius of the forward half-disc over which cargo is placed (m).
pub const CARGO_RADIUS: f64 = 3.0;

/// Initial-condition perturbation for one evaluation episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneralizationCase {
    pub task: Task,
    pub seed: u64,
    pub index: u64,
    /// Offset of the object's initial position from nominal, in the robot's initial frame
    /// (x forward, z up).
    pub offset: Vec3,
}

impl GeneralizationCase {
    pub fn radius(&self) -> f64 {
        self.offset.xy().norm()
    }

    pub fn heading(&self) -> f64 {
        self.offset.y.atan2(self.offset.x)
    }

    /// Object pose with the offset applied in the robot frame `robot`.
    pub fn apply(&self, nominal: &Pose, robot: &Pose) -> Pose {
        let mut p = *nominal;
        p.position += robot.orientation * self.offset;
        p
    }
}

pub fn sample_generalization_case_at(task: Task, seed: u64, index: u64) -> GeneralizationCase {
    let mut rng = stream(seed, index);
    let offset = match task {
        Task::CatchShot | Task::Badminton => Vec3::from_fn(|_, _| symmetric(&mut rng, THROWN_OFFSET_RANGE)),
        Task::Cargo => {
            // Area-uniform: radius ∝ sqrt(u).
            let u: f64 = rng.random();
            let r = CARGO_RADIUS * u.sqrt();
            let theta = uniform(&mut rng, -std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2);
            Vec3::new(r * theta.cos(), r * theta.sin(), 0.0)
        }
    };
    GeneralizationCase {
        task,
        seed,
        index,
        offset,
    }
}

pub fn sample_generalization_case(task: Task, seed: u64) -> GeneralizationCase {
    sample_generalization_case_at(task, seed, 0)
}

pub fn sample_generalization_cases(task: Task, seed: u64, n: usize) -> Vec<GeneralizationCase> {
    (0..n as u64).map(|i| sample_generalization_case_at(task, seed, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::shape::Geometry;
    use crate::synth::{synthesize, PHI_TOLERANCE};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn catch() -> InteractionClip {
        synthesize(&fixtures::catch_clip(60), &fixtures::catch_config(12, 40, 3), "catch").unwrap()
    }

    fn carry() -> InteractionClip {
        synthesize(&fixtures::carry_clip(60), &fixtures::carry_config(10, 45, 4), "carry").unwrap()
    }

    fn strip(mut c: InteractionClip) -> InteractionClip {
        c.provenance = Default::default();
        c
    }

    #[test]
    fn unit_scale_changes_only_provenance() {
        for clip in [catch(), carry()] {
            let out = scale_object(&clip, 1.0).unwrap();
            assert_eq!(out.provenance.transforms, vec![AppliedTransform::ScaleObject { s: 1.0 }]);
            assert_eq!(strip(out), strip(clip));
        }
    }

    #[test]
    fn sphere_scaling_scales_radius_and_phi() {
        let mut cfg = fixtures::catch_config(12, 40, 3);
        cfg.relative = crate::synth::RelativeSource::Explicit(RelativeTransform::new(
            Vec3::new(0.02, 0.0, 0.03),
            Default::default(),
        ));
        let clip = synthesize(&fixtures::catch_clip(60), &cfg, "c").unwrap();
        let out = scale_object(&clip, 1.25).unwrap();
        assert_eq!(out.object_spec.geometry, Geometry::Sphere { radius: 0.15 });
        assert_relative_eq!(
            out.relative_transform.translation().norm(),
            1.25 * clip.relative_transform.translation().norm(),
            epsilon = 1e-15
        );
        assert!(out.phi_error() <= PHI_TOLERANCE);
        assert!(scale_object(&clip, 0.0).is_err());
        assert!(scale_object(&clip, -1.0).is_err());
    }

    #[test]
    fn identity_contact_transform() {
        let clip = carry();
        let out = transform_contact_trajectory(&clip, Vec3::zeros(), 1.0).unwrap();
        assert_eq!(out.provenance.caveats, vec![KEYPOINT_WARP_CAVEAT.to_string()]);
        assert_eq!(strip(out), strip(clip));
    }

    #[test]
    fn lowering_a_carried_box() {
        let clip = carry();
        let down = Vec3::new(0.0, 0.0, -0.3);
        let out = transform_contact_trajectory(&clip, down, 1.0).unwrap();
        let li = clip.motion.keypoint_index("left_palm").unwrap();
        for i in clip.phase_ranges().contact {
            let dz = out.object[i].pose.position.z - clip.object[i].pose.position.z;
            assert_relative_eq!(dz, -0.3, epsilon = 1e-12);
            if i < 10 + 4 || i > 45 - 4 {
                // Inside a blend window the body offset ramps in.
                continue;
            }
            let dp = out.motion.frames[i].root.position.z - clip.motion.frames[i].root.position.z;
            assert_relative_eq!(dp, -0.3, epsilon = 1e-12);
            // Palm heights follow the box, up to refinement.
            let dk = out.motion.frames[i].keypoints[li].position.z - clip.motion.frames[i].keypoints[li].position.z;
            assert!((dk + 0.3).abs() < 1e-9, "frame {i}: {dk}");
        }
        assert!(out.phi_error() <= PHI_TOLERANCE);
        // Frames outside the windows keep their original body.
        assert_eq!(out.motion.frames[0], clip.motion.frames[0]);
        assert!(transform_contact_trajectory(&clip, Vec3::new(0.0, 0.0, -5.0), 1.0).is_err());
    }

    #[test]
    fn velocity_randomization() {
        let clip = catch();
        let same = randomize_initial_velocity(&clip, &[0.0; 3], 3, 4).unwrap();
        for c in &same {
            assert_eq!(c.object, same[0].object);
        }
        let a = randomize_initial_velocity(&clip, &[0.3; 3], 9, 3).unwrap();
        let b = randomize_initial_velocity(&clip, &[0.3; 3], 9, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0].object, a[1].object);
        let all_contact = synthesize(&fixtures::catch_clip(30), &fixtures::catch_config(0, 29, 0), "x").unwrap();
        assert!(randomize_initial_velocity(&all_contact, &[0.1; 3], 0, 1).is_err());
    }

    #[test]
    fn velocity_delta_extremes() {
        let (mut lo, mut hi) = (Vec3::repeat(f64::MAX), Vec3::repeat(f64::MIN));
        for i in 0..1000 {
            let (_, post) = draw_velocity_deltas(&[0.3; 3], 42, i);
            lo = lo.inf(&post);
            hi = hi.sup(&post);
        }
        for a in 0..3 {
            assert!(lo[a] >= -0.3 && lo[a] <= -0.27, "{lo}");
            assert!(hi[a] <= 0.3 && hi[a] >= 0.27, "{hi}");
        }
    }

    #[test]
    fn dropout_boundaries() {
        let poses: Vec<Pose> = (0..50).map(|i| Pose::from_position(Vec3::new(i as f64, 0.0, 0.0))).collect();
        let s = PoseSeries::new(30.0, poses.clone());
        let none = DropoutModel {
            p_loss: 0.0,
            mean_burst_len: 5.0,
        };
        let (o, m) = simulate_mocap_dropout(&s, &none, 1).unwrap();
        assert_eq!(o.poses, poses);
        assert!(m.iter().all(|x| !x));
        let all = DropoutModel {
            p_loss: 1.0,
            mean_burst_len: 5.0,
        };
        let (o, m) = simulate_mocap_dropout(&s, &all, 1).unwrap();
        assert!(o.poses.iter().all(|p| *p == poses[0]));
        assert!(!m[0] && m[1..].iter().all(|x| *x));
        assert!(simulate_mocap_dropout(&s, &DropoutModel { p_loss: 1.5, mean_burst_len: 5.0 }, 1).is_err());
    }

    #[test]
    fn dropout_holds_last_valid_pose() {
        let poses: Vec<Pose> = (0..2000).map(|i| Pose::from_position(Vec3::new(i as f64, 0.0, 0.0))).collect();
        let s = PoseSeries::new(30.0, poses.clone());
        let model = DropoutModel {
            p_loss: 0.3,
            mean_burst_len: 4.0,
        };
        let (o, m) = simulate_mocap_dropout(&s, &model, 5).unwrap();
        let mut last = 0;
        for i in 0..poses.len() {
            if m[i] {
                assert_eq!(o.poses[i], poses[last]);
            } else {
                assert_eq!(o.poses[i], poses[i]);
                last = i;
            }
        }
    }

    #[test]
    fn replay_reproduces_a_chain() {
        let clip = catch();
        let cfg = AugmentationConfig {
            geometry_scale_range: [0.8, 1.2],
            contact_translation_range: [0.1, 0.1, 0.05],
            contact_scale_range: [0.9, 1.1],
            velocity_perturbation: [0.2; 3],
            mocap_dropout: Some(DropoutModel {
                p_loss: 0.1,
                mean_burst_len: 3.0,
            }),
            seed: 11,
        };
        let out = augment_one(&clip, &cfg, &AugmentAxes::default(), 4).unwrap();
        assert_eq!(out.provenance.transforms.len(), 4);
        let again = replay(&clip, &out.provenance.transforms).unwrap();
        assert_eq!(again, out);
    }

    #[test]
    fn generalization_samplers() {
        assert!("tennis".parse::<Task>().is_err());
        assert_eq!(sample_generalization_case(Task::Cargo, 3), sample_generalization_case(Task::Cargo, 3));
        let c = sample_generalization_cases(Task::CatchShot, 1, 10_000);
        for a in 0..3 {
            let mean = c.iter().map(|x| x.offset[a]).sum::<f64>() / c.len() as f64;
            assert!(mean.abs() < 0.01);
            assert!(c.iter().all(|x| x.offset[a].abs() <= 0.3));
        }
        for x in sample_generalization_cases(Task::Cargo, 1, 10_000) {
            assert!(x.radius() <= 3.0 && x.heading().abs() <= std::f64::consts::FRAC_PI_2);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn augmentations_keep_clip_invariants(seed in any::<u64>(), index in 0u64..1000) {
            let motion = fixtures::random_clip(seed, 45);
            let clip = synthesize(&motion, &fixtures::random_config(seed, 8, 30, 3), "p").unwrap();
            let cfg = AugmentationConfig {
                geometry_scale_range: [0.7, 1.3],
                contact_translation_range: [0.2, 0.2, 0.1],
                contact_scale_range: [0.8, 1.2],
                velocity_perturbation: [0.5; 3],
                mocap_dropout: Some(DropoutModel { p_loss: 0.2, mean_burst_len: 4.0 }),
                seed,
            };
            let out = augment_one(&clip, &cfg, &AugmentAxes::default(), index).unwrap();
            prop_assert!(out.validate().is_ok());
            prop_assert!(out.phi_error() <= PHI_TOLERANCE);
            for s in &out.object {
                prop_assert!((s.pose.orientation.norm() - 1.0).abs() < 1e-12);
            }
            let b = out.to_json();
            prop_assert_eq!(InteractionClip::from_json(b.as_bytes()).unwrap(), out);
        }
    }
}
