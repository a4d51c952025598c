//! Small synthetic motion clips and matching synthesis configs.
//!
//! Used by tests, the acceptance suite and the CLI examples. The bodies are keypoint skeletons
//! only; joint angles are smooth placeholders.

use std::f64::consts::{PI, TAU};

use nalgebra::UnitQuaternion;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{Pose, Quat, Vec3};
use crate::motion::{AnchorSpec, MotionClip, MotionFrame};
use crate::shape::{Geometry, ObjectSpec};
use crate::synth::{
    FlightConfig, FlightMode, PhaseAnnotation, RelativeSource, RelativeTransform, SynthConfig, SynthSettings,
};

pub const KEYPOINTS: [&str; 6] = ["pelvis", "head", "left_palm", "right_palm", "left_foot", "right_foot"];
pub const JOINTS: [&str; 6] = [
    "waist_yaw",
    "left_shoulder_pitch",
    "right_shoulder_pitch",
    "left_elbow",
    "right_elbow",
    "left_knee",
];
const FPS: f64 = 30.0;

fn frame(root: Pose, mid: Vec3, heading: Quat, half_width: f64, t: f64) -> MotionFrame {
    let lateral = heading * Vec3::new(0.0, half_width, 0.0);
    let feet = |side: f64| Pose::from_position(Vec3::new(root.position.x, root.position.y + side * 0.12, 0.05));
    MotionFrame {
        root,
        joints: (0..JOINTS.len()).map(|j| 0.2 * (t * (1.0 + j as f64) * 0.7).sin()).collect(),
        keypoints: vec![
            root,
            Pose::new(root.position + Vec3::new(0.0, 0.0, 0.65), root.orientation),
            Pose::new(mid + lateral, heading),
            Pose::new(mid - lateral, heading),
            feet(1.0),
            feet(-1.0),
        ],
        joint_velocities: None,
    }
}

fn clip(frames: Vec<MotionFrame>) -> MotionClip {
    MotionClip {
        fps: FPS,
        joint_names: JOINTS.iter().map(|s| s.to_string()).collect(),
        keypoint_names: KEYPOINTS.iter().map(|s| s.to_string()).collect(),
        frames,
    }
}

fn palms() -> AnchorSpec {
    AnchorSpec::midpoint("left_palm", "right_palm")
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

/// Every frame identical.
pub fn constant_clip(n: usize) -> MotionClip {
    let root = Pose::from_position(Vec3::new(0.0, 0.0, 0.9));
    let f = frame(root, Vec3::new(0.35, 0.0, 1.0), Quat::identity(), 0.15, 0.0);
    clip(vec![f; n])
}

/// Walking forward while lifting with both palms 0.3 m apart.
pub fn carry_clip(n: usize) -> MotionClip {
    clip(
        (0..n)
            .map(|i| {
                let t = i as f64 / FPS;
                let root = Pose::from_position(Vec3::new(0.6 * t, 0.0, 0.9));
                let lift = 0.15 * (1.0 - (PI * t / 2.0).cos());
                frame(root, root.position + Vec3::new(0.35, 0.0, lift), Quat::identity(), 0.15, t)
            })
            .collect(),
    )
}

/// Box held between the palms during `[t_s, t_e]`, resting before and after.
pub fn carry_config(t_s: usize, t_e: usize, k: usize) -> SynthConfig {
    SynthConfig {
        phases: PhaseAnnotation {
            t_s,
            t_e,
            anchor: palms(),
            blend_window_k: k,
        },
        object: ObjectSpec {
            geometry: Geometry::Box { size: [0.3, 0.3, 0.3] },
            mass: 2.0,
            sim: Default::default(),
        },
        relative: RelativeSource::Explicit(RelativeTransform::default()),
        settings: SynthSettings {
            contact_bodies: names(&["left_palm", "right_palm", "left_foot", "right_foot"]),
            pre: FlightConfig {
                mode: FlightMode::Static,
                ..Default::default()
            },
            post: FlightConfig {
                mode: FlightMode::Static,
                ..Default::default()
            },
            ..Default::default()
        },
    }
}

/// Hands swing back to receive a ball and then push it forward and up.
pub fn catch_clip(n: usize) -> MotionClip {
    clip(
        (0..n)
            .map(|i| {
                let t = i as f64 / FPS;
                let root = Pose::from_position(Vec3::new(0.0, 0.0, 0.9));
                let mid = Vec3::new(0.4 + 0.2 * (TAU * t / 2.0).sin(), 0.0, 1.2 + 0.15 * (TAU * t / 2.0).cos());
                frame(root, mid, Quat::identity(), 0.12, t)
            })
            .collect(),
    )
}

/// Ball caught at `t_s` and released at `t_e`, both flights ballistic.
pub fn catch_config(t_s: usize, t_e: usize, k: usize) -> SynthConfig {
    SynthConfig {
        phases: PhaseAnnotation {
            t_s,
            t_e,
            anchor: palms(),
            blend_window_k: k,
        },
        object: ObjectSpec {
            geometry: Geometry::Sphere { radius: 0.12 },
            mass: 0.6,
            sim: Default::default(),
        },
        relative: RelativeSource::Explicit(RelativeTransform::default()),
        settings: SynthSettings {
            contact_bodies: names(&["left_palm", "right_palm"]),
            post: FlightConfig {
                mode: FlightMode::Ballistic,
                velocity_offset: Vec3::new(1.5, 0.0, 2.5),
            },
            ..Default::default()
        },
    }
}

/// Smooth random palm motion with a slowly turning heading.
pub fn random_clip(seed: u64, n: usize) -> MotionClip {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut wave = || {
        let amp = rng.random_range(0.0..0.3);
        let freq = rng.random_range(0.2..1.5);
        let phase = rng.random_range(0.0..TAU);
        move |t: f64| amp * (TAU * freq * t + phase).sin()
    };
    let (wx, wy, wz, yaw, pitch) = (wave(), wave(), wave(), wave(), wave());
    let half_width = rng.random_range(0.08..0.2);
    let base = Vec3::new(rng.random_range(0.2..0.5), rng.random_range(-0.2..0.2), rng.random_range(1.0..1.3));
    clip(
        (0..n)
            .map(|i| {
                let t = i as f64 / FPS;
                let root = Pose::from_position(Vec3::new(0.0, 0.0, 0.9));
                let heading = UnitQuaternion::from_euler_angles(0.0, pitch(t), 2.0 * yaw(t));
                frame(root, base + Vec3::new(wx(t), wy(t), wz(t)), heading, half_width, t)
            })
            .collect(),
    )
}

/// Random primitive and φ; static pre-contact and ballistic post-contact flight.
pub fn random_config(seed: u64, t_s: usize, t_e: usize, k: usize) -> SynthConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let geometry = match rng.random_range(0..3) {
        0 => Geometry::Sphere {
            radius: rng.random_range(0.05..0.2),
        },
        1 => Geometry::Box {
            size: [
                rng.random_range(0.1..0.4),
                rng.random_range(0.1..0.4),
                rng.random_range(0.1..0.4),
            ],
        },
        _ => Geometry::Cylinder {
            radius: rng.random_range(0.05..0.15),
            height: rng.random_range(0.1..0.5),
        },
    };
    let phi = RelativeTransform::new(
        Vec3::new(
            rng.random_range(-0.05..0.05),
            rng.random_range(-0.05..0.05),
            rng.random_range(-0.05..0.05),
        ),
        UnitQuaternion::from_euler_angles(
            rng.random_range(-PI..PI),
            rng.random_range(-1.5..1.5),
            rng.random_range(-PI..PI),
        ),
    );
    SynthConfig {
        phases: PhaseAnnotation {
            t_s,
            t_e,
            anchor: palms(),
            blend_window_k: k,
        },
        object: ObjectSpec {
            geometry,
            mass: rng.random_range(0.2..3.0),
            sim: crate::ballistic::SimParams {
                linear_damping: rng.random_range(0.0..0.3),
                ..Default::default()
            },
        },
        relative: RelativeSource::Explicit(phi),
        settings: SynthSettings {
            contact_bodies: names(&["left_palm", "right_palm", "head"]),
            pre: FlightConfig {
                mode: FlightMode::Static,
                ..Default::default()
            },
            ..Default::default()
        },
    }
}
