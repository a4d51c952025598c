//! Humanoid motion clips, anchors and pose time series.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{quat_log, Pose, Twist, Vec3};

/// Frame rate assumed for clips recovered from monocular video.
pub const DEFAULT_VIDEO_FPS: f64 = 30.0;

#[derive(Debug, Clone, PartialEq)]
pub struct MotionFrame {
    pub root: Pose,
    /// Joint angles, one per entry of [`MotionClip::joint_names`].
    pub joints: Vec<f64>,
    /// Keypoint poses, aligned with [`MotionClip::keypoint_names`].
    pub keypoints: Vec<Pose>,
    pub joint_velocities: Option<Vec<f64>>,
}

/// Time-indexed humanoid state at a fixed frame rate.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionClip {
    pub fps: f64,
    pub joint_names: Vec<String>,
    pub keypoint_names: Vec<String>,
    pub frames: Vec<MotionFrame>,
}

impl MotionClip {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.fps
    }

    pub fn keypoint_index(&self, name: &str) -> Option<usize> {
        self.keypoint_names.iter().position(|n| n == name)
    }

    /// Resolve keypoint names to indices, reporting the first missing one.
    pub fn keypoint_indices(&self, names: &[String]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|n| {
                self.keypoint_index(n).ok_or_else(|| Error::MissingKeypoint {
                    name: n.clone(),
                    frame: 0,
                })
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::validation(format!("fps must be positive, got {}", self.fps)));
        }
        if self.frames.len() < 2 {
            return Err(Error::validation(format!(
                "clip needs at least 2 frames, got {}",
                self.frames.len()
            )));
        }
        let n = self.joint_names.len();
        let k = self.keypoint_names.len();
        for (i, f) in self.frames.iter().enumerate() {
            if f.joints.len() != n {
                return Err(Error::validation(format!(
                    "frame {i} has {} joint values, expected {n}",
                    f.joints.len()
                )));
            }
            if f.keypoints.len() != k {
                return Err(Error::validation(format!(
                    "frame {i} has {} keypoints, expected {k}",
                    f.keypoints.len()
                )));
            }
            if let Some(v) = &f.joint_velocities {
                if v.len() != n {
                    return Err(Error::validation(format!(
                        "frame {i} has {} joint velocities, expected {n}",
                        v.len()
                    )));
                }
            }
            if f.joints.iter().any(|x| !x.is_finite()) {
                return Err(Error::validation(format!("frame {i} has non-finite joint values")));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for name in &self.keypoint_names {
            if !seen.insert(name) {
                return Err(Error::validation(format!("duplicate keypoint name `{name}`")));
            }
        }
        Ok(())
    }

    /// Pose series of a single keypoint.
    pub fn keypoint_series(&self, index: usize) -> PoseSeries {
        PoseSeries::new(self.fps, self.frames.iter().map(|f| f.keypoints[index]).collect())
    }
}

// JSON wire format.

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct FrameWire {
    root: Pose,
    dof: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dof_vel: Option<Vec<f64>>,
    keypoints: IndexMap<String, Pose>,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct MotionWire {
    pub fps: f64,
    pub joint_names: Vec<String>,
    pub keypoint_names: Vec<String>,
    pub frames: Vec<FrameWire>,
}

impl MotionWire {
    pub(crate) fn into_clip(self) -> Result<MotionClip> {
        let mut frames = Vec::with_capacity(self.frames.len());
        for (i, mut f) in self.frames.into_iter().enumerate() {
            if f.keypoints.len() != self.keypoint_names.len() {
                return Err(Error::validation(format!(
                    "frame {i} lists {} keypoints, header declares {}",
                    f.keypoints.len(),
                    self.keypoint_names.len()
                )));
            }
            let mut kps = Vec::with_capacity(self.keypoint_names.len());
            for name in &self.keypoint_names {
                let pose = f.keypoints.swap_remove(name).ok_or_else(|| Error::MissingKeypoint {
                    name: name.clone(),
                    frame: i,
                })?;
                kps.push(pose);
            }
            frames.push(MotionFrame {
                root: f.root,
                joints: f.dof,
                keypoints: kps,
                joint_velocities: f.dof_vel,
            });
        }
        let clip = MotionClip {
            fps: self.fps,
            joint_names: self.joint_names,
            keypoint_names: self.keypoint_names,
            frames,
        };
        clip.validate()?;
        Ok(clip)
    }

    pub(crate) fn from_clip(clip: &MotionClip) -> Self {
        MotionWire {
            fps: clip.fps,
            joint_names: clip.joint_names.clone(),
            keypoint_names: clip.keypoint_names.clone(),
            frames: clip
                .frames
                .iter()
                .map(|f| FrameWire {
                    root: f.root,
                    dof: f.joints.clone(),
                    dof_vel: f.joint_velocities.clone(),
                    keypoints: clip
                        .keypoint_names
                        .iter()
                        .cloned()
                        .zip(f.keypoints.iter().copied())
                        .collect(),
                })
                .collect(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MotionFile {
    fps: f64,
    joint_names: Vec<String>,
    keypoint_names: Vec<String>,
    frames: Vec<FrameWire>,
}

impl Serialize for MotionClip {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MotionWire::from_clip(self).serialize(s)
    }
}

impl MotionClip {
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let f: MotionFile = serde_json::from_slice(bytes)?;
        MotionWire {
            fps: f.fps,
            joint_names: f.joint_names,
            keypoint_names: f.keypoint_names,
            frames: f.frames,
        }
        .into_clip()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("motion clip serialization is infallible")
    }
}

/// How the anchor frame is built from body keypoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorKind {
    MidpointOfTwoKeypoints,
    SingleKeypoint,
}

/// Orientation of a two-keypoint anchor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrientationRule {
    /// Orientation of the first named keypoint.
    #[default]
    KeypointA,
    /// Halfway slerp between the two keypoint orientations.
    Averaged,
    /// x along a→b, z as close to world up as possible.
    ConstructedFrame,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorSpec {
    pub kind: AnchorKind,
    pub keypoint_names: Vec<String>,
    #[serde(default)]
    pub orientation_rule: OrientationRule,
}

impl AnchorSpec {
    pub fn midpoint(a: &str, b: &str) -> Self {
        AnchorSpec {
            kind: AnchorKind::MidpointOfTwoKeypoints,
            keypoint_names: vec![a.to_string(), b.to_string()],
            orientation_rule: OrientationRule::KeypointA,
        }
    }

    pub fn single(name: &str) -> Self {
        AnchorSpec {
            kind: AnchorKind::SingleKeypoint,
            keypoint_names: vec![name.to_string()],
            orientation_rule: OrientationRule::KeypointA,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let expected = match self.kind {
            AnchorKind::MidpointOfTwoKeypoints => 2,
            AnchorKind::SingleKeypoint => 1,
        };
        if self.keypoint_names.len() != expected {
            return Err(Error::validation(format!(
                "{:?} anchor needs {expected} keypoint names, got {}",
                self.kind,
                self.keypoint_names.len()
            )));
        }
        Ok(())
    }
}

/// Sequence of poses at a fixed rate, optionally with per-frame velocities.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseSeries {
    pub fps: f64,
    pub poses: Vec<Pose>,
    pub velocities: Option<Vec<Twist>>,
}

impl PoseSeries {
    pub fn new(fps: f64, poses: Vec<Pose>) -> Self {
        PoseSeries {
            fps,
            poses,
            velocities: None,
        }
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> PoseSeries {
        PoseSeries {
            fps: self.fps,
            poses: self.poses[range.clone()].to_vec(),
            velocities: self.velocities.as_ref().map(|v| v[range].to_vec()),
        }
    }
}

fn anchor_pose(spec: &AnchorSpec, a: &Pose, b: Option<&Pose>, frame: usize) -> Result<Pose> {
    let Some(b) = b else {
        return Ok(*a);
    };
    let position = (a.position + b.position) * 0.5;
    let orientation = match spec.orientation_rule {
        OrientationRule::KeypointA => a.orientation,
        OrientationRule::Averaged => crate::geometry::slerp_unit(&a.orientation, &b.orientation, 0.5),
        OrientationRule::ConstructedFrame => {
            let x = b.position - a.position;
            let xn = x.norm();
            if xn < 1e-12 {
                return Err(Error::validation(format!(
                    "anchor keypoints coincide at frame {frame}; constructed frame undefined"
                )));
            }
            let x = x / xn;
            let z = Vec3::z() - x * x.z;
            let zn = z.norm();
            if zn < 1e-9 {
                return Err(Error::validation(format!(
                    "anchor axis is vertical at frame {frame}; constructed frame undefined"
                )));
            }
            let z = z / zn;
            let y = z.cross(&x);
            let m = nalgebra::Matrix3::from_columns(&[x, y, z]);
            nalgebra::UnitQuaternion::from_rotation_matrix(
                &nalgebra::Rotation3::from_matrix_unchecked(m),
            )
        }
    };
    Ok(Pose::new(position, orientation))
}

/// Per-frame anchor pose of `clip` under `spec`.
pub fn derive_anchor_trajectory(clip: &MotionClip, spec: &AnchorSpec) -> Result<PoseSeries> {
    spec.validate()?;
    let mut idx = Vec::with_capacity(spec.keypoint_names.len());
    for name in &spec.keypoint_names {
        let i = clip.keypoint_index(name).ok_or_else(|| Error::MissingKeypoint {
            name: name.clone(),
            frame: 0,
        })?;
        idx.push(i);
    }
    let mut poses = Vec::with_capacity(clip.len());
    for (fi, f) in clip.frames.iter().enumerate() {
        let a = f.keypoints.get(idx[0]).ok_or_else(|| Error::MissingKeypoint {
            name: spec.keypoint_names[0].clone(),
            frame: fi,
        })?;
        let b = match idx.get(1) {
            Some(&j) => Some(f.keypoints.get(j).ok_or_else(|| Error::MissingKeypoint {
                name: spec.keypoint_names[1].clone(),
                frame: fi,
            })?),
            None => None,
        };
        poses.push(anchor_pose(spec, a, b, fi)?);
    }
    Ok(PoseSeries::new(clip.fps, poses))
}

/// Fill in linear and angular velocities by central differences (one-sided at the ends).
///
/// Angular velocity is the world-frame rotation vector of the relative rotation divided by
/// the elapsed time.
pub fn finite_difference_velocities(series: &PoseSeries) -> Result<PoseSeries> {
    let n = series.len();
    if n < 2 {
        return Err(Error::validation(format!(
            "finite differences need at least 2 poses, got {n}"
        )));
    }
    let dt = 1.0 / series.fps;
    let p = &series.poses;
    let vel = (0..n)
        .map(|i| {
            let (lo, hi) = (i.saturating_sub(1), (i + 1).min(n - 1));
            let span = (hi - lo) as f64 * dt;
            let linear = (p[hi].position - p[lo].position) / span;
            let rel = p[hi].orientation * p[lo].orientation.inverse();
            Twist {
                linear,
                angular: quat_log(&rel) / span,
            }
        })
        .collect();
    Ok(PoseSeries {
        fps: series.fps,
        poses: series.poses.clone(),
        velocities: Some(vel),
    })
}

/// Central-difference derivative of a scalar-vector sequence (one-sided at the ends).
pub(crate) fn differentiate(rows: &[Vec<f64>], dt: f64) -> Vec<Vec<f64>> {
    let n = rows.len();
    (0..n)
        .map(|i| {
            let (lo, hi) = (i.saturating_sub(1), (i + 1).min(n - 1));
            let span = (hi - lo).max(1) as f64 * dt;
            rows[hi].iter().zip(&rows[lo]).map(|(a, b)| (a - b) / span).collect()
        })
        .collect()
}
