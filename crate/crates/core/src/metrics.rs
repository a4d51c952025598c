//! Evaluation metrics: task success predicates, success rates and tracking errors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::reward::Rollout;

/// Default acceptance radius around the hoop centre (m).
pub const HOOP_RADIUS: f64 = 0.20;
/// Default acceptance band around the target cargo height (m).
pub const CARGO_HEIGHT_TOLERANCE: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    #[default]
    M,
    Cm,
}

impl Units {
    pub fn scale(self) -> f64 {
        match self {
            Units::M => 1.0,
            Units::Cm => 100.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackingErrors {
    pub e_o: f64,
    pub e_h: f64,
    pub units: Units,
}

/// Mean object position error and mean key-body position error over the rollout's frames.
pub fn tracking_errors(rollout: &Rollout, reference: &Rollout, units: Units) -> Result<TrackingErrors> {
    if rollout.frames.len() > reference.frames.len() {
        return Err(Error::validation("rollout is longer than the reference"));
    }
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
    let n = rollout.frames.len();
    if n == 0 {
        return Err(Error::validation("rollout has no frames"));
    }
    let (mut eo, mut eh) = (0.0, 0.0);
    for (f, r) in rollout.frames.iter().zip(&reference.frames) {
        eo += (f.object.position - r.object.position).norm();
        if !kidx.is_empty() {
            let s: f64 = kidx
                .iter()
                .enumerate()
                .map(|(i, &j)| (f.keypoints[i].position - r.keypoints[j].position).norm())
                .sum();
            eh += s / kidx.len() as f64;
        }
    }
    let k = units.scale() / n as f64;
    Ok(TrackingErrors {
        e_o: eo * k,
        e_h: eh * k,
        units,
    })
}

/// Per-task success rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case", deny_unknown_fields)]
pub enum SuccessRule {
    /// Ball passes within `radius` of the hoop centre at some frame.
    CatchShot {
        hoop: Vec3,
        #[serde(default = "hoop_radius")]
        radius: f64,
    },
    /// Object ends within `tolerance` of the target height.
    Cargo {
        target_height: f64,
        #[serde(default = "cargo_tolerance")]
        tolerance: f64,
    },
    /// Any simulated contact flag is set at some frame.
    Badminton,
}

fn hoop_radius() -> f64 {
    HOOP_RADIUS
}

fn cargo_tolerance() -> f64 {
    CARGO_HEIGHT_TOLERANCE
}

impl SuccessRule {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            SuccessRule::CatchShot { hoop, radius } => hoop.iter().all(|x| x.is_finite()) && radius >= 0.0,
            SuccessRule::Cargo {
                target_height,
                tolerance,
            } => target_height.is_finite() && tolerance >= 0.0,
            SuccessRule::Badminton => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::validation("success rule thresholds must be finite and non-negative"))
        }
    }

    /// Decision from an object trajectory and per-frame contact flags.
    pub fn evaluate(&self, object_positions: &[Vec3], contacts: &[Vec<u8>]) -> bool {
        match *self {
            SuccessRule::CatchShot { hoop, radius } => {
                object_positions.iter().any(|p| (p - hoop).norm() <= radius)
            }
            SuccessRule::Cargo {
                target_height,
                tolerance,
            } => object_positions
                .last()
                .is_some_and(|p| (p.z - target_height).abs() <= tolerance),
            SuccessRule::Badminton => contacts.iter().flatten().any(|&c| c != 0),
        }
    }

    pub fn evaluate_rollout(&self, rollout: &Rollout) -> bool {
        let pos: Vec<Vec3> = rollout.frames.iter().map(|f| f.object.position).collect();
        let cg: Vec<Vec<u8>> = rollout.frames.iter().map(|f| f.contact.clone()).collect();
        self.evaluate(&pos, &cg)
    }
}

/// Fraction of outcomes that succeeded; 0 for an empty set.
pub fn success_rate(outcomes: &[bool]) -> f64 {
    if outcomes.is_empty() {
        return 0.0;
    }
    outcomes.iter().filter(|&&s| s).count() as f64 / outcomes.len() as f64
}

pub fn rollout_success_rate(rollouts: &[Rollout], rule: &SuccessRule) -> f64 {
    let outcomes: Vec<bool> = rollouts.iter().map(|r| rule.evaluate_rollout(r)).collect();
    success_rate(&outcomes)
}

/// Summary written next to a reward report. `sr` needs a success rule and `gsr` also needs
/// generalization rollouts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsSummary {
    #[serde(rename = "SR", skip_serializing_if = "Option::is_none", default)]
    pub sr: Option<f64>,
    #[serde(rename = "GSR", skip_serializing_if = "Option::is_none", default)]
    pub gsr: Option<f64>,
    #[serde(rename = "E_o")]
    pub e_o: f64,
    #[serde(rename = "E_h")]
    pub e_h: f64,
    pub n: usize,
    pub units: Units,
    pub mean_reward: f64,
}
