//! Per-command manifest files. Relative paths resolve against the manifest's directory.

use std::path::{Path, PathBuf};

use hoisynth::augment::{AugmentAxes, AugmentationConfig};
use hoisynth::ballistic::{BodyState, SimParams};
use hoisynth::dynamics::FrictionModel;
use hoisynth::grasp::ContactSet;
use hoisynth::metrics::{SuccessRule, Units};
use hoisynth::reward::RewardConfig;
use hoisynth::synth::{SynthConfig, SCHEMA_VERSION};
use hoisynth::{Error, Vec3};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::error::{CliError, CliResult};

pub fn read_file(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn read_text(path: &Path) -> CliResult<String> {
    let bytes = read_file(path)?;
    String::from_utf8(bytes).map_err(|e| CliError::in_file(path, Error::Parse(e.to_string())))
}

/// Parse a manifest and check its schema version. Returns the manifest and its directory.
pub fn load<M: DeserializeOwned + Versioned>(path: &Path) -> CliResult<(M, PathBuf)> {
    let bytes = read_file(path)?;
    let m: M = serde_json::from_slice(&bytes).map_err(|e| CliError::in_file(path, e))?;
    if m.schema_version() != SCHEMA_VERSION {
        return Err(CliError::in_file(
            path,
            Error::Validation(format!(
                "unsupported manifest schema_version {} (expected {SCHEMA_VERSION})",
                m.schema_version()
            )),
        ));
    }
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((m, dir))
}

pub fn resolve(dir: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        dir.join(p)
    }
}

pub trait Versioned {
    fn schema_version(&self) -> u32;
}

macro_rules! versioned {
    ($($t:ty),*) => {
        $(impl Versioned for $t {
            fn schema_version(&self) -> u32 {
                self.schema_version
            }
        })*
    };
}

versioned!(SynthManifest, AugmentManifest, ScoreManifest, SimulateManifest, SolveManifest, EstimateManifest, GraspManifest);

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthManifest {
    pub schema_version: u32,
    /// Motion clip JSON.
    pub motion: String,
    pub clip_id: String,
    pub config: SynthConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentManifest {
    pub schema_version: u32,
    /// Interaction clip JSON to augment.
    pub parent: String,
    pub n: usize,
    /// Batch seed; overrides `config.seed`.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub config: AugmentationConfig,
    #[serde(default)]
    pub axes: AugmentAxes,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreManifest {
    pub schema_version: u32,
    /// Rollout JSON scored frame by frame into the reward report.
    pub rollout: String,
    /// Interaction clip JSON the rollout imitates.
    pub reference: String,
    #[serde(default)]
    pub reward: RewardConfig,
    #[serde(default)]
    pub units: Units,
    #[serde(default)]
    pub success: Option<SuccessRule>,
    /// Rollouts counted for the success rate; `[rollout]` when empty.
    #[serde(default)]
    pub evaluation_rollouts: Vec<String>,
    /// Rollouts under sampled generalization conditions.
    #[serde(default)]
    pub generalization_rollouts: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    #[default]
    Forward,
    /// `initial` is the final state; the output runs forward in time and ends there.
    Reverse,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateManifest {
    pub schema_version: u32,
    pub initial: BodyState,
    #[serde(default)]
    pub params: SimParams,
    pub steps: usize,
    #[serde(default)]
    pub direction: Direction,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveManifest {
    pub schema_version: u32,
    pub p0: Vec3,
    pub target: Vec3,
    pub flight_time: f64,
    #[serde(default)]
    pub params: SimParams,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateManifest {
    pub schema_version: u32,
    /// Chain definition JSON.
    pub chain: String,
    #[serde(default)]
    pub friction: Option<FrictionModel>,
    /// CSV log with q_j, qd_j and tau_j columns.
    pub log: String,
    pub rate_hz: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraspManifest {
    pub schema_version: u32,
    /// A single contact set in the object frame.
    #[serde(default)]
    pub contacts: Option<ContactSet>,
    /// Interaction clip whose contact frames are checked.
    #[serde(default)]
    pub clip: Option<String>,
}
