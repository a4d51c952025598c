use std::path::Path;

use hoisynth::augment::augment_one;
use hoisynth::ballistic::{simulate_forward, simulate_reverse, solve_initial_velocity};
use hoisynth::dynamics::{FrictionModel, KinematicChain};
use hoisynth::grasp::{force_closure_test, refine_contact_frame, ClosureReport};
use hoisynth::io::{estimate_external_torque_log, read_torque_log_csv, write_external_torque_csv, write_trajectory_csv};
use hoisynth::metrics::{success_rate, tracking_errors, MetricsSummary};
use hoisynth::motion::MotionClip;
use hoisynth::reward::{score_rollout, Rollout};
use hoisynth::synth::{synthesize, AppliedTransform, InteractionClip};
use hoisynth::{Error, Vec3};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::manifest::{self, read_file, read_text, resolve, Direction};
use crate::output::Outputs;

fn check_file_stem(id: &str) -> CliResult<()> {
    let ok = !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
        && !id.starts_with('.');
    if ok {
        Ok(())
    } else {
        Err(Error::Validation(format!("clip id `{id}` must be a plain file name ([A-Za-z0-9_.-])")).into())
    }
}

fn load_clip(path: &Path) -> CliResult<InteractionClip> {
    InteractionClip::from_json(&read_file(path)?).map_err(|e| CliError::in_file(path, e))
}

pub fn synth(manifest_path: &Path) -> CliResult<(Outputs, String)> {
    let (m, dir) = manifest::load::<manifest::SynthManifest>(manifest_path)?;
    check_file_stem(&m.clip_id)?;
    let motion_path = resolve(&dir, &m.motion);
    let motion = MotionClip::from_json(&read_file(&motion_path)?).map_err(|e| CliError::in_file(&motion_path, e))?;
    let clip = synthesize(&motion, &m.config, &m.clip_id)?;
    let mut out = Outputs::default();
    let name = format!("{}.json", m.clip_id);
    out.add(&name, clip.to_json() + "\n");
    let summary = format!(
        "{name}: {} frames, max phi error {:.3e}",
        clip.len(),
        clip.provenance.max_phi_error
    );
    Ok((out, summary))
}

#[derive(Serialize)]
struct IndexEntry<'a> {
    file: String,
    clip_id: &'a str,
    transforms: &'a [AppliedTransform],
}

#[derive(Serialize)]
struct AugmentIndex<'a> {
    parent: &'a str,
    seed: u64,
    n: usize,
    clips: Vec<IndexEntry<'a>>,
}

pub fn augment(manifest_path: &Path, seed_override: Option<u64>) -> CliResult<(Outputs, String)> {
    let (m, dir) = manifest::load::<manifest::AugmentManifest>(manifest_path)?;
    let mut cfg = m.config.clone();
    if let Some(s) = seed_override.or(m.seed) {
        cfg.seed = s;
    }
    cfg.validate()?;
    let parent = load_clip(&resolve(&dir, &m.parent))?;
    let pid = parent.provenance.clip_id.clone();
    check_file_stem(&pid)?;
    let mut clips = Vec::with_capacity(m.n);
    for i in 0..m.n {
        let mut c = augment_one(&parent, &cfg, &m.axes, i as u64)?;
        c.provenance.clip_id = format!("{pid}_aug_{i}");
        c.provenance.parent = Some(pid.clone());
        clips.push(c);
    }
    let mut out = Outputs::default();
    for c in &clips {
        out.add(format!("{}.json", c.provenance.clip_id), c.to_json() + "\n");
    }
    let index = AugmentIndex {
        parent: &pid,
        seed: cfg.seed,
        n: m.n,
        clips: clips
            .iter()
            .map(|c| IndexEntry {
                file: format!("{}.json", c.provenance.clip_id),
                clip_id: &c.provenance.clip_id,
                transforms: &c.provenance.transforms,
            })
            .collect(),
    };
    out.add_json("index.json", &index);
    Ok((out, format!("{} augmented clips of {pid} (seed {})", m.n, cfg.seed)))
}

fn load_rollout(path: &Path) -> CliResult<Rollout> {
    Rollout::from_json(&read_file(path)?).map_err(|e| CliError::in_file(path, e))
}

pub fn score(manifest_path: &Path) -> CliResult<(Outputs, String)> {
    let (m, dir) = manifest::load::<manifest::ScoreManifest>(manifest_path)?;
    if let Some(rule) = &m.success {
        rule.validate()?;
    }
    let rollout_path = resolve(&dir, &m.rollout);
    let rollout = load_rollout(&rollout_path)?;
    let reference = Rollout::from_clip(&load_clip(&resolve(&dir, &m.reference))?)?;
    let report = score_rollout(&rollout, &reference, &m.reward).map_err(|e| CliError::in_file(&rollout_path, e))?;
    let errors = tracking_errors(&rollout, &reference, m.units)?;
    let load_all = |paths: &[String]| -> CliResult<Vec<Rollout>> {
        paths.iter().map(|p| load_rollout(&resolve(&dir, p))).collect()
    };
    let evaluation = if m.evaluation_rollouts.is_empty() {
        vec![rollout.clone()]
    } else {
        load_all(&m.evaluation_rollouts)?
    };
    let generalization = load_all(&m.generalization_rollouts)?;
    let rate = |set: &[Rollout]| {
        m.success
            .as_ref()
            .map(|rule| success_rate(&set.iter().map(|r| rule.evaluate_rollout(r)).collect::<Vec<_>>()))
    };
    let summary = MetricsSummary {
        sr: rate(&evaluation),
        gsr: if generalization.is_empty() {
            None
        } else {
            rate(&generalization)
        },
        e_o: errors.e_o,
        e_h: errors.e_h,
        n: evaluation.len(),
        units: m.units,
        mean_reward: report.mean_total(),
    };
    let mut out = Outputs::default();
    out.add("reward.csv", report.to_csv()?);
    out.add_json("metrics.json", &summary);
    Ok((
        out,
        format!(
            "{} frames, mean reward {:.6}, E_o {:.6}, E_h {:.6}",
            report.rows.len(),
            summary.mean_reward,
            summary.e_o,
            summary.e_h
        ),
    ))
}

pub fn simulate(manifest_path: &Path) -> CliResult<(Outputs, String)> {
    let (m, _) = manifest::load::<manifest::SimulateManifest>(manifest_path)?;
    m.params.validate()?;
    let (states, t0) = match m.direction {
        Direction::Forward => {
            if m.initial.pose.position.z < m.params.ground_height {
                return Err(Error::Validation("initial state starts below the ground".into()).into());
            }
            (simulate_forward(&m.initial, &m.params, m.steps), 0.0)
        }
        Direction::Reverse => (
            simulate_reverse(&m.initial, &m.params, m.steps)?,
            -(m.steps as f64) * m.params.dt,
        ),
    };
    let mut out = Outputs::default();
    out.add("trajectory.csv", write_trajectory_csv(&states, t0, m.params.dt)?);
    let last = states.last().expect("at least the initial state");
    Ok((out, format!("{} states, final position {:?}", states.len(), last.pose.position.as_slice())))
}

#[derive(Serialize)]
struct SolveOutput {
    v0: Vec3,
    residual: f64,
    iterations: usize,
}

pub fn solve_v0(manifest_path: &Path) -> CliResult<(Outputs, String)> {
    let (m, _) = manifest::load::<manifest::SolveManifest>(manifest_path)?;
    let sol = solve_initial_velocity(&m.p0, &m.target, m.flight_time, &m.params)?;
    let mut out = Outputs::default();
    out.add_json(
        "solution.json",
        &SolveOutput {
            v0: sol.v0,
            residual: sol.residual,
            iterations: sol.iterations,
        },
    );
    Ok((out, format!("v0 {:?}, residual {:.3e}", sol.v0.as_slice(), sol.residual)))
}

pub fn estimate_force(manifest_path: &Path) -> CliResult<(Outputs, String)> {
    let (m, dir) = manifest::load::<manifest::EstimateManifest>(manifest_path)?;
    let chain_path = resolve(&dir, &m.chain);
    let chain: KinematicChain =
        serde_json::from_slice(&read_file(&chain_path)?).map_err(|e| CliError::in_file(&chain_path, e))?;
    chain.validate().map_err(|e| CliError::in_file(&chain_path, e))?;
    let friction = m.friction.clone().unwrap_or_else(|| FrictionModel::none(chain.dof()));
    let log_path = resolve(&dir, &m.log);
    let log = read_torque_log_csv(&read_text(&log_path)?).map_err(|e| CliError::in_file(&log_path, e))?;
    let tau = estimate_external_torque_log(&chain, &friction, &log, m.rate_hz)?;
    let mut out = Outputs::default();
    out.add("tau_ext.csv", write_external_torque_csv(&tau, m.rate_hz)?);
    Ok((out, format!("{} samples, {} joints", tau.len(), chain.dof())))
}

pub fn grasp_check(manifest_path: &Path) -> CliResult<(Outputs, String)> {
    let (m, dir) = manifest::load::<manifest::GraspManifest>(manifest_path)?;
    let reports: Vec<ClosureReport> = match (&m.contacts, &m.clip) {
        (Some(set), None) => {
            set.validate()?;
            let r = force_closure_test(set)?;
            vec![ClosureReport {
                frame: 0,
                closure: r.closure,
                margin: r.margin,
                num_contacts: set.contacts.len(),
                mean_offset: Vec3::zeros(),
            }]
        }
        (None, Some(path)) => {
            let clip = load_clip(&resolve(&dir, path))?;
            let cfg = &clip.settings.grasp;
            let contact = clip.motion.keypoint_indices(&cfg.contact_names(&clip.phases.anchor))?;
            let follower = clip.motion.keypoint_indices(&cfg.follower_keypoints)?;
            let ranges = clip.phase_ranges();
            ranges
                .contact
                .map(|i| {
                    refine_contact_frame(
                        i,
                        &clip.motion.frames[i].keypoints,
                        &clip.object[i].pose,
                        &clip.object_spec,
                        &contact,
                        &follower,
                        cfg,
                    )
                    .map(|r| r.report)
                })
                .collect::<hoisynth::Result<_>>()?
        }
        _ => {
            return Err(Error::Validation("grasp-check manifest needs exactly one of `contacts` or `clip`".into()).into())
        }
    };
    let closed = reports.iter().filter(|r| r.closure).count();
    let mut out = Outputs::default();
    out.add_json("closure_report.json", &reports);
    Ok((out, format!("{closed}/{} frames in force closure", reports.len())))
}
