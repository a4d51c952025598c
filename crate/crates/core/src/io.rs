//! CSV formats: object trajectories, joint torque logs and estimated external torques.

use crate::ballistic::BodyState;
use crate::dynamics::{estimate_accel, estimate_external_torque, FrictionModel, KinematicChain};
use crate::error::{Error, Result};
use crate::geometry::{quat_from_wxyz, quat_to_wxyz, Pose, Vec3};

pub const TRAJECTORY_COLUMNS: [&str; 14] = [
    "t", "px", "py", "pz", "qw", "qx", "qy", "qz", "vx", "vy", "vz", "wx", "wy", "wz",
];

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Numerical(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// One row per state, `t = t0 + i dt`.
pub fn write_trajectory_csv(states: &[BodyState], t0: f64, dt: f64) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRAJECTORY_COLUMNS)?;
    for (i, s) in states.iter().enumerate() {
        let q = quat_to_wxyz(&s.pose.orientation);
        let p = s.pose.position;
        let row = [
            t0 + i as f64 * dt,
            p.x,
            p.y,
            p.z,
            q[0],
            q[1],
            q[2],
            q[3],
            s.lin_vel.x,
            s.lin_vel.y,
            s.lin_vel.z,
            s.ang_vel.x,
            s.ang_vel.y,
            s.ang_vel.z,
        ];
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    finish(w)
}

/// Inverse of [`write_trajectory_csv`]; returns times and states.
pub fn read_trajectory_csv(text: &str) -> Result<(Vec<f64>, Vec<BodyState>)> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers()?.clone();
    if header.iter().ne(TRAJECTORY_COLUMNS.iter().copied()) {
        return Err(Error::Parse(format!(
            "trajectory header must be `{}`",
            TRAJECTORY_COLUMNS.join(",")
        )));
    }
    let (mut ts, mut states) = (Vec::new(), Vec::new());
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let v = parse_row(&rec, line + 2)?;
        let orientation = quat_from_wxyz([v[4], v[5], v[6], v[7]])?;
        ts.push(v[0]);
        states.push(BodyState {
            pose: Pose::new(Vec3::new(v[1], v[2], v[3]), orientation),
            lin_vel: Vec3::new(v[8], v[9], v[10]),
            ang_vel: Vec3::new(v[11], v[12], v[13]),
        });
    }
    Ok((ts, states))
}

fn parse_row(rec: &csv::StringRecord, line: usize) -> Result<Vec<f64>> {
    rec.iter()
        .enumerate()
        .map(|(c, s)| {
            let v: f64 = s
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("line {line}, column {}: `{s}` is not a number", c + 1)))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Validation(format!("line {line}, column {}: non-finite value", c + 1)))
            }
        })
        .collect()
}

/// Joint positions, velocities and commanded torques sampled at a fixed rate.
#[derive(Debug, Clone, PartialEq)]
pub struct TorqueLog {
    pub q: Vec<Vec<f64>>,
    pub qd: Vec<Vec<f64>>,
    pub tau_cmd: Vec<Vec<f64>>,
}

impl TorqueLog {
    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn dof(&self) -> usize {
        self.q.first().map_or(0, Vec::len)
    }
}

/// Parse a log with columns `q_0..q_{n-1}`, `qd_0..`, `tau_0..` in any order. A `t` column
/// is allowed and ignored; the sample rate is declared separately.
pub fn read_torque_log_csv(text: &str) -> Result<TorqueLog> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers()?.clone();
    let mut slots: [Vec<Option<usize>>; 3] = Default::default();
    for (c, name) in header.iter().enumerate() {
        let name = name.trim();
        if name == "t" {
            continue;
        }
        let (kind, idx) = name
            .split_once('_')
            .ok_or_else(|| Error::Parse(format!("unexpected torque log column `{name}`")))?;
        let k = match kind {
            "q" => 0,
            "qd" => 1,
            "tau" => 2,
            _ => return Err(Error::Parse(format!("unexpected torque log column `{name}`"))),
        };
        let j: usize = idx
            .parse()
            .map_err(|_| Error::Parse(format!("bad joint index in column `{name}`")))?;
        if j > 4096 {
            return Err(Error::Parse(format!("joint index {j} in column `{name}` is too large")));
        }
        let s = &mut slots[k];
        if s.len() <= j {
            s.resize(j + 1, None);
        }
        if s[j].replace(c).is_some() {
            return Err(Error::Parse(format!("duplicate column `{name}`")));
        }
    }
    let n = slots[0].len();
    if n == 0 {
        return Err(Error::Parse("torque log has no q_ columns".into()));
    }
    for (k, prefix) in ["q", "qd", "tau"].iter().enumerate() {
        if slots[k].len() != n || slots[k].iter().any(Option::is_none) {
            return Err(Error::Parse(format!("torque log needs columns {prefix}_0..{prefix}_{}", n - 1)));
        }
    }
    let cols: Vec<Vec<usize>> = slots.iter().map(|s| s.iter().map(|c| c.expect("checked")).collect()).collect();
    let mut log = TorqueLog {
        q: Vec::new(),
        qd: Vec::new(),
        tau_cmd: Vec::new(),
    };
    for (line, rec) in r.records().enumerate() {
        let v = parse_row(&rec?, line + 2)?;
        let pick = |k: usize| cols[k].iter().map(|&c| v[c]).collect::<Vec<_>>();
        log.q.push(pick(0));
        log.qd.push(pick(1));
        log.tau_cmd.push(pick(2));
    }
    Ok(log)
}

pub fn write_torque_log_csv(log: &TorqueLog, rate_hz: f64) -> Result<String> {
    let n = log.dof();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string()];
    for p in ["q", "qd", "tau"] {
        header.extend((0..n).map(|j| format!("{p}_{j}")));
    }
    w.write_record(&header)?;
    for i in 0..log.len() {
        let mut row = vec![(i as f64 / rate_hz).to_string()];
        for v in [&log.q[i], &log.qd[i], &log.tau_cmd[i]] {
            row.extend(v.iter().map(f64::to_string));
        }
        w.write_record(&row)?;
    }
    finish(w)
}

/// External torque at every sample, using central differences of the logged velocities
/// (one-sided at the ends) for the acceleration.
pub fn estimate_external_torque_log(
    chain: &KinematicChain,
    friction: &FrictionModel,
    log: &TorqueLog,
    rate_hz: f64,
) -> Result<Vec<Vec<f64>>> {
    chain.validate()?;
    friction.validate(chain.dof())?;
    if !(rate_hz > 0.0 && rate_hz.is_finite()) {
        return Err(Error::validation("sample rate must be positive"));
    }
    if log.len() < 2 {
        return Err(Error::validation("torque log needs at least 2 samples"));
    }
    if log.dof() != chain.dof() {
        return Err(Error::Dimension {
            context: "torque log joints",
            expected: chain.dof(),
            actual: log.dof(),
        });
    }
    let dt = 1.0 / rate_hz;
    let n = log.len();
    (0..n)
        .map(|i| {
            let window = if i == 0 {
                &log.qd[0..2]
            } else if i == n - 1 {
                &log.qd[n - 2..n]
            } else {
                &log.qd[i - 1..=i + 1]
            };
            let qdd = estimate_accel(window, dt, None)?;
            estimate_external_torque(chain, &log.q[i], &log.qd[i], &qdd, &log.tau_cmd[i], friction)
        })
        .collect()
}

pub fn write_external_torque_csv(tau_ext: &[Vec<f64>], rate_hz: f64) -> Result<String> {
    let n = tau_ext.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string()];
    header.extend((0..n).map(|j| format!("tau_ext_{j}")));
    w.write_record(&header)?;
    for (i, row) in tau_ext.iter().enumerate() {
        let mut rec = vec![(i as f64 / rate_hz).to_string()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    finish(w)
}
