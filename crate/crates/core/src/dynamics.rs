//! Fixed-base planar revolute chains: recursive Newton-Euler inverse dynamics, mass matrix,
//! a forward-dynamics test harness and the proprioceptive external-torque estimator.
//!
//! Joint `i` sits at the distal end of link `i - 1` (joint 0 at the base). Angles are relative
//! to the previous link, with q = 0 pointing along +x; gravity acts along -y.
//!
//! Equation of motion, with the contact term on the same side as the inertial terms:
//!
//! ```text
//! tau_cmd = M(q) qdd + C(q, qd) qd + G(q) + tau_f(qd) + tau_ext
//! ```
//!
//! so `tau_ext = J^T F` where F is the force the chain exerts on its surroundings.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Link {
    pub mass: f64,
    /// Distance from the proximal joint to the centre of mass, along the link.
    pub com_offset: f64,
    pub inertia_about_com: f64,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KinematicChain {
    pub links: Vec<Link>,
    #[serde(default = "default_gravity")]
    pub gravity: f64,
}

fn default_gravity() -> f64 {
    9.81
}

impl KinematicChain {
    pub fn new(links: Vec<Link>, gravity: f64) -> Result<Self> {
        let c = KinematicChain { links, gravity };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.links.is_empty() {
            return Err(Error::validation("chain has no links"));
        }
        for (i, l) in self.links.iter().enumerate() {
            let ok = l.mass > 0.0
                && l.length > 0.0
                && l.inertia_about_com >= 0.0
                && l.com_offset.is_finite()
                && l.mass.is_finite()
                && l.length.is_finite()
                && l.inertia_about_com.is_finite();
            if !ok {
                return Err(Error::validation(format!(
                    "link {i}: mass and length must be positive, inertia non-negative"
                )));
            }
        }
        if !self.gravity.is_finite() {
            return Err(Error::validation("gravity must be finite"));
        }
        Ok(())
    }

    pub fn dof(&self) -> usize {
        self.links.len()
    }

    fn check(&self, context: &'static str, v: &[f64]) -> Result<()> {
        if v.len() != self.dof() {
            return Err(Error::Dimension {
                context,
                expected: self.dof(),
                actual: v.len(),
            });
        }
        Ok(())
    }

    /// World position of the distal end of the last link.
    pub fn tip_position(&self, q: &[f64]) -> [f64; 2] {
        let mut theta = 0.0;
        let mut p = [0.0, 0.0];
        for (l, qi) in self.links.iter().zip(q) {
            theta += qi;
            p[0] += l.length * theta.cos();
            p[1] += l.length * theta.sin();
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrictionModel {
    pub viscous: Vec<f64>,
    pub coulomb: Vec<f64>,
}

impl FrictionModel {
    pub fn none(dof: usize) -> Self {
        FrictionModel {
            viscous: vec![0.0; dof],
            coulomb: vec![0.0; dof],
        }
    }

    pub fn validate(&self, dof: usize) -> Result<()> {
        for (name, v) in [("viscous", &self.viscous), ("coulomb", &self.coulomb)] {
            if !v.is_empty() && v.len() != dof {
                return Err(Error::Dimension {
                    context: if name == "viscous" { "viscous friction" } else { "coulomb friction" },
                    expected: dof,
                    actual: v.len(),
                });
            }
            if v.iter().any(|x| !(*x >= 0.0)) {
                return Err(Error::validation(format!("{name} friction must be non-negative")));
            }
        }
        Ok(())
    }

    /// Friction torque opposing motion; empty coefficient lists mean zero.
    pub fn torque(&self, qd: &[f64]) -> Vec<f64> {
        qd.iter()
            .enumerate()
            .map(|(i, &v)| {
                let visc = self.viscous.get(i).copied().unwrap_or(0.0);
                let coul = self.coulomb.get(i).copied().unwrap_or(0.0);
                let sign = if v > 0.0 {
                    1.0
                } else if v < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                visc * v + coul * sign
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    pub q: Vec<f64>,
    pub qd: Vec<f64>,
}

#[inline]
fn cross2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Joint torques realizing `qdd` at (`q`, `qd`) with no contact force and no friction.
pub fn inverse_dynamics(chain: &KinematicChain, q: &[f64], qd: &[f64], qdd: &[f64]) -> Result<Vec<f64>> {
    chain.check("q", q)?;
    chain.check("qd", qd)?;
    chain.check("qdd", qdd)?;
    let n = chain.dof();

    // Forward pass. Gravity enters as an upward base acceleration.
    let mut theta = 0.0;
    let mut omega = 0.0;
    let mut alpha = 0.0;
    let mut a_joint = [0.0, chain.gravity];
    let mut dirs = Vec::with_capacity(n);
    let mut com_acc = Vec::with_capacity(n);
    let mut ang_acc = Vec::with_capacity(n);
    for (i, link) in chain.links.iter().enumerate() {
        theta += q[i];
        omega += qd[i];
        alpha += qdd[i];
        let e = [theta.cos(), theta.sin()];
        let nrm = [-e[1], e[0]];
        let acc_at = |r: f64| {
            [
                a_joint[0] + alpha * r * nrm[0] - omega * omega * r * e[0],
                a_joint[1] + alpha * r * nrm[1] - omega * omega * r * e[1],
            ]
        };
        com_acc.push(acc_at(link.com_offset));
        a_joint = acc_at(link.length);
        dirs.push(e);
        ang_acc.push(alpha);
    }

    // Backward pass: force and moment transmitted through each joint.
    let mut tau = vec![0.0; n];
    let mut f_child = [0.0, 0.0];
    let mut m_child = 0.0;
    for i in (0..n).rev() {
        let link = &chain.links[i];
        let e = dirs[i];
        let f_in = [com_acc[i][0] * link.mass, com_acc[i][1] * link.mass];
        let f = [f_in[0] + f_child[0], f_in[1] + f_child[1]];
        let r_com = [e[0] * link.com_offset, e[1] * link.com_offset];
        let r_end = [e[0] * link.length, e[1] * link.length];
        let m = link.inertia_about_com * ang_acc[i] + cross2(r_com, f_in) + cross2(r_end, f_child) + m_child;
        tau[i] = m;
        f_child = f;
        m_child = m;
    }
    Ok(tau)
}

/// Joint-space mass matrix by the unit-acceleration method.
pub fn mass_matrix(chain: &KinematicChain, q: &[f64]) -> Result<DMatrix<f64>> {
    let n = chain.dof();
    let zero = vec![0.0; n];
    let bias = inverse_dynamics(chain, q, &zero, &zero)?;
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = zero.clone();
        e[j] = 1.0;
        let col = inverse_dynamics(chain, q, &zero, &e)?;
        for i in 0..n {
            m[(i, j)] = col[i] - bias[i];
        }
    }
    Ok(m)
}

/// Gravity torques G(q).
pub fn gravity_torque(chain: &KinematicChain, q: &[f64]) -> Result<Vec<f64>> {
    let zero = vec![0.0; chain.dof()];
    inverse_dynamics(chain, q, &zero, &zero)
}

/// Coriolis and centrifugal torques C(q, qd) qd.
pub fn coriolis_torque(chain: &KinematicChain, q: &[f64], qd: &[f64]) -> Result<Vec<f64>> {
    let zero = vec![0.0; chain.dof()];
    let with_v = inverse_dynamics(chain, q, qd, &zero)?;
    let g = gravity_torque(chain, q)?;
    Ok(with_v.iter().zip(&g).map(|(a, b)| a - b).collect())
}

/// Joint accelerations produced by the given torques.
pub fn forward_dynamics(
    chain: &KinematicChain,
    state: &ChainState,
    tau_cmd: &[f64],
    tau_ext: &[f64],
    friction: &FrictionModel,
) -> Result<Vec<f64>> {
    chain.check("tau_cmd", tau_cmd)?;
    chain.check("tau_ext", tau_ext)?;
    let n = chain.dof();
    let zero = vec![0.0; n];
    let bias = inverse_dynamics(chain, &state.q, &state.qd, &zero)?;
    let tf = friction.torque(&state.qd);
    let rhs = DVector::from_iterator(n, (0..n).map(|i| tau_cmd[i] - tau_ext[i] - bias[i] - tf[i]));
    let m = mass_matrix(chain, &state.q)?;
    let chol = m
        .cholesky()
        .ok_or_else(|| Error::Numerical("mass matrix is not positive definite".into()))?;
    Ok(chol.solve(&rhs).iter().copied().collect())
}

/// One semi-implicit Euler step: velocity first, then position with the new velocity.
pub fn forward_dynamics_step(
    chain: &KinematicChain,
    state: &ChainState,
    tau_cmd: &[f64],
    tau_ext: &[f64],
    friction: &FrictionModel,
    dt: f64,
) -> Result<ChainState> {
    let qdd = forward_dynamics(chain, state, tau_cmd, tau_ext, friction)?;
    let qd: Vec<f64> = state.qd.iter().zip(&qdd).map(|(v, a)| v + a * dt).collect();
    let q = state.q.iter().zip(&qd).map(|(p, v)| p + v * dt).collect();
    Ok(ChainState { q, qd })
}

/// Kinetic plus potential energy of the chain.
pub fn mechanical_energy(chain: &KinematicChain, state: &ChainState) -> Result<f64> {
    let m = mass_matrix(chain, &state.q)?;
    let v = DVector::from_column_slice(&state.qd);
    let kinetic = 0.5 * (v.transpose() * &m * &v)[(0, 0)];
    let mut theta = 0.0;
    let mut base_y = 0.0;
    let mut potential = 0.0;
    for (l, qi) in chain.links.iter().zip(&state.q) {
        theta += qi;
        potential += l.mass * chain.gravity * (base_y + l.com_offset * theta.sin());
        base_y += l.length * theta.sin();
    }
    Ok(kinetic + potential)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdGains {
    pub kp: Vec<f64>,
    pub kd: Vec<f64>,
    #[serde(default)]
    pub torque_limit: Option<Vec<f64>>,
}

/// PD torque command, saturated per joint when limits are given.
pub fn pd_torque(gains: &PdGains, q_target: &[f64], q: &[f64], qd: &[f64]) -> Result<Vec<f64>> {
    let n = q.len();
    for (context, len) in [
        ("kp", gains.kp.len()),
        ("kd", gains.kd.len()),
        ("q_target", q_target.len()),
        ("qd", qd.len()),
    ] {
        if len != n {
            return Err(Error::Dimension {
                context,
                expected: n,
                actual: len,
            });
        }
    }
    if let Some(lim) = &gains.torque_limit {
        if lim.len() != n {
            return Err(Error::Dimension {
                context: "torque_limit",
                expected: n,
                actual: lim.len(),
            });
        }
    }
    Ok((0..n)
        .map(|i| {
            let t = gains.kp[i] * (q_target[i] - q[i]) - gains.kd[i] * qd[i];
            match &gains.torque_limit {
                Some(lim) => t.clamp(-lim[i].abs(), lim[i].abs()),
                None => t,
            }
        })
        .collect())
}

/// Joint-acceleration estimate from a short history of velocity frames (oldest first).
///
/// With two frames this is the backward difference at the newest frame. With three or more
/// it is the central difference at the second-newest frame (one frame of lag). Passing
/// `smoothing = Some(a)` instead returns an exponential moving average, with weight `a` on
/// the newest term, of all central differences in the window.
pub fn estimate_accel(history: &[Vec<f64>], dt: f64, smoothing: Option<f64>) -> Result<Vec<f64>> {
    if history.len() < 2 {
        return Err(Error::validation(format!(
            "acceleration estimate needs at least 2 velocity frames, got {}",
            history.len()
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::validation("dt must be positive"));
    }
    let n = history[0].len();
    if let Some(bad) = history.iter().find(|h| h.len() != n) {
        return Err(Error::Dimension {
            context: "velocity history",
            expected: n,
            actual: bad.len(),
        });
    }
    let k = history.len();
    if k == 2 {
        return Ok((0..n).map(|j| (history[1][j] - history[0][j]) / dt).collect());
    }
    let central = |i: usize| -> Vec<f64> {
        (0..n)
            .map(|j| (history[i + 1][j] - history[i - 1][j]) / (2.0 * dt))
            .collect()
    };
    match smoothing {
        None => Ok(central(k - 2)),
        Some(a) => {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::validation(format!("smoothing factor must lie in (0, 1], got {a}")));
            }
            let mut acc = central(1);
            for i in 2..k - 1 {
                let c = central(i);
                for j in 0..n {
                    acc[j] = a * c[j] + (1.0 - a) * acc[j];
                }
            }
            Ok(acc)
        }
    }
}

/// Joint-space contact torque `J^T F` implied by commanded torque and measured motion.
pub fn estimate_external_torque(
    chain: &KinematicChain,
    q: &[f64],
    qd: &[f64],
    qdd_est: &[f64],
    tau_cmd: &[f64],
    friction: &FrictionModel,
) -> Result<Vec<f64>> {
    chain.check("tau_cmd", tau_cmd)?;
    let id = inverse_dynamics(chain, q, qd, qdd_est)?;
    let tf = friction.torque(qd);
    Ok((0..chain.dof()).map(|i| tau_cmd[i] - id[i] - tf[i]).collect())
}
