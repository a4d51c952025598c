//! Free-flight rigid-object dynamics with linear drag and a flat restitutive ground.
//!
//! The integrator is velocity Verlet with the drag term treated trapezoidally, which makes a
//! step exactly invertible by re-integrating with negated velocities and negated damping.
//! That property is what lets a pre-contact flight be produced by integrating backward from
//! the catch state.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{quat_exp, Pose, Vec3};

/// Largest integrator step accepted.
pub const MAX_DT: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimParams {
    pub gravity: Vec3,
    /// Linear drag rate constant c in a = g - c v (1/s).
    pub linear_damping: f64,
    pub angular_damping: f64,
    pub restitution: f64,
    /// Height of the object's origin when resting on the ground.
    pub ground_height: f64,
    pub dt: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            gravity: Vec3::new(0.0, 0.0, -9.81),
            linear_damping: 0.0,
            angular_damping: 0.0,
            restitution: 0.5,
            ground_height: 0.0,
            dt: 1e-3,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        if self.gravity.iter().any(|g| !g.is_finite()) {
            return Err(Error::validation("gravity must be finite"));
        }
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return Err(Error::validation(format!(
                "dt must lie in (0, {MAX_DT}], got {}",
                self.dt
            )));
        }
        if !(self.linear_damping >= 0.0 && self.angular_damping >= 0.0) {
            return Err(Error::validation("damping coefficients must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.restitution) {
            return Err(Error::validation(format!(
                "restitution must lie in [0, 1], got {}",
                self.restitution
            )));
        }
        if !self.ground_height.is_finite() {
            return Err(Error::validation("ground_height must be finite"));
        }
        Ok(())
    }

    /// Copy with the step replaced by `dt`, used when fitting whole steps into a frame.
    pub fn with_dt(&self, dt: f64) -> Self {
        SimParams { dt, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyState {
    pub pose: Pose,
    pub lin_vel: Vec3,
    pub ang_vel: Vec3,
}

impl BodyState {
    pub fn at_rest(pose: Pose) -> Self {
        BodyState {
            pose,
            lin_vel: Vec3::zeros(),
            ang_vel: Vec3::zeros(),
        }
    }

    fn reversed(&self) -> Self {
        BodyState {
            pose: self.pose,
            lin_vel: -self.lin_vel,
            ang_vel: -self.ang_vel,
        }
    }
}

/// One integrator step with signed damping (negative damping is used for reverse time).
fn step_signed(s: &BodyState, gravity: &Vec3, c: f64, ca: f64, dt: f64) -> BodyState {
    let a0 = gravity - s.lin_vel * c;
    let position = s.pose.position + s.lin_vel * dt + a0 * (0.5 * dt * dt);
    // v1 = v0 + dt/2 (a(v0) + a(v1)) solved for v1.
    let lin_vel = (s.lin_vel * (1.0 - 0.5 * c * dt) + gravity * dt) / (1.0 + 0.5 * c * dt);
    let ang_vel = s.ang_vel * ((1.0 - 0.5 * ca * dt) / (1.0 + 0.5 * ca * dt));
    let orientation = quat_exp(&((s.ang_vel + ang_vel) * (0.5 * dt))) * s.pose.orientation;
    BodyState {
        pose: Pose::new(position, orientation),
        lin_vel,
        ang_vel,
    }
}

/// Advance one step; bounces off the ground plane when the step ends below it.
pub fn step(state: &BodyState, params: &SimParams) -> BodyState {
    let mut next = step_signed(
        state,
        &params.gravity,
        params.linear_damping,
        params.angular_damping,
        params.dt,
    );
    if next.pose.position.z < params.ground_height {
        next.pose.position.z = 2.0 * params.ground_height - next.pose.position.z;
        if next.lin_vel.z < 0.0 {
            next.lin_vel.z *= -params.restitution;
        }
    }
    next
}

/// `n_steps + 1` states starting with `state0`.
pub fn simulate_forward(state0: &BodyState, params: &SimParams, n_steps: usize) -> Vec<BodyState> {
    let mut out = Vec::with_capacity(n_steps + 1);
    out.push(*state0);
    for i in 0..n_steps {
        let next = step(&out[i], params);
        out.push(next);
    }
    out
}

/// Trajectory of `n_steps + 1` states in forward time order that ends exactly at `state_end`.
///
/// Integrates backward with velocities and damping negated, then reverses the record.
/// Fails if the backward pass dips below the ground, since bounces are not invertible.
pub fn simulate_reverse(state_end: &BodyState, params: &SimParams, n_steps: usize) -> Result<Vec<BodyState>> {
    let mut back = Vec::with_capacity(n_steps + 1);
    back.push(state_end.reversed());
    for i in 0..n_steps {
        let next = step_signed(
            &back[i],
            &params.gravity,
            -params.linear_damping,
            -params.angular_damping,
            params.dt,
        );
        if next.pose.position.z < params.ground_height {
            return Err(Error::GroundContact {
                context: "reverse simulation",
                step: i + 1,
                z: next.pose.position.z,
            });
        }
        back.push(next);
    }
    back.reverse();
    let mut out: Vec<BodyState> = back.iter().map(BodyState::reversed).collect();
    *out.last_mut().expect("non-empty") = *state_end;
    Ok(out)
}

/// Number of integrator substeps per frame and the matching step length.
pub fn substeps_for(frame_dt: f64, params: &SimParams) -> (usize, f64) {
    let n = (frame_dt / params.dt - 1e-9).ceil().max(1.0) as usize;
    (n, frame_dt / n as f64)
}

/// Simulate `n_frames` frames forward, sampled every `frame_dt`.
pub fn simulate_frames_forward(
    state0: &BodyState,
    params: &SimParams,
    frame_dt: f64,
    n_frames: usize,
) -> Vec<BodyState> {
    let (sub, h) = substeps_for(frame_dt, params);
    let p = params.with_dt(h);
    let mut out = Vec::with_capacity(n_frames + 1);
    out.push(*state0);
    let mut s = *state0;
    for _ in 0..n_frames {
        for _ in 0..sub {
            s = step(&s, &p);
        }
        out.push(s);
    }
    out
}

/// Reverse-time counterpart of [`simulate_frames_forward`], ending at `state_end`.
pub fn simulate_frames_reverse(
    state_end: &BodyState,
    params: &SimParams,
    frame_dt: f64,
    n_frames: usize,
) -> Result<Vec<BodyState>> {
    let (sub, h) = substeps_for(frame_dt, params);
    let full = simulate_reverse(state_end, &params.with_dt(h), n_frames * sub)?;
    Ok(full.into_iter().step_by(sub).collect())
}

/// Position after `flight_time` with no ground interaction, plus the lowest height reached.
fn fly(p0: &Vec3, v0: &Vec3, flight_time: f64, params: &SimParams) -> (Vec3, f64) {
    let n = (flight_time / params.dt - 1e-9).ceil().max(1.0) as usize;
    let h = flight_time / n as f64;
    let mut s = BodyState::at_rest(Pose::from_position(*p0));
    s.lin_vel = *v0;
    let mut min_z = p0.z;
    for _ in 0..n {
        s = step_signed(&s, &params.gravity, params.linear_damping, 0.0, h);
        min_z = min_z.min(s.pose.position.z);
    }
    (s.pose.position, min_z)
}

/// Result of the shooting solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootingSolution {
    pub v0: Vec3,
    pub residual: f64,
    pub iterations: usize,
}

const SHOOT_TOL: f64 = 1e-10;
const SHOOT_MAX_ITER: usize = 30;

/// Launch velocity that carries a point from `p0` to `target` in `flight_time`.
///
/// Damped Newton on the 3-vector landing residual, started from the drag-free closed form.
pub fn solve_initial_velocity(
    p0: &Vec3,
    target: &Vec3,
    flight_time: f64,
    params: &SimParams,
) -> Result<ShootingSolution> {
    params.validate()?;
    if !(flight_time > 0.0 && flight_time.is_finite()) {
        return Err(Error::validation(format!("flight_time must be positive, got {flight_time}")));
    }
    let g = params.gravity;
    let mut v = (target - p0 - g * (0.5 * flight_time * flight_time)) / flight_time;
    let residual = |v: &Vec3| fly(p0, v, flight_time, params).0 - target;
    let mut r = residual(&v);
    let mut iterations = 0;
    while r.norm() > SHOOT_TOL {
        if iterations == SHOOT_MAX_ITER {
            return Err(Error::NonConvergence {
                iterations,
                residual: r.norm(),
            });
        }
        iterations += 1;
        let eps = 1e-4 * (1.0 + v.norm());
        let mut jac = Matrix3::zeros();
        for k in 0..3 {
            let mut vp = v;
            let mut vm = v;
            vp[k] += eps;
            vm[k] -= eps;
            jac.set_column(k, &((residual(&vp) - residual(&vm)) / (2.0 * eps)));
        }
        let delta = jac
            .lu()
            .solve(&-r)
            .ok_or_else(|| Error::Numerical("singular shooting Jacobian".into()))?;
        let mut lambda = 1.0;
        loop {
            let cand = v + delta * lambda;
            let rc = residual(&cand);
            if rc.norm() < r.norm() || lambda < 1e-6 {
                v = cand;
                r = rc;
                break;
            }
            lambda *= 0.5;
        }
    }
    let (_, min_z) = fly(p0, &v, flight_time, params);
    if min_z < params.ground_height {
        return Err(Error::GroundContact {
            context: "shooting solve",
            step: 0,
            z: min_z,
        });
    }
    Ok(ShootingSolution {
        v0: v,
        residual: r.norm(),
        iterations,
    })
}

/// Kinetic plus potential energy per unit mass.
pub fn specific_energy(s: &BodyState, params: &SimParams) -> f64 {
    0.5 * s.lin_vel.norm_squared() - params.gravity.dot(&s.pose.position)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::geodesic;
    use approx::assert_relative_eq;

    fn launch(p: [f64; 3], v: [f64; 3]) -> BodyState {
        BodyState {
            pose: Pose::from_position(Vec3::from(p)),
            lin_vel: Vec3::from(v),
            ang_vel: Vec3::zeros(),
        }
    }

    fn no_ground(mut p: SimParams) -> SimParams {
        p.ground_height = -1e9;
        p
    }

    #[test]
    fn step_fixed_point_without_motion() {
        let params = SimParams {
            gravity: Vec3::zeros(),
            linear_damping: 0.7,
            ..Default::default()
        };
        let s = launch([0.0, 1.0, 2.0], [0.0; 3]);
        assert_eq!(step(&s, &params), s);
    }

    #[test]
    fn projectile_matches_closed_form() {
        let params = no_ground(SimParams::default());
        let traj = simulate_forward(&launch([0.0, 0.0, 1.0], [1.0, 0.0, 2.0]), &params, 200);
        let p = traj[200].pose.position;
        // 1 + 2*0.2 - 0.5*9.81*0.04 = 1.2038
        assert_relative_eq!(p, Vec3::new(0.2, 0.0, 1.2038), epsilon = 1e-6);
    }

    #[test]
    fn bounce_scales_normal_speed() {
        let params = SimParams {
            restitution: 0.6,
            ..Default::default()
        };
        let mut s = launch([0.0, 0.0, 1.0], [0.0; 3]);
        loop {
            let next = step(&s, &params);
            if next.lin_vel.z > 0.0 {
                // pre-bounce speed is what the step would have produced without the ground
                let free = step_signed(&s, &params.gravity, 0.0, 0.0, params.dt);
                assert_relative_eq!(next.lin_vel.z, -0.6 * free.lin_vel.z, epsilon = 1e-3);
                assert!(next.pose.position.z >= 0.0);
                break;
            }
            s = next;
        }
    }

    #[test]
    fn bounce_preserves_tangential_velocity() {
        let params = SimParams::default();
        let s = launch([0.0, 0.0, 0.001], [1.5, -0.5, -3.0]);
        let next = step(&s, &params);
        assert!(next.lin_vel.z > 0.0);
        assert_eq!(next.lin_vel.x, 1.5);
        assert_eq!(next.lin_vel.y, -0.5);
    }

    #[test]
    fn reverse_roundtrip_drag_free() {
        let params = no_ground(SimParams::default());
        let fwd = simulate_forward(&launch([0.0, 0.0, 1.0], [2.0, 1.0, 4.0]), &params, 200);
        let rev = simulate_reverse(fwd.last().unwrap(), &params, 200).unwrap();
        for (a, b) in fwd.iter().zip(&rev) {
            assert!((a.pose.position - b.pose.position).norm() < 1e-9);
        }
    }

    #[test]
    fn reverse_roundtrip_with_damping_and_spin() {
        let params = no_ground(SimParams {
            linear_damping: 0.1,
            angular_damping: 0.3,
            ..Default::default()
        });
        let mut s0 = launch([0.0, 0.0, 1.0], [3.0, 0.0, 8.0]);
        s0.ang_vel = Vec3::new(0.0, 4.0, 1.0);
        let fwd = simulate_forward(&s0, &params, 2000);
        let rev = simulate_reverse(fwd.last().unwrap(), &params, 2000).unwrap();
        for (a, b) in fwd.iter().zip(&rev) {
            assert!((a.pose.position - b.pose.position).norm() < 1e-4);
            assert!(geodesic(&a.pose.orientation, &b.pose.orientation) < 1e-6);
        }
        assert_eq!(rev.last().unwrap(), fwd.last().unwrap());
    }

    #[test]
    fn reverse_constant_when_at_rest_without_gravity() {
        let params = SimParams {
            gravity: Vec3::zeros(),
            ..Default::default()
        };
        let end = launch([0.3, 0.2, 0.5], [0.0; 3]);
        let rev = simulate_reverse(&end, &params, 50).unwrap();
        assert!(rev.iter().all(|s| *s == end));
    }

    #[test]
    fn reverse_errors_on_ground() {
        let params = SimParams::default();
        // Falling fast near the ground: backward in time it came from below.
        let end = launch([0.0, 0.0, 0.1], [0.0, 0.0, 5.0]);
        assert!(matches!(
            simulate_reverse(&end, &params, 100),
            Err(Error::GroundContact { .. })
        ));
    }

    #[test]
    fn shooting_drag_free_is_closed_form() {
        let params = SimParams::default();
        let p0 = Vec3::new(0.0, 0.0, 1.0);
        let v_true = Vec3::new(2.0, -1.0, 3.0);
        let t = 0.8;
        let target = p0 + v_true * t + params.gravity * (0.5 * t * t);
        let sol = solve_initial_velocity(&p0, &target, t, &params).unwrap();
        assert_relative_eq!(sol.v0, v_true, epsilon = 1e-6);
        assert!(sol.iterations <= 1);
    }

    #[test]
    fn shooting_with_drag_resimulates() {
        let params = SimParams {
            linear_damping: 0.2,
            ..Default::default()
        };
        let p0 = Vec3::new(0.0, 0.0, 2.0);
        let target = Vec3::new(3.0, 0.0, 3.0);
        let sol = solve_initial_velocity(&p0, &target, 1.0, &params).unwrap();
        let traj = simulate_forward(&launch(p0.into(), sol.v0.into()), &params, 1000);
        assert!((traj[1000].pose.position - target).norm() < 1e-4);
    }

    #[test]
    fn shooting_rejects_ground_intersection() {
        let params = SimParams::default();
        let err = solve_initial_velocity(&Vec3::new(0.0, 0.0, 0.5), &Vec3::new(5.0, 0.0, 0.5), 3.0, &params);
        assert!(err.is_ok(), "arc over the ground is fine: {err:?}");
        let err = solve_initial_velocity(&Vec3::new(0.0, 0.0, 0.5), &Vec3::new(1.0, 0.0, -0.5), 0.2, &params);
        assert!(matches!(err, Err(Error::GroundContact { .. })));
    }

    #[test]
    fn damped_energy_never_increases() {
        let params = no_ground(SimParams {
            linear_damping: 0.3,
            ..Default::default()
        });
        let traj = simulate_forward(&launch([0.0, 0.0, 1.0], [4.0, 1.0, 6.0]), &params, 1500);
        for w in traj.windows(2) {
            let (e0, e1) = (specific_energy(&w[0], &params), specific_energy(&w[1], &params));
            assert!(e1 <= e0 + 1e-9, "{e0} -> {e1}");
        }
    }

    #[test]
    fn params_validation() {
        assert!(SimParams { dt: 0.05, ..Default::default() }.validate().is_err());
        assert!(SimParams { restitution: 1.5, ..Default::default() }.validate().is_err());
        assert!(SimParams { linear_damping: -0.1, ..Default::default() }.validate().is_err());
        assert!(SimParams::default().validate().is_ok());
    }
}
