//! Independent oracles shared by integration and acceptance tests.
#![allow(dead_code)]

use hoisynth::grasp::{Contact, ContactSet, DEFAULT_PATCH_RADIUS};
use hoisynth::rng::stream;
use hoisynth::Vec3;
use rand::Rng;

pub type W6 = [f64; 6];

/// Cone edges built the way the library documents them: half-angle atan(mu), azimuth measured
/// from the projection of the world axis least aligned with the normal.
pub fn cone_edges(n: &Vec3, mu: f64, m: usize) -> Vec<Vec3> {
    if mu == 0.0 {
        return vec![*n; m.max(1)];
    }
    let a = n.abs();
    let axis = if a.x <= a.y && a.x <= a.z {
        Vec3::x()
    } else if a.y <= a.z {
        Vec3::y()
    } else {
        Vec3::z()
    };
    let t1 = (axis - n * n.dot(&axis)).normalize();
    let t2 = n.cross(&t1);
    let half = mu.atan();
    (0..m)
        .map(|k| {
            let az = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
            (n * half.cos() + (t1 * az.cos() + t2 * az.sin()) * half.sin()).normalize()
        })
        .collect()
}

/// Soft-finger wrench generators: cone edges plus the normal force with ± maximal torsion.
pub fn wrenches(set: &ContactSet) -> Vec<W6> {
    let l = set.characteristic_length;
    let tors = set.friction_mu * set.patch_radius;
    let mut out = Vec::new();
    for c in &set.contacts {
        let mut add = |f: Vec3, t: Vec3| out.push([f.x, f.y, f.z, t.x / l, t.y / l, t.z / l]);
        for f in cone_edges(&c.normal, set.friction_mu, set.cone_edges) {
            add(f, c.point.cross(&f));
        }
        if tors > 0.0 {
            let t = c.point.cross(&c.normal);
            add(c.normal, t + c.normal * tors);
            add(c.normal, t - c.normal * tors);
        }
    }
    out
}

fn det(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut d = 1.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&a, &b| m[a][c].abs().partial_cmp(&m[b][c].abs()).unwrap())
            .unwrap();
        if m[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            m.swap(p, c);
            d = -d;
        }
        d *= m[c][c];
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    d
}

/// Vector orthogonal to five 6-vectors (generalized cross product by cofactors).
fn normal_of(rows: &[W6; 5]) -> W6 {
    let mut out = [0.0; 6];
    for (skip, o) in out.iter_mut().enumerate() {
        let minor: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| (0..6).filter(|&j| j != skip).map(|j| r[j]).collect())
            .collect();
        let sign = if skip % 2 == 0 { 1.0 } else { -1.0 };
        *o = sign * det(minor);
    }
    out
}

fn rank(ws: &[W6], tol: f64) -> usize {
    let mut rows: Vec<W6> = ws.to_vec();
    let mut r = 0;
    for c in 0..6 {
        let Some(p) = (r..rows.len()).max_by(|&a, &b| rows[a][c].abs().partial_cmp(&rows[b][c].abs()).unwrap())
        else {
            break;
        };
        if rows[p][c].abs() <= tol {
            continue;
        }
        rows.swap(p, r);
        for i in 0..rows.len() {
            if i != r {
                let f = rows[i][c] / rows[r][c];
                for k in 0..6 {
                    rows[i][k] -= f * rows[r][k];
                }
            }
        }
        r += 1;
    }
    r
}

/// Brute-force test that the origin lies strictly inside the convex hull of `ws`.
///
/// The origin is interior iff the generators span R^6 and no hyperplane through the origin
/// has all of them on one side. Any such hyperplane can be rotated until it touches five
/// linearly independent generators, so enumerating 5-subsets is exhaustive.
pub fn origin_strictly_inside(ws: &[W6], tol: f64) -> bool {
    if ws.len() < 7 || rank(ws, 1e-12) < 6 {
        return false;
    }
    let n = ws.len();
    let mut idx = [0usize, 1, 2, 3, 4];
    loop {
        let rows = [ws[idx[0]], ws[idx[1]], ws[idx[2]], ws[idx[3]], ws[idx[4]]];
        let c = normal_of(&rows);
        let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-10 {
            let (mut pos, mut neg) = (false, false);
            for w in ws {
                let d: f64 = (0..6).map(|k| c[k] * w[k]).sum::<f64>() / norm;
                pos |= d > tol;
                neg |= d < -tol;
                if pos && neg {
                    break;
                }
            }
            if !(pos && neg) {
                return false;
            }
        }
        // Next combination in lexicographic order.
        let mut i = 5;
        loop {
            if i == 0 {
                return true;
            }
            i -= 1;
            if idx[i] != i + n - 5 {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..5 {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Planar two-link arm in closed form (angles relative, gravity along -y).
#[derive(Debug, Clone, Copy)]
pub struct TwoLink {
    pub m: [f64; 2],
    pub l: [f64; 2],
    pub c: [f64; 2],
    pub i: [f64; 2],
    pub g: f64,
}

impl TwoLink {
    pub fn mass(&self, q: &[f64; 2]) -> [[f64; 2]; 2] {
        let [m1, m2] = self.m;
        let [l1, _] = self.l;
        let [c1, c2] = self.c;
        let [i1, i2] = self.i;
        let cq = q[1].cos();
        let m11 = i1 + i2 + m1 * c1 * c1 + m2 * (l1 * l1 + c2 * c2 + 2.0 * l1 * c2 * cq);
        let m12 = i2 + m2 * (c2 * c2 + l1 * c2 * cq);
        let m22 = i2 + m2 * c2 * c2;
        [[m11, m12], [m12, m22]]
    }

    /// Coriolis/centrifugal plus gravity torques.
    pub fn bias(&self, q: &[f64; 2], qd: &[f64; 2]) -> [f64; 2] {
        let [m1, m2] = self.m;
        let [l1, _] = self.l;
        let [c1, c2] = self.c;
        let h = m2 * l1 * c2 * q[1].sin();
        let g1 = (m1 * c1 + m2 * l1) * self.g * q[0].cos() + m2 * c2 * self.g * (q[0] + q[1]).cos();
        let g2 = m2 * c2 * self.g * (q[0] + q[1]).cos();
        [
            -h * (2.0 * qd[0] * qd[1] + qd[1] * qd[1]) + g1,
            h * qd[0] * qd[0] + g2,
        ]
    }

    pub fn gravity(&self, q: &[f64; 2]) -> [f64; 2] {
        self.bias(q, &[0.0, 0.0])
    }

    /// Tip Jacobian of (x, y) with respect to (q1, q2).
    pub fn jacobian(&self, q: &[f64; 2]) -> [[f64; 2]; 2] {
        let [l1, l2] = self.l;
        let (s1, c1) = q[0].sin_cos();
        let (s12, c12) = (q[0] + q[1]).sin_cos();
        [[-l1 * s1 - l2 * s12, -l2 * s12], [l1 * c1 + l2 * c12, l2 * c12]]
    }

    /// J^T F.
    pub fn tip_torque(&self, q: &[f64; 2], f: &[f64; 2]) -> [f64; 2] {
        let j = self.jacobian(q);
        [j[0][0] * f[0] + j[1][0] * f[1], j[0][1] * f[0] + j[1][1] * f[1]]
    }

    /// q̈ from M q̈ + C q̇ + G + τ_ext = τ.
    pub fn accel(&self, q: &[f64; 2], qd: &[f64; 2], tau: &[f64; 2], tau_ext: &[f64; 2]) -> [f64; 2] {
        let m = self.mass(q);
        let b = self.bias(q, qd);
        let r = [tau[0] - tau_ext[0] - b[0], tau[1] - tau_ext[1] - b[1]];
        let d = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        [
            (m[1][1] * r[0] - m[0][1] * r[1]) / d,
            (m[0][0] * r[1] - m[1][0] * r[0]) / d,
        ]
    }

    pub fn chain(&self) -> hoisynth::dynamics::KinematicChain {
        use hoisynth::dynamics::{KinematicChain, Link};
        KinematicChain::new(
            (0..2)
                .map(|k| Link {
                    mass: self.m[k],
                    com_offset: self.c[k],
                    inertia_about_com: self.i[k],
                    length: self.l[k],
                })
                .collect(),
            self.g,
        )
        .unwrap()
    }
}

pub fn arm() -> TwoLink {
    TwoLink {
        m: [2.0, 1.5],
        l: [0.5, 0.4],
        c: [0.25, 0.2],
        i: [2.0 * 0.25 / 12.0, 1.5 * 0.16 / 12.0],
        g: 9.81,
    }
}

/// Two contacts on opposite sides of a unit-scale object.
pub fn antipodal(mu: f64, m: usize, patch_radius: f64) -> ContactSet {
    ContactSet {
        contacts: vec![
            Contact {
                point: Vec3::new(1.0, 0.0, 0.0),
                normal: -Vec3::x(),
            },
            Contact {
                point: Vec3::new(-1.0, 0.0, 0.0),
                normal: Vec3::x(),
            },
        ],
        friction_mu: mu,
        cone_edges: m,
        characteristic_length: 2.0,
        patch_radius,
    }
}

/// Canonical grasps with known answers: (name, set, closure).
pub fn canonical_grasps() -> Vec<(&'static str, ContactSet, bool)> {
    let mut single = antipodal(0.5, 8, DEFAULT_PATCH_RADIUS);
    single.contacts.truncate(1);
    vec![
        ("antipodal pinch, mu 0.5", antipodal(0.5, 8, DEFAULT_PATCH_RADIUS), true),
        ("single contact", single, false),
        ("antipodal pinch, mu 0", antipodal(0.0, 8, DEFAULT_PATCH_RADIUS), false),
    ]
}

/// Random 2 to 4 contact grasp on a sphere or box, with mixed friction and patch settings.
pub fn random_grasp(seed: u64, index: u64) -> ContactSet {
    let mut rng = stream(seed, index);
    let n = rng.random_range(2..=4);
    let sphere = rng.random_bool(0.5);
    let radius = rng.random_range(0.05..0.2);
    let half = [rng.random_range(0.05..0.2), rng.random_range(0.05..0.2), rng.random_range(0.05..0.2)];
    let contacts = (0..n)
        .map(|_| {
            if sphere {
                let d = loop {
                    let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    let l = v.norm();
                    if l > 0.1 && l <= 1.0 {
                        break v / l;
                    }
                };
                Contact {
                    point: d * radius,
                    normal: -d,
                }
            } else {
                let axis = rng.random_range(0..3);
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let mut p = Vec3::from_fn(|k, _| rng.random_range(-0.9..0.9) * half[k]);
                p[axis] = sign * half[axis];
                let mut normal = Vec3::zeros();
                normal[axis] = -sign;
                Contact { point: p, normal }
            }
        })
        .collect();
    let friction_mu = if rng.random_bool(0.2) { 0.0 } else { rng.random_range(0.1..1.0) };
    let patch_radius = if rng.random_bool(0.5) { 0.0 } else { DEFAULT_PATCH_RADIUS };
    let characteristic_length = if sphere { 2.0 * radius } else { 2.0 * half.iter().cloned().fold(0.0, f64::max) };
    ContactSet {
        contacts,
        friction_mu,
        cone_edges: rng.random_range(3..=5),
        characteristic_length,
        patch_radius,
    }
}

/// One logged sample of the two-link arm.
#[derive(Debug, Clone, Copy)]
pub struct ArmSample {
    pub t: f64,
    pub q: [f64; 2],
    pub qd: [f64; 2],
    pub qdd: [f64; 2],
    pub tau_cmd: [f64; 2],
    pub tau_ext: [f64; 2],
}

/// PD tracking of a sinusoidal reference with gravity feed-forward while a constant tip force
/// `force` acts on the environment. Integrated with RK4 at 0.1 ms and sampled at `rate_hz`.
pub fn two_link_log(arm: &TwoLink, force: [f64; 2], rate_hz: f64, seconds: f64) -> Vec<ArmSample> {
    let tau_cmd = |t: f64, q: &[f64; 2], qd: &[f64; 2]| {
        let w = std::f64::consts::TAU;
        let r = [0.3 + 0.4 * (w * 0.5 * t).sin(), 0.5 + 0.5 * (w * 0.7 * t).sin()];
        let g = arm.gravity(q);
        [
            g[0] + 60.0 * (r[0] - q[0]) - 8.0 * qd[0],
            g[1] + 40.0 * (r[1] - q[1]) - 5.0 * qd[1],
        ]
    };
    let deriv = |t: f64, s: [f64; 4]| {
        let (q, qd) = ([s[0], s[1]], [s[2], s[3]]);
        let a = arm.accel(&q, &qd, &tau_cmd(t, &q, &qd), &arm.tip_torque(&q, &force));
        [qd[0], qd[1], a[0], a[1]]
    };
    let h = 1e-4;
    let per_sample = (1.0 / (rate_hz * h)).round() as usize;
    let samples = (seconds * rate_hz).round() as usize;
    let mut s = [0.3, 0.5, 0.0, 0.0];
    let mut t = 0.0;
    let mut out = Vec::with_capacity(samples);
    for k in 0..samples {
        let (q, qd) = ([s[0], s[1]], [s[2], s[3]]);
        let tau = tau_cmd(t, &q, &qd);
        let ext = arm.tip_torque(&q, &force);
        out.push(ArmSample {
            t: k as f64 / rate_hz,
            q,
            qd,
            qdd: arm.accel(&q, &qd, &tau, &ext),
            tau_cmd: tau,
            tau_ext: ext,
        });
        for _ in 0..per_sample {
            let add = |a: [f64; 4], b: [f64; 4], f: f64| [a[0] + f * b[0], a[1] + f * b[1], a[2] + f * b[2], a[3] + f * b[3]];
            let k1 = deriv(t, s);
            let k2 = deriv(t + h / 2.0, add(s, k1, h / 2.0));
            let k3 = deriv(t + h / 2.0, add(s, k2, h / 2.0));
            let k4 = deriv(t + h, add(s, k3, h));
            for i in 0..4 {
                s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            t += h;
        }
    }
    out
}

/// RMS of `est - truth` over RMS of `truth`, across all samples and joints.
pub fn relative_rms(est: &[Vec<f64>], truth: &[[f64; 2]]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (e, t) in est.iter().zip(truth) {
        for j in 0..2 {
            num += (e[j] - t[j]).powi(2);
            den += t[j] * t[j];
        }
    }
    (num / den).sqrt()
}
