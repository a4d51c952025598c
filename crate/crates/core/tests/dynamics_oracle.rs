//! Rigid-chain dynamics and force estimation against a closed-form two-link model.

mod common;

use hoisynth::dynamics::{
    estimate_external_torque, forward_dynamics, inverse_dynamics, mass_matrix, ChainState, FrictionModel,
    KinematicChain, Link,
};
use hoisynth::io::{estimate_external_torque_log, read_torque_log_csv, write_torque_log_csv, TorqueLog};
use proptest::prelude::*;

#[test]
fn mass_matrix_and_bias_match_closed_form() {
    let arm = common::arm();
    let chain = arm.chain();
    for k in 0..50 {
        let x = k as f64 * 0.37;
        let q = [x.sin() * 2.0, (1.3 * x).cos() * 2.5];
        let qd = [(0.7 * x).cos() * 3.0, (2.1 * x).sin() * 4.0];
        let m = mass_matrix(&chain, &q).unwrap();
        let mc = arm.mass(&q);
        for i in 0..2 {
            for j in 0..2 {
                assert!((m[(i, j)] - mc[i][j]).abs() < 1e-12);
            }
        }
        let b = inverse_dynamics(&chain, &q, &qd, &[0.0, 0.0]).unwrap();
        let bc = arm.bias(&q, &qd);
        for i in 0..2 {
            assert!((b[i] - bc[i]).abs() < 1e-10, "{b:?} vs {bc:?}");
        }
    }
}

#[test]
fn estimator_recovers_tip_force_torque_with_exact_acceleration() {
    let arm = common::arm();
    let chain = arm.chain();
    let none = FrictionModel::none(2);
    let log = common::two_link_log(&arm, [0.0, -5.0], 100.0, 2.0);
    let est: Vec<Vec<f64>> = log
        .iter()
        .map(|s| estimate_external_torque(&chain, &s.q, &s.qd, &s.qdd, &s.tau_cmd, &none).unwrap())
        .collect();
    let truth: Vec<[f64; 2]> = log.iter().map(|s| s.tau_ext).collect();
    assert!(common::relative_rms(&est, &truth) < 1e-9);
}

#[test]
fn estimator_from_logged_csv_within_ten_percent() {
    let arm = common::arm();
    let chain = arm.chain();
    let samples = common::two_link_log(&arm, [3.0, -4.0], 100.0, 5.0);
    let log = TorqueLog {
        q: samples.iter().map(|s| s.q.to_vec()).collect(),
        qd: samples.iter().map(|s| s.qd.to_vec()).collect(),
        tau_cmd: samples.iter().map(|s| s.tau_cmd.to_vec()).collect(),
    };
    let text = write_torque_log_csv(&log, 100.0).unwrap();
    let parsed = read_torque_log_csv(&text).unwrap();
    let est = estimate_external_torque_log(&chain, &FrictionModel::none(2), &parsed, 100.0).unwrap();
    let truth: Vec<[f64; 2]> = samples.iter().map(|s| s.tau_ext).collect();
    let err = common::relative_rms(&est, &truth);
    assert!(err < 0.10, "relative RMS {err}");
}

fn chain_of(links: &[(f64, f64)]) -> KinematicChain {
    KinematicChain::new(
        links
            .iter()
            .map(|&(m, l)| Link {
                mass: m,
                com_offset: 0.5 * l,
                inertia_about_com: m * l * l / 12.0,
                length: l,
            })
            .collect(),
        9.81,
    )
    .unwrap()
}

fn jacobian_t_f(chain: &KinematicChain, q: &[f64], f: [f64; 2]) -> Vec<f64> {
    let h = 1e-6;
    (0..q.len())
        .map(|j| {
            let mut qp = q.to_vec();
            let mut qm = q.to_vec();
            qp[j] += h;
            qm[j] -= h;
            let (a, b) = (chain.tip_position(&qp), chain.tip_position(&qm));
            ((a[0] - b[0]) * f[0] + (a[1] - b[1]) * f[1]) / (2.0 * h)
        })
        .collect()
}

fn chain_case() -> impl Strategy<Value = (Vec<(f64, f64)>, Vec<f64>, Vec<f64>, Vec<f64>, [f64; 2])> {
    (2usize..=4).prop_flat_map(|n| {
        (
            prop::collection::vec((0.5..3.0f64, 0.2..0.8f64), n),
            prop::collection::vec(-3.0..3.0f64, n),
            prop::collection::vec(-2.0..2.0f64, n),
            prop::collection::vec(-5.0..5.0f64, n),
            (-10.0..10.0f64, -10.0..10.0f64).prop_map(|(a, b)| [a, b]),
        )
    })
}

proptest! {
    #[test]
    fn estimator_inverts_forward_dynamics((links, q, qd, tau, f) in chain_case()) {
        let chain = chain_of(&links);
        let friction = FrictionModel {
            viscous: vec![0.1; links.len()],
            coulomb: vec![0.05; links.len()],
        };
        let ext = jacobian_t_f(&chain, &q, f);
        let state = ChainState { q: q.clone(), qd: qd.clone() };
        let qdd = forward_dynamics(&chain, &state, &tau, &ext, &friction).unwrap();
        let est = estimate_external_torque(&chain, &q, &qd, &qdd, &tau, &friction).unwrap();
        for (a, b) in est.iter().zip(&ext) {
            prop_assert!((a - b).abs() < 1e-7 * (1.0 + b.abs()), "{est:?} vs {ext:?}");
        }
    }

    #[test]
    fn inverse_dynamics_is_affine_in_acceleration((links, q, qd, a, _f) in chain_case(), s in -3.0..3.0f64) {
        let chain = chain_of(&links);
        let zero = vec![0.0; q.len()];
        let base = inverse_dynamics(&chain, &q, &qd, &zero).unwrap();
        let full = inverse_dynamics(&chain, &q, &qd, &a).unwrap();
        let scaled_a: Vec<f64> = a.iter().map(|x| x * s).collect();
        let scaled = inverse_dynamics(&chain, &q, &qd, &scaled_a).unwrap();
        let m = mass_matrix(&chain, &q).unwrap();
        for i in 0..q.len() {
            let ma: f64 = (0..q.len()).map(|j| m[(i, j)] * a[j]).sum();
            prop_assert!((full[i] - base[i] - ma).abs() < 1e-9 * (1.0 + ma.abs()));
            prop_assert!((scaled[i] - base[i] - s * (full[i] - base[i])).abs() < 1e-9 * (1.0 + full[i].abs()));
        }
    }

    #[test]
    fn mass_matrix_is_symmetric_positive_definite((links, q, _qd, _a, _f) in chain_case()) {
        let m = mass_matrix(&chain_of(&links), &q).unwrap();
        prop_assert!((&m - m.transpose()).abs().max() < 1e-12);
        prop_assert!(m.cholesky().is_some());
    }
}
