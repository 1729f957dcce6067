mod common;

use common::{random_state, system};
use crnbp::dynamics::{body_position, jacobi_constant, lagrange_points, state_jacobian, State6};
use crnbp::propagate::{
    integrate, integrate_with_tangent, propagate_final, read_trajectory_csv, stm_propagate, write_trajectory_csv, Crossing,
    EventSpec, IntegratorSettings,
};
use crnbp::SystemModel;
use nalgebra::Vector6;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tight() -> IntegratorSettings {
    IntegratorSettings::default().with_tolerance(1e-12)
}

/// Planar orbit between Europa and Jupiter that stays bounded for 100 units.
pub fn bounded_europa_orbit() -> (SystemModel, State6) {
    let model = SystemModel::cr3bp(2.528e-5).unwrap();
    (model, State6::new(0.6, 0.0, 0.0, 0.0, 0.72, 0.0))
}

#[test]
fn jacobi_drift_over_one_hundred_units() {
    let (model, s0) = bounded_europa_orbit();
    let tr = integrate(&model, &s0, 0.0, 100.0, &tight(), &[]).unwrap();
    let j0 = jacobi_constant(&model, &s0).unwrap();
    let drift = tr
        .samples
        .iter()
        .map(|(_, s)| (jacobi_constant(&model, s).unwrap() - j0).abs())
        .fold(0.0, f64::max);
    let rmax = tr.samples.iter().map(|(_, s)| s.fixed_rows::<3>(0).norm()).fold(0.0, f64::max);
    assert!(rmax < 2.0);
    assert!(drift < 1e-10, "drift {drift:e}");
}

#[test]
fn backward_then_forward_recovers_the_start() {
    let model = system("jupiter_europa_crnbp");
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..5 {
        let s0 = random_state(&mut rng, &model, 3.0, 1.5, 0.2);
        let Ok(back) = propagate_final(&model, &s0, 3.0, -2.0, &tight()) else {
            continue;
        };
        let fwd = propagate_final(&model, &back, -2.0, 3.0, &tight()).unwrap();
        assert!((fwd - s0).amax() < 1e-8, "{:e}", (fwd - s0).amax());
    }
}

#[test]
fn stm_composes_and_preserves_volume() {
    let model = system("jupiter_ganymede_laplace");
    let s0 = State6::new(0.5, 0.0, 0.02, 0.0, 0.9, 0.0);
    let (s1, p01) = stm_propagate(&model, &s0, 0.0, 1.3, &tight()).unwrap();
    let (_, p12) = stm_propagate(&model, &s1, 1.3, 2.9, &tight()).unwrap();
    let (_, p02) = stm_propagate(&model, &s0, 0.0, 2.9, &tight()).unwrap();
    assert!((p12 * p01 - p02).amax() < 1e-7, "{:e} {:e}", (p12 * p01 - p02).amax(), p02.amax());
    assert!((p02.determinant() - 1.0).abs() < 1e-6);
}

#[test]
fn stm_matches_finite_differences_of_the_flow() {
    let model = system("jupiter_europa_crnbp");
    let s0 = State6::new(0.8, 0.1, 0.02, 0.0, 0.5, 0.01);
    let (_, phi) = stm_propagate(&model, &s0, 0.5, 2.5, &tight()).unwrap();
    for c in 0..6 {
        let h = 1e-6;
        let mut a = s0;
        let mut b = s0;
        a[c] += h;
        b[c] -= h;
        let col = (propagate_final(&model, &a, 0.5, 2.5, &tight()).unwrap()
            - propagate_final(&model, &b, 0.5, 2.5, &tight()).unwrap())
            / (2.0 * h);
        assert!((col - phi.column(c)).amax() < 1e-5 * phi.amax());
    }
}

#[test]
fn tangent_agrees_with_stm() {
    let model = system("jupiter_europa_crnbp");
    let s0 = State6::new(0.9, -0.1, 0.0, 0.1, 0.4, 0.02);
    let v0 = Vector6::new(1.0, -2.0, 0.5, 0.3, 0.0, -1.0).normalize();
    let tr = integrate_with_tangent(&model, &s0, &v0, 0.0, 4.0, &tight()).unwrap();
    let (_, phi) = stm_propagate(&model, &s0, 0.0, 4.0, &tight()).unwrap();
    let (_, _, v) = tr.samples.last().unwrap();
    assert!((phi * v0 - v).amax() < 1e-8 * v.amax().max(1.0));
}

#[test]
fn tangent_growth_at_l1_follows_the_unstable_eigenvalue() {
    let model = SystemModel::cr3bp(0.0121).unwrap();
    let l1 = lagrange_points(&model).unwrap()[0];
    let j = state_jacobian(&model, &l1, 0.0).unwrap();
    let eig = j.clone().complex_eigenvalues();
    let lam = eig.iter().map(|c| c.re).fold(f64::MIN, f64::max);
    // Real eigenvector of the largest real eigenvalue.
    let mut m = j;
    for i in 0..6 {
        m[(i, i)] -= lam;
    }
    let svd = m.svd(false, true);
    let k = (0..6).min_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b])).unwrap();
    let v0: Vector6<f64> = svd.v_t.unwrap().row(k).transpose();
    let span = 1.0;
    let tr = integrate_with_tangent(&model, &l1, &v0, 0.0, span, &tight()).unwrap();
    let grown = tr.samples.last().unwrap().2.norm() / v0.norm();
    let expect = (lam * span).exp();
    assert!((grown / expect - 1.0).abs() < 0.05, "{grown} vs {expect}");
}

#[test]
fn collision_is_located_on_the_surface() {
    let model = system("jupiter_europa_crnbp");
    let radius = 1e-3;
    let p2 = body_position(&model, 1, 0.0);
    // Fall towards Europa from slightly outside.
    let s0 = State6::new(p2[0] - 0.01, 0.0, 0.0, 0.0, 0.0, 0.0);
    let events = [EventSpec::collision(1, radius)];
    let tr = integrate(&model, &s0, 0.0, 5.0, &tight(), &events).unwrap();
    assert_eq!(tr.terminated_by, Some(0));
    let e = &tr.events[0];
    let d = (e.state.fixed_rows::<3>(0) - body_position(&model, 1, e.t)).norm();
    assert!((d - radius).abs() < 1e-9, "{:e}", d - radius);
    assert_eq!(tr.final_time(), e.t);
}

#[test]
fn plane_crossings_are_logged_without_stopping() {
    let (model, s0) = bounded_europa_orbit();
    let events = [EventSpec::plane_crossing(1, 0.0, Crossing::Rising, false)];
    let tr = integrate(&model, &s0, 0.0, 20.0, &tight(), &events).unwrap();
    assert!(tr.terminated_by.is_none());
    assert!(tr.events.len() >= 2);
    for e in &tr.events {
        assert!(e.state[1].abs() < 1e-10);
        assert!(e.state[4] > 0.0);
    }
}

#[test]
fn tighter_tolerance_converges() {
    let model = system("jupiter_ganymede_laplace");
    let s0 = State6::new(0.7, 0.2, 0.0, -0.3, 0.6, 0.0);
    let reference = propagate_final(&model, &s0, 0.0, 10.0, &IntegratorSettings::default().with_tolerance(1e-14)).unwrap();
    let mut prev = f64::INFINITY;
    for tol in [1e-8, 1e-10, 1e-12] {
        let s = propagate_final(&model, &s0, 0.0, 10.0, &IntegratorSettings::default().with_tolerance(tol)).unwrap();
        let err = (s - reference).amax();
        assert!(err < prev);
        prev = err;
    }
    assert!(prev < 1e-9);
}

#[test]
fn trajectory_csv_round_trip() {
    let (model, s0) = bounded_europa_orbit();
    let tr = integrate(&model, &s0, 0.0, 3.0, &tight(), &[]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    write_trajectory_csv(&path, &tr.samples).unwrap();
    assert_eq!(read_trajectory_csv(&path).unwrap(), tr.samples);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn planar_orbits_stay_planar(x in 0.3f64..0.9, vy in 0.3f64..0.9, t0 in 0.0f64..10.0) {
        let model = system("jupiter_europa_crnbp");
        let s0 = State6::new(x, 0.0, 0.0, 0.0, vy, 0.0);
        if let Ok(tr) = integrate(&model, &s0, t0, t0 + 5.0, &tight(), &[]) {
            prop_assert!(tr.samples.iter().all(|(_, s)| s[2] == 0.0 && s[5] == 0.0));
        }
    }

    #[test]
    fn stm_determinant_is_one(x in 0.3f64..0.9, z in -0.1f64..0.1, vy in 0.3f64..0.9) {
        let model = system("jupiter_europa_crnbp");
        let s0 = State6::new(x, 0.0, z, 0.0, vy, 0.0);
        if let Ok((_, phi)) = stm_propagate(&model, &s0, 0.0, 3.0, &tight()) {
            prop_assert!((phi.determinant() - 1.0).abs() < 1e-6);
        }
    }
}
