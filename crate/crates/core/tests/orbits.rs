mod common;

use std::f64::consts::TAU;

use common::{body, system};
use crnbp::dynamics::{lagrange_points, LagrangePoint, State6};
use crnbp::orbits::{
    archive_record, continue_epsilon, continue_family, member_with_period, monodromy, newton_correct, planar_seed,
    read_archive, vertical_seed, write_archive, EpsilonSteps, FamilySteps, PeriodMode, PeriodicOrbitProblem,
};
use crnbp::propagate::propagate_final;
use crnbp::SystemModel;

fn earth_moon() -> SystemModel {
    SystemModel::cr3bp(0.01215).unwrap()
}

fn l1_lyapunov() -> (PeriodicOrbitProblem, crnbp::orbits::OrbitFamilyMember) {
    let m = earth_moon();
    let problem = PeriodicOrbitProblem::free(&m).unwrap();
    let (s, t) = planar_seed(&m, LagrangePoint::L1, 1e-3).unwrap();
    let member = newton_correct(&problem, &s, t).unwrap();
    (problem, member)
}

#[test]
fn planar_seeds_close() {
    let jg = system("jupiter_ganymede_laplace").with_epsilon(0.0).unwrap();
    for (m, point) in [(jg, LagrangePoint::L3), (earth_moon(), LagrangePoint::L1)] {
        let problem = PeriodicOrbitProblem::free(&m).unwrap();
        let (s, t) = planar_seed(&m, point, 1e-4).unwrap();
        let member = newton_correct(&problem, &s, t).unwrap();
        assert!(member.closure_residual < 1e-10);
        let end = propagate_final(&m, &member.state0, 0.0, member.period, &problem.settings).unwrap();
        assert!((end - member.state0).amax() < 1e-10);
    }
}

#[test]
fn converged_orbit_is_a_fixed_point_of_the_corrector() {
    let (problem, member) = l1_lyapunov();
    let again = newton_correct(&problem, &member.state0, member.period).unwrap();
    assert!(again.iterations <= 2);
    assert!((again.state0 - member.state0).amax() < 1e-12);
    assert!((again.period - member.period).abs() < 1e-12);
}

#[test]
fn far_guess_fails_without_a_member() {
    let m = earth_moon();
    let problem = PeriodicOrbitProblem::free(&m).unwrap().with_tol(1e-12);
    let guess = State6::new(0.3, 0.4, 0.2, 1.5, -0.7, 0.3);
    assert!(newton_correct(&problem, &guess, 2.7).is_err());
}

#[test]
fn free_period_needs_an_autonomous_model() {
    assert!(PeriodicOrbitProblem::free(&system("jupiter_ganymede_laplace")).is_err());
    let p = PeriodicOrbitProblem::fixed(&system("jupiter_ganymede_laplace"), 1).unwrap();
    assert_eq!(p.mode, PeriodMode::Fixed { period: TAU });
}

#[test]
fn cr3bp_monodromy_has_a_unit_pair_and_unit_determinant() {
    let (problem, member) = l1_lyapunov();
    let mono = monodromy(&problem, &member).unwrap();
    assert!(mono.unit_pair_residual < 1e-5, "{:e}", mono.unit_pair_residual);
    assert!((mono.determinant - 1.0).abs() < 1e-6);
    assert!(mono.reciprocal_residual < 1e-5);
}

#[test]
fn one_member_family_is_the_seed() {
    let (problem, member) = l1_lyapunov();
    let steps = FamilySteps {
        members: 1,
        ..FamilySteps::default()
    };
    let l1 = lagrange_points(&problem.model).unwrap()[0];
    let f = continue_family(&problem, &member, &steps, &l1).unwrap();
    assert_eq!(f.members.len(), 1);
    assert_eq!(f.members[0].state0, member.state0);
}

#[test]
fn vertical_family_grows_in_period_and_stays_closed() {
    let m = system("jupiter_ganymede_laplace").with_epsilon(0.0).unwrap();
    let problem = PeriodicOrbitProblem::free(&m).unwrap();
    let (s, t) = vertical_seed(&m, LagrangePoint::L3, 0.01).unwrap();
    let first = newton_correct(&problem, &s, t).unwrap();
    let steps = FamilySteps {
        members: 12,
        step: 0.01,
        max_step: 0.05,
        ..FamilySteps::default()
    };
    let l3 = lagrange_points(&m).unwrap()[2];
    let fam = continue_family(&problem, &first, &steps, &l3).unwrap();
    assert_eq!(fam.members.len(), 12, "{:?}", fam.stopped);
    for w in fam.members.windows(2) {
        assert!(w[1].param > w[0].param);
        assert!(w[1].period > w[0].period);
        // Neighbours converge from the predictor in a handful of iterations.
        assert!(w[1].iterations <= 6);
    }
    for mem in &fam.members {
        let end = propagate_final(&m, &mem.state0, 0.0, mem.period, &problem.settings).unwrap();
        assert!((end - mem.state0).amax() < 1e-10);
        assert!((mem.state0 - l3).fixed_rows::<3>(0).norm() > 0.0);
    }
    // A period strictly inside the computed range is found by bisection.
    let target = 0.5 * (fam.members[3].period + fam.members[4].period);
    let hit = member_with_period(&problem, &fam.members, target).unwrap();
    assert!((hit.period - target).abs() < 1e-12);
    assert!(hit.closure_residual < 1e-10);
}

#[test]
fn epsilon_is_inert_without_perturbers() {
    let m = SystemModel::cr3bp(0.01215).unwrap();
    let problem = PeriodicOrbitProblem::free(&m).unwrap();
    let (s, t) = vertical_seed(&m, LagrangePoint::L3, 0.01).unwrap();
    let free = newton_correct(&problem, &s, t).unwrap();
    let fixed = PeriodicOrbitProblem::fixed_period(&m, free.period).unwrap();
    let branch = continue_epsilon(&fixed, &free, &EpsilonSteps::default()).unwrap();
    assert_eq!(branch.members.last().unwrap().param, 1.0);
    assert!(branch.members.iter().all(|b| b.state0 == free.state0));
}

#[test]
fn epsilon_branch_starts_exactly_at_its_seed() {
    // A weak outer perturber whose phase repeats every 4π.
    let mu2 = 0.01215;
    let m = SystemModel::new(
        vec![
            body("A", 1.0 - mu2, 0.0, 0.0, 0.0),
            body("B", mu2, 1.0, 1.0, 0.0),
            body("C", 1e-6, 3.0, 0.5, 0.4),
        ],
        1.0,
        1.0,
        1.0,
    )
    .unwrap();
    let auto = m.with_epsilon(0.0).unwrap();
    let problem = PeriodicOrbitProblem::free(&auto).unwrap();
    let (s, t) = planar_seed(&auto, LagrangePoint::L1, 1e-3).unwrap();
    let free = newton_correct(&problem, &s, t).unwrap();
    let fixed = PeriodicOrbitProblem::fixed_period(&auto, free.period).unwrap();
    let steps = EpsilonSteps {
        target: 0.0,
        ..EpsilonSteps::default()
    };
    let branch = continue_epsilon(&fixed, &free, &steps).unwrap();
    assert_eq!(branch.members.len(), 1);
    assert_eq!(branch.members[0].state0, free.state0);
    assert_eq!(branch.members[0].param, 0.0);
}

#[test]
fn archive_round_trip() {
    let (problem, member) = l1_lyapunov();
    let rec = archive_record(&problem, &member, None);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.jsonl");
    write_archive(&path, &[rec.clone(), rec.clone()]).unwrap();
    let back = read_archive(&path).unwrap();
    assert_eq!(back.len(), 2);
    assert_eq!(back[0].member, member);
    assert_eq!(back[1].model_hash, problem.model.hash());
}
