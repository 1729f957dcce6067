mod common;

#[test]
fn synodic_integration_matches_direct_summation() {
    let worst = common::oracles::inertial_deviation(3, 10.0);
    assert!(worst < 1e-8, "max position deviation {worst:e}");
}

