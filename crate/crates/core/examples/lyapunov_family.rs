//! Vertical Lyapunov family about Jupiter–Ganymede L3, up to the member with
//! the synodic period 2π.
use std::f64::consts::TAU;

use crnbp::bodies::load_system;
use crnbp::dynamics::LagrangePoint;
use crnbp::orbits::{continue_family, member_with_period, monodromy, newton_correct, vertical_seed, FamilySteps, PeriodicOrbitProblem};
use crnbp::dynamics::lagrange_points;

fn main() -> crnbp::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/systems/jupiter_ganymede_cr3bp.toml");
    let model = load_system(path)?.model;
    let problem = PeriodicOrbitProblem::free(&model)?;
    let (seed, t_lin) = vertical_seed(&model, LagrangePoint::L3, 0.01)?;
    let first = newton_correct(&problem, &seed, t_lin)?;
    println!("seed corrected in {} iterations, T = {:.9}", first.iterations, first.period);

    let steps = FamilySteps {
        members: 400,
        stop_above_period: Some(TAU + 1e-5),
        ..FamilySteps::default()
    };
    let centre = lagrange_points(&model)?[LagrangePoint::L3.index()];
    let family = continue_family(&problem, &first, &steps, &centre)?;
    for m in family.members.iter().step_by(30) {
        println!("  s {:7.4}  T {:.6}  z0' {:+.5}  closure {:.1e}", m.param, m.period, m.state0[5], m.closure_residual);
    }
    let target = member_with_period(&problem, &family.members, TAU)?;
    let mono = monodromy(&problem, &target)?;
    println!(
        "{} members; 2π member z0' {:+.8}, det M - 1 = {:.1e}, unit pair off by {:.1e}",
        family.members.len(),
        target.state0[5],
        mono.determinant - 1.0,
        mono.unit_pair_residual
    );
    Ok(())
}
