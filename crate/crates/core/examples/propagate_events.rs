//! Integrates a Jupiter–Europa orbit with a collision event and an x-axis
//! section, and compares the STM with a finite-difference flow derivative.
use crnbp::bodies::load_system;
use crnbp::propagate::{integrate, propagate_final, stm_propagate, Crossing, EventSpec, IntegratorSettings};
use crnbp::State6;

fn main() -> crnbp::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/systems/jupiter_europa_crnbp.toml");
    let model = load_system(path)?.model;
    let settings = IntegratorSettings::default();
    let s0 = State6::new(0.6, 0.0, 0.01, 0.0, 0.72, 0.0);
    let europa = model.collision_radius()[1];
    let events = [
        EventSpec::collision(1, europa),
        EventSpec::plane_crossing(1, 0.0, Crossing::Rising, false),
    ];
    let tr = integrate(&model, &s0, 0.0, 20.0, &settings, &events)?;
    println!("{} steps, stopped at t = {:.6}", tr.stats.accepted, tr.final_time());
    for ev in &tr.events {
        let what = if ev.index == 0 { "collision" } else { "y = 0 rising" };
        println!("  t {:9.5}  {what:<13} x {:+.6}", ev.t, ev.state[0]);
    }

    let t1 = 2.0;
    let (end, phi) = stm_propagate(&model, &s0, 0.0, t1, &settings)?;
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for c in 0..6 {
        let (mut p, mut m) = (s0, s0);
        p[c] += h;
        m[c] -= h;
        let col = (propagate_final(&model, &p, 0.0, t1, &settings)? - propagate_final(&model, &m, 0.0, t1, &settings)?) / (2.0 * h);
        worst = worst.max((col - phi.column(c)).amax() / phi.amax());
    }
    println!("end {:?}", end.as_slice());
    println!("det STM {:.12}, worst relative FD mismatch {worst:.1e}", phi.determinant());
    Ok(())
}
